"""``key=value`` simulation configs.

One setting per line; blank lines and lines starting with ``#`` are
ignored. Recognized keys::

    omega_eg_cm    = 14705.88
    modes          = 120:0.1, 190:0.1
    lambda_cm      = 50
    Lambda_inv_fs  = 0.01
    temperature_K  = 80
    damping_cm     = 0
    t1_fs          = 0:400:2
    t2_fs          = 0:1000:20
    t3_fs          = 0:400:2
    pad_t1         = 2
    pad_t3         = 2
    excitation_nm  = 650:700:1
    detection_nm   = 650:700:1
    label          = free text

``modes`` lists ``omega_cm:S`` pairs. Time grids are ``start:stop:step``
with the stop included; wavelength axes take the same form or a comma list.
Missing keys take the simulator defaults.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ConfigError, MissingFile
from .lineshape import BrownianBath, LineShapeModel, SimulationGrids, VibrationalMode

_FLOAT_KEYS = ("omega_eg_cm", "lambda_cm", "Lambda_inv_fs", "temperature_K", "damping_cm")
_INT_KEYS = ("pad_t1", "pad_t3")
_RANGE_KEYS = ("t1_fs", "t2_fs", "t3_fs")
_AXIS_KEYS = ("excitation_nm", "detection_nm")
KNOWN_KEYS = frozenset(_FLOAT_KEYS + _INT_KEYS + _RANGE_KEYS + _AXIS_KEYS + ("modes", "label"))


def _float(key, text):
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return x


def parse_range(key: str, text: str) -> np.ndarray:
    """``start:stop:step`` (stop included) as a float array."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected start:stop:step, got {text!r}")
    start, stop, step = (_float(key, p) for p in parts)
    if not step > 0 or stop < start:
        raise ConfigError(f"{key}: need step > 0 and stop >= start, got {text!r}")
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def _axis(key, text):
    if ":" in text:
        return parse_range(key, text)
    return np.array([_float(key, p) for p in text.split(",") if p.strip()])


def parse_modes(text: str) -> tuple[VibrationalMode, ...]:
    modes = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if item.count(":") != 1:
            raise ConfigError(f"modes: expected omega:S, got {item!r}")
        w, s = item.split(":")
        try:
            modes.append(VibrationalMode(_float("modes", w), _float("modes", s)))
        except ValueError as exc:
            raise ConfigError(f"modes: {exc}") from None
    return tuple(modes)


def parse_config_text(text: str) -> dict:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def build_simulation(entries: dict) -> tuple[LineShapeModel, SimulationGrids, str]:
    """Model, grids and label from parsed config entries."""
    f = {k: _float(k, entries[k]) for k in _FLOAT_KEYS if k in entries}
    bath_kw = {}
    if "lambda_cm" in f:
        bath_kw["lambda_cm"] = f["lambda_cm"]
    if "Lambda_inv_fs" in f:
        bath_kw["Lambda_inv_fs"] = f["Lambda_inv_fs"]
    model_kw = {k: f[k] for k in ("omega_eg_cm", "temperature_K", "damping_cm") if k in f}
    try:
        model = LineShapeModel(
            modes=parse_modes(entries.get("modes", "")),
            bath=BrownianBath(**bath_kw),
            **model_kw,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    grid_kw = {}
    for key, name in (("t1_fs", "t1"), ("t2_fs", "t2"), ("t3_fs", "t3")):
        if key in entries:
            grid_kw[name] = parse_range(key, entries[key])
    for key in _INT_KEYS:
        if key in entries:
            try:
                grid_kw[key] = int(entries[key])
            except ValueError:
                raise ConfigError(f"{key}: not an integer: {entries[key]!r}") from None
    for key, name in (("excitation_nm", "exc_nm"), ("detection_nm", "det_nm")):
        if key in entries:
            grid_kw[name] = _axis(key, entries[key])
    try:
        grids = SimulationGrids(**grid_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return model, grids, entries.get("label", "")


def load_config(path) -> tuple[LineShapeModel, SimulationGrids, str]:
    if not os.path.isfile(path):
        raise MissingFile(f"no config file at {path}")
    with open(path, encoding="utf-8") as fh:
        return build_simulation(parse_config_text(fh.read()))
