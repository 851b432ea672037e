"""Data model for population-time resolved 2D spectra.

A :class:`SpectralCube` holds real rephasing 2D spectra stacked along the
population time T, indexed ``values[T, excitation, detection]``. Cubes are
stored on disk as a directory archive::

    manifest.txt   key=value lines (UTF-8, LF)
    cube.f64le     little-endian float64, row-major, T slowest

Traces along T are :class:`TimeTrace` objects. All types are immutable; the
arrays they hold are flagged read-only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .errors import (
    EmptyAxis,
    EmptySelection,
    IoFailure,
    MalformedManifest,
    MissingFile,
    NonFiniteValue,
    NonUniformTimeAxis,
    OutOfRange,
    SizeMismatch,
    Underdetermined,
)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.txt"
PAYLOAD_NAME = "cube.f64le"
MANIFEST_KEYS = (
    "format_version",
    "n_population",
    "n_excitation",
    "n_detection",
    "dt_fs",
    "t0_fs",
    "excitation_nm",
    "detection_nm",
    "label",
)

# relative tolerance on the population-time step
_STEP_RTOL = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _uniform_axis(t: np.ndarray, what: str = "time axis") -> np.ndarray:
    """Validate a uniform, strictly increasing axis and return it canonicalized
    as ``t0 + dt * arange(n)``."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1:
        raise NonUniformTimeAxis(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(t)):
        raise NonFiniteValue(f"{what} contains non-finite values")
    if t.size < 2:
        return t.copy()
    dt = (t[-1] - t[0]) / (t.size - 1)
    steps = np.diff(t)
    if not dt > 0 or np.any(steps <= 0):
        raise NonUniformTimeAxis(f"{what} must be strictly increasing")
    if np.max(np.abs(steps - dt)) > _STEP_RTOL * dt:
        raise NonUniformTimeAxis(f"{what} step is not constant: {steps.min()}..{steps.max()}")
    return t[0] + dt * np.arange(t.size)


@dataclass(frozen=True)
class PixelCoord:
    """A point in the 2D spectral plane, (excitation, detection) in nm."""

    exc_nm: float
    det_nm: float

    def __iter__(self):
        yield self.exc_nm
        yield self.det_nm


@dataclass(frozen=True)
class TimeTrace:
    """A uniformly sampled series along population time.

    ``meta`` carries provenance such as the analysis wavenumber or wavelet
    scale for traces derived from a scalogram.
    """

    t: np.ndarray
    y: np.ndarray
    origin: Optional[PixelCoord] = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        t = _uniform_axis(self.t)
        y = np.asarray(self.y)
        if not np.iscomplexobj(y):
            y = y.astype(float)
        if y.ndim != 1 or y.shape != t.shape:
            raise SizeMismatch(f"trace lengths differ: t={t.shape}, y={y.shape}")
        if not np.all(np.isfinite(y)):
            raise NonFiniteValue("trace contains non-finite values")
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def __len__(self):
        return self.t.size

    @property
    def dt(self) -> float:
        if self.t.size < 2:
            raise NonUniformTimeAxis("a single-sample trace has no step")
        return float(self.t[1] - self.t[0])

    def replace(self, y=None, **meta) -> "TimeTrace":
        """Same time axis and origin, new values and/or extra metadata."""
        merged = dict(self.meta)
        merged.update(meta)
        return TimeTrace(self.t, self.y if y is None else y, self.origin, merged)


@dataclass(frozen=True)
class SpectralCube:
    values: np.ndarray
    t_axis: np.ndarray
    exc_axis: np.ndarray
    det_axis: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        exc = np.asarray(self.exc_axis, dtype=float)
        det = np.asarray(self.det_axis, dtype=float)
        t = np.asarray(self.t_axis, dtype=float)
        if 0 in (t.size, exc.size, det.size):
            raise EmptyAxis("cube axes must be non-empty")
        if values.shape != (t.size, exc.size, det.size):
            raise SizeMismatch(
                f"values shape {values.shape} does not match axes "
                f"({t.size}, {exc.size}, {det.size})"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("cube contains non-finite values")
        for name, ax in (("excitation", exc), ("detection", det)):
            if not np.all(np.isfinite(ax)):
                raise NonFiniteValue(f"{name} axis contains non-finite values")
            if ax.size > 1 and np.any(np.diff(ax) <= 0):
                raise MalformedManifest(f"{name} axis must be strictly ascending")
        if "\n" in self.label:
            raise MalformedManifest("label must be a single line")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "t_axis", _frozen(_uniform_axis(t)))
        object.__setattr__(self, "exc_axis", _frozen(exc))
        object.__setattr__(self, "det_axis", _frozen(det))

    @property
    def shape(self):
        return self.values.shape

    @property
    def dt(self) -> float:
        if self.t_axis.size < 2:
            return 0.0
        return float(self.t_axis[1] - self.t_axis[0])

    def with_values(self, values, label=None) -> "SpectralCube":
        return SpectralCube(
            values, self.t_axis, self.exc_axis, self.det_axis,
            self.label if label is None else label,
        )


# --- archive -------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _manifest_text(cube: SpectralCube) -> str:
    nt, ne, nd = cube.shape
    lines = [
        f"format_version={FORMAT_VERSION}",
        f"n_population={nt}",
        f"n_excitation={ne}",
        f"n_detection={nd}",
        f"dt_fs={_fmt(cube.dt)}",
        f"t0_fs={_fmt(cube.t_axis[0])}",
        "excitation_nm=" + ",".join(_fmt(v) for v in cube.exc_axis),
        "detection_nm=" + ",".join(_fmt(v) for v in cube.det_axis),
        f"label={cube.label}",
    ]
    return "\n".join(lines) + "\n"


def save_archive(cube: SpectralCube, path) -> None:
    """Write ``cube`` as an archive directory at ``path``.

    Output bytes depend only on the cube, so saving twice gives identical
    files.
    """
    if 0 in cube.values.shape:
        raise EmptyAxis("refusing to save an empty cube")
    if not np.all(np.isfinite(cube.values)):
        raise NonFiniteValue("refusing to save non-finite values")
    payload = np.ascontiguousarray(cube.values, dtype="<f8").tobytes(order="C")
    try:
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, MANIFEST_NAME), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_manifest_text(cube))
        with open(os.path.join(path, PAYLOAD_NAME), "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write archive {path}: {exc}") from exc


def _parse_manifest(text: str) -> dict:
    entries = {}
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise MalformedManifest(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in MANIFEST_KEYS:
            raise MalformedManifest(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise MalformedManifest(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    missing = [k for k in MANIFEST_KEYS if k not in entries]
    if missing:
        raise MalformedManifest(f"missing keys: {', '.join(missing)}")
    return entries


def _parse_int(entries, key):
    try:
        n = int(entries[key])
    except ValueError:
        raise MalformedManifest(f"{key} is not an integer: {entries[key]!r}") from None
    if n < 1:
        raise MalformedManifest(f"{key} must be >= 1")
    return n


def _parse_float(entries, key):
    try:
        return float(entries[key])
    except ValueError:
        raise MalformedManifest(f"{key} is not a number: {entries[key]!r}") from None


def _parse_list(entries, key, n):
    try:
        vals = np.array([float(v) for v in entries[key].split(",")], dtype=float)
    except ValueError:
        raise MalformedManifest(f"{key} has a non-numeric entry") from None
    if vals.size != n:
        raise MalformedManifest(f"{key} lists {vals.size} values, expected {n}")
    return vals


def load_archive(path) -> SpectralCube:
    """Read an archive directory written by :func:`save_archive`."""
    mpath = os.path.join(path, MANIFEST_NAME)
    ppath = os.path.join(path, PAYLOAD_NAME)
    for p in (mpath, ppath):
        if not os.path.isfile(p):
            raise MissingFile(f"archive file not found: {p}")
    try:
        with open(mpath, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
        with open(ppath, "rb") as fh:
            payload = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailure(f"cannot read archive {path}: {exc}") from exc

    entries = _parse_manifest(text)
    if entries["format_version"].strip() != str(FORMAT_VERSION):
        raise MalformedManifest(f"unsupported format_version {entries['format_version']!r}")
    nt = _parse_int(entries, "n_population")
    ne = _parse_int(entries, "n_excitation")
    nd = _parse_int(entries, "n_detection")
    dt = _parse_float(entries, "dt_fs")
    t0 = _parse_float(entries, "t0_fs")
    exc = _parse_list(entries, "excitation_nm", ne)
    det = _parse_list(entries, "detection_nm", nd)

    expected = 8 * nt * ne * nd
    if len(payload) != expected:
        raise SizeMismatch(f"payload has {len(payload)} bytes, manifest implies {expected}")
    if nt > 1 and not dt > 0:
        raise NonUniformTimeAxis(f"dt_fs must be positive, got {dt}")
    t_axis = t0 + dt * np.arange(nt)
    values = np.frombuffer(payload, dtype="<f8").reshape(nt, ne, nd).astype(float)
    return SpectralCube(values, t_axis, exc, det, entries["label"])


# --- selection -----------------------------------------------------------

def _snap(axis: np.ndarray, x: float, what: str) -> int:
    half = 0.5 * (axis[1] - axis[0] if axis.size > 1 else 1.0)
    half_hi = 0.5 * (axis[-1] - axis[-2] if axis.size > 1 else 1.0)
    if x < axis[0] - half or x > axis[-1] + half_hi:
        raise OutOfRange(f"{what} {x} nm outside axis [{axis[0]}, {axis[-1]}]")
    # argmin returns the first minimum: ties go to the lower index
    return int(np.argmin(np.abs(axis - x)))


def snap_pixel(cube: SpectralCube, p: PixelCoord) -> tuple[int, int]:
    """Grid indices of the node nearest to ``p``."""
    return (_snap(cube.exc_axis, p.exc_nm, "excitation"),
            _snap(cube.det_axis, p.det_nm, "detection"))


def extract_trace(cube: SpectralCube, p: PixelCoord) -> TimeTrace:
    i, j = snap_pixel(cube, p)
    snapped = PixelCoord(float(cube.exc_axis[i]), float(cube.det_axis[j]))
    return TimeTrace(cube.t_axis, cube.values[:, i, j], snapped)


def crop_population(cube: SpectralCube, t_min: float, t_max: float) -> SpectralCube:
    """Keep the samples with ``t_min <= T <= t_max``."""
    if not t_min < t_max:
        raise EmptySelection(f"t_min ({t_min}) must be below t_max ({t_max})")
    # tolerance absorbs float noise in the canonical axis
    eps = 1e-9 * max(1.0, abs(cube.dt))
    keep = (cube.t_axis >= t_min - eps) & (cube.t_axis <= t_max + eps)
    if not np.any(keep):
        raise EmptySelection(f"no population times in [{t_min}, {t_max}] fs")
    idx = np.flatnonzero(keep)
    sl = slice(idx[0], idx[-1] + 1)
    return SpectralCube(cube.values[sl], cube.t_axis[sl], cube.exc_axis, cube.det_axis, cube.label)


# --- detrending ----------------------------------------------------------

def _poly_design(t: np.ndarray, order: int) -> np.ndarray:
    # centred and scaled abscissa keeps the Vandermonde matrix well conditioned
    span = t[-1] - t[0] if t.size > 1 else 1.0
    x = (t - 0.5 * (t[0] + t[-1])) / (0.5 * span if span else 1.0)
    return np.vander(x, order + 1, increasing=True)


def _check_order(order: int, n: int) -> None:
    if order < 0:
        raise Underdetermined(f"polynomial order must be >= 0, got {order}")
    if order + 1 >= n:
        raise Underdetermined(f"order {order} needs more than {order + 1} samples, got {n}")


def detrend(trace: TimeTrace, order: int = 3) -> TimeTrace:
    """Subtract the least-squares polynomial of degree ``order``."""
    _check_order(order, len(trace))
    A = _poly_design(trace.t, order)
    coef, *_ = np.linalg.lstsq(A, trace.y, rcond=None)
    return trace.replace(trace.y - A @ coef)


def detrend_cube(cube: SpectralCube, order: int = 3) -> SpectralCube:
    """Per-pixel polynomial detrend of every trace in the cube."""
    nt, ne, nd = cube.shape
    _check_order(order, nt)
    A = _poly_design(cube.t_axis, order)
    Y = cube.values.reshape(nt, ne * nd)
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    return cube.with_values((Y - A @ coef).reshape(nt, ne, nd))


def trace_to_cube(trace: TimeTrace, exc_axis, det_axis, pixel: PixelCoord, label="") -> SpectralCube:
    """Zero cube on the given axes with ``trace`` planted at the pixel nearest ``pixel``."""
    exc = np.asarray(exc_axis, dtype=float)
    det = np.asarray(det_axis, dtype=float)
    values = np.zeros((len(trace), exc.size, det.size))
    i = _snap(exc, pixel.exc_nm, "excitation")
    j = _snap(det, pixel.det_nm, "detection")
    values[:, i, j] = np.real(trace.y)
    return SpectralCube(values, trace.t, exc, det, label)
