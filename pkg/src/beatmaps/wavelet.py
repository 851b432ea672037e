"""Complex Morlet continuous wavelet transform along population time.

Time inside the mother wavelet is measured in samples. Physical frequency
only enters through the scale relation ``nu = Fc / (c * s * dt)``, so a scale
of 4.905 at dt = 20 fs corresponds to 340 cm^-1.

The transform is a direct truncated sum with zero extension beyond the
record. Edge-affected cells are flagged by a cone of influence rather than
padded with invented data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import NonPositiveFrequency, NonPositiveScale, TooShort
from .fourier import native_resolution
from .spectra import PixelCoord, SpectralCube, TimeTrace, snap_pixel
from .units import C_CM_PER_FS

MIN_SAMPLES = 8
# the atom is dropped where its Gaussian envelope is below this fraction of the peak
ENVELOPE_CUTOFF = 1e-8


@dataclass(frozen=True)
class MorletParams:
    fb: float = 2.0
    fc: float = 1.0

    def __post_init__(self):
        if not (self.fb > 0 and self.fc > 0):
            raise ValueError(f"Morlet parameters must be positive, got {self}")

    @property
    def sigma(self) -> float:
        """Standard deviation of the envelope, in units of T."""
        return math.sqrt(self.fb / 2)


#: bandwidth values bracketing the default, for resolution-tradeoff comparisons
FB_EXPLORATION = (0.5, 2.0, 10.0)


@dataclass(frozen=True)
class ScaleSet:
    scales: np.ndarray
    nu: np.ndarray
    dt: float


@dataclass(frozen=True)
class Scalogram:
    coeffs: np.ndarray
    u: np.ndarray
    scale_set: ScaleSet
    coi_mask: np.ndarray
    params: MorletParams = MorletParams()

    @property
    def power(self):
        return np.abs(self.coeffs)


@dataclass(frozen=True)
class TimeResolvedFrequencyMap:
    """|CWT| at one wavenumber, resolved along translation u.

    ``amp`` is indexed ``[u, excitation, detection]``.
    """

    nu0: float
    band: float
    amp: np.ndarray
    u: np.ndarray
    exc_axis: np.ndarray
    det_axis: np.ndarray
    scale: float
    coi_margin: int
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def index_of(self, u_fs: float) -> int:
        return int(np.argmin(np.abs(self.u - u_fs)))


def morlet(T, params: MorletParams = MorletParams()):
    """Complex Morlet mother wavelet,
    ``(pi Fb)^-1/2 * exp(-2 pi i Fc T) * exp(-T^2 / Fb)``."""
    T = np.asarray(T, dtype=float)
    out = (
        (np.pi * params.fb) ** -0.5
        * np.exp(-2j * np.pi * params.fc * T)
        * np.exp(-(T ** 2) / params.fb)
    )
    return complex(out) if out.ndim == 0 else out


def scales_for_frequencies(nu, dt: float, params: MorletParams = MorletParams()) -> ScaleSet:
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if np.any(~(nu > 0)):
        raise NonPositiveFrequency(f"frequencies must be > 0 cm^-1, got {nu}")
    if not dt > 0:
        raise NonPositiveFrequency(f"time step must be > 0 fs, got {dt}")
    scales = params.fc / (C_CM_PER_FS * nu * dt)
    return ScaleSet(scales=scales, nu=nu, dt=float(dt))


def pseudofrequency(s, dt: float, params: MorletParams = MorletParams()):
    """Wavenumber in cm^-1 associated with scale ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise NonPositiveScale(f"scale must be > 0, got {s}")
    out = params.fc / (C_CM_PER_FS * s * dt)
    return float(out) if out.ndim == 0 else out


def cone_of_influence(s: float, dt: float, n_samples: int, params: MorletParams = MorletParams()) -> int:
    """Edge margin in samples: two envelope standard deviations, at least one.

    ``dt`` and ``n_samples`` do not change the margin; the margin may exceed
    half the record, in which case every cell is flagged.
    """
    return max(1, math.ceil(2 * s * params.sigma))


def _coi_rows(scales, dt, n, params):
    mask = np.zeros((len(scales), n), dtype=bool)
    for i, s in enumerate(scales):
        m = cone_of_influence(s, dt, n, params)
        mask[i, :m] = True
        mask[i, max(n - m, 0):] = True
    return mask


def atom_matrix(n: int, scale: float, params: MorletParams = MorletParams()) -> np.ndarray:
    """Matrix ``W[u, n] = conj(s^-1/2 psi((n - u) / s))`` with envelope truncation.

    ``W @ y`` gives the CWT row of ``y`` at this scale.
    """
    idx = np.arange(n)
    x = (idx[None, :] - idx[:, None]) / scale
    w = np.conj(morlet(x, params)) / math.sqrt(scale)
    w[np.exp(-(x ** 2) / params.fb) < ENVELOPE_CUTOFF] = 0.0
    return w


def cwt(trace: TimeTrace, scale_set: ScaleSet, params: MorletParams = MorletParams()) -> Scalogram:
    n = len(trace)
    if n < MIN_SAMPLES:
        raise TooShort(f"need at least {MIN_SAMPLES} samples, got {n}")
    scales = np.asarray(scale_set.scales, dtype=float)
    if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
        raise NonPositiveScale("scales must be finite and positive")
    coeffs = np.empty((scales.size, n), dtype=complex)
    for i, s in enumerate(scales):
        coeffs[i] = atom_matrix(n, s, params) @ trace.y
    return Scalogram(
        coeffs=coeffs,
        u=trace.t.copy(),
        scale_set=scale_set,
        coi_mask=_coi_rows(scales, trace.dt, n, params),
        params=params,
    )


def scalogram(trace: TimeTrace, nu, params: MorletParams = MorletParams()) -> Scalogram:
    """CWT of ``trace`` at the scales mapped from the wavenumbers ``nu``."""
    return cwt(trace, scales_for_frequencies(nu, trace.dt, params), params)


def time_resolved_frequency_map(cube: SpectralCube, nu0: float,
                                params: MorletParams = MorletParams()) -> TimeResolvedFrequencyMap:
    nt = cube.shape[0]
    if nt < MIN_SAMPLES:
        raise TooShort(f"need at least {MIN_SAMPLES} samples, got {nt}")
    scale = float(scales_for_frequencies([nu0], cube.dt, params).scales[0])
    w = atom_matrix(nt, scale, params)
    amp = np.abs(np.tensordot(w, cube.values, axes=(1, 0)))
    return TimeResolvedFrequencyMap(
        nu0=float(nu0),
        band=0.5 * native_resolution(nt, cube.dt),
        amp=amp,
        u=cube.t_axis.copy(),
        exc_axis=cube.exc_axis,
        det_axis=cube.det_axis,
        scale=scale,
        coi_margin=cone_of_influence(scale, cube.dt, nt, params),
        meta={"quantity": "abs(CWT)", "fb": params.fb, "fc": params.fc},
    )


def wavelet_trace(cube: SpectralCube, pix: PixelCoord, nu0: float,
                  params: MorletParams = MorletParams()) -> TimeTrace:
    """|CWT| time series at the pixel nearest ``pix`` and the scale for ``nu0``.

    The returned trace carries ``nu0``, ``scale`` and ``coi_margin`` in its
    metadata.
    """
    i, j = snap_pixel(cube, pix)
    nt = cube.shape[0]
    if nt < MIN_SAMPLES:
        raise TooShort(f"need at least {MIN_SAMPLES} samples, got {nt}")
    scale = float(scales_for_frequencies([nu0], cube.dt, params).scales[0])
    y = np.abs(atom_matrix(nt, scale, params) @ cube.values[:, i, j])
    return TimeTrace(
        cube.t_axis,
        y,
        PixelCoord(float(cube.exc_axis[i]), float(cube.det_axis[j])),
        {
            "nu0": float(nu0),
            "scale": scale,
            "coi_margin": cone_of_influence(scale, cube.dt, nt, params),
            "fb": params.fb,
            "fc": params.fc,
        },
    )


def trace_envelope(trace: TimeTrace, nu0: float, params: MorletParams = MorletParams()) -> TimeTrace:
    """|CWT| of a single trace at ``nu0``, tagged like :func:`wavelet_trace`."""
    n = len(trace)
    if n < MIN_SAMPLES:
        raise TooShort(f"need at least {MIN_SAMPLES} samples, got {n}")
    scale = float(scales_for_frequencies([nu0], trace.dt, params).scales[0])
    y = np.abs(atom_matrix(n, scale, params) @ trace.y)
    return TimeTrace(trace.t, y, trace.origin, {
        "nu0": float(nu0),
        "scale": scale,
        "coi_margin": cone_of_influence(scale, trace.dt, n, params),
        "fb": params.fb,
        "fc": params.fc,
    })
