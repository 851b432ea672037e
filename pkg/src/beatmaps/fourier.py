"""Fourier analysis along population time.

Amplitude spectra of single traces, static 2D frequency maps, peak picking,
and Gaussian band-pass filtering (the windowed Fourier transform). Spectra
are reported against wavenumber in cm^-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import TooShort
from .spectra import SpectralCube, TimeTrace
from .units import C_CM_PER_FS

MIN_SAMPLES = 4


@dataclass(frozen=True)
class AmplitudeSpectrum:
    nu: np.ndarray
    amp: np.ndarray
    phase: np.ndarray
    dnu: float
    native_dnu: float = float("nan")

    def __len__(self):
        return self.nu.size


@dataclass(frozen=True)
class FrequencyMap:
    """Amplitude at one wavenumber over the (excitation, detection) plane.

    ``band`` is the +/- half resolution of the source record in cm^-1. It
    documents the resolution and is never used for averaging.
    """

    nu0: float
    band: float
    amp: np.ndarray
    exc_axis: np.ndarray
    det_axis: np.ndarray
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))


@dataclass(frozen=True)
class GaussianWindow:
    center: float
    fwhm: float

    def __post_init__(self):
        if not (self.center > 0 and self.fwhm > 0):
            raise ValueError(f"window needs center > 0 and fwhm > 0, got {self}")

    def __call__(self, nu):
        nu = np.abs(np.asarray(nu, dtype=float))
        return np.exp(-4 * np.log(2) * (nu - self.center) ** 2 / self.fwhm ** 2)


def native_resolution(n_samples: int, dt: float) -> float:
    """Inverse record span 1/(c*(N-1)*dt) in cm^-1."""
    return 1.0 / (C_CM_PER_FS * (n_samples - 1) * dt)


def bin_spacing(n_pad: int, dt: float) -> float:
    return 1.0 / (C_CM_PER_FS * n_pad * dt)


def _check_length(n):
    if n < MIN_SAMPLES:
        raise TooShort(f"need at least {MIN_SAMPLES} samples, got {n}")


def ft_spectrum(trace: TimeTrace, pad_factor: int = 4, apodize: bool = False) -> AmplitudeSpectrum:
    """One-sided amplitude spectrum of a trace, zero padded to ``pad_factor * N``.

    ``amp[k] = |sum_n y_n exp(-2 pi i k n / N_pad)|`` at ``nu[k] = k / (c N_pad dt)``.
    A Hann taper is applied first when ``apodize`` is set.
    """
    n = len(trace)
    _check_length(n)
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    y = trace.y * np.hanning(n) if apodize else trace.y
    n_pad = pad_factor * n
    spec = np.fft.fft(y, n_pad)[: n_pad // 2 + 1]
    dnu = bin_spacing(n_pad, trace.dt)
    return AmplitudeSpectrum(
        nu=np.arange(spec.size) * dnu,
        amp=np.abs(spec),
        phase=np.angle(spec),
        dnu=dnu,
        native_dnu=native_resolution(n, trace.dt),
    )


def frequency_map(cube: SpectralCube, nu0: float, pad_factor: int = 4) -> FrequencyMap:
    """|FT| along T at the padded bin nearest ``nu0``, for every pixel."""
    nt = cube.shape[0]
    _check_length(nt)
    n_pad = pad_factor * nt
    dnu = bin_spacing(n_pad, cube.dt)
    k = int(np.rint(nu0 / dnu))
    if not 0 <= k <= n_pad // 2:
        raise ValueError(f"{nu0} cm^-1 is above the Nyquist wavenumber {dnu * (n_pad // 2)}")
    # a single DFT bin; cheaper than a full FFT for each pixel
    phasor = np.exp(-2j * np.pi * k * np.arange(nt) / n_pad)
    amp = np.abs(np.tensordot(phasor, cube.values, axes=(0, 0)))
    return FrequencyMap(
        nu0=float(nu0),
        band=0.5 * native_resolution(nt, cube.dt),
        amp=amp,
        exc_axis=cube.exc_axis,
        det_axis=cube.det_axis,
        meta={"quantity": "abs(FT)", "bin_nu": k * dnu, "pad_factor": pad_factor},
    )


def kernel_margin(window: GaussianWindow, dt: float) -> int:
    """Edge zone of the band-pass, in samples: two standard deviations of the
    Gaussian time kernel, at least one sample."""
    sigma_nu = window.fwhm / (2 * np.sqrt(2 * np.log(2)))
    sigma_t = 1.0 / (2 * np.pi * C_CM_PER_FS * sigma_nu)
    return max(1, int(np.ceil(2 * sigma_t / dt)))


def bandpass_filter(trace: TimeTrace, window: GaussianWindow, pad_factor: int = 4,
                    normalize: bool = True) -> TimeTrace:
    """Gaussian band-pass along T, returned as a complex analytic signal.

    The window weights both frequency branches by ``G(|nu|)``; negative
    frequencies are then dropped and positive ones doubled, so ``abs()`` of the
    result is the envelope and its real part is the filtered trace.

    With ``normalize`` the output is divided by the same low-pass kernel
    applied to the record indicator (normalized convolution). This undoes the
    droop caused by the kernel running off the ends of the record, so a tone
    at the window centre keeps a flat envelope. Leakage from neighbouring
    frequencies is still strongest within ``kernel_margin`` of either end;
    that margin is stored in the result's ``coi_margin`` metadata.
    """
    n = len(trace)
    _check_length(n)
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    n_pad = pad_factor * n
    spec = np.fft.fft(np.real(trace.y), n_pad)
    nu = np.fft.fftfreq(n_pad, d=trace.dt) / C_CM_PER_FS
    h = np.zeros(n_pad)
    h[0] = 1.0
    if n_pad % 2 == 0:
        h[n_pad // 2] = 1.0
        h[1 : n_pad // 2] = 2.0
    else:
        h[1 : (n_pad + 1) // 2] = 2.0
    out = np.fft.ifft(spec * window(nu) * h)[:n]
    if normalize:
        baseband = np.exp(-4 * np.log(2) * nu ** 2 / window.fwhm ** 2)
        weight = np.real(np.fft.ifft(np.fft.fft(np.ones(n), n_pad) * baseband))[:n]
        out = out / weight
    return trace.replace(
        out,
        window_center=window.center,
        window_fwhm=window.fwhm,
        coi_margin=kernel_margin(window, trace.dt),
    )


def spectral_peaks(spec: AmplitudeSpectrum, min_rel_height: float = 0.1) -> list[tuple[float, float]]:
    """Local maxima above ``min_rel_height * max(amp)``.

    Each peak is refined with a parabola through the log amplitudes of the
    three bins around it. Endpoints are never reported.
    """
    if not 0 < min_rel_height <= 1:
        raise ValueError("min_rel_height must lie in (0, 1]")
    a = np.asarray(spec.amp, dtype=float)
    if a.size < 3 or not np.max(a) > 0:
        return []
    floor = min_rel_height * np.max(a)
    inner = np.arange(1, a.size - 1)
    is_peak = (a[inner] > a[inner - 1]) & (a[inner] > a[inner + 1]) & (a[inner] >= floor)
    step = spec.nu[1] - spec.nu[0]
    peaks = []
    for k in inner[is_peak]:
        left, mid, right = a[k - 1], a[k], a[k + 1]
        if left > 0 and right > 0:
            left, mid, right = np.log([left, mid, right])
            delta = 0.5 * (left - right) / (left - 2 * mid + right)
            height = np.exp(mid - 0.25 * (left - right) * delta)
        else:
            delta = 0.5 * (left - right) / (left - 2 * mid + right)
            height = mid - 0.25 * (left - right) * delta
        peaks.append((float(spec.nu[k] + delta * step), float(height)))
    return peaks


def map_maxima(m: FrequencyMap, min_rel_height: float = 0.05, border: bool = False) -> list[tuple[float, float, float]]:
    """Local maxima of a map over its 3x3 neighbourhoods.

    Returns ``(exc_nm, det_nm, amp)`` for each maximum at or above
    ``min_rel_height * max(amp)``, strongest first. Cells on the map border
    are skipped unless ``border`` is set, since their neighbourhood is cut.
    """
    if not 0 < min_rel_height <= 1:
        raise ValueError("min_rel_height must lie in (0, 1]")
    a = np.asarray(m.amp, dtype=float)
    if a.size == 0 or not np.max(a) > 0:
        return []
    is_max = (a == maximum_filter(a, size=3, mode="constant", cval=-np.inf)) & (a >= min_rel_height * a.max())
    if not border:
        is_max[[0, -1], :] = False
        is_max[:, [0, -1]] = False
    idx = np.argwhere(is_max)
    out = [(float(m.exc_axis[i]), float(m.det_axis[j]), float(a[i, j])) for i, j in idx]
    return sorted(out, key=lambda x: -x[2])
