"""Synthetic 2D spectra from the second-cumulant line-shape formalism.

The model is a single electronic transition whose excited state is displaced
along a set of undamped vibrational modes, plus an overdamped Brownian
oscillator for the residual environment. Both contribute to the line-shape
function g(t); the rephasing response keeps ground-state bleach and
stimulated emission in the impulsive limit.

Internally times are fs and angular frequencies rad/fs. Parameters are given
in cm^-1 and converted with ``omega = 2 pi c nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import UnresolvedGrid
from .fourier import AmplitudeSpectrum
from .spectra import SpectralCube, _uniform_axis
from .units import C_CM_PER_FS, KB_CM_PER_K, nm_to_wavenumber

TWO_PI_C = 2 * math.pi * C_CM_PER_FS
FIVE_MODES_CM = (120.0, 190.0, 265.0, 340.0, 440.0)
# a full response endpoint should be damped below this for a clean transform
ENDPOINT_DAMPING = 1e-3


@dataclass(frozen=True)
class VibrationalMode:
    omega_cm: float
    huang_rhys: float

    def __post_init__(self):
        if not self.omega_cm > 0 or not self.huang_rhys >= 0:
            raise ValueError(f"mode needs omega > 0 and S >= 0, got {self}")

    @property
    def reorganization_cm(self) -> float:
        return self.huang_rhys * self.omega_cm


@dataclass(frozen=True)
class BrownianBath:
    lambda_cm: float = 50.0
    # inverse correlation time; 0.01 fs^-1 is a 100 fs bath memory
    Lambda_inv_fs: float = 0.01

    def __post_init__(self):
        if not self.lambda_cm >= 0 or not self.Lambda_inv_fs > 0:
            raise ValueError(f"bath needs lambda >= 0 and Lambda > 0, got {self}")


@dataclass(frozen=True)
class LineShapeModel:
    omega_eg_cm: float = 1e7 / 680.0
    modes: tuple = ()
    bath: BrownianBath = BrownianBath()
    temperature_K: float = 80.0
    # extra homogeneous dephasing (Lorentzian half width), for bath-free tests
    damping_cm: float = 0.0

    def __post_init__(self):
        if not self.omega_eg_cm > 0 or not self.temperature_K > 0:
            raise ValueError("need omega_eg > 0 and temperature > 0")
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def reorganization_cm(self) -> float:
        return self.bath.lambda_cm + sum(m.reorganization_cm for m in self.modes)


def five_mode_model(huang_rhys: float = 0.1, **kw) -> LineShapeModel:
    """Five modes at 120/190/265/340/440 cm^-1, lambda = 50 cm^-1, 80 K."""
    modes = tuple(VibrationalMode(w, huang_rhys) for w in FIVE_MODES_CM)
    kw.setdefault("bath", BrownianBath(50.0, 0.01))
    kw.setdefault("temperature_K", 80.0)
    return LineShapeModel(modes=modes, **kw)


# --- line-shape functions ------------------------------------------------

def g_vibrational(t, mode: VibrationalMode, temperature_K: float):
    """Undamped displaced oscillator,
    ``S [coth(w / 2kT)(1 - cos wt) + i (sin wt - wt)]``."""
    t = np.asarray(t, dtype=float)
    w = TWO_PI_C * mode.omega_cm
    coth = 1.0 / math.tanh(mode.omega_cm / (2 * KB_CM_PER_K * temperature_K))
    wt = w * t
    return mode.huang_rhys * (coth * (1 - np.cos(wt)) + 1j * (np.sin(wt) - wt))


def g_brownian(t, bath: BrownianBath, temperature_K: float):
    """Overdamped Brownian oscillator in the high-temperature limit."""
    t = np.asarray(t, dtype=float)
    lam = TWO_PI_C * bath.lambda_cm
    theta = TWO_PI_C * KB_CM_PER_K * temperature_K
    L = bath.Lambda_inv_fs
    x = L * t
    # e^-x + x - 1 loses all precision for tiny x; switch to its series
    f = np.where(x < 1e-4, x * x / 2 - x ** 3 / 6 + x ** 4 / 24, np.expm1(-x) + x)
    return (2 * lam * theta / L ** 2) * f - 1j * (lam / L) * f


def g_total(t, model: LineShapeModel):
    t = np.asarray(t, dtype=float)
    g = g_brownian(t, model.bath, model.temperature_K)
    for mode in model.modes:
        g = g + g_vibrational(t, mode, model.temperature_K)
    if model.damping_cm:
        g = g + TWO_PI_C * model.damping_cm * t
    return g


def correlation_function(t, model: LineShapeModel):
    """Real part of the energy-gap correlation function, ``d^2 Re g / dt^2``.

    Used by the classical-limit cumulant check.
    """
    t = np.asarray(t, dtype=float)
    theta = TWO_PI_C * KB_CM_PER_K * model.temperature_K
    c = 2 * TWO_PI_C * model.bath.lambda_cm * theta * np.exp(-model.bath.Lambda_inv_fs * np.abs(t))
    for m in model.modes:
        w = TWO_PI_C * m.omega_cm
        coth = 1.0 / math.tanh(m.omega_cm / (2 * KB_CM_PER_K * model.temperature_K))
        c = c + m.huang_rhys * coth * w ** 2 * np.cos(w * t)
    return c


# --- third-order response ------------------------------------------------

def pathway_factors(t1, t2, t3, g):
    """Stimulated-emission and bleach factors of the rephasing response.

    ``g`` maps an array of times to line-shape values. Arguments broadcast.
    """
    t1, t2, t3 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t1, t2, t3)))
    g1, g2, g3 = g(t1), g(t2), g(t3)
    g12, g23, g123 = g(t1 + t2), g(t2 + t3), g(t1 + t2 + t3)
    c = np.conj
    f_se = np.exp(-c(g1) + g2 - c(g3) - c(g12) - g23 + c(g123))
    f_gsb = np.exp(-c(g1) + c(g2) - g3 - c(g12) - c(g23) + c(g123))
    return f_se, f_gsb


def rephasing_response(t1, t2, t3, model: LineShapeModel, rotating: bool = False):
    """GSB + SE rephasing response ``R(t1, t2, t3)``.

    With ``rotating`` the electronic carrier ``exp(i w_eg (t1 - t3))`` is left
    out, which is what the cube synthesis samples.
    """
    f_se, f_gsb = pathway_factors(t1, t2, t3, lambda t: g_total(t, model))
    out = f_se + f_gsb
    if not rotating:
        w = TWO_PI_C * model.omega_eg_cm
        out = out * np.exp(1j * w * (np.asarray(t1) - np.asarray(t3)))
    return out


# --- linear spectra ------------------------------------------------------

def _spectrum(model, nu, sign, shift_cm, dt, t_max):
    nu = np.asarray(nu, dtype=float)
    detuning = nu - model.omega_eg_cm + shift_cm
    nu_modes = max((m.omega_cm for m in model.modes), default=0.0)
    bound = 1.0 / (10 * C_CM_PER_FS * max(nu_modes, np.max(np.abs(detuning)), 1.0))
    if dt is None:
        dt = bound
    elif dt > bound * (1 + 1e-12):
        raise UnresolvedGrid(f"integration step {dt} fs exceeds {bound:.4g} fs")
    # grow the time grid until the response has died away or the cap is hit
    t = np.arange(0.0, t_max + 0.5 * dt, dt)
    f = np.exp(-g_total(t, model))
    if sign < 0:
        f = np.conj(f)
    small = np.flatnonzero(np.abs(f) < 1e-6)
    if small.size:
        t, f = t[: small[0] + 1], f[: small[0] + 1]
    w = np.full(t.size, dt)
    w[0] = w[-1] = 0.5 * dt
    fw = f * w
    out = np.empty(nu.size)
    for start in range(0, nu.size, 256):
        d = TWO_PI_C * detuning[start : start + 256]
        out[start : start + 256] = np.real(np.exp(1j * np.outer(d, t)) @ fw)
    return AmplitudeSpectrum(
        nu=nu,
        amp=out / np.max(np.abs(out)),
        phase=np.zeros(nu.size),
        dnu=float(nu[1] - nu[0]) if nu.size > 1 else float("nan"),
    )


def linear_absorption(model: LineShapeModel, nu, dt=None, t_max: float = 1e5) -> AmplitudeSpectrum:
    """``Re int_0^inf exp(i (w - w_eg) t - g(t)) dt`` on the wavenumber grid ``nu``,
    normalized to unit maximum.

    The sum stops where ``|exp(-g)|`` drops below 1e-6 or at ``t_max`` fs.
    """
    return _spectrum(model, nu, +1, 0.0, dt, t_max)


def linear_emission(model: LineShapeModel, nu, dt=None, t_max: float = 1e5) -> AmplitudeSpectrum:
    """Fluorescence counterpart of :func:`linear_absorption`: the conjugate
    line shape, shifted down by twice the total reorganization energy."""
    return _spectrum(model, nu, -1, 2 * model.reorganization_cm, dt, t_max)


def first_moment(spec: AmplitudeSpectrum) -> float:
    w = np.clip(spec.amp, 0, None)
    return float(np.sum(spec.nu * w) / np.sum(w))


# --- 2D spectra ----------------------------------------------------------

def _axis(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


@dataclass(frozen=True)
class SimulationGrids:
    t1: np.ndarray = field(default_factory=lambda: _axis(0.0, 400.0, 2.0))
    t2: np.ndarray = field(default_factory=lambda: _axis(0.0, 1000.0, 20.0))
    t3: np.ndarray = field(default_factory=lambda: _axis(0.0, 400.0, 2.0))
    pad_t1: int = 2
    pad_t3: int = 2
    exc_nm: np.ndarray = field(default_factory=lambda: _axis(650.0, 700.0, 1.0))
    det_nm: np.ndarray = field(default_factory=lambda: _axis(650.0, 700.0, 1.0))

    def __post_init__(self):
        for name in ("t1", "t2", "t3"):
            ax = _uniform_axis(getattr(self, name), f"{name} grid")
            if ax.size < 2 or ax[0] < 0:
                raise UnresolvedGrid(f"{name} grid must be nonnegative with >= 2 points")
            object.__setattr__(self, name, ax)
        for name in ("exc_nm", "det_nm"):
            ax = np.asarray(getattr(self, name), dtype=float)
            if ax.size < 1 or np.any(ax <= 0) or np.any(np.diff(ax) <= 0):
                raise UnresolvedGrid(f"{name} must be positive and ascending")
            object.__setattr__(self, name, ax)
        if self.t1[0] != 0 or self.t3[0] != 0:
            raise UnresolvedGrid("t1 and t3 grids must start at 0")
        if self.pad_t1 < 1 or self.pad_t3 < 1:
            raise UnresolvedGrid("pad factors must be >= 1")


def endpoint_warnings(model: LineShapeModel, grids: SimulationGrids) -> list[str]:
    out = []
    for name in ("t1", "t3"):
        t_end = getattr(grids, name)[-1]
        level = float(np.abs(np.exp(-g_total(t_end, model))))
        if level >= ENDPOINT_DAMPING:
            out.append(
                f"|exp(-g)| = {level:.2e} at the {name} endpoint ({t_end:g} fs) "
                f"is above {ENDPOINT_DAMPING:g}; expect truncation ripple"
            )
    return out


def _spectral_axis(n, dt, pad):
    """FFT-ordered detuning axis in cm^-1 for ``n`` samples padded ``pad``-fold."""
    return np.fft.fftfreq(n * pad, d=dt) / C_CM_PER_FS


def rephasing_spectrum(model: LineShapeModel, grids: SimulationGrids, t2: float):
    """Complex rephasing 2D spectrum at one population time.

    Returns ``(nu_exc, nu_det, S)`` with ascending wavenumber axes in cm^-1
    and ``S[i_exc, i_det]``.
    """
    t1 = grids.t1[:, None]
    t3 = grids.t3[None, :]
    r = rephasing_response(t1, t2, t3, model, rotating=True)
    # trapezoid weight on the t = 0 edges
    r[0, :] *= 0.5
    r[:, 0] *= 0.5
    n1, n3 = r.shape
    m1, m3 = n1 * grids.pad_t1, n3 * grids.pad_t3
    # exp(-i d1 t1) along t1 (forward FFT), exp(+i d3 t3) along t3 (inverse)
    s = np.fft.fft(r, n=m1, axis=0)
    s = np.fft.ifft(s, n=m3, axis=1) * m3
    s *= (grids.t1[1] - grids.t1[0]) * (grids.t3[1] - grids.t3[0])
    d1 = _spectral_axis(n1, grids.t1[1] - grids.t1[0], grids.pad_t1)
    d3 = _spectral_axis(n3, grids.t3[1] - grids.t3[0], grids.pad_t3)
    o1, o3 = np.argsort(d1), np.argsort(d3)
    return (
        model.omega_eg_cm + d1[o1],
        model.omega_eg_cm + d3[o3],
        s[np.ix_(o1, o3)],
    )


def simulate_cube(model: LineShapeModel, grids: SimulationGrids = None, label: str = ""):
    """Real rephasing 2D spectra on the wavelength grids, stacked along t2.

    Returns ``(cube, warnings)``; warnings flag t1/t3 grids too short for the
    response to decay.
    """
    grids = grids or SimulationGrids()
    warnings = endpoint_warnings(model, grids)
    exc_nu = nm_to_wavenumber(grids.exc_nm)
    det_nu = nm_to_wavenumber(grids.det_nm)
    pts = np.stack(np.meshgrid(exc_nu, det_nu, indexing="ij"), axis=-1)
    values = np.empty((grids.t2.size, grids.exc_nm.size, grids.det_nm.size))
    for k, t2 in enumerate(grids.t2):
        nu1, nu3, s = rephasing_spectrum(model, grids, t2)
        interp = RegularGridInterpolator((nu1, nu3), np.real(s), bounds_error=False, fill_value=0.0)
        values[k] = interp(pts)
    cube = SpectralCube(values, grids.t2, grids.exc_nm, grids.det_nm, label)
    return cube, warnings
