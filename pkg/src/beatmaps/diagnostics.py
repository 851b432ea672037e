"""Quantitative readouts from envelope traces.

Envelope traces are |CWT| wavelet traces or band-pass envelopes. This module
measures beat periods from the spacing of envelope maxima and converts them
into the pair of frequencies that would produce such a beat around the
analysis wavenumber. It also fits exponential decays and reports fold-decay
ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import peak_prominences

from .errors import DegenerateFit, DivisionByNegligible, NonPositiveInput, OutOfRange
from .spectra import TimeTrace
from .units import C_CM_PER_FS

#: default |candidate - peak| tolerance for match_candidates, cm^-1
MATCH_TOLERANCE = 30.0


class InterferencePair(NamedTuple):
    low: float
    high: float
    spacing: float

    @property
    def low_nonpositive(self) -> bool:
        return self.low <= 0


class Match(NamedTuple):
    candidate: float
    peak: float
    difference: float


@dataclass(frozen=True)
class BeatReport:
    nu0: float
    period: Optional[float]
    dnu: Optional[float]
    candidates: Optional[tuple[float, float]]
    matches: list = field(default_factory=list)
    maxima: tuple = ()


@dataclass(frozen=True)
class DecayFit:
    amplitude: float
    tau: float
    offset: float
    rms: float
    tau_1e: float
    t_ref: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.exp(-np.asarray(t, dtype=float) / self.tau) + self.offset


# --- extrema -------------------------------------------------------------

def _valid_window(trace: TimeTrace, exclude_coi: bool) -> tuple[int, int]:
    n = len(trace)
    m = int(trace.meta.get("coi_margin", 0)) if exclude_coi else 0
    return m, n - m


def _extrema(t, y, sign, lo, hi, min_prominence=0.0):
    y = sign * np.asarray(y, dtype=float)
    dt = t[1] - t[0]
    idx = np.array([
        k for k in range(max(lo, 1), min(hi, y.size - 1))
        if y[k] > y[k - 1] and y[k] > y[k + 1]
    ], dtype=int)
    if idx.size and min_prominence > 0:
        prom = peak_prominences(y, idx)[0]
        idx = idx[prom >= min_prominence * np.max(np.abs(y))]
    out = []
    for k in idx:
        a, b, c = y[k - 1], y[k], y[k + 1]
        out.append(float(t[k] + 0.5 * (a - c) / (a - 2 * b + c) * dt))
    return out


def envelope_maxima(trace: TimeTrace, exclude_coi: bool = False,
                    min_prominence: float = 0.0) -> list[float]:
    """Times of strict local maxima, parabolically refined; endpoints excluded.

    With ``exclude_coi`` only samples outside the trace's ``coi_margin``
    metadata are considered. ``min_prominence`` (a fraction of the envelope
    maximum) drops shallow ripple maxima.
    """
    if len(trace) < 3:
        return []
    lo, hi = _valid_window(trace, exclude_coi)
    return _extrema(trace.t, np.abs(trace.y), 1, lo, hi, min_prominence)


def envelope_minima(trace: TimeTrace, exclude_coi: bool = False,
                    min_prominence: float = 0.0) -> list[float]:
    if len(trace) < 3:
        return []
    lo, hi = _valid_window(trace, exclude_coi)
    return _extrema(trace.t, np.abs(trace.y), -1, lo, hi, min_prominence)


def beat_period(trace: TimeTrace, exclude_coi: bool = False,
                min_prominence: float = 0.0) -> Optional[float]:
    """Mean spacing of consecutive envelope maxima, or None below two maxima."""
    mx = envelope_maxima(trace, exclude_coi, min_prominence)
    if len(mx) < 2:
        return None
    return float(np.mean(np.diff(mx)))


def modulation_depth(trace: TimeTrace, interior: float = 0.8) -> float:
    """``(max - min) / (max + min)`` of |y| over the central ``interior`` fraction."""
    e = np.abs(trace.y)
    cut = int(round(0.5 * (1 - interior) * e.size))
    e = e[cut : e.size - cut]
    top, bottom = e.max(), e.min()
    return float((top - bottom) / (top + bottom)) if top + bottom > 0 else 0.0


# --- interference --------------------------------------------------------

def interfering_frequencies(nu0: float, period: float) -> InterferencePair:
    """Frequencies ``nu0 -/+ dnu`` whose beat with ``nu0`` has the given period.

    ``dnu = 1 / (c * period)``; an infinite period gives a zero spacing.
    """
    if not (nu0 > 0 and period > 0):
        raise NonPositiveInput(f"need nu0 > 0 and period > 0, got {nu0}, {period}")
    dnu = 0.0 if math.isinf(period) else 1.0 / (C_CM_PER_FS * period)
    return InterferencePair(nu0 - dnu, nu0 + dnu, dnu)


def match_candidates(candidates, detected, tol: float = MATCH_TOLERANCE) -> list[Match]:
    """One-to-one nearest matching, greedy by ascending |difference|.

    Returned in the order of ``candidates``; unmatched candidates are omitted.
    """
    if not tol > 0:
        raise NonPositiveInput(f"tolerance must be > 0, got {tol}")
    cand = [float(c) for c in candidates]
    peaks = [float(p) for p in detected]
    pairs = sorted(
        (abs(c - p), i, j)
        for i, c in enumerate(cand)
        for j, p in enumerate(peaks)
        if abs(c - p) <= tol
    )
    used_c, used_p, chosen = set(), set(), {}
    for diff, i, j in pairs:
        if i in used_c or j in used_p:
            continue
        used_c.add(i)
        used_p.add(j)
        chosen[i] = Match(cand[i], peaks[j], diff)
    return [chosen[i] for i in sorted(chosen)]


def beat_report(trace: TimeTrace, nu0: float, detected=(), tol: float = MATCH_TOLERANCE,
                exclude_coi: bool = False, min_prominence: float = 0.0) -> BeatReport:
    maxima = envelope_maxima(trace, exclude_coi, min_prominence)
    period = float(np.mean(np.diff(maxima))) if len(maxima) >= 2 else None
    if period is None or not period > 0:
        return BeatReport(float(nu0), None, None, None, [], tuple(maxima))
    pair = interfering_frequencies(nu0, period)
    return BeatReport(
        nu0=float(nu0),
        period=period,
        dnu=pair.spacing,
        candidates=(pair.low, pair.high),
        matches=match_candidates((pair.low, pair.high), detected, tol) if len(detected) else [],
        maxima=tuple(maxima),
    )


# --- decay ---------------------------------------------------------------

def _linear_fit(t, y, tau):
    A = np.column_stack([np.exp(-t / tau), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(resid @ resid), coef


def fit_exp_decay(trace: TimeTrace, exclude_coi: bool = True, n_grid: int = 50) -> DecayFit:
    """Least-squares fit of ``A * exp(-t / tau) + c0`` to an envelope trace.

    ``tau`` is scanned on a logarithmic grid over ``[dt, 20 * span]`` with
    ``(A, c0)`` solved linearly at each point, then refined by golden-section
    search in log(tau) between the neighbours of the best grid point.
    Samples inside the trace's ``coi_margin`` are dropped when
    ``exclude_coi`` is set.
    """
    lo, hi = _valid_window(trace, exclude_coi)
    t = np.asarray(trace.t[lo:hi], dtype=float)
    y = np.abs(trace.y[lo:hi]) if np.iscomplexobj(trace.y) else np.asarray(trace.y[lo:hi], dtype=float)
    if t.size < 6:
        raise DegenerateFit(f"need at least 6 usable samples, got {t.size}")
    scale = float(np.max(np.abs(y)))
    if not scale > 0 or np.ptp(y) <= 1e-12 * scale:
        raise DegenerateFit("flat input carries no decay")
    # times relative to the first usable sample keep exp() well scaled
    t0 = t[0]
    tr = t - t0
    span = tr[-1]
    dt = t[1] - t[0]
    grid = np.geomspace(dt, 20 * span, n_grid)
    sse = np.array([_linear_fit(tr, y, tau)[0] for tau in grid])
    k = int(np.argmin(sse))
    tau = float(grid[k])
    if 0 < k < n_grid - 1:
        # the grid neighbours bracket the minimum
        res = minimize_scalar(
            lambda x: _linear_fit(tr, y, math.exp(x))[0],
            bracket=tuple(np.log(grid[k - 1 : k + 2])),
            method="golden",
            tol=1e-10,
        )
        if res.fun <= sse[k]:
            tau = math.exp(res.x)
    err, (amp_rel, offset) = _linear_fit(tr, y, tau)
    if abs(amp_rel) < 1e-12 * scale:
        raise DegenerateFit("fitted amplitude is negligible")
    return DecayFit(
        amplitude=float(amp_rel * math.exp(t0 / tau)),
        tau=float(tau),
        offset=float(offset),
        rms=math.sqrt(err / t.size),
        # the excess over the offset falls by 1/e after one tau, wherever it starts
        tau_1e=float(tau),
        t_ref=float(t0),
    )


def fold_decay(trace: TimeTrace, t_a: float, t_b: float) -> float:
    """Ratio of the linearly interpolated trace at ``t_a`` to that at ``t_b``.

    Raw values are used; no baseline is subtracted.
    """
    t = trace.t
    y = np.abs(trace.y) if np.iscomplexobj(trace.y) else np.asarray(trace.y, dtype=float)
    for x in (t_a, t_b):
        if x < t[0] or x > t[-1]:
            raise OutOfRange(f"{x} fs is outside the trace [{t[0]}, {t[-1]}]")
    num = float(np.interp(t_a, t, y))
    den = float(np.interp(t_b, t, y))
    if abs(den) < 1e-12 * float(np.max(np.abs(y))) or den == 0:
        raise DivisionByNegligible(f"trace value at {t_b} fs is negligible")
    return num / den
