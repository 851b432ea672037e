"""CSV and SVG emitters.

Numbers are written with 17 significant digits, so every float survives a
write/read roundtrip exactly. Files use LF line endings and ``.`` as the
decimal separator; output bytes depend only on the input object.

Map CSVs put detection wavelengths in the header row and excitation
wavelengths in the first column. The otherwise unused corner cell carries
``;``-separated ``key=value`` metadata (analysis wavenumber, band tag,
quantity), so a map file is self-describing.
"""

from __future__ import annotations

import math
import os
from typing import Iterable

import numpy as np

from .diagnostics import BeatReport, DecayFit
from .errors import IoFailure, MalformedManifest, MissingFile
from .fourier import FrequencyMap
from .spectra import PixelCoord, TimeTrace
from .wavelet import Scalogram, TimeResolvedFrequencyMap


def fmt(x) -> str:
    return format(float(x), ".17g")


def _write(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read(path) -> str:
    if not os.path.isfile(path):
        raise MissingFile(f"no file at {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _rows(text: str) -> list[list[str]]:
    return [line.split(",") for line in text.split("\n") if line.strip()]


# --- traces --------------------------------------------------------------

def trace_csv(trace: TimeTrace) -> str:
    """``t_fs,value`` rows; complex traces get an extra ``imag`` column."""
    cplx = np.iscomplexobj(trace.y)
    lines = ["t_fs,value,imag" if cplx else "t_fs,value"]
    for t, y in zip(trace.t, trace.y):
        if cplx:
            lines.append(f"{fmt(t)},{fmt(y.real)},{fmt(y.imag)}")
        else:
            lines.append(f"{fmt(t)},{fmt(y)}")
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: TimeTrace, path) -> None:
    _write(path, trace_csv(trace))


def read_trace_csv(path) -> TimeTrace:
    rows = _rows(_read(path))
    if not rows or rows[0][:2] != ["t_fs", "value"]:
        raise MalformedManifest(f"{path}: expected a t_fs,value header")
    width = len(rows[0])
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise MalformedManifest(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != width:
        raise MalformedManifest(f"{path}: ragged rows")
    y = data[:, 1] + 1j * data[:, 2] if width == 3 else data[:, 1]
    return TimeTrace(data[:, 0], y)


# --- maps ----------------------------------------------------------------

def _map_tag(meta: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in meta.items())


def map_csv(amp, exc_axis, det_axis, meta: dict | None = None) -> str:
    amp = np.asarray(amp, dtype=float)
    lines = [",".join([_map_tag(meta or {})] + [fmt(d) for d in det_axis])]
    for e, row in zip(exc_axis, amp):
        lines.append(",".join([fmt(e)] + [fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def _frequency_map_tag(m: FrequencyMap) -> dict:
    tag = {"nu0_cm": fmt(m.nu0), "band_cm": fmt(m.band)}
    for key in ("quantity", "u_fs"):
        if key in m.meta:
            tag[key] = m.meta[key] if isinstance(m.meta[key], str) else fmt(m.meta[key])
    return tag


def write_map_csv(m: FrequencyMap, path) -> None:
    _write(path, map_csv(m.amp, m.exc_axis, m.det_axis, _frequency_map_tag(m)))


def read_map_csv(path) -> FrequencyMap:
    """Inverse of :func:`write_map_csv`; metadata is restored from the corner cell."""
    rows = _rows(_read(path))
    if len(rows) < 2:
        raise MalformedManifest(f"{path}: a map needs a header and at least one row")
    meta = {}
    for item in filter(None, rows[0][0].split(";")):
        key, _, value = item.partition("=")
        meta[key] = value
    try:
        det = np.array([float(v) for v in rows[0][1:]])
        body = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise MalformedManifest(f"{path}: {exc}") from None
    if body.ndim != 2 or body.shape[1] != det.size + 1:
        raise MalformedManifest(f"{path}: ragged rows")
    nu0 = float(meta.pop("nu0_cm", "nan"))
    band = float(meta.pop("band_cm", "nan"))
    if "u_fs" in meta:
        meta["u_fs"] = float(meta["u_fs"])
    return FrequencyMap(nu0, band, body[:, 1:], body[:, 0], det, meta)


def map_at(trmap: TimeResolvedFrequencyMap, u_fs: float) -> FrequencyMap:
    """Slice of a time-resolved map at the translation nearest ``u_fs``."""
    k = trmap.index_of(u_fs)
    meta = dict(trmap.meta)
    meta["u_fs"] = float(trmap.u[k])
    return FrequencyMap(trmap.nu0, trmap.band, trmap.amp[k], trmap.exc_axis, trmap.det_axis, meta)


# --- scalograms ----------------------------------------------------------

def scalogram_csv(sg: Scalogram) -> str:
    """|coeffs| with one row per scale: ``nu_cm,scale`` then one column per u."""
    lines = [",".join(["nu_cm", "scale"] + [fmt(u) for u in sg.u])]
    for nu, s, row in zip(sg.scale_set.nu, sg.scale_set.scales, np.abs(sg.coeffs)):
        lines.append(",".join([fmt(nu), fmt(s)] + [fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def write_scalogram_csv(sg: Scalogram, path) -> None:
    _write(path, scalogram_csv(sg))


# --- reports -------------------------------------------------------------

def _value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, (tuple, list)):
        return ",".join(_value(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def _report_items(obj) -> list[tuple[str, object]]:
    if isinstance(obj, BeatReport):
        low_flag = obj.candidates is not None and obj.candidates[0] <= 0
        return [
            ("nu0_cm", obj.nu0),
            ("period_fs", obj.period),
            ("dnu_cm", obj.dnu),
            ("candidates_cm", obj.candidates),
            ("low_candidate_nonpositive", str(low_flag).lower()),
            ("maxima_fs", tuple(obj.maxima) or None),
            ("matches", ";".join(f"{_value(m.candidate)}:{_value(m.peak)}:{_value(m.difference)}"
                                 for m in obj.matches) or "none"),
        ]
    if isinstance(obj, DecayFit):
        return [
            ("amplitude", obj.amplitude),
            ("tau_fs", obj.tau),
            ("offset", obj.offset),
            ("rms", obj.rms),
            ("tau_1e_fs", obj.tau_1e),
            ("t_ref_fs", obj.t_ref),
        ]
    raise TypeError(f"no report format for {type(obj).__name__}")


def report_text(obj, origin: PixelCoord | None = None) -> str:
    """Flat ``key=value`` block for a :class:`BeatReport` or :class:`DecayFit`."""
    items = _report_items(obj)
    if origin is not None:
        items = [("exc_nm", origin.exc_nm), ("det_nm", origin.det_nm)] + items
    return "".join(f"{k}={_value(v)}\n" for k, v in items)


def report_csv(reports: Iterable, origins: Iterable | None = None) -> str:
    """One CSV row per report; list-valued fields are ``;``-joined."""
    reports = list(reports)
    if not reports:
        return ""
    origins = list(origins) if origins is not None else [None] * len(reports)
    header = None
    lines = []
    for rep, org in zip(reports, origins):
        items = _report_items(rep)
        if org is not None:
            items = [("exc_nm", org.exc_nm), ("det_nm", org.det_nm)] + items
        keys = [k for k, _ in items]
        if header is None:
            header = keys
            lines.append(",".join(header))
        elif keys != header:
            raise TypeError("all rows of a report CSV must share one layout")
        lines.append(",".join(_value(v).replace(",", ";") for _, v in items))
    return "\n".join(lines) + "\n"


def export_csv(obj, path) -> None:
    """Write a trace, map, scalogram or report in its CSV layout."""
    if isinstance(obj, TimeTrace):
        write_trace_csv(obj, path)
    elif isinstance(obj, FrequencyMap):
        write_map_csv(obj, path)
    elif isinstance(obj, Scalogram):
        write_scalogram_csv(obj, path)
    elif isinstance(obj, (BeatReport, DecayFit)):
        _write(path, report_csv([obj]))
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")


# --- SVG -----------------------------------------------------------------

# perceptually ordered dark-blue -> yellow ramp, linearly interpolated
_RAMP = np.array([
    [0.267, 0.005, 0.329],
    [0.231, 0.322, 0.545],
    [0.129, 0.569, 0.549],
    [0.369, 0.788, 0.384],
    [0.993, 0.906, 0.144],
])
N_LEVELS = 256


def palette(n: int = N_LEVELS) -> list[str]:
    x = np.linspace(0, 1, n)
    pos = np.linspace(0, 1, len(_RAMP))
    rgb = np.column_stack([np.interp(x, pos, _RAMP[:, c]) for c in range(3)])
    return ["#%02x%02x%02x" % tuple(int(round(255 * v)) for v in row) for row in rgb]


def color_levels(amp) -> np.ndarray:
    """Integer colour level 0..N_LEVELS-1 for each value, linear in amplitude."""
    a = np.asarray(amp, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    if hi <= lo:
        return np.zeros(a.shape, dtype=int)
    return np.clip(np.floor((a - lo) / (hi - lo) * (N_LEVELS - 1) + 0.5), 0, N_LEVELS - 1).astype(int)


def _ticks(lo: float, hi: float, max_ticks: int = 7) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    for step in (1, 2, 5, 10, 20, 25, 50, 100, 200, 500, 1000):
        if span / step <= max_ticks - 1:
            break
    first = math.ceil(lo / step - 1e-9) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def _num(x: float) -> str:
    return f"{x:.2f}"


def heatmap_svg(m: FrequencyMap) -> str:
    amp = np.asarray(m.amp, dtype=float)
    if amp.size == 0:
        raise ValueError("cannot render an empty map")
    exc, det = np.asarray(m.exc_axis, float), np.asarray(m.det_axis, float)
    ne, nd = amp.shape
    cell = max(4.0, min(16.0, 480.0 / max(ne, nd)))
    left, top = 70.0, 50.0
    w, h = ne * cell, nd * cell
    bar_x = left + w + 30
    width, height = bar_x + 90, top + h + 60
    colors = palette()
    levels = color_levels(amp)

    quantity = m.meta.get("quantity", "amplitude")
    title = f"{quantity} at {m.nu0:.1f} cm-1 (band +/-{m.band:.1f} cm-1)"
    if "u_fs" in m.meta:
        title += f", u = {float(m.meta['u_fs']):.0f} fs"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(width)}" '
        f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{_num(left)}" y="24" font-family="sans-serif" font-size="14">{title}</text>',
        '<g id="cells" shape-rendering="crispEdges">',
    ]
    # excitation runs left to right, detection bottom to top
    for i in range(ne):
        for j in range(nd):
            x = left + i * cell
            y = top + (nd - 1 - j) * cell
            out.append(
                f'<rect class="cell" x="{_num(x)}" y="{_num(y)}" width="{_num(cell)}" '
                f'height="{_num(cell)}" fill="{colors[levels[i, j]]}"/>'
            )
    out.append("</g>")

    def pos(axis, v, n, start, length, flip):
        if n == 1:
            return start + 0.5 * length
        frac = (v - axis[0]) / (axis[-1] - axis[0])
        frac = 1 - frac if flip else frac
        return start + (0.5 + frac * (n - 1)) * (length / n)

    out.append('<g id="axes" font-family="sans-serif" font-size="11">')
    out.append(f'<rect x="{_num(left)}" y="{_num(top)}" width="{_num(w)}" height="{_num(h)}" '
               'fill="none" stroke="#000000"/>')
    for v in _ticks(exc[0], exc[-1]):
        x = pos(exc, v, ne, left, w, False)
        out.append(f'<line x1="{_num(x)}" y1="{_num(top + h)}" x2="{_num(x)}" y2="{_num(top + h + 5)}" stroke="#000000"/>')
        out.append(f'<text x="{_num(x)}" y="{_num(top + h + 18)}" text-anchor="middle">{v:g}</text>')
    for v in _ticks(det[0], det[-1]):
        y = pos(det, v, nd, top, h, True)
        out.append(f'<line x1="{_num(left - 5)}" y1="{_num(y)}" x2="{_num(left)}" y2="{_num(y)}" stroke="#000000"/>')
        out.append(f'<text x="{_num(left - 8)}" y="{_num(y + 4)}" text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{_num(left + w / 2)}" y="{_num(top + h + 40)}" text-anchor="middle">excitation (nm)</text>')
    out.append(f'<text x="18" y="{_num(top + h / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_num(top + h / 2)})">detection (nm)</text>')
    out.append("</g>")

    # colour bar, top = maximum
    out.append('<g id="colorbar" font-family="sans-serif" font-size="11" shape-rendering="crispEdges">')
    step = h / N_LEVELS
    for k in range(N_LEVELS):
        y = top + (N_LEVELS - 1 - k) * step
        out.append(f'<rect x="{_num(bar_x)}" y="{_num(y)}" width="16.00" height="{_num(step + 0.5)}" '
                   f'fill="{colors[k]}"/>')
    out.append(f'<rect x="{_num(bar_x)}" y="{_num(top)}" width="16.00" height="{_num(h)}" fill="none" stroke="#000000"/>')
    out.append(f'<text x="{_num(bar_x + 20)}" y="{_num(top + 10)}">{float(amp.max()):.4g}</text>')
    out.append(f'<text x="{_num(bar_x + 20)}" y="{_num(top + h)}">{float(amp.min()):.4g}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_heatmap_svg(m: FrequencyMap, path) -> None:
    _write(path, heatmap_svg(m))


def trace_svg(trace: TimeTrace, title: str = "") -> str:
    """Line plot of |y| (complex) or y (real) against t."""
    t = np.asarray(trace.t, dtype=float)
    y = np.abs(trace.y) if np.iscomplexobj(trace.y) else np.asarray(trace.y, dtype=float)
    left, top, w, h = 70.0, 40.0, 480.0, 260.0
    lo, hi = float(y.min()), float(y.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    span_t = t[-1] - t[0] if t.size > 1 else 1.0
    xs = left + (t - t[0]) / span_t * w
    ys = top + (1 - (y - lo) / (hi - lo)) * h
    pts = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(xs, ys))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(left + w + 30)}" '
        f'height="{_num(top + h + 50)}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{_num(left)}" y="24" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{_num(left)}" y="{_num(top)}" width="{_num(w)}" height="{_num(h)}" fill="none" stroke="#000000"/>',
        f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{pts}"/>',
        '<g font-family="sans-serif" font-size="11">',
    ]
    for v in _ticks(t[0], t[-1]) if t.size > 1 else []:
        x = left + (v - t[0]) / span_t * w
        out.append(f'<text x="{_num(x)}" y="{_num(top + h + 16)}" text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{_num(left + w / 2)}" y="{_num(top + h + 36)}" text-anchor="middle">T (fs)</text>')
    out.append(f'<text x="{_num(left - 6)}" y="{_num(top + 10)}" text-anchor="end">{hi:.3g}</text>')
    out.append(f'<text x="{_num(left - 6)}" y="{_num(top + h)}" text-anchor="end">{lo:.3g}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_trace_svg(trace: TimeTrace, path, title: str = "") -> None:
    _write(path, trace_svg(trace, title))
