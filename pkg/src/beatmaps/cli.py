"""Command-line front end.

Each subcommand reads files, runs one pipeline stage and writes files.
Exit status is 0 on success, 1 on a usage error and 2 when the data is
rejected. Diagnostics go to stderr; stdout stays empty.

Cube inputs are cropped to ``--t-min``/``--t-max`` (80 to 1000 fs by
default) and detrended per pixel (order 3) before any transform.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import load_config
from .diagnostics import MATCH_TOLERANCE, beat_report, fit_exp_decay
from .errors import BeatmapsError, MissingFile
from .export import (
    map_at,
    read_map_csv,
    read_trace_csv,
    render_heatmap_svg,
    render_trace_svg,
    report_csv,
    report_text,
    write_map_csv,
    write_scalogram_csv,
    write_trace_csv,
)
from .fourier import GaussianWindow, bandpass_filter, frequency_map
from .lineshape import simulate_cube
from .spectra import (
    PixelCoord,
    TimeTrace,
    crop_population,
    detrend,
    detrend_cube,
    extract_trace,
    load_archive,
    save_archive,
)
from .wavelet import (
    MorletParams,
    cone_of_influence,
    scalogram,
    scales_for_frequencies,
    time_resolved_frequency_map,
    wavelet_trace,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# --- argument types ------------------------------------------------------

def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (x > 0 and np.isfinite(x)):
        raise argparse.ArgumentTypeError(f"must be > 0: {text!r}")
    return x


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}") from None


def _positive_list(text: str) -> list[float]:
    values = [_positive(v) for v in text.split(",") if v.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _pixel(text: str) -> PixelCoord:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"a pixel is EXC,DET in nm, got {text!r}")
    return PixelCoord(*values)


def _nonneg_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return n


def _pad(text: str) -> int:
    n = _nonneg_int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("pad factor must be >= 1")
    return n


# --- helpers -------------------------------------------------------------

def _tag(x: float) -> str:
    return format(x, "g")


def _pixel_tag(p: PixelCoord) -> str:
    return f"{_tag(p.exc_nm)}_{_tag(p.det_nm)}"


def _outputs(out: str, names: list[str]) -> list[str]:
    """A single result goes to ``out`` itself; several go into directory ``out``."""
    if len(names) == 1:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return [out]
    os.makedirs(out, exist_ok=True)
    return [os.path.join(out, n) for n in names]


def _morlet(args) -> MorletParams:
    return MorletParams(fb=args.fb, fc=args.fc)


def _prepared_cube(args):
    cube = load_archive(args.input)
    cube = crop_population(cube, args.t_min, args.t_max)
    if args.detrend >= 0:
        cube = detrend_cube(cube, args.detrend)
    return cube


def _trace_margin(trace, nu0, params) -> int:
    scale = float(scales_for_frequencies([nu0], trace.dt, params).scales[0])
    return cone_of_influence(scale, trace.dt, len(trace), params)


def _envelopes(args):
    """Envelope traces for beats/fit: from a cube (per pixel) or a trace CSV."""
    params = _morlet(args)
    if os.path.isdir(args.input):
        if not args.pixel:
            raise UsageError("--pixel is required when --in is a cube archive")
        cube = _prepared_cube(args)
        return [wavelet_trace(cube, p, args.nu, params) for p in args.pixel]
    if args.pixel:
        raise UsageError("--pixel only applies to cube archives")
    trace = read_trace_csv(args.input)
    trace = trace.replace(coi_margin=_trace_margin(trace, args.nu, params), nu0=args.nu)
    return [trace]


def _write_reports(reports, traces, out, fmt):
    origins = [t.origin for t in traces]
    if fmt == "csv":
        text = report_csv(reports, origins if all(o is not None for o in origins) else None)
    else:
        text = "\n".join(report_text(r, o) for r, o in zip(reports, origins))
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- subcommands ---------------------------------------------------------

def cmd_simulate(args):
    model, grids, label = load_config(args.config)
    cube, warnings = simulate_cube(model, grids, args.label if args.label is not None else label)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    save_archive(cube, args.out)


def cmd_ftmap(args):
    cube = _prepared_cube(args)
    paths = _outputs(args.out, [f"ftmap_{_tag(nu)}.csv" for nu in args.nu])
    for nu, path in zip(args.nu, paths):
        m = frequency_map(cube, nu, args.pad)
        write_map_csv(m, path)
        if args.svg:
            render_heatmap_svg(m, os.path.splitext(path)[0] + ".svg")


def cmd_wtmap(args):
    cube = _prepared_cube(args)
    params = _morlet(args)
    os.makedirs(args.out, exist_ok=True)
    for nu in args.nu:
        trmap = time_resolved_frequency_map(cube, nu, params)
        for u in args.at:
            if not trmap.u[0] - 0.5 * cube.dt <= u <= trmap.u[-1] + 0.5 * cube.dt:
                raise UsageError(f"--at {u:g} fs is outside the analysed range "
                                 f"[{trmap.u[0]:g}, {trmap.u[-1]:g}] fs")
            m = map_at(trmap, u)
            base = os.path.join(args.out, f"wtmap_{_tag(nu)}_u{_tag(m.meta['u_fs'])}")
            write_map_csv(m, base + ".csv")
            if args.svg:
                render_heatmap_svg(m, base + ".svg")


def cmd_trace(args):
    cube = _prepared_cube(args)
    params = _morlet(args)
    paths = _outputs(args.out, [f"trace_{_pixel_tag(p)}.csv" for p in args.pixel])
    for p, path in zip(args.pixel, paths):
        if args.nu is not None:
            tr = wavelet_trace(cube, p, args.nu, params)
        else:
            tr = extract_trace(cube, p)
        write_trace_csv(tr, path)
        if args.svg:
            render_trace_svg(tr, os.path.splitext(path)[0] + ".svg",
                             f"pixel ({_tag(tr.origin.exc_nm)}, {_tag(tr.origin.det_nm)}) nm")
        if args.scalogram_nu is not None:
            sg = scalogram(extract_trace(cube, p), args.scalogram_nu, params)
            write_scalogram_csv(sg, os.path.splitext(path)[0] + "_scalogram.csv")


def cmd_bandpass(args):
    if os.path.isdir(args.input):
        if args.pixel is None:
            raise UsageError("--pixel is required when --in is a cube archive")
        trace = extract_trace(_prepared_cube(args), args.pixel)
    else:
        trace = read_trace_csv(args.input)
        if args.detrend >= 0:
            trace = detrend(trace, args.detrend)
    paths = _outputs(args.out, [f"bandpass_{_tag(args.center)}_fwhm{_tag(f)}.csv" for f in args.fwhm])
    for fwhm, path in zip(args.fwhm, paths):
        out = bandpass_filter(trace, GaussianWindow(args.center, fwhm), args.pad)
        write_trace_csv(out, path)


def cmd_beats(args):
    traces = _envelopes(args)
    reports = [
        beat_report(t, args.nu, args.detected or (), args.tol,
                    exclude_coi=args.exclude_coi, min_prominence=args.min_prominence)
        for t in traces
    ]
    _write_reports(reports, traces, args.out, args.format)


def cmd_fit(args):
    traces = _envelopes(args)
    fits = [fit_exp_decay(t, exclude_coi=args.exclude_coi) for t in traces]
    _write_reports(fits, traces, args.out, args.format)


def cmd_export_svg(args):
    if not os.path.isfile(args.input):
        raise MissingFile(f"no file at {args.input}")
    with open(args.input, encoding="utf-8") as fh:
        head = fh.readline()
    if head.startswith("t_fs,value"):
        render_trace_svg(read_trace_csv(args.input), args.out, args.title or "")
    else:
        render_heatmap_svg(read_map_csv(args.input), args.out)


def cmd_analyze(args):
    """detrend -> wtmap -> trace -> beats -> fit, written as the separate stages would."""
    cube = _prepared_cube(args)
    params = _morlet(args)
    os.makedirs(args.out, exist_ok=True)
    if args.at:
        trmap = time_resolved_frequency_map(cube, args.nu, params)
        for u in args.at:
            m = map_at(trmap, u)
            write_map_csv(m, os.path.join(args.out, f"wtmap_{_tag(args.nu)}_u{_tag(m.meta['u_fs'])}.csv"))
    for p in args.pixel:
        stem = os.path.join(args.out, _pixel_tag(p))
        tr = wavelet_trace(cube, p, args.nu, params)
        write_trace_csv(tr, stem + "_trace.csv")
        # downstream stages see the trace exactly as a later run would read it back
        back = read_trace_csv(stem + "_trace.csv")
        tr = TimeTrace(back.t, back.y, tr.origin, tr.meta)
        rep = beat_report(tr, args.nu, args.detected or (), args.tol,
                          exclude_coi=args.exclude_coi, min_prominence=args.min_prominence)
        _write_reports([rep], [tr], stem + "_beats.txt", "text")
        fit = fit_exp_decay(tr, exclude_coi=args.exclude_coi)
        _write_reports([fit], [tr], stem + "_fit.txt", "text")


# --- parser --------------------------------------------------------------

def _add_cube_options(p, required=True):
    p.add_argument("--in", dest="input", required=required, help="cube archive directory")
    p.add_argument("--t-min", type=float, default=80.0, help="crop start, fs (default 80)")
    p.add_argument("--t-max", type=float, default=1000.0, help="crop end, fs (default 1000)")
    p.add_argument("--detrend", type=int, default=3,
                   help="polynomial order removed per pixel; negative disables (default 3)")


def _add_morlet_options(p):
    p.add_argument("--fb", type=_positive, default=2.0, help="Morlet bandwidth Fb (default 2)")
    p.add_argument("--fc", type=_positive, default=1.0, help="Morlet centre frequency Fc (default 1)")


def _add_report_options(p):
    p.add_argument("--nu", type=_positive, required=True, help="analysis wavenumber, cm^-1")
    p.add_argument("--pixel", type=_pixel, action="append", help="EXC,DET in nm; repeatable")
    p.add_argument("--out", required=True, help="report file")
    p.add_argument("--format", choices=("text", "csv"), default="text",
                   help="key=value blocks or one CSV row per pixel")
    _add_morlet_options(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beatmaps", description="Time-frequency analysis of 2D spectra along population time.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="synthesize a cube from a key=value model config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="archive directory to write")
    p.add_argument("--label", default=None, help="overrides the config label")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ftmap", help="|FT| map at one or more wavenumbers")
    _add_cube_options(p)
    p.add_argument("--nu", type=_positive_list, required=True, help="cm^-1, comma list")
    p.add_argument("--pad", type=_pad, default=4, help="zero-padding factor (default 4)")
    p.add_argument("--out", required=True, help="CSV file, or directory for several --nu")
    p.add_argument("--svg", action="store_true", help="also write an SVG heatmap next to each CSV")
    p.set_defaults(func=cmd_ftmap)

    p = sub.add_parser("wtmap", help="|CWT| maps at selected translations u")
    _add_cube_options(p)
    p.add_argument("--nu", type=_positive_list, required=True, help="cm^-1, comma list")
    p.add_argument("--at", type=_float_list, required=True, help="u values in fs, comma list")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--svg", action="store_true")
    _add_morlet_options(p)
    p.set_defaults(func=cmd_wtmap)

    p = sub.add_parser("trace", help="pixel traces, raw or as |CWT| at --nu")
    _add_cube_options(p)
    p.add_argument("--pixel", type=_pixel, action="append", required=True, help="EXC,DET in nm; repeatable")
    p.add_argument("--nu", type=_positive, default=None, help="emit the |CWT| trace at this wavenumber")
    p.add_argument("--scalogram-nu", type=_positive_list, default=None,
                   help="also write a scalogram CSV over these wavenumbers")
    p.add_argument("--out", required=True, help="CSV file, or directory for several pixels")
    p.add_argument("--svg", action="store_true")
    _add_morlet_options(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("bandpass", help="Gaussian band-pass (windowed FT) of a trace")
    _add_cube_options(p)
    p.add_argument("--pixel", type=_pixel, default=None, help="EXC,DET in nm, for cube input")
    p.add_argument("--center", type=_positive, required=True, help="window centre, cm^-1")
    p.add_argument("--fwhm", type=_positive_list, required=True, help="window FWHM list, cm^-1")
    p.add_argument("--pad", type=_pad, default=4)
    p.add_argument("--out", required=True, help="CSV file, or directory for several widths")
    p.set_defaults(func=cmd_bandpass)

    p = sub.add_parser("beats", help="beat period and interfering-frequency candidates")
    _add_cube_options(p)
    _add_report_options(p)
    p.add_argument("--detected", type=_positive_list, default=None, help="detected peaks to match, cm^-1")
    p.add_argument("--tol", type=_positive, default=MATCH_TOLERANCE, help="match tolerance, cm^-1")
    p.add_argument("--exclude-coi", action="store_true", help="ignore maxima inside the cone of influence")
    p.add_argument("--min-prominence", type=float, default=0.0,
                   help="drop maxima less prominent than this fraction of the envelope maximum")
    p.set_defaults(func=cmd_beats)

    p = sub.add_parser("fit", help="exponential decay fit of an envelope")
    _add_cube_options(p)
    _add_report_options(p)
    p.add_argument("--include-coi", dest="exclude_coi", action="store_false",
                   help="fit cone-of-influence samples too")
    p.set_defaults(func=cmd_fit, exclude_coi=True)

    p = sub.add_parser("export-svg", help="render a map CSV as a heatmap or a trace CSV as a line plot")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title", default=None, help="line-plot title")
    p.set_defaults(func=cmd_export_svg)

    p = sub.add_parser("analyze", help="wtmap, trace, beats and fit in one pass")
    _add_cube_options(p)
    p.add_argument("--nu", type=_positive, required=True)
    p.add_argument("--pixel", type=_pixel, action="append", required=True)
    p.add_argument("--at", type=_float_list, default=None)
    p.add_argument("--detected", type=_positive_list, default=None)
    p.add_argument("--tol", type=_positive, default=MATCH_TOLERANCE)
    p.add_argument("--exclude-coi", action="store_true")
    p.add_argument("--min-prominence", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    _add_morlet_options(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except BeatmapsError as exc:
        print(f"beatmaps: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"beatmaps: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
