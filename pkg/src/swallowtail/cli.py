"""Command-line front end: ``swallowtail {models,analyze,region,spectrum}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .classifier import gyroid_diagonal_closed_forms
from .charpoly import model_char_poly
from .critical_finder import FinderOptions
from .graph_model import MODEL_NAMES, ModelError, ModelSpec, builtin_model, model_from_dict
from .parallel import worker_count
from .region import FORMATS, RegionOptions, boundary_curves, export, sample_region
from .report import build_report, region_grid_for

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


# -- model resolution -----------------------------------------------------

def resolve_model(ref: str) -> ModelSpec:
    """A zoo name, or a path to a JSON model file."""
    if ref in MODEL_NAMES:
        return builtin_model(ref)
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        text = path.read_text()  # OSError -> I/O exit code
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{ref}: not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ModelError(f"{ref}: expected a JSON object")
        return model_from_dict(data)
    return builtin_model(ref)  # raises with suggestions


# -- path parsing ---------------------------------------------------------

_PI_TERM = re.compile(r"^([+-]?)(\d*\.?\d*)\*?pi(?:/(\d+\.?\d*))?$")


def parse_coord(text: str) -> float:
    """A float, or a multiple of pi such as ``-2pi/3`` or ``pi/2``."""
    s = text.strip().replace(" ", "")
    m = _PI_TERM.match(s)
    if m:
        sign, num, den = m.groups()
        val = (float(num) if num else 1.0) * np.pi / (float(den) if den else 1.0)
        return -val if sign == "-" else val
    try:
        return float(s)
    except ValueError:
        raise UsageError(f"cannot parse coordinate {text!r}") from None


def parse_waypoints(text: str, n: int) -> np.ndarray:
    """``"x1,y1;x2,y2;..."`` into an array of shape ``(w, n)``, ``w >= 1``."""
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        coords = [parse_coord(c) for c in chunk.split(",")]
        if len(coords) != n:
            raise UsageError(f"waypoint {chunk!r} has {len(coords)} coordinates; the base has {n}")
        pts.append(coords)
    if not pts:
        raise UsageError("empty waypoint list")
    W = np.array(pts, dtype=float)
    if not np.all(np.isfinite(W)):
        raise UsageError("waypoints must be finite")
    return W


def polyline(W: np.ndarray, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """``samples`` points evenly spaced by arc length along the waypoints, ends included."""
    if W.shape[0] == 1 or samples == 1:
        return np.zeros(1), W[:1].copy()
    seg = np.linalg.norm(np.diff(W, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0:
        return np.zeros(samples), np.repeat(W[:1], samples, axis=0)
    t = np.linspace(0.0, cum[-1], samples)
    B = np.stack([np.interp(t, cum, W[:, j]) for j in range(W.shape[1])], axis=1)
    return t, B


def diagonal_path(model: ModelSpec, samples: int) -> tuple[np.ndarray, np.ndarray]:
    if model.backend == "torus":
        t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False) if samples > 1 else np.zeros(1)
    else:
        t = np.linspace(-model.box, model.box, samples)
    return t, np.repeat(t[:, None], model.n, axis=1)


def spectrum_rows(model: ModelSpec, path: str, samples: int) -> tuple[list[str], list[list]]:
    if samples < 1:
        raise UsageError("--samples must be at least 1")
    names = list(model_char_poly(model).names)
    if path == "diag":
        t, B = diagonal_path(model, samples)
    else:
        t, B = polyline(parse_waypoints(path, model.n), samples)
    bands = np.linalg.eigvalsh(model.hamiltonian.matrices(B))
    header = ["t"] + [f"b_{v}" for v in names] + [f"band_{i}" for i in range(model.k)]
    cols = [t[:, None], B, bands]
    if path == "diag" and model.name == "gyroid":
        closed = gyroid_diagonal_closed_forms(t)
        header += [f"closed_{i}" for i in range(model.k)] + ["max_abs_error"]
        cols += [closed, np.max(np.abs(bands - closed), axis=1, keepdims=True)]
    data = np.concatenate(cols, axis=1)
    return header, [[repr(float(v)) for v in row] for row in data]


# -- subcommands ----------------------------------------------------------

def cmd_models(args) -> int:
    if args.dump:
        model = builtin_model(args.dump)
        text = json.dumps(model.to_dict(), indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    for name in MODEL_NAMES:
        m = builtin_model(name)
        print(f"{name:15s} k={m.k} n={m.n} {m.backend:6s} {m.description}")
    return EXIT_OK


def _finder_options(args) -> FinderOptions:
    return FinderOptions(grid=args.grid, grad_tol=args.grad_tol, val_tol=args.val_tol,
                         root_tol=args.root_tol, threads=args.threads)


def cmd_analyze(args) -> int:
    model = resolve_model(args.model)
    region = RegionOptions(box=model.box, threads=args.threads)
    report = build_report(model, _finder_options(args), region, args.region_grid)
    print(report.render_text())
    if args.json:
        text = report.to_json() + "\n"
        if args.json == "-":
            sys.stdout.write(text)
        else:
            Path(args.json).write_text(text)
    return EXIT_OK


def cmd_region(args) -> int:
    model = resolve_model(args.model)
    cp = model_char_poly(model)
    opts = RegionOptions(box=model.box, disc_tol=args.disc_tol, threads=args.threads)
    samples = sample_region(cp, args.grid or region_grid_for(model.n), opts)
    out = args.out or f"{model.name}_region.{args.format}"
    export(samples, args.format, out, model.name, boundary_curves(model, cp))
    lo_hi = ", ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in samples.ranges())
    print(f"{model.name}: {len(samples)} samples, ranges {lo_hi}, "
          f"{len(samples.contacts)} discriminant contact(s) -> {out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    model = resolve_model(args.model)
    header, rows = spectrum_rows(model, args.path, args.samples)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    defaults = FinderOptions()
    p = argparse.ArgumentParser(prog="swallowtail",
                                description="Level crossings of periodic graph Hamiltonians.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: $SWALLOWTAIL_THREADS or min(4, cpus))")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("models", help="list zoo models or dump one as a model file")
    m.add_argument("--dump", metavar="NAME")
    m.add_argument("--out", help="write the dump here instead of stdout")
    m.set_defaults(func=cmd_models)

    a = sub.add_parser("analyze", help="critical points, classification and region summary")
    a.add_argument("model", help="zoo name or path to a JSON model file")
    a.add_argument("--grid", type=_positive_int, default=defaults.grid, help="seed grid per axis")
    a.add_argument("--grad-tol", type=_positive_float, default=defaults.grad_tol)
    a.add_argument("--val-tol", type=_positive_float, default=defaults.val_tol)
    a.add_argument("--root-tol", type=_positive_float, default=defaults.root_tol,
                   help="root clustering tolerance, relative to 1 + max|root|")
    a.add_argument("--region-grid", type=_positive_int, default=None)
    a.add_argument("--json", metavar="OUT", help="write the JSON report ('-' for stdout)")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("region", help="sample the characteristic region and export it")
    r.add_argument("model")
    r.add_argument("--grid", type=_positive_int, default=None)
    r.add_argument("--disc-tol", type=_positive_float, default=RegionOptions.disc_tol)
    r.add_argument("--format", choices=FORMATS, default="csv")
    r.add_argument("--out")
    r.set_defaults(func=cmd_region)

    s = sub.add_parser("spectrum", help="bands along a path in the base")
    s.add_argument("model")
    s.add_argument("--path", default="diag",
                   help="'diag' or waypoints like '0,0;2pi/3,-2pi/3'")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help/--version, 2 otherwise
        return int(exc.code or 0)
    try:
        if getattr(args, "grid", None) is not None and args.command == "region" and args.grid < 2:
            raise UsageError("--grid must be at least 2")
        worker_count(args.threads)
        return args.func(args)
    except UsageError as exc:
        print(f"swallowtail: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"swallowtail: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"swallowtail: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # e.g. a malformed SWALLOWTAIL_THREADS
        print(f"swallowtail: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
