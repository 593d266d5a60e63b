"""Command-line interface: ``swdgp fit-grid``, ``swdgp fit-latent`` and ``swdgp bench``.

Exit status is 0 on success, 2 for usage or input errors and 3 for numerical
or admissibility failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bench import EXACT_MAX_N, FUNCTIONS, METHODS, BenchConfig, reports_to_csv, reports_to_json, run_benchmark
from .exact import FactorizationError
from .gridgp import grid_fit, grid_predict, grid_predict_fft
from .kernel import GridSpec, KernelParams, PositivityError, auto_length_scale
from .latent import LatentFitError, latent_fit, latent_predict, posterior_covariance_diag, residual_diagnostic

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

GRID_TOL = 1e-9


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return "%.17g" % v


def read_xy(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read ``x, y`` rows from a CSV file, with or without a header row.

    Lines starting with ``#`` and blank lines are skipped.  Returns 1-D arrays.
    """
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    rows = [[c.strip() for c in r] for r in rows if any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    xs, ys = [], []
    for lineno, r in enumerate(rows, start=1):
        if len(r) != 2:
            raise UsageError(f"data row {lineno}: expected 2 columns (x, y), got {len(r)}")
        try:
            xs.append(float(r[0]))
            ys.append(float(r[1]))
        except ValueError as exc:
            raise UsageError(f"data row {lineno}: {exc}") from None
    return np.array(xs, dtype=float), np.array(ys, dtype=float)


def detect_grid(x: np.ndarray, lower=None, upper=None) -> GridSpec:
    """Regular grid through the rows of ``x`` (in file order), or a UsageError naming the first stray row."""
    M = x.shape[0]
    if M == 0:
        raise UsageError("input has no data rows")
    lo = x[0] if lower is None else lower
    hi = x[-1] if upper is None else upper
    if M == 1:
        if lower is not None and abs(x[0] - lower) > GRID_TOL:
            raise UsageError(f"data row 1 (x={_fmt(x[0])}) is not the declared grid point {_fmt(lower)}")
        return GridSpec((float(x[0]),), (1.0,), (1,))
    if not hi > lo:
        raise UsageError("grid rows must be in increasing order of x")
    grid = GridSpec.uniform(float(lo), float(hi), M)
    expected = grid.axis()
    off = np.abs(x - expected) > GRID_TOL * grid.spacing[0]
    if off.any():
        j = int(np.flatnonzero(off)[0])
        raise UsageError(
            f"data row {j + 1} (x={_fmt(x[j])}) is off the grid: expected x={_fmt(expected[j])} "
            f"for {M} points evenly spaced on [{_fmt(lo)}, {_fmt(hi)}]"
        )
    return grid


def _length_scale(args, grid: GridSpec, band: int) -> float:
    if args.auto_length_scale:
        try:
            return auto_length_scale(grid, band)
        except ValueError as exc:
            raise UsageError(f"--auto-length-scale: {exc}") from None
    if args.length_scale is None:
        raise UsageError("one of --length-scale or --auto-length-scale is required")
    if not args.length_scale > 0:
        raise UsageError("--length-scale must be positive")
    return args.length_scale


def _params(args, ell: float) -> KernelParams:
    if not args.signal_std > 0:
        raise UsageError("--signal-std must be positive")
    if args.noise_std < 0:
        raise UsageError("--noise-std must be non-negative")
    return KernelParams(args.signal_std**2, ell, args.noise_std**2)


def _test_lattice(args, grid: GridSpec) -> np.ndarray:
    if args.test_points < 1:
        raise UsageError("--test-points must be >= 1")
    lo = grid.origin[0]
    hi = lo + (grid.count[0] - 1) * grid.spacing[0]
    if grid.count[0] == 1:
        lo, hi = lo - 1.0, lo + 1.0
    return np.linspace(lo, hi, args.test_points)


def _config_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def write_predictions(path, config: dict, xs, pred, fmt: str = "csv") -> None:
    cols = {"x": xs, "mean": pred.mean, "variance": pred.variance}
    if pred.observation_variance is not None:
        cols["observation_variance"] = pred.observation_variance
    fh, close = _open_out(path)
    try:
        if fmt == "json":
            doc = {"config": config, "n_clamped": pred.n_clamped, "columns": {k: [float(v) for v in a] for k, a in cols.items()}}
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            return
        fh.write("# " + json.dumps(config, sort_keys=True) + "\n")
        fh.write(",".join(cols) + "\n")
        for row in zip(*cols.values()):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if close:
            fh.close()


def cmd_fit_grid(args) -> int:
    x, y = read_xy(args.input)
    if args.grid_size is not None and args.grid_size != x.shape[0]:
        raise UsageError(f"--grid-size {args.grid_size} but the input has {x.shape[0]} rows")
    grid = detect_grid(x, args.grid_lower, args.grid_upper)
    ell = _length_scale(args, grid, args.band)
    params = _params(args, ell)
    model = grid_fit(grid, y, params, args.band)
    xs = _test_lattice(args, grid)
    predict = grid_predict if args.method == "direct" else grid_predict_fft
    pred = predict(model, xs)
    cfg = _config_dict(args) | {"resolved_length_scale": ell, "grid_spacing": grid.spacing[0], "n_clamped": pred.n_clamped}
    write_predictions(args.output, cfg, xs, pred, args.format)
    if pred.n_clamped:
        print(f"warning: {pred.n_clamped} negative predictive variances were clamped to zero", file=sys.stderr)
    return EXIT_OK


def _sidecar_path(args) -> str | None:
    if args.sidecar:
        return args.sidecar
    if args.output in (None, "-"):
        return None
    return str(Path(args.output).with_suffix(".json")) if args.format == "csv" else args.output + ".sidecar.json"


def cmd_fit_latent(args) -> int:
    x, y = read_xy(args.input)
    if not args.noise_std > 0:
        raise UsageError("fit-latent needs --noise-std > 0: the projection divides by the per-point noise variance")
    if x.size == 0:
        print("warning: no data rows; predictions are the prior", file=sys.stderr)
    lo = args.grid_lower if args.grid_lower is not None else (float(x.min()) if x.size else 0.0)
    hi = args.grid_upper if args.grid_upper is not None else (float(x.max()) if x.size else 1.0)
    if args.grid_size < 1:
        raise UsageError("--grid-size must be >= 1")
    if args.grid_size > 1 and not hi > lo:
        raise UsageError("the grid needs upper > lower; pass --grid-lower/--grid-upper")
    grid = GridSpec.uniform(lo, hi, args.grid_size)
    ell = _length_scale(args, grid, args.band)
    params = _params(args, ell)
    model = latent_fit(x, y, params, args.band, args.order, grid=grid)
    xs = _test_lattice(args, grid)
    pred = latent_predict(model, xs)
    diag = residual_diagnostic(model)
    cfg = _config_dict(args) | {"resolved_length_scale": ell, "grid_spacing": grid.spacing[0], "n_data": int(x.size)}
    write_predictions(args.output, cfg, xs, pred, args.format)
    side = _sidecar_path(args)
    if side is not None:
        doc = {
            "config": cfg,
            "grid": [float(v) for v in grid.axis()],
            "g_bar": [float(v) for v in model.g_bar],
            "posterior_variance": [float(v) for v in posterior_covariance_diag(model)],
            "chi": [float(v) for v in model.chi],
            "lambda": [float(v) for v in model.lam],
            "epsilon": [float(v) for v in model.epsilon],
            "delta": [float(v) for v in model.delta],
            "phi": [float(v) for v in model.pairs.phi],
            "n_floored": model.n_floored,
            "residual_diagnostic": diag.as_dict(),
        }
        Path(side).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if not diag.valid:
        print(
            f"warning: perturbation may be inaccurate (std/mean ratios {diag.diag_ratio:.3g}, "
            f"{diag.offdiag_ratio:.3g} exceed {diag.threshold})",
            file=sys.stderr,
        )
    return EXIT_OK


def _split_list(values, conv, flag):
    out = []
    for v in values or []:
        for part in str(v).split(","):
            part = part.strip()
            if part:
                try:
                    out.append(conv(part))
                except ValueError:
                    raise UsageError(f"{flag}: cannot parse {part!r}") from None
    return out


def cmd_bench(args) -> int:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: {exc}") from None
    methods = _split_list(args.method, str, "--method") or base.get("methods", ["lgswd-3"])
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {', '.join(bad)}; valid methods: {', '.join(METHODS)}")
    n_values = _split_list(args.n, lambda s: int(float(s)), "--n") or base.get("n_values", [1000])
    seeds = _split_list(args.seed, int, "--seed") or base.get("seeds", [0])
    if "exact" in methods and any(n > EXACT_MAX_N for n in n_values):
        raise UsageError(
            f"exact GP refused for N > {EXACT_MAX_N}: its O(N^3) dense solve would dominate the run; "
            "drop 'exact' or lower --n"
        )
    fields = dict(base)
    fields.update(methods=tuple(methods), n_values=tuple(n_values), seeds=tuple(seeds))
    for key, val in (
        ("function", args.function),
        ("grid_size", args.grid_size),
        ("signal_std", args.signal_std),
        ("noise_std", args.noise_std),
        ("length_scale", args.length_scale),
        ("order", args.order),
        ("repeats", args.repeats),
        ("n_test", args.test_points),
    ):
        if val is not None:
            fields[key] = val
    if args.deterministic:
        fields["deterministic"] = True
    if args.fig2_text:
        fields["fig2_text"] = True
    try:
        cfg = BenchConfig(**fields)
    except (TypeError, ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    reports = run_benchmark(cfg)
    text = reports_to_json(reports, cfg) if args.format == "json" else reports_to_csv(reports, cfg)
    fh, close = _open_out(args.output)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _kernel_flags(p: argparse.ArgumentParser, noise_default: float) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--length-scale", type=float, help="SE length scale")
    g.add_argument("--auto-length-scale", action="store_true", help="0.75 of the admissible maximum for the band order")
    p.add_argument("--signal-std", type=float, default=1.0, help="kernel standard deviation sigma (default 1)")
    p.add_argument("--noise-std", type=float, default=noise_default, help=f"observation noise std (default {noise_default})")
    p.add_argument("--band", type=int, choices=(3, 5), default=3, help="band order of the grid kernel")


def _io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV of x,y rows ('-' for stdin); header optional")
    p.add_argument("--output", default="-", help="prediction file ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--test-points", type=int, default=500, help="evenly spaced test points over the grid span")
    p.add_argument("--grid-lower", type=float, help="first grid node (default: smallest x)")
    p.add_argument("--grid-upper", type=float, help="last grid node (default: largest x)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swdgp", description="Standing-wave decomposition GP regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-grid", help="exact SWD-GP on data lying on a regular grid")
    _io_flags(p)
    _kernel_flags(p, 0.0)
    p.add_argument("--grid-size", type=int, help="expected number of grid rows")
    p.add_argument("--method", choices=("fft", "direct"), default="fft", help="prediction path")
    p.set_defaults(func=cmd_fit_grid)

    p = sub.add_parser("fit-latent", help="latent-grid SWD-GP on scattered 1-D data")
    _io_flags(p)
    _kernel_flags(p, 0.1)
    p.add_argument("--grid-size", type=int, default=20, help="number of latent grid nodes M")
    p.add_argument("--order", type=int, choices=(1, 2), default=1, help="perturbation order")
    p.add_argument("--sidecar", help="path of the JSON sidecar (default: output path with .json)")
    p.set_defaults(func=cmd_fit_latent)

    p = sub.add_parser("bench", help="synthetic accuracy and timing benchmark")
    p.add_argument("--config", help="JSON file with BenchConfig fields; flags override it")
    p.add_argument("--method", "--methods", dest="method", action="append", help=f"comma list from {', '.join(METHODS)}")
    p.add_argument("--n", action="append", help="training set sizes (comma list or repeated)")
    p.add_argument("--seed", "--seeds", dest="seed", action="append", help="seeds (comma list or repeated)")
    p.add_argument("--function", choices=sorted(FUNCTIONS))
    p.add_argument("--grid-size", type=int, help="latent grid size M (default 300)")
    p.add_argument("--signal-std", type=float)
    p.add_argument("--noise-std", type=float)
    p.add_argument("--length-scale", type=float, help="fixed length scale (default: automatic)")
    p.add_argument("--order", type=int, choices=(1, 2))
    p.add_argument("--repeats", type=int, help="timing repetitions; the median is reported")
    p.add_argument("--test-points", type=int)
    p.add_argument("--deterministic", action="store_true", help="omit timings and machine details")
    p.add_argument("--fig2-text", action="store_true", help="use the 24*pi variant of the fig2 target")
    p.add_argument("--output", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_bench)
    return parser


def _admissibility_message(exc: PositivityError, args) -> str:
    msg = f"error: {exc}"
    if exc.bound is not None and not math.isinf(exc.bound):
        msg += f"\nadmissible bound: length_scale/spacing < {exc.bound:.6g} for band order {args.band}"
    return msg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"swdgp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"swdgp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PositivityError as exc:
        print(_admissibility_message(exc, args), file=sys.stderr)
        return EXIT_NUMERIC
    except (FactorizationError, LatentFitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"swdgp {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
