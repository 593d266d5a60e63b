"""Synthetic benchmarks: data generation, SMSE, region analysis and timing.

SMSE here is the mean squared error divided by the population variance of the
true test values.  Region SMSEs standardise by the variance of the truth inside
the region; the per-region MSE and counts are reported alongside so the
overall figure can be recomputed.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .exact import exact_fit, exact_predict
from .gridgp import grid_fit, grid_predict_fft
from .kernel import GridSpec, KernelParams, auto_length_scale
from .latent import latent_fit, latent_predict, residual_diagnostic

__all__ = [
    "FUNCTIONS",
    "METHODS",
    "REGION_EDGES",
    "SyntheticSpec",
    "Dataset",
    "RegionReport",
    "BenchConfig",
    "BenchReport",
    "target_function",
    "generate",
    "smse",
    "region_index",
    "region_reports",
    "run_benchmark",
    "reports_to_csv",
    "reports_to_json",
    "machine_info",
]


def _fig2(x):
    return x * np.cos(2 * np.pi * x) * np.sin(4 * np.pi * (x + 0.03))


def _fig2_text(x):
    return x * np.cos(2 * np.pi * x) * np.sin(24 * np.pi * (x + 0.03))


def _fig4(x):
    return np.cos(2 * np.pi * x) * np.sin(12 * np.pi * x)


def _fig5(x):
    return x * np.cos(8 * np.pi * (x + 0.15)) * np.cos(2 * np.pi * x)


def _sim7(x):
    return np.sin(5 * np.pi / (x + 0.1))


FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "fig2": _fig2,
    "fig4": _fig4,
    "fig5": _fig5,
    "sim7": _sim7,
}

METHODS = ("exact", "swd-grid", "lgswd-3", "lgswd-5")
REGION_EDGES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
EXACT_MAX_N = 5000


def target_function(name: str, fig2_text: bool = False) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form target for a function id.  ``fig2_text`` picks the 24*pi variant of fig2."""
    if name not in FUNCTIONS:
        raise KeyError(f"unknown function id {name!r}; choose from {sorted(FUNCTIONS)}")
    if name == "fig2" and fig2_text:
        return _fig2_text
    return FUNCTIONS[name]


@dataclass(frozen=True)
class SyntheticSpec:
    function: str = "sim7"
    n: int = 1000
    noise_std: float = 0.2
    seed: int = 0
    n_test: int = 500
    fig2_text: bool = False
    # draw x on an even N-point lattice instead of uniformly at random
    on_grid: bool = False

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise KeyError(f"unknown function id {self.function!r}; choose from {sorted(FUNCTIONS)}")
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    X_test: np.ndarray
    f_test: np.ndarray
    spec: SyntheticSpec


def generate(spec: SyntheticSpec) -> Dataset:
    """Draw ``spec.n`` noisy samples of the target on [0, 1] plus the evenly spaced test lattice."""
    f = target_function(spec.function, spec.fig2_text)
    rng = np.random.default_rng(spec.seed)
    if spec.on_grid:
        X = np.linspace(0.0, 1.0, spec.n)
    else:
        X = rng.uniform(0.0, 1.0, spec.n)
    y = f(X) + spec.noise_std * rng.standard_normal(spec.n)
    X_test = np.linspace(0.0, 1.0, spec.n_test)
    return Dataset(X, y, X_test, f(X_test), spec)


def smse(predictions, truths) -> float:
    predictions = np.asarray(predictions, dtype=float).reshape(-1)
    truths = np.asarray(truths, dtype=float).reshape(-1)
    if predictions.shape != truths.shape:
        raise ValueError(f"length mismatch: {predictions.size} predictions, {truths.size} truths")
    if truths.size < 2:
        raise ValueError("SMSE needs at least two values")
    var = float(np.var(truths))
    if var == 0.0:
        raise ValueError("SMSE is undefined for constant truths")
    return float(np.mean((predictions - truths) ** 2) / var)


def region_index(x) -> np.ndarray:
    """Region of each point: [0, .2) -> 0, [.2, .4) -> 1, ..., [.8, 1] -> 4."""
    x = np.asarray(x, dtype=float)
    return np.clip(np.floor(x * 5.0), 0, 4).astype(int)


@dataclass(frozen=True)
class RegionReport:
    lower: float
    upper: float
    n_test: int
    n_train: int
    mse: float
    smse: float


def region_reports(X_test, predictions, truths, X_train) -> list[RegionReport]:
    rt = region_index(X_test)
    rn = np.bincount(region_index(X_train), minlength=5) if np.size(X_train) else np.zeros(5, int)
    err = (np.asarray(predictions) - np.asarray(truths)) ** 2
    out = []
    for r in range(5):
        sel = rt == r
        n = int(sel.sum())
        mse = float(err[sel].mean()) if n else math.nan
        var = float(np.var(truths[sel])) if n else 0.0
        out.append(RegionReport(REGION_EDGES[r], REGION_EDGES[r + 1], n, int(rn[r]), mse, mse / var if var > 0 else math.nan))
    return out


@dataclass(frozen=True)
class BenchConfig:
    function: str = "sim7"
    methods: tuple[str, ...] = ("lgswd-3",)
    n_values: tuple[int, ...] = (1000,)
    seeds: tuple[int, ...] = (0,)
    grid_size: int = 300
    signal_std: float = 0.5
    noise_std: float = 0.2
    # None picks 0.75 of the admissible maximum for each band order
    length_scale: float | None = None
    exact_length_scale: float | None = None
    order: int = 1
    repeats: int = 3
    deterministic: bool = False
    n_test: int = 500
    fig2_text: bool = False

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
        if "exact" in self.methods:
            big = [n for n in self.n_values if n > EXACT_MAX_N]
            if big:
                raise ValueError(
                    f"exact GP refused for N = {big}: the dense O(N^3) solve is limited to N <= {EXACT_MAX_N}"
                )
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        target_function(self.function)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BenchReport:
    method: str
    function: str
    n: int
    m: int
    band_order: int | None
    order: int | None
    seed: int
    length_scale: float
    smse: float
    regions: list[RegionReport] = field(default_factory=list)
    fit_time: float | None = None
    predict_time: float | None = None
    n_clamped: int = 0
    n_floored: int = 0
    diag_ratio: float | None = None
    offdiag_ratio: float | None = None
    residual_max: float | None = None
    perturbation_valid: bool | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _timed(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def _run_cell(cfg: BenchConfig, method: str, n: int, seed: int) -> BenchReport:
    s2 = cfg.signal_std**2
    nv = cfg.noise_std**2
    spec = SyntheticSpec(cfg.function, n, cfg.noise_std, seed, cfg.n_test, cfg.fig2_text, on_grid=method == "swd-grid")
    data = generate(spec)
    Xs = data.X_test
    extra = {}
    if method == "exact":
        ell = cfg.exact_length_scale or cfg.length_scale
        if ell is None:
            ell = auto_length_scale(GridSpec.uniform(0.0, 1.0, cfg.grid_size), 3)
        params = KernelParams(s2, ell, nv)
        model, t_fit = _timed(lambda: exact_fit(data.X, data.y, params), cfg.repeats)
        pred, t_pred = _timed(lambda: exact_predict(model, Xs), cfg.repeats)
        m, band, order = 0, None, None
    elif method == "swd-grid":
        grid = GridSpec.uniform(0.0, 1.0, n)
        ell = cfg.length_scale or auto_length_scale(grid, 3)
        params = KernelParams(s2, ell, nv)
        model, t_fit = _timed(lambda: grid_fit(grid, data.y, params, 3), cfg.repeats)
        pred, t_pred = _timed(lambda: grid_predict_fft(model, Xs), cfg.repeats)
        m, band, order = n, 3, None
    else:
        band = int(method[-1])
        grid = GridSpec.uniform(0.0, 1.0, cfg.grid_size)
        ell = cfg.length_scale or auto_length_scale(grid, band)
        params = KernelParams(s2, ell, nv)
        model, t_fit = _timed(lambda: latent_fit(data.X, data.y, params, band, cfg.order, grid=grid), cfg.repeats)
        pred, t_pred = _timed(lambda: latent_predict(model, Xs), cfg.repeats)
        diag = residual_diagnostic(model)
        extra = dict(
            n_floored=model.n_floored,
            diag_ratio=diag.diag_ratio,
            offdiag_ratio=diag.offdiag_ratio,
            residual_max=diag.residual_max,
            perturbation_valid=diag.valid,
        )
        m, order = cfg.grid_size, cfg.order
    keep_time = not cfg.deterministic
    return BenchReport(
        method=method,
        function=cfg.function,
        n=n,
        m=m,
        band_order=band,
        order=order,
        seed=seed,
        length_scale=float(ell),
        smse=smse(pred.mean, data.f_test),
        regions=region_reports(Xs, pred.mean, data.f_test, data.X),
        fit_time=t_fit if keep_time else None,
        predict_time=t_pred if keep_time else None,
        n_clamped=pred.n_clamped,
        **extra,
    )


def run_benchmark(config: BenchConfig) -> list[BenchReport]:
    """One report per (method, N, seed), in that nesting order."""
    return [
        _run_cell(config, method, n, seed)
        for method in config.methods
        for n in config.n_values
        for seed in config.seeds
    ]


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
    }


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


CSV_COLUMNS = (
    ["method", "function", "n", "m", "band_order", "order", "seed", "length_scale", "smse"]
    + [f"region{r}_{k}" for r in range(5) for k in ("n_test", "n_train", "mse", "smse")]
    + ["fit_time", "predict_time", "n_clamped", "n_floored", "diag_ratio", "offdiag_ratio", "residual_max", "perturbation_valid"]
)


def _header(config: BenchConfig) -> dict:
    head = {"config": config.as_dict()}
    if not config.deterministic:
        head["machine"] = machine_info()
    return head


def reports_to_csv(reports: list[BenchReport], config: BenchConfig) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_header(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        row = [rep.method, rep.function, rep.n, rep.m, rep.band_order, rep.order, rep.seed, rep.length_scale, rep.smse]
        for reg in rep.regions:
            row += [reg.n_test, reg.n_train, reg.mse, reg.smse]
        row += [rep.fit_time, rep.predict_time, rep.n_clamped, rep.n_floored, rep.diag_ratio, rep.offdiag_ratio, rep.residual_max, rep.perturbation_valid]
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def reports_to_json(reports: list[BenchReport], config: BenchConfig) -> str:
    doc = _header(config)
    doc["reports"] = [r.as_dict() for r in reports]
    # repr round-trips doubles exactly, so the JSON carries all 17 significant digits
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"
