#!/usr/bin/env python3
"""Accuracy, region and timing sweep on the sim7 target (grid of 300 inducing points).

    python3 scripts/sim_benchmark.py [--quick] [--deterministic]
"""
import argparse

from _common import out_dir
from swdgp.bench import BenchConfig, reports_to_csv, reports_to_json, run_benchmark


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller N schedule and one seed")
    ap.add_argument("--deterministic", action="store_true")
    args = ap.parse_args()

    seeds = (0,) if args.quick else (0, 1, 2)
    big = (1000, 3000, 10000) if args.quick else (1000, 3000, 10000, 30000, 100000, 300000)
    d = out_dir("sim")
    configs = [
        BenchConfig(methods=("lgswd-3", "lgswd-5"), n_values=big, seeds=seeds, deterministic=args.deterministic),
        BenchConfig(methods=("exact",), n_values=(1000, 3000), seeds=seeds, deterministic=args.deterministic),
    ]
    for i, cfg in enumerate(configs):
        reports = run_benchmark(cfg)
        (d / f"sweep{i}.csv").write_text(reports_to_csv(reports, cfg))
        (d / f"sweep{i}.json").write_text(reports_to_json(reports, cfg))
        for r in reports:
            t = "" if r.fit_time is None else f" fit {r.fit_time:.4f}s predict {r.predict_time:.4f}s"
            print(f"{r.method:8s} N={r.n:<7d} seed={r.seed} SMSE={r.smse:.4f} "
                  f"[0,.2)={r.regions[0].smse:.3f} (.2,.4)={r.regions[1].smse:.3f}{t}")


if __name__ == "__main__":
    main()
