"""Helpers shared by the experiment scripts."""
from __future__ import annotations

import csv
from pathlib import Path

RESULTS = Path(__file__).resolve().parents[1] / "results"


def out_dir(name: str) -> Path:
    d = RESULTS / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_columns(path: Path, **cols) -> None:
    names = list(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols.values()):
            w.writerow(["%.17g" % v for v in row])
    print(f"wrote {path}")
