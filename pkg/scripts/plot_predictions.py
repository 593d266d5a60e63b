#!/usr/bin/env python3
"""Plot prediction files written by ``swdgp fit-grid`` / ``swdgp fit-latent``.

    python3 scripts/plot_predictions.py pred.csv [--data train.csv] [--out pred.png]

``load`` is importable on its own and needs only numpy.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np


def load(path) -> dict:
    """Parse a prediction file into ``{"config": dict, column: ndarray, ...}``.

    Accepts the CSV layout (comment line with the JSON config, header row,
    data rows) and the JSON layout.
    """
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        out = {"config": doc.get("config", {})}
        out.update({k: np.asarray(v, dtype=float) for k, v in doc["columns"].items()})
        return out
    lines = text.splitlines()
    config = {}
    while lines and lines[0].startswith("#"):
        config = json.loads(lines.pop(0)[1:])
    header = lines.pop(0).split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines if ln.strip()], dtype=float)
    data = data.reshape(-1, len(header))
    out = {"config": config}
    out.update({name: data[:, i] for i, name in enumerate(header)})
    return out


def load_sidecar(path) -> dict:
    doc = json.loads(Path(path).read_text())
    for key in ("grid", "g_bar", "posterior_variance", "chi", "lambda", "epsilon", "delta", "phi"):
        if key in doc:
            doc[key] = np.asarray(doc[key], dtype=float)
    return doc


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("predictions")
    ap.add_argument("--data", help="training CSV to overlay")
    ap.add_argument("--sidecar", help="fit-latent sidecar JSON; plots g_bar at the grid")
    ap.add_argument("--out", help="image path (default: alongside the predictions)")
    args = ap.parse_args(argv)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pred = load(args.predictions)
    x, mu = pred["x"], pred["mean"]
    sd = np.sqrt(pred["variance"])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, mu, color="tab:blue", label="mean")
    ax.plot(x, mu + sd, "--", color="goldenrod", lw=0.8)
    ax.plot(x, mu - sd, "--", color="goldenrod", lw=0.8)
    if args.data:
        d = np.genfromtxt(args.data, delimiter=",", comments="#", names=None)
        d = d[~np.isnan(d).any(axis=1)]
        ax.plot(d[:, 0], d[:, 1], ".", color="tab:red", ms=3, label="data")
    if args.sidecar:
        side = load_sidecar(args.sidecar)
        ax.plot(side["grid"], side["g_bar"], "s", color="k", ms=4, label="projected grid values")
    ax.set_xlabel("x")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = args.out or str(Path(args.predictions).with_suffix(".png"))
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
