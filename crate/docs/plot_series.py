#!/usr/bin/env python3
"""Plot the files written by `lgfront plot-data`.

usage: plot_series.py DIR [OUTPUT.png]

Needs numpy and matplotlib.
"""
import sys
from pathlib import Path

import numpy as np
import matplotlib.pyplot as plt


def read(path):
    meta = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(" = ")
            meta[key] = value
    return meta, np.genfromtxt(path, delimiter=",", names=True, comments="#")


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    d = Path(sys.argv[1])
    _, fronts = read(d / "fronts.csv")
    meta, span = read(d / "span.csv")
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax1.plot(fronts["t"], fronts["g"], label="g(t)")
    ax1.plot(fronts["t"], fronts["h"], label="h(t)")
    ax1.set_ylabel("front position")
    ax1.legend()
    ax2.plot(span["t"], span["span"], label="h - g")
    if "span_crit" in meta:
        ax2.axhline(float(meta["span_crit"]), color="k", ls="--", label="critical span")
    ax2.set_xlabel("t")
    ax2.set_ylabel("span")
    ax2.legend()
    fig.tight_layout()
    out = sys.argv[2] if len(sys.argv) > 2 else str(d / "fronts.png")
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
