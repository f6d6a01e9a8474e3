#!/usr/bin/env python3
"""Render a 1D mean / credible-band / sample-overlay figure from a profile CSV.

Usage: render_band.py <profile.csv> <out.png> [--samples N]

The shaded band is mean +/- 1.96 * std (95% credible interval); the coarse
and fine reference solutions are overlaid, plus up to N sample paths.
Prints `band_multiplier=` and `samples=` metadata on stdout.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from figio import read_profile_csv

BAND_MULTIPLIER = 1.96


def render(csv_path, out_path, max_samples=30):
    table, samples = read_profile_csv(csv_path)
    for required in ("x", "mean", "std", "coarse", "fine"):
        if required not in table:
            raise SystemExit(f"{csv_path}: missing required column {required!r}")
    x = table["x"]
    k = min(max_samples, samples.shape[1])

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    lo = table["mean"] - BAND_MULTIPLIER * table["std"]
    hi = table["mean"] + BAND_MULTIPLIER * table["std"]
    ax.fill_between(x, lo, hi, color="0.8", label="95% credible band")
    for j in range(k):
        ax.plot(x, samples[:, j], color="tab:blue", lw=0.4, alpha=0.4,
                label="samples" if j == 0 else None)
    ax.plot(x, table["mean"], color="tab:red", lw=1.5, label="posterior mean")
    ax.plot(x, table["coarse"], color="k", ls="--", lw=1.0, label="coarse solution")
    ax.plot(x, table["fine"], color="k", ls=":", lw=1.0, label="fine solution")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    print(f"band_multiplier={BAND_MULTIPLIER}")
    print(f"samples={k}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("out")
    parser.add_argument("--samples", type=int, default=30)
    args = parser.parse_args(argv)
    render(args.csv, args.out, args.samples)
    return 0


if __name__ == "__main__":
    sys.exit(main())
