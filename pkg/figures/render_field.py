#!/usr/bin/env python3
"""Render a 2D scalar field map from a legacy-ASCII VTK unstructured grid.

Usage: render_field.py <fields.vtk> <array> <out.png>

The color scale auto-ranges to the data; the range is printed in the figure
margin and echoed on stdout as `range=[lo, hi]`.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import matplotlib.tri as mtri

from figio import read_vtk


def render(vtk_path, array, out_path):
    points, triangles, arrays = read_vtk(vtk_path)
    if array not in arrays:
        raise SystemExit(
            f"{vtk_path}: no point array named {array!r} "
            f"(available: {', '.join(sorted(arrays))})"
        )
    values = arrays[array]
    tri = mtri.Triangulation(points[:, 0], points[:, 1], triangles)

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    im = ax.tripcolor(tri, values, shading="gouraud", cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_aspect("equal")
    ax.set_title(array)
    lo, hi = float(values.min()), float(values.max())
    fig.text(0.01, 0.01, f"range=[{lo:.6g}, {hi:.6g}]", fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    print(f"range=[{lo:.6g}, {hi:.6g}]")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("vtk")
    parser.add_argument("array")
    parser.add_argument("out")
    args = parser.parse_args(argv)
    render(args.vtk, args.array, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
