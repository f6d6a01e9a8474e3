"""Deterministic writers for the experiment outputs.

All numbers are formatted with %.17g so repeated runs of the same
configuration produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError


def _fmt(x):
    return "%.17g" % float(x)


def write_profile_csv(path, x, columns, samples=None):
    """1D profile table: x,mean,std,coarse,fine,error[,sample_0..].

    `columns` maps the fixed names to equal-length arrays over the nodes in
    the order of `x`; `samples` is an optional (n_nodes, k) array.
    """
    names = ["mean", "std", "coarse", "fine", "error"]
    missing = [n for n in names if n not in columns]
    if missing:
        raise InvalidArgumentError(f"missing profile columns {missing}")
    header = ["x"] + names
    k = 0 if samples is None else samples.shape[1]
    header += [f"sample_{j}" for j in range(k)]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r, xv in enumerate(x):
            row = [_fmt(xv)] + [_fmt(columns[n][r]) for n in names]
            if k:
                row += [_fmt(samples[r, j]) for j in range(k)]
            fh.write(",".join(row) + "\n")


def write_vtk(path, mesh, point_data):
    """Legacy-ASCII VTK unstructured grid with named scalar point arrays."""
    if mesh.dim != 2:
        raise InvalidArgumentError("VTK output supports 2D meshes only")
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("bayesfem fields\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for xv, yv in mesh.nodes:
            fh.write(f"{_fmt(xv)} {_fmt(yv)} 0\n")
        ne = mesh.n_elements
        fh.write(f"CELLS {ne} {4 * ne}\n")
        for a, b, c in mesh.elements:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {ne}\n")
        fh.write("5\n" * ne)
        fh.write(f"POINT_DATA {mesh.n_nodes}\n")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if len(values) != mesh.n_nodes:
                raise InvalidArgumentError(
                    f"array {name!r} has length {len(values)}, expected {mesh.n_nodes}"
                )
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in values:
                fh.write(_fmt(v) + "\n")


def write_triplets(path, A):
    """Sparse matrix as `row col value` lines (sorted by column, then row)."""
    A = A.tocsc()
    A.sort_indices()
    coo = A.tocoo()
    order = np.lexsort((coo.row, coo.col))
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {_fmt(v)}\n")


def write_ensemble_csv(path, ensemble):
    """Ensemble matrix, one column per sample."""
    X = ensemble.X
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(f"sample_{j}" for j in range(X.shape[1])) + "\n")
        for row in X:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
