"""Readers for the solver's delimited outputs (profile CSV, legacy-ASCII VTK)."""

import csv

import numpy as np


def read_profile_csv(path):
    """Read a 1D profile table into {column name: array}; samples grouped."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.asarray(rows[1:], dtype=float)
    table = {name: data[:, j] for j, name in enumerate(header)}
    sample_names = [n for n in header if n.startswith("sample_")]
    samples = (np.column_stack([table[n] for n in sample_names])
               if sample_names else np.empty((len(data), 0)))
    return table, samples


def read_vtk(path):
    """Read points, triangles, and scalar point arrays from a legacy VTK file."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    points, triangles, arrays = None, None, {}
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if parts[:1] == ["POINTS"]:
            n = int(parts[1])
            points = np.asarray(
                [lines[i + 1 + k].split() for k in range(n)], dtype=float
            )[:, :2]
            i += n + 1
        elif parts[:1] == ["CELLS"]:
            n = int(parts[1])
            triangles = np.asarray(
                [lines[i + 1 + k].split()[1:] for k in range(n)], dtype=int
            )
            i += n + 1
        elif parts[:1] == ["SCALARS"]:
            name = parts[1]
            n = len(points)
            arrays[name] = np.asarray(lines[i + 2:i + 2 + n], dtype=float)
            i += n + 2
        else:
            i += 1
    if points is None or triangles is None:
        raise ValueError(f"{path}: not a recognizable unstructured-grid VTK file")
    return points, triangles, arrays
