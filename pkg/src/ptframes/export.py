"""Tabular (CSV) export of frame fields and re-ingestion of position data.

One row per grid node, a single header row naming the columns:
s, x1..xd, T1..Td, then the frame-specific normal vectors and curvature
columns (N/B1[/B2] + kappa1.. for the Frenet frame, M1_..M3_ + k1.. for the
transported frames, plus theta for the rotation-angle construction).
"""

from __future__ import annotations

import csv

import numpy as np

from .curve import SampledCurve, curve_from_positions

__all__ = ["frame_table", "write_frame_csv", "read_positions_csv"]


def frame_table(curve: SampledCurve, field, kind, angles=None):
    """(header, matrix) for a frame field on its grid.

    ``kind`` is "frenet", "pt" or "bishop-angle"; ``angles`` supplies the
    rotation angle column for the bishop-angle table.
    """
    d = curve.dimension
    grid = field.grid
    header = ["s"] + [f"x{i}" for i in range(1, d + 1)]
    columns = [grid.values] + [curve.positions[:, i] for i in range(d)]

    def add_vector(name, rows):
        # single-letter vectors get T1..Td; indexed ones M1_1..M1_d
        sep = "_" if name[-1].isdigit() else ""
        for i in range(d):
            header.append(f"{name}{sep}{i + 1}")
            columns.append(rows[:, i])

    add_vector("T", field.T)
    if kind == "frenet":
        add_vector("N", field.N)
        add_vector("B1", field.B1)
        if field.B2 is not None:
            add_vector("B2", field.B2)
        for i, values in enumerate(field.curvatures, start=1):
            header.append(f"kappa{i}")
            columns.append(values)
    elif kind in ("pt", "bishop-angle"):
        for i, m in enumerate(field.M, start=1):
            add_vector(f"M{i}", m)
        for i, values in enumerate(field.k, start=1):
            header.append(f"k{i}")
            columns.append(values)
        if kind == "bishop-angle":
            header.append("theta")
            columns.append(angles.theta)
    else:
        raise ValueError(f"unknown frame kind {kind!r}")
    return header, np.stack(columns, axis=1)


def write_frame_csv(path, header, matrix):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in matrix:
            writer.writerow([repr(float(x)) for x in row])


def read_positions_csv(path, name=None) -> SampledCurve:
    """Rebuild a sampled curve from the s and position columns of an exported
    table (the round-trip path: exported data re-enters the pipeline)."""
    with open(path, "r", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.asarray(rows)
    try:
        s_col = header.index("s")
    except ValueError:
        raise ValueError("no 's' column in the table") from None
    x_cols = [i for i, name_ in enumerate(header)
              if name_.startswith("x") and name_[1:].isdigit()]
    if len(x_cols) not in (3, 4):
        raise ValueError("expected 3 or 4 position columns x1..xd")
    return curve_from_positions(data[:, s_col], data[:, x_cols],
                                name=name or "ingested-csv")
