"""CSV and legacy-VTK writers (and the matching CSV readers used in tests)."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .convergence import RateRow
from .diagnostics import EnergyRecord
from .errors import ArgumentError
from .stepper import State

__all__ = [
    "ENERGY_HEADER",
    "RATE_HEADER",
    "write_energy_csv",
    "read_energy_csv",
    "write_rate_csv",
    "read_rate_csv",
    "write_field_vtk",
]

ENERGY_HEADER = ("step", "t", "E", "mass_phi", "mass_c", "dissipation", "mu_mean", "mu_w16_5")
RATE_HEADER = ("resolution", "err_phi_H1", "rate_phi", "err_c", "rate_c", "err_mu_H1", "rate_mu")


def _fmt(v) -> str:
    # repr of a float is the shortest string that round-trips exactly
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_energy_csv(records: Sequence[EnergyRecord], path: str | Path) -> None:
    if not records:
        raise ArgumentError("no energy records to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENERGY_HEADER)
        for r in records:
            w.writerow([_fmt(v) for v in (
                r.step_index, r.t, r.E, r.mass_phi, r.mass_c, r.dissipation, r.mu_mean, r.mu_w16_5,
            )])


def read_energy_csv(path: str | Path) -> list[EnergyRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ENERGY_HEADER:
            raise ArgumentError(f"unexpected energy CSV header {reader.fieldnames}")
        return [
            EnergyRecord(
                step_index=int(row["step"]),
                t=float(row["t"]),
                E=float(row["E"]),
                mass_phi=float(row["mass_phi"]),
                mass_c=float(row["mass_c"]),
                dissipation=float(row["dissipation"]),
                mu_mean=float(row["mu_mean"]),
                mu_w16_5=float(row["mu_w16_5"]),
            )
            for row in reader
        ]


def write_rate_csv(rows: Iterable[RateRow], path: str | Path) -> None:
    """Rows are written sorted by resolution; the first row has empty rate cells."""
    rows = sorted(rows, key=lambda r: r.resolution)
    if not rows:
        raise ArgumentError("no rate rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATE_HEADER)
        for i, r in enumerate(rows):
            rates = (r.rate_phi, r.rate_c, r.rate_mu) if i > 0 else (None, None, None)
            w.writerow([_fmt(v) for v in (
                r.resolution, r.err_phi_H1, rates[0], r.err_c, rates[1], r.err_mu_H1, rates[2],
            )])


def read_rate_csv(path: str | Path) -> list[RateRow]:
    def opt(s):
        return float(s) if s != "" else None

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RATE_HEADER:
            raise ArgumentError(f"unexpected rate CSV header {reader.fieldnames}")
        return [
            RateRow(
                resolution=float(row["resolution"]),
                err_phi_H1=float(row["err_phi_H1"]),
                err_c=float(row["err_c"]),
                err_mu_H1=float(row["err_mu_H1"]),
                rate_phi=opt(row["rate_phi"]),
                rate_c=opt(row["rate_c"]),
                rate_mu=opt(row["rate_mu"]),
            )
            for row in reader
        ]


def write_field_vtk(state: State, path: str | Path, title: str | None = None) -> None:
    """Legacy ASCII VTK structured grid with point scalars ``phi``, ``c``, ``mu``."""
    mesh = state.mesh
    n = mesh.node_count
    title = title or f"chcross step {state.step_index} t={state.t!r}"
    lines = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET STRUCTURED_GRID",
        f"DIMENSIONS {mesh.nx + 1} {mesh.ny + 1} 1",
        f"POINTS {n} double",
    ]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist()]
    lines.append(f"POINT_DATA {n}")
    for name, fld in (("phi", state.phi), ("c", state.c), ("mu", state.mu)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(v) for v in fld.values.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
