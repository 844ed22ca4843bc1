from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..flatness import ReferenceTrajectory
from ..simulation import Trajectory

FLAT_OUTPUT_HEADER = ["t", "y1", "y2", "y1r", "y2r", "e1", "e2"]
BEAM_W_HEADER = ["t", "z", "w"]


def fmt(value: float) -> str:
    """Decimal with 12 significant digits; identical inputs give identical text."""
    text = f"{float(value):.12g}"
    return "0" if text == "-0" else text


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_flat_output(path: str | Path, traj: Trajectory, ref: ReferenceTrajectory) -> Path:
    yr = ref(traj.t)
    e = traj.y - yr if traj.e is None else traj.e
    return write_rows(path, FLAT_OUTPUT_HEADER, np.column_stack([traj.t, traj.y, yr, e]))


def write_beam_w(path: str | Path, traj: Trajectory) -> Path:
    rows = ((t, z, w) for t, profile in zip(traj.snapshot_t, traj.w) for z, w in zip(traj.z, profile))
    return write_rows(path, BEAM_W_HEADER, rows)


def write_inputs(path: str | Path, traj: Trajectory) -> Path:
    return write_rows(path, ["t", "u1", "u2", "ubar1", "ubar2"], np.column_stack([traj.t, traj.u, traj.u_bar]))


def write_plan(path: str | Path, t: np.ndarray, u: np.ndarray, u_bar: np.ndarray, y_r: np.ndarray) -> Path:
    return write_rows(path, ["t", "u1", "u2", "ubar1", "ubar2", "y1r", "y2r"], np.column_stack([t, u, u_bar, y_r]))
