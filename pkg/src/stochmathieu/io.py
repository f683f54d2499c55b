"""CSV and JSON writers for trajectories, curves, histograms and diagrams.

Floats are written with 17 significant digits so files round-trip exactly
and repeated runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .gp import ProcessRealization
from .stability import StabilityDiagram
from .stats import EmpiricalDensity


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_table(path, header: Sequence[str], columns: Iterable[np.ndarray]) -> Path:
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_trajectory(path, path_obj: ProcessRealization, channels: Sequence[str] | None = None) -> Path:
    channels = list(channels or path_obj.channels)
    return write_table(path, ["t", *channels], [path_obj.t, *(path_obj[c] for c in channels)])


def write_curve(path, curve: dict[str, np.ndarray]) -> Path:
    keys = ["x", "pdf_total", "pdf_background_weighted", "pdf_rare_weighted"]
    return write_table(path, keys, [curve[k] for k in keys])


def write_histogram(path, emp: EmpiricalDensity) -> Path:
    return write_table(
        path,
        ["bin_left", "bin_right", "density", "count"],
        [emp.edges[:-1], emp.edges[1:], emp.density, emp.count],
    )


def write_diagram(path, diagram: StabilityDiagram) -> Path:
    aa, dd = np.meshgrid(diagram.alpha_grid, diagram.delta_grid, indexing="ij")
    status = np.where(diagram.undetermined, -1, diagram.classification.astype(int))
    return write_table(path, ["delta", "alpha", "unstable"], [dd.ravel(), aa.ravel(), status.ravel()])


def write_boundaries(path, diagram: StabilityDiagram) -> Path:
    rows = [(k, d, a) for k, pts in sorted(diagram.boundaries.items()) for d, a in sorted(pts)]
    cols = list(zip(*rows)) if rows else [[], [], []]
    return write_table(path, ["family", "delta", "alpha"], [np.asarray(c) for c in cols])


def write_scalars(path, values: dict) -> Path:
    """Two-column ``quantity,value`` table."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for k, v in values.items():
            w.writerow([k, _fmt(v)])
    return path


def read_scalars(path) -> dict[str, float]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return {k: float(v) for k, v in rows}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
