"""CSV readers and writers for datasets and estimate traces (12 significant digits)."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .estimator import DualEstimate, MeasurementSample
from .kinematics import PlanarPose, ShapeParams
from .simulator import Dataset

DATASET_COLUMNS = ("k", "t_true", "y_px", "y_pz", "y_theta",
                   "truth_px", "truth_pz", "truth_theta", "u")
ESTIMATE_COLUMNS = ("k", "x_hat", "w_l", "w_a1", "w_a2", "w_b1", "w_b2", "Px",
                    *(f"Pw_diag_{i}" for i in range(1, 6)),
                    "innov_px", "innov_pz", "innov_theta")


class SchemaError(ValueError):
    pass


def fmt(x) -> str:
    return format(float(x), ".12g")


def truth_path(dataset_path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.name + ".truth.json")


def write_dataset(path, ds: Dataset, seed: int | None = None) -> None:
    y = ds.y
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(DATASET_COLUMNS)
        for i, m in enumerate(ds.measurements):
            out.writerow([m.k, fmt(ds.t_true[i]), *map(fmt, y[i]),
                          *map(fmt, ds.truth_poses[i]), fmt(m.u)])
    if ds.w_true is not None:
        meta = {"w_true": [float(v) for v in ds.w_true.as_array()], "seed": seed}
        truth_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def _rows(path, columns):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != columns:
            raise SchemaError(f"{path}: header must be {','.join(columns)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise SchemaError(f"{path}: row {lineno} has {len(row)} fields, expected {len(columns)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise SchemaError(f"{path}: row {lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise SchemaError(f"{path}: row {lineno} has non-finite values")
            yield lineno, vals


def read_dataset(path) -> Dataset:
    t, truth, samples = [], [], []
    last_k = None
    for lineno, v in _rows(path, DATASET_COLUMNS):
        k = v[0]
        if k != int(k) or (last_k is not None and k <= last_k):
            raise SchemaError(f"{path}: row {lineno}: tick index must be an increasing integer")
        last_k = k
        t.append(v[1])
        samples.append(MeasurementSample(PlanarPose(*v[2:5]), v[8], int(k)))
        truth.append(v[5:8])
    if not samples:
        raise SchemaError(f"{path}: no data rows")
    w_true = None
    meta = truth_path(path)
    if meta.exists():
        w_true = ShapeParams.from_array(json.loads(meta.read_text())["w_true"])
    return Dataset(np.array(t), w_true, samples, np.array(truth))


def write_estimates(path, estimates: list[DualEstimate]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(ESTIMATE_COLUMNS)
        for e in estimates:
            out.writerow([e.k, fmt(e.t), *map(fmt, e.params.mean), fmt(e.state.cov[0, 0]),
                          *map(fmt, np.diag(e.params.cov)), *map(fmt, e.innov_x)])


def read_estimates(path) -> np.ndarray:
    """Estimates table as an (n, 17) array in column order."""
    rows = [v for _, v in _rows(path, ESTIMATE_COLUMNS)]
    return np.array(rows).reshape(-1, len(ESTIMATE_COLUMNS))
