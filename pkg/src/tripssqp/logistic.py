"""Constrained logistic regression problems.

    min_x (1/N) sum_i log(1 + exp(-y_i z_i^T x))  s.t.  A x = b,  ||x||^2 <= c

with synthetic (normal / exponential) or CSV-backed data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, CsvParseError, EmptyDatasetError, LabelError, RankError
from .problems import ProblemInstance

__all__ = ["LogisticProblemConfig", "make_logistic_problem", "load_csv_dataset",
           "synthetic_dataset", "logistic_loss"]

_DATASETS = {"normal": "normal", "normal-synthetic": "normal",
             "exponential": "exponential", "exponential-synthetic": "exponential",
             "csv": "csv", "csv-file": "csv"}


@dataclass(frozen=True)
class LogisticProblemConfig:
    dataset: str = "normal"
    d: int = 15
    N: int = 60000
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    c_radius: Optional[float] = None
    seed: int = 0
    csv_path: Optional[str] = None
    label_column: str = "label"
    n_eq: int = 5

    def __post_init__(self):
        kind = _DATASETS.get(self.dataset)
        if kind is None:
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        object.__setattr__(self, "dataset", kind)
        if kind == "csv" and not self.csv_path:
            raise ConfigError("csv dataset requires csv_path")
        if kind != "csv" and (self.N < 2 or self.d < 1):
            raise ConfigError("need N >= 2 and d >= 1")
        if self.c_radius is not None and not self.c_radius > 0:
            raise ConfigError("c_radius must be positive")


def logistic_loss(Z, y, x):
    """Mean logistic loss, computed stably via ``logaddexp``."""
    return float(np.mean(np.logaddexp(0.0, -y * (Z @ x))))


def synthetic_dataset(kind, d, N, rng):
    """Two balanced classes: +1 ~ N(0,1) / Exp(1), -1 ~ N(5,1) / 5+Exp(1)."""
    n_pos = N // 2
    n_neg = N - n_pos
    if kind == "normal":
        pos = rng.normal(0.0, 1.0, (n_pos, d))
        neg = rng.normal(5.0, 1.0, (n_neg, d))
    elif kind == "exponential":
        pos = rng.exponential(1.0, (n_pos, d))
        neg = 5.0 + rng.exponential(1.0, (n_neg, d))
    else:
        raise ConfigError(f"not a synthetic dataset: {kind!r}")
    Z = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    return Z, y


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _map_labels(raw):
    values = sorted(set(raw))
    if len(values) != 2:
        raise LabelError(f"labels must take exactly two values, found {len(values)}: {values[:5]}")
    if all(_is_float(v) for v in values):
        values = sorted(values, key=float)
    lo = values[0]
    return np.array([-1.0 if v == lo else 1.0 for v in raw])


def load_csv_dataset(path, label_column="label"):
    """Read a labelled CSV file into a standardized feature matrix.

    Numeric columns are kept as is, any column with a non-numeric entry is
    one-hot encoded (categories in sorted order).  Every feature column is
    then centred and divided by its sample standard deviation (ddof=1);
    constant columns are dropped.  Labels are mapped to -1/+1, the smaller
    value (numerically if all labels are numbers, else lexicographically)
    becoming -1.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise CsvParseError(f"{path}: no label column {label_column!r} in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise CsvParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            row = [cell.strip() for cell in row]
            if any(cell == "" for cell in row):
                raise CsvParseError(f"{path}:{lineno}: missing value")
            rows.append(row)
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")

    li = header.index(label_column)
    y = _map_labels([r[li] for r in rows])
    columns = []
    for j in range(len(header)):
        if j == li:
            continue
        col = [r[j] for r in rows]
        if all(_is_float(v) for v in col):
            columns.append(np.array([float(v) for v in col]))
        else:
            for cat in sorted(set(col)):
                columns.append(np.array([1.0 if v == cat else 0.0 for v in col]))
    if not columns:
        raise EmptyDatasetError(f"{path}: no feature columns")
    X = np.column_stack(columns)
    if X.shape[0] < 2:
        raise EmptyDatasetError(f"{path}: need at least two rows to standardize")
    std = X.std(axis=0, ddof=1)
    keep = std > 0.0
    if not keep.any():
        raise EmptyDatasetError(f"{path}: every feature column is constant")
    X = (X[:, keep] - X[:, keep].mean(axis=0)) / std[keep]
    return X, y


def _full_row_rank(A):
    return np.linalg.svd(A, compute_uv=False).min() > 1e-10


def make_logistic_problem(config: LogisticProblemConfig) -> ProblemInstance:
    rng = np.random.default_rng(config.seed)
    if config.dataset == "csv":
        Z, y = load_csv_dataset(config.csv_path, config.label_column)
        name = f"logistic-csv-{config.seed}"
    else:
        Z, y = synthetic_dataset(config.dataset, config.d, config.N, rng)
        name = f"logistic-{config.dataset}-{config.seed}"
    N, d = Z.shape
    m = config.n_eq
    if m >= d:
        raise ConfigError(f"need more features ({d}) than equality constraints ({m})")

    if config.A is None:
        for _ in range(100):
            A = rng.standard_normal((m, d))
            if _full_row_rank(A):
                break
        else:
            raise RankError("could not draw a full-row-rank A in 100 attempts")
    else:
        A = np.array(config.A, dtype=float)
        if A.shape != (m, d):
            raise ConfigError(f"A has shape {A.shape}, expected {(m, d)}")
        if not _full_row_rank(A):
            raise RankError("A is rank deficient")
    b = rng.standard_normal(m) if config.b is None else np.array(config.b, dtype=float)
    c_rad = 1.0 + rng.standard_normal() ** 2 if config.c_radius is None else float(config.c_radius)
    x0 = rng.standard_normal(d)

    Z = np.ascontiguousarray(Z)
    Z.flags.writeable = False
    y.flags.writeable = False

    def _f(x, Zs, ys):
        return float(np.mean(np.logaddexp(0.0, -ys * (Zs @ x))))

    def _grad(x, Zs, ys):
        t = -ys * (Zs @ x)
        w = -ys * np.exp(t - np.logaddexp(0.0, t))  # -y * sigmoid(t)
        return Zs.T @ w / ys.size

    def _hess(x, Zs, ys):
        t = ys * (Zs @ x)
        p = np.exp(-np.logaddexp(0.0, -t))
        w = p * (1.0 - p)
        return (Zs.T * w) @ Zs / ys.size

    eye2 = 2.0 * np.eye(d)[None]
    return ProblemInstance(
        name=name, dim_x=d, dim_eq=m, dim_ineq=1,
        eval_f=lambda x: _f(x, Z, y),
        eval_grad_f=lambda x: _grad(x, Z, y),
        eval_hess_f=lambda x: _hess(x, Z, y),
        eval_c=lambda x: A @ x - b,
        eval_G=lambda x: A,
        eval_hess_c=lambda x: np.zeros((m, d, d)),
        eval_h=lambda x: np.array([x @ x - c_rad]),
        eval_J=lambda x: 2.0 * x[None, :],
        eval_hess_h=lambda x: eye2,
        x0=x0,
        n_samples=N,
        sample_f=lambda x, idx: _f(x, Z[idx], y[idx]),
        sample_grad=lambda x, idx: _grad(x, Z[idx], y[idx]),
        sample_hess=lambda x, idx: _hess(x, Z[idx], y[idx]),
        meta={"A": A, "b": b, "c_radius": c_rad, "features": Z, "labels": y},
    )
