"""Synthetic problems, dataset readers/writers and run-record serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from . import rng as rngmod
from .errors import ConfigError, DataError
from .model import Dataset

FAMILIES = ("example2d", "example3d", "correlated")


@dataclass(frozen=True)
class SyntheticSpec:
    family: str
    p: Optional[int] = None
    epsilon: float = 1.0 / 40.0
    noise_sd: float = 0.1
    seed: int = 0
    n: Optional[int] = None  # correlated family only; defaults to p / 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown synthetic family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "correlated":
            if self.p is None or self.p < 2 or self.p % 2:
                raise ConfigError(f"correlated family needs an even p >= 2, got {self.p}")
            if self.n is not None and self.n < 1:
                raise ConfigError(f"n must be positive, got {self.n}")
        else:
            forced = 2 if self.family == "example2d" else 3
            if self.p not in (None, forced):
                raise ConfigError(f"{self.family} has p={forced}, got p={self.p}")
            object.__setattr__(self, "p", forced)


# Settings under which the demonstration problems are posed: plain 1/2 factor,
# unit penalty, level nu* + epsilon.
DEMO_DEFAULTS = {
    "example2d": {"lam": 1.0, "scale": "sum", "kind": "squared"},
    "example3d": {"lam": 1.0, "scale": "sum", "kind": "squared"},
}


def correlation_matrix(p: int, decay: float = 0.1) -> np.ndarray:
    idx = np.arange(p)
    return np.exp(-decay * np.abs(idx[:, None] - idx[None, :]))


def planted_beta(p: int) -> np.ndarray:
    """10/p on every tenth coordinate starting with the first, zero elsewhere."""
    beta = np.zeros(p)
    beta[::10] = 10.0 / p
    return beta


def gen_synthetic(spec: SyntheticSpec) -> Tuple[Dataset, Optional[np.ndarray]]:
    eps = spec.epsilon
    if spec.family == "example2d":
        X = np.array([[1.0, 1.0], [1.0, 1.0 + eps]])
        return Dataset(X, np.ones(2)), None
    if spec.family == "example3d":
        X = np.array([[1.0, 1.0, 1.0], [1.0, 1.0 + eps, 1.0], [1.0, 1.0, 1.0 + 2.0 * eps]])
        return Dataset(X, np.ones(3)), None

    p = spec.p
    n = spec.n if spec.n is not None else p // 2
    sigma = correlation_matrix(p)
    chol = np.linalg.cholesky(sigma)
    assert np.all(np.diag(chol) > 0), "correlation matrix lost positive definiteness"
    Z = rngmod.stream(spec.seed, rngmod.DATA, 0).standard_normal((n, p))
    X = Z @ chol.T
    beta = planted_beta(p)
    noise = spec.noise_sd * rngmod.stream(spec.seed, rngmod.DATA, 1).standard_normal(n)
    return Dataset(X, X @ beta + noise), beta


def _open_text(path):
    try:
        return open(os.fspath(path), "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None


def parse_libsvm(lines, n_features: Optional[int] = None) -> Dataset:
    """Parse ``label idx:val ...`` lines (1-based, strictly increasing indices)."""
    labels, rows, cols, vals = [], [], [], []
    n = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise DataError(f"line {lineno}: bad label {tokens[0]!r}") from None
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataError(f"line {lineno}: expected index:value, got {tok!r}")
            try:
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise DataError(f"line {lineno}: malformed pair {tok!r}") from None
            if idx < 1:
                raise DataError(f"line {lineno}: feature index {idx} is not 1-based positive")
            if idx <= prev:
                raise DataError(f"line {lineno}: non-increasing feature index {idx} after {prev}")
            prev = idx
            rows.append(n)
            cols.append(idx - 1)
            vals.append(val)
        labels.append(label)
        n += 1
    if n == 0:
        raise DataError("empty libsvm input")
    p = max(cols) + 1 if cols else 0
    if n_features is not None:
        if n_features < p:
            raise DataError(f"n_features={n_features} smaller than largest index {p}")
        p = n_features
    if p == 0:
        raise DataError("libsvm input has no features")
    X = sp.csr_matrix((vals, (rows, cols)), shape=(n, p))
    return Dataset(X, np.array(labels))


def read_libsvm(path, n_features: Optional[int] = None) -> Dataset:
    with _open_text(path) as fh:
        return parse_libsvm(fh, n_features)


def write_libsvm(dataset: Dataset, path) -> None:
    X = sp.csr_matrix(dataset.X)
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        for i in range(dataset.n):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            pairs = " ".join(f"{j + 1}:{_fmt(v)}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]) if v != 0)
            fh.write(f"{_fmt(dataset.y[i])} {pairs}".rstrip() + "\n")


def read_csv(path, label_column: int = -1) -> Dataset:
    """Headerless dense CSV; the label sits in ``label_column`` (default: last)."""
    rows = []
    width = None
    with _open_text(path) as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"row {rowno}: expected {width} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DataError(f"row {rowno}: non-numeric cell") from None
    if not rows:
        raise DataError("empty csv input")
    A = np.array(rows)
    if width < 2:
        raise DataError("csv needs at least one feature column and a label column")
    col = label_column % width
    y = A[:, col]
    X = np.delete(A, col, axis=1)
    return Dataset(X, y)


def write_csv(dataset: Dataset, path) -> None:
    """Dense CSV with the label in the last column, floats at full precision."""
    X = dataset.dense()
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        for i in range(dataset.n):
            fh.write(",".join(_fmt(v) for v in X[i]) + "," + _fmt(dataset.y[i]) + "\n")


def _fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def write_points_csv(points, path) -> None:
    """One point per row; ``path`` may also be an open text stream."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    text = "".join(",".join(_fmt(v) for v in row) + "\n" for row in P)
    if hasattr(path, "write"):
        path.write(text)
        return
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_points_csv(path) -> np.ndarray:
    rows = []
    width = None
    with _open_text(path) as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"row {rowno}: expected {width} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DataError(f"row {rowno}: non-numeric cell") from None
    if not rows:
        raise DataError(f"no points in {path}")
    return np.array(rows)


# Run records ---------------------------------------------------------------

RECORD_KEYS = ("config", "cloud", "selection", "evaluation", "timings")


@dataclass
class RunRecord:
    config: dict
    cloud: dict
    selection: dict
    evaluation: dict
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in RECORD_KEYS}


def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _encode(obj, indent: int, level: int, out: io.StringIO) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for n, (k, v) in enumerate(obj.items()):
            out.write(pad + json.dumps(k) + ": ")
            _encode(v, indent, level + 1, out)
            out.write(",\n" if n < len(obj) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.write("[]")
            return
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.write("[" + ", ".join(_number(v) for v in obj) + "]")
            return
        out.write("[\n")
        for n, v in enumerate(obj):
            out.write(pad)
            _encode(v, indent, level + 1, out)
            out.write(",\n" if n < len(obj) - 1 else "\n")
        out.write(end + "]")
    elif isinstance(obj, bool) or obj is None or isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, (int, float)):
        out.write(_number(obj))
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def _number(v) -> str:
    if isinstance(v, int):
        return str(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def dumps_record(record) -> str:
    """JSON text with every float written to 17 significant digits."""
    obj = record.to_dict() if isinstance(record, RunRecord) else record
    out = io.StringIO()
    _encode(_plain(obj), 2, 0, out)
    out.write("\n")
    return out.getvalue()


def write_run(record, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_record(record))


def read_run(path) -> dict:
    with _open_text(path) as fh:
        return json.load(fh)
