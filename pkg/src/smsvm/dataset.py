"""Binary-classification datasets: loading, synthesis, standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .rng import Xoshiro256

STD_FLOOR = 1e-12
DEFAULT_CENTROID_SCALE = 1.0


class DataFormatError(ValueError):
    """Raised when an input file does not match its declared format."""


@dataclass
class Dataset:
    """Dense design matrix ``X`` (N x m) with labels ``y`` in {+1, -1}."""

    X: np.ndarray
    y: np.ndarray
    feature_names: Optional[list[str]] = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n, m = self.X.shape
        if n < 1 or m < 1:
            raise ValueError("dataset needs at least one row and one column")
        if self.y.shape != (n,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({n},)")
        if not np.all((self.y == 1.0) | (self.y == -1.0)):
            raise ValueError("labels must be +1 or -1")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("X contains non-finite entries")
        if self.feature_names is not None and len(self.feature_names) != m:
            raise ValueError("feature_names length does not match column count")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], self.feature_names)


@dataclass
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stds = np.asarray(self.stds, dtype=np.float64)
        if self.means.shape != self.stds.shape or self.means.ndim != 1:
            raise ValueError("means and stds must be vectors of equal length")
        if np.any(self.stds <= 0):
            raise ValueError("stds must be strictly positive")

    @property
    def m(self) -> int:
        return self.means.shape[0]

    @classmethod
    def identity(cls, m: int) -> "Standardizer":
        return cls(np.zeros(m), np.ones(m))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.m:
            raise ValueError(f"expected {self.m} features, got {X.shape[-1]}")
        return (X - self.means) / self.stds


@dataclass(frozen=True)
class SyntheticSpec:
    """Two-centroid Gaussian data.

    Centroid components are N(0, 1) draws multiplied by ``centroid_scale``
    (default 1). ``5/sqrt(m)`` keeps the centroid distance near 7 for every m,
    which is enough for the tall shape but leaves the wide shape (m >> N)
    noticeably non-separable on held-out data.
    """

    m: int
    N: int
    centroid_scale: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be a positive even number")
        if self.centroid_scale is not None and not self.centroid_scale > 0:
            raise ValueError("centroid_scale must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def scale(self) -> float:
        if self.centroid_scale is None:
            return DEFAULT_CENTROID_SCALE
        return float(self.centroid_scale)


SHAPES = {"tall": (10_000, 50), "wide": (100, 2_500)}


def _map_label(raw: str, positive_label: Optional[str], lineno: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataFormatError(f"line {lineno}: label {raw!r} is not a number") from None
    if positive_label is not None:
        return 1.0 if value == float(positive_label) else -1.0
    return 1.0 if value > 0 else -1.0


def load_libsvm(path: Union[str, Path], positive_label: Optional[str] = None) -> Dataset:
    """Read a LIBSVM/SVMlight text file into a dense :class:`Dataset`.

    Labels > 0 become +1 and the rest -1, unless ``positive_label`` is given,
    in which case only labels numerically equal to it become +1.
    """
    labels: list[float] = []
    rows: list[tuple[list[int], list[float]]] = []
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            labels.append(_map_label(parts[0], positive_label, lineno))
            idx: list[int] = []
            vals: list[float] = []
            prev = 0
            for tok in parts[1:]:
                key, sep, val = tok.partition(":")
                if not sep:
                    raise DataFormatError(f"line {lineno}: malformed token {tok!r}")
                try:
                    j = int(key)
                    v = float(val)
                except ValueError:
                    raise DataFormatError(f"line {lineno}: malformed token {tok!r}") from None
                if j < 1:
                    raise DataFormatError(f"line {lineno}: feature index {j} is not 1-based")
                if j <= prev:
                    raise DataFormatError(f"line {lineno}: non-increasing index {j} after {prev}")
                if not math.isfinite(v):
                    raise DataFormatError(f"line {lineno}: non-finite value {val!r}")
                prev = j
                idx.append(j - 1)
                vals.append(v)
            max_index = max(max_index, prev)
            rows.append((idx, vals))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    if max_index == 0:
        raise DataFormatError(f"{path}: no features present")
    X = np.zeros((len(rows), max_index))
    for i, (idx, vals) in enumerate(rows):
        X[i, idx] = vals
    return Dataset(X, np.array(labels))


def save_libsvm(d: Dataset, path: Union[str, Path]) -> None:
    """Write ``d`` in LIBSVM format using round-trip (17 digit) decimals.

    Zeros are omitted except the last column, which is always written so the
    feature count survives a reload.
    """
    m = d.n_features
    with open(path, "w", encoding="utf-8") as fh:
        for xi, yi in zip(d.X, d.y):
            toks = ["+1" if yi > 0 else "-1"]
            for j, v in enumerate(xi):
                if v != 0.0 or j == m - 1:
                    toks.append(f"{j + 1}:{v:.17g}")
            fh.write(" ".join(toks) + "\n")


def load_csv(
    path: Union[str, Path],
    label_column: Union[int, str] = -1,
    positive_label: str = "1",
    header: bool = False,
    delimiter: Optional[str] = ",",
) -> Dataset:
    """Read a rectangular numeric CSV; the label column is split off into ``y``.

    ``label_column`` is a 0-based index (negative counts from the end) or, when
    ``header`` is set, a column name. Rows whose label text equals
    ``positive_label`` (after stripping) get +1, all others -1. ``delimiter=None``
    splits on runs of whitespace (the UCI ``.dat`` layout).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        if delimiter is None:
            records = [line.split() for line in fh if line.strip()]
        else:
            records = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    if not records:
        raise DataFormatError(f"{path}: empty file")
    names: Optional[list[str]] = None
    first_row = 1
    if header:
        names = [c.strip() for c in records[0]]
        records = records[1:]
        first_row = 2
        if not records:
            raise DataFormatError(f"{path}: header but no data rows")
    width = len(names) if names is not None else len(records[0])
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if names is None or label_column not in names:
            raise DataFormatError(f"label column {label_column!r} not found")
        col = names.index(label_column)
    else:
        col = int(label_column)
        if col < 0:
            col += width
        if not 0 <= col < width:
            raise DataFormatError(f"label column {label_column} out of range for {width} columns")
    if width < 2:
        raise DataFormatError("need at least one feature column besides the label")
    X = np.empty((len(records), width - 1))
    y = np.empty(len(records))
    pos = positive_label.strip()
    for i, rec in enumerate(records):
        rowno = i + first_row
        if len(rec) != width:
            raise DataFormatError(f"row {rowno}: expected {width} cells, found {len(rec)}")
        y[i] = 1.0 if rec[col].strip() == pos else -1.0
        k = 0
        for j, cell in enumerate(rec):
            if j == col:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"row {rowno}, column {j}: non-numeric value {cell.strip()!r}"
                ) from None
            if not math.isfinite(v):
                raise DataFormatError(f"row {rowno}, column {j}: non-finite value")
            X[i, k] = v
            k += 1
    feature_names = None
    if names is not None:
        feature_names = [n for j, n in enumerate(names) if j != col]
    return Dataset(X, y, feature_names)


def standardize_fit(d: Dataset) -> Standardizer:
    """Column means and population standard deviations (floored to 1)."""
    means = d.X.mean(axis=0)
    stds = np.sqrt(((d.X - means) ** 2).mean(axis=0))
    stds = np.where(stds < STD_FLOOR, 1.0, stds)
    return Standardizer(means, stds)


def standardize_apply(s: Standardizer, d: Dataset) -> Dataset:
    if s.m != d.n_features:
        raise ValueError(f"standardizer has {s.m} columns, dataset has {d.n_features}")
    return Dataset(s.transform(d.X), d.y.copy(), d.feature_names)


def augment_bias(d: Dataset) -> Dataset:
    """Append a constant-one column so the last weight acts as the bias."""
    X = np.hstack([d.X, np.ones((d.n_samples, 1))])
    names = None if d.feature_names is None else [*d.feature_names, "bias"]
    return Dataset(X, d.y.copy(), names)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample two equal-size Gaussian classes around random scaled centroids.

    Draw order: centroid of the +1 class, centroid of the -1 class, the N/2
    rows of the +1 class, the N/2 rows of the -1 class (all row-major), then a
    Fisher-Yates row shuffle from the same stream.
    """
    rng = Xoshiro256(spec.seed)
    m, half = spec.m, spec.N // 2
    c_pos = rng.normals(m) * spec.scale
    c_neg = rng.normals(m) * spec.scale
    X = np.empty((spec.N, m))
    X[:half] = c_pos + rng.normals(half * m).reshape(half, m)
    X[half:] = c_neg + rng.normals(half * m).reshape(half, m)
    y = np.concatenate([np.ones(half), -np.ones(half)])
    perm = rng.permutation(spec.N)
    return Dataset(X[perm], y[perm])


def synthetic_shape(shape: str, seed: int = 0, centroid_scale: Optional[float] = None) -> SyntheticSpec:
    """SyntheticSpec for the named shape: ``tall`` (N=10000, m=50) or ``wide`` (N=100, m=2500)."""
    try:
        n, m = SHAPES[shape]
    except KeyError:
        raise ValueError(f"unknown shape {shape!r}; choose from {sorted(SHAPES)}") from None
    return SyntheticSpec(m=m, N=n, centroid_scale=centroid_scale, seed=seed)
