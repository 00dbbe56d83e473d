"""Binary and regression datasets: LIBSVM loading, synthesis, stratified splits."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised when input data is malformed or fails validation."""


def _as_finite_matrix(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DataError(f"{name} must be a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BinaryDataset:
    """Positive and negative feature pools for bipartite ranking.

    Rows of ``positives`` are the x_i^+ and rows of ``negatives`` the x_j^-.
    Both arrays are stored read-only so a dataset can be shared between
    solver runs.
    """

    positives: np.ndarray
    negatives: np.ndarray
    source: str = "array"

    def __post_init__(self):
        pos = _as_finite_matrix(self.positives, "positives")
        neg = _as_finite_matrix(self.negatives, "negatives")
        if pos.shape[0] < 1:
            raise DataError("empty positive pool")
        if neg.shape[0] < 1:
            raise DataError("empty negative pool")
        if pos.shape[1] != neg.shape[1]:
            raise DataError(
                f"feature dimension mismatch: {pos.shape[1]} vs {neg.shape[1]}")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)

    @property
    def n_pos(self) -> int:
        return self.positives.shape[0]

    @property
    def n_neg(self) -> int:
        return self.negatives.shape[0]

    @property
    def d(self) -> int:
        return self.positives.shape[1]


@dataclass(frozen=True)
class RegressionDataset:
    """Features with real targets; the SoRR task uses targets in {0, 1}."""

    features: np.ndarray
    targets: np.ndarray
    source: str = "array"

    def __post_init__(self):
        x = _as_finite_matrix(self.features, "features")
        y = np.ascontiguousarray(self.targets, dtype=np.float64).ravel()
        if x.shape[0] < 1:
            raise DataError("empty dataset")
        if y.shape[0] != x.shape[0]:
            raise DataError(f"{x.shape[0]} feature rows but {y.shape[0]} targets")
        if not np.all(np.isfinite(y)):
            raise DataError("targets contain non-finite entries")
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Two isotropic Gaussian classes separated along the first axis."""

    n_pos: int = 50
    n_neg: int = 500
    d: int = 2
    separation: float = 4.0
    noise: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1:
            raise DataError("class counts must be >= 1")
        if self.d < 1:
            raise DataError("dimension must be >= 1")
        if not self.noise > 0:
            raise DataError("noise scale must be > 0")


def _parse_libsvm_lines(lines, path):
    labels, rows = [], []
    max_index = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric label {tokens[0]!r}") from None
        entries = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected idx:val, got {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric entry {tok!r}") from None
            if idx <= prev:
                raise DataError(
                    f"{path}:{lineno}: indices must be 1-based and ascending ({tok!r})")
            if not np.isfinite(val):
                raise DataError(f"{path}:{lineno}: non-finite value {tok!r}")
            prev = idx
            entries.append((idx, val))
        max_index = max(max_index, prev)
        labels.append(label)
        rows.append(entries)
    return labels, rows, max_index


def read_libsvm(path):
    """Read a LIBSVM file into a dense matrix and a label vector.

    The feature dimension is the largest index seen anywhere in the file.
    """
    path = Path(path)
    with open(path) as fh:
        labels, rows, d = _parse_libsvm_lines(fh, path)
    x = np.zeros((len(rows), d))
    for r, entries in enumerate(rows):
        for idx, val in entries:
            x[r, idx - 1] = val
    return x, np.asarray(labels, dtype=np.float64)


def write_libsvm(path, x, labels):
    """Write dense rows in canonical LIBSVM form (zeros omitted, repr floats)."""
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w") as fh:
        for row, label in zip(x, labels):
            lab = int(label) if float(label).is_integer() else float(label)
            parts = [f"{lab:+d}" if isinstance(lab, int) else repr(lab)]
            parts += [f"{j + 1}:{float(row[j])!r}" for j in np.flatnonzero(row)]
            fh.write(" ".join(parts) + "\n")


def load_libsvm(path, positive_label=1) -> BinaryDataset:
    """Load a LIBSVM file as a one-vs-rest binary dataset.

    Rows whose label equals ``positive_label`` become positives; every other
    label is negative.
    """
    x, labels = read_libsvm(path)
    is_pos = labels == float(positive_label)
    if not is_pos.any():
        raise DataError("empty positive pool")
    if is_pos.all():
        raise DataError("empty negative pool")
    return BinaryDataset(x[is_pos], x[~is_pos], source=str(path))


def write_binary_libsvm(path, ds: BinaryDataset):
    x = np.vstack([ds.positives, ds.negatives])
    labels = np.r_[np.ones(ds.n_pos), -np.ones(ds.n_neg)]
    write_libsvm(path, x, labels)


def generate_synthetic(spec: SyntheticSpec) -> BinaryDataset:
    """Sample the two Gaussian pools described by ``spec``."""
    rng = np.random.default_rng(spec.seed)
    center = np.zeros(spec.d)
    center[0] = spec.separation / 2.0
    pos = center + spec.noise * rng.standard_normal((spec.n_pos, spec.d))
    neg = -center + spec.noise * rng.standard_normal((spec.n_neg, spec.d))
    return BinaryDataset(pos, neg, source=f"synthetic:{spec}")


def generate_logistic_regression(n=2000, d=5, separation=4.0, noise=1.0,
                                 flip=0.05, seed=0) -> RegressionDataset:
    """Binary-target regression set for the SoRR task.

    Targets are drawn from balanced Gaussian classes along the first axis;
    a fraction ``flip`` of labels is flipped to create outliers, which is
    where ranked-range losses differ from the average loss.
    """
    if n < 1 or not noise > 0 or not 0 <= flip < 1:
        raise DataError("invalid logistic synthetic parameters")
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(np.float64)
    x = noise * rng.standard_normal((n, d))
    x[:, 0] += np.where(y == 1, separation / 2.0, -separation / 2.0)
    flipped = rng.random(n) < flip
    y[flipped] = 1.0 - y[flipped]
    return RegressionDataset(x, y, source=f"synthetic-logistic:n={n},d={d},seed={seed}")


def _split_pool(rows, train_fraction, rng, name):
    n = rows.shape[0]
    n_train = int(round(n * train_fraction))
    if n_train < 1 or n_train > n - 1:
        raise DataError(
            f"train_fraction={train_fraction} leaves an empty {name} pool "
            f"({n} rows)")
    perm = rng.permutation(n)
    return rows[np.sort(perm[:n_train])], rows[np.sort(perm[n_train:])]


def train_test_split(ds: BinaryDataset, train_fraction=0.9, seed=0):
    """Stratified split: each pool is split separately, preserving membership."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    pos_tr, pos_te = _split_pool(ds.positives, train_fraction, rng, "positive")
    neg_tr, neg_te = _split_pool(ds.negatives, train_fraction, rng, "negative")
    return (BinaryDataset(pos_tr, neg_tr, source=f"{ds.source}[train]"),
            BinaryDataset(pos_te, neg_te, source=f"{ds.source}[test]"))
