"""Linear scorer, logistic surrogate losses and their smoothness constants.

Both tasks reduce to the same pairwise surface. For a "left" row a_i and a
"right" row b_j, with margin z_ij = v.(a_i - b_j),

    s_ij(v) = log(1 + exp(-z_ij)) + c_j * z_ij.

The pAUC task uses a_i = x_i^+, b_j = x_j^-, c_j = 0. The SoRR task uses a
single left row a = 0, b_j = -x_j and c_j = 1 - y_j, which is the
cross-entropy of sigmoid(v.x_j) against y_j.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .dataset import BinaryDataset, DataError, RegressionDataset


def logistic_loss(z):
    """log(1 + exp(-z)) without overflow for large |z|."""
    return np.logaddexp(0.0, -np.asarray(z, dtype=np.float64))


def logistic_loss_derivative(z):
    """d/dz log(1 + exp(-z)) = -1 / (1 + exp(z))."""
    return -expit(-np.asarray(z, dtype=np.float64))


def logistic_loss_curvature(z):
    z = np.asarray(z, dtype=np.float64)
    return expit(z) * expit(-z)


def _vector(w, d=None, name="w"):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector")
    if d is not None and w.shape[0] != d:
        raise ValueError(f"dimension mismatch: {name} has {w.shape[0]}, expected {d}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} has non-finite entries")
    return w


def score(w, x):
    """Linear score h_w(x) = w.x."""
    w = _vector(w)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: w has {w.shape[0]}, x has {x.shape[-1]}")
    return x @ w


def pair_loss(w, ds: BinaryDataset, i, j):
    """s_ij(w) for positive ``i`` and negative ``j`` (0-based)."""
    w = _vector(w, ds.d)
    z = ds.positives[i] @ w - ds.negatives[j] @ w
    return float(logistic_loss(z))


def pair_loss_grad(w, ds: BinaryDataset, i, j):
    w = _vector(w, ds.d)
    diff = ds.positives[i] - ds.negatives[j]
    return logistic_loss_derivative(diff @ w) * diff


def sorr_sample_loss(w, ds: RegressionDataset, j):
    """Sigmoid cross-entropy of sample ``j`` and its gradient."""
    w = _vector(w, ds.d)
    y = ds.targets[j]
    if y not in (0.0, 1.0):
        raise DataError(f"target {y} of sample {j} is not in {{0, 1}}")
    x = ds.features[j]
    z = x @ w
    loss = float(logistic_loss(z) + (1.0 - y) * z)
    return loss, (expit(z) - y) * x


@dataclass(frozen=True)
class SmoothnessConstants:
    """Gradient-Lipschitz bound L, gradient-norm bound B and rho = P*Q*L."""

    L: float
    B: float
    rho: float


@dataclass(frozen=True)
class PairSurface:
    """The matrix of pairwise losses s_ij(v) as a function of v.

    ``left`` is (P, d), ``right`` is (Q, d) and ``offset`` holds c_j (Q,).
    P plays the role of N+ and Q of N-.
    """

    left: np.ndarray
    right: np.ndarray
    offset: np.ndarray

    @classmethod
    def from_binary(cls, ds: BinaryDataset):
        return cls(ds.positives, ds.negatives, np.zeros(ds.n_neg))

    @classmethod
    def from_regression(cls, ds: RegressionDataset):
        y = ds.targets
        if not np.all((y == 0.0) | (y == 1.0)):
            raise DataError("SoRR targets must lie in {0, 1}")
        left = np.zeros((1, ds.d))
        right = np.ascontiguousarray(-ds.features)
        return cls(left, right, np.ascontiguousarray(1.0 - y))

    @property
    def n_left(self):
        return self.left.shape[0]

    @property
    def n_right(self):
        return self.right.shape[0]

    @property
    def d(self):
        return self.left.shape[1]

    def margins(self, v):
        return (self.left @ v)[:, None] - (self.right @ v)[None, :]

    def losses(self, v):
        """The (P, Q) matrix whose row i is S_i(v)."""
        z = self.margins(v)
        return logistic_loss(z) + self.offset[None, :] * z

    def loss_slopes(self, v):
        """dl/dz for every pair, so that grad s_ij = slope_ij * (a_i - b_j)."""
        return self.offset[None, :] - expit(-self.margins(v))

    def weighted_grad(self, v, weights):
        """sum_ij weights_ij * grad s_ij(v) without forming the (P, Q, d) tensor."""
        c = weights * self.loss_slopes(v)
        return c.sum(axis=1) @ self.left - c.sum(axis=0) @ self.right

    def pair_grad(self, v, i, j):
        diff = self.left[i] - self.right[j]
        z = diff @ v
        return (self.offset[j] - expit(-z)) * diff

    def pair_diff_norms(self):
        """Exact ||a_i - b_j|| for every pair, computed row by row."""
        out = np.empty((self.n_left, self.n_right))
        for i in range(self.n_left):
            out[i] = np.linalg.norm(self.left[i] - self.right, axis=1)
        return out

    def constants(self) -> SmoothnessConstants:
        """Exact L and B over all pairs, using |l'| <= 1 and l'' <= 1/4."""
        norms = self.pair_diff_norms()
        nmax = float(norms.max())
        L = nmax * nmax / 4.0
        return SmoothnessConstants(L=L, B=nmax,
                                   rho=self.n_left * self.n_right * L)


def estimate_constants(ds) -> SmoothnessConstants:
    """Smoothness constants of the pairwise (or per-sample) losses of ``ds``."""
    if isinstance(ds, RegressionDataset):
        return PairSurface.from_regression(ds).constants()
    return PairSurface.from_binary(ds).constants()


def surface_of(ds) -> PairSurface:
    if isinstance(ds, PairSurface):
        return ds
    if isinstance(ds, RegressionDataset):
        return PairSurface.from_regression(ds)
    return PairSurface.from_binary(ds)
