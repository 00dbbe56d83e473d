"""Top-l sums, ranked-range sums and the dual form of the top-l objective.

Orderings are descending with ties broken by the lower index first, so
``s_[1]`` is the largest entry and ``s_[l]`` the l-th largest.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .surrogate import PairSurface, surface_of


def descending_order(S, axis=-1):
    """Indices that sort ``S`` in descending order, lower index first on ties."""
    return np.argsort(-np.asarray(S, dtype=np.float64), axis=axis, kind="stable")


def _sorted_desc(S):
    return -np.sort(-np.asarray(S, dtype=np.float64), axis=-1)


def _check_l(l, size):
    if not 0 <= l <= size:
        raise ValueError(f"l={l} outside [0, {size}]")


def top_l_sum(S, l):
    """Sum of the ``l`` largest entries of ``S``."""
    S = np.asarray(S, dtype=np.float64)
    _check_l(l, S.shape[-1])
    if l == 0:
        return 0.0
    return float(_sorted_desc(S)[:l].sum())


def ranked_range_sum(S, m, n):
    """phi_n(S) - phi_m(S): the (m+1)-th through n-th largest entries."""
    S = np.asarray(S, dtype=np.float64)
    if not 0 <= m < n <= S.shape[-1]:
        raise ValueError(f"need 0 <= m < n <= {S.shape[-1]}, got m={m}, n={n}")
    return top_l_sum(S, n) - top_l_sum(S, m)


@dataclass(frozen=True)
class PAucRange:
    """FPR window [alpha, beta] and its integer ranks m = N- alpha, n = N- beta."""

    alpha: float
    beta: float
    m: int
    n: int

    def __post_init__(self):
        if not 0 <= self.m < self.n:
            raise ValueError(f"need 0 <= m < n, got m={self.m}, n={self.n}")

    @classmethod
    def from_fpr(cls, alpha, beta, n_neg):
        """Round N- alpha and N- beta to integers, warning when they were not."""
        if not 0.0 <= alpha < beta <= 1.0:
            raise ValueError(f"need 0 <= alpha < beta <= 1, got [{alpha}, {beta}]")
        exact_m, exact_n = n_neg * alpha, n_neg * beta
        m = min(max(int(math.floor(exact_m + 0.5)), 0), n_neg)
        n = min(max(int(math.floor(exact_n + 0.5)), 0), n_neg)
        if abs(exact_m - m) > 1e-9 or abs(exact_n - n) > 1e-9:
            warnings.warn(
                f"N-*alpha={exact_m:g}, N-*beta={exact_n:g} are not integers; "
                f"rounded to m={m}, n={n}", stacklevel=2)
        if m >= n:
            if n < n_neg:
                n = m + 1
            else:
                m = n - 1
            warnings.warn(f"FPR window collapsed after rounding; using m={m}, n={n}",
                          stacklevel=2)
        return cls(alpha, beta, m, n)

    @classmethod
    def from_ranks(cls, m, n, n_neg):
        if not 0 <= m < n <= n_neg:
            raise ValueError(f"need 0 <= m < n <= {n_neg}, got m={m}, n={n}")
        return cls(m / n_neg, n / n_neg, int(m), int(n))


def row_top_l(S, l):
    """phi_l of every row of the matrix ``S``."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    _check_l(l, S.shape[1])
    if l == 0:
        return np.zeros(S.shape[0])
    return _sorted_desc(S)[:, :l].sum(axis=1)


def f_l(w, ds, l):
    """f^l(w) = sum_i phi_l(S_i(w)) for either task."""
    surf = surface_of(ds)
    _check_l(l, surf.n_right)
    if l == 0:
        return 0.0
    return float(row_top_l(surf.losses(np.asarray(w, dtype=np.float64)), l).sum())


def f_l_pauc(w, ds, l):
    return f_l(w, ds, l)


def f_l_sorr(w, ds, l):
    return f_l(w, ds, l)


def dual_objective(v, lam, ds, l):
    """g^l(v, lam) = l * sum(lam) + sum_ij [s_ij(v) - lam_i]_+."""
    surf = surface_of(ds)
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if lam.shape != (surf.n_left,):
        raise ValueError(f"lam must have shape ({surf.n_left},), got {lam.shape}")
    S = surf.losses(np.asarray(v, dtype=np.float64))
    return float(l * lam.sum() + np.maximum(S - lam[:, None], 0.0).sum())


def dual_objective_rows(S, lam, l):
    """Row-wise g^l on a precomputed loss matrix; returns one value per row."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    return l * lam + np.maximum(S - lam[:, None], 0.0).sum(axis=1)


@dataclass(frozen=True)
class LambdaIntervals:
    """Per-row closed intervals [lo_i, hi_i] of optimal dual thresholds."""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, lam, atol=0.0):
        lam = np.asarray(lam, dtype=np.float64)
        return bool(np.all((lam >= self.lo - atol) & (lam <= self.hi + atol)))

    def distance(self, lam):
        lam = np.asarray(lam, dtype=np.float64)
        gap = np.maximum(self.lo - lam, 0.0) + np.maximum(lam - self.hi, 0.0)
        return float(np.linalg.norm(gap))


def lambda_intervals_from_losses(S, l):
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if not 1 <= l <= S.shape[1] - 1:
        raise ValueError(f"optimal-lambda intervals need 1 <= l <= {S.shape[1] - 1}, got {l}")
    srt = _sorted_desc(S)
    return LambdaIntervals(lo=srt[:, l].copy(), hi=srt[:, l - 1].copy())


def optimal_lambda_intervals(v, ds, l):
    """argmin over lambda of g^l(v, .): row i is [s_i[l+1](v), s_i[l](v)]."""
    surf = surface_of(ds)
    return lambda_intervals_from_losses(surf.losses(np.asarray(v, dtype=np.float64)), l)


def kth_largest_rows(S, l):
    """s_[l] per row, with l = 0 mapped to the row maximum.

    Used as the starting dual point: for 1 <= l <= N- it lies in the optimal
    interval, for l = 0 every hinge is inactive.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    srt = _sorted_desc(S)
    return srt[:, max(l, 1) - 1].copy()


def dc_objective(w, ds, r, normalized=False):
    """F(w) = f^n(w) - f^m(w); ``normalized`` divides by N+ (n - m)."""
    surf = surface_of(ds)
    m, n = (r.m, r.n) if isinstance(r, PAucRange) else r
    if not 0 <= m < n <= surf.n_right:
        raise ValueError(f"need 0 <= m < n <= {surf.n_right}, got m={m}, n={n}")
    S = surf.losses(np.asarray(w, dtype=np.float64))
    srt = _sorted_desc(S)
    top_n = srt[:, :n].sum(axis=1).sum()
    top_m = srt[:, :m].sum(axis=1).sum() if m > 0 else 0.0
    F = float(top_n - top_m)
    if normalized:
        return F / (surf.n_left * (n - m))
    return F


def normalized_loss(w, ds, r):
    return dc_objective(w, ds, r, normalized=True)
