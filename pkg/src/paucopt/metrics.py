"""Empirical ROC, AUC and partial AUC.

The default tie convention is strict: a positive only beats a negative
when its score is strictly larger. ``ties="half"`` gives half credit to
equal scores, which is the convention of most AUC libraries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .ranked_range import PAucRange, descending_order

_TIE_MODES = ("strict", "half")


def _scores(a, name):
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    return a


def _check_ties(ties):
    if ties not in _TIE_MODES:
        raise ValueError(f"ties must be one of {_TIE_MODES}, got {ties!r}")


def _beats_count(pos_sorted, thresholds, ties):
    """For each threshold, the number of positives scoring above it."""
    n_pos = pos_sorted.size
    above = n_pos - np.searchsorted(pos_sorted, thresholds, side="right")
    if ties == "half":
        equal = np.searchsorted(pos_sorted, thresholds, side="right") - \
            np.searchsorted(pos_sorted, thresholds, side="left")
        return above + 0.5 * equal
    return above.astype(np.float64)


def pauc(scores_pos, scores_neg, alpha, beta, ties="strict", normalized=True):
    """Partial AUC over the FPR window [alpha, beta].

    Negatives are ranked by descending score (lower index first on ties);
    ranks m+1..n are compared against every positive. The count is divided
    by N+ (n - m) unless ``normalized`` is False.
    """
    _check_ties(ties)
    pos = _scores(scores_pos, "scores_pos")
    neg = _scores(scores_neg, "scores_neg")
    rng = PAucRange.from_fpr(alpha, beta, neg.size)
    return pauc_ranks(pos, neg, rng.m, rng.n, ties=ties, normalized=normalized)


def pauc_ranks(scores_pos, scores_neg, m, n, ties="strict", normalized=True):
    """Partial AUC with the negative rank window given directly as (m, n]."""
    _check_ties(ties)
    pos = _scores(scores_pos, "scores_pos")
    neg = _scores(scores_neg, "scores_neg")
    if not 0 <= m < n <= neg.size:
        raise ValueError(f"need 0 <= m < n <= {neg.size}, got m={m}, n={n}")
    window = neg[descending_order(neg)[m:n]]
    count = float(_beats_count(np.sort(pos), window, ties).sum())
    if normalized:
        return count / (pos.size * (n - m))
    return count


def full_auc(scores_pos, scores_neg, ties="strict"):
    """Fraction of (positive, negative) pairs ranked correctly, via rank sums."""
    _check_ties(ties)
    pos = _scores(scores_pos, "scores_pos")
    neg = _scores(scores_neg, "scores_neg")
    n_pos, n_neg = pos.size, neg.size
    both = np.concatenate([pos, neg])
    if ties == "half":
        u = rankdata(both, method="average")[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    else:
        # 'min' ranks count everything strictly below, so subtracting the
        # positives' own strict-below counts leaves the negatives beaten.
        u = (rankdata(both, method="min")[:n_pos] - 1).sum() - \
            (rankdata(pos, method="min") - 1).sum()
    return float(u) / (n_pos * n_neg)


def brute_force_auc(scores_pos, scores_neg, ties="strict"):
    """O(N+ N-) pairwise AUC, kept as an independent check on full_auc."""
    _check_ties(ties)
    pos = _scores(scores_pos, "scores_pos")[:, None]
    neg = _scores(scores_neg, "scores_neg")[None, :]
    wins = (pos > neg).sum()
    if ties == "half":
        wins = wins + 0.5 * (pos == neg).sum()
    return float(wins) / (pos.size * neg.size)


@dataclass(frozen=True)
class RocCurve:
    """Step ROC curve from (0, 0) to (1, 1); ``thresholds[0]`` is +inf."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def area(self):
        trapezoid = getattr(np, "trapezoid", None) or np.trapz
        return float(trapezoid(self.tpr, self.fpr))

    def rows(self):
        return zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist())


def roc_curve(scores_pos, scores_neg):
    """Threshold sweep over the distinct scores, highest first."""
    pos = np.sort(_scores(scores_pos, "scores_pos"))
    neg = np.sort(_scores(scores_neg, "scores_neg"))
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tp = pos.size - np.searchsorted(pos, thresholds, side="left")
    fp = neg.size - np.searchsorted(neg, thresholds, side="left")
    fpr = np.concatenate([[0.0], fp / neg.size])
    tpr = np.concatenate([[0.0], tp / pos.size])
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=np.concatenate([[np.inf], thresholds]))
