"""Reference computations used to check the stochastic solvers.

Everything here is deterministic and favours accuracy over speed: top-l by
selection rather than sorting, a dual scan over candidate thresholds,
central finite differences, exhaustive minibatch enumeration and a
high-accuracy proximal-point solver.

The proximal solver minimizes P(v) = f^l(v) + ||v - w||^2 / (2 mu) in two
phases. First the hinge inside the dual form of phi_l is replaced by
tau * softplus(. / tau) and the smooth problem is solved by Newton's method
for a decreasing sequence of tau. The fractional dual weights of the last
smooth solution identify which losses tie at the l-th position of each row;
a second Newton iteration then solves the stationarity conditions with
those ties imposed as equalities. The result is certified through strong
convexity: if g is a subgradient of P at v then ||v - v*|| <= ||g|| / sigma
with sigma = 1/mu - rho.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .prox_solver import ConfigError, stochastic_subgradient
from .ranked_range import dual_objective_rows
from .surrogate import PairSurface, logistic_loss_curvature, surface_of

TIE_TOL = 1e-12


@dataclass
class OracleReport:
    """Outcome of an oracle computation."""

    value: float
    tolerance: float
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# independent combinatorial references

def top_l_select(S, l):
    """Top-l sum through np.partition instead of a full sort."""
    S = np.asarray(S, dtype=np.float64)
    if not 0 <= l <= S.size:
        raise ValueError(f"l={l} outside [0, {S.size}]")
    if l == 0:
        return 0.0
    if l == S.size:
        return float(S.sum())
    k = S.size - l
    part = np.partition(S, k)
    return float(part[k:].sum())


def dual_min_scan(S, l):
    """min over lambda of l*lambda + sum_j [s_j - lambda]_+ for one row.

    The function is piecewise linear in lambda with kinks at the entries of
    S, so scanning the entries, their midpoints and one unit beyond each
    end finds the minimum. Returns (min value, minimizing lambda).
    """
    S = np.asarray(S, dtype=np.float64).ravel()
    u = np.unique(S)
    cands = np.concatenate([u, (u[:-1] + u[1:]) / 2.0, [u[0] - 1.0, u[-1] + 1.0]])
    vals = l * cands + np.maximum(S[None, :] - cands[:, None], 0.0).sum(axis=1)
    k = int(np.argmin(vals))
    return float(vals[k]), float(cands[k])


def finite_difference_grad(f, x, h=1e-5):
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def enumerate_minibatch_mean(data, l, lam, v, I, J):
    """Exact expectation of the minibatch subgradient over all (I, J) subsets."""
    surface = surface_of(data)
    if surface.n_left > 4 or surface.n_right > 6:
        raise ValueError("enumeration is limited to N+ <= 4, N- <= 6")
    g_sum = np.zeros(surface.d)
    count = 0
    for rows in itertools.combinations(range(surface.n_left), I):
        for cols in itertools.combinations(range(surface.n_right), J):
            g, _ = stochastic_subgradient(surface, v, lam, l, rows, cols)
            g_sum += g
            count += 1
    return g_sum / count


# ---------------------------------------------------------------------------
# proximal point

def prox_objective(v, w, data, l, mu):
    surface = surface_of(data)
    v = np.asarray(v, dtype=np.float64)
    S = surface.losses(v)
    top = 0.0 if l == 0 else float((-np.sort(-S, axis=1))[:, :l].sum())
    return top + float(np.dot(v - w, v - w)) / (2.0 * mu)


def _pair_hessian(surface, weights, v):
    """sum_ij weights_ij * hess s_ij(v)."""
    c = weights * logistic_loss_curvature(surface.margins(v))
    return _weighted_outer(surface, c)


def _weighted_outer(surface, c):
    """sum_ij c_ij (a_i - b_j)(a_i - b_j)^T."""
    A, B = surface.left, surface.right
    r = c.sum(axis=1)
    q = c.sum(axis=0)
    cross = A.T @ c @ B
    return (A.T * r) @ A + (B.T * q) @ B - cross - cross.T


def _row_lambdas(S, l, tau, lam):
    """Solve sum_j sigmoid((s_ij - lam_i)/tau) = l for every row."""
    lo = S.min(axis=1) - 40.0 * tau
    hi = S.max(axis=1) + 40.0 * tau
    lam = np.clip(lam, lo, hi) if lam is not None else (lo + hi) / 2.0
    for _ in range(200):
        p = expit((S - lam[:, None]) / tau)
        h = p.sum(axis=1) - l
        lo = np.where(h > 0, lam, lo)
        hi = np.where(h <= 0, lam, hi)
        dh = (p * (1.0 - p)).sum(axis=1) / tau
        with np.errstate(divide="ignore", invalid="ignore"):
            step = lam + h / dh
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        new = np.where(bad, (lo + hi) / 2.0, step)
        if np.all(np.abs(new - lam) <= 4 * np.finfo(float).eps * (1.0 + np.abs(lam))):
            lam = new
            break
        lam = new
    return lam


def _smoothed_parts(surface, v, w, l, mu, tau, lam):
    S = surface.losses(v)
    lam = _row_lambdas(S, l, tau, lam)
    x = (S - lam[:, None]) / tau
    value = float((l * lam).sum() + (tau * np.logaddexp(0.0, x)).sum()
                  + np.dot(v - w, v - w) / (2.0 * mu))
    p = expit(x)
    return value, p, lam


def _smoothed_newton(surface, w, l, mu, tau, v, lam, max_iter=60):
    d = surface.d
    value, p, lam = _smoothed_parts(surface, v, w, l, mu, tau, lam)
    it = 0
    for it in range(1, max_iter + 1):
        slopes = surface.loss_slopes(v)
        grad = surface.weighted_grad(v, p) + (v - w) / mu
        a = p * (1.0 - p)
        H = _pair_hessian(surface, p, v) + np.eye(d) / mu
        H += _weighted_outer(surface, a * slopes * slopes / tau)
        qc = a * slopes
        qvec = qc.sum(axis=1)[:, None] * surface.left - qc @ surface.right
        denom = tau * a.sum(axis=1)
        ok = denom > 0
        H -= (qvec[ok].T / denom[ok]) @ qvec[ok]
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = -mu * grad
        if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(v)):
            break
        t = 1.0
        slope = float(grad @ step)
        while t > 1e-12:
            cand = v + t * step
            val_c, p_c, lam_c = _smoothed_parts(surface, cand, w, l, mu, tau, lam)
            if val_c <= value + 1e-4 * t * slope + 1e-15 * abs(value):
                break
            t *= 0.5
        else:
            break
        v, value, p, lam = cand, val_c, p_c, lam_c
        if t == 1.0 and np.linalg.norm(step) <= 1e-13 * (1.0 + np.linalg.norm(v)):
            break
    return v, p, lam, it


def _top_sets(S, l):
    order = np.argsort(-S, axis=1, kind="stable")
    top = np.zeros(S.shape, dtype=bool)
    np.put_along_axis(top, order[:, :l], True, axis=1)
    return top


def _polish(surface, w, l, mu, v, p_smooth, max_iter=50):
    """Newton on the stationarity system with identified ties imposed."""
    d = surface.d
    frac = (p_smooth > 1e-6) & (p_smooth < 1.0 - 1e-6)
    tie_rows = [i for i in range(surface.n_left) if frac[i].sum() >= 2]
    groups, fixed_up = {}, {}
    for i in tie_rows:
        T = np.flatnonzero(frac[i])
        U = np.flatnonzero(p_smooth[i] >= 1.0 - 1e-6)
        share = l - U.size
        if not 0 < share < T.size:
            return None
        groups[i] = T
        fixed_up[i] = U
    n_p = sum(T.size for T in groups.values())
    p = {i: p_smooth[i, T] * ((l - fixed_up[i].size) / p_smooth[i, T].sum())
         for i, T in groups.items()}

    for _ in range(max_iter):
        S = surface.losses(v)
        weights = _top_sets(S, l).astype(np.float64)
        for i, T in groups.items():
            weights[i] = 0.0
            weights[i, fixed_up[i]] = 1.0
            weights[i, T] = p[i]
        slopes = surface.loss_slopes(v)
        r_v = surface.weighted_grad(v, weights) + (v - w) / mu
        Jv = _pair_hessian(surface, weights, v) + np.eye(d) / mu
        n_eq = d + sum(T.size for T in groups.values())
        jac = np.zeros((n_eq, d + n_p))
        res = np.zeros(n_eq)
        jac[:d, :d] = Jv
        res[:d] = r_v
        col, row = d, d
        for i, T in groups.items():
            diffs = surface.left[i] - surface.right[T]
            grads = slopes[i, T][:, None] * diffs
            jac[:d, col:col + T.size] = grads.T
            jac[row, col:col + T.size] = 1.0
            res[row] = p[i].sum() - (l - fixed_up[i].size)
            row += 1
            for k in range(1, T.size):
                jac[row, :d] = grads[k] - grads[0]
                res[row] = S[i, T[k]] - S[i, T[0]]
                row += 1
            col += T.size
        delta = np.linalg.lstsq(jac, -res, rcond=None)[0]
        v = v + delta[:d]
        col = d
        for i, T in groups.items():
            p[i] = p[i] + delta[col:col + T.size]
            col += T.size
        if np.linalg.norm(delta) <= 1e-15 * (1.0 + np.linalg.norm(v)):
            break
    return v, groups, fixed_up, p


def _certificate_subgradient(surface, w, l, mu, v, structure=None):
    """A subgradient of P at v, or None if the tie structure is inconsistent.

    With ``structure`` from the polish step, the tie multipliers are checked
    for feasibility; otherwise v must be free of ties at the l-th position.
    """
    S = surface.losses(v)
    srt = -np.sort(-S, axis=1)
    weights = _top_sets(S, l).astype(np.float64)
    groups, fixed_up, p = ({}, {}, {}) if structure is None else structure
    scale = 1.0 + np.abs(srt[:, l - 1])
    for i in range(surface.n_left):
        if i in groups:
            T, U, pi = groups[i], fixed_up[i], p[i]
            if np.any(pi < -1e-12) or np.any(pi > 1.0 + 1e-12):
                return None
            tie_val = S[i, T]
            if np.ptp(tie_val) > TIE_TOL * scale[i]:
                return None
            others = np.setdiff1d(np.arange(surface.n_right), np.concatenate([T, U]))
            b = tie_val.mean()
            if U.size and S[i, U].min() < b - TIE_TOL * scale[i]:
                return None
            if others.size and S[i, others].max() > b + TIE_TOL * scale[i]:
                return None
            weights[i] = 0.0
            weights[i, U] = 1.0
            weights[i, T] = np.clip(pi, 0.0, 1.0)
        elif l < surface.n_right and srt[i, l - 1] - srt[i, l] <= TIE_TOL * scale[i]:
            return None
    return surface.weighted_grad(v, weights) + (v - w) / mu


def prox_point_exact(w, data, l, mu, tol=1e-8, v_init=None, rho=None):
    """High-accuracy proximal point of f^l at ``w``.

    Returns (v, OracleReport). ``report.tolerance`` is the certified bound
    on ||v - v*|| and ``converged`` says whether it is within ``tol``.
    """
    surface = surface_of(data)
    w = np.asarray(w, dtype=np.float64)
    if rho is None:
        rho = surface.constants().rho
    sigma = 1.0 / mu - rho
    if not sigma > 0:
        raise ConfigError(f"mu * rho = {mu * rho:.4g} must be < 1")
    if not 0 <= l <= surface.n_right:
        raise ValueError(f"l={l} outside [0, {surface.n_right}]")
    if l == 0:
        return w.copy(), OracleReport(0.0, 0.0, 0, True)

    v = w.copy() if v_init is None else np.asarray(v_init, dtype=np.float64).copy()
    total_iter = 0
    best = (np.inf, v)
    if l == surface.n_right:
        p_full = np.ones((surface.n_left, surface.n_right))
        for _ in range(3):
            v, groups, fixed_up, p = _polish(surface, w, l, mu, v, p_full)
            total_iter += 1
        g = _certificate_subgradient(surface, w, l, mu, v, (groups, fixed_up, p))
        bound = float(np.linalg.norm(g)) / sigma
        return v, OracleReport(bound, bound, total_iter, bound <= tol)

    spread = float(np.ptp(surface.losses(v))) or 1.0
    tau = spread
    lam = None
    while tau > 1e-11 * spread:
        v, p_s, lam, it = _smoothed_newton(surface, w, l, mu, tau, v, lam)
        total_iter += it
        if tau <= 1e-5 * spread:
            polished = _polish(surface, w, l, mu, v.copy(), p_s)
            if polished is not None:
                v_p, groups, fixed_up, p = polished
                g = _certificate_subgradient(surface, w, l, mu, v_p, (groups, fixed_up, p))
                if g is not None:
                    bound = float(np.linalg.norm(g)) / sigma
                    if bound < best[0]:
                        best = (bound, v_p)
                    if bound <= tol:
                        return v_p, OracleReport(bound, bound, total_iter, True)
        tau *= 0.1
    bound, v_best = best
    if not np.isfinite(bound):
        g = _certificate_subgradient(surface, w, l, mu, v)
        bound = np.inf if g is None else float(np.linalg.norm(g)) / sigma
        v_best = v
    return v_best, OracleReport(bound, bound, total_iter, bound <= tol)


def moreau_value(w, data, l, mu, tol=1e-8, rho=None):
    """f^l_mu(w), evaluated at the oracle proximal point."""
    v, rep = prox_point_exact(w, data, l, mu, tol=tol, rho=rho)
    return prox_objective(v, np.asarray(w, dtype=np.float64), data, l, mu), v, rep
