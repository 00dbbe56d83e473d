"""Approximate gradient descent on the Moreau-smoothed DC objective

    F^mu(w) = f^n_mu(w) - f^m_mu(w),   grad F^mu(w) = (v_m(w) - v_n(w)) / mu,

where v_l(w) is the proximal point of f^l, estimated by the stochastic
block coordinate solver and warm-started in lambda between outer steps.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import metrics, oracle
from .dataset import BinaryDataset, RegressionDataset
from .prox_solver import (ConfigError, ProxProblem, SbcdSchedule, SolverDivergence,
                          run_kernel)
from .ranked_range import PAucRange, dc_objective, kth_largest_rows
from .surrogate import surface_of

log = logging.getLogger(__name__)


@dataclass
class AgdConfig:
    """Outer and inner hyperparameters.

    With ``strict=False`` the unset ``mu`` and ``gamma`` default to the
    practical values 10^3/(N+ N-) and 2*10^3/(N+ N-). With ``strict`` they
    must satisfy mu * rho < 1 and gamma <= 1/L_mu, L_mu = 2 / (mu - mu^2 rho),
    and unset values default to mu = 1/(2 rho), gamma = 1/L_mu. Inner steps follow eta_t = c/((k+1) N+ N-),
    theta_t = c/((k+1) N-) and T_k = C (k+1)^2.
    """

    K: int = 100
    mu: float | None = None
    gamma: float | None = None
    C: int = 50
    c: float = 1.0
    I: int = 1
    J: int = 1
    epsilon: float | None = None
    early_stop: bool = False
    seed: int = 0
    strict: bool = True
    dual_step: str = "theta"
    max_epochs: float | None = None

    def inner_iterations(self, k):
        return self.C * (k + 1) ** 2

    def resolved(self, surface, constants=None):
        """Fill in data-dependent defaults and check the invariants."""
        P, Q = surface.n_left, surface.n_right
        if self.strict:
            constants = constants or surface.constants()
            if self.mu is None and constants.rho > 0:
                mu_default = 0.5 / constants.rho
            else:
                mu_default = 1e3 / (P * Q)
        else:
            mu_default = 1e3 / (P * Q)
        mu = self.mu if self.mu is not None else mu_default
        if self.gamma is not None:
            gamma = self.gamma
        elif self.strict:
            rho = constants.rho
            gamma = (mu - mu * mu * rho) / 2.0
        else:
            gamma = 2e3 / (P * Q)
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.dual_step not in ("theta", "eta"):
            raise ConfigError("dual_step must be 'theta' or 'eta'")
        if self.max_epochs is not None and not self.max_epochs > 0:
            raise ConfigError("max_epochs must be > 0")
        if not (mu > 0 and gamma > 0 and self.c > 0 and self.C >= 1):
            raise ConfigError("mu, gamma, c must be > 0 and C >= 1")
        if not (1 <= self.I <= P and 1 <= self.J <= Q):
            raise ConfigError(f"batch sizes must satisfy 1 <= I <= {P}, 1 <= J <= {Q}")
        if self.strict:
            rho = constants.rho
            if not mu * rho < 1.0:
                raise ConfigError(f"mu * rho = {mu * rho:.4g} must be < 1 (strict mode)")
            L_mu = 2.0 / (mu - mu * mu * rho)
            if gamma > 1.0 / L_mu * (1 + 1e-12):
                raise ConfigError(
                    f"gamma = {gamma:.4g} exceeds 1/L_mu = {1.0 / L_mu:.4g} (strict mode)")
        return mu, gamma


def theory_parameters(data, mu_fraction=0.5):
    """(mu, gamma) with mu * rho = ``mu_fraction`` and gamma = 1/L_mu."""
    rho = surface_of(data).constants().rho
    mu = mu_fraction / rho
    return mu, (mu - mu * mu * rho) / 2.0


@dataclass
class CriticalityCertificate:
    """(||xi||, ||w - v_m||, ||w - v_n||) at iterate ``k``; xi = (v_m - v_n)/mu."""

    xi_norm: float
    dist_to_vm: float
    dist_to_vn: float
    k: int = -1
    low_confidence: bool = False

    def epsilon(self):
        return max(self.xi_norm, self.dist_to_vm, self.dist_to_vn)


@dataclass
class TraceRecord:
    k: int
    epoch: float
    normalized_loss: float
    train_pauc: float
    xi_norm: float
    wall_ms: float
    T: int


@dataclass
class RunTrace:
    """One record per completed outer iteration, evaluated at the new iterate."""

    records: list = field(default_factory=list)
    models: list = field(default_factory=list)
    initial_loss: float = float("nan")
    initial_pauc: float = float("nan")
    theoretical_index: int = -1
    theoretical_model: np.ndarray | None = None
    best_index: int = -1
    epsilon_targets: list = field(default_factory=list)
    prox_points: list = field(default_factory=list)
    duals: list = field(default_factory=list)
    mu: float = float("nan")
    gamma: float = float("nan")

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def as_rows(self):
        return [asdict(r) for r in self.records]


def _task_range(data, r):
    surface = surface_of(data)
    if isinstance(r, PAucRange):
        return r.m, r.n
    m, n = r
    if not 0 <= m < n <= surface.n_right:
        raise ConfigError(f"need 0 <= m < n <= {surface.n_right}, got m={m}, n={n}")
    return int(m), int(n)


def evaluate(w, data, r):
    """(normalized loss, training pAUC) at w; pAUC is NaN for the SoRR task."""
    m, n = _task_range(data, r)
    loss = dc_objective(w, data, (m, n), normalized=True)
    if isinstance(data, BinaryDataset):
        pa = metrics.pauc_ranks(data.positives @ w, data.negatives @ w, m, n)
    else:
        pa = float("nan")
    return loss, pa


def _better(cand, best):
    """Higher pAUC wins, lower loss breaks ties (SoRR: lower loss only)."""
    (loss_c, pa_c), (loss_b, pa_b) = cand, best
    if np.isnan(pa_c) or np.isnan(pa_b) or pa_c == pa_b:
        return loss_c < loss_b
    return pa_c > pa_b


def agd_run(data, r, cfg: AgdConfig, w0):
    """Run K outer iterations of approximate gradient descent.

    Returns (w_best, trace, certificate). ``w_best`` is the iterate with the
    best training pAUC (lowest loss for SoRR); the uniformly drawn iterate
    v_n^(k_bar) is in ``trace.theoretical_model``.
    """
    surface = surface_of(data)
    m, n = _task_range(data, r)
    mu, gamma = cfg.resolved(surface)
    P, Q = surface.n_left, surface.n_right
    sorr = isinstance(data, RegressionDataset)
    I = 1 if sorr else cfg.I
    w = np.asarray(w0, dtype=np.float64).copy()
    if w.shape != (surface.d,) or not np.all(np.isfinite(w)):
        raise ConfigError(f"w0 must be a finite vector of length {surface.d}")

    root = np.random.default_rng(cfg.seed)
    rng_m, rng_n, rng_pick = root.spawn(3)
    S0 = surface.losses(w)
    lam_m = kth_largest_rows(S0, m)
    lam_n = kth_largest_rows(S0, n)

    trace = RunTrace(mu=mu, gamma=gamma)
    trace.initial_loss, trace.initial_pauc = evaluate(w, data, (m, n))
    v_n_hist, certs = [], []
    epoch = 0.0
    below = 0
    for k in range(cfg.K):
        t0 = time.perf_counter()
        T = cfg.inner_iterations(k)
        eta = cfg.c / ((k + 1) * P * Q)
        theta = cfg.c / ((k + 1) * Q)
        if sorr and cfg.dual_step == "eta":
            theta = eta
        sched = SbcdSchedule(T=T, eta=eta, theta=theta, I=I, J=cfg.J)
        if m == 0:
            v_m = w.copy()
            inner = T
        else:
            res_m = run_kernel(surface, w, w, lam_m, m, sched, 1.0 / mu, None, rng_m, outer=k)
            v_m, lam_m = res_m.v_bar, res_m.lambda_bar
            inner = 2 * T
        res_n = run_kernel(surface, w, w, lam_n, n, sched, 1.0 / mu, None, rng_n, outer=k)
        v_n, lam_n = res_n.v_bar, res_n.lambda_bar

        step = v_m - v_n
        xi_norm = float(np.linalg.norm(step)) / mu
        certs.append(CriticalityCertificate(
            xi_norm, float(np.linalg.norm(w - v_m)), float(np.linalg.norm(w - v_n)), k))
        v_n_hist.append(v_n)
        trace.prox_points.append((v_m, v_n))
        trace.duals.append((lam_m.copy(), lam_n.copy()))
        w = w - gamma / mu * step
        if not np.all(np.isfinite(w)):
            raise SolverDivergence(-1, outer=k)
        epoch += inner * I * cfg.J / (P * Q)
        loss, pa = evaluate(w, data, (m, n))
        trace.records.append(TraceRecord(k, epoch, loss, pa, xi_norm,
                                         1e3 * (time.perf_counter() - t0), T))
        trace.models.append(w.copy())
        trace.epsilon_targets.append(1.0 / np.sqrt(k + 1))
        if cfg.max_epochs is not None and epoch >= cfg.max_epochs:
            break
        if cfg.early_stop and cfg.epsilon is not None:
            below = below + 1 if xi_norm < cfg.epsilon else 0
            if below >= 3:
                log.info("early stop at outer iteration %d", k)
                break

    K_done = len(trace.records)
    trace.theoretical_index = int(rng_pick.integers(K_done))
    trace.theoretical_model = v_n_hist[trace.theoretical_index]

    best = 0
    for j in range(1, K_done):
        rec, ref = trace.records[j], trace.records[best]
        if _better((rec.normalized_loss, rec.train_pauc), (ref.normalized_loss, ref.train_pauc)):
            best = j
    trace.best_index = best
    w_best = trace.models[best]
    # models[j] is w^(j+1); its proximal estimates come from outer step j+1
    if best + 1 < K_done:
        cert = certs[best + 1]
    else:
        cert = _final_certificate(surface, w_best, m, n, mu, cfg, K_done, lam_m, lam_n,
                                  rng_m, rng_n, I)
    return w_best, trace, cert


def _final_certificate(surface, w, m, n, mu, cfg, k, lam_m, lam_n, rng_m, rng_n, I):
    P, Q = surface.n_left, surface.n_right
    sched = SbcdSchedule(T=cfg.inner_iterations(k), eta=cfg.c / ((k + 1) * P * Q),
                         theta=cfg.c / ((k + 1) * Q), I=I, J=cfg.J)
    v_m = w.copy() if m == 0 else \
        run_kernel(surface, w, w, lam_m, m, sched, 1.0 / mu, None, rng_m, outer=k).v_bar
    v_n = run_kernel(surface, w, w, lam_n, n, sched, 1.0 / mu, None, rng_n, outer=k).v_bar
    return CriticalityCertificate(float(np.linalg.norm(v_m - v_n)) / mu,
                                  float(np.linalg.norm(w - v_m)),
                                  float(np.linalg.norm(w - v_n)), k)


def smoothed_objective(w, data, r, mu, tol=1e-10, rho=None):
    """F^mu(w) and its gradient (v_m - v_n)/mu from oracle proximal points."""
    m, n = _task_range(data, r)
    val_n, v_n, rep_n = oracle.moreau_value(w, data, n, mu, tol=tol, rho=rho)
    val_m, v_m, rep_m = oracle.moreau_value(w, data, m, mu, tol=tol, rho=rho)
    return val_n - val_m, (v_m - v_n) / mu, (rep_m, rep_n)


def certify(w, data, r, mu, tol=1e-8, rho=None):
    """Certificate at w from high-accuracy proximal points of f^m and f^n."""
    m, n = _task_range(data, r)
    w = np.asarray(w, dtype=np.float64)
    v_m, rep_m = oracle.prox_point_exact(w, data, m, mu, tol=tol, rho=rho)
    v_n, rep_n = oracle.prox_point_exact(w, data, n, mu, tol=tol, rho=rho)
    return CriticalityCertificate(
        float(np.linalg.norm(v_m - v_n)) / mu, float(np.linalg.norm(w - v_m)),
        float(np.linalg.norm(w - v_n)),
        low_confidence=not (rep_m.converged and rep_n.converged))
