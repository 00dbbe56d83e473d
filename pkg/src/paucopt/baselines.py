"""DCA and proximal DCA baselines for the same DC objective.

Each outer step linearizes f^m at w^(k) with a deterministic subgradient
xi^(k) and runs stochastic block coordinate descent on

    n 1.lam + sum_ij [s_ij(w) - lam_i]_+ - w.xi^(k) (+ L/2 ||w - w^(k)||^2),

returning the last inner iterate.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .agd import RunTrace, TraceRecord, _task_range, evaluate
from .prox_solver import ConfigError, SbcdSchedule, SolverDivergence, run_kernel
from .ranked_range import kth_largest_rows
from .surrogate import surface_of


@dataclass
class DcaConfig:
    """T_k = C (k+1)^2 inner steps; ``L_prox`` = 0 gives plain DCA.

    With ``constant_lr`` the inner step sizes do not shrink with k and
    T = C for every outer iteration.
    """

    K: int = 100
    C: int = 100
    c: float = 1.0
    L_prox: float = 0.0
    I: int = 1
    J: int = 1
    seed: int = 0
    constant_lr: bool = False
    max_epochs: float | None = None

    def inner_iterations(self, k):
        return self.C if self.constant_lr else self.C * (k + 1) ** 2

    def validate(self, surface):
        if self.K < 1 or self.C < 1 or not self.c > 0:
            raise ConfigError("K, C must be >= 1 and c > 0")
        if self.max_epochs is not None and not self.max_epochs > 0:
            raise ConfigError("max_epochs must be > 0")
        if not self.L_prox >= 0:
            raise ConfigError("L_prox must be >= 0")
        if not (1 <= self.I <= surface.n_left and 1 <= self.J <= surface.n_right):
            raise ConfigError(f"batch sizes must satisfy 1 <= I <= {surface.n_left}, "
                              f"1 <= J <= {surface.n_right}")


def dca_subgradient_fm(w, data, m):
    """sum_i sum_{j in top-m of S_i(w)} grad s_ij(w), lower index first on ties."""
    surface = surface_of(data)
    w = np.asarray(w, dtype=np.float64)
    if not 0 <= m <= surface.n_right:
        raise ValueError(f"m={m} outside [0, {surface.n_right}]")
    if m == 0:
        return np.zeros(surface.d)
    S = surface.losses(w)
    order = np.argsort(-S, axis=1, kind="stable")
    weights = np.zeros_like(S)
    np.put_along_axis(weights, order[:, :m], 1.0, axis=1)
    return surface.weighted_grad(w, weights)


def dca_run(data, r, cfg: DcaConfig, w0):
    """Plain (L_prox = 0) or proximal DCA; returns (w^(K), trace)."""
    surface = surface_of(data)
    cfg.validate(surface)
    m, n = _task_range(data, r)
    P, Q = surface.n_left, surface.n_right
    I = 1 if P == 1 else cfg.I
    w = np.asarray(w0, dtype=np.float64).copy()
    rng = np.random.default_rng(cfg.seed)
    lam = kth_largest_rows(surface.losses(w), n)

    trace = RunTrace()
    trace.initial_loss, trace.initial_pauc = evaluate(w, data, (m, n))
    epoch = 0.0
    for k in range(cfg.K):
        t0 = time.perf_counter()
        T = cfg.inner_iterations(k)
        scale = 1 if cfg.constant_lr else k + 1
        sched = SbcdSchedule(T=T, eta=cfg.c / (scale * P * Q), theta=cfg.c / (scale * Q),
                             I=I, J=cfg.J)
        xi = dca_subgradient_fm(w, surface, m)
        if m > 0:
            epoch += 1.0
        res = run_kernel(surface, w, w, lam, n, sched, cfg.L_prox, xi, rng, outer=k)
        w, lam = res.v_last, res.lambda_last
        if not np.all(np.isfinite(w)):
            raise SolverDivergence(-1, outer=k)
        epoch += T * I * cfg.J / (P * Q)
        loss, pa = evaluate(w, data, (m, n))
        trace.records.append(TraceRecord(k, epoch, loss, pa, float("nan"),
                                         1e3 * (time.perf_counter() - t0), T))
        trace.models.append(w.copy())
        if cfg.max_epochs is not None and epoch >= cfg.max_epochs:
            break
    trace.best_index = len(trace.records) - 1
    return w, trace


def prox_dca_run(data, r, cfg: DcaConfig, w0):
    """Proximal DCA: the quadratic L_prox/2 ||w - w^(k)||^2 is added per step."""
    return dca_run(data, r, cfg, w0)
