"""Stochastic solvers for the proximal-point subproblem

    min_{v, lam}  g^l(v, lam) + ||v - w||^2 / (2 mu),

whose v-part is the proximal point of f^l at the anchor w.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .ranked_range import dual_objective
from .surrogate import PairSurface, SmoothnessConstants, surface_of

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e8


class SolverDivergence(RuntimeError):
    """An iterate became non-finite or left the divergence ball."""

    def __init__(self, step, outer=None):
        self.step = step
        self.outer = outer
        where = f"inner step {step}" if outer is None else f"outer iteration {outer}, inner step {step}"
        super().__init__(f"solver diverged at {where}")


class ConfigError(ValueError):
    """A solver configuration violates one of its invariants."""


@dataclass
class ProxProblem:
    """Subproblem data: anchor ``w``, smoothing ``mu``, rank ``l``, loss surface.

    With ``strict`` the strong-convexity condition mu * rho < 1 is enforced.
    """

    w: np.ndarray
    mu: float
    l: int
    data: object
    strict: bool = True
    constants: SmoothnessConstants | None = None

    def __post_init__(self):
        self.surface = surface_of(self.data)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != (self.surface.d,):
            raise ValueError(f"anchor has shape {self.w.shape}, expected ({self.surface.d},)")
        if not self.mu > 0:
            raise ConfigError("mu must be > 0")
        if not 0 <= self.l <= self.surface.n_right:
            raise ConfigError(f"l={self.l} outside [0, {self.surface.n_right}]")
        if self.strict:
            if self.constants is None:
                self.constants = self.surface.constants()
            if not self.mu * self.constants.rho < 1.0:
                raise ConfigError(
                    f"mu * rho = {self.mu * self.constants.rho:.4g} must be < 1")

    def objective(self, v, lam):
        v = np.asarray(v, dtype=np.float64)
        return dual_objective(v, lam, self.surface, self.l) + \
            float(np.dot(v - self.w, v - self.w)) / (2.0 * self.mu)


@dataclass
class SbcdSchedule:
    """Iteration count, step sizes and batch sizes of one inner solve.

    ``eta`` and ``theta`` are scalars (constant steps) or length-T arrays.
    """

    T: int
    eta: object
    theta: object
    I: int = 1
    J: int = 1

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        self.eta = self._steps(self.eta, "eta")
        self.theta = self._steps(self.theta, "theta")
        if self.I < 1 or self.J < 1:
            raise ConfigError("batch sizes must be >= 1")

    def _steps(self, s, name):
        arr = np.asarray(s, dtype=np.float64)
        if arr.ndim == 0:
            arr = np.full(self.T, float(arr))
        if arr.shape != (self.T,):
            raise ConfigError(f"{name} must be a scalar or have length T={self.T}")
        if not np.all(arr > 0):
            raise ConfigError(f"{name} steps must be > 0")
        return arr

    @classmethod
    def practical(cls, T, c, k, n_pos, n_neg, I, J):
        """eta_t = c / ((k+1) N+ N-), theta_t = c / ((k+1) N-)."""
        return cls(T=T, eta=c / ((k + 1) * n_pos * n_neg),
                   theta=c / ((k + 1) * n_neg), I=I, J=J)


@dataclass
class ProxResult:
    """Uniform averages over iterates 0..T-1, plus the final iterate."""

    v_bar: np.ndarray
    lambda_bar: np.ndarray
    v_last: np.ndarray
    lambda_last: np.ndarray
    iterations: int
    trace: list = field(default_factory=list)


def _seed_from(rng):
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**32 - 1))
    return int(np.random.default_rng(rng).integers(0, 2**32 - 1))


def run_kernel(surface: PairSurface, w, v0, lam0, l, sched: SbcdSchedule, inv_mu,
               xi, rng, outer=None):
    """Dispatch to the compiled loop and translate its status."""
    if sched.I > surface.n_left or sched.J > surface.n_right:
        raise ConfigError(
            f"batch sizes I={sched.I}, J={sched.J} exceed pools "
            f"{surface.n_left}, {surface.n_right}")
    w = np.ascontiguousarray(w, dtype=np.float64)
    v0 = np.ascontiguousarray(v0, dtype=np.float64)
    lam0 = np.ascontiguousarray(np.atleast_1d(lam0), dtype=np.float64)
    if lam0.shape != (surface.n_left,):
        raise ValueError(f"dual state must have shape ({surface.n_left},), got {lam0.shape}")
    xi = np.zeros(surface.d) if xi is None else np.ascontiguousarray(xi, dtype=np.float64)
    bound = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(w)))
    v_bar, lam_bar, v, lam, status = _kernels.sbcd_kernel(
        surface.left, surface.right, surface.offset, w, v0, lam0, float(l),
        sched.eta, sched.theta, float(inv_mu), xi, sched.I, sched.J,
        _seed_from(rng), bound)
    if status >= 0:
        raise SolverDivergence(int(status), outer)
    return ProxResult(v_bar, lam_bar, v, lam, sched.T)


def sbcd_solve(prob: ProxProblem, init_lambda, sched: SbcdSchedule, rng,
               outer=None) -> ProxResult:
    """Stochastic block coordinate descent on the proximal subproblem.

    Starts from v = w and the given dual state; each step samples I left
    rows and J right rows without replacement, takes the closed-form
    proximal step on v and a subgradient step on the sampled lambda_i.
    """
    return run_kernel(prob.surface, prob.w, prob.w, init_lambda, prob.l, sched,
                      1.0 / prob.mu, None, rng, outer)


def sgd_solve_sorr(prob: ProxProblem, init_lambda, sched: SbcdSchedule, rng,
                   dual_step="theta", outer=None) -> ProxResult:
    """Stochastic subgradient method for the SoRR subproblem (scalar lambda).

    ``dual_step="eta"`` uses the primal step size for lambda as well.
    """
    if prob.surface.n_left != 1:
        raise ConfigError("the SoRR solver needs a single-row loss surface")
    if dual_step not in ("theta", "eta"):
        raise ConfigError("dual_step must be 'theta' or 'eta'")
    theta = sched.eta if dual_step == "eta" else sched.theta
    sched1 = SbcdSchedule(T=sched.T, eta=sched.eta, theta=theta, I=1, J=sched.J)
    return run_kernel(prob.surface, prob.w, prob.w, init_lambda, prob.l, sched1,
                      1.0 / prob.mu, None, rng, outer)


def stochastic_subgradient(surface: PairSurface, v, lam, l, rows, cols):
    """(G_v, G_lambda) on the minibatch ``rows`` x ``cols``.

    G_lambda has one entry per element of ``rows``.
    """
    surface = surface_of(surface)
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    v = np.asarray(v, dtype=np.float64)
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    S = surface.losses(v)[np.ix_(rows, cols)]
    active = (S > lam[rows][:, None]).astype(np.float64)
    slopes = surface.loss_slopes(v)[np.ix_(rows, cols)] * active
    g = slopes.sum(axis=1) @ surface.left[rows] - slopes.sum(axis=0) @ surface.right[cols]
    g *= surface.n_left * surface.n_right / (rows.size * cols.size)
    g_lam = l - surface.n_right / cols.size * active.sum(axis=1)
    return g, g_lam


def full_subgradient(surface, v, lam):
    """sum_ij grad s_ij(v) 1(s_ij(v) > lam_i), the full-batch G_v / (N+ N-)."""
    surface = surface_of(surface)
    v = np.asarray(v, dtype=np.float64)
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    active = (surface.losses(v) > lam[:, None]).astype(np.float64)
    return surface.weighted_grad(v, active)


def closed_form_step(w, v, g, eta, mu):
    """argmin_u g.u + ||u - w||^2/(2 mu) + ||u - v||^2/(2 eta)."""
    return _kernels.primal_step(np.asarray(w, dtype=np.float64),
                                np.asarray(v, dtype=np.float64),
                                np.asarray(g, dtype=np.float64), float(eta),
                                0.0 if mu == np.inf else 1.0 / mu)


def reference_solve(surface, w, lam0, l, sched: SbcdSchedule, mu, batches):
    """Pure-numpy loop over given (rows, cols) batches; used to check the kernel."""
    surface = surface_of(surface)
    w = np.asarray(w, dtype=np.float64)
    v = w.copy()
    lam = np.atleast_1d(np.asarray(lam0, dtype=np.float64)).copy()
    v_sum = np.zeros_like(v)
    lam_sum = np.zeros_like(lam)
    for t, (rows, cols) in enumerate(batches):
        v_sum += v
        lam_sum += lam
        g, g_lam = stochastic_subgradient(surface, v, lam, l, rows, cols)
        lam = lam.copy()
        lam[np.asarray(rows)] -= sched.theta[t] * g_lam
        v = closed_form_step(w, v, g, sched.eta[t], mu)
    T = len(batches)
    return ProxResult(v_sum / T, lam_sum / T, v, lam, T)
