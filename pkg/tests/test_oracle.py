import numpy as np
import pytest
from scipy.optimize import minimize

from paucopt.dataset import BinaryDataset, RegressionDataset
from paucopt.oracle import (dual_min_scan, enumerate_minibatch_mean, finite_difference_grad,
                            moreau_value, prox_objective, prox_point_exact, top_l_select)
from paucopt.prox_solver import ConfigError
from paucopt.ranked_range import f_l, top_l_sum
from paucopt.surrogate import estimate_constants, surface_of


def _instance(seed, n_pos=3, n_neg=8, d=2):
    rng = np.random.default_rng(seed)
    ds = BinaryDataset(rng.standard_normal((n_pos, d)), rng.standard_normal((n_neg, d)) + 0.3)
    return ds, rng


def test_selection_top_l_matches_sort():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(1, 30))
        # dyadic entries make every summation order exact
        S = rng.integers(-512, 512, size=n) / 4.0
        l = int(rng.integers(0, n + 1))
        assert top_l_select(S, l) == top_l_sum(S, l)


def test_selection_top_l_floats():
    rng = np.random.default_rng(1)
    for _ in range(500):
        S = rng.standard_normal(int(rng.integers(1, 50)))
        l = int(rng.integers(0, S.size + 1))
        assert top_l_select(S, l) == pytest.approx(top_l_sum(S, l), abs=1e-12)


def test_dual_scan_returns_argmin():
    val, lam = dual_min_scan([3.0, 1.0, 2.0], 2)
    assert val == 5.0 and 1.0 <= lam <= 2.0
    val, lam = dual_min_scan([3.0, 1.0, 2.0], 0)
    assert val == 0.0 and lam >= 3.0


def test_finite_difference_on_quadratic():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = np.array([0.3, -1.2])
    g = finite_difference_grad(lambda u: 0.5 * u @ A @ u, x, h=1e-3)
    np.testing.assert_allclose(g, A @ x, rtol=1e-10)


def test_enumeration_guard():
    ds, _ = _instance(0, n_pos=5, n_neg=3)
    with pytest.raises(ValueError):
        enumerate_minibatch_mean(ds, 1, np.zeros(5), np.zeros(2), 1, 1)


def test_single_subset_is_full_subgradient(toy_2x3):
    from paucopt.prox_solver import full_subgradient
    v, lam = np.array([0.4, -0.3]), np.array([0.6, 0.7])
    np.testing.assert_array_equal(enumerate_minibatch_mean(toy_2x3, 2, lam, v, 2, 3),
                                  full_subgradient(surface_of(toy_2x3), v, lam))


def test_l_zero_is_exact_anchor():
    ds, rng = _instance(2)
    w = rng.standard_normal(2)
    v, rep = prox_point_exact(w, ds, 0, 0.01)
    assert v.tobytes() == w.tobytes() and rep.converged
    val, _, _ = moreau_value(w, ds, 0, 0.01)
    assert val == 0.0


def test_rejects_non_strongly_convex():
    ds, _ = _instance(3)
    rho = estimate_constants(ds).rho
    with pytest.raises(ConfigError):
        prox_point_exact(np.zeros(2), ds, 2, 1.5 / rho)


def test_tie_free_region_matches_smooth_newton():
    # with a large margin between the l-th and (l+1)-th losses of every row
    # the top-l sets stay fixed near w, so the prox is a smooth problem
    pos = np.array([[2.0, 0.0], [1.5, 0.5]])
    neg = np.array([[3.0, 0.1], [2.8, -0.2], [-3.0, 0.0], [-2.5, 0.4], [-4.0, 0.3]])
    ds = BinaryDataset(pos, neg)
    mu = 0.2 / estimate_constants(ds).rho
    w = np.array([1.0, 0.2])
    l = 2
    surf = surface_of(ds)
    S = surf.losses(w)
    top = np.argsort(-S, axis=1)[:, :l]

    def smooth(v):
        z = surf.margins(v)
        vals = np.logaddexp(0, -np.take_along_axis(z, top, axis=1))
        return vals.sum() + np.dot(v - w, v - w) / (2 * mu)

    v_ref = minimize(smooth, w, method="Newton-CG",
                     jac=lambda v: finite_difference_grad(smooth, v, 1e-6),
                     options={"xtol": 1e-14}).x
    v_ref = minimize(smooth, v_ref, method="BFGS", options={"gtol": 1e-13}).x
    v, rep = prox_point_exact(w, ds, l, mu, tol=1e-12)
    assert rep.converged
    np.testing.assert_allclose(v, v_ref, atol=1e-9)
    # the active sets really did not change
    S_v = surf.losses(v)
    assert np.array_equal(np.sort(np.argsort(-S_v, axis=1)[:, :l]), np.sort(top))


def test_prox_is_idempotent_and_certified():
    for seed in range(10):
        ds, rng = _instance(10 + seed, n_pos=3, n_neg=7)
        mu = 0.5 / estimate_constants(ds).rho
        w = 2 * rng.standard_normal(2)
        for l in (1, 3, 6, 7):
            v, rep = prox_point_exact(w, ds, l, mu, tol=1e-10)
            assert rep.converged and rep.tolerance <= 1e-10
            v2, rep2 = prox_point_exact(w, ds, l, mu, tol=1e-10, v_init=v)
            assert np.linalg.norm(v2 - v) < 1e-10
            # v is no worse than random nearby points
            p = prox_objective(v, w, ds, l, mu)
            for _ in range(20):
                u = v + 1e-3 * rng.standard_normal(2)
                assert prox_objective(u, w, ds, l, mu) >= p - 1e-12


def test_prox_bound_with_row_count():
    # every subgradient of f^l = sum_i phi_l(S_i) has norm <= N+ l B
    ds, rng = _instance(20, n_pos=4, n_neg=10)
    c = estimate_constants(ds)
    mu = 0.5 / c.rho
    for _ in range(30):
        w = 3 * rng.standard_normal(2)
        l = int(rng.integers(1, 11))
        v, rep = prox_point_exact(w, ds, l, mu)
        assert np.linalg.norm(w - v) <= mu * l * c.B * ds.n_pos


def test_prox_bound_single_row():
    # with one left row (the SoRR task) the bound is mu l B itself
    rng = np.random.default_rng(23)
    ds = RegressionDataset(rng.standard_normal((15, 2)), (rng.random(15) < 0.5).astype(float))
    c = estimate_constants(ds)
    mu = 0.5 / c.rho
    for _ in range(30):
        w = 3 * rng.standard_normal(2)
        l = int(rng.integers(1, 16))
        v, _ = prox_point_exact(w, ds, l, mu)
        assert np.linalg.norm(w - v) <= mu * l * c.B


def test_moreau_below_function():
    ds, rng = _instance(21)
    mu = 0.5 / estimate_constants(ds).rho
    for _ in range(10):
        w = 2 * rng.standard_normal(2)
        for l in (1, 4, 8):
            val, v, rep = moreau_value(w, ds, l, mu)
            assert val <= f_l(w, ds, l) + 1e-12


def test_sorr_prox():
    rng = np.random.default_rng(22)
    ds = RegressionDataset(rng.standard_normal((12, 3)), (rng.random(12) < 0.5).astype(float))
    mu = 0.5 / estimate_constants(ds).rho
    w = rng.standard_normal(3)
    v, rep = prox_point_exact(w, ds, 4, mu, tol=1e-10)
    assert rep.converged


def test_against_conic_solver():
    cp = pytest.importorskip("cvxpy")
    ds, rng = _instance(30, n_pos=4, n_neg=12)
    surf = surface_of(ds)
    D = (surf.left[:, None, :] - surf.right[None, :, :]).reshape(-1, 2)
    for mu in (0.01, 0.1, 1.0):
        w = rng.standard_normal(2)
        for l in (3, 7):
            # for a linear scorer every s_ij is convex, so the prox problem is
            # convex for any mu > 0 and can be handed to a conic solver
            v = cp.Variable(2)
            lam = cp.Variable(4)
            losses = cp.reshape(cp.logistic(-D @ v), (4, 12), order="C")
            obj = l * cp.sum(lam) + cp.sum(cp.pos(losses - lam[:, None])) + \
                cp.sum_squares(v - w) / (2 * mu)
            prob = cp.Problem(cp.Minimize(obj))
            prob.solve(solver=cp.CLARABEL)
            v_or, rep = prox_point_exact(w, ds, l, mu, tol=1e-10, rho=0.0)
            assert rep.converged
            assert np.linalg.norm(v_or - v.value) < 1e-5
            assert prox_objective(v_or, w, ds, l, mu) <= prox_objective(v.value, w, ds, l, mu) + 1e-12
