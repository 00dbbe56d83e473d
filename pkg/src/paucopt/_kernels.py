"""Compiled inner loop shared by the stochastic block coordinate solvers.

One kernel covers the proximal SBCD subproblem, the SoRR variant (a single
left row) and the plain/proximal DCA subproblems: the primal step is the
closed-form minimizer of

    (G - xi).v + inv_mu/2 ||v - w||^2 + 1/(2 eta) ||v - v_t||^2,

which reduces to v_t - eta (G - xi) when inv_mu == 0.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _softplus_neg(z):
    # log(1 + exp(-z))
    if z > 0.0:
        return np.log1p(np.exp(-z))
    return -z + np.log1p(np.exp(z))


@njit(cache=True)
def _sigmoid_neg(z):
    # 1 / (1 + exp(z))
    if z > 0.0:
        e = np.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + np.exp(z))


@njit(cache=True)
def primal_step(w, v, g, eta, inv_mu):
    if inv_mu == 0.0:
        return v - eta * g
    return (eta * inv_mu * w + (v - eta * g)) / (eta * inv_mu + 1.0)


@njit(cache=True)
def _log_expm1(x):
    # log(exp(x) - 1) for x > 0
    if x > 30.0:
        return x + np.log1p(-np.exp(-x))
    return np.log(np.expm1(x))


@njit(cache=True)
def sbcd_kernel(left, right, offset, w, v0, lam0, l, eta, theta, inv_mu, xi,
                n_i, n_j, seed, bound):
    """Run len(eta) iterations; returns averages, last iterate and status.

    status is -1 on success, otherwise the index of the step whose iterate
    left the ball of radius ``bound`` or became non-finite.
    """
    np.random.seed(seed)
    n_left = left.shape[0]
    n_right = right.shape[0]
    d = left.shape[1]
    T = eta.shape[0]
    scale = (n_left * n_right) / (n_i * n_j)
    dual_scale = n_right / n_j
    # offsets in {0, 1} allow the activity test s_ij > lam_i on margins
    binary = True
    for b in range(n_right):
        if offset[b] != 0.0 and offset[b] != 1.0:
            binary = False

    v = v0.copy()
    lam = lam0.copy()
    v_sum = np.zeros(d)
    lam_sum = np.zeros(n_left)
    perm_i = np.arange(n_left)
    perm_j = np.arange(n_right)
    a_score = np.empty(n_i)
    b_score = np.empty(n_j)
    thresh = np.empty(n_i)
    coef_i = np.empty(n_i)
    coef_j = np.empty(n_j)
    count = np.empty(n_i)
    g = np.empty(d)
    status = -1

    for t in range(T):
        for k in range(d):
            v_sum[k] += v[k]
        for i in range(n_left):
            lam_sum[i] += lam[i]
        if n_i < n_left:
            for a in range(n_i):
                b = np.random.randint(a, n_left)
                tmp = perm_i[a]
                perm_i[a] = perm_i[b]
                perm_i[b] = tmp
        if n_j < n_right:
            for a in range(n_j):
                b = np.random.randint(a, n_right)
                tmp = perm_j[a]
                perm_j[a] = perm_j[b]
                perm_j[b] = tmp

        for a in range(n_i):
            row = perm_i[a]
            acc = 0.0
            for k in range(d):
                acc += left[row, k] * v[k]
            a_score[a] = acc
            coef_i[a] = 0.0
            count[a] = 0.0
            lam_a = lam[row]
            thresh[a] = _log_expm1(lam_a) if lam_a > 0.0 else -np.inf
        for b in range(n_j):
            col = perm_j[b]
            acc = 0.0
            for k in range(d):
                acc += right[col, k] * v[k]
            b_score[b] = acc
            coef_j[b] = 0.0

        for a in range(n_i):
            lam_a = lam[perm_i[a]]
            th = thresh[a]
            for b in range(n_j):
                z = a_score[a] - b_score[b]
                c = offset[perm_j[b]]
                if binary:
                    # softplus(-z) > lam  <=>  -z > log(expm1(lam)); softplus(z) likewise
                    active = (-z > th) if c == 0.0 else (z > th)
                else:
                    active = _softplus_neg(z) + c * z > lam_a
                if active:
                    slope = c - _sigmoid_neg(z)
                    coef_i[a] += slope
                    coef_j[b] += slope
                    count[a] += 1.0

        for k in range(d):
            g[k] = 0.0
        for a in range(n_i):
            ca = coef_i[a]
            if ca != 0.0:
                row = perm_i[a]
                for k in range(d):
                    g[k] += ca * left[row, k]
        for b in range(n_j):
            cb = coef_j[b]
            if cb != 0.0:
                col = perm_j[b]
                for k in range(d):
                    g[k] -= cb * right[col, k]
        for k in range(d):
            g[k] = scale * g[k] - xi[k]

        for a in range(n_i):
            i = perm_i[a]
            lam[i] = lam[i] - theta[t] * (l - dual_scale * count[a])
        v = primal_step(w, v, g, eta[t], inv_mu)

        norm = np.sqrt(np.dot(v, v))
        if not np.isfinite(norm) or norm > bound:
            status = t
            break

    n_done = T if status < 0 else status + 1
    return v_sum / n_done, lam_sum / n_done, v, lam, status
