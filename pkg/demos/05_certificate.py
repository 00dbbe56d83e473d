"""
Certifying near-criticality
===========================

At any w the two proximal points v_m, v_n give a vector
xi = (v_m - v_n) / mu which is a difference of subgradients of f^n and
f^m taken at points within ||w - v_m|| and ||w - v_n|| of w. The oracle
computes them to high accuracy, and the gradient of the smoothed
objective matches finite differences.
"""

import numpy as np

from paucopt.agd import AgdConfig, agd_run, certify, smoothed_objective, theory_parameters
from paucopt.dataset import SyntheticSpec, generate_synthetic
from paucopt.oracle import finite_difference_grad
from paucopt.ranked_range import PAucRange

ds = generate_synthetic(SyntheticSpec(n_pos=10, n_neg=30, d=2, seed=0))
r = PAucRange.from_fpr(0.1, 0.5, ds.n_neg)
mu, gamma = theory_parameters(ds)
print("theory parameters: mu = %.3e, gamma = %.3e" % (mu, gamma))

w = np.array([0.3, -0.8])
value, grad, _ = smoothed_objective(w, ds, r, mu)
fd = finite_difference_grad(lambda x: smoothed_objective(x, ds, r, mu)[0], w, h=1e-4)
print("grad F^mu:", grad, " finite differences:", fd)

# The theory step size gamma = 1/L_mu is tiny on this instance, so thirty
# outer steps only shrink ||xi|| moderately.
for label, point in (("start", w),
                     ("after AGD", agd_run(ds, r, AgdConfig(K=30, C=50, seed=0), w)[0])):
    c = certify(point, ds, r, mu)
    print("%-9s ||xi|| = %.3e  ||w - v_m|| = %.3e  ||w - v_n|| = %.3e" % (
        label, c.xi_norm, c.dist_to_vm, c.dist_to_vn))
