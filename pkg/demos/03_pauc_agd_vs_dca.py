"""
Partial AUC training: approximate gradient descent versus DCA
=============================================================

Both solvers minimise the same pairwise logistic surrogate restricted to
the false-positive window [0.1, 0.5]. The x-axis of the comparison is the
number of epoch-equivalents (pairs touched divided by the number of pairs).
"""

import numpy as np

from paucopt.agd import AgdConfig, agd_run
from paucopt.baselines import DcaConfig, dca_run
from paucopt.dataset import SyntheticSpec, generate_synthetic
from paucopt.ranked_range import PAucRange

ds = generate_synthetic(SyntheticSpec(n_pos=50, n_neg=500, d=2, seed=0))
r = PAucRange.from_fpr(0.1, 0.5, ds.n_neg)
PQ = ds.n_pos * ds.n_neg
print("negative rank window (m, n] =", (r.m, r.n))

agd_cfg = AgdConfig(K=40, C=50, strict=False, mu=1e3 / PQ, gamma=2e3 / PQ, seed=0)
w_agd, agd_trace, cert = agd_run(ds, r, agd_cfg, np.zeros(2))
_, dca_trace = dca_run(ds, r, DcaConfig(K=40, C=50, seed=0), np.zeros(2))

print("%4s  %10s %10s %7s   %10s %10s %7s" % ("k", "AGD epoch", "loss", "pAUC",
                                              "DCA epoch", "loss", "pAUC"))
for k in list(range(0, 40, 5)) + [39]:
    a, d = agd_trace.records[k], dca_trace.records[k]
    print("%4d  %10.3f %10.5f %7.4f   %10.3f %10.5f %7.4f" % (
        k, a.epoch, a.normalized_loss, a.train_pauc, d.epoch, d.normalized_loss, d.train_pauc))

# The certificate bounds the distance to a nearly critical point of the
# nonsmooth objective through the two proximal points.
print("returned iterate k =", agd_trace.best_index, "certificate eps =", cert.epsilon())
