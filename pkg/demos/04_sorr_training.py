"""
Sum of ranked range regression
==============================

The SoRR loss averages the individual losses ranked m+1..n, ignoring the
m largest (often outliers, here flipped labels) and the easy tail. The
same solver handles it with a single dual threshold.
"""

import numpy as np

from paucopt.agd import AgdConfig, agd_run
from paucopt.dataset import generate_logistic_regression
from paucopt.ranked_range import dc_objective, f_l

ds = generate_logistic_regression(n=2000, d=5, flip=0.05, seed=0)
N = ds.n
m, n = 100, 600

cfg = AgdConfig(K=50, C=50, J=10, strict=False, mu=1e3 / N, gamma=2e2 / N, seed=0)
w, trace, _ = agd_run(ds, (m, n), cfg, np.zeros(ds.d))
loss = trace.column("normalized_loss")
print("SoRR loss: initial %.4f, after 10/25/50 outer steps %.4f / %.4f / %.4f" % (
    trace.initial_loss, loss[9], loss[24], loss[-1]))

acc = np.mean((ds.features @ w > 0) == (ds.targets == 1))
print("training accuracy of the final model: %.3f" % acc)

# With m = 0 the ranked range is just the top-n sum.
print("F(w) with m = 0 equals the top-n sum:", dc_objective(w, ds, (0, n)) == f_l(w, ds, n))
