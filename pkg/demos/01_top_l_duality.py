"""
Top-l sums as a minimum over a threshold
========================================

The sum of the l largest entries of a vector is the minimum over a scalar
threshold lambda of ``l * lambda + sum_j [s_j - lambda]_+``. This script
checks the identity on a small vector and shows the interval of optimal
thresholds.
"""

import numpy as np

from paucopt.oracle import dual_min_scan
from paucopt.ranked_range import (dual_objective_rows, lambda_intervals_from_losses,
                                  ranked_range_sum, top_l_sum)

S = np.array([0.9, 2.5, 0.1, 1.7, 1.2, 3.0])
l = 3

# The direct definition: sort and add up the top three entries.
print("top-3 sum          :", top_l_sum(S, l))

# The variational form: scan the kinks of the piecewise-linear function.
value, lam = dual_min_scan(S, l)
print("min over lambda    :", value, "attained at lambda =", lam)

# Every threshold between the 4th and the 3rd largest entry is optimal.
iv = lambda_intervals_from_losses(S, l)
print("optimal interval   : [%g, %g]" % (iv.lo[0], iv.hi[0]))
for x in np.linspace(iv.lo[0] - 0.5, iv.hi[0] + 0.5, 7):
    print("  g(%.3f) = %.4f" % (x, dual_objective_rows(S[None, :], np.array([x]), l)[0]))

# A ranked range, the (m+1)-th through n-th largest entries, is the
# difference of two top-l sums -- the structure behind both the partial
# AUC and the SoRR objectives.
print("sum of ranks 2..4  :", ranked_range_sum(S, 1, 4),
      "=", top_l_sum(S, 4) - top_l_sum(S, 1))
