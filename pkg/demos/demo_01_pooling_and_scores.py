"""
From frame features to a competition score
==========================================

A walk through the two ends of the pipeline: turning a window of per-frame
features into one fixed-size vector, and turning predictions into the
PLCC/SRCC-based score used to rank submissions.
"""

import numpy as np

from vra.errors import DegenerateInput
from vra.metrics import SetMetrics, final_score, plcc, rmse_metric, srcc
from vra.pooling import pool_concat

rng = np.random.default_rng(0)

# A five-frame window of 4-dimensional features.
window = rng.normal(size=(5, 4))
pooled = pool_concat(window)
print("mean:", np.round(pooled.mean, 3))
print("std: ", np.round(pooled.std, 3))
print("frame dim", pooled.dim, "-> head input of", pooled.concat.size, "values")

# The std uses the n-1 denominator, so two frames 2 apart give sqrt(2).
print(pool_concat(np.array([[0.0], [2.0]])).std)

###############################################################################
# Correlations
# ------------
# PLCC measures linear agreement, SRCC only the ordering.  A cubic keeps the
# order intact, so SRCC stays at 1 while PLCC drops below it.

x = np.linspace(-2, 2, 21)
print("plcc(x, x^3) =", round(plcc(x, x ** 3), 4))
print("srcc(x, x^3) =", srcc(x, x ** 3))

# Tied values share the average of the ranks they occupy.
print("srcc with ties:", round(srcc([1, 2, 2, 3], [1, 2, 3, 4]), 6))

# RMSE is on the label scale.
print("rmse:", rmse_metric([0.0, 0.0], [3.0, 4.0]))

# A constant prediction vector has no correlation at all; it is an error,
# not a zero.
try:
    plcc(np.full(5, 3.0), x[:5])
except DegenerateInput as exc:
    print("refused:", exc)

###############################################################################
# Final score
# -----------
# Each test set contributes (PLCC + SRCC) / 2 and the sets are averaged
# without weighting by their size.  Three published per-set results:

sets = [SetMetrics(0.8305, 0.7919), SetMetrics(0.9158, 0.9119), SetMetrics(0.8726, 0.8285)]
print("final score:", round(final_score(sets), 4))
