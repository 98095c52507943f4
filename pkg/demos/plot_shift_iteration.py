"""
Single-slice matching of a pure shift
=====================================

Matching one random direction at a time removes the component of the shift
along that direction.  The leftover shift obeys
``b_{k+1} = b_k - theta_k (theta_k . b_k)``, so its mean squared norm decays
like ``(1 - 1/n)^k``.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slicematch import DiscreteMeasure, StepSchedule, iterate, make_rng, pushforward

rng = make_rng(4)
source = DiscreteMeasure(rng.standard_normal((20, 2)))
b = np.array([3.0, -2.0])
target = pushforward(source, lambda X: X + b)

K, runs = 15, 300
gaps = np.zeros((runs, K + 1))
for r in range(runs):
    trace = iterate(source, target, StepSchedule("constant", 1.0, K), sampler="direction", rng=rng, tol=0.0)
    gaps[r] = [step.mean_gap_sq for step in trace.steps]

###############################################################################
# Compare with the predicted rate for n = 2.

k = np.arange(K + 1)
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.semilogy(k, gaps.mean(axis=0) / (b @ b), "o", label="single-slice runs")
ax.semilogy(k, 0.5**k, "-", label="$(1-1/n)^k$")
ax.set_xlabel("step k")
ax.set_ylabel("mean $|b_k|^2 / |b_0|^2$")
ax.legend()
fig.tight_layout()
fig.savefig("shift_iteration.png", dpi=90)
