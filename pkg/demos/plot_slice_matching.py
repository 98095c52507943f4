"""
One step of matrix-slice matching
=================================

Push a source cloud toward a target by matching the 1-D projections along
the columns of an orthogonal matrix.  The result depends on the matrix, but
its mean and second moment always equal the target's.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slicematch import DiscreteMeasure, apply_operator, moments, pushforward, rotation, sliced_residual

rng = np.random.default_rng(0)

# A skewed source and a banana-shaped target, 300 atoms each.
source = DiscreteMeasure(rng.standard_normal((300, 2)) * [1.0, 0.3])
t = rng.uniform(-1.2, 1.2, 300)
target = DiscreteMeasure(np.column_stack([3 * np.sin(t), 3 * np.cos(t) - 2]) + 0.2 * rng.standard_normal((300, 2)))

###############################################################################
# Three rotations give three different pushed measures.

fig, axes = plt.subplots(1, 3, figsize=(11, 3.6), sharex=True, sharey=True)
for ax, i in zip(axes, (1, 2, 3)):
    angle = (2 * i - 1) * np.pi / 12
    P = rotation(angle)
    pushed = apply_operator(source, target, P)
    ax.scatter(*target.points.T, s=4, c="0.75", label="target")
    ax.scatter(*pushed.points.T, s=4, c="C3", label="matched")
    for col in P.T:
        ax.plot([0, 2 * col[0]], [0, 2 * col[1]], "k-", lw=1)
    ax.set_title(f"angle {angle:.3f}, residual {sliced_residual(source, target, P):.2f}")
axes[0].legend(loc="lower left")
fig.tight_layout()
fig.savefig("slice_matching_rotations.png", dpi=90)

###############################################################################
# Moments match for every matrix.

P = rotation(0.4)
print("target  ", moments(target))
print("matched ", moments(apply_operator(source, target, P)))

###############################################################################
# Shifting and scaling the source does not change the result.

moved = pushforward(source, lambda X: 2.5 * X + [4.0, -1.0])
a = apply_operator(source, target, P).points
b = apply_operator(moved, target, P).points
print("max difference after moving the source:", np.abs(np.sort(a, axis=0) - np.sort(b, axis=0)).max())
