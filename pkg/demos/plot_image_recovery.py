"""
Recovering a scale-and-shift between images
===========================================

When the target image is a scaled and shifted copy of the source, one
matrix-slice step with any orthogonal matrix reproduces it, up to pixel
binning.  Here the map is ``T(x) = 1.6 (x + (-35, 20))`` on an 84 x 84 grid.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slicematch import apply_operator, from_image, pushforward, sample_haar_orthogonal, to_image

H = W = 84
yy, xx = np.mgrid[0:H, 0:W]
up = H - 1 - yy
grid = np.zeros((H, W))
grid[((xx - 52) / 12.0) ** 2 + ((up - 14) / 8.0) ** 2 <= 1] = 1.0
grid[(np.abs(xx - 45) <= 2) & (up >= 6) & (up <= 26)] = 0.6

source = from_image(grid)
target_img = to_image(pushforward(source, lambda X: 1.6 * (X + np.array([-35.0, 20.0]))), grid.shape)
target = from_image(target_img)

P = sample_haar_orthogonal(np.random.default_rng(3), 2)
matched_img = to_image(apply_operator(source, target, P), grid.shape)

###############################################################################
# The matched image sits on top of the target.

fig, axes = plt.subplots(1, 3, figsize=(9, 3.2))
for ax, img, title in zip(axes, (grid, matched_img, target_img), ("source", "one step", "target")):
    ax.imshow(img, cmap="gray_r")
    ax.set_title(title)
    ax.set_axis_off()
fig.tight_layout()
fig.savefig("image_recovery.png", dpi=90)

print("pixels where support differs:", int(np.sum((matched_img > 0) != (target_img > 0))), "of", H * W)
