"""Discrete probability measures on R^n.

A measure is a finite list of atoms (points) with nonnegative weights summing
to one.  Everything here is immutable: operations return new measures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

WEIGHT_SUM_TOL = 1e-6
UNIT_NORM_TOL = 1e-12


class MeasureError(ValueError):
    """Invalid measure data or incompatible dimensions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point cloud ``sum_i w_i delta_{x_i}``.

    Parameters
    ----------
    points : array_like, shape (m, n) or (m,)
        Support points.  A 1-D array is read as m points in R^1.
    weights : array_like, shape (m,), optional
        Nonnegative weights.  Uniform when omitted.  A raw sum within 1e-6
        of one is renormalized; anything further off is rejected.

    Duplicate points are kept as separate atoms.
    """

    points: np.ndarray
    weights: np.ndarray

    def __init__(self, points, weights=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise MeasureError(f"points must have shape (m, n) with m, n >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("points must be finite")
        m = pts.shape[0]
        if weights is None:
            w = np.full(m, 1.0 / m)
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
            if w.shape[0] != m:
                raise MeasureError(f"got {w.shape[0]} weights for {m} points")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise MeasureError("weights must be finite and nonnegative")
            total = w.sum()
            if abs(total - 1.0) >= WEIGHT_SUM_TOL:
                raise MeasureError(f"weights sum to {total!r}, expected 1")
            w = w / total
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def _with_weights_of(cls, points, other: "DiscreteMeasure") -> "DiscreteMeasure":
        """New points carrying ``other``'s already validated weights verbatim."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] != other.size:
            raise MeasureError(f"expected {other.size} points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("points must be finite")
        nu = object.__new__(cls)
        object.__setattr__(nu, "points", _frozen(pts))
        object.__setattr__(nu, "weights", other.weights)
        return nu

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        return cls(points)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.weights - 1.0 / self.size) <= tol))

    def has_equal_weights(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def __repr__(self) -> str:
        return f"DiscreteMeasure(size={self.size}, dim={self.dim})"


class Moments(NamedTuple):
    """Mean vector and (scalar) second moment ``sum_i w_i |x_i|^2``."""

    mean: np.ndarray
    second_moment: float

    @property
    def centered(self) -> float:
        """``M2 - |E|^2``, the total variance."""
        return float(self.second_moment - self.mean @ self.mean)


def as_direction(theta, dim: int | None = None) -> np.ndarray:
    """Validate a unit vector and return it as a float array."""
    t = np.asarray(theta, dtype=float).reshape(-1)
    if dim is not None and t.shape[0] != dim:
        raise MeasureError(f"direction has dimension {t.shape[0]}, expected {dim}")
    if abs(np.linalg.norm(t) - 1.0) > UNIT_NORM_TOL:
        raise MeasureError("direction must have unit norm")
    return t


def check_same_dim(*measures: DiscreteMeasure) -> int:
    dims = {mu.dim for mu in measures}
    if len(dims) != 1:
        raise MeasureError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def project(sigma: DiscreteMeasure, theta) -> DiscreteMeasure:
    """Pushforward of ``sigma`` under ``x -> x . theta`` (point order kept)."""
    t = as_direction(theta, sigma.dim)
    return DiscreteMeasure._with_weights_of(sigma.points @ t, sigma)


def moments(sigma: DiscreteMeasure) -> Moments:
    w = sigma.weights
    mean = w @ sigma.points
    m2 = float(w @ np.einsum("ij,ij->i", sigma.points, sigma.points))
    return Moments(mean, m2)


PointMap = Callable[[np.ndarray], np.ndarray]


def pushforward(sigma: DiscreteMeasure, T: PointMap) -> DiscreteMeasure:
    """Map every atom through ``T``; weights are reused and atoms never merged.

    ``T`` is called once on the full ``(m, n)`` array of points.
    """
    out = np.asarray(T(sigma.points), dtype=float)
    if out.ndim == 1 and sigma.dim == 1:
        out = out[:, None]
    if out.shape != sigma.points.shape:
        raise MeasureError(f"map returned shape {out.shape}, expected {sigma.points.shape}")
    return DiscreteMeasure._with_weights_of(out, sigma)


def from_image(grid) -> DiscreteMeasure:
    """Grayscale intensities to a measure on R^2.

    Pixel (row i, col j) of an H x W grid becomes the point ``(j, H-1-i)``
    with weight proportional to its intensity.  Zero pixels are dropped;
    atoms are listed in row-major pixel order.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2:
        raise MeasureError(f"image must be 2-D, got shape {g.shape}")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise MeasureError("image intensities must be finite and nonnegative")
    total = g.sum()
    if total <= 0:
        raise MeasureError("image has no positive intensity")
    H = g.shape[0]
    rows, cols = np.nonzero(g > 0)
    pts = np.column_stack([cols, H - 1 - rows]).astype(float)
    return DiscreteMeasure(pts, g[rows, cols] / total)


def to_image(nu: DiscreteMeasure, shape: tuple[int, int]) -> np.ndarray:
    """Bin atom mass into an H x W grid, the inverse convention of :func:`from_image`.

    Each atom lands in its nearest pixel; atoms outside the grid are clipped
    to the border.  Returns the per-pixel mass (sums to one).
    """
    if nu.dim != 2:
        raise MeasureError("only 2-D measures can be rendered")
    H, W = shape
    j = np.clip(np.rint(nu.points[:, 0]).astype(int), 0, W - 1)
    i = np.clip(H - 1 - np.rint(nu.points[:, 1]).astype(int), 0, H - 1)
    img = np.zeros((H, W))
    np.add.at(img, (i, j), nu.weights)
    return img
