"""Exact one-dimensional optimal transport for discrete measures.

The monotone map is ``F_mu^{-1} o F_sigma`` with the right-continuous CDF and
the left-continuous quantile ``F^{-1}(q) = inf{t : F(t) >= q}``.  The squared
distance integrates the piecewise-constant quantile difference exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import DiscreteMeasure, MeasureError

# Slack when comparing a probability level against cumulative weights, so that
# levels equal to a breakpoint up to round-off land on the lower atom.
QUANTILE_TOL = 1e-12
# Projections computed through different BLAS paths (``X @ P`` versus
# ``X @ theta``) can disagree in the last bits.  A map evaluated within this
# many ulps of a source atom is treated as evaluated at the atom.
SNAP_ULPS = 64


def _require_1d(nu: DiscreteMeasure) -> None:
    if nu.dim != 1:
        raise MeasureError(f"expected a 1-D measure, got dimension {nu.dim}")


def collapse(values, weights) -> tuple[np.ndarray, np.ndarray]:
    """Sorted distinct support and cumulative weights (last entry exactly 1).

    Zero-weight atoms are discarded and tied values merged.  Sorting is
    stable so ties resolve by original index.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    keep = w > 0
    v, w = v[keep], w[keep]
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    support, start = np.unique(v, return_index=True)
    cum = np.cumsum(np.add.reduceat(w, start))
    cum /= cum[-1]
    cum[-1] = 1.0
    return support, cum


def _cdf(support: np.ndarray, cum: np.ndarray, t) -> np.ndarray:
    k = np.searchsorted(support, t, side="right")
    return np.where(k == 0, 0.0, cum[np.maximum(k - 1, 0)])


def _quantile(support: np.ndarray, cum: np.ndarray, q) -> np.ndarray:
    j = np.searchsorted(cum, np.asarray(q) - QUANTILE_TOL, side="left")
    return support[np.clip(j, 0, support.shape[0] - 1)]


def cdf(nu: DiscreteMeasure, t):
    """``F_nu(t) = sum{w_i : x_i <= t}``."""
    _require_1d(nu)
    support, cum = collapse(nu.points[:, 0], nu.weights)
    out = _cdf(support, cum, t)
    return float(out) if np.ndim(t) == 0 else out


def quantile(nu: DiscreteMeasure, q):
    """Left-continuous generalized inverse of the CDF, for ``0 < q <= 1``."""
    _require_1d(nu)
    qa = np.asarray(q, dtype=float)
    if np.any(qa <= 0) or np.any(qa > 1):
        raise MeasureError("quantile level must lie in (0, 1]")
    support, cum = collapse(nu.points[:, 0], nu.weights)
    out = _quantile(support, cum, qa)
    return float(out) if qa.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SliceMap1D:
    """Monotone transport map between two 1-D discrete measures.

    Evaluates ``quantile_dst(cdf_src(t))`` anywhere on R.  Below the source
    support the CDF is zero and the map returns the smallest target atom.
    An atom of the source that straddles several target atoms is sent to the
    rightmost quantile it reaches, so the map stays a function.  Points
    within ``SNAP_ULPS`` ulps below a source atom count as that atom.
    """

    src_support: np.ndarray
    src_cum: np.ndarray
    dst_support: np.ndarray
    dst_cum: np.ndarray

    @classmethod
    def from_arrays(cls, x, wx, y, wy) -> "SliceMap1D":
        s, cs = collapse(x, wx)
        d, cd = collapse(y, wy)
        for a in (s, cs, d, cd):
            a.setflags(write=False)
        return cls(s, cs, d, cd)

    def __call__(self, t):
        scale = np.max(np.abs(self.src_support))
        snap = SNAP_ULPS * np.spacing(scale) if scale > 0 else 0.0
        q = _cdf(self.src_support, self.src_cum, np.asarray(t, dtype=float) + snap)
        out = _quantile(self.dst_support, self.dst_cum, q)
        return float(out) if np.ndim(t) == 0 else out

    def max_slope(self) -> float:
        """Largest difference quotient between consecutive source atoms."""
        if self.src_support.shape[0] < 2:
            return 0.0
        img = self(self.src_support)
        return float(np.max(np.diff(img) / np.diff(self.src_support)))


def ot_map_1d(sigma1: DiscreteMeasure, mu1: DiscreteMeasure) -> SliceMap1D:
    _require_1d(sigma1)
    _require_1d(mu1)
    return SliceMap1D.from_arrays(sigma1.points[:, 0], sigma1.weights, mu1.points[:, 0], mu1.weights)


def w2sq_arrays(x, wx, y, wy) -> float:
    """Squared 1-D W2 between weighted samples, exact.

    Equal-size uniform inputs reduce to matching sorted samples.  Otherwise
    the quantile functions are compared on every interval between merged
    cumulative-weight breakpoints, evaluated at interval midpoints.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    wx = np.asarray(wx, dtype=float).reshape(-1)
    wy = np.asarray(wy, dtype=float).reshape(-1)
    m = x.shape[0]
    if m == y.shape[0] and np.all(wx == wx[0]) and np.all(wy == wy[0]):
        d = np.sort(x) - np.sort(y)
        return float(d @ d / m)
    sx, cx = collapse(x, wx)
    sy, cy = collapse(y, wy)
    breaks = np.union1d(cx, cy)
    lo = np.concatenate([[0.0], breaks[:-1]])
    widths = breaks - lo
    mid = 0.5 * (lo + breaks)
    qx = sx[np.clip(np.searchsorted(cx, mid, side="left"), 0, sx.shape[0] - 1)]
    qy = sy[np.clip(np.searchsorted(cy, mid, side="left"), 0, sy.shape[0] - 1)]
    return float(widths @ (qx - qy) ** 2)


def w2_1d(sigma1: DiscreteMeasure, mu1: DiscreteMeasure) -> float:
    """1-D Wasserstein-2 distance (not squared)."""
    _require_1d(sigma1)
    _require_1d(mu1)
    return float(np.sqrt(w2sq_arrays(sigma1.points[:, 0], sigma1.weights, mu1.points[:, 0], mu1.weights)))
