"""n-dimensional distances between discrete measures.

Exact W2 is restricted to equal-size uniform clouds, where optimal transport
is a linear assignment problem.  Sliced W2 is a Monte-Carlo average over
random directions and always reports its standard error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .measure import DiscreteMeasure, check_same_dim
from .ot1d import w2sq_arrays
from .slicing import sample_directions, sample_haar_batch

W2_EXACT_CAP = 512


class UnsupportedInstanceError(ValueError):
    """Input falls outside what the exact solver handles."""


def _check_assignment_instance(sigma: DiscreteMeasure, mu: DiscreteMeasure, cap: int) -> None:
    check_same_dim(sigma, mu)
    if sigma.size != mu.size:
        raise UnsupportedInstanceError(
            f"exact W2 needs equal atom counts, got {sigma.size} and {mu.size}"
        )
    if not (sigma.is_uniform() and mu.is_uniform()):
        raise UnsupportedInstanceError("exact W2 needs uniform weights on both measures")
    if sigma.size > cap:
        raise UnsupportedInstanceError(f"exact W2 is capped at {cap} atoms, got {sigma.size}")


def optimal_assignment(sigma: DiscreteMeasure, mu: DiscreteMeasure, cap: int = W2_EXACT_CAP) -> np.ndarray:
    """Permutation ``perm`` minimizing ``mean |x_i - y_perm[i]|^2``."""
    _check_assignment_instance(sigma, mu, cap)
    X, Y = sigma.points, mu.points
    diff = X[:, None, :] - Y[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(sigma.size, dtype=int)
    perm[rows] = cols
    return perm


def w2sq_exact(sigma: DiscreteMeasure, mu: DiscreteMeasure, cap: int = W2_EXACT_CAP) -> float:
    """Squared exact W2 between equal-size uniform clouds via linear assignment."""
    perm = optimal_assignment(sigma, mu, cap)
    d = sigma.points - mu.points[perm]
    return float(np.einsum("ij,ij->", d, d) / sigma.size)


def w2_exact(sigma: DiscreteMeasure, mu: DiscreteMeasure, cap: int = W2_EXACT_CAP) -> float:
    """Exact W2 between equal-size uniform clouds."""
    return float(np.sqrt(w2sq_exact(sigma, mu, cap)))


@dataclass(frozen=True)
class Sw2Estimate:
    """Monte-Carlo SW2.

    ``value_sq`` is the mean of the per-direction squared 1-D distances and
    ``std_error_sq`` its standard error; ``std_error`` is carried over to
    ``value`` by the delta method.
    """

    value: float
    num_directions: int
    std_error: float
    seed: int | None
    value_sq: float
    std_error_sq: float


def sliced_terms(sigma: DiscreteMeasure, mu: DiscreteMeasure, directions: np.ndarray) -> np.ndarray:
    """Squared 1-D W2 along each row of ``directions``."""
    check_same_dim(sigma, mu)
    Zs = sigma.points @ directions.T
    Zm = mu.points @ directions.T
    if sigma.size == mu.size and sigma.has_equal_weights() and mu.has_equal_weights():
        d = np.sort(Zs, axis=0) - np.sort(Zm, axis=0)
        return np.einsum("ij,ij->j", d, d) / sigma.size
    return np.array(
        [w2sq_arrays(Zs[:, l], sigma.weights, Zm[:, l], mu.weights) for l in range(directions.shape[0])]
    )


def estimate_from_terms(terms: np.ndarray, seed: int | None = None) -> Sw2Estimate:
    L = terms.shape[0]
    mean_sq = float(terms.mean())
    se_sq = float(terms.std(ddof=1) / np.sqrt(L)) if L > 1 else 0.0
    value = float(np.sqrt(mean_sq))
    se = se_sq / (2.0 * value) if value > 0 else 0.0
    return Sw2Estimate(value, L, se, seed, mean_sq, se_sq)


def sw2(
    sigma: DiscreteMeasure,
    mu: DiscreteMeasure,
    L: int,
    rng: np.random.Generator,
    seed: int | None = None,
    chunk: int = 20000,
) -> Sw2Estimate:
    """Sliced W2 from ``L`` i.i.d. uniform directions.

    ``seed`` is only recorded in the result; randomness comes from ``rng``.
    Directions are processed in chunks to bound memory.
    """
    if L < 1:
        raise ValueError("need at least one direction")
    n = check_same_dim(sigma, mu)
    parts = []
    for start in range(0, L, chunk):
        dirs = sample_directions(rng, n, min(chunk, L - start))
        parts.append(sliced_terms(sigma, mu, dirs))
    return estimate_from_terms(np.concatenate(parts), seed)


@dataclass(frozen=True)
class HaarExpectation:
    mean: float
    std_error: float
    replicates: int


def haar_sliced_expectation(
    sigma: DiscreteMeasure, mu: DiscreteMeasure, R: int, rng: np.random.Generator
) -> HaarExpectation:
    """Average of the sliced residual over ``R`` Haar matrices (tends to ``n SW2^2``)."""
    if R < 1:
        raise ValueError("need at least one replicate")
    n = check_same_dim(sigma, mu)
    Ps = sample_haar_batch(rng, n, R)
    dirs = Ps.transpose(0, 2, 1).reshape(R * n, n)
    vals = sliced_terms(sigma, mu, dirs).reshape(R, n).sum(axis=1)
    se = float(vals.std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0
    return HaarExpectation(float(vals.mean()), se, R)


def distributions_equal(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    tol: float = 1e-8,
    rng: np.random.Generator | None = None,
    num_directions: int = 32,
) -> bool:
    """Equality as distributions, up to permutation of atoms.

    Exact W2 below ``tol`` for uniform clouds with at most 8 atoms; otherwise
    the largest 1-D W2 over ``num_directions`` random projections must stay
    below ``tol``.
    """
    check_same_dim(a, b)
    if a.size == b.size and a.size <= 8 and a.is_uniform() and b.is_uniform():
        return w2_exact(a, b) < tol
    rng = np.random.default_rng(0) if rng is None else rng
    dirs = sample_directions(rng, a.dim, num_directions)
    return bool(np.sqrt(sliced_terms(a, b, dirs).max()) < tol)
