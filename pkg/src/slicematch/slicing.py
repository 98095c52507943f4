"""Random slicing directions and Haar-distributed orthogonal matrices.

All sampling goes through a caller-owned :class:`numpy.random.Generator`.
:func:`make_rng` builds one from an integer seed using the PCG64 bit
generator, so a given seed replays the same draws on every platform.
"""

from __future__ import annotations

import numpy as np

ORTHO_TOL = 1e-8


class NotOrthogonalError(ValueError):
    pass


def make_rng(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` independent 64-bit child seeds from ``seed``.

    Children come from ``numpy.random.SeedSequence(seed).spawn``, each
    reduced to its first 64-bit state word.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def sample_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` i.i.d. uniform unit vectors in R^n, as rows."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    g = rng.standard_normal((count, n))
    norms = np.linalg.norm(g, axis=1)
    bad = norms == 0
    while np.any(bad):
        g[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
        bad = norms == 0
    return g / norms[:, None]


def sample_direction(rng: np.random.Generator, n: int) -> np.ndarray:
    return sample_directions(rng, n, 1)[0]


def _haar_from_gaussian(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    s = np.sign(d)
    return q * s[..., None, :], d


def sample_haar_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed element of O(n).

    Householder QR of a standard Gaussian matrix, with the sign of each
    diagonal entry of R folded into the matching column of Q so that the
    factorization is unique.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    while True:
        q, d = _haar_from_gaussian(rng.standard_normal((n, n)))
        if np.all(d != 0):
            return q


def sample_haar_batch(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` Haar matrices as an array of shape (count, n, n)."""
    g = rng.standard_normal((count, n, n))
    q, d = _haar_from_gaussian(g)
    bad = np.any(d == 0, axis=1)
    for k in np.flatnonzero(bad):
        q[k] = sample_haar_orthogonal(rng, n)
    return q


def validate_orthogonal(M, tol: float = ORTHO_TOL) -> np.ndarray:
    P = np.asarray(M, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotOrthogonalError(f"expected a square matrix, got shape {P.shape}")
    err = np.linalg.norm(P.T @ P - np.eye(P.shape[0]))
    if not err < tol:
        raise NotOrthogonalError(f"|P^T P - I|_F = {err:.3g} exceeds {tol:g}")
    return P


def rotation(angle: float) -> np.ndarray:
    """2x2 matrix ``[[cos, sin], [-sin, cos]]``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])
