"""Slice-matching maps, P-compatible maps, the slice-matching operator and
the iterative scheme built on them.

For an orthogonal ``P = [theta_1 ... theta_n]`` the matrix-slice map sends
``x`` to ``sum_i t_i(x . theta_i) theta_i`` where ``t_i`` is the monotone 1-D
transport map between the ``theta_i`` projections of source and target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .measure import (
    DiscreteMeasure,
    MeasureError,
    as_direction,
    check_same_dim,
    moments,
    pushforward,
)
from .ot1d import SliceMap1D, w2sq_arrays
from .slicing import (
    make_rng,
    sample_direction,
    sample_directions,
    sample_haar_orthogonal,
    validate_orthogonal,
)


def _as_points(x) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=float)
    single = a.ndim == 1
    return np.atleast_2d(a), single


def _slice_map(sigma: DiscreteMeasure, mu: DiscreteMeasure, theta: np.ndarray) -> SliceMap1D:
    return SliceMap1D.from_arrays(sigma.points @ theta, sigma.weights, mu.points @ theta, mu.weights)


@dataclass(frozen=True, eq=False)
class SingleSliceMap:
    """``x -> x + (t(x . theta) - x . theta) theta``."""

    theta: np.ndarray
    t: SliceMap1D

    def __call__(self, x):
        X, single = _as_points(x)
        z = X @ self.theta
        out = X + np.outer(self.t(z) - z, self.theta)
        return out[0] if single else out


@dataclass(frozen=True, eq=False)
class MatrixSliceMap:
    """``x -> sum_i maps[i](x . theta_i) theta_i`` with ``theta_i = P[:, i]``."""

    P: np.ndarray
    maps: tuple[SliceMap1D, ...]

    def __call__(self, x):
        X, single = _as_points(x)
        Z = X @ self.P
        out = np.column_stack([t(Z[:, i]) for i, t in enumerate(self.maps)]) @ self.P.T
        return out[0] if single else out

    def lipschitz_estimate(self) -> float:
        return max(t.max_slope() for t in self.maps)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Strictly increasing piecewise-linear function on R.

    Outside ``[xs[0], xs[-1]]`` it continues with the slope of the end segment.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.shape[0] < 2:
            raise ValueError("need matching 1-D breakpoint arrays with at least two entries")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("breakpoints must be strictly increasing in both coordinates")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def identity(cls) -> "PiecewiseLinear":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    @classmethod
    def affine(cls, slope: float, intercept: float) -> "PiecewiseLinear":
        return cls(np.array([0.0, 1.0]), np.array([intercept, slope + intercept]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        xs, ys = self.xs, self.ys
        out = np.interp(t, xs, ys)
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(t < xs[0], ys[0] + lo_slope * (t - xs[0]), out)
        out = np.where(t > xs[-1], ys[-1] + hi_slope * (t - xs[-1]), out)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CompatibleMap:
    """Element of the P-compatible family ``x -> sum_i f_i(x . theta_i) theta_i``."""

    P: np.ndarray
    f: tuple[PiecewiseLinear, ...]

    def __post_init__(self):
        P = validate_orthogonal(self.P)
        if len(self.f) != P.shape[0]:
            raise ValueError(f"need {P.shape[0]} component functions, got {len(self.f)}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "f", tuple(self.f))

    def __call__(self, x):
        X, single = _as_points(x)
        Z = X @ self.P
        out = np.column_stack([fi(Z[:, i]) for i, fi in enumerate(self.f)]) @ self.P.T
        return out[0] if single else out


def eval_compatible(T: CompatibleMap, x):
    return T(x)


def single_slice_map(sigma: DiscreteMeasure, mu: DiscreteMeasure, theta) -> SingleSliceMap:
    n = check_same_dim(sigma, mu)
    th = as_direction(theta, n)
    return SingleSliceMap(th, _slice_map(sigma, mu, th))


def matrix_slice_map(sigma: DiscreteMeasure, mu: DiscreteMeasure, P) -> MatrixSliceMap:
    n = check_same_dim(sigma, mu)
    P = validate_orthogonal(P)
    if P.shape[0] != n:
        raise MeasureError(f"matrix is {P.shape[0]}x{P.shape[0]} but measures live in R^{n}")
    Zs, Zm = sigma.points @ P, mu.points @ P
    maps = tuple(SliceMap1D.from_arrays(Zs[:, i], sigma.weights, Zm[:, i], mu.weights) for i in range(n))
    return MatrixSliceMap(P, maps)


def slope_estimate(
    sigma: DiscreteMeasure,
    mu: DiscreteMeasure,
    rng: np.random.Generator,
    num_directions: int = 64,
    thetas: np.ndarray | None = None,
) -> float:
    """Data-driven Lipschitz constant of the 1-D slice maps.

    Largest difference quotient of the monotone map between projections,
    maximized over ``num_directions`` random directions and any extra
    directions given as columns of ``thetas``.
    """
    n = check_same_dim(sigma, mu)
    dirs = sample_directions(rng, n, num_directions)
    if thetas is not None:
        dirs = np.vstack([dirs, np.asarray(thetas, dtype=float).T])
    return max(_slice_map(sigma, mu, th).max_slope() for th in dirs)


def apply_operator(sigma: DiscreteMeasure, mu: DiscreteMeasure, P) -> DiscreteMeasure:
    """Slice-matching operator: push ``sigma`` through its matrix-slice map to ``mu``."""
    return pushforward(sigma, matrix_slice_map(sigma, mu, P))


def _slice_residuals(sigma: DiscreteMeasure, mu: DiscreteMeasure, thetas: np.ndarray) -> np.ndarray:
    """Squared 1-D W2 along each column of ``thetas``."""
    Zs = sigma.points @ thetas
    Zm = mu.points @ thetas
    return np.array(
        [w2sq_arrays(Zs[:, i], sigma.weights, Zm[:, i], mu.weights) for i in range(thetas.shape[1])]
    )


def sliced_residual(sigma: DiscreteMeasure, mu: DiscreteMeasure, P) -> float:
    """``sum_i W2^2(sigma^{theta_i}, mu^{theta_i})`` over the columns of ``P``."""
    n = check_same_dim(sigma, mu)
    P = validate_orthogonal(P)
    if P.shape[0] != n:
        raise MeasureError("matrix and measure dimensions differ")
    return float(_slice_residuals(sigma, mu, P).sum())


def compatible_residual(sigma: DiscreteMeasure, mu: DiscreteMeasure, T: CompatibleMap, P=None) -> float:
    """``sum_i W2^2((T#sigma)^{theta_i}, mu^{theta_i})`` over the columns of ``T.P``.

    Passing ``P`` asserts that the comparison uses the same frame as ``T``.
    """
    if P is not None and not np.allclose(validate_orthogonal(P), T.P, atol=1e-12):
        raise ValueError("compatible map was built on a different orthogonal matrix")
    return sliced_residual(pushforward(sigma, T), mu, T.P)


# -- iterative scheme -------------------------------------------------------


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``constant(c)`` or ``harmonic(c)`` (``c / (k + 1)``), at most ``K`` steps."""

    rule: str
    value: float
    K: int

    def __post_init__(self):
        if self.rule not in ("constant", "harmonic"):
            raise ValueError(f"unknown step rule {self.rule!r}")
        if not 0 < self.value <= 1:
            raise ValueError("step sizes must lie in (0, 1]")
        if self.K < 0:
            raise ValueError("K must be nonnegative")

    def gamma(self, k: int) -> float:
        return self.value if self.rule == "constant" else self.value / (k + 1)

    @classmethod
    def parse(cls, text: str, K: int) -> "StepSchedule":
        """Parse ``const:1.0`` or ``harmonic:0.5``."""
        name, _, val = text.partition(":")
        rules = {"const": "constant", "constant": "constant", "harmonic": "harmonic"}
        if name not in rules or not val:
            raise ValueError(f"cannot parse schedule {text!r}")
        return cls(rules[name], float(val), K)


@dataclass
class TraceStep:
    k: int
    gamma: float
    sliced_residual: float
    mean: list[float]
    m2: float
    w2_exact: float | None
    seed: int
    mean_gap_sq: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "gamma": self.gamma,
                "sliced_residual": self.sliced_residual,
                "mean": self.mean,
                "m2": self.m2,
                "w2_exact": self.w2_exact,
                "seed": self.seed,
                "mean_gap_sq": self.mean_gap_sq,
            }
        )


@dataclass
class IterationTrace:
    """Per-step diagnostics of the iterative scheme plus the final measure.

    Entry ``k`` describes ``sigma_k``: its mean and second moment, the sliced
    residual against the target along the directions drawn for step ``k``
    (reproducible from ``seed``), and ``|E(mu) - E(sigma_k)|^2``.
    """

    steps: list[TraceStep] = field(default_factory=list)
    final: DiscreteMeasure | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def write_jsonl(self, fh: IO[str]) -> None:
        for s in self.steps:
            fh.write(s.to_json() + "\n")

    @staticmethod
    def read_jsonl(lines: Iterable[str]) -> list[dict]:
        required = {"k", "gamma", "sliced_residual", "mean", "m2", "w2_exact", "seed"}
        rows = []
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            rec = json.loads(line)
            if not isinstance(rec, dict) or not required <= rec.keys():
                raise ValueError(f"trace line {i + 1} lacks fields {sorted(required - set(rec))}")
            rows.append(rec)
        return rows


SAMPLERS = ("matrix", "direction")


def iterate(
    sigma0: DiscreteMeasure,
    mu: DiscreteMeasure,
    schedule: StepSchedule,
    sampler: str = "matrix",
    rng: np.random.Generator | None = None,
    tol: float = 1e-10,
    exact: bool = False,
) -> IterationTrace:
    """Run ``sigma_{k+1} = ((1 - g_k) id + g_k T_k)# sigma_k``.

    ``T_k`` is the matrix-slice map for a fresh Haar matrix (``sampler="matrix"``)
    or the single-slice map for a fresh uniform direction (``"direction"``).
    Each step draws a 63-bit seed from ``rng`` and samples its directions from
    a generator seeded with it.  Stops after ``schedule.K`` steps or once the
    sliced residual drops below ``tol``.  With ``exact=True`` the exact W2 to
    the target is recorded (equal-size uniform clouds only).
    """
    from .distances import w2_exact

    if sampler not in SAMPLERS:
        raise ValueError(f"sampler must be one of {SAMPLERS}")
    n = check_same_dim(sigma0, mu)
    rng = make_rng(None) if rng is None else rng
    target_mean = moments(mu).mean
    trace = IterationTrace()
    sigma = sigma0
    for k in range(schedule.K + 1):
        seed = int(rng.integers(0, 2**63 - 1))
        step_rng = make_rng(seed)
        if sampler == "matrix":
            P = sample_haar_orthogonal(step_rng, n)
            T = matrix_slice_map(sigma, mu, P)
            thetas = P
        else:
            theta = sample_direction(step_rng, n)
            T = single_slice_map(sigma, mu, theta)
            thetas = theta[:, None]
        resid = float(_slice_residuals(sigma, mu, thetas).sum())
        mom = moments(sigma)
        gap = mom.mean - target_mean
        gamma = schedule.gamma(k)
        trace.steps.append(
            TraceStep(
                k=k,
                gamma=gamma,
                sliced_residual=resid,
                mean=[float(v) for v in mom.mean],
                m2=mom.second_moment,
                w2_exact=w2_exact(sigma, mu) if exact else None,
                seed=seed,
                mean_gap_sq=float(gap @ gap),
            )
        )
        if resid < tol or k == schedule.K:
            break
        if gamma == 1.0:
            sigma = pushforward(sigma, T)
        else:
            sigma = pushforward(sigma, lambda X, T=T, g=gamma: (1 - g) * X + g * T(X))
    trace.final = sigma
    return trace


def shift_recursion(b0, thetas: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Shift left after repeated single-slice matching of a pure translation.

    ``b_{k+1} = b_k - theta_k (theta_k . b_k)``; returns the array of all
    ``b_k`` including ``b_0``.
    """
    b = np.asarray(b0, dtype=float)
    out = [b]
    for th in thetas:
        b = b - th * (th @ b)
        out.append(b)
    return np.array(out)
