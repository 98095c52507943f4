"""Acceptance criteria, one check per criterion.

Each ``check_*`` function returns ``(ok, detail)``.  Under pytest every check
is its own test and the collected verdicts are printed in the terminal
summary; run this file directly to print the verdict lines alone.
"""

import time

import numpy as np
import pytest
from scipy.linalg import expm

from oracles import brute_w2sq
from slicematch import cli
from slicematch.distances import distributions_equal, haar_sliced_expectation, sw2, w2_exact, w2sq_exact
from slicematch.matching import (
    CompatibleMap,
    PiecewiseLinear,
    apply_operator,
    matrix_slice_map,
    shift_recursion,
    sliced_residual,
    slope_estimate,
)
from slicematch.measure import DiscreteMeasure, moments, pushforward
from slicematch.registration import (
    haar_mean_scale_shift,
    haar_scale_samples,
    register_scale_shift,
    registration_gap,
    scale_from_distance,
)
from slicematch.slicing import make_rng, sample_directions, sample_haar_orthogonal

RESULTS = {}


def _record(num, title, ok, detail, elapsed):
    RESULTS[num] = f"criterion {num:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail} ({elapsed:.1f}s)"


def _cloud(rng, m, n, scale=1.0):
    return DiscreteMeasure(scale * rng.standard_normal((m, n)))


def _random_pl(rng, lo=-6.0, hi=6.0, knots=6):
    xs = np.sort(rng.uniform(lo, hi, knots))
    ys = np.cumsum(rng.uniform(0.2, 3.0, knots)) + rng.normal()
    return PiecewiseLinear(xs, ys)


def _random_compatible(rng, P):
    return CompatibleMap(P, tuple(_random_pl(rng) for _ in range(P.shape[0])))


def check_moment_matching():
    rng = make_rng(1)
    worst_mean = worst_m2 = 0.0
    for trial in range(100):
        n = (1, 2, 3, 5)[trial % 4]
        sigma, mu = _cloud(rng, 64, n), _cloud(rng, 64, n, scale=2.0)
        mu = pushforward(mu, lambda X: X + rng.normal(size=n))
        P = sample_haar_orthogonal(rng, n)
        mu_mom, u_mom = moments(mu), moments(apply_operator(sigma, mu, P))
        worst_mean = max(worst_mean, np.linalg.norm(u_mom.mean - mu_mom.mean))
        worst_m2 = max(worst_m2, abs(u_mom.second_moment - mu_mom.second_moment) / (1 + mu_mom.second_moment))
    ok = worst_mean < 1e-10 and worst_m2 < 1e-9
    return ok, f"max |dE| = {worst_mean:.2e}, max relative |dM2| = {worst_m2:.2e}"


def check_residual_identity():
    rng = make_rng(2)
    worst = 0.0
    for _ in range(50):
        sigma, mu = _cloud(rng, 6, 2), _cloud(rng, 6, 2, scale=1.5)
        P = sample_haar_orthogonal(rng, 2)
        U = apply_operator(sigma, mu, P)
        worst = max(worst, abs(brute_w2sq(sigma.points, U.points) - sliced_residual(sigma, mu, P)))
    return worst < 1e-8, f"max |W2^2(sigma, U) - sliced residual| = {worst:.2e}"


def check_shift_scale_recovery():
    rng = make_rng(3)
    worst = 0.0
    cases = [(a, n) for a in (0.5, 1.0, 1.6) for n in (2, 3)]
    for a, n in cases:
        sigma = _cloud(rng, 32, n)
        b = rng.normal(scale=3.0, size=n)
        mu = pushforward(sigma, lambda X: a * X + b)
        for _ in range(20):
            P = sample_haar_orthogonal(rng, n)
            worst = max(worst, w2_exact(apply_operator(sigma, mu, P), mu))
    # Image-like instance: 32 distinct pixels of a 32x32 grid pushed by the
    # 84x84 map x -> 1.6 (x + (-35, 20)) with the shift rescaled to 32 pixels.
    idx = rng.choice(32 * 32, size=32, replace=False)
    grid = DiscreteMeasure(np.column_stack([idx % 32, idx // 32]).astype(float))
    shift = np.array([-35.0, 20.0]) * 32 / 84
    mu = pushforward(grid, lambda X: 1.6 * (X + shift))
    for _ in range(20):
        P = sample_haar_orthogonal(rng, 2)
        worst = max(worst, w2_exact(apply_operator(grid, mu, P), mu))
    return worst < 1e-9, f"max W2(U, mu) = {worst:.2e} over {len(cases) * 20 + 20} draws"


def check_compatible_recovery():
    rng = make_rng(4)
    worst = 0.0
    for trial in range(50):
        n = 2 + trial % 3
        sigma = _cloud(rng, 24, n, scale=2.0)
        P = sample_haar_orthogonal(rng, n)
        T = _random_compatible(rng, P)
        mu = pushforward(sigma, T)
        err = np.abs(matrix_slice_map(sigma, mu, P)(sigma.points) - T(sigma.points)).max()
        worst = max(worst, err)
    return worst < 1e-9, f"max support-point error = {worst:.2e}"


def check_invariance_equivariance():
    rng = make_rng(5)
    failures = 0
    trials = 0
    for trial in range(100):
        m = 6 if trial % 2 == 0 else 64
        n = 2 + trial % 3
        sigma, mu = _cloud(rng, m, n), _cloud(rng, m, n, scale=1.7)
        P = sample_haar_orthogonal(rng, n)
        a, b = rng.uniform(0.3, 3.0), rng.normal(size=n)
        S = lambda X: a * X + b
        T = _random_compatible(rng, P)
        base = apply_operator(sigma, mu, P)
        pairs = [
            (apply_operator(pushforward(sigma, S), mu, P), base),
            (apply_operator(sigma, pushforward(mu, S), P), pushforward(base, S)),
            (apply_operator(pushforward(sigma, T), mu, P), base),
            (apply_operator(sigma, pushforward(mu, T), P), pushforward(base, T)),
        ]
        for lhs, rhs in pairs:
            trials += 1
            failures += not distributions_equal(lhs, rhs, tol=1e-8, rng=rng)
    return failures == 0, f"{trials - failures}/{trials} identities hold (100 instances, 4 identities each)"


def _small_rotation(rng, n, size):
    A = rng.normal(size=(n, n))
    A = A - A.T
    return expm(size * A / np.linalg.norm(A))


def check_lipschitz():
    rng = make_rng(6)
    violations = 0
    ratios, sqrt_ratios = [], []
    for trial in range(100):
        n = 2 + trial % 2
        sigma, mu = _cloud(rng, 32, n), _cloud(rng, 32, n, scale=1.5)
        P = sample_haar_orthogonal(rng, n)
        if trial % 2 == 0:
            Q = sample_haar_orthogonal(rng, n)
        else:
            Q = P @ _small_rotation(rng, n, 10.0 ** rng.uniform(-4, -1))
        lhs_map = matrix_slice_map(sigma, mu, P)(sigma.points) - matrix_slice_map(sigma, mu, Q)(sigma.points)
        lhs = np.sqrt(sigma.weights @ (lhs_map**2).sum(axis=1))
        L = slope_estimate(sigma, mu, rng, 64, thetas=np.hstack([P, Q]))
        C = max(moments(sigma).second_moment, moments(mu).second_moment)
        rhs = (3 * L + 1) * C * np.linalg.norm(P - Q)
        violations += not lhs <= rhs
        ratios.append(lhs / rhs)
        sqrt_ratios.append(lhs / (rhs / np.sqrt(C)))
    return violations == 0, (
        f"{violations} violations in 100 trials, max lhs/rhs = {max(ratios):.3g} "
        f"(with C replaced by sqrt(C): {max(sqrt_ratios):.3g})"
    )


def check_perturbation():
    rng = make_rng(7)
    worst_margin = -np.inf
    for trial in range(50):
        eps = (0.01, 0.1)[trial % 2]
        m, n = int(rng.integers(3, 9)), int(rng.integers(2, 4))
        sigma = _cloud(rng, m, n)
        a, b = rng.uniform(0.5, 2.0), rng.normal(size=n)
        delta = rng.normal(size=(m, n))
        delta *= eps / np.sqrt(np.mean((delta**2).sum(axis=1)))
        mu = DiscreteMeasure(a * sigma.points + b + delta)
        P = sample_haar_orthogonal(rng, n)
        lhs = w2_exact(apply_operator(sigma, mu, P), mu)
        worst_margin = max(worst_margin, lhs - 2 * eps)
    return worst_margin <= 1e-9, f"max W2(U, mu) - 2 eps = {worst_margin:.3e}"


def check_registration():
    sigma, eta = DiscreteMeasure([-1.0, 1.0]), DiscreteMeasure([3.0, 7.0])
    rep = register_scale_shift(sigma, eta, "W2")
    worked = rep.map.a == 2.0 and rep.map.b[0] == 5.0
    rng = make_rng(8)
    worst_gap = worst_mean = 0.0
    for _ in range(50):
        sigma, mu = _cloud(rng, 6, 2), _cloud(rng, 6, 2, scale=1.5)
        P = sample_haar_orthogonal(rng, 2)
        g = registration_gap(sigma, mu, P)
        worst_gap = max(worst_gap, abs(g.closed_form - g.direct))
        for kind in ("W2", "SW2"):
            r = register_scale_shift(sigma, mu, kind, num_directions=200, rng=rng)
            d = moments(pushforward(sigma, r.map)).mean - moments(mu).mean
            worst_mean = max(worst_mean, np.linalg.norm(d))
    ok = worked and worst_gap < 1e-8 and worst_mean < 1e-10
    detail = (
        f"worked example a={rep.map.a}, b={rep.map.b[0]}; max gap error = {worst_gap:.2e}; "
        f"max mean mismatch = {worst_mean:.2e}"
    )
    return ok, detail


def check_haar_identities():
    rng = make_rng(9)
    sigma, mu = _cloud(rng, 16, 2), pushforward(_cloud(rng, 16, 2), lambda X: X @ np.array([[2.0, 0.5], [0.0, 0.7]]) + 1.0)
    n, R = 2, 2000
    est = sw2(sigma, mu, 100_000, rng)
    nsw = n * est.value_sq
    se_nsw = n * est.std_error_sq

    haar = haar_sliced_expectation(sigma, mu, R, rng)
    z1 = abs(haar.mean - nsw) / np.hypot(haar.std_error, se_nsw)

    a_samples, _, _ = haar_scale_samples(sigma, mu, R, rng)
    var = moments(sigma).centered
    w2sq = w2sq_exact(sigma, mu)
    a_w2 = scale_from_distance(sigma, mu, w2sq).a
    diffs = a_samples - a_w2
    predicted = (w2sq - nsw) / (2 * var)
    se_pred = se_nsw / (2 * var)
    z2 = abs(diffs.mean() - predicted) / np.hypot(diffs.std(ddof=1) / np.sqrt(R), se_pred)

    cmp = haar_mean_scale_shift(sigma, mu, R, rng, num_directions=100_000)
    z3 = abs(cmp.diff_a) / cmp.se_diff_a
    z4 = float(np.max(np.abs(cmp.diff_b) / cmp.se_diff_b))
    ok = max(z1, z2, z3, z4) <= 3
    return ok, f"z-scores: slices {z1:.2f}, scale gap {z2:.2f}, mean a {z3:.2f}, mean b {z4:.2f} (limit 3)"


def decay_moments(n, k):
    """Mean and variance of ``|b_k|^2 / |b_0|^2`` under the shift recursion.

    Each step multiplies the ratio by ``1 - c^2`` with ``c^2 ~ Beta(1/2, (n-1)/2)``
    independent of the past, so the mean is ``(1 - 1/n)^k`` and the second
    moment is ``(E(1 - c^2)^2)^k = (1 - 2/n + 3/(n(n+2)))^k``.
    """
    rho = 1 - 1 / n
    second = 1 - 2 / n + 3 / (n * (n + 2))
    return rho**k, second**k - rho ** (2 * k)


def check_shift_decay():
    rng = make_rng(10)
    worst_z = worst_sample_z = 0.0
    monotone = True
    runs, K = 1000, 20
    for n in (2, 3):
        ratios = np.empty((runs, K + 1))
        for r in range(runs):
            b0 = rng.normal(size=n)
            b = shift_recursion(b0, sample_directions(rng, n, K))
            norms = np.linalg.norm(b, axis=1)
            monotone &= bool(np.all(np.diff(norms) <= 1e-15 * norms[0]))
            ratios[r] = norms**2 / norms[0] ** 2
        k = np.arange(1, K + 1)
        mean = ratios[:, 1:].mean(axis=0)
        expected, variance = decay_moments(n, k)
        se = np.sqrt(variance / runs)
        sample_se = ratios[:, 1:].std(axis=0, ddof=1) / np.sqrt(runs)
        worst_z = max(worst_z, float(np.max(np.abs(mean - expected) / se)))
        worst_sample_z = max(worst_sample_z, float(np.max(np.abs(mean - expected) / sample_se)))
    ok = monotone and worst_z <= 3
    return ok, (
        f"max z = {worst_z:.2f} with the exact standard error ({worst_sample_z:.2f} with the sample one) "
        f"over k <= {K}, n in (2, 3); norms nonincreasing: {monotone}"
    )


def check_inequalities():
    rng = make_rng(11)
    bad = []
    for _ in range(100):
        n = int(rng.integers(1, 4))
        A, B, C = (_cloud(rng, 6, n, scale=s) for s in (1.0, 1.5, 2.0))
        P = sample_haar_orthogonal(rng, n)
        wab, wba = w2_exact(A, B), w2_exact(B, A)
        est = sw2(A, B, 500, rng)
        if est.value > wab + 3 * est.std_error + 1e-12:
            bad.append("sw2")
        if sliced_residual(A, B, P) > wab**2 + 1e-12:
            bad.append("residual")
        if abs(wab - wba) > 1e-12:
            bad.append("symmetry")
        if wab > w2_exact(A, C) + w2_exact(C, B) + 1e-12:
            bad.append("triangle")
    return not bad, f"{len(bad)} violations in 100 triples" + (f": {sorted(set(bad))}" if bad else "")


def _write_cloud(path, X):
    from slicematch.io import write_measure_csv

    write_measure_csv(path, DiscreteMeasure(X))


def _run_cli(args):
    import contextlib
    import io as _io

    buf = _io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(args)
    return code, buf.getvalue()


def check_determinism(tmp):
    from pathlib import Path

    tmp = Path(tmp)
    rng = make_rng(12)
    _write_cloud(tmp / "a.csv", rng.normal(size=(12, 2)))
    _write_cloud(tmp / "b.csv", rng.normal(size=(12, 2)) * 2 + 1)
    a, b = str(tmp / "a.csv"), str(tmp / "b.csv")

    def run_all(tag):
        outs = {}
        for name, args in {
            "match": ["match", a, b, "--seed", "5", "--out", str(tmp / f"m{tag}")],
            "iterate": ["iterate", a, b, "--steps", "4", "--seed", "5", "--exact", "--out", str(tmp / f"i{tag}")],
            "register": ["register", a, b, "--distance", "sw2", "--dirs", "300", "--seed", "5"],
            "w2": ["w2", a, b],
            "sw2": ["sw2", a, b, "--dirs", "300", "--seed", "5"],
            "ortho": ["make-ortho", "--dim", "3", "--seed", "5"],
        }.items():
            code, out = _run_cli(args)
            outs[name] = (code, out)
        for f in ("matched.csv", "summary.json"):
            outs[f] = (tmp / f"m{tag}" / f).read_bytes()
        for f in ("trace.jsonl", "final.csv", "run.json"):
            outs[f] = (tmp / f"i{tag}" / f).read_bytes()
        code, _ = _run_cli(["report", str(tmp / f"i{tag}" / "trace.jsonl"), "--out", str(tmp / f"r{tag}")])
        outs["report.csv"] = (code, (tmp / f"r{tag}" / "report.csv").read_bytes())
        return outs

    first, second = run_all(1), run_all(2)
    differing = sorted(k for k in first if first[k] != second[k])
    codes_ok = all(v[0] == 0 for v in first.values() if isinstance(v, tuple))
    return not differing and codes_ok, (
        f"{len(first)} outputs compared, differing: {differing or 'none'}, all exit codes 0: {codes_ok}"
    )


CRITERIA = [
    (1, "moment matching", check_moment_matching, 5),
    (2, "sliced-residual identity", check_residual_identity, 10),
    (3, "shift/scale recovery", check_shift_scale_recovery, 10),
    (4, "compatible recovery", check_compatible_recovery, 5),
    (5, "invariance/equivariance", check_invariance_equivariance, None),
    (6, "Lipschitz bound", check_lipschitz, None),
    (7, "perturbation bound", check_perturbation, None),
    (8, "registration closed forms", check_registration, None),
    (9, "Haar identities", check_haar_identities, 60),
    (10, "single-slice shift decay", check_shift_decay, 30),
    (11, "metric/inequality suite", check_inequalities, None),
]


def _evaluate(num, title, fn, budget, *args):
    start = time.perf_counter()
    ok, detail = fn(*args)
    elapsed = time.perf_counter() - start
    if budget is not None and elapsed > budget:
        ok = False
        detail += f"; exceeded {budget}s budget"
    _record(num, title, ok, detail, elapsed)
    return ok, detail


@pytest.mark.parametrize("num,title,fn,budget", CRITERIA, ids=[c[1].replace(" ", "_") for c in CRITERIA])
def test_criterion(num, title, fn, budget):
    ok, detail = _evaluate(num, title, fn, budget)
    assert ok, detail


def test_criterion_determinism(tmp_path):
    ok, detail = _evaluate(12, "CLI determinism", check_determinism, None, tmp_path)
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    for num, title, fn, budget in CRITERIA:
        _evaluate(num, title, fn, budget)
        print(RESULTS[num], flush=True)
    with tempfile.TemporaryDirectory() as d:
        _evaluate(12, "CLI determinism", check_determinism, None, d)
    print(RESULTS[12])
