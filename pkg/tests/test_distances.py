import numpy as np
import pytest

from oracles import brute_w2sq
from slicematch.distances import (
    W2_EXACT_CAP,
    UnsupportedInstanceError,
    distributions_equal,
    estimate_from_terms,
    haar_sliced_expectation,
    optimal_assignment,
    sliced_terms,
    sw2,
    w2_exact,
    w2sq_exact,
)
from slicematch.matching import sliced_residual
from slicematch.measure import DiscreteMeasure, pushforward
from slicematch.slicing import make_rng, sample_directions, sample_haar_orthogonal


def cloud(rng, m=6, n=2, scale=1.0):
    return DiscreteMeasure(scale * rng.standard_normal((m, n)))


class TestExactW2:
    def test_zero_on_equal(self, rng):
        s = cloud(rng)
        assert w2_exact(s, s) == 0.0

    def test_single_atoms(self):
        assert w2_exact(DiscreteMeasure([[0.0, 0.0]]), DiscreteMeasure([[3.0, 4.0]])) == 5.0

    @pytest.mark.parametrize("seed", range(5))
    def test_brute_force_oracle(self, seed):
        r = make_rng(seed)
        a, b = cloud(r, 6), cloud(r, 6, scale=2)
        assert w2sq_exact(a, b) == pytest.approx(brute_w2sq(a.points, b.points), rel=1e-12)

    def test_permutation_invariance(self, rng):
        a, b = cloud(rng, 8), cloud(rng, 8)
        shuffled = DiscreteMeasure(b.points[rng.permutation(8)])
        assert w2_exact(a, shuffled) == pytest.approx(w2_exact(a, b), abs=1e-14)
        assert w2_exact(b, shuffled) == 0.0

    def test_assignment_is_a_permutation(self, rng):
        perm = optimal_assignment(cloud(rng, 12), cloud(rng, 12))
        assert sorted(perm) == list(range(12))

    def test_translation_invariance(self, rng):
        a, b = cloud(rng, 7, 3), cloud(rng, 7, 3)
        c = rng.normal(size=3) * 10
        shifted = w2_exact(pushforward(a, lambda X: X + c), pushforward(b, lambda X: X + c))
        assert shifted == pytest.approx(w2_exact(a, b), abs=1e-10)

    @pytest.mark.parametrize(
        "a,b",
        [
            (DiscreteMeasure([[0.0], [1.0]]), DiscreteMeasure([[0.0], [1.0], [2.0]])),
            (DiscreteMeasure([[0.0], [1.0]], [0.3, 0.7]), DiscreteMeasure([[0.0], [1.0]])),
            (DiscreteMeasure(np.zeros((W2_EXACT_CAP + 1, 1))), DiscreteMeasure(np.zeros((W2_EXACT_CAP + 1, 1)))),
        ],
        ids=["sizes", "weights", "cap"],
    )
    def test_unsupported_instances(self, a, b):
        with pytest.raises(UnsupportedInstanceError):
            w2_exact(a, b)


class TestSW2:
    def test_zero_on_equal(self, rng):
        s = cloud(rng, 10)
        est = sw2(s, s, 50, rng)
        assert est.value == 0.0 and est.std_error == 0.0

    def test_shift_against_angle_grid(self, rng):
        s = cloud(rng, 10)
        b = np.array([1.5, -0.5])
        est = sw2(s, pushforward(s, lambda X: X + b), 10_000, rng)
        phi = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
        oracle = np.mean((np.cos(phi) * b[0] + np.sin(phi) * b[1]) ** 2)
        assert abs(est.value_sq - oracle) <= 3 * est.std_error_sq

    def test_bounded_by_exact_w2(self, rng):
        for _ in range(20):
            a, b = cloud(rng, 8), cloud(rng, 8, scale=2)
            est = sw2(a, b, 200, rng)
            assert est.value <= w2_exact(a, b) + 3 * est.std_error + 1e-12

    def test_chunking_does_not_change_the_draws(self):
        a, b = cloud(make_rng(1), 8), cloud(make_rng(2), 8)
        one = sw2(a, b, 500, make_rng(3))
        many = sw2(a, b, 500, make_rng(3), chunk=500)
        assert one == many

    def test_weighted_inputs(self, rng):
        a = DiscreteMeasure(rng.normal(size=(5, 2)), [0.1, 0.2, 0.3, 0.2, 0.2])
        b = cloud(rng, 7)
        assert sw2(a, b, 100, rng).value > 0

    def test_delta_method(self):
        est = estimate_from_terms(np.array([1.0, 3.0, 5.0, 7.0]), seed=4)
        assert est.value_sq == 4.0 and est.value == 2.0
        assert est.std_error == pytest.approx(est.std_error_sq / 4.0)
        assert est.seed == 4

    def test_needs_a_direction(self, rng):
        with pytest.raises(ValueError):
            sw2(cloud(rng), cloud(rng), 0, rng)

    def test_terms_match_fast_and_general_paths(self, rng):
        a, b = cloud(rng, 9), cloud(rng, 9)
        dirs = sample_directions(rng, 2, 20)
        fast = sliced_terms(a, b, dirs)
        general = sliced_terms(DiscreteMeasure(a.points, np.full(9, 1 / 9) * (1 + 1e-9)), b, dirs)
        np.testing.assert_allclose(fast, general, rtol=1e-10)


class TestHaarExpectation:
    def test_zero_on_equal(self, rng):
        s = cloud(rng, 10)
        assert haar_sliced_expectation(s, s, 20, rng).mean == 0.0

    def test_shift_has_zero_variance(self, rng):
        s = cloud(rng, 10, 3)
        b = np.array([1.0, 2.0, 2.0])
        h = haar_sliced_expectation(s, pushforward(s, lambda X: X + b), 50, rng)
        assert h.mean == pytest.approx(9.0, abs=1e-10) and h.std_error < 1e-10

    def test_matches_n_times_sw2_squared(self):
        r = make_rng(123)
        a, b = cloud(r, 16), cloud(r, 16, scale=2)
        est = sw2(a, b, 100_000, r)
        h = haar_sliced_expectation(a, b, 2000, r)
        assert abs(h.mean - 2 * est.value_sq) <= 3 * np.hypot(h.std_error, 2 * est.std_error_sq)


class TestInequalities:
    def test_residual_bounded_by_w2(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 4))
            a, b = cloud(rng, 6, n), cloud(rng, 6, n, scale=2)
            assert sliced_residual(a, b, sample_haar_orthogonal(rng, n)) <= w2sq_exact(a, b) + 1e-12

    def test_metric_axioms(self, rng):
        for _ in range(30):
            a, b, c = cloud(rng), cloud(rng), cloud(rng, scale=3)
            assert w2_exact(a, b) == pytest.approx(w2_exact(b, a), abs=1e-12)
            assert w2_exact(a, b) <= w2_exact(a, c) + w2_exact(c, b) + 1e-12


class TestDistributionsEqual:
    def test_small_exact(self, rng):
        a = cloud(rng, 5)
        assert distributions_equal(a, DiscreteMeasure(a.points[::-1]))
        assert not distributions_equal(a, pushforward(a, lambda X: X + 1e-6))

    def test_large_projected(self, rng):
        a = cloud(rng, 64)
        assert distributions_equal(a, DiscreteMeasure(a.points[rng.permutation(64)]), rng=rng)
        assert not distributions_equal(a, pushforward(a, lambda X: X * 1.001), rng=rng)
