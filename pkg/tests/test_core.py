import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abf.core import (
    GridDensity,
    PriorBox,
    RngStream,
    empirical_cdf,
    euclidean_distance,
    kde_density,
    kde_ordinates,
    silverman_bandwidth,
    uniform_grid,
)
from abf.errors import DegenerateSampleError, DimensionError


def test_euclidean_identity():
    assert euclidean_distance((1.0, 2.0), (1.0, 2.0)) == 0.0


def test_euclidean_3_4_5():
    assert euclidean_distance((0.0, 0.0), (3.0, 4.0)) == pytest.approx(5.0)


def test_euclidean_matches_sum_of_squares_oracle():
    a = np.array([0.4, 2.0, 0.1])
    b = np.array([0.5, 1.8, 0.1])
    direct = np.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    assert euclidean_distance(a, b) == pytest.approx(direct, abs=1e-15)


def test_euclidean_length_mismatch():
    with pytest.raises(DimensionError):
        euclidean_distance([1.0, 2.0], [1.0, 2.0, 3.0])


def test_euclidean_triangle_inequality_randomized():
    gen = RngStream(123).generator()
    for _ in range(1000):
        a, b, c = gen.normal(size=(3, 4)) * 10
        assert euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8),
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8),
)
def test_euclidean_symmetry_property(xs, ys):
    n = min(len(xs), len(ys))
    a, b = np.array(xs[:n]), np.array(ys[:n])
    assert euclidean_distance(a, b) == pytest.approx(euclidean_distance(b, a))


class TestRngStream:
    def test_bit_identical_across_constructions(self):
        a = RngStream(42, 7).generator().random(100)
        b = RngStream(42, 7).generator().random(100)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(42, 7).generator().random(100)
        b = RngStream(42, 8).generator().random(100)
        assert not np.array_equal(a, b)

    def test_child_streams_independent_of_order(self):
        s = RngStream(5, 1)
        a1 = s.child(3).generator().random(10)
        _ = s.child(2).generator().random(10)
        a2 = s.child(3).generator().random(10)
        assert np.array_equal(a1, a2)


class TestPriorBox:
    def test_sample_within_bounds(self):
        box = PriorBox([0.0, -1.0], [1.0, 1.0])
        draws = box.sample(RngStream(0).generator(), 1000)
        assert np.all(box.contains(draws))

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            PriorBox([1.0], [0.0])


class TestKde:
    def test_normal_ordinate_at_zero(self):
        # Monte Carlo vs the closed-form N(0,1) density at the mode
        samples = RngStream(2024, 3).generator().standard_normal(10000)
        dens = kde_density(samples)
        assert dens.ordinate(0.0) == pytest.approx(0.3989, abs=0.02)

    def test_two_point_symmetry(self):
        grid = uniform_grid(-3.0, 3.0, 513)  # symmetric grid with midpoint 0
        dens = kde_density(np.array([-1.0, 1.0]), eval_points=grid)
        ords = dens.ordinates
        assert np.allclose(ords, ords[::-1], atol=1e-12)

    def test_normalization(self):
        samples = RngStream(8).generator().standard_normal(500)
        dens = kde_density(samples)
        assert dens.integral() == pytest.approx(1.0, abs=1e-12)
        # raw kernel mass on the +-4 bandwidth grid is already within 1e-3
        h = silverman_bandwidth(samples)
        raw = kde_ordinates(samples, dens.grid, h)
        assert np.sum(raw) * dens.cell_width == pytest.approx(1.0, abs=1e-3)

    def test_degenerate_samples_rejected(self):
        with pytest.raises(DegenerateSampleError):
            kde_density(np.ones(50))

    def test_silverman_uses_smaller_of_sd_and_iqr(self):
        x = RngStream(4).generator().standard_normal(4096)
        h = silverman_bandwidth(x)
        sd = x.std()
        q75, q25 = np.percentile(x, [75, 25])
        expected = 0.9 * min(sd, (q75 - q25) / 1.34) * len(x) ** (-0.2)
        assert h == pytest.approx(expected)


class TestEmpiricalCdf:
    def _normal_density(self, n=512):
        grid = uniform_grid(-8.0, 8.0, n)
        ords = np.exp(-0.5 * grid**2) / np.sqrt(2 * np.pi)
        return GridDensity.from_ordinates(grid, ords)

    def test_below_grid_is_zero(self):
        dens = self._normal_density()
        assert empirical_cdf(dens, -100.0) == 0.0

    def test_above_grid_is_one(self):
        dens = self._normal_density()
        assert empirical_cdf(dens, 100.0) == 1.0

    def test_center_of_symmetric_density(self):
        dens = self._normal_density(513)
        assert empirical_cdf(dens, 0.0) == pytest.approx(0.5, abs=1e-3)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_monotone(self, x1, x2):
        dens = self._normal_density()
        lo, hi = min(x1, x2), max(x1, x2)
        assert empirical_cdf(dens, lo) <= empirical_cdf(dens, hi) + 1e-12


class TestGridDensity:
    def test_integral_is_one_after_normalization(self):
        grid = uniform_grid(0.0, 1.0, 64)
        dens = GridDensity.from_ordinates(grid, np.random.default_rng(0).random(64))
        assert abs(dens.integral() - 1.0) < 1e-6

    def test_nonuniform_grid_rejected(self):
        grid = np.array([0.0, 0.1, 0.25, 0.4])
        with pytest.raises(ValueError):
            GridDensity(grid=grid, ordinates=np.ones(4), cell_width=0.1)

    def test_negative_ordinates_rejected(self):
        grid = uniform_grid(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            GridDensity(grid=grid, ordinates=np.array([1.0, -0.1, 1.0, 1.0]), cell_width=grid[1] - grid[0])
