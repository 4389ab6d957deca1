import itertools
import math

import numpy as np
import pytest

from svt.common import IntervalBox
from svt.reachability import ReachParams, bang_sample, bounding_sphere, mc_reach_samples, reach_position_box


class TestReachBox:
    def test_closed_form_x_interval(self):
        box = reach_position_box(IntervalBox.point((0, 0, 0)), IntervalBox.point((1, 0, 0)),
                                 ReachParams(2.0, 1.5))
        assert box.lo[0] == pytest.approx(-0.75)
        assert box.hi[0] == pytest.approx(3.75)

    def test_stationary_without_acceleration(self):
        pos0 = IntervalBox.of((0, -1, 1), (1, 0, 2))
        box = reach_position_box(pos0, IntervalBox.point((0, 0, 0)), ReachParams(0.0, 1.5))
        np.testing.assert_array_equal(box.lo, pos0.lo)
        np.testing.assert_array_equal(box.hi, pos0.hi)

    def test_zero_horizon(self):
        pos0 = IntervalBox.of((0, -1, 1), (1, 0, 2))
        box = reach_position_box(pos0, IntervalBox.of((-3, -3, -3), (3, 3, 3)), ReachParams(2.0, 0.0))
        np.testing.assert_array_equal(box.lo, pos0.lo)
        np.testing.assert_array_equal(box.hi, pos0.hi)

    def test_per_axis_acceleration(self):
        box = reach_position_box(IntervalBox.point((0, 0, 0)), IntervalBox.point((0, 0, 0)),
                                 ReachParams((2.0, 1.0, 0.0), 1.0))
        np.testing.assert_allclose(box.hi, [1.0, 0.5, 0.0])
        np.testing.assert_allclose(box.lo, [-1.0, -0.5, 0.0])

    def test_monotone_in_inputs(self):
        p = ReachParams(2.0, 1.0)
        small = reach_position_box(IntervalBox.around((0, 0, 0), 0.1), IntervalBox.around((0, 0, 0), 0.1), p)
        large = reach_position_box(IntervalBox.around((0, 0, 0), 0.2), IntervalBox.around((0, 0, 0), 0.3), p)
        assert large.contains_box(small)

    def test_negative_params_rejected(self):
        with pytest.raises(ValueError):
            ReachParams(-1.0, 1.0)
        with pytest.raises(ValueError):
            ReachParams(1.0, -0.1)


class TestSoundness:
    @pytest.mark.parametrize("seed", range(5))
    def test_random_rollouts_stay_inside(self, seed):
        rng = np.random.default_rng(seed)
        pos0 = rng.uniform((0, -2.7, 0), (5.6, 2.7, 3.0))
        vel0 = rng.uniform(-1.0, 1.0, size=3)
        p = ReachParams(rng.uniform(0.5, 3.0, size=3), rng.uniform(0.5, 2.0))
        box = reach_position_box(IntervalBox.point(pos0), IntervalBox.point(vel0), p)
        samples = mc_reach_samples(pos0, vel0, p, 10_000, rng)
        assert samples.shape == (10_000, 3)
        assert np.all(samples >= box.lo - 1e-9)
        assert np.all(samples <= box.hi + 1e-9)

        # per-axis extremes come from the constant bang rollouts
        np.testing.assert_allclose(bang_sample(pos0, vel0, p, (-1, -1, -1)), box.lo, rtol=0, atol=1e-9)
        np.testing.assert_allclose(bang_sample(pos0, vel0, p, (1, 1, 1)), box.hi, rtol=0, atol=1e-9)

    def test_bang_rollouts_hit_the_corners(self):
        p = ReachParams(2.0, 1.5)
        pos0, vel0 = np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.0, -0.5])
        box = reach_position_box(IntervalBox.point(pos0), IntervalBox.point(vel0), p)
        corners = box.corners()
        for signs in itertools.product((-1, 1), repeat=3):
            hit = bang_sample(pos0, vel0, p, signs)
            assert np.any(np.all(np.isclose(corners, hit), axis=1))

    def test_sample_count(self):
        with pytest.raises(ValueError):
            mc_reach_samples((0, 0, 0), (0, 0, 0), ReachParams(1.0, 1.0), 0, np.random.default_rng(0))


class TestBoundingSphere:
    def test_degenerate(self):
        c, r = bounding_sphere(IntervalBox.point((1, 2, 3)))
        np.testing.assert_array_equal(c, [1, 2, 3])
        assert r == 0.0

    def test_unit_cube(self):
        c, r = bounding_sphere(IntervalBox.of((0, 0, 0), (1, 1, 1)))
        np.testing.assert_allclose(c, 0.5)
        assert r == pytest.approx(math.sqrt(3) / 2)

    def test_flat_box(self):
        c, r = bounding_sphere(IntervalBox.of((-0.75, 0, 1.5), (3.75, 0, 1.5)))
        np.testing.assert_allclose(c, [1.5, 0, 1.5])
        assert r == pytest.approx(2.25)

    def test_contains_box(self):
        box = IntervalBox.of((-1, 0, 2), (2, 0.5, 3))
        c, r = bounding_sphere(box)
        assert np.all(np.linalg.norm(box.corners() - c, axis=1) <= r + 1e-12)
