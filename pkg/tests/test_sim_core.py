import math

import numpy as np
import pytest

from svt.common import KinState, TrajectoryRangeError
from svt.sim_core import (
    TrajectorySpec,
    Workspace,
    clamp_velocity,
    ellip_spec,
    eval_trajectory,
    path_length,
    sample_trajectory,
    slem_spec,
    slem_waypoints,
    step_double_integrator,
    target_states,
    trajectory_in_workspace,
    trajectory_speed_stats,
)


class TestEllipse:
    def test_start_position_and_velocity(self):
        s = eval_trajectory(ellip_spec(), 0.0)
        np.testing.assert_allclose(s.pos, [4.5, 2.0, 1.5])
        np.testing.assert_allclose(s.vel, [0.0, 0.0, 0.75 * 0.419], atol=1e-12)
        assert s.vel[2] == pytest.approx(0.314, abs=1e-3)

    def test_periodic(self):
        spec = ellip_spec()
        a = eval_trajectory(spec, 0.0)
        b = eval_trajectory(spec, 2 * math.pi / spec.angular_rate)
        np.testing.assert_allclose(a.pos, b.pos, atol=1e-9)

    def test_no_motion_along_x(self):
        pos, vel = sample_trajectory(ellip_spec(), np.linspace(0, 45, 101))
        assert np.all(pos[:, 0] == 4.5)
        assert np.all(vel[:, 0] == 0.0)

    def test_out_of_range(self):
        with pytest.raises(TrajectoryRangeError):
            eval_trajectory(ellip_spec(), 45.01)
        with pytest.raises(TrajectoryRangeError):
            eval_trajectory(ellip_spec(), -0.01)


class TestLemniscate:
    def test_eight_waypoints_crossing_at_center(self):
        pts = slem_waypoints((4.5, 0.0, 1.5), (2.0, 0.75))
        assert pts.shape == (8, 3)
        assert np.all(pts[:, 0] == 4.5)
        # the two diagonals (w/2, -h)->(-w/2, h) and (-w/2, -h)->(w/2, h) meet at the center
        np.testing.assert_allclose((pts[3] + pts[4]) / 2, [4.5, 0.0, 1.5])
        np.testing.assert_allclose((pts[7] + pts[0]) / 2, [4.5, 0.0, 1.5])

    def test_linear_segment_at_constant_speed(self):
        spec = slem_spec(semi_axes=(2.4, 0.75))
        pts = slem_waypoints(spec.center, spec.semi_axes)
        assert np.linalg.norm(pts[1] - pts[0]) == pytest.approx(1.2)
        pos, vel = sample_trajectory(spec, [0.0, 0.5, 1.0, 1.5])
        np.testing.assert_allclose(pos[0], pts[0])
        np.testing.assert_allclose(np.diff(pos[:, 1]), 0.3)
        np.testing.assert_allclose(np.linalg.norm(vel, axis=1), 0.6)

    def test_closed_path_wraps(self):
        spec = slem_spec()
        period = path_length(spec) / spec.speed
        assert period < spec.duration
        a, _ = sample_trajectory(spec, [0.0])
        b, _ = sample_trajectory(spec, [period])
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestWaypoints:
    def test_open_path_holds_at_end(self):
        spec = TrajectorySpec(kind="waypoints", waypoints=[(4.5, 0.0, 1.5), (4.5, 1.0, 1.5)],
                              closed=False, speed=0.5, duration=5.0)
        pos, vel = sample_trajectory(spec, [1.0, 2.0, 4.0])
        np.testing.assert_allclose(pos[0], [4.5, 0.5, 1.5])
        np.testing.assert_allclose(pos[2], [4.5, 1.0, 1.5])
        np.testing.assert_allclose(vel[2], 0.0)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            TrajectorySpec(kind="waypoints", waypoints=[(4.5, 0.0, 1.5)])


class TestTargetStates:
    def test_holds_after_script_ends(self):
        spec = ellip_spec(duration=2.0)
        pos, vel = target_states(spec, [2.0, 2.5, 3.0])
        np.testing.assert_allclose(pos[1], pos[0])
        np.testing.assert_allclose(pos[2], pos[0])
        assert np.all(vel[1:] == 0.0)


class TestSpeedStats:
    def test_ellipse(self):
        avg, vmax = trajectory_speed_stats(ellip_spec())
        assert vmax == pytest.approx(0.419 * 2.0)
        assert 0.419 * 0.75 < avg < vmax

    def test_polyline(self):
        assert trajectory_speed_stats(slem_spec()) == (0.6, 0.6)


class TestWorkspace:
    def test_presets_inside(self):
        assert trajectory_in_workspace(ellip_spec(), Workspace())
        assert trajectory_in_workspace(slem_spec(), Workspace())

    def test_too_wide(self):
        assert not trajectory_in_workspace(ellip_spec(semi_axes=(3.0, 0.75)), Workspace())

    def test_bounds_ordered(self):
        with pytest.raises(ValueError):
            Workspace(lo=(0, 0, 0), hi=(1, 0, 1))


class TestPlant:
    def test_zero_step_is_identity(self):
        s = step_double_integrator(KinState.of((0, 0, 0)), (0, 0, 0), 0.01)
        np.testing.assert_array_equal(s.pos, 0.0)
        np.testing.assert_array_equal(s.vel, 0.0)

    def test_closed_form(self):
        s = step_double_integrator(KinState.of((0, 0, 0), (1, 0, 0)), (2, 0, 0), 1.5)
        np.testing.assert_allclose(s.pos, [3.75, 0, 0])
        np.testing.assert_allclose(s.vel, [4, 0, 0])

    @pytest.mark.parametrize("vel, limits, expected", [
        ((1.4, 0, 0), (1.0, math.inf, math.inf), (1.0, 0, 0)),
        ((0.5, 0.2, -0.1), (1.0, 1.0, 1.0), (0.5, 0.2, -0.1)),
        ((-2.0, 0, 0), (1.0, math.inf, math.inf), (-1.0, 0, 0)),
    ])
    def test_clamp_velocity(self, vel, limits, expected):
        s = clamp_velocity(KinState.of((1, 2, 3), vel), limits)
        np.testing.assert_allclose(s.vel, expected)
        np.testing.assert_allclose(s.pos, [1, 2, 3])
