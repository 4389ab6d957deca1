"""Interval reach sets for a double integrator with bounded acceleration.

At a fixed horizon t the position is monotone in the initial position, the
initial velocity and the acceleration profile, so the box spanned by the
constant +/-a_max rollouts from the box corners is exact.
"""

from dataclasses import dataclass

import numpy as np

from svt.common import IntervalBox, KinState, as_vec3
from svt.sim_core import step_double_integrator


@dataclass(frozen=True, eq=False)
class ReachParams:
    """a_max is symmetric per axis (scalar or triple); t_R is the horizon."""
    a_max: np.ndarray
    t_R: float

    def __post_init__(self):
        object.__setattr__(self, "a_max", as_vec3(self.a_max))
        if np.any(self.a_max < 0) or self.t_R < 0:
            raise ValueError(f"reach params must be nonnegative (a_max={self.a_max}, t_R={self.t_R})")


def reach_position_box(pos0: IntervalBox, vel0: IntervalBox, p: ReachParams) -> IntervalBox:
    t = p.t_R
    spread = 0.5 * p.a_max * t * t
    return IntervalBox(pos0.lo + vel0.lo * t - spread, pos0.hi + vel0.hi * t + spread)


def bounding_sphere(box: IntervalBox) -> tuple[np.ndarray, float]:
    return box.center, float(np.linalg.norm(box.hi - box.lo) / 2.0)


def bang_sample(pos0, vel0, p: ReachParams, signs) -> np.ndarray:
    """Endpoint under constant acceleration signs * a_max for the whole horizon."""
    s = KinState.of(pos0, vel0)
    return step_double_integrator(s, as_vec3(signs) * p.a_max, p.t_R).pos


def mc_reach_samples(pos0, vel0, p: ReachParams, n: int, rng: np.random.Generator,
                     max_switches: int = 3, saturate_prob: float = 0.2) -> np.ndarray:
    """n endpoints of random piecewise-constant acceleration rollouts, shape (n, 3).

    Each rollout has up to `max_switches` switching times drawn uniformly in
    [0, t_R]; each piece draws its acceleration uniformly in the box, or
    snaps it to a face with probability `saturate_prob`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pieces = max_switches + 1
    cuts = np.sort(rng.uniform(0.0, p.t_R, size=(n, max_switches)), axis=1)
    bounds = np.concatenate([np.zeros((n, 1)), cuts, np.full((n, 1), p.t_R)], axis=1)
    durations = np.diff(bounds, axis=1)

    accel = rng.uniform(-1.0, 1.0, size=(n, pieces, 3))
    snap = rng.random(size=(n, pieces, 3)) < saturate_prob
    accel = np.where(snap, np.sign(accel), accel) * p.a_max

    pos = np.tile(as_vec3(pos0), (n, 1))
    vel = np.tile(as_vec3(vel0), (n, 1))
    for k in range(pieces):
        d = durations[:, k:k + 1]
        a = accel[:, k, :]
        pos = pos + vel * d + 0.5 * a * d * d
        vel = vel + a * d
    return pos
