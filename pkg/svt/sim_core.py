"""Point-mass dynamics and scripted target trajectories.

Targets fly Ellip (an ellipse in the yz-plane) or SLem (a constant-speed
figure-eight polyline through 8 waypoints) with no motion along x. The
pursuer plant is the same exact double integrator, with per-axis velocity
limits applied after every step.

Usage:
    # Speed statistics and workspace check for a trajectory file
    python -m svt.sim_core scenarios/ellip-1.0.json
"""

import argparse
import json
import math
import sys
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import quad

from svt.common import (
    WORKSPACE_HI,
    WORKSPACE_LO,
    KinState,
    TrajectoryRangeError,
    as_vec3,
)

Triple = tuple[float, float, float]


# =============================================================================
# Configuration models
# =============================================================================

class TrajectorySpec(BaseModel):
    """Scripted target path.

    `semi_axes` are the (y, z) half-extents: the ellipse radii for Ellip and
    the outer half-width/half-height of the figure-eight for SLem. Ellipse
    uses `angular_rate`; the polyline kinds use `speed`.
    """
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    kind: Literal["ellipse", "square_lemniscate", "waypoints"] = "ellipse"
    center: Triple = (4.5, 0.0, 1.5)
    semi_axes: tuple[float, float] = (2.0, 0.75)
    angular_rate: float = Field(0.419, gt=0)
    speed: float = Field(0.6, gt=0)
    waypoints: list[Triple] | None = None
    closed: bool = True
    duration: float = Field(45.0, gt=0)
    phase: float = 0.0

    @model_validator(mode="after")
    def _check_kind(self):
        if min(self.semi_axes) <= 0:
            raise ValueError("semi_axes must be positive")
        if self.kind == "waypoints":
            if not self.waypoints or len(self.waypoints) < 2:
                raise ValueError("waypoints trajectory needs at least 2 waypoints")
            if not self.closed and self.phase != 0.0:
                raise ValueError("phase is only defined for closed waypoint paths")
            if path_length(self) <= 0:
                raise ValueError("waypoint path has zero length")
        return self


class Workspace(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    lo: Triple = WORKSPACE_LO
    hi: Triple = WORKSPACE_HI

    @model_validator(mode="after")
    def _check_order(self):
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"workspace lo {self.lo} must be < hi {self.hi} componentwise")
        return self

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> bool:
        pts = np.atleast_2d(points)
        return bool(np.all(pts >= np.array(self.lo) - tol) and np.all(pts <= np.array(self.hi) + tol))


def ellip_spec(**overrides) -> TrajectorySpec:
    return TrajectorySpec(**{"kind": "ellipse", "duration": 45.0, **overrides})


def slem_spec(**overrides) -> TrajectorySpec:
    return TrajectorySpec(**{"kind": "square_lemniscate", "semi_axes": (2.0, 1.2), "speed": 0.6,
                             "duration": 40.0, **overrides})


# =============================================================================
# Polyline paths
# =============================================================================

def slem_waypoints(center: Triple, semi_axes: tuple[float, float]) -> np.ndarray:
    """Figure-eight through 8 waypoints; the two diagonals cross at the center."""
    cx, cy, cz = center
    w, h = semi_axes
    offsets = [
        (w / 2, h), (w, h), (w, -h), (w / 2, -h),
        (-w / 2, h), (-w, h), (-w, -h), (-w / 2, -h),
    ]
    return np.array([(cx, cy + dy, cz + dz) for dy, dz in offsets], dtype=float)


def path_vertices(spec: TrajectorySpec) -> np.ndarray:
    if spec.kind == "square_lemniscate":
        return slem_waypoints(spec.center, spec.semi_axes)
    if spec.kind == "waypoints":
        return np.array(spec.waypoints, dtype=float)
    raise ValueError(f"{spec.kind} is not a polyline trajectory")


def _is_closed(spec: TrajectorySpec) -> bool:
    return spec.kind == "square_lemniscate" or spec.closed


def _segments(spec: TrajectorySpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(start points, unit directions, cumulative arc length incl. 0 and total)."""
    pts = path_vertices(spec)
    if _is_closed(spec):
        pts = np.vstack([pts, pts[:1]])
    deltas = np.diff(pts, axis=0)
    lengths = np.linalg.norm(deltas, axis=1)
    keep = lengths > 0
    starts, deltas, lengths = pts[:-1][keep], deltas[keep], lengths[keep]
    dirs = deltas / lengths[:, None]
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    return starts, dirs, cum


def path_length(spec: TrajectorySpec) -> float:
    return float(_segments(spec)[2][-1])


# =============================================================================
# Trajectory evaluation
# =============================================================================

def sample_trajectory(spec: TrajectorySpec, times) -> tuple[np.ndarray, np.ndarray]:
    """Positions and velocities, shape (n, 3) each, at every t in `times`."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0) or np.any(t > spec.duration):
        bad = t[(t < 0) | (t > spec.duration)][0]
        raise TrajectoryRangeError(f"t={bad} outside [0, {spec.duration}]")

    n = t.shape[0]
    pos = np.empty((n, 3))
    vel = np.zeros((n, 3))
    cx, cy, cz = spec.center

    if spec.kind == "ellipse":
        ay, az = spec.semi_axes
        w = spec.angular_rate
        arg = w * t + spec.phase
        pos[:, 0] = cx
        pos[:, 1] = cy + ay * np.cos(arg)
        pos[:, 2] = cz + az * np.sin(arg)
        vel[:, 1] = -ay * w * np.sin(arg)
        vel[:, 2] = az * w * np.cos(arg)
        return pos, vel

    starts, dirs, cum = _segments(spec)
    total = cum[-1]
    if _is_closed(spec):
        s = np.mod(spec.phase / (2 * math.pi) * total + spec.speed * t, total)
        moving = np.ones(n, dtype=bool)
    else:
        s = np.minimum(spec.speed * t, total)
        moving = spec.speed * t < total
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(starts) - 1)
    pos[:] = starts[idx] + (s - cum[idx])[:, None] * dirs[idx]
    vel[moving] = spec.speed * dirs[idx[moving]]
    return pos, vel


def eval_trajectory(spec: TrajectorySpec, t: float) -> KinState:
    pos, vel = sample_trajectory(spec, [t])
    return KinState(pos[0], vel[0])


def target_states(spec: TrajectorySpec, times) -> tuple[np.ndarray, np.ndarray]:
    """Like sample_trajectory, but the target holds its final position after the script ends."""
    t = np.asarray(times, dtype=float)
    pos, vel = sample_trajectory(spec, np.minimum(t, spec.duration))
    vel[t > spec.duration] = 0.0
    return pos, vel


def trajectory_speed_stats(spec: TrajectorySpec) -> tuple[float, float]:
    """(path-average speed, max speed) over one period of the script."""
    if spec.kind == "ellipse":
        ay, az = spec.semi_axes
        w = spec.angular_rate
        period = 2 * math.pi / w

        def speed(t):
            return w * math.hypot(ay * math.sin(w * t), az * math.cos(w * t))

        total, _ = quad(speed, 0.0, period, limit=200)
        return total / period, w * max(ay, az)
    return spec.speed, spec.speed


def trajectory_in_workspace(spec: TrajectorySpec, ws: Workspace, step: float = 1e-3) -> bool:
    times = np.append(np.arange(0.0, spec.duration, step), spec.duration)
    pos, _ = sample_trajectory(spec, times)
    return ws.contains(pos)


# =============================================================================
# Plant
# =============================================================================

def step_double_integrator(s: KinState, accel, dt: float) -> KinState:
    a = as_vec3(accel)
    return KinState(s.pos + s.vel * dt + 0.5 * a * dt * dt, s.vel + a * dt)


def clamp_velocity(s: KinState, limits) -> KinState:
    lim = as_vec3(limits)
    return KinState(s.pos, np.clip(s.vel, -lim, lim))


def main():
    parser = argparse.ArgumentParser(description="Trajectory statistics for a scenario file")
    parser.add_argument("scenario", help="Scenario JSON")
    parser.add_argument("--step", type=float, default=1e-3, help="Workspace sampling step (s)")
    args = parser.parse_args()

    with open(args.scenario) as f:
        data = json.load(f)
    spec = TrajectorySpec.model_validate(data.get("trajectory", {}))
    ws = Workspace.model_validate(data.get("workspace", {}))
    avg, vmax = trajectory_speed_stats(spec)
    inside = trajectory_in_workspace(spec, ws, args.step)
    print(json.dumps({"kind": spec.kind, "duration": spec.duration,
                      "avg_speed": round(avg, 4), "max_speed": round(vmax, 4),
                      "in_workspace": inside}))
    if not inside:
        sys.exit(1)


if __name__ == "__main__":
    main()
