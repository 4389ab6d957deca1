"""The switched visual tracker (SVT) and the see-only baseline.

Tracking mode runs a saturated PD law on the estimated displacement with the
pursuer's x speed capped at v_max. When the target has been unseen for
debounce_n consecutive frames the controller predicts where the target can
be after t_R seconds, backs off to a pose that sees that whole reach box,
and drives there without the speed cap until the target is seen again.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from svt.common import (
    DT,
    TARGET_ACCEL_MAX,
    BackoffExceedsDmax,
    IntervalBox,
    KinState,
    Mode,
    VerificationFailed,
    as_vec3,
)
from svt.perception import CameraModel, TargetEstimate, visible
from svt.reachability import ReachParams, bounding_sphere, reach_position_box
from svt.sim_core import clamp_velocity, step_double_integrator

EVENT_START = "recovery_start"
EVENT_REPLAN = "replan"
EVENT_FAILURE = "recovery_failure"
EVENT_REACQUIRED = "reacquired"

# Relative margin on the standoff distance so corner tangency survives rounding
STANDOFF_MARGIN = 1e-10


class SvtConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    v_max: float = Field(1.0, gt=0, description="x speed cap in Tracking (m/s)")
    d_max: float = Field(2.7, gt=0, description="max backoff per Recovery episode (m)")
    t_R: float = Field(1.5, gt=0, description="recovery horizon (s)")
    offset: float = Field(1.0, gt=0, description="desired distance behind the target (m)")
    kp: float = Field(4.0, gt=0)
    kd: float = Field(4.0, ge=0)
    recovery_kp: float = Field(25.0, gt=0)
    recovery_kd: float = Field(10.0, ge=0)
    debounce_n: int = Field(3, ge=1)
    a_limit: float = Field(4.0, gt=0)
    reach_a_max: tuple[float, float, float] = Field(TARGET_ACCEL_MAX,
                                                    description="assumed target accel bound per axis")
    arrive_tol: float = Field(0.05, gt=0)
    r_min: float = Field(1e-3, gt=0)

    @field_validator("reach_a_max")
    @classmethod
    def _positive_accel(cls, v):
        if any(a <= 0 for a in v):
            raise ValueError("reach_a_max components must be > 0")
        return v

    def critically_damped(self) -> bool:
        return self.kd ** 2 >= 4 * self.kp

    def nominal_rate(self) -> float:
        """Unsaturated closed-loop decay rate of the tracking law."""
        return self.kd / 2.0


@dataclass(frozen=True, eq=False)
class RecoveryPlan:
    x_R: np.ndarray
    deadline: float
    entry_x: float
    reach_box: IntervalBox
    clamped: bool = False
    required_backoff: float = 0.0


@dataclass(frozen=True, eq=False)
class SvtState:
    mode: Mode = Mode.TRACKING
    consecutive_miss: int = 0
    plan: RecoveryPlan | None = None
    last_seen: TargetEstimate | None = None


class StepOutput(NamedTuple):
    state: SvtState
    mode: Mode
    accel: np.ndarray
    event: str


# =============================================================================
# Control laws
# =============================================================================

def tracking_control(est_disp, est_rel_vel, cfg: SvtConfig, current_vel, dt: float) -> np.ndarray:
    e = as_vec3(est_disp) - np.array([cfg.offset, 0.0, 0.0])
    a = np.clip(cfg.kp * e + cfg.kd * as_vec3(est_rel_vel), -cfg.a_limit, cfg.a_limit)
    vx = float(current_vel[0])
    vx_next = vx + a[0] * dt
    if vx_next > cfg.v_max:
        a[0] = (cfg.v_max - vx) / dt
    elif vx_next < -cfg.v_max:
        a[0] = (-cfg.v_max - vx) / dt
    return a


def recovery_control(p: KinState, plan: RecoveryPlan, cfg: SvtConfig) -> np.ndarray:
    a = cfg.recovery_kp * (plan.x_R - p.pos) - cfg.recovery_kd * p.vel
    return np.clip(a, -cfg.a_limit, cfg.a_limit)


def braking_control(p: KinState, cfg: SvtConfig) -> np.ndarray:
    return np.clip(-cfg.kd * p.vel, -cfg.a_limit, cfg.a_limit)


# =============================================================================
# Recovery pose
# =============================================================================

def compute_recovery_pose(reach_box: IntervalBox, cam: CameraModel, current_pose, cfg: SvtConfig,
                          now: float = 0.0, entry_x: float | None = None) -> RecoveryPlan:
    """Pose on the camera axis behind the reach box's bounding sphere, seeing all of it.

    Backoff is measured from `entry_x` (the pursuer's x when the episode
    began) or from the current pose when no episode is open yet.
    """
    axis = cam.axis
    c, r = bounding_sphere(reach_box)
    r = max(r, cfg.r_min)
    standoff = r / math.sin(cam.half_angle) * (1.0 + STANDOFF_MARGIN)
    x_r = c - standoff * axis

    for corner in reach_box.corners():
        if not visible(x_r, corner, cam):
            raise VerificationFailed(f"reach box corner {corner} not visible from x_R {x_r}")

    ref = float(as_vec3(current_pose) @ axis) if entry_x is None else entry_x
    required = ref - float(x_r @ axis)
    if required > cfg.d_max:
        raise BackoffExceedsDmax(required, cfg.d_max, center=c)
    return RecoveryPlan(x_r, now + cfg.t_R, ref, reach_box, required_backoff=max(required, 0.0))


def clamped_plan(reach_box: IntervalBox, cam: CameraModel, entry_x: float, cfg: SvtConfig,
                 now: float, required: float) -> RecoveryPlan:
    """Fallback when the full reach box needs more than d_max: stop at the d_max line."""
    axis = cam.axis
    c = reach_box.center
    x_r = c + ((entry_x - cfg.d_max) - float(c @ axis)) * axis
    return RecoveryPlan(x_r, now + cfg.t_R, entry_x, reach_box, clamped=True, required_backoff=required)


def _plan(est: TargetEstimate, p: KinState, cfg: SvtConfig, cam: CameraModel,
          t: float, entry_x: float | None) -> tuple[RecoveryPlan, bool]:
    reach = reach_position_box(est.pos_box, est.vel_box, ReachParams(cfg.reach_a_max, cfg.t_R))
    try:
        return compute_recovery_pose(reach, cam, p.pos, cfg, now=t, entry_x=entry_x), False
    except BackoffExceedsDmax as exc:
        ref = float(p.pos @ cam.axis) if entry_x is None else entry_x
        return clamped_plan(reach, cam, ref, cfg, t, exc.required), True


# =============================================================================
# Mode switching
# =============================================================================

def _track(est: TargetEstimate, p: KinState, cfg: SvtConfig, dt: float) -> np.ndarray:
    return tracking_control(est.pos - p.pos, est.vel - p.vel, cfg, p.vel, dt)


def svt_step(st: SvtState, obs: np.ndarray | None, est: TargetEstimate, p: KinState,
             cfg: SvtConfig, cam: CameraModel, t: float, dt: float = DT) -> StepOutput:
    """One controller decision. `est` is the current (possibly predicted-only) estimate."""
    seen = obs is not None

    if st.mode == Mode.TRACKING:
        if seen:
            nxt = SvtState(Mode.TRACKING, 0, None, est)
            return StepOutput(nxt, Mode.TRACKING, _track(est, p, cfg, dt), "")

        miss = st.consecutive_miss + 1
        if miss < cfg.debounce_n:
            frozen = st.last_seen if st.last_seen is not None else est
            nxt = replace(st, consecutive_miss=miss)
            return StepOutput(nxt, Mode.TRACKING, _track(frozen, p, cfg, dt), "")

        plan, clamped = _plan(est, p, cfg, cam, t, None)
        nxt = SvtState(Mode.RECOVERY, miss, plan, st.last_seen)
        event = EVENT_FAILURE if clamped else EVENT_START
        return StepOutput(nxt, Mode.RECOVERY, recovery_control(p, plan, cfg), event)

    if seen:
        nxt = SvtState(Mode.TRACKING, 0, None, est)
        return StepOutput(nxt, Mode.TRACKING, _track(est, p, cfg, dt), EVENT_REACQUIRED)

    plan, event = st.plan, ""
    if t > plan.deadline:
        plan, clamped = _plan(est, p, cfg, cam, t, plan.entry_x)
        event = EVENT_FAILURE if clamped else EVENT_REPLAN
    nxt = SvtState(Mode.RECOVERY, st.consecutive_miss + 1, plan, st.last_seen)
    return StepOutput(nxt, Mode.RECOVERY, recovery_control(p, plan, cfg), event)


def baseline_step(obs: np.ndarray | None, est: TargetEstimate, p: KinState,
                  cfg: SvtConfig, dt: float = DT) -> np.ndarray:
    """Follow while seen, brake to a hover otherwise."""
    if obs is None:
        return braking_control(p, cfg)
    return _track(est, p, cfg, dt)


def check_recoverability(p: KinState, plan: RecoveryPlan, cfg: SvtConfig, dt: float = DT,
                         vel_limits=None) -> bool:
    """Whether the recovery drive reaches x_R within arrive_tol by the end of t_R."""
    s = p
    for _ in range(int(round(cfg.t_R / dt))):
        s = step_double_integrator(s, recovery_control(s, plan, cfg), dt)
        if vel_limits is not None:
            s = clamp_velocity(s, vel_limits)
    return float(np.linalg.norm(s.pos - plan.x_R)) <= cfg.arrive_tol
