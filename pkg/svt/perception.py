"""Camera visibility, the noisy observer, and the per-axis Kalman filter.

The observer returns the target's displacement from the pursuer when the
target lies inside the camera cone and the frame was not dropped, and None
(the "not visible" output) otherwise. Estimates are smoothed by three
independent constant-velocity Kalman filters, one per world axis.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from svt.common import FOV, EstimatorNotReady, IntervalBox, KinState

Triple = tuple[float, float, float]


# =============================================================================
# Configuration models
# =============================================================================

class CameraModel(BaseModel):
    """Cone camera. `fov` is the FULL apex angle; tests use fov/2."""
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    fov: float = Field(FOV, gt=0, lt=math.pi)
    facing: Triple = (1.0, 0.0, 0.0)
    latency: float = Field(0.0, ge=0, description="frame-to-estimator delay (s)")

    @model_validator(mode="after")
    def _unit_facing(self):
        if abs(math.sqrt(sum(c * c for c in self.facing)) - 1.0) > 1e-9:
            raise ValueError(f"camera facing {self.facing} is not a unit vector")
        return self

    @property
    def half_angle(self) -> float:
        return self.fov / 2.0

    @property
    def axis(self) -> np.ndarray:
        return np.array(self.facing, dtype=float)

    def latency_steps(self, dt: float) -> int:
        return int(round(self.latency / dt))


class NoiseModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    pos_sigma: Triple = (0.0, 0.0, 0.0)
    dropout_prob: float = Field(0.0, ge=0.0, lt=1.0)
    stream: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _nonnegative_sigma(self):
        if any(s < 0 for s in self.pos_sigma):
            raise ValueError("pos_sigma must be >= 0")
        return self


class EstimatorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    q: float = Field(2.0, ge=0, description="process acceleration sigma (m/s^2)")
    r: float = Field(0.02, gt=0, description="measurement sigma (m)")
    init_pos_var: float = Field(0.25, ge=0)
    init_vel_var: float = Field(1.0, ge=0)
    n_sigma: float = Field(3.0, gt=0)


# =============================================================================
# Visibility and observation
# =============================================================================

def visible(p_pos, t_pos, cam: CameraModel) -> bool:
    """True iff the target is inside the closed cone of half-angle fov/2."""
    v = np.asarray(t_pos, dtype=float) - np.asarray(p_pos, dtype=float)
    r = cam.axis
    along = float(v @ r)
    if along <= 0.0:
        return False
    return float(np.linalg.norm(np.cross(v, r))) <= along * math.tan(cam.half_angle)


def observe(p: KinState, t: KinState, cam: CameraModel, noise: NoiseModel,
            rng: np.random.Generator) -> np.ndarray | None:
    """Noisy displacement t.pos - p.pos, or None when unseen.

    The stream advances by the same amount on every call so the random
    sequence does not depend on the flight path.
    """
    u = rng.random()
    jitter = rng.normal(0.0, np.array(noise.pos_sigma, dtype=float))
    if not visible(p.pos, t.pos, cam):
        return None
    if u < noise.dropout_prob:
        return None
    return (t.pos - p.pos) + jitter


class DelayLine:
    """FIFO that hands each measurement back `steps` frames after it was pushed.

    The first `steps` pushes return None, as does any pushed None.
    """

    def __init__(self, steps: int):
        if steps < 0:
            raise ValueError(f"delay must be >= 0 frames, got {steps}")
        self._buf: deque = deque([None] * steps)

    def push(self, z: np.ndarray | None) -> np.ndarray | None:
        self._buf.append(z)
        return self._buf.popleft()


# =============================================================================
# Kalman filter (one axis)
# =============================================================================

@dataclass(frozen=True, eq=False)
class KalmanAxis:
    mean: np.ndarray          # (p, v)
    cov: np.ndarray           # 2x2
    q: float
    r: float


class TargetEstimate(NamedTuple):
    pos: np.ndarray
    vel: np.ndarray
    pos_box: IntervalBox
    vel_box: IntervalBox


def kf_init(z: float, q: float, r: float, pos_var: float = 0.25, vel_var: float = 1.0) -> KalmanAxis:
    return KalmanAxis(np.array([float(z), 0.0]), np.diag([pos_var, vel_var]).astype(float), q, r)


def kf_predict(kf: KalmanAxis, dt: float) -> KalmanAxis:
    f = np.array([[1.0, dt], [0.0, 1.0]])
    qm = kf.q ** 2 * np.array([[dt ** 4 / 4, dt ** 3 / 2],
                               [dt ** 3 / 2, dt ** 2]])
    cov = f @ kf.cov @ f.T + qm
    return KalmanAxis(f @ kf.mean, (cov + cov.T) / 2, kf.q, kf.r)


def kf_update(kf: KalmanAxis, z: float) -> KalmanAxis:
    # Joseph form keeps the covariance PSD under rounding
    r2 = kf.r ** 2
    s = kf.cov[0, 0] + r2
    k = kf.cov[:, 0] / s
    mean = kf.mean + k * (float(z) - kf.mean[0])
    i_kh = np.eye(2) - np.outer(k, [1.0, 0.0])
    cov = i_kh @ kf.cov @ i_kh.T + r2 * np.outer(k, k)
    return KalmanAxis(mean, (cov + cov.T) / 2, kf.q, kf.r)


# -----------------------------------------------------------------------------
# Three-axis helpers
# -----------------------------------------------------------------------------

def kf_init_axes(z, cfg: EstimatorConfig) -> tuple[KalmanAxis, ...]:
    return tuple(kf_init(zi, cfg.q, cfg.r, cfg.init_pos_var, cfg.init_vel_var) for zi in z)


def kf_predict_axes(axes: Sequence[KalmanAxis], dt: float) -> tuple[KalmanAxis, ...]:
    return tuple(kf_predict(a, dt) for a in axes)


def kf_update_axes(axes: Sequence[KalmanAxis], z) -> tuple[KalmanAxis, ...]:
    return tuple(kf_update(a, zi) for a, zi in zip(axes, z))


def kf_estimate(axes: Sequence[KalmanAxis] | None, n_sigma: float = 3.0) -> TargetEstimate:
    """Means plus boxes of half-width n_sigma * std around them."""
    if axes is None or len(axes) != 3:
        raise EstimatorNotReady("Kalman filter not initialized on all three axes")
    pos = np.array([a.mean[0] for a in axes])
    vel = np.array([a.mean[1] for a in axes])
    pos_std = np.sqrt(np.maximum([a.cov[0, 0] for a in axes], 0.0))
    vel_std = np.sqrt(np.maximum([a.cov[1, 1] for a in axes], 0.0))
    return TargetEstimate(
        pos, vel,
        IntervalBox.around(pos, n_sigma * pos_std),
        IntervalBox.around(vel, n_sigma * vel_std),
    )


def lead_estimate(est: TargetEstimate, lead: float) -> TargetEstimate:
    """Shift the position mean and box forward by `lead` seconds at the estimated velocity."""
    if lead == 0.0:
        return est
    shift = est.vel * lead
    return TargetEstimate(
        est.pos + shift,
        est.vel,
        IntervalBox(est.pos_box.lo + shift, est.pos_box.hi + shift),
        est.vel_box,
    )
