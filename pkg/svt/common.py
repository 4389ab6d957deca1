"""Shared types, constants, and errors for the SVT simulator.

Every module (sim_core, perception, reachability, controller, stability,
harness) builds on the value types defined here: Vec3 arrays, KinState,
IntervalBox, the Mode switching signal, and the SvtError hierarchy whose
exit codes the CLI reports.
"""

import math
import os
import sys
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable

import numpy as np
from dotenv import load_dotenv

# Load .env from project root
load_dotenv(os.path.join(os.path.dirname(__file__), "..", ".env"))

# =============================================================================
# Constants
# =============================================================================

DT = 0.01                        # 100 Hz, the camera frame rate
FOV = math.radians(70.0)         # full apex angle of the camera cone
TARGET_ACCEL_MAX = (0.25, 0.8, 0.8)  # m/s^2 per axis; targets fly in the yz-plane
EPS_V = 1e-4                     # log guard for Lyapunov fits

WORKSPACE_LO = (0.0, -2.7, 0.0)
WORKSPACE_HI = (5.6, 2.7, 3.0)

LOG_LEVELS = {"DEBUG": 10, "INFO": 20, "WARN": 30, "ERROR": 40}


# =============================================================================
# Logging
# =============================================================================

def log(level: str, msg: str):
    threshold = LOG_LEVELS.get(os.environ.get("SVT_LOG_LEVEL", "INFO").upper(), 20)
    if LOG_LEVELS.get(level, 20) >= threshold:
        print(f"[{level}] {msg}", file=sys.stderr, flush=True)


# =============================================================================
# Errors
# =============================================================================

class SvtError(Exception):
    """Base class for simulator errors. `exit_code` is what the CLI returns."""
    exit_code = 1


class ConfigError(SvtError):
    exit_code = 2


class InvariantViolation(SvtError):
    exit_code = 3


class CertificationError(SvtError):
    exit_code = 4


class TrajectoryRangeError(SvtError):
    pass


class EstimatorNotReady(SvtError):
    pass


class BackoffExceedsDmax(SvtError):
    """The recovery pose needs more backoff than d_max allows."""

    def __init__(self, required: float, d_max: float, center=None):
        super().__init__(f"recovery pose needs backoff {required:.3f} m > d_max {d_max:.3f} m")
        self.required = required
        self.d_max = d_max
        self.center = center


class VerificationFailed(InvariantViolation):
    pass


# =============================================================================
# Vec3 helpers
# =============================================================================

def as_vec3(v: Iterable[float] | float) -> np.ndarray:
    """Coerce a scalar or a length-3 sequence into a float64 (3,) array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return np.full(3, float(arr))
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    return arr.copy()


def all_finite(*arrays) -> bool:
    return all(bool(np.all(np.isfinite(a))) for a in arrays)


# =============================================================================
# Value types
# =============================================================================

class Mode(IntEnum):
    """Switching signal value. Tracking is the stable mode."""
    TRACKING = 0
    RECOVERY = 1

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Mode":
        return cls[label.strip().upper()]


@dataclass(frozen=True, eq=False)
class KinState:
    """Position/velocity of a point mass."""
    pos: np.ndarray
    vel: np.ndarray

    @classmethod
    def of(cls, pos, vel=(0.0, 0.0, 0.0)) -> "KinState":
        return cls(as_vec3(pos), as_vec3(vel))

    def is_finite(self) -> bool:
        return all_finite(self.pos, self.vel)


@dataclass(frozen=True, eq=False)
class IntervalBox:
    """Axis-aligned box [lo, hi] in R^3."""
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if not all_finite(self.lo, self.hi):
            raise ValueError("interval box bounds must be finite")
        if np.any(self.lo > self.hi):
            raise ValueError(f"interval box has lo > hi: {self.lo} > {self.hi}")

    @classmethod
    def of(cls, lo, hi) -> "IntervalBox":
        return cls(as_vec3(lo), as_vec3(hi))

    @classmethod
    def point(cls, p) -> "IntervalBox":
        p = as_vec3(p)
        return cls(p.copy(), p.copy())

    @classmethod
    def around(cls, center, half_width) -> "IntervalBox":
        c, h = as_vec3(center), np.abs(as_vec3(half_width))
        return cls(c - h, c + h)

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def contains_box(self, other: "IntervalBox", tol: float = 0.0) -> bool:
        return self.contains(other.lo, tol) and self.contains(other.hi, tol)

    def corners(self) -> np.ndarray:
        """All 8 corners as an (8, 3) array."""
        out = np.empty((8, 3))
        for i in range(8):
            for axis in range(3):
                out[i, axis] = self.hi[axis] if (i >> axis) & 1 else self.lo[axis]
        return out
