"""Shared fixtures: hand-built switched traces and a short, fast scenario."""

import math

import numpy as np
import pytest

from svt.common import Mode
from svt.scenario import parse_scenario
from svt.trace import Trace

T, R = Mode.TRACKING, Mode.RECOVERY


def build_switched_trace(pieces, lam: float = 0.5, v0: float = 1.0, dt: float = 0.01) -> Trace:
    """Trace from (mode, seconds, jump) pieces.

    V is multiplied by `jump` when a piece starts, decays as exp(-2*lam*t)
    through Tracking pieces and stays constant through Recovery pieces.
    """
    modes, values = [], []
    level = v0
    decay = math.exp(-2.0 * lam * dt)
    for mode, seconds, jump in pieces:
        level *= jump
        for _ in range(int(round(seconds / dt))):
            modes.append(int(mode))
            values.append(level)
            if mode == Mode.TRACKING:
                level *= decay
    return Trace.from_series(np.arange(len(values)) * dt, modes, values)


@pytest.fixture
def switched_trace():
    return build_switched_trace


@pytest.fixture
def three_cycle_trace():
    """Three 2 s Tracking segments separated by 0.3 s Recovery; V jumps x1.5 at re-entry."""
    return build_switched_trace([(T, 2.0, 1.0), (R, 0.3, 1.0), (T, 2.0, 1.5),
                                 (R, 0.3, 1.0), (T, 2.0, 1.5)])


@pytest.fixture
def short_scenario():
    """Slow, small ellipse seen from 2 m: never leaves the cone."""
    def make(**overrides):
        data = {
            "name": "short",
            "trajectory": {"kind": "ellipse", "center": [4.5, 0.0, 1.5], "semi_axes": [0.3, 0.2],
                           "angular_rate": 0.3, "duration": 3.0},
            "offset": 2.0,
            **overrides,
        }
        return parse_scenario(data, "short")
    return make
