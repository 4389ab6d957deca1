"""Scenario configuration: one JSON file per experiment.

Files are parsed strictly (unknown fields are errors) and defaults are
materialized on load, so a written scenario (or the copy embedded in a
result file) is the fully resolved configuration.
"""

import json
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from svt.common import DT, ConfigError, log
from svt.controller import SvtConfig
from svt.perception import CameraModel, EstimatorConfig, NoiseModel, visible
from svt.sim_core import TrajectorySpec, Workspace, ellip_spec, sample_trajectory, slem_spec, \
    trajectory_in_workspace

Triple = tuple[float, float, float]

SWEEP_PARAMETERS = ("v_max", "t_R", "d_max", "offset", "seed")
SEED_MOD = 2 ** 64
# Frame-to-estimate delay of the shipped presets (s)
PRESET_LATENCY = 0.65


class KinStateModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    pos: Triple
    vel: Triple = (0.0, 0.0, 0.0)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    name: str = "scenario"
    trajectory: TrajectorySpec = Field(default_factory=TrajectorySpec)
    offset: float = Field(1.0, gt=0)
    controller: Literal["svt", "baseline"] = "svt"
    svt: SvtConfig = Field(default_factory=SvtConfig)
    camera: CameraModel = Field(default_factory=CameraModel)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)
    workspace: Workspace = Field(default_factory=Workspace)
    vel_limits: Triple = (2.0, 0.5, 0.35)
    duration: float | None = Field(None, gt=0)
    dt: float = Field(DT, gt=0)
    seed: int = Field(0, ge=0, lt=SEED_MOD)
    pursuer_init: KinStateModel | None = None
    stability_delta: float = Field(0.1, gt=0)

    @model_validator(mode="after")
    def _resolve(self):
        if self.duration is None:
            self.duration = self.trajectory.duration
        elif self.duration < self.trajectory.duration:
            raise ValueError(f"duration {self.duration} is shorter than trajectory.duration "
                             f"{self.trajectory.duration}")
        if self.svt.offset != self.offset:
            self.svt = self.svt.model_copy(update={"offset": self.offset})
        if any(v < 0 for v in self.vel_limits):
            raise ValueError("vel_limits must be >= 0")

        target0 = sample_trajectory(self.trajectory, [0.0])[0][0]
        if self.pursuer_init is None:
            start = target0 - self.offset * self.camera.axis
            self.pursuer_init = KinStateModel(pos=tuple(float(v) for v in start))
        if abs(self.pursuer_init.vel[0]) > self.svt.v_max:
            raise ValueError(f"pursuer_init.vel x-component exceeds svt.v_max {self.svt.v_max}")
        if not visible(np.array(self.pursuer_init.pos), target0, self.camera):
            raise ValueError("pursuer_init does not see the target at t=0")
        if not trajectory_in_workspace(self.trajectory, self.workspace):
            raise ValueError("trajectory leaves the workspace")
        if not self.svt.critically_damped():
            log("WARN", f"{self.name}: kd^2 < 4 kp, tracking law is underdamped")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


# =============================================================================
# Load / write
# =============================================================================

def _format_validation(source: str, exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{source}: {path}: {err['msg']}")
    return "\n".join(lines)


def parse_scenario(data: dict, source: str = "<scenario>") -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation(source, e)) from e


def load_scenario(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} col {e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: line 1: scenario must be a JSON object")
    return parse_scenario(data, path)


def write_scenario(path: str, cfg: ScenarioConfig):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(cfg.model_dump_json(indent=2))
        f.write("\n")


# =============================================================================
# Presets and parameter overrides
# =============================================================================

def default_scenario(trajectory: str = "ellip", offset: float = 1.0, controller: str = "svt",
                     **overrides) -> ScenarioConfig:
    """The shipped Ellip/SLem scenarios, e.g. default_scenario("slem", 1.5)."""
    specs = {"ellip": ellip_spec, "slem": slem_spec}
    if trajectory not in specs:
        raise ConfigError(f"unknown trajectory preset '{trajectory}' (choose from {sorted(specs)})")
    data = {
        "name": f"{trajectory}-{offset:.1f}",
        "trajectory": specs[trajectory]().model_dump(),
        "offset": offset,
        "controller": controller,
        "camera": {"latency": PRESET_LATENCY},
        "noise": {"pos_sigma": (0.005, 0.005, 0.005), "dropout_prob": 0.01},
        **overrides,
    }
    return parse_scenario(data, f"preset {trajectory}-{offset}")


def with_parameter(cfg: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter '{parameter}' (choose from {', '.join(SWEEP_PARAMETERS)})")
    data = cfg.model_dump()
    if parameter == "seed":
        if value < 0 or not math.isclose(value, round(value)):
            raise ConfigError(f"seed must be a nonnegative integer, got {value}")
        data["seed"] = int(round(value)) % SEED_MOD
    elif parameter == "offset":
        data["offset"] = value
        data["svt"]["offset"] = value
        data["pursuer_init"] = None
    else:
        data["svt"][parameter] = value
    data["name"] = f"{cfg.name}-{parameter}={value:g}"
    return parse_scenario(data, f"{cfg.name} with {parameter}={value}")


def with_controller(cfg: ScenarioConfig, controller: str) -> ScenarioConfig:
    return cfg.model_copy(update={"controller": controller})


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return cfg.model_copy(update={"seed": int(seed) % SEED_MOD})
