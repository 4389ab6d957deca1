"""Deterministic simulation loop, run metrics, and result files.

One step at dt: sample the target, observe it, pass the measurement
through the camera latency into the Kalman filter, record the trace row,
let the controller decide, and integrate the pursuer. Identical
(config, seed) pairs produce byte-identical files.
"""

import os
import time
from collections import Counter

import numpy as np
from pydantic import BaseModel

from svt.common import (
    CertificationError,
    InvariantViolation,
    KinState,
    Mode,
    log,
)
from svt.controller import EVENT_FAILURE, SvtState, baseline_step, braking_control, svt_step
from svt.perception import (
    DelayLine,
    kf_estimate,
    kf_init_axes,
    kf_predict_axes,
    kf_update_axes,
    lead_estimate,
    observe,
    visible,
)
from svt.scenario import ScenarioConfig
from svt.sim_core import clamp_velocity, step_double_integrator, target_states
from svt.stability import Certificate, certify, measure_tau_as
from svt.trace import Trace, write_trace

OUTPUT_DIR = os.environ.get("SVT_OUTPUT_DIR", "output")


class RunResult(BaseModel):
    name: str
    controller: str
    seed: int
    ae: float
    ftv: float
    stable_fraction: float
    tau_as: float
    tau_as_defined: bool
    k: int
    recovery_episodes: int
    d_max_observed: float
    recovery_failures: int
    events: dict[str, int]
    certificate: Certificate | None
    certificate_error: str | None = None
    scenario: ScenarioConfig


# =============================================================================
# Simulation
# =============================================================================

def simulate(cfg: ScenarioConfig) -> Trace:
    n, dt = cfg.n_steps, cfg.dt
    times = np.arange(n) * dt
    tpos, tvel = target_states(cfg.trajectory, times)
    rng = np.random.default_rng([cfg.seed, cfg.noise.stream])
    offset_vec = cfg.offset * cfg.camera.axis
    vel_limits = np.array(cfg.vel_limits)
    svt_cfg, cam = cfg.svt, cfg.camera

    tr = Trace.empty(n)
    tr.t[:] = times
    tr.target_pos[:] = tpos
    tr.target_vel[:] = tvel

    pursuer = KinState.of(cfg.pursuer_init.pos, cfg.pursuer_init.vel)
    state = SvtState()
    axes = None
    mode, event = Mode.TRACKING, ""
    # measurements reach the filter cam.latency late; the estimate is led by the same amount
    delay = DelayLine(cam.latency_steps(dt))

    for k in range(n):
        target = KinState(tpos[k], tvel[k])
        raw = observe(pursuer, target, cam, cfg.noise, rng)
        z = delay.push(None if raw is None else pursuer.pos + raw)
        if axes is not None:
            axes = kf_predict_axes(axes, dt)
        if z is not None:
            axes = kf_init_axes(z, cfg.estimator) if axes is None else kf_update_axes(axes, z)
        est = None
        if axes is not None:
            est = lead_estimate(kf_estimate(axes, cfg.estimator.n_sigma), cam.latency)
        obs = None if z is None else z - pursuer.pos

        tr.mode[k] = mode
        tr.vis[k] = visible(pursuer.pos, target.pos, cam)
        tr.pursuer_pos[k] = pursuer.pos
        tr.pursuer_vel[k] = pursuer.vel
        # before the first measurement the estimate column holds the aim point
        tr.estimate[k] = est.pos if est is not None else pursuer.pos + offset_vec
        tr.V[k] = np.linalg.norm(target.pos - pursuer.pos - offset_vec)
        tr.events[k] = event

        if k == n - 1:
            break
        if est is None:
            accel, mode, event = braking_control(pursuer, svt_cfg), Mode.TRACKING, ""
        elif cfg.controller == "svt":
            state, mode, accel, event = svt_step(state, obs, est, pursuer, svt_cfg, cam, times[k], dt)
        else:
            accel, mode, event = baseline_step(obs, est, pursuer, svt_cfg, dt), Mode.TRACKING, ""
        pursuer = clamp_velocity(step_double_integrator(pursuer, accel, dt), vel_limits)
        if not pursuer.is_finite():
            raise InvariantViolation(f"{cfg.name}: non-finite pursuer state at t={times[k + 1]:.2f}")

    check_trace_invariants(tr, cfg)
    return tr


def check_trace_invariants(tr: Trace, cfg: ScenarioConfig):
    tracking = tr.is_tracking()
    over = np.flatnonzero(tracking & (np.abs(tr.pursuer_vel[:, 0]) > cfg.svt.v_max + 1e-9))
    if over.size:
        i = int(over[0])
        raise InvariantViolation(f"{cfg.name}: |v_x|={abs(tr.pursuer_vel[i, 0]):.6f} > v_max "
                                 f"{cfg.svt.v_max} in Tracking at t={tr.t[i]:.2f}")
    if not np.all(np.isfinite(tr.V)):
        raise InvariantViolation(f"{cfg.name}: non-finite Lyapunov values in trace")


# =============================================================================
# Metrics
# =============================================================================

def metric_ae(trace: Trace, offset: float) -> float:
    dist = np.linalg.norm(trace.target_pos - trace.pursuer_pos, axis=1)
    return float(np.mean(np.abs(dist - offset)))


def metric_ftv(trace: Trace) -> float:
    return float(np.mean(trace.vis))


def metric_stable_fraction(trace: Trace) -> float:
    return float(np.mean(trace.is_tracking()))


def metric_dmax_observed(trace: Trace) -> float:
    """Largest x backoff in one Recovery episode, from the pursuer x at the decision row."""
    worst = 0.0
    for start, end, mode in trace.segments():
        if mode != Mode.RECOVERY:
            continue
        entry_x = trace.pursuer_pos[max(start - 1, 0), 0]
        worst = max(worst, float(entry_x - trace.pursuer_pos[start:end, 0].min()))
    return worst


def recovery_episodes(trace: Trace) -> int:
    return sum(1 for _, _, mode in trace.segments() if mode == Mode.RECOVERY)


def event_counts(trace: Trace) -> dict[str, int]:
    return dict(sorted(Counter(e for e in trace.events if e).items()))


# =============================================================================
# Runs
# =============================================================================

def summarize(trace: Trace, cfg: ScenarioConfig) -> RunResult:
    tau = measure_tau_as(trace)
    events = event_counts(trace)
    cert, cert_error = None, None
    try:
        cert = certify(trace, cfg.stability_delta, lambda_fallback=cfg.svt.nominal_rate())
    except CertificationError as e:
        cert_error = str(e)
        log("WARN", f"{cfg.name} seed={cfg.seed}: no certificate ({e})")

    failures = events.get(EVENT_FAILURE, 0)
    if failures:
        log("WARN", f"{cfg.name} seed={cfg.seed}: {failures} recovery failures (plan clamped at d_max)")

    return RunResult(
        name=cfg.name,
        controller=cfg.controller,
        seed=cfg.seed,
        ae=metric_ae(trace, cfg.offset),
        ftv=metric_ftv(trace),
        stable_fraction=metric_stable_fraction(trace),
        tau_as=tau.tau_as,
        tau_as_defined=tau.defined,
        k=tau.k,
        recovery_episodes=recovery_episodes(trace),
        d_max_observed=metric_dmax_observed(trace),
        recovery_failures=failures,
        events=events,
        certificate=cert,
        certificate_error=cert_error,
        scenario=cfg,
    )


def run_scenario(cfg: ScenarioConfig) -> tuple[Trace, RunResult]:
    t0 = time.monotonic()
    trace = simulate(cfg)
    result = summarize(trace, cfg)
    log("DEBUG", f"{cfg.name} [{cfg.controller}] seed={cfg.seed}: ae={result.ae:.3f} "
                 f"ftv={result.ftv:.3f} k={result.k} ({time.monotonic() - t0:.1f}s)")
    return trace, result


def write_result(path: str, result: RunResult):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(result.model_dump_json(by_alias=True, indent=2))
        f.write("\n")


def output_paths(out_dir: str, cfg: ScenarioConfig) -> tuple[str, str]:
    stem = os.path.join(out_dir, f"{cfg.name}-seed{cfg.seed}")
    return f"{stem}.trace.csv", f"{stem}.result.json"


def run_and_write(cfg: ScenarioConfig, out_dir: str = OUTPUT_DIR) -> RunResult:
    os.makedirs(out_dir, exist_ok=True)
    trace, result = run_scenario(cfg)
    trace_path, result_path = output_paths(out_dir, cfg)
    write_trace(trace_path, trace)
    write_result(result_path, result)
    log("INFO", f"Wrote {trace_path} and {result_path}")
    return result


def metrics_row(result: RunResult) -> dict:
    return {
        "name": result.name,
        "controller": result.controller,
        "seed": result.seed,
        "ae": round(result.ae, 4),
        "ftv": round(result.ftv, 4),
        "stable_fraction": round(result.stable_fraction, 4),
        "tau_as": round(result.tau_as, 3) if result.tau_as_defined else None,
        "k": result.k,
        "d_max_observed": round(result.d_max_observed, 3),
        "recovery_failures": result.recovery_failures,
    }
