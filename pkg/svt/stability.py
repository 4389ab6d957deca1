"""Stability certificates for switched traces (average stable dwell time).

A trace alternates between the stable Tracking mode and the unstable
Recovery mode. With V the tracking-error norm, the certificate checks:

    V decays at rate 2*lambda while Tracking,
    V at each stable re-entry <= mu * V at the preceding stable exit + c,
    tau_as > ln(mu + delta) / (2 * lambda),

and then the error converges to the ball of radius c * (mu + delta)**N0 / delta.

"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from svt.common import EPS_V, CertificationError, Mode, log
from svt.trace import Trace

C_FLOOR = 1e-9
LAMBDA_FLOOR = 1e-6
PARETO_MUS = (1.01, 1.1, 1.5, 2.0)


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class SwitchRecord:
    index: int
    t: float
    from_mode: Mode
    to_mode: Mode
    V_before: float
    V_after: float


class TauAs(NamedTuple):
    tau_as: float             # +inf when undefined
    k: int                    # Recovery -> Tracking switches
    stable_time: float
    defined: bool


class Certificate(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    lambda_source: str = "fitted"
    mu: float
    c: float
    tau_as: float
    tau_as_defined: bool
    k: int
    stable_time: float
    n0: int = 1
    n0_required: int = 1
    delta: float
    threshold: float
    radius: float
    dwell_ok: bool
    bound_ok: bool
    max_bound_slack: float
    tail_ok: bool
    tail_max_v: float
    pareto: list[tuple[float, float]] = []


# =============================================================================
# Lyapunov function and switching
# =============================================================================

def lyapunov(err) -> float:
    return float(np.linalg.norm(np.asarray(err, dtype=float)))


def extract_switches(trace: Trace) -> list[SwitchRecord]:
    if len(trace) == 0:
        raise CertificationError("empty trace")
    idx = np.flatnonzero(np.diff(trace.mode)) + 1
    return [
        SwitchRecord(int(i), float(trace.t[i]), Mode(int(trace.mode[i - 1])), Mode(int(trace.mode[i])),
                     float(trace.V[i - 1]), float(trace.V[i]))
        for i in idx
    ]


def _stable_time(trace: Trace) -> np.ndarray:
    """S[k] = time spent Tracking strictly before sample k; length n+1."""
    return np.concatenate([[0.0], np.cumsum(trace.is_tracking()) * trace.dt])


def tau_as_from_counts(stable_time: float, k: int, n0: int = 1) -> float:
    if k - n0 < 1:
        return math.inf
    return stable_time / (k - n0)


def measure_tau_as(trace: Trace, n0: int = 1) -> TauAs:
    stable_time = float(np.count_nonzero(trace.is_tracking()) * trace.dt)
    k = sum(1 for r in extract_switches(trace) if r.to_mode == Mode.TRACKING)
    if k < 2:
        return TauAs(math.inf, k, stable_time, False)
    return TauAs(tau_as_from_counts(stable_time, k, n0), k, stable_time, True)


# =============================================================================
# Parameter estimation
# =============================================================================

def estimate_lambda(trace: Trace, min_duration: float = 0.5) -> float:
    """Slowest fitted decay rate over Tracking segments.

    Each segment is fitted from its start to its minimum of V with a least
    squares line through ln V (only V > EPS_V).
    """
    rates = []
    for start, end, mode in trace.segments():
        if mode != Mode.TRACKING:
            continue
        stop = start + int(np.argmin(trace.V[start:end]))
        if trace.t[stop] - trace.t[start] < min_duration - 1e-9:
            continue
        t = trace.t[start:stop + 1]
        v = trace.V[start:stop + 1]
        keep = v > EPS_V
        if np.count_nonzero(keep) < 2:
            continue
        slope = np.polyfit(t[keep], np.log(v[keep]), 1)[0]
        if slope < 0:
            rates.append(-slope / 2.0)
    if not rates:
        raise CertificationError("no Tracking segment with decreasing V of at least "
                                 f"{min_duration} s to fit lambda")
    return max(min(rates), LAMBDA_FLOOR)


def _episodes(records: Sequence[SwitchRecord]) -> list[tuple[float, float]]:
    """(V at stable exit, V at the following stable re-entry) pairs."""
    pairs = []
    exit_v = None
    for r in records:
        if r.from_mode == Mode.TRACKING and r.to_mode == Mode.RECOVERY:
            exit_v = r.V_after
        elif r.to_mode == Mode.TRACKING and exit_v is not None:
            pairs.append((exit_v, r.V_after))
            exit_v = None
    return pairs


def estimate_mu_c(records: Sequence[SwitchRecord], mu_fixed: float | None = 1.1) -> tuple[float, float]:
    mu = 1.1 if mu_fixed is None else mu_fixed
    if mu <= 1.0:
        raise CertificationError(f"mu must be > 1, got {mu}")
    pairs = _episodes(records)
    if not pairs:
        raise CertificationError("no complete Recovery episode to fit (mu, c)")
    gain = max(max(0.0, v_re - mu * v_ex) for v_ex, v_re in pairs)
    return mu, gain + C_FLOOR


def pareto_mu_c(records: Sequence[SwitchRecord], mus=PARETO_MUS) -> list[tuple[float, float]]:
    if not _episodes(records):
        return [(mu, C_FLOOR) for mu in mus]
    return [estimate_mu_c(records, mu) for mu in mus]


# =============================================================================
# Dwell threshold and convergence radius
# =============================================================================

def dwell_threshold(mu: float, delta: float, lam: float) -> float:
    if not (mu > 1 and delta > 0 and lam > 0):
        raise CertificationError(f"dwell threshold needs mu > 1, delta > 0, lambda > 0 "
                                 f"(mu={mu}, delta={delta}, lambda={lam})")
    return math.log(mu + delta) / (2.0 * lam)


def convergence_radius(c: float, mu: float, delta: float, n0: int = 1) -> float:
    if not (c >= 0 and mu > 1 and delta > 0 and n0 >= 1):
        raise CertificationError(f"convergence radius needs c >= 0, mu > 1, delta > 0, N0 >= 1 "
                                 f"(c={c}, mu={mu}, delta={delta}, N0={n0})")
    return c * (mu + delta) ** n0 / delta


def transient_term(v0: float, mu: float, lam: float, n_half: int, stable_time: float) -> float:
    return mu ** n_half * v0 * math.exp(-2.0 * lam * stable_time)


def steady_state_sum(c: float, mu: float, lam: float, spans: Sequence[float]) -> float:
    """sum_k c * mu**k * exp(-2 lam spans[k]); spans[k] is the stable time since the k-th latest re-entry."""
    return sum(c * mu ** k * math.exp(-2.0 * lam * s) for k, s in enumerate(spans))


def steady_state_closed_form(c: float, mu: float, delta: float, n0: int, n_half: int) -> float:
    q = mu / (mu + delta)
    return c * (1.0 - q ** n_half) * (mu + delta) ** n0 / delta


# =============================================================================
# Bound verification
# =============================================================================

def trace_bound(trace: Trace, lam: float, mu: float, c: float) -> np.ndarray:
    """Right side of the unrolled inequality at every sample.

    Inside a Tracking segment the bound decays with the stable time elapsed
    since the segment began; at a re-entry it becomes mu * (bound at the
    preceding exit) + c, which is also its value throughout Recovery.
    """
    if len(trace) == 0 or trace.mode[0] != Mode.TRACKING:
        raise CertificationError("bound verification needs a trace that starts in Tracking mode")
    stable = _stable_time(trace)
    bound = np.empty(len(trace))
    b_entry = float(trace.V[0])
    b_exit = b_entry
    for start, end, mode in trace.segments():
        if mode == Mode.TRACKING:
            if start > 0:
                b_entry = mu * b_exit + c
            bound[start:end] = b_entry * np.exp(-2.0 * lam * (stable[start:end] - stable[start]))
            b_exit = b_entry * math.exp(-2.0 * lam * (stable[end] - stable[start]))
        else:
            bound[start:end] = mu * b_exit + c
    return bound


def unrolled_bound(trace: Trace, index: int, lam: float, mu: float, c: float) -> float:
    """The same bound at one sample, written as the explicit two-term sum."""
    stable = _stable_time(trace)
    modes = trace.mode
    if modes[index] == Mode.RECOVERY:
        exit_idx = index
        while modes[exit_idx] == Mode.RECOVERY:
            exit_idx -= 1
        # stable time at the exit sample equals stable time at exit_idx + 1
        return mu * _tracking_sum(trace, stable, exit_idx + 1, lam, mu, c) + c
    return _tracking_sum(trace, stable, index, lam, mu, c)


def _tracking_sum(trace, stable, index, lam, mu, c) -> float:
    reentries = [r.index for r in extract_switches(trace)
                 if r.to_mode == Mode.TRACKING and r.index <= index]
    spans = [stable[index] - stable[r] for r in reversed(reentries)]
    return (transient_term(float(trace.V[0]), mu, lam, len(reentries), stable[index])
            + steady_state_sum(c, mu, lam, spans))


def verify_trace_bound(trace: Trace, lam: float, mu: float, c: float,
                       rel_tol: float = 1e-9) -> tuple[bool, float]:
    bound = trace_bound(trace, lam, mu, c)
    slack = trace.V - bound
    ok = bool(np.all(trace.V <= bound + rel_tol * np.maximum(np.abs(bound), 1e-12)))
    return ok, float(np.max(slack))


def asdt_required_n0(trace: Trace, tau_as: float, max_points: int = 1000) -> int:
    """Smallest N0 with N(t, t') <= N0 + T_s(t, t') / tau_as on every coarse interval."""
    n = len(trace)
    reentry = np.zeros(n, dtype=int)
    for r in extract_switches(trace):
        if r.to_mode == Mode.TRACKING:
            reentry[r.index] = 1
    if not math.isfinite(tau_as):
        return max(1, int(reentry.sum()))

    stride = max(1, math.ceil(n / max_points))
    grid = np.unique(np.append(np.arange(0, n, stride), n - 1))
    before = np.concatenate([[0], np.cumsum(reentry)])     # re-entries at indices < k
    stable = _stable_time(trace)

    count = before[grid + 1][None, :] - before[grid][:, None]
    span = stable[grid][None, :] - stable[grid][:, None]
    upper = np.triu(np.ones((grid.size, grid.size), dtype=bool))
    excess = np.where(upper, count - span / tau_as, -np.inf)
    return max(1, math.ceil(float(excess.max()) - 1e-9))


# =============================================================================
# Certificate
# =============================================================================

def certify(trace: Trace, delta: float = 0.1, mu: float = 1.1,
            lambda_fallback: float | None = None, n0: int = 1) -> Certificate:
    source = "fitted"
    try:
        lam = estimate_lambda(trace)
    except CertificationError:
        if lambda_fallback is None:
            raise
        lam, source = lambda_fallback, "nominal"
        log("WARN", f"no decaying Tracking segment; using nominal lambda={lam:.3f}")

    records = extract_switches(trace)
    if _episodes(records):
        mu, c = estimate_mu_c(records, mu)
    else:
        c = C_FLOOR

    tau = measure_tau_as(trace, n0)
    threshold = dwell_threshold(mu, delta, lam)
    radius = convergence_radius(c, mu, delta, n0)
    bound_ok, slack = verify_trace_bound(trace, lam, mu, c)

    tracking = np.flatnonzero(trace.is_tracking())
    tail = trace.V[tracking[int(0.9 * tracking.size):]] if tracking.size else np.array([])
    tail_max = float(tail.max()) if tail.size else math.inf

    # numpy scalars coerced to builtins before validation
    return Certificate(
        lambda_=float(lam), lambda_source=source, mu=float(mu), c=float(c),
        tau_as=float(tau.tau_as), tau_as_defined=bool(tau.defined), k=int(tau.k),
        stable_time=float(tau.stable_time),
        n0=int(n0), n0_required=int(asdt_required_n0(trace, tau.tau_as)),
        delta=float(delta), threshold=float(threshold), radius=float(radius),
        dwell_ok=bool(tau.tau_as > threshold), bound_ok=bool(bound_ok), max_bound_slack=float(slack),
        tail_ok=bool(tail_max <= radius + 0.1), tail_max_v=float(tail_max),
        pareto=[(float(m), float(cc)) for m, cc in pareto_mu_c(records)],
    )
