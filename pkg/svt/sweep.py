"""Parameter sweeps: each value runs with 4 seeds and the metrics are averaged.

Runs execute on a thread pool (SVT_SIM_THREADS caps it) and are merged in
(value, seed) order, so output files do not depend on the worker count.

"""

import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed

from pydantic import BaseModel, TypeAdapter

from svt.common import SvtError, log
from svt.harness import OUTPUT_DIR, RunResult, run_scenario
from svt.scenario import SEED_MOD, ScenarioConfig, with_parameter, with_seed

DEFAULT_SEEDS = 4
SWEEP_COLUMNS = ["parameter", "value", "seeds", "ae", "ftv", "stable_fraction", "tau_as", "k",
                 "d_max_observed", "recovery_failures"]


class SweepRow(BaseModel):
    parameter: str
    value: float
    seeds: list[int]
    ae: float
    ftv: float
    stable_fraction: float
    tau_as: float
    k: float
    d_max_observed: float
    recovery_failures: float


def default_workers() -> int:
    env = os.environ.get("SVT_SIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log("WARN", f"ignoring SVT_SIM_THREADS={env!r}")
    return os.cpu_count() or 1


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def aggregate(parameter: str, value: float, results: list[RunResult]) -> SweepRow:
    """Average a cell; an undefined tau_as in any seed makes the cell's tau_as +inf."""
    taus = [r.tau_as for r in results]
    return SweepRow(
        parameter=parameter,
        value=value,
        seeds=[r.seed for r in results],
        ae=_mean([r.ae for r in results]),
        ftv=_mean([r.ftv for r in results]),
        stable_fraction=_mean([r.stable_fraction for r in results]),
        tau_as=math.inf if any(math.isinf(t) for t in taus) else _mean(taus),
        k=_mean([r.k for r in results]),
        d_max_observed=_mean([r.d_max_observed for r in results]),
        recovery_failures=_mean([r.recovery_failures for r in results]),
    )


def sweep(base: ScenarioConfig, parameter: str, values: list[float], seeds: int = DEFAULT_SEEDS,
          max_workers: int | None = None, verbose: bool = True) -> list[SweepRow]:
    jobs = {}
    for i, value in enumerate(values):
        cfg = with_parameter(base, parameter, value)
        count = 1 if parameter == "seed" else seeds
        for j in range(count):
            jobs[(i, j)] = with_seed(cfg, (cfg.seed + j) % SEED_MOD)

    workers = max_workers or default_workers()
    if verbose:
        log("INFO", f"Sweeping {parameter} over {len(values)} values, {len(jobs)} runs, workers: {workers}")

    results: dict[tuple[int, int], RunResult] = {}
    completed = 0
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_key = {executor.submit(run_scenario, cfg): key for key, cfg in jobs.items()}
        for future in as_completed(future_to_key):
            key = future_to_key[future]
            _, results[key] = future.result()
            completed += 1
            if verbose:
                r = results[key]
                log("INFO", f"  [{completed}/{len(jobs)}] {parameter}={values[key[0]]:g} seed={r.seed}: "
                            f"ae={r.ae:.3f} ftv={r.ftv:.3f} k={r.k}")

    rows = []
    for i, value in enumerate(values):
        cell = [results[key] for key in sorted(k for k in results if k[0] == i)]
        rows.append(aggregate(parameter, value, cell))
    return rows


def write_sweep(out_dir: str, name: str, parameter: str, rows: list[SweepRow]) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, f"{name}-sweep-{parameter}")
    with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r.parameter, repr(r.value), " ".join(str(s) for s in r.seeds), repr(r.ae), repr(r.ftv),
                        repr(r.stable_fraction), repr(r.tau_as), repr(r.k), repr(r.d_max_observed),
                        repr(r.recovery_failures)])
    with open(f"{stem}.json", "wb") as f:
        f.write(TypeAdapter(list[SweepRow]).dump_json(rows, indent=2))
        f.write(b"\n")
    return f"{stem}.csv", f"{stem}.json"


def print_summary(parameter: str, rows: list[SweepRow]):
    print(f"\n{'=' * 60}", file=sys.stderr)
    print(f"Sweep over {parameter}", file=sys.stderr)
    print(f"{'value':>8} {'AE':>8} {'FTV':>8} {'tau_as':>9} {'k':>6} {'d_max':>7}", file=sys.stderr)
    for r in rows:
        tau = f"{r.tau_as:9.2f}" if math.isfinite(r.tau_as) else f"{'inf':>9}"
        print(f"{r.value:>8g} {r.ae:8.3f} {r.ftv:8.3f} {tau} {r.k:6.2f} {r.d_max_observed:7.3f}",
              file=sys.stderr)
    print(f"{'=' * 60}", file=sys.stderr)


def parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise SvtError(f"--values must be comma-separated numbers: {e}") from e
    if not values:
        raise SvtError("--values is empty")
    return values
