#!/usr/bin/env python3
"""Command-line entry point for the SVT simulator.

Usage:
    # Run one scenario, writing the trace CSV and result JSON
    python -m svt.cli run scenarios/ellip-1.0.json --seed 3 --out output

    # Same scenario with the always-track baseline
    python -m svt.cli run scenarios/ellip-1.0.json --controller baseline

    # Sweep a parameter (4 seeds per value, averaged)
    python -m svt.cli sweep scenarios/ellip-1.0.json --param v_max --values 0.5,1.0,1.5

    # Certify a recorded trace
    python -m svt.cli certify output/ellip-1.0-seed0.trace.csv --delta 0.1

    # SVT and baseline back-to-back
    python -m svt.cli compare scenarios/slem-1.5.json
"""

import argparse
import json
import os
import sys

from svt.common import ConfigError, SvtError, log
from svt.harness import OUTPUT_DIR, metrics_row, run_and_write, run_scenario
from svt.scenario import load_scenario, with_controller, with_seed
from svt.stability import certify
from svt.sweep import DEFAULT_SEEDS, print_summary, parse_values, sweep, write_sweep
from svt.trace import read_trace


def _scenario(args):
    cfg = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        cfg = with_seed(cfg, args.seed)
    return cfg


# =============================================================================
# Commands
# =============================================================================

def cmd_run(args):
    cfg = _scenario(args)
    if args.controller:
        cfg = with_controller(cfg, args.controller)
    result = run_and_write(cfg, args.out)
    print(json.dumps(metrics_row(result)))


def cmd_sweep(args):
    if args.threads is not None and args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    if args.seeds < 1:
        raise ConfigError(f"--seeds must be >= 1, got {args.seeds}")
    cfg = _scenario(args)
    values = parse_values(args.values)
    rows = sweep(cfg, args.param, values, seeds=args.seeds, max_workers=args.threads)
    csv_path, json_path = write_sweep(args.out, cfg.name, args.param, rows)
    log("INFO", f"Wrote {csv_path} and {json_path}")
    print_summary(args.param, rows)


def cmd_certify(args):
    if not os.path.exists(args.trace):
        raise ConfigError(f"{args.trace}: no such file")
    trace = read_trace(args.trace)
    cert = certify(trace, delta=args.delta, mu=args.mu, lambda_fallback=args.lambda_fallback)
    print(cert.model_dump_json(by_alias=True, indent=2))
    if not (cert.dwell_ok and cert.bound_ok):
        log("WARN", f"dwell condition {'holds' if cert.dwell_ok else 'fails'}: "
                    f"tau_as={cert.tau_as:.3f} vs threshold {cert.threshold:.3f}; "
                    f"bound {'holds' if cert.bound_ok else 'fails'}")


def cmd_compare(args):
    cfg = _scenario(args)
    results = []
    for controller in ("svt", "baseline"):
        _, result = run_scenario(with_controller(cfg, controller))
        results.append(result)
        print(json.dumps(metrics_row(result)))

    print(f"\n{'=' * 60}", file=sys.stderr)
    print(f"Compare: {cfg.name} seed={cfg.seed}", file=sys.stderr)
    print(f"{'controller':>10} {'AE':>8} {'FTV':>8} {'stable':>8} {'k':>5}", file=sys.stderr)
    for r in results:
        print(f"{r.controller:>10} {r.ae:8.3f} {r.ftv:8.3f} {r.stable_fraction:8.3f} {r.k:5d}",
              file=sys.stderr)
    svt, base = results
    print(f"FTV gain: {100 * (svt.ftv - base.ftv):+.1f} pp, AE change: {svt.ae - base.ae:+.3f} m",
          file=sys.stderr)
    print(f"{'=' * 60}", file=sys.stderr)


# =============================================================================
# CLI
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Switched visual tracker: simulate, sweep, and certify stability",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # run
    sub = subparsers.add_parser("run", help="Simulate one scenario and write trace + result")
    sub.add_argument("scenario", help="Scenario JSON file")
    sub.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    sub.add_argument("--out", default=OUTPUT_DIR, help=f"Output directory (default: {OUTPUT_DIR})")
    sub.add_argument("--controller", choices=["svt", "baseline"], default=None,
                     help="Override the scenario controller")

    # sweep
    sub = subparsers.add_parser("sweep", help="Sweep one parameter across values and seeds")
    sub.add_argument("scenario", help="Scenario JSON file")
    sub.add_argument("--param", required=True, choices=["v_max", "t_R", "d_max", "offset", "seed"])
    sub.add_argument("--values", required=True, help="Comma-separated values, e.g. 0.5,1.0,1.5")
    sub.add_argument("--seeds", type=int, default=DEFAULT_SEEDS,
                     help=f"Seeds per value (default: {DEFAULT_SEEDS})")
    sub.add_argument("--seed", type=int, default=None, help="Base seed (default: scenario seed)")
    sub.add_argument("--threads", type=int, default=None, help="Worker cap (default: SVT_SIM_THREADS or cores)")
    sub.add_argument("--out", default=OUTPUT_DIR, help=f"Output directory (default: {OUTPUT_DIR})")

    # certify
    sub = subparsers.add_parser("certify", help="Compute the stability certificate of a trace CSV")
    sub.add_argument("trace", help="Trace CSV written by `run`")
    sub.add_argument("--delta", type=float, default=0.1, help="Dwell-time margin delta (default: 0.1)")
    sub.add_argument("--mu", type=float, default=1.1, help="Jump factor mu (default: 1.1)")
    sub.add_argument("--lambda-fallback", type=float, default=None,
                     help="Decay rate to use when no Tracking segment can be fitted")

    # compare
    sub = subparsers.add_parser("compare", help="Run SVT and the baseline on the same scenario")
    sub.add_argument("scenario", help="Scenario JSON file")
    sub.add_argument("--seed", type=int, default=None, help="Override the scenario seed")

    return parser


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except SvtError as e:
        log("ERROR", str(e))
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
