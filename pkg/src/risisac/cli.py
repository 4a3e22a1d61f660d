"""Command line entry point: one subcommand per experiment family.

Exit status is 0 on success, 2 when any trial hit an infeasible sensing
constraint (or an oracle check missed its tolerance), 1 on any error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import generate_scenario
from .harness import (
    ConfigError,
    ExperimentSpec,
    default_config_path,
    emit_csv,
    load_config,
    run_experiment,
)
from .jbrd import JbrdConfig, run_jbrd
from .oracle import grid_oracle

log = logging.getLogger("risisac")

# default sweep grid per subcommand when the config file describes another sweep
SUBCOMMANDS = {
    "convergence": ("none", [45.0]),
    "sweep-power": ("bs_power", [45.0, 46.0, 47.0, 48.0, 49.0]),
    "sweep-gamma": ("gamma_echo", [5.0, 10.0, 15.0, 20.0, 25.0]),
    "sweep-pe": ("pe_power", [0.0, 5.0, 10.0, 15.0, 20.0]),
    "sweep-m": ("ris_elements", [0.0, 20.0, 40.0, 60.0, 80.0, 100.0]),
    "sweep-ris-x": ("ris_x_position", [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]),
    "oracle-check": (None, []),
}
ORACLE_GAP = 0.05


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risisac", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None,
                        help="JSON experiment file (default: bundled default scenario)")
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--seed", type=_u64, default=None, help="seed base (overrides the file)")
        sp.add_argument("--trials", type=_positive, default=None, help="trials per point")
        sp.add_argument("--workers", type=_positive, default=1, help="parallel worker processes")
    return p


def _resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_config(args.config or default_config_path())
    sweep, defaults = SUBCOMMANDS[args.command]
    changes: dict = {}
    if sweep is not None and spec.sweep != sweep:
        changes["sweep"], changes["values"] = sweep, list(defaults)
    if args.command == "convergence":
        changes["write_traces"] = True
        if spec.sweep not in ("none", "bs_power"):
            changes["sweep"], changes["values"] = "none", list(defaults)
        else:
            changes.pop("sweep", None)
            changes.pop("values", None)
    if args.seed is not None:
        changes["seed_base"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return replace(spec, **changes) if changes else spec


def _write_convergence(rows, path: Path) -> None:
    """Mean per-iteration curves; runs that stopped early hold their last value."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep_value", "scheme", "N", "iteration", "mean_sr_bps_hz", "mean_unclamped"])
        for r in rows:
            traces = [t.trace for t in r.trial_results if t.trace is not None and t.trace["sr"]]
            if not traces:
                continue
            n = max(len(t["sr"]) for t in traces)
            sr = np.array([t["sr"] + [t["sr"][-1]] * (n - len(t["sr"])) for t in traces])
            un = np.array([t["unclamped"] + [t["unclamped"][-1]] * (n - len(t["unclamped"])) for t in traces])
            for i in range(n):
                w.writerow([format(r.sweep_value, ".6g"), r.scheme, r.N, i + 1,
                            format(sr[:, i].mean(), ".6g"), format(un[:, i].mean(), ".6g")])


def _run_sweep(args: argparse.Namespace) -> int:
    spec = _resolve_spec(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rows = run_experiment(spec, out_dir=out, workers=args.workers)
    name = args.command.replace("-", "_") + ".csv"
    emit_csv(rows, out / name)
    if args.command == "convergence":
        _write_convergence(rows, out / "convergence_curves.csv")
    bad = sum(r.infeasible_trials for r in rows)
    for r in rows:
        log.info("%s=%g %s N=%d: SR %.4f +/- %.4f", r.sweep_name, r.sweep_value, r.scheme, r.N,
                 r.mean_sr, r.std_sr)
    print(f"wrote {out / name} ({len(rows)} rows, {bad} infeasible trials)")
    return 2 if bad else 0


def _run_oracle_check(args: argparse.Namespace) -> int:
    spec = load_config(args.config or default_config_path())
    seed = spec.seed_base if args.seed is None else args.seed
    trials = 10 if args.trials is None else args.trials
    system = spec.system.replace(K=1, N=2, M=2)
    jcfg: JbrdConfig = spec.jbrd
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    misses = infeasible = 0
    path = out / "oracle_check.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "jbrd_sr", "oracle_sr", "relative_gap", "within_tolerance"])
        for t in range(trials):
            s = seed + t
            ch = generate_scenario(system.replace(seed=s))
            _, trace = run_jbrd(ch, replace(jcfg, seed=s, delta=system.delta))
            ref = grid_oracle(ch)
            gap = max(0.0, ref.sr - trace.final_sr) / max(ref.sr, 1e-12)
            ok = gap <= ORACLE_GAP and not trace.infeasible
            misses += not ok
            infeasible += trace.infeasible
            w.writerow([s, format(trace.final_sr, ".6g"), format(ref.sr, ".6g"),
                        format(gap, ".6g"), int(ok)])
    print(f"wrote {path}: {trials - misses}/{trials} within {ORACLE_GAP:.0%} of the grid oracle")
    return 2 if misses or infeasible else 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "oracle-check":
            return _run_oracle_check(args)
        return _run_sweep(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
