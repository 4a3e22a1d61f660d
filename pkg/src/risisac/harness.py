"""Experiment configuration, Monte-Carlo sweeps and CSV output."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .channel import generate_scenario
from .config import PathLossExponents, SystemConfig, db_to_linear, dbm_to_watts
from .jbrd import SCHEMES, JbrdConfig, run_benchmark
from .solvers import SolverParams

SWEEPS = ("bs_power", "gamma_echo", "pe_power", "ris_elements", "ris_x_position", "none")
CSV_HEADER = ("sweep_name", "sweep_value", "scheme", "N", "M", "trial_count", "mean_sr_bps_hz",
              "std_sr", "mean_outer_iters", "mean_wall_ms", "infeasible_trials", "seed_base")


class ConfigError(ValueError):
    """Bad experiment file; ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: str | None = None, offset: int | None = None):
        super().__init__(message)
        self.key = key
        self.offset = offset


@dataclass
class ExperimentSpec:
    system: SystemConfig
    jbrd: JbrdConfig
    sweep: str
    values: list[float]
    schemes: list[str]
    antennas: list[int]
    trials: int
    seed_base: int
    output: str = "results.csv"
    write_traces: bool = False
    record_timing: bool = False

    def __post_init__(self) -> None:
        if self.sweep not in SWEEPS:
            raise ConfigError(f"unknown sweep {self.sweep!r}", key="sweep")
        if not self.values:
            raise ConfigError("sweep values must be non-empty", key="values")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1", key="trials")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}", key="schemes")
        if not self.antennas or any(n < 1 for n in self.antennas):
            raise ConfigError("antennas must list positive counts", key="antennas")


@dataclass
class ResultRow:
    sweep_name: str
    sweep_value: float
    scheme: str
    N: int
    M: int
    trial_count: int
    mean_sr: float
    std_sr: float
    mean_outer_iterations: float
    mean_wall_ms: float | None
    infeasible_trials: int
    seed_base: int
    trial_sr: list[float] = field(default_factory=list, repr=False)
    trial_results: list[Any] = field(default_factory=list, repr=False, compare=False)


# ------------------------------------------------------------------ loading

# fields that may be given in log units; suffix -> converter
_UNIT_FIELDS = {
    "P": ("_dbm",), "P_e": ("_dbm",), "gamma_echo": ("_dbm", "_db"),
    "sigma_k2": ("_dbm",), "sigma_ae2": ("_dbm",), "sigma_pe2": ("_dbm",), "sigma_s2": ("_dbm",),
    "kappa": ("_db",), "C0": ("_db",),
}
_CONVERT = {"_dbm": dbm_to_watts, "_db": db_to_linear}
_INT_FIELDS = {"K", "N", "M", "seed", "placement_seed"}
_POS_FIELDS = {"bs_pos", "ris_pos", "target_pos", "pe_pos", "user_center"}
_REQUIRED_SYSTEM = ("K", "N", "M", "P", "P_e", "gamma_echo")
_REQUIRED_EXPERIMENT = ("sweep", "values", "schemes", "antennas", "trials", "seed_base")


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _parse_system(raw: dict[str, Any]) -> SystemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("'system' must be an object", key="system")
    known = {f.name for f in fields(SystemConfig)}
    kwargs: dict[str, Any] = {}
    for key, val in raw.items():
        base, conv = key, None
        for name, suffixes in _UNIT_FIELDS.items():
            for suf in suffixes:
                if key == name + suf:
                    base, conv = name, _CONVERT[suf]
        if base not in known:
            raise ConfigError(f"unknown system key {key!r}", key=f"system.{key}")
        if base in kwargs:
            raise ConfigError(f"{base!r} given more than once", key=f"system.{key}")
        if base in _POS_FIELDS:
            if val is None and base == "user_center":
                kwargs[base] = None
                continue
            if not (isinstance(val, list) and len(val) == 2 and all(_is_number(x) for x in val)):
                raise ConfigError(f"{key} must be a list of two numbers", key=f"system.{key}")
            kwargs[base] = (float(val[0]), float(val[1]))
        elif base == "exponents":
            if not isinstance(val, dict):
                raise ConfigError("exponents must be an object", key="system.exponents")
            ex_known = {f.name for f in fields(PathLossExponents)}
            for ek, ev in val.items():
                if ek not in ex_known:
                    raise ConfigError(f"unknown exponent {ek!r}", key=f"system.exponents.{ek}")
                if not _is_number(ev):
                    raise ConfigError(f"exponent {ek} must be a number", key=f"system.exponents.{ek}")
            kwargs[base] = PathLossExponents(**{k: float(v) for k, v in val.items()})
        elif base == "resample_users":
            if not isinstance(val, bool):
                raise ConfigError("resample_users must be true or false", key=f"system.{key}")
            kwargs[base] = val
        elif base == "rho" and val is None:
            kwargs[base] = None
        elif base in _INT_FIELDS:
            if not (isinstance(val, int) and not isinstance(val, bool)):
                raise ConfigError(f"{key} must be an integer", key=f"system.{key}")
            kwargs[base] = val
        else:
            if not _is_number(val):
                raise ConfigError(f"{key} must be a number", key=f"system.{key}")
            kwargs[base] = conv(float(val)) if conv else float(val)
    for req in _REQUIRED_SYSTEM:
        if req not in kwargs:
            raise ConfigError(f"missing system key {req!r}", key=f"system.{req}")
    for name in ("P", "P_e", "sigma_k2", "sigma_ae2", "sigma_pe2", "sigma_s2"):
        if name in kwargs and not kwargs[name] > 0:
            raise ConfigError(f"{name} must be positive", key=f"system.{name}")
    try:
        return SystemConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), key="system") from exc


def _parse_jbrd(raw: dict[str, Any] | None) -> JbrdConfig:
    if raw is None:
        return JbrdConfig()
    if not isinstance(raw, dict):
        raise ConfigError("'jbrd' must be an object", key="jbrd")
    raw = dict(raw)
    solver_raw = raw.pop("solver", {})
    known = {f.name for f in fields(JbrdConfig)} - {"solver"}
    for k in raw:
        if k not in known:
            raise ConfigError(f"unknown jbrd key {k!r}", key=f"jbrd.{k}")
    s_known = {f.name for f in fields(SolverParams)}
    for k in solver_raw:
        if k not in s_known:
            raise ConfigError(f"unknown solver key {k!r}", key=f"jbrd.solver.{k}")
    try:
        return JbrdConfig(solver=SolverParams(**solver_raw), **raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key="jbrd") from exc


def parse_spec(doc: dict[str, Any]) -> ExperimentSpec:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    for top in ("system", "experiment"):
        if top not in doc:
            raise ConfigError(f"missing key {top!r}", key=top)
    extra = set(doc) - {"system", "jbrd", "experiment"}
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown key {key!r}", key=key)
    system = _parse_system(doc["system"])
    jbrd = _parse_jbrd(doc.get("jbrd"))
    exp = doc["experiment"]
    if not isinstance(exp, dict):
        raise ConfigError("'experiment' must be an object", key="experiment")
    for req in _REQUIRED_EXPERIMENT:
        if req not in exp:
            raise ConfigError(f"missing experiment key {req!r}", key=f"experiment.{req}")
    known = {"sweep", "values", "schemes", "antennas", "trials", "seed_base", "output",
             "write_traces", "record_timing"}
    for k in exp:
        if k not in known:
            raise ConfigError(f"unknown experiment key {k!r}", key=f"experiment.{k}")
    if not isinstance(exp["values"], list) or not all(_is_number(v) for v in exp["values"]):
        raise ConfigError("values must be a list of numbers", key="experiment.values")
    if not isinstance(exp["schemes"], list) or not all(isinstance(s, str) for s in exp["schemes"]):
        raise ConfigError("schemes must be a list of names", key="experiment.schemes")
    if not isinstance(exp["antennas"], list) or not all(isinstance(n, int) for n in exp["antennas"]):
        raise ConfigError("antennas must be a list of integers", key="experiment.antennas")
    for k in ("trials", "seed_base"):
        if not isinstance(exp[k], int) or isinstance(exp[k], bool):
            raise ConfigError(f"{k} must be an integer", key=f"experiment.{k}")
    return ExperimentSpec(
        system=system, jbrd=jbrd, sweep=exp["sweep"], values=list(exp["values"]),
        schemes=list(exp["schemes"]), antennas=list(exp["antennas"]), trials=exp["trials"],
        seed_base=exp["seed_base"], output=exp.get("output", "results.csv"),
        write_traces=bool(exp.get("write_traces", False)),
        record_timing=bool(exp.get("record_timing", False)),
    )


def loads_config(text: str) -> ExperimentSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ConfigError(f"malformed JSON at byte {offset}: {exc.msg}", offset=offset) from exc
    return parse_spec(doc)


def load_config(path: str | Path) -> ExperimentSpec:
    return loads_config(Path(path).read_text(encoding="utf-8"))


def spec_to_dict(spec: ExperimentSpec) -> dict[str, Any]:
    """Canonical JSON form (linear units, plain keys)."""
    return {
        "system": spec.system.to_dict(),
        "jbrd": asdict(spec.jbrd),
        "experiment": {
            "sweep": spec.sweep, "values": list(spec.values), "schemes": list(spec.schemes),
            "antennas": list(spec.antennas), "trials": spec.trials, "seed_base": spec.seed_base,
            "output": spec.output, "write_traces": spec.write_traces,
            "record_timing": spec.record_timing,
        },
    }


def dump_config(spec: ExperimentSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n", encoding="utf-8")


def default_config_path() -> Path:
    return Path(__file__).parent / "data" / "default_scenario.json"


# --------------------------------------------------------------- experiments

def apply_sweep(base: SystemConfig, sweep: str, value: float) -> SystemConfig:
    """Scenario for one sweep point.  Power-like values are in dBm."""
    if sweep == "bs_power":
        return base.replace(P=dbm_to_watts(value))
    if sweep == "gamma_echo":
        return base.replace(gamma_echo=dbm_to_watts(value))
    if sweep == "pe_power":
        return base.replace(P_e=dbm_to_watts(value))
    if sweep == "ris_elements":
        if value != int(value) or value < 0:
            raise ConfigError(f"RIS element count must be a non-negative integer, got {value}", key="values")
        return base.replace(M=int(value))
    if sweep == "ris_x_position":
        # users stay around the nominal RIS site while the surface moves
        return base.replace(ris_pos=(float(value), base.ris_pos[1]), user_center=base.user_circle_center)
    if sweep == "none":
        return base
    raise ConfigError(f"unknown sweep {sweep!r}", key="sweep")


@dataclass
class TrialResult:
    sr: float
    outer_iterations: int
    wall_ms: float
    infeasible: bool
    trace: dict[str, Any] | None = None


def run_trial(system: SystemConfig, jbrd: JbrdConfig, scheme: str, seed: int,
              keep_trace: bool = False) -> TrialResult:
    cfg = system.replace(seed=seed)
    ch = generate_scenario(cfg)
    t0 = time.perf_counter()
    rho = system.rho if system.rho is not None else jbrd.rho
    _, trace = run_benchmark(ch, replace(jbrd, seed=seed, delta=system.delta, rho=rho), scheme)
    wall = (time.perf_counter() - t0) * 1e3
    tr = None
    if keep_trace:
        tr = {k: getattr(trace, k) for k in ("sr", "unclamped", "surrogate", "scnr_residual", "power",
                                              "modulus_deviation", "inner_w", "inner_phi", "reason",
                                              "rho", "init_sr", "sr_relaxed", "final_sr")}
    return TrialResult(trace.final_sr, trace.outer_iterations, wall, trace.infeasible, tr)


def _run_trial_args(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None,
                   workers: int = 1) -> list[ResultRow]:
    """Run every (value, scheme, N) cell over ``spec.trials`` seeds.

    Trial ``t`` of every cell uses seed ``seed_base + t`` so cells are paired
    on the same channel draws.  Aggregation is ordered by trial index.
    """
    rows: list[ResultRow] = []
    tasks = []
    cells = []
    for value in spec.values:
        for N in spec.antennas:
            system = apply_sweep(spec.system.replace(N=N), spec.sweep, value)
            for scheme in spec.schemes:
                seeds = [spec.seed_base + t for t in range(spec.trials)]
                cells.append((value, N, system, scheme, len(tasks)))
                tasks.extend((system, spec.jbrd, scheme, s, spec.write_traces) for s in seeds)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_args, tasks))
    else:
        results = [_run_trial_args(t) for t in tasks]

    for value, N, system, scheme, start in cells:
        res = results[start:start + spec.trials]
        srs = np.array([r.sr for r in res])
        rows.append(ResultRow(
            sweep_name=spec.sweep, sweep_value=float(value), scheme=scheme, N=N,
            M=0 if scheme == "no_ris" else system.M, trial_count=spec.trials,
            mean_sr=float(srs.mean()), std_sr=float(srs.std(ddof=1)) if srs.size > 1 else 0.0,
            mean_outer_iterations=float(np.mean([r.outer_iterations for r in res])),
            mean_wall_ms=float(np.mean([r.wall_ms for r in res])) if spec.record_timing else None,
            infeasible_trials=int(sum(r.infeasible for r in res)), seed_base=spec.seed_base,
            trial_sr=[float(x) for x in srs], trial_results=list(res),
        ))
        if spec.write_traces and out_dir is not None:
            tdir = Path(out_dir) / "traces"
            tdir.mkdir(parents=True, exist_ok=True)
            for t, r in enumerate(res):
                name = f"{spec.sweep}_{value:g}_{scheme}_N{N}_seed{spec.seed_base + t}.json"
                (tdir / name).write_text(json.dumps(r.trace, indent=1) + "\n", encoding="utf-8")
    return rows


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return format(float(x), ".6g")


def format_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.sweep_name, _fmt(r.sweep_value), r.scheme, r.N, r.M, r.trial_count,
                    _fmt(r.mean_sr), _fmt(r.std_sr), _fmt(r.mean_outer_iterations),
                    _fmt(r.mean_wall_ms), r.infeasible_trials, r.seed_base])
    return buf.getvalue()


def emit_csv(rows: list[ResultRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows))
    return path
