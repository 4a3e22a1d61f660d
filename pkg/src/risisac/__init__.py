"""Secrecy-rate maximization for RIS-aided integrated sensing and communication."""
from __future__ import annotations

from .channel import ChannelSet, generate_scenario
from .config import PathLossExponents, SystemConfig, db_to_linear, dbm_to_watts, watts_to_dbm
from .estimator import SecureBeamformer
from .harness import ExperimentSpec, emit_csv, load_config, run_experiment
from .jbrd import SCHEMES, IterationTrace, JbrdConfig, init_state, run_benchmark, run_jbrd
from .metrics import BeamformingState, SecrecyReport, secrecy_rate
from .oracle import grid_oracle

__all__ = [
    "SCHEMES", "BeamformingState", "ChannelSet", "ExperimentSpec", "IterationTrace", "JbrdConfig",
    "PathLossExponents", "SecrecyReport", "SecureBeamformer", "SystemConfig", "db_to_linear",
    "dbm_to_watts", "emit_csv", "generate_scenario", "grid_oracle", "init_state", "load_config",
    "run_benchmark", "run_experiment", "run_jbrd", "secrecy_rate", "watts_to_dbm",
]
__version__ = "0.1.0"
