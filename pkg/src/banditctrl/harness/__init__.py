"""Experiment harness: config loading, comparators, audits, and the CLI."""

from .analysis import fit_slope, lower_bound_report
from .audits import audit_trace, run_audits
from .comparators import ConstantPolicyObjective, best_fixed_K, best_fixed_M
from .config import ExperimentConfig, load_config
from .experiment import build_cell, run_cell, run_experiment
from .presets import PLANT_PRESETS, plant_from_preset

__all__ = [
    "ConstantPolicyObjective",
    "ExperimentConfig",
    "PLANT_PRESETS",
    "audit_trace",
    "best_fixed_K",
    "best_fixed_M",
    "build_cell",
    "fit_slope",
    "load_config",
    "lower_bound_report",
    "plant_from_preset",
    "run_audits",
    "run_cell",
    "run_experiment",
]
