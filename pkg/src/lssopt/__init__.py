"""Landscape-Sketch-and-Step: surrogate-guided multi-agent annealing for expensive costs."""
from .annealer import CoolingSchedule, SaConfig, anneal, metropolis_accept
from .bench import ExperimentSpec, RunSummary, compare, emit_plot_data, run_experiment
from .budget import BudgetLedger
from .concentration import concentration_1d, concentration_nd
from .core import EpochSchedules, LssConfig, RunResult, run
from .domain import BoxDomain, get_objective, reflect_into_box, toy_f, toy_g, toy_g_normalized
from .errors import ConfigError, InvalidInputError, LssError
from .history import EvaluationHistory

__all__ = [
    "BoxDomain", "BudgetLedger", "ConfigError", "CoolingSchedule", "EpochSchedules",
    "EvaluationHistory", "ExperimentSpec", "InvalidInputError", "LssConfig", "LssError",
    "RunResult", "RunSummary", "SaConfig", "anneal", "compare", "concentration_1d",
    "concentration_nd", "emit_plot_data", "get_objective", "metropolis_accept",
    "reflect_into_box", "run", "run_experiment", "toy_f", "toy_g", "toy_g_normalized",
]
