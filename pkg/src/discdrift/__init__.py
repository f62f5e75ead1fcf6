"""Numerical experiments for scalar SDEs with piecewise-constant drift."""
from .analytics import (
    InvariantDensity,
    crossing_probability,
    folded_mgf,
    invariant_cdf,
    invariant_pdf,
    lyapunov_bound,
    no_crossing_probability,
)
from .atlas import FirstOrderModel, OccupationMatrix, atlas_model, occupation_deviation, rank, simulate_market
from .errors import ConfigError, ParameterError
from .model import CATALOG, PiecewiseDrift, SdeSpec, catalog, classify
from .noise import NoisePath, coarsen, generate
from .schemes import SchemeKind, euler_step, heun_step, platen_step, simulate
from .study import (
    MACHINE_ACCURACY,
    ConvergenceStudyConfig,
    error_evolution,
    error_histogram,
    regress,
    run_convergence,
    stationary_check,
)

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "MACHINE_ACCURACY", "ConfigError", "ConvergenceStudyConfig", "FirstOrderModel",
    "InvariantDensity", "NoisePath", "OccupationMatrix", "ParameterError", "PiecewiseDrift",
    "SchemeKind", "SdeSpec", "atlas_model", "catalog", "classify", "coarsen", "crossing_probability",
    "error_evolution", "error_histogram", "euler_step", "folded_mgf", "generate", "heun_step",
    "invariant_cdf", "invariant_pdf", "lyapunov_bound", "no_crossing_probability",
    "occupation_deviation", "platen_step", "rank", "regress", "run_convergence", "simulate",
    "simulate_market", "stationary_check",
]
