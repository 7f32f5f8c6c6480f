"""Multi-marginal Sinkhorn solver for variational second-order mean-field games."""

__version__ = "0.1.0"

from .exceptions import (
    DegenerateKernel, GridMismatch, Infeasible, MaxIterations, MFGSinkhornError,
    NonConvexDirect, ParseError, SizeExceeded, StaleMessages, ValidationError, ZeroMass,
)
from .grid import OBSTACLE, Field, GridSpec, TimeAxis, hadamard, integrate, normalize_to_probability, shift
from .kernel import SeparableKernel, apply_kernel, apply_kernel_log, build_heat_kernel
from .functionals import (
    Congestion, CongestionPlusPotential, CostSchedule, FixedMarginal, Free, Nonlocal, Potential,
    prox_update,
)
from .sinkhorn import ConvergenceReport, SolverConfig, SolverState, dual_objective, marginal_at, solve, sweep
from .diagnostics import (
    RunMetrics, compute_metrics, entropy, fisher_information, kinetic_energy_estimate, plan_entropy,
)
from .scenario_io import ScenarioConfig, build_scenario, load_config, parse_config, write_frames

__all__ = [
    "__version__",
    "DegenerateKernel", "GridMismatch", "Infeasible", "MaxIterations", "MFGSinkhornError", "NonConvexDirect",
    "ParseError", "SizeExceeded", "StaleMessages", "ValidationError", "ZeroMass", "OBSTACLE",
    "Field", "GridSpec", "TimeAxis", "hadamard", "integrate", "normalize_to_probability",
    "shift", "SeparableKernel", "apply_kernel", "apply_kernel_log", "build_heat_kernel", "Congestion",
    "CongestionPlusPotential", "CostSchedule", "FixedMarginal", "Free", "Nonlocal", "Potential",
    "prox_update", "ConvergenceReport", "SolverConfig", "SolverState", "dual_objective", "marginal_at",
    "solve", "sweep", "RunMetrics", "compute_metrics", "entropy", "fisher_information",
    "kinetic_energy_estimate", "plan_entropy", "ScenarioConfig", "build_scenario", "load_config", "parse_config",
    "write_frames",
]
