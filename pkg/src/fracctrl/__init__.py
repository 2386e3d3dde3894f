"""Regularized Gramian control synthesis for fractional-order spectral systems.

The package simulates semilinear evolution equations of fractional order
``alpha`` in (1, 2) on diagonal models of sectorial generators, synthesizes
the Tikhonov-regularized Gramian steering law, and quantifies how the
terminal error vanishes as the regularization parameter goes to zero, for
classical and nonlocal initial conditions.
"""

from .errors import (
    AccuracyError,
    AssemblyError,
    ConfigError,
    DomainError,
    FracctrlError,
)
from .mlf import MLParams, MLResult, ml_eval, ml_eval_many, solution_kernel
from .spectral import (
    DecayReport,
    SpectralOperator,
    apply_solution_operator,
    integral_identity_residual,
    kernel_values,
    operator_norm_bound,
    solution_convolution,
    verify_decay,
)
from .gramian import (
    ControlLaw,
    ControlMap,
    GramianBundle,
    LinearTerminalResult,
    RegularizedResolvent,
    SweepRow,
    assemble_gramian,
    eval_control,
    linear_terminal_state,
    regularize,
    simulate_linear_terminal,
    sweep_regularization,
)
from .semilinear import (
    GrowthCheck,
    GrowthProfile,
    InclusionRHS,
    NonlocalCondition,
    PicardResult,
    Trajectory,
    check_growth_condition,
    constant_band,
    estimate_growth_profile,
    identity_band,
    mild_solution_residual,
    picard_solve,
    picard_solve_nonlocal,
    sine_band,
    zero_rhs,
)
from .config import ExperimentConfig, parse_config, serialize_config
from .runner import ResultRow, read_results, run_experiment, write_results, write_table

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "AssemblyError",
    "ConfigError",
    "ControlLaw",
    "ControlMap",
    "DecayReport",
    "DomainError",
    "ExperimentConfig",
    "FracctrlError",
    "GramianBundle",
    "GrowthCheck",
    "GrowthProfile",
    "InclusionRHS",
    "LinearTerminalResult",
    "MLParams",
    "MLResult",
    "NonlocalCondition",
    "PicardResult",
    "RegularizedResolvent",
    "ResultRow",
    "SpectralOperator",
    "SweepRow",
    "Trajectory",
    "apply_solution_operator",
    "assemble_gramian",
    "check_growth_condition",
    "constant_band",
    "estimate_growth_profile",
    "eval_control",
    "identity_band",
    "integral_identity_residual",
    "kernel_values",
    "linear_terminal_state",
    "mild_solution_residual",
    "ml_eval",
    "ml_eval_many",
    "operator_norm_bound",
    "parse_config",
    "picard_solve",
    "picard_solve_nonlocal",
    "read_results",
    "regularize",
    "run_experiment",
    "serialize_config",
    "simulate_linear_terminal",
    "sine_band",
    "solution_convolution",
    "solution_kernel",
    "sweep_regularization",
    "verify_decay",
    "write_results",
    "write_table",
    "zero_rhs",
]
