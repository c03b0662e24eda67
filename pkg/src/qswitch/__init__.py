"""Simulation and optimal control of open quantum systems whose local noise
channels can be switched on and off alongside coherent drives.

The package splits into a simulation core (:mod:`qswitch.liouville`,
:mod:`qswitch.propagation`), physical model builders (:mod:`qswitch.models`,
:mod:`qswitch.bath`), analytic switching protocols built on majorization
(:mod:`qswitch.protocols`), and a gradient-based pulse optimizer
(:mod:`qswitch.grape`).  The most commonly used names are re-exported here;
everything else lives in its submodule.
"""

from .errors import (
    BoundViolationError,
    ConfigError,
    DimensionError,
    NumericalError,
    QSwitchError,
    ReachabilityError,
)
from .numerics import TOL, hermitian_eigensystem, matrix_exponential
from .liouville import (
    ControlOperator,
    ControlSystem,
    DensityOperator,
    LindbladChannel,
    precompute_superops,
    spectrum_descending,
    unvectorize,
    vectorize,
)
from .bath import (
    BathSpec,
    ThermalChannel,
    boltzmann_factor,
    thermal_diagonal_propagator,
    validate_timescales,
)
from .models import (
    gmon_chain,
    ion_trap_collective,
    ising_chain,
    load_density_file,
    noise_generator,
    save_density_file,
    target_state,
    thermal_ising_chain,
)
from .propagation import (
    ControlSequence,
    Trajectory,
    frobenius_error,
    propagate,
    slice_propagator,
)
from .protocols import (
    ProtocolPlan,
    ReachabilityVerdict,
    amp_damp_exact_plan,
    cooling_protocol,
    erasure_protocol,
    execute_plan,
    greedy_equalize_plan,
    hlp_full_plan,
    majorization_floor,
    majorizes,
    plan_from_json,
    plan_to_json,
    reachability_verdict,
)
from .grape import (
    OptimizationResult,
    OptimizerConfig,
    TransferProblem,
    optimize,
    sequence_error,
    sweep_durations,
    unital_error_floor,
)

__version__ = "0.1.0"

__all__ = [
    "QSwitchError",
    "DimensionError",
    "BoundViolationError",
    "ReachabilityError",
    "NumericalError",
    "ConfigError",
    "TOL",
    "matrix_exponential",
    "hermitian_eigensystem",
    "DensityOperator",
    "LindbladChannel",
    "ControlOperator",
    "ControlSystem",
    "vectorize",
    "unvectorize",
    "precompute_superops",
    "spectrum_descending",
    "BathSpec",
    "ThermalChannel",
    "boltzmann_factor",
    "thermal_diagonal_propagator",
    "validate_timescales",
    "noise_generator",
    "ising_chain",
    "thermal_ising_chain",
    "gmon_chain",
    "ion_trap_collective",
    "target_state",
    "load_density_file",
    "save_density_file",
    "ControlSequence",
    "Trajectory",
    "slice_propagator",
    "propagate",
    "frobenius_error",
    "ProtocolPlan",
    "ReachabilityVerdict",
    "majorizes",
    "majorization_floor",
    "hlp_full_plan",
    "greedy_equalize_plan",
    "amp_damp_exact_plan",
    "cooling_protocol",
    "erasure_protocol",
    "reachability_verdict",
    "execute_plan",
    "plan_to_json",
    "plan_from_json",
    "TransferProblem",
    "OptimizerConfig",
    "OptimizationResult",
    "optimize",
    "sequence_error",
    "sweep_durations",
    "unital_error_floor",
    "__version__",
]
