"""Safe online voltage control for radial distribution feeders.

Core pieces: a linearized feeder model and plant simulator, an
exponential-barrier controller that keeps iterates feasible under
model error, exact and first-order baselines, and a scenario harness
with an HTTP service and CLI on top.
"""

from .baselines import PrimalDualConfig, QpSolution, run_primal_dual, solve_lcqp
from .controller import BarrierConfig, BarrierController, ControllerState
from .errors import (
    DegenerateConstraint,
    DimensionMismatch,
    GridBarrierError,
    Infeasible,
    MaxPivots,
    NonPositiveImpedance,
    NotActivated,
    NotATree,
    ParseError,
    ScenarioError,
    SingularKKT,
    SingularMatrix,
    ValidationError,
)
from .netmodel import (
    RadialNetwork,
    SensitivityModel,
    build_impedance_matrices,
    generate_synthetic_feeder,
    parse_network_csv,
    path_sum_impedances,
    read_network_csv,
    write_network_csv,
)
from .plant import InverterLimits, LinearGridPlant, ModelEstimate, perturb_model, spectral_norm, tune_perturbation
from .trajectory import StepRecord, Trajectory

__version__ = "0.1.0"

__all__ = [
    "BarrierConfig",
    "BarrierController",
    "ControllerState",
    "DegenerateConstraint",
    "DimensionMismatch",
    "GridBarrierError",
    "Infeasible",
    "InverterLimits",
    "LinearGridPlant",
    "MaxPivots",
    "ModelEstimate",
    "NonPositiveImpedance",
    "NotATree",
    "NotActivated",
    "ParseError",
    "PrimalDualConfig",
    "QpSolution",
    "RadialNetwork",
    "ScenarioError",
    "SensitivityModel",
    "SingularKKT",
    "SingularMatrix",
    "StepRecord",
    "Trajectory",
    "ValidationError",
    "build_impedance_matrices",
    "generate_synthetic_feeder",
    "parse_network_csv",
    "path_sum_impedances",
    "perturb_model",
    "read_network_csv",
    "run_primal_dual",
    "solve_lcqp",
    "spectral_norm",
    "tune_perturbation",
    "write_network_csv",
    "__version__",
]
