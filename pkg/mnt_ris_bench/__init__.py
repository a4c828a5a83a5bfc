"""
MNT RIS Bench - оптимизация 1-битных RIS с учетом взаимной связи

Генератор ансамблей матриц рассеяния, модели канала MNT/CASC/RR,
оптимизаторы DS, CD, TABP и GA и стенд Монте-Карло для их сравнения.
"""

__version__ = "0.1.0"
__author__ = "MNT RIS Bench Team"

from .config import ExperimentConfig, NumericTolerances, default_config, default_tolerances
from .schemas import (
    PortPartition,
    EnsembleSpec,
    MethodSpec,
    OptimizationReport,
    CellResult,
    SummaryRow,
    TabpSchedule,
    Fidelity,
    OptimizerKind,
    InitKind,
    method_from_name,
)
from .ensemble import (
    ScatteringMatrix,
    draw_scattering_matrix,
    mutual_coupling_strength,
    calibrate_kappa,
    calibrate_kappa_verdict,
    validate_kappa,
    derive_seed,
    read_scattering_matrix,
    write_scattering_matrix,
)
from .models import (
    EvaluationCounter,
    MntEvaluator,
    RrSurrogate,
    mnt_channel,
    casc_channel,
    neumann_channel,
    fit_rr,
    channel_gain,
    cost,
)
from .optim import (
    Dictionary,
    build_dictionary,
    dictionary_search,
    coordinate_descent,
    tabp,
    genetic_algorithm,
    run_method,
)
from .harness import ExperimentRunner, run_experiment, aggregate, run_sweep
from .interfaces import ChannelModelInterface, LoggerInterface
from .exceptions import (
    MntRisError,
    MntConfigError,
    MntPassivityViolationError,
    MntInfeasibleTargetError,
    MntSingularMatrixError,
)

__all__ = [
    # Core components
    "ExperimentConfig",
    "NumericTolerances",
    "default_config",
    "default_tolerances",
    "ExperimentRunner",

    # Schemas
    "PortPartition",
    "EnsembleSpec",
    "MethodSpec",
    "OptimizationReport",
    "CellResult",
    "SummaryRow",
    "TabpSchedule",
    "Fidelity",
    "OptimizerKind",
    "InitKind",
    "method_from_name",

    # Ensemble
    "ScatteringMatrix",
    "draw_scattering_matrix",
    "mutual_coupling_strength",
    "calibrate_kappa",
    "calibrate_kappa_verdict",
    "validate_kappa",
    "derive_seed",
    "read_scattering_matrix",
    "write_scattering_matrix",

    # Models
    "EvaluationCounter",
    "MntEvaluator",
    "RrSurrogate",
    "mnt_channel",
    "casc_channel",
    "neumann_channel",
    "fit_rr",
    "channel_gain",
    "cost",

    # Optimizers
    "Dictionary",
    "build_dictionary",
    "dictionary_search",
    "coordinate_descent",
    "tabp",
    "genetic_algorithm",
    "run_method",

    # Harness
    "run_experiment",
    "aggregate",
    "run_sweep",

    # Interfaces
    "ChannelModelInterface",
    "LoggerInterface",

    # Exceptions
    "MntRisError",
    "MntConfigError",
    "MntPassivityViolationError",
    "MntInfeasibleTargetError",
    "MntSingularMatrixError",

    # Version info
    "__version__",
]
