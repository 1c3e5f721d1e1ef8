"""Link-level simulator for decentralized suppression of unknown
out-of-system interference in cell-free massive MIMO."""

from .experiments import (
    ExperimentSpec,
    MonteCarloOutcome,
    ResultRow,
    default_spec,
    emit_report,
    load_table,
    overloaded_interferers_spec,
    run_monte_carlo,
)
from .scenario import Geometry, PilotBook, SystemConfig

__version__ = "0.1.0"

__all__ = [
    "ExperimentSpec",
    "Geometry",
    "MonteCarloOutcome",
    "PilotBook",
    "ResultRow",
    "SystemConfig",
    "default_spec",
    "emit_report",
    "load_table",
    "overloaded_interferers_spec",
    "run_monte_carlo",
    "__version__",
]
