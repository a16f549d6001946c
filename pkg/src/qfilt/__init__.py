"""Simulator and numerical optimizer for ancilla-assisted quantum error filtration."""

from .channels import NoiseKind, NoiseSpec, RobustnessSpec
from .filtration import (
    FiltrationOutcome,
    PipelineConfig,
    PostSelectionImpossible,
    Task,
    run_filtration,
)
from .gates import ParamCircuit, Recipe, circuit_unitary, param_count

__all__ = [
    "NoiseKind",
    "NoiseSpec",
    "RobustnessSpec",
    "FiltrationOutcome",
    "PipelineConfig",
    "PostSelectionImpossible",
    "Task",
    "run_filtration",
    "ParamCircuit",
    "Recipe",
    "circuit_unitary",
    "param_count",
]

__version__ = "0.1.0"
