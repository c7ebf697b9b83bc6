"""Probability-based Bell inequalities for two and three qubits."""
from .bell_model import (
    BellExpression,
    OutcomeSumTerm,
    ProbabilityTable,
    bell1,
    bell2,
    bell3,
    evaluate,
    quantum_table,
    reduce_bell2_to_bell3,
)
from .lhv import lhv_bound, lhv_min
from .optimize import OptimizerConfig, maximize_settings

__all__ = [
    "BellExpression",
    "OutcomeSumTerm",
    "ProbabilityTable",
    "bell1",
    "bell2",
    "bell3",
    "evaluate",
    "quantum_table",
    "reduce_bell2_to_bell3",
    "lhv_bound",
    "lhv_min",
    "OptimizerConfig",
    "maximize_settings",
]
