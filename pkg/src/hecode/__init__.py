"""Decomposition-based differential evolution for constrained problems (HECO-DE)."""

__version__ = "0.1.0"

from .problems import (  # noqa: E402
    ConstrainedProblem,
    ContractViolation,
    EvaluatedPoint,
    EvaluationError,
    evaluate,
    get_problem,
    list_problems,
    register,
)
from .solver import RunConfig, RunRecord, run_algorithm, run_heco_de, run_heco_de_batch, run_many  # noqa: E402

__all__ = [
    "ConstrainedProblem",
    "ContractViolation",
    "EvaluatedPoint",
    "EvaluationError",
    "RunConfig",
    "RunRecord",
    "evaluate",
    "get_problem",
    "list_problems",
    "register",
    "run_algorithm",
    "run_heco_de",
    "run_heco_de_batch",
    "run_many",
]
