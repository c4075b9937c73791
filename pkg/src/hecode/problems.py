"""Constrained problems, violation degrees and the problem registry."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_EQ_TOLERANCE = 1e-4


class ContractViolation(ValueError):
    """A caller broke a documented precondition (e.g. x outside the box)."""


class EvaluationError(ArithmeticError):
    """An objective or constraint returned a non-finite value.

    ``which`` is ``"f"``, ``"g"`` (inequality) or ``"h"`` (equality) and
    ``index`` is the constraint index (``None`` for the objective).
    """

    def __init__(self, message, which, index=None):
        super().__init__(message)
        self.which = which
        self.index = index


@dataclass(frozen=True)
class ConstrainedProblem:
    """min f(x) s.t. g_i(x) <= 0, h_j(x) = 0, lower <= x <= upper.

    When ``vectorized`` is true the objective and every constraint accept an
    ``(n, D)`` array and return ``(n,)`` values; otherwise they are called
    once per point with a ``(D,)`` array.
    """

    name: str
    lower: np.ndarray
    upper: np.ndarray
    objective: Callable
    inequalities: tuple = ()
    equalities: tuple = ()
    eq_tolerance: float = DEFAULT_EQ_TOLERANCE
    f_star: float | None = None
    x_star: np.ndarray | None = None
    vectorized: bool = False
    description: str = ""

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ValueError("bounds must be 1-D arrays of equal positive length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        if self.eq_tolerance < 0:
            raise ValueError("eq_tolerance must be nonnegative")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        if self.x_star is not None:
            xs = np.asarray(self.x_star, dtype=float)
            xs.setflags(write=False)
            object.__setattr__(self, "x_star", xs)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def n_constraints(self) -> int:
        return len(self.inequalities) + len(self.equalities)


@dataclass(frozen=True)
class EvaluatedPoint:
    x: np.ndarray
    f: float
    v_ineq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.v == 0.0

    @property
    def violations(self) -> np.ndarray:
        return np.concatenate([self.v_ineq, self.v_eq])

    @property
    def mean_violation(self) -> float:
        n = self.v_ineq.size + self.v_eq.size
        return self.v / n if n else 0.0


def is_feasible(point: EvaluatedPoint) -> bool:
    return point.v == 0.0


def _check_bounds(problem, X):
    if X.shape[-1] != problem.dim:
        raise ContractViolation(f"expected dimension {problem.dim}, got {X.shape[-1]}")
    if not ((X >= problem.lower).all() and (X <= problem.upper).all()):
        raise ContractViolation(f"point outside the box of problem {problem.name!r}")


def _column(fn, X, vectorized):
    if vectorized:
        return np.array(fn(X), dtype=float).reshape(X.shape[0])
    return np.array([fn(x) for x in X], dtype=float)


def evaluate_batch(problem: ConstrainedProblem, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate ``n`` points at once.

    Returns ``(f, violations, v)`` with shapes ``(n,)``, ``(n, q + r)`` and
    ``(n,)``. Inequality violations come first, then equality violations.
    Each row consumes one fitness evaluation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_bounds(problem, X)
    n = X.shape[0]
    f = _column(problem.objective, X, problem.vectorized)
    if not np.isfinite(f).all():
        bad = int(np.argmax(~np.isfinite(f)))
        raise EvaluationError(f"non-finite objective at point {bad}", "f")
    q = len(problem.inequalities)
    viol = np.empty((n, q + len(problem.equalities)))
    for i, g in enumerate(problem.inequalities):
        gi = _column(g, X, problem.vectorized)
        if not np.isfinite(gi).all():
            raise EvaluationError(f"non-finite inequality constraint {i}", "g", i)
        np.maximum(0.0, gi, out=viol[:, i])
    for i, h in enumerate(problem.equalities):
        hi = _column(h, X, problem.vectorized)
        if not np.isfinite(hi).all():
            raise EvaluationError(f"non-finite equality constraint {i}", "h", i)
        np.maximum(0.0, np.abs(hi) - problem.eq_tolerance, out=viol[:, q + i])
    v = viol.sum(axis=1)
    return f, viol, v


def make_point(problem: ConstrainedProblem, x, f, violations) -> EvaluatedPoint:
    q = len(problem.inequalities)
    violations = np.asarray(violations, dtype=float)
    return EvaluatedPoint(
        x=np.array(x, dtype=float),
        f=float(f),
        v_ineq=violations[:q].copy(),
        v_eq=violations[q:].copy(),
        v=float(violations.sum()),
    )


def evaluate(problem: ConstrainedProblem, x) -> EvaluatedPoint:
    """Evaluate one point: objective plus clamped violation degrees."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f, viol, _ = evaluate_batch(problem, x[None, :])
    return make_point(problem, x, f[0], viol[0])


# registry

_REGISTRY: dict[str, ConstrainedProblem] = {}


def register(problem: ConstrainedProblem, *, replace: bool = False) -> ConstrainedProblem:
    if problem.name in _REGISTRY and not replace:
        raise ValueError(f"problem {problem.name!r} already registered")
    _REGISTRY[problem.name] = problem
    return problem


def get_problem(name: str) -> ConstrainedProblem:
    _ensure_builtins()
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(sorted(_REGISTRY))}") from None


def list_problems() -> list[str]:
    _ensure_builtins()
    return sorted(_REGISTRY)


def _ensure_builtins():
    from . import benchmarks  # noqa: F401  (registers on import)


def problem_from_callables(
    name: str,
    lower: Sequence[float],
    upper: Sequence[float],
    objective: Callable,
    inequalities: Sequence[Callable] = (),
    equalities: Sequence[Callable] = (),
    **kwargs,
) -> ConstrainedProblem:
    """Build (without registering) a problem from per-point callables."""
    return ConstrainedProblem(
        name=name,
        lower=np.asarray(lower, dtype=float),
        upper=np.asarray(upper, dtype=float),
        objective=objective,
        inequalities=tuple(inequalities),
        equalities=tuple(equalities),
        **kwargs,
    )
