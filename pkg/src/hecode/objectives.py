"""Equivalent and helper objectives, normalization and weighted-sum decomposition.

Population-level functions take arrays of objective values ``f`` and
violation degrees ``v`` and work along the last axis, so a stack of
populations (shape ``(m, n)``) is handled in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WeightTriple:
    """Weights on (e-tilde, v, f) for one subproblem."""

    w1: float
    w2: float
    w3: float

    def as_array(self):
        return np.array([self.w1, self.w2, self.w3])


@dataclass(frozen=True)
class WeightScheduleConfig:
    lam: int
    t_max: int
    gamma: float

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


def population_arrays(points):
    """Split a sequence of EvaluatedPoint into ``(f, v)`` arrays."""
    f = np.array([p.f for p in points], dtype=float)
    v = np.array([p.v for p in points], dtype=float)
    return f, v


def death_penalty_e(f, v):
    """f on feasible points, +inf on infeasible ones."""
    f = np.asarray(f, dtype=float)
    return np.where(np.asarray(v) == 0.0, f, np.inf)


def feasibility_rule_e(f, v):
    """Scalar form of the superiority-of-feasibility rule.

    Infeasible members are shifted above the worst feasible objective value
    in the population (or above 0 when nothing is feasible).
    """
    f = np.asarray(f, dtype=float)
    v = np.asarray(v, dtype=float)
    feasible = v == 0.0
    worst_feasible = np.max(np.where(feasible, f, -np.inf), axis=-1, keepdims=True)
    worst_feasible = np.where(feasible.any(axis=-1, keepdims=True), worst_feasible, 0.0)
    return np.where(feasible, f, v + worst_feasible)


def best_of_population(f, v):
    """Index of the best member: min f among feasible, else min v.

    Ties resolve to the lowest index.
    """
    f = np.asarray(f, dtype=float)
    v = np.asarray(v, dtype=float)
    feasible = v == 0.0
    key = np.where(
        feasible.any(axis=-1, keepdims=True),
        np.where(feasible, f, np.inf),
        v,
    )
    return np.argmin(key, axis=-1)


def e_tilde(f, v):
    """|f(x) - f(x*_P)| where x*_P is the population's best member."""
    f = np.asarray(f, dtype=float)
    best = best_of_population(f, v)
    if f.ndim == 1:
        return np.abs(f - f[best])
    if f.ndim == 2:
        return np.abs(f - f[np.arange(f.shape[0]), best][:, None])
    f_best = np.take_along_axis(f, best[..., None], axis=-1)
    return np.abs(f - f_best)


def min_max_normalize(values):
    """Map values onto [0, 1] along the last axis; constant rows map to 0."""
    g = np.asarray(values, dtype=float)
    lo = g.min(axis=-1, keepdims=True)
    span = g.max(axis=-1, keepdims=True) - lo
    # dividing the all-zero numerator of a constant row by inf gives 0
    span[span <= 0] = np.inf
    return (g - lo) / span


def weight_triple(i: int, t: int, cfg: WeightScheduleConfig) -> WeightTriple:
    """Dynamic weights of subproblem ``i`` (1-based) at generation ``t``.

    w1 and w2 grow linearly in both t and i, w3 shrinks; the last
    subproblem (``i == lam``) never weights f, and at ``t == t_max`` no
    subproblem does.
    """
    if not 1 <= i <= cfg.lam:
        raise ValueError(f"subproblem index {i} outside 1..{cfg.lam}")
    if not 0 <= t <= cfg.t_max:
        raise ValueError(f"generation {t} outside 0..{cfg.t_max}")
    progress = t / cfg.t_max
    share = i / cfg.lam
    return WeightTriple(
        w1=progress * share,
        w2=progress * share + cfg.gamma,
        w3=(1.0 - progress) * (1.0 - share),
    )


def weight_matrix(t: int, cfg: WeightScheduleConfig) -> np.ndarray:
    """Rows ``(w1, w2, w3)`` for subproblems 1..lam at generation ``t``."""
    progress = t / cfg.t_max
    share = np.arange(1, cfg.lam + 1) / cfg.lam
    w1 = progress * share
    return np.column_stack([w1, w1 + cfg.gamma, (1.0 - progress) * (1.0 - share)])


def scalarize(weights, e_n, v_n=None, f_n=None):
    """Weighted sum w1*e_n + w2*v_n + w3*f_n of normalized components.

    With a single component argument, ``e_n`` is a stack whose first axis
    holds the three components.
    """
    if isinstance(weights, WeightTriple):
        w1, w2, w3 = weights.w1, weights.w2, weights.w3
    else:
        w1, w2, w3 = weights
    if v_n is None:
        e_n, v_n, f_n = e_n
    return w1 * np.asarray(e_n) + w2 * np.asarray(v_n) + w3 * np.asarray(f_n)
