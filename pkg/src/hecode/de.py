"""Differential-evolution machinery shared by the solvers.

Four strategies compete: {current-to-best/1, rand/1} x {binomial,
exponential}. Strategy ``k`` (0-based here) maps to
``MUTATIONS[k // 2]`` and ``CROSSOVERS[k % 2]``. Each strategy owns a pair
of circular F/CR memories.

Every random operator comes in two layers: a kernel that consumes
pre-drawn uniforms (``*_from_uniform``, ``*_mask``) and a convenience
wrapper that draws them from a ``numpy.random.Generator``. The kernels
broadcast over leading batch axes, which is what lets the solver advance
several independent runs at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_STRATEGIES = 4
MUTATIONS = ("current-to-best", "rand1")
CROSSOVERS = ("binomial", "exponential")
F_SCALE = 0.1
CR_SCALE = 0.1


class InsufficientPopulationError(ValueError):
    pass


def _uniform_index(u, n):
    """floor(n * u) for u in [0, 1); never reaches n."""
    return (u * n).astype(np.intp)


# strategy competition and parameter memories

@dataclass
class StrategyState:
    """Competition-of-strategies state plus per-strategy F/CR memories.

    ``batch`` adds leading axes so that one object can hold the state of
    several independent runs; the single-run functions below expect the
    default ``batch=()``.
    """

    memory_size: int = 5
    n0: float = 2.0
    delta: float = 1.0 / 20.0
    f_init: float = 0.5
    cr_init: float = 0.5
    batch: tuple = ()
    counts: np.ndarray = field(default=None)
    q: np.ndarray = field(default=None)
    mf: np.ndarray = field(default=None)
    mcr: np.ndarray = field(default=None)
    cursor: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.memory_size < 1:
            raise ValueError("memory_size must be >= 1")
        if self.n0 <= 0:
            raise ValueError("n0 must be positive")
        self.batch = tuple(self.batch)
        shape = self.batch + (N_STRATEGIES,)
        if self.counts is None:
            self.counts = np.zeros(shape)
        if self.mf is None:
            self.mf = np.full(shape + (self.memory_size,), self.f_init)
        if self.mcr is None:
            self.mcr = np.full(shape + (self.memory_size,), self.cr_init)
        if self.cursor is None:
            self.cursor = np.zeros(shape, dtype=np.intp)
        if self.q is None:
            self.q = _probabilities(self.counts, self.n0)


def _probabilities(counts, n0):
    w = np.asarray(counts, dtype=float) + n0
    return w / w.sum(axis=-1, keepdims=True)


def strategy_from_uniform(q, u):
    """Inverse-CDF strategy draw; ``q`` has shape (..., 4), ``u`` (..., m)."""
    q = np.asarray(q, dtype=float)
    cdf = np.cumsum(q, axis=-1)[..., None, :-1]
    return (np.asarray(u)[..., None] >= cdf).sum(axis=-1)


def select_strategy(state: StrategyState, rng, size=None):
    """Draw strategy index(es) with probabilities ``state.q``."""
    u = rng.random(size)
    k = strategy_from_uniform(state.q, np.atleast_1d(u))
    return k if size is not None else int(k[0])


def record_successes(state: StrategyState, strategies) -> None:
    state.counts += np.bincount(np.asarray(strategies, dtype=int), minlength=N_STRATEGIES)


def update_strategy_probabilities(state: StrategyState) -> StrategyState:
    """Recompute q from success counts; reset counts where any q_k drops below delta."""
    q = _probabilities(state.counts, state.n0)
    low = q.min(axis=-1) < state.delta
    if np.any(low):
        state.counts[low] = 0.0
        q = _probabilities(state.counts, state.n0)
    state.q = q
    return state


def f_cr_from_uniform(loc_f, loc_cr, u_f, z_cr):
    """F and CR from memory locations, a uniform ``u_f`` and a standard normal ``z_cr``.

    F follows Cauchy(loc_f, 0.1) conditioned on F > 0 (sampled by inverting
    the CDF above the cut, equivalent to redrawing until positive) and is
    clipped to 1. CR = clip(loc_cr + 0.1 z, 0, 1).
    """
    loc_f = np.asarray(loc_f, dtype=float)
    p0 = 0.5 + np.arctan(-loc_f / F_SCALE) / np.pi
    F = loc_f + F_SCALE * np.tan(np.pi * (0.5 - (1.0 - p0) * u_f))
    # rounding right at the cut can land on 0; probability ~1e-16 per draw
    F = np.where(F > 0, F, np.finfo(float).tiny)
    F = np.minimum(F, 1.0)
    CR = np.clip(np.asarray(loc_cr) + CR_SCALE * np.asarray(z_cr), 0.0, 1.0)
    return F, CR


def sample_f_cr(state: StrategyState, k, rng):
    """Draw (F, CR) for strategy ``k`` (int or int array) from its memories.

    A memory slot is picked uniformly; F ~ Cauchy(MF[slot], 0.1) truncated
    to F > 0 and clipped to 1, CR ~ Normal(MCR[slot], 0.1) clipped to [0, 1].
    """
    k = np.asarray(k)
    shape = k.shape
    slot = _uniform_index(rng.random(shape), state.memory_size)
    F, CR = f_cr_from_uniform(
        state.mf[k, slot], state.mcr[k, slot], rng.random(shape), rng.standard_normal(shape)
    )
    if not shape:
        return float(F), float(CR)
    return F, CR


def lehmer_mean(values, weights):
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    den = np.sum(weights * values)
    if den == 0:
        return 0.0
    return float(np.sum(weights * values**2) / den)


def update_memories(state: StrategyState, k: int, s_f, s_cr, improvements) -> StrategyState:
    """Write improvement-weighted Lehmer means of successful F and CR into slot ``cursor[k]``."""
    s_f = np.asarray(s_f, dtype=float)
    s_cr = np.asarray(s_cr, dtype=float)
    improvements = np.asarray(improvements, dtype=float)
    if not (s_f.shape == s_cr.shape == improvements.shape):
        raise ValueError("S_F, S_CR and improvements must have the same length")
    if s_f.size == 0:
        return state
    total = improvements.sum()
    w = improvements / total if total > 0 else np.full(s_f.size, 1.0 / s_f.size)
    pos = state.cursor[k]
    state.mf[k, pos] = lehmer_mean(s_f, w)
    state.mcr[k, pos] = lehmer_mean(s_cr, w)
    state.cursor[k] = (pos + 1) % state.memory_size
    return state


def update_all_memories(state: StrategyState, ks, s_f, s_cr, improvements, runs=None) -> StrategyState:
    """Batch memory update: one slot write per (run, strategy) with at least one success.

    ``runs`` gives the flat batch index of each success (omit it for an
    unbatched state). Matches :func:`update_memories` applied per group.
    """
    ks = np.asarray(ks, dtype=np.intp)
    if ks.size == 0:
        return state
    n_runs = int(np.prod(state.batch, dtype=int))
    runs = np.zeros_like(ks) if runs is None else np.asarray(runs, dtype=np.intp)
    gid = runs * N_STRATEGIES + ks
    size = n_runs * N_STRATEGIES
    imp = np.asarray(improvements, dtype=float)
    count = np.bincount(gid, minlength=size)
    total = np.bincount(gid, weights=imp, minlength=size)
    tg = total[gid]
    w = np.where(tg > 0, imp / np.where(tg > 0, tg, 1.0), 1.0 / count[gid])
    hit = np.flatnonzero(count)
    mf = state.mf.reshape(size, state.memory_size)
    mcr = state.mcr.reshape(size, state.memory_size)
    cursor = state.cursor.reshape(size)
    pos = cursor[hit]
    for vals, mem in ((s_f, mf), (s_cr, mcr)):
        vals = np.asarray(vals, dtype=float)
        ws = w * vals
        den = np.bincount(gid, weights=ws, minlength=size)[hit]
        num = np.bincount(gid, weights=ws * vals, minlength=size)[hit]
        mem[hit, pos] = np.where(den != 0, num / np.where(den != 0, den, 1.0), 0.0)
    cursor[hit] = (pos + 1) % state.memory_size
    return state


# mutation

def _per_row(F, x):
    F = np.asarray(F, dtype=float)
    return F[..., None] if F.ndim and F.ndim == np.ndim(x) - 1 else F


def mutate_current_to_best(x, x_best, x_r1, x_r2, F):
    """u = x + F (x_best - x) + F (x_r1 - x_r2); ``x_best`` is the Qbest or pbest donor."""
    x = np.asarray(x, dtype=float)
    F = _per_row(F, x)
    return x + F * (np.asarray(x_best) - x) + F * (np.asarray(x_r1) - np.asarray(x_r2))


# Qbest (subpopulation best) and pbest donors share the same arithmetic
mutate_current_to_qbest = mutate_current_to_best


def mutate_rand1(x_r1, x_r2, x_r3, F):
    """u = x_r1 + F (x_r2 - x_r3)."""
    x_r1 = np.asarray(x_r1, dtype=float)
    F = _per_row(F, x_r1)
    return x_r1 + F * (np.asarray(x_r2) - np.asarray(x_r3))


def best_donors_from_uniform(u1, u2, targets, pop_size, archive_size=0):
    """Donor indices for current-to-best/1 from two uniform arrays.

    ``r1`` indexes the population, ``r2`` the population followed by the
    archive; ``r1``, ``r2`` and the target are pairwise distinct.
    ``archive_size`` may be an array broadcasting against ``targets``.
    """
    targets = np.asarray(targets)
    r1 = _skip(_uniform_index(u1, pop_size - 1), [targets])
    r2 = _uniform_index(u2, pop_size + np.asarray(archive_size) - 2)
    r2 = _skip(r2, [np.minimum(targets, r1), np.maximum(targets, r1)])
    return r1, r2


def draw_best_donors(rng, targets, pop_size, archive_size=0):
    """Donor indices for current-to-best/1 (see :func:`best_donors_from_uniform`)."""
    if pop_size < 3:
        raise InsufficientPopulationError(f"current-to-best/1 needs |P| >= 3, got {pop_size}")
    targets = np.asarray(targets)
    return best_donors_from_uniform(
        rng.random(targets.shape), rng.random(targets.shape), targets, pop_size, archive_size
    )


def _skip(r, excluded):
    # shift an index drawn from range(n - len(excluded)) past the excluded
    # values, which must be passed in ascending order
    for e in excluded:
        r = r + (r >= e)
    return r


def rand1_donors_from_uniform(u, positions, group_size):
    """Three distinct indices in ``range(group_size)``, none equal to ``positions``.

    ``u`` has a trailing axis of 3 uniforms per target; the ordered triple
    is uniform over all admissible ones.
    """
    u = np.asarray(u)
    positions = np.asarray(positions)
    a = _skip(_uniform_index(u[..., 0], group_size - 1), [positions])
    lo, hi = np.minimum(positions, a), np.maximum(positions, a)
    b = _skip(_uniform_index(u[..., 1], group_size - 2), [lo, hi])
    first, last = np.minimum(lo, b), np.maximum(hi, b)
    middle = lo + hi + b - first - last
    c = _skip(_uniform_index(u[..., 2], group_size - 3), [first, middle, last])
    return a, b, c


def draw_rand1_donors(rng, positions, group_size):
    """Three mutually distinct indices in ``range(group_size)``, all != position."""
    if group_size < 4:
        raise InsufficientPopulationError(f"rand/1 needs a group of >= 4, got {group_size}")
    positions = np.atleast_1d(np.asarray(positions))
    return rand1_donors_from_uniform(rng.random(positions.shape + (3,)), positions, group_size)


# crossover; ``draws`` holds one uniform per coordinate, ``first`` a
# uniform coordinate index (j_rand for binomial, block start for exponential)

def binomial_mask(draws, first, cr):
    mask = draws <= np.asarray(cr)[..., None]
    np.put_along_axis(mask, np.asarray(first)[..., None], True, axis=-1)
    return mask


def exponential_mask(draws, first, cr):
    """Cyclic block starting at ``first``; it grows while draws stay below CR."""
    d = draws.shape[-1]
    run = np.cumprod(draws[..., 1:] < np.asarray(cr)[..., None], axis=-1)
    length = 1 + run.sum(axis=-1)
    offset = (np.arange(d) - np.asarray(first)[..., None]) % d
    return offset < length[..., None]


def _crossover(mask_fn, x, u, CR, rng):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = x.shape[-1]
    lead = x.shape[:-1]
    cr = np.broadcast_to(np.asarray(CR, dtype=float), lead)
    mask = mask_fn(rng.random(x.shape), _uniform_index(rng.random(lead), d), cr)
    return np.where(mask, u, x)


def crossover_binomial(x, u, CR, rng):
    """Take u_j where rand_j <= CR or j == j_rand, else x_j."""
    return _crossover(binomial_mask, x, u, CR, rng)


def crossover_exponential(x, u, CR, rng):
    """Copy a contiguous (cyclic) block of u into x.

    The block starts at a uniform index and grows while successive uniform
    draws stay below CR, up to the full dimension.
    """
    return _crossover(exponential_mask, x, u, CR, rng)


def crossover(kind, x, u, CR, rng):
    if kind == "binomial":
        return crossover_binomial(x, u, CR, rng)
    if kind == "exponential":
        return crossover_exponential(x, u, CR, rng)
    raise ValueError(f"unknown crossover {kind!r}")


def crossover_mixed(x, u, cr, exponential, draws, first):
    """Row-wise crossover: exponential where ``exponential`` is set, binomial elsewhere."""
    mask = np.where(
        np.asarray(exponential)[..., None],
        exponential_mask(draws, first, cr),
        binomial_mask(draws, first, cr),
    )
    return np.where(mask, u, x)


# population size, archive, bounds

@dataclass(frozen=True)
class PopSizeSchedule:
    n_initial: int
    n_final: int
    t_max: int

    def __post_init__(self):
        if self.n_final > self.n_initial:
            raise ValueError("n_final must not exceed n_initial")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")


def required_pop_size(t, sched: PopSizeSchedule) -> int:
    """Linearly interpolated, rounded population size at generation ``t``."""
    if sched.t_max == 0:
        return sched.n_final if t > 0 else sched.n_initial
    if not 0 <= t <= sched.t_max:
        raise ValueError(f"generation {t} outside 0..{sched.t_max}")
    return int(round(sched.n_initial - t / sched.t_max * (sched.n_initial - sched.n_final)))


def keep_smallest(keys, k):
    """Boolean mask of the ``k`` smallest keys in each row (distinct keys assumed)."""
    keys = np.asarray(keys)
    if k >= keys.shape[-1]:
        return np.ones(keys.shape, dtype=bool)
    if k <= 0:
        return np.zeros(keys.shape, dtype=bool)
    return keys < np.partition(keys, k, axis=-1)[..., k : k + 1]


def smallest_keys(keys, k):
    """Column indices of the ``k`` smallest entries per row, in ascending key order."""
    keys = np.asarray(keys)
    if k >= keys.shape[-1]:
        return np.argsort(keys, axis=-1)
    part = np.argpartition(keys, k - 1, axis=-1)[..., :k]
    order = np.argsort(np.take_along_axis(keys, part, axis=-1), axis=-1)
    return np.take_along_axis(part, order, axis=-1)


def archive_cap(factor: float, pop_size: int) -> int:
    return max(int(round(factor * pop_size)), 0)


def trim_archive(archive, cap, rng):
    """Keep a uniformly random subset of ``cap`` rows (in random order)."""
    archive = np.asarray(archive)
    cap = max(int(cap), 0)
    if len(archive) <= cap:
        return archive
    return archive[rng.random(len(archive)).argsort()[:cap]]


def archive_insert_and_trim(archive, x, cap, rng):
    """Append row(s) ``x`` then trim to ``cap``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    archive = np.asarray(archive, dtype=float).reshape(-1, x.shape[1])
    return trim_archive(np.vstack([archive, x]), cap, rng)


def repair_bounds(y, parent, lower, upper):
    """Move out-of-box components halfway between the parent and the violated bound."""
    y = np.asarray(y, dtype=float)
    parent = np.asarray(parent, dtype=float)
    y = np.where(y < lower, (lower + parent) / 2.0, y)
    y = np.where(y > upper, (upper + parent) / 2.0, y)
    return y
