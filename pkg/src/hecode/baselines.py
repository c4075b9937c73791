"""Single-objective baselines and the wide-gap hitting-time experiment.

The wide-gap experiment runs on ``example2``, whose feasible set is
[0, 1000] U [2000, 3000]. Starting on the right plateau, an elitist search
that ranks points by a single equivalent objective never crosses the
infeasible gap (1000, 2000). A two-individual search that also keeps the
raw objective f walks through it.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import de
from .objectives import death_penalty_e, feasibility_rule_e
from .problems import ConstrainedProblem, evaluate_batch, get_problem, make_point
from .solver import ConfigError, RunConfig, RunRecord, _BatchTracker, _resolve_problem

EQUIVALENT_FUNCTIONS = {"feasibility": feasibility_rule_e, "death-penalty": death_penalty_e}

# penalty offset of the SOCO equivalent objective; above every feasible f
SOCO_OFFSET = 3000.0
_CHUNK = 4096


@dataclass(frozen=True)
class WideGapConfig:
    """One wide-gap study. Steps are ``x + U(-step, step)``; trial ``k`` uses seed ``(seed, k)``."""

    start_x: float = 2000.0
    target: tuple = (0.0, 1000.0)
    max_generations: int = 100_000
    trials: int = 50
    seed: int = 0
    step: float = 1.0
    problem: str = "example2"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be >= 0")
        if not self.step > 0:
            raise ConfigError("step must be positive")
        lo, hi = self.target
        if lo > hi:
            raise ConfigError("target interval is empty")
        p = get_problem(self.problem)
        if p.dim != 1 or not p.lower[0] <= self.start_x <= p.upper[0]:
            raise ConfigError("start_x must lie in the box of a one-dimensional problem")


@dataclass(frozen=True)
class HittingTimeResult:
    """Per-trial first generation inside the target; -1 marks a censored trial."""

    arm: str
    hit_generation: np.ndarray
    max_generations: int

    @property
    def censored(self) -> np.ndarray:
        return self.hit_generation < 0

    @property
    def successes(self) -> int:
        return int(np.count_nonzero(~self.censored))

    @property
    def mean(self) -> float | None:
        hits = self.hit_generation[~self.censored]
        return float(hits.mean()) if hits.size else None

    @property
    def median(self) -> float | None:
        hits = self.hit_generation[~self.censored]
        return float(np.median(hits)) if hits.size else None


def _trial_streams(cfg: WideGapConfig, draws_per_generation: int):
    """Yield (first_generation, u) blocks with u shaped (trials, chunk, draws)."""
    gens = [np.random.default_rng([cfg.seed, k]) for k in range(cfg.trials)]
    t = 0
    while t < cfg.max_generations:
        size = min(_CHUNK, cfg.max_generations - t)
        u = np.empty((cfg.trials, size, draws_per_generation))
        for k, g in enumerate(gens):
            g.random(out=u[k])
        yield t, u
        t += size


def _soco_e(f, v):
    return np.where(v == 0.0, f, v + SOCO_OFFSET)


def _evaluate(problem: ConstrainedProblem, x):
    """(f, v) of candidate positions; points outside the box get NaN."""
    inside = (x >= problem.lower[0]) & (x <= problem.upper[0])
    f = np.full(x.shape, np.nan)
    v = np.full(x.shape, np.nan)
    if inside.any():
        fi, _, vi = evaluate_batch(problem, x[inside].reshape(-1, 1))
        f[inside], v[inside] = fi, vi
    return f, v


def run_soco_elitist(cfg: WideGapConfig) -> HittingTimeResult:
    """(1+1) elitist search on e = f if feasible else v + 3000.

    The offspring replaces the parent only when strictly better; offspring
    outside the box are discarded.
    """
    problem = get_problem(cfg.problem)
    lo, hi = cfg.target
    x = np.full(cfg.trials, float(cfg.start_x))
    f, v = _evaluate(problem, x)
    e = _soco_e(f, v)
    hit = np.where((x >= lo) & (x <= hi), 0, -1)
    for t0, u in _trial_streams(cfg, 1):
        if (hit >= 0).all():
            break
        for j in range(u.shape[1]):
            y = x + cfg.step * (2.0 * u[:, j, 0] - 1.0)
            fy, vy = _evaluate(problem, y)
            ey = _soco_e(fy, vy)
            # NaN (outside the box) never compares as better
            acc = ey < e
            x, e = np.where(acc, y, x), np.where(acc, ey, e)
            new = (hit < 0) & (x >= lo) & (x <= hi)
            hit[new] = t0 + j + 1
    return HittingTimeResult("SOCO-elitist", hit, cfg.max_generations)


def run_heco_two_weight(cfg: WideGapConfig) -> HittingTimeResult:
    """Two elitist individuals under the weights (1, 0) and (0, 1) on (e, f).

    Both individuals mutate each generation. Individual 1 keeps the best of
    {itself, both offspring} under e; individual 2 does the same under f.
    """
    problem = get_problem(cfg.problem)
    lo, hi = cfg.target
    x = np.full((cfg.trials, 2), float(cfg.start_x))
    f, v = _evaluate(problem, x)
    # column 0 ranks by e, column 1 by f; NaN keys rank last
    keys = np.stack([_soco_e(f[:, 0], v[:, 0]), f[:, 1]], axis=1)
    inside = lambda z: ((z >= lo) & (z <= hi)).any(axis=1)  # noqa: E731
    hit = np.where(inside(x), 0, -1)
    rows = np.arange(cfg.trials)
    for t0, u in _trial_streams(cfg, 2):
        if (hit >= 0).all():
            break
        for j in range(u.shape[1]):
            y = x + cfg.step * (2.0 * u[:, j, :] - 1.0)
            fy, vy = _evaluate(problem, y)
            cand_x = np.concatenate([x, y], axis=1)
            ey = _soco_e(fy, vy)
            for col, cand in ((0, ey), (1, fy)):
                c = np.column_stack([keys[:, col], np.nan_to_num(cand, nan=np.inf)])
                best = c.argmin(axis=1)
                better = c[rows, best] < keys[:, col]
                pick = np.where(best == 0, col, 2 + best - 1)
                x_new = cand_x[rows, pick]
                keys[:, col] = np.where(better, c[rows, best], keys[:, col])
                x[:, col] = np.where(better, x_new, x[:, col])
            new = (hit < 0) & inside(x)
            hit[new] = t0 + j + 1
    return HittingTimeResult("HECO-two-weight", hit, cfg.max_generations)


def hitting_time_csv(results) -> str:
    """CSV with columns arm, trial, hit_generation, censored (empty hit when censored)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arm", "trial", "hit_generation", "censored"])
    for res in results:
        for k, h in enumerate(res.hit_generation.tolist()):
            w.writerow([res.arm, k, "" if h < 0 else h, int(h < 0)])
    return buf.getvalue()


# Pareto front of min (f, v)

def pareto_mask(f, v) -> np.ndarray:
    """Non-dominated points of min (f, v) in O(n log n)."""
    f = np.asarray(f, dtype=float)
    v = np.asarray(v, dtype=float)
    order = np.lexsort((v, f))
    fs, vs = f[order], v[order]
    # a point survives iff its v beats every point with strictly smaller f,
    # and it is the first (lowest v) among points with equal f
    prev_min = np.minimum.accumulate(np.concatenate([[np.inf], vs[:-1]]))
    first_of_f = np.concatenate([[True], fs[1:] != fs[:-1]])
    group_start = np.maximum.accumulate(np.where(first_of_f, np.arange(fs.size), 0))
    keep = (vs < prev_min[group_start]) & (vs == vs[group_start])
    mask = np.zeros(f.size, dtype=bool)
    mask[order] = keep
    return mask


def pareto_mask_bruteforce(f, v) -> np.ndarray:
    """Reference O(n^2) dominance filter."""
    f = np.asarray(f, dtype=float)[:, None]
    v = np.asarray(v, dtype=float)[:, None]
    dominated = (f.T <= f) & (v.T <= v) & ((f.T < f) | (v.T < v))
    return ~dominated.any(axis=1)


def pareto_grid(problem="example1", step=0.05):
    """Grid points of the box and the non-dominated mask of min (f, v)."""
    problem = _resolve_problem(problem)
    lo, hi = float(problem.lower[0]), float(problem.upper[0])
    n = int(round((hi - lo) / step))
    x = lo + (hi - lo) * np.arange(n + 1) / n
    f, _, v = evaluate_batch(problem, x[:, None])
    return x, pareto_mask(f, v)


# generic single-objective baseline

def run_soco_generic(problem, equivalent: str, cfg: RunConfig) -> RunRecord:
    """Single-objective DE baseline minimizing one equivalent objective.

    Uses the same four strategies, memories, archive and population-size
    reduction as HECO-DE, but every member produces a trial each generation,
    current-to-pbest/1 draws its best donor from the top ``p_best`` share of
    the whole population, and a trial replaces its parent when its e-value,
    computed over parents and trials together, is no worse. Reduction removes
    the members with the worst e.
    """
    if equivalent not in EQUIVALENT_FUNCTIONS:
        raise ConfigError(f"unknown equivalent function {equivalent!r}; expected one of {sorted(EQUIVALENT_FUNCTIONS)}")
    equiv = EQUIVALENT_FUNCTIONS[equivalent]
    problem = _resolve_problem(problem)
    cfg = cfg.resolved(problem.dim)
    n0, n_final = cfg.pop_initial, cfg.pop_final
    if n_final < 4:
        raise ConfigError("pop_final must be >= 4 (rand/1 needs three donors besides the target)")
    if n_final > n0 or n0 > cfg.fes_max:
        raise ConfigError("need pop_final <= pop_initial <= fes_max")
    rng = np.random.default_rng(cfg.seed)
    lower, upper, dim = problem.lower, problem.upper, problem.dim

    X = lower + (upper - lower) * rng.random((n0, dim))
    F, VIOL, V = evaluate_batch(problem, X)
    fes = n0
    tracker = _BatchTracker(1, dim, VIOL.shape[1])
    tracker.update(X[None], F[None], VIOL[None], V[None])
    trace = [(fes, float(tracker.any_f[0]), float(tracker.any_v[0]))]
    state = de.StrategyState(memory_size=cfg.memory_size, n0=cfg.strategy_n0, delta=cfg.delta)
    A = np.empty((0, dim))
    generations = 0

    while fes < cfg.fes_max:
        n = len(X)
        m = min(n, cfg.fes_max - fes)
        targets = np.arange(m)
        e = equiv(F, V)
        ks = de.strategy_from_uniform(state.q, rng.random(m))
        Fs, CRs = de.sample_f_cr(state, ks, rng)
        n_top = max(2, int(round(cfg.p_best * n)))
        top = np.argsort(e, kind="stable")[:n_top]
        pbest = top[de._uniform_index(rng.random(m), n_top)]
        r1, r2 = de.draw_best_donors(rng, targets, n, len(A))
        a, b, c = de.draw_rand1_donors(rng, targets, n)
        pool = np.concatenate([X, A])
        xt = X[:m]
        U = np.where(
            (ks < 2)[:, None],
            de.mutate_current_to_best(xt, X[pbest], X[r1], pool[r2], Fs),
            de.mutate_rand1(X[a], X[b], X[c], Fs),
        )
        Y = de.crossover_mixed(xt, U, CRs, ks % 2 == 1, rng.random((m, dim)), de._uniform_index(rng.random(m), dim))
        Y = de.repair_bounds(Y, xt, lower, upper)
        Fy, VIOLy, Vy = evaluate_batch(problem, Y)
        fes += m
        tracker.update(Y[None], Fy[None], VIOLy[None], Vy[None])

        eu = equiv(np.concatenate([F, Fy]), np.concatenate([V, Vy]))
        ex, ey = eu[:m], eu[n:]
        better = ey < ex
        replace = ey <= ex
        if better.any():
            diff = ex[better] - ey[better]
            # an infeasible parent under death penalty has e = inf
            imp = np.where(np.isfinite(diff), diff, 1.0)
            de.record_successes(state, ks[better])
            de.update_all_memories(state, ks[better], Fs[better], CRs[better], imp)
            A = np.concatenate([A, xt[better]])
        X[:m][replace], F[:m][replace], V[:m][replace] = Y[replace], Fy[replace], Vy[replace]
        de.update_strategy_probabilities(state)

        target = int(round(n0 + (n_final - n0) * fes / cfg.fes_max))
        if n > target:
            worst_last = np.argsort(equiv(F, V), kind="stable")
            keep = np.sort(worst_last[:target])
            X, F, V = X[keep], F[keep], V[keep]
        A = de.trim_archive(A, de.archive_cap(cfg.archive_factor, len(X)), rng)
        generations += 1
        trace.append((fes, float(tracker.any_f[0]), float(tracker.any_v[0])))

    best_feasible = None
    if tracker.has_feasible[0]:
        best_feasible = make_point(problem, tracker.feas_x[0], tracker.feas_f[0], tracker.feas_viol[0])
    variant = "SOCO-FR" if equivalent == "feasibility" else "SOCO-DP"
    return RunRecord(
        problem=problem.name,
        variant=variant,
        seed=cfg.seed,
        best_feasible=best_feasible,
        best_any=make_point(problem, tracker.any_x[0], tracker.any_f[0], tracker.any_viol[0]),
        trace=trace,
        final_x=X.copy(),
        final_f=F.copy(),
        final_v=V.copy(),
        fes=fes,
        generations=generations,
    )
