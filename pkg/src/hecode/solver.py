"""HECO-DE: differential evolution over weighted helper and equivalent objectives.

Each generation draws a random subpopulation Q of ``lam`` members. Member i
of Q (in draw order) is the target of subproblem i, whose scalar objective
is ``w1 * e~ + w2 * v + w3 * f`` over min-max normalized components. The
weights move from favouring f (helper) to favouring (e~, v) (equivalent)
as generations pass.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import de
from .objectives import (
    WeightScheduleConfig,
    e_tilde,
    feasibility_rule_e,
    min_max_normalize,
)
from .problems import ConstrainedProblem, EvaluatedPoint, evaluate_batch, get_problem, make_point

HECO_VARIANTS = ("HECO-DE", "HCO-DE", "HECO-DE-FR")
SOCO_VARIANTS = ("SOCO-FR", "SOCO-DP")
ALGORITHMS = HECO_VARIANTS + SOCO_VARIANTS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Settings for one seeded run.

    ``pop_initial`` defaults to ``max(12 * D, 10 * lam)`` and ``pop_final``
    to ``lam``. ``strategy_n0`` is the pseudo-count of the strategy
    competition, not a population size.
    """

    problem: str = ""
    variant: str = "HECO-DE"
    fes_max: int = 20_000
    lam: int = 20
    gamma: float = 0.1
    pop_initial: int | None = None
    pop_final: int | None = None
    seed: int = 0
    memory_size: int = 5
    strategy_n0: float = 2.0
    delta: float = 1.0 / 20.0
    archive_factor: float = 4.0
    p_best: float = 0.1

    def resolved(self, dim: int) -> "RunConfig":
        pop_initial = self.pop_initial if self.pop_initial is not None else max(12 * dim, 10 * self.lam)
        pop_final = self.pop_final if self.pop_final is not None else self.lam
        return replace(self, pop_initial=pop_initial, pop_final=pop_final)


@dataclass
class RunRecord:
    problem: str
    variant: str
    seed: int
    best_feasible: EvaluatedPoint | None
    best_any: EvaluatedPoint
    trace: list = field(default_factory=list)
    final_x: np.ndarray | None = None
    final_f: np.ndarray | None = None
    final_v: np.ndarray | None = None
    fes: int = 0
    generations: int = 0

    @property
    def best(self) -> EvaluatedPoint:
        """Best feasible point if one was found, else the least violating one."""
        return self.best_feasible if self.best_feasible is not None else self.best_any

    @property
    def feasible(self) -> bool:
        return self.best_feasible is not None


def components(f, v, variant="HECO-DE"):
    """Stack of normalized (equivalent, v, f) components, each along the last axis.

    The first component is e~ for HECO-DE, f itself for HCO-DE and the
    feasibility-rule scalar for HECO-DE-FR.
    """
    if variant == "HECO-DE":
        first = e_tilde(f, v)
    elif variant == "HCO-DE":
        first = f
    elif variant == "HECO-DE-FR":
        first = feasibility_rule_e(f, v)
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    out = np.empty((3,) + np.shape(f))
    out[0], out[1], out[2] = first, v, f
    return min_max_normalize(out)


def _span(lo, hi):
    span = hi - lo
    # a constant set normalizes to 0: zero numerator over an infinite span
    span[span <= 0] = np.inf
    return span


def augmented_components(fq, vq, fy, vy, variant="HECO-DE"):
    """Normalized components of x_i and y_i over Q' = Q + {y_i}, for every i.

    ``fq``/``vq`` describe Q (shape (..., lam)); ``fy``/``vy`` hold one
    trial per member. Returns ``(cx, cy)``, each shaped (3, ..., lam).
    The result is bit-identical to normalizing :func:`components` over the
    dense (lam, lam + 1) stack (see :func:`augmented_components_dense`)
    but needs only O(lam) work per subproblem: each Q' differs from Q by a
    single point, so its extremes follow from Q's extremes and the trial.
    """
    fq, vq, fy, vy = (np.asarray(a, dtype=float) for a in (fq, vq, fy, vy))
    f_lo = np.minimum(fq.min(axis=-1, keepdims=True), fy)
    f_hi = np.maximum(fq.max(axis=-1, keepdims=True), fy)
    v_lo = np.minimum(vq.min(axis=-1, keepdims=True), vy)
    v_hi = np.maximum(vq.max(axis=-1, keepdims=True), vy)
    f_span, v_span = _span(f_lo, f_hi), _span(v_lo, v_hi)
    cx = np.empty((3,) + fq.shape)
    cy = np.empty((3,) + fq.shape)
    cx[1], cy[1] = (vq - v_lo) / v_span, (vy - v_lo) / v_span
    cx[2], cy[2] = (fq - f_lo) / f_span, (fy - f_lo) / f_span
    feas_q, feas_y = vq == 0.0, vy == 0.0
    if variant == "HCO-DE":
        cx[0], cy[0] = cx[2], cy[2]
    elif variant == "HECO-DE":
        # f of the best member of Q'; min e~ is 0 (the best member itself)
        best_feasible = np.minimum(
            np.where(feas_q, fq, np.inf).min(axis=-1, keepdims=True), np.where(feas_y, fy, np.inf)
        )
        j = vq.argmin(axis=-1)[..., None]
        least_violating = np.where(
            vy < np.take_along_axis(vq, j, axis=-1), fy, np.take_along_axis(fq, j, axis=-1)
        )
        any_feasible = feas_q.any(axis=-1, keepdims=True) | feas_y
        f_best = np.where(any_feasible, best_feasible, least_violating)
        e_span = _span(0.0, np.maximum(f_hi - f_best, f_best - f_lo))
        cx[0], cy[0] = np.abs(fq - f_best) / e_span, np.abs(fy - f_best) / e_span
    elif variant == "HECO-DE-FR":
        inf = np.inf
        worst = np.maximum(
            np.where(feas_q, fq, -inf).max(axis=-1, keepdims=True), np.where(feas_y, fy, -inf)
        )
        worst = np.where(np.isfinite(worst), worst, 0.0)
        ex = np.where(feas_q, fq, vq + worst)
        ey = np.where(feas_y, fy, vy + worst)
        lo = np.minimum(
            np.minimum(np.where(feas_q, fq, inf).min(axis=-1, keepdims=True), ey),
            np.where(feas_q, inf, vq).min(axis=-1, keepdims=True) + worst,
        )
        hi = np.maximum(
            np.maximum(np.where(feas_q, fq, -inf).max(axis=-1, keepdims=True), ey),
            np.where(feas_q, -inf, vq).max(axis=-1, keepdims=True) + worst,
        )
        span = _span(lo, hi)
        cx[0], cy[0] = (ex - lo) / span, (ey - lo) / span
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    return cx, cy


def augmented_components_dense(fq, vq, fy, vy, variant="HECO-DE"):
    """Reference for :func:`augmented_components` that builds every Q' explicitly."""
    fq, vq, fy, vy = (np.asarray(a, dtype=float) for a in (fq, vq, fy, vy))
    lam = fq.shape[-1]
    shape = fq.shape + (lam + 1,)
    fe, ve = np.empty(shape), np.empty(shape)
    fe[..., :lam], fe[..., lam] = fq[..., None, :], fy
    ve[..., :lam], ve[..., lam] = vq[..., None, :], vy
    C = components(fe, ve, variant)
    i = np.arange(lam)
    return C[..., i, i], C[..., lam]


def _resolve_problem(problem):
    return get_problem(problem) if isinstance(problem, str) else problem


def _validate(problem, cfg):
    if cfg.fes_max < 1:
        raise ConfigError("fes_max must be positive")
    if cfg.lam < 4:
        raise ConfigError("lam must be >= 4 (rand/1 draws three donors besides the target)")
    if cfg.pop_initial > cfg.fes_max:
        raise ConfigError("pop_initial exceeds the evaluation budget")
    if cfg.lam > cfg.pop_initial:
        raise ConfigError(f"lam={cfg.lam} exceeds the initial population {cfg.pop_initial}")
    if cfg.pop_final < cfg.lam:
        raise ConfigError(f"pop_final={cfg.pop_final} is below lam={cfg.lam}; Q could not be drawn")
    if cfg.pop_final > cfg.pop_initial:
        raise ConfigError("pop_final must not exceed pop_initial")


class _BatchTracker:
    """Best feasible and least-violating points seen so far, one slot per run."""

    def __init__(self, runs: int, dim: int, m: int):
        self.has_feasible = np.zeros(runs, dtype=bool)
        self.feas_f = np.full(runs, np.inf)
        self.feas_x = np.zeros((runs, dim))
        self.feas_viol = np.zeros((runs, m))
        # least v, ties broken by f; equals the feasible best once one exists
        self.any_f = np.full(runs, np.inf)
        self.any_v = np.full(runs, np.inf)
        self.any_x = np.zeros((runs, dim))
        self.any_viol = np.zeros((runs, m))
        self._runs = np.arange(runs)

    def update(self, X, F, VIOL, V):
        r = self._runs
        key = np.where(V == 0.0, F, np.inf)
        j = key.argmin(axis=1)
        fj = key[r, j]
        b = np.flatnonzero(fj < self.feas_f)
        if b.size:
            jb = j[b]
            self.has_feasible[b] = True
            self.feas_f[b] = fj[b]
            self.feas_x[b] = X[b, jb]
            self.feas_viol[b] = VIOL[b, jb]
        j = np.lexsort((F, V), axis=-1)[:, 0]
        vj, fj = V[r, j], F[r, j]
        b = np.flatnonzero((vj < self.any_v) | ((vj == self.any_v) & (fj < self.any_f)))
        if b.size:
            jb = j[b]
            self.any_v[b] = vj[b]
            self.any_f[b] = fj[b]
            self.any_x[b] = X[b, jb]
            self.any_viol[b] = VIOL[b, jb]


def run_heco_de(problem: ConstrainedProblem | str, cfg: RunConfig) -> RunRecord:
    """One seeded run of HECO-DE (or the variant named in ``cfg.variant``)."""
    return run_heco_de_batch(problem, cfg, [cfg.seed])[0]


def run_heco_de_batch(problem: ConstrainedProblem | str, cfg: RunConfig, seeds) -> list[RunRecord]:
    """Independent runs of one configuration, one per seed, advanced in lockstep.

    Each run owns its generator and consumes the same number of draws per
    generation whatever the other runs do, so ``run_heco_de_batch(p, cfg,
    [s, ...])[0]`` is bit-identical to ``run_heco_de(p, replace(cfg,
    seed=s))``. ``cfg.seed`` itself is ignored here.
    """
    problem = _resolve_problem(problem)
    if cfg.variant not in HECO_VARIANTS:
        raise ConfigError(f"unknown variant {cfg.variant!r}")
    cfg = cfg.resolved(problem.dim)
    _validate(problem, cfg)
    seeds = [int(s) for s in seeds]
    runs = len(seeds)
    if runs == 0:
        return []
    gens = [np.random.default_rng(s) for s in seeds]
    lower, upper = problem.lower, problem.upper
    lam, dim, n = cfg.lam, problem.dim, cfg.pop_initial
    t_max = (cfg.fes_max - n) // lam
    R = np.arange(runs)[:, None]

    X = np.empty((runs, n, dim))
    for r, g in enumerate(gens):
        X[r] = lower + (upper - lower) * g.random((n, dim))
    F, VIOL, V = evaluate_batch(problem, X.reshape(-1, dim))
    m = VIOL.shape[1]
    F, VIOL, V = F.reshape(runs, n), VIOL.reshape(runs, n, m), V.reshape(runs, n)
    fes = n
    tracker = _BatchTracker(runs, dim, m)
    tracker.update(X, F, VIOL, V)
    trace_f = np.empty((t_max + 1, runs))
    trace_v = np.empty((t_max + 1, runs))
    trace_f[0], trace_v[0] = tracker.any_f, tracker.any_v

    state = de.StrategyState(
        memory_size=cfg.memory_size, n0=cfg.strategy_n0, delta=cfg.delta, batch=(runs,)
    )
    weights_cfg = WeightScheduleConfig(lam=lam, t_max=max(t_max, 1), gamma=cfg.gamma)
    sizes = de.PopSizeSchedule(cfg.pop_initial, cfg.pop_final, t_max)
    cap_prev = de.archive_cap(cfg.archive_factor, n)
    A = np.empty((runs, cap_prev + lam, dim))
    alen = np.zeros(runs, dtype=np.intp)
    rows = np.arange(lam)
    share = (np.arange(1, lam + 1) / lam)[:, None]
    normals = np.empty((runs, lam))

    for t in range(1, t_max + 1):
        target = de.required_pop_size(t, sizes)
        cap = de.archive_cap(cfg.archive_factor, target)
        # the block size depends on t only, never on a run's own history
        width = cap_prev + lam
        parts = [n, lam, lam, lam, lam, lam, 3 * lam, lam, lam * dim, width, n]
        block = np.empty((runs, sum(parts)))
        for r, g in enumerate(gens):
            g.random(out=block[r])
            g.standard_normal(out=normals[r])
        u_q, u_k, u_slot, u_f, u_r1, u_r2, u_keys, u_first, u_draws, u_arch, u_shrink = np.split(
            block, np.cumsum(parts)[:-1], axis=1
        )

        # same arithmetic as weight_matrix, as (lam, 1) columns
        progress = t / weights_cfg.t_max
        w1 = progress * share
        w2 = w1 + cfg.gamma
        w3 = (1.0 - progress) * (1.0 - share)
        v1, v2, v3 = w1[:, 0], w2[:, 0], w3[:, 0]
        W = np.hstack([w1, w2, w3])

        # Q in draw order: member i is the target of subproblem i
        q_idx = de.smallest_keys(u_q, lam)
        Xq, Fq, Vq = X[R, q_idx], F[R, q_idx], V[R, q_idx]

        # Qbest of subproblem i: argmin of f_i over Q, normalized over Q alone
        cq = components(Fq, Vq, cfg.variant)
        qbest = (W @ cq.transpose(1, 0, 2)).argmin(axis=-1)

        ks = de.strategy_from_uniform(state.q, u_k)
        slot = (u_slot * cfg.memory_size).astype(np.intp)
        Fs, CRs = de.f_cr_from_uniform(state.mf[R, ks, slot], state.mcr[R, ks, slot], u_f, normals)

        # both mutations are built for every target, then picked per strategy
        r1, r2 = de.best_donors_from_uniform(u_r1, u_r2, q_idx, n, alen[:, None])
        top = int(alen.max())
        pool = np.concatenate([X, A[:, :top]], axis=1) if top else X
        a, b, c = de.rand1_donors_from_uniform(u_keys.reshape(runs, lam, 3), rows, lam)
        U = np.where(
            (ks < 2)[..., None],
            de.mutate_current_to_qbest(Xq, Xq[R, qbest], X[R, r1], pool[R, r2], Fs),
            de.mutate_rand1(Xq[R, a], Xq[R, b], Xq[R, c], Fs),
        )
        first = (u_first * dim).astype(np.intp)
        Y = de.crossover_mixed(Xq, U, CRs, ks % 2 == 1, u_draws.reshape(runs, lam, dim), first)
        Y = de.repair_bounds(Y, Xq, lower, upper)
        Fy, VIOLy, Vy = evaluate_batch(problem, Y.reshape(-1, dim))
        Fy, VIOLy, Vy = Fy.reshape(runs, lam), VIOLy.reshape(runs, lam, m), Vy.reshape(runs, lam)
        fes += lam
        tracker.update(Y, Fy, VIOLy, Vy)

        # subproblem i compares x_i with y_i, normalized over Q + {y_i}
        cx, cy = augmented_components(Fq, Vq, Fy, Vy, cfg.variant)
        fi_x = v1 * cx[0] + v2 * cx[1] + v3 * cx[2]
        fi_y = v1 * cy[0] + v2 * cy[1] + v3 * cy[2]
        won = fi_y < fi_x

        wr, wi = np.nonzero(won)
        if wr.size:
            # replaced parents go to the archive, trials take their slots
            slot_in_archive = alen[wr] + np.cumsum(won, axis=1)[wr, wi] - 1
            A[wr, slot_in_archive] = Xq[wr, wi]
            alen += won.sum(axis=1)
            dest = q_idx[wr, wi]
            X[wr, dest], F[wr, dest], V[wr, dest] = Y[wr, wi], Fy[wr, wi], Vy[wr, wi]
            kw = ks[wr, wi]
            state.counts += np.bincount(
                wr * de.N_STRATEGIES + kw, minlength=runs * de.N_STRATEGIES
            ).reshape(runs, de.N_STRATEGIES)
            de.update_all_memories(state, kw, Fs[wr, wi], CRs[wr, wi], fi_x[wr, wi] - fi_y[wr, wi], runs=wr)
        de.update_strategy_probabilities(state)

        if n > target:
            # a random subset of target members survives, order preserved
            keep = de.keep_smallest(u_shrink, target)
            X, F, V = X[keep].reshape(runs, target, dim), F[keep].reshape(runs, target), V[keep].reshape(runs, target)
            n = target
        over = np.flatnonzero(alen > cap)
        if over.size:
            # over-full archives keep a random subset of cap rows
            keys = u_arch[over]
            keys[np.arange(width) >= alen[over][:, None]] = np.inf
            keep = de.keep_smallest(keys, cap)
            # kept rows beyond cap fill the dropped slots below cap, pairwise per run
            hole_r, hole_i = np.nonzero(~keep[:, :cap])
            move_r, move_i = np.nonzero(keep[:, cap:])
            A[over[hole_r], hole_i] = A[over[move_r], move_i + cap]
            alen[over] = cap
        cap_prev = cap
        trace_f[t], trace_v[t] = tracker.any_f, tracker.any_v

    fes_axis = cfg.pop_initial + lam * np.arange(t_max + 1)
    records = []
    for r, seed in enumerate(seeds):
        best_feasible = None
        if tracker.has_feasible[r]:
            best_feasible = make_point(problem, tracker.feas_x[r], tracker.feas_f[r], tracker.feas_viol[r])
        records.append(
            RunRecord(
                problem=problem.name,
                variant=cfg.variant,
                seed=seed,
                best_feasible=best_feasible,
                best_any=make_point(problem, tracker.any_x[r], tracker.any_f[r], tracker.any_viol[r]),
                trace=list(zip(fes_axis.tolist(), trace_f[:, r].tolist(), trace_v[:, r].tolist())),
                final_x=X[r].copy(),
                final_f=F[r].copy(),
                final_v=V[r].copy(),
                fes=fes,
                generations=t_max,
            )
        )
    return records


def run_variant(problem, cfg: RunConfig) -> RunRecord:
    if cfg.variant not in HECO_VARIANTS:
        raise ConfigError(f"unknown variant {cfg.variant!r}; expected one of {HECO_VARIANTS}")
    return run_heco_de(problem, cfg)


def run_algorithm(problem, cfg: RunConfig) -> RunRecord:
    """Dispatch on ``cfg.variant`` across HECO variants and single-objective baselines."""
    if cfg.variant in HECO_VARIANTS:
        return run_heco_de(problem, cfg)
    if cfg.variant in SOCO_VARIANTS:
        from .baselines import run_soco_generic

        tag = "feasibility" if cfg.variant == "SOCO-FR" else "death-penalty"
        return run_soco_generic(problem, tag, cfg)
    raise ConfigError(f"unknown algorithm {cfg.variant!r}; expected one of {ALGORITHMS}")


def _run_group(item):
    cfg, seeds = item
    if cfg.variant in HECO_VARIANTS:
        return run_heco_de_batch(cfg.problem, cfg, seeds)
    return [run_algorithm(cfg.problem, replace(cfg, seed=s)) for s in seeds]


def run_many(configs, jobs: int = 1):
    """Run every config (problem looked up by name); results come back in input order.

    Configs that differ only in their seed run as one lockstep batch, split
    into at most ``jobs`` chunks for the process pool. Batching does not
    change any result.
    """
    configs = list(configs)
    if jobs is None or jobs <= 0:
        jobs = os.cpu_count() or 1
    groups = {}
    for pos, cfg in enumerate(configs):
        groups.setdefault(replace(cfg, seed=0), []).append(pos)
    items, slots = [], []
    for key, positions in groups.items():
        n_chunks = max(1, min(jobs, len(positions)))
        for chunk in np.array_split(np.array(positions), n_chunks):
            items.append((key, [configs[i].seed for i in chunk]))
            slots.append(chunk.tolist())
    if jobs == 1 or len(items) <= 1:
        results = [_run_group(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_group, items))
    out = [None] * len(configs)
    for chunk, recs in zip(slots, results):
        for i, rec in zip(chunk, recs):
            out[i] = rec
    return out
