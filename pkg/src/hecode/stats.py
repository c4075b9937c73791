"""Run statistics in the CEC reporting format, success rules and rank values."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .solver import RunRecord

STATS_COLUMNS = (
    "problem", "algorithm", "best", "median", "worst", "mean", "std",
    "SR", "c1", "c2", "c3", "vbar", "mean_vio",
)
SUCCESS_TOLERANCE = 1e-4
RANK_PRECISION = 1e-8
# violated-constraint count bands: > 1, (0.01, 1], (1e-4, 0.01]
C_THRESHOLDS = (1.0, 0.01, 1e-4)


def fmt(x) -> str:
    """Round-trip float text with '.' decimal, independent of locale."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def cec_key(record: RunRecord):
    """Sort key: feasible runs first by f, then infeasible runs by mean violation."""
    best = record.best
    if record.feasible:
        return (0, best.f)
    return (1, best.mean_violation)


def violation_counts(point) -> tuple[int, int, int]:
    viol = point.violations
    hi, mid, lo = C_THRESHOLDS
    return (
        int(np.count_nonzero(viol > hi)),
        int(np.count_nonzero((viol > mid) & (viol <= hi))),
        int(np.count_nonzero((viol > lo) & (viol <= mid))),
    )


@dataclass(frozen=True)
class ProblemStats:
    problem: str
    algorithm: str
    best: float
    median: float
    worst: float
    mean: float
    std: float
    SR: float
    c1: int
    c2: int
    c3: int
    vbar: float
    mean_vio: float

    @property
    def c(self) -> tuple[int, int, int]:
        return (self.c1, self.c2, self.c3)

    @property
    def median_feasible(self) -> bool:
        return self.vbar == 0.0

    def row(self) -> list[str]:
        return [getattr(self, k) if k in ("problem", "algorithm") else fmt(getattr(self, k)) for k in STATS_COLUMNS]


def aggregate_stats(records, problem: str | None = None, algorithm: str | None = None) -> ProblemStats:
    """Summarize the final best points of a set of runs.

    Runs are ordered with :func:`cec_key`; the median is the lower median
    (index ceil(n/2) - 1). Mean and std (population, ddof=0) are taken over
    the final objective values of all runs. c and vbar describe the median
    run; mean_vio averages the mean violation over all runs.
    """
    records = list(records)
    if not records:
        raise ValueError("aggregate_stats needs at least one record")
    ordered = sorted(records, key=cec_key)
    med = ordered[(len(ordered) - 1) // 2]
    f = np.array([r.best.f for r in records])
    c1, c2, c3 = violation_counts(med.best)
    return ProblemStats(
        problem=problem if problem is not None else records[0].problem,
        algorithm=algorithm if algorithm is not None else records[0].variant,
        best=float(ordered[0].best.f),
        median=float(med.best.f),
        worst=float(ordered[-1].best.f),
        mean=float(f.mean()),
        std=float(f.std()),
        SR=100.0 * sum(r.feasible for r in records) / len(records),
        c1=c1,
        c2=c2,
        c3=c3,
        vbar=float(med.best.mean_violation),
        mean_vio=float(np.mean([r.best.mean_violation for r in records])),
    )


def cec2006_success(record: RunRecord, f_star: float, tol: float = SUCCESS_TOLERANCE) -> bool:
    """A feasible best point within ``tol`` of the known optimum."""
    return record.best_feasible is not None and record.best_feasible.f - f_star <= tol


def success_rate(records, f_star: float) -> float:
    records = list(records)
    return 100.0 * sum(cec2006_success(r, f_star) for r in records) / len(records) if records else 0.0


def convergence_rate_series(trace, f0: float, f_star: float) -> list[float]:
    """R_t = 1 - |(f_t - f*) / (f0 - f*)|^(1/t) for t = 1, 2, ...

    ``trace`` holds f_1, f_2, ... (or (fes, f, v) tuples, whose f is used).
    """
    if f0 == f_star:
        raise ValueError("convergence rate undefined when f0 equals f_star")
    ft = np.array([p[1] if isinstance(p, (tuple, list)) else p for p in trace], dtype=float)
    t = np.arange(1, ft.size + 1)
    return (1.0 - np.abs((ft - f_star) / (f0 - f_star)) ** (1.0 / t)).tolist()


# ranking

def _compare(a, b, tol):
    """-1/0/1 lexicographic comparison; float entries within ``tol`` are equal."""
    for x, y in zip(a, b):
        if abs(x - y) > tol:
            return -1 if x < y else 1
    return 0


def _mean_key(s: ProblemStats):
    return (-s.SR, s.mean_vio, s.mean)


def _median_key(s: ProblemStats):
    if s.median_feasible:
        return (0.0, s.median)
    return (1.0, s.vbar)


def competition_ranks(keys, tol=RANK_PRECISION) -> list[int]:
    """1 + number of strictly better entries; tied entries share the lowest rank."""
    return [1 + sum(_compare(other, k, tol) < 0 for other in keys) for k in keys]


@dataclass
class RankTable:
    algorithms: list
    problems: list
    mean_ranks: dict
    median_ranks: dict

    @property
    def totals(self) -> dict:
        return {
            a: sum(self.mean_ranks[a][p] + self.median_ranks[a][p] for p in self.problems)
            for a in self.algorithms
        }

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algorithm", "problem", "rank_mean", "rank_median", "rank_value"])
        for a in self.algorithms:
            for p in self.problems:
                m, d = self.mean_ranks[a][p], self.median_ranks[a][p]
                w.writerow([a, p, m, d, m + d])
        for a in self.algorithms:
            w.writerow([a, "TOTAL", sum(self.mean_ranks[a].values()), sum(self.median_ranks[a].values()), self.totals[a]])
        return buf.getvalue()

    def json(self) -> str:
        return json.dumps(
            {"mean_ranks": self.mean_ranks, "median_ranks": self.median_ranks, "totals": self.totals},
            indent=2,
            sort_keys=True,
        ) + "\n"


def rank_algorithms(stats, tol: float = RANK_PRECISION) -> RankTable:
    """Rank every algorithm on every problem by mean and by median.

    ``stats`` is an iterable of :class:`ProblemStats` covering the full
    algorithm x problem grid. Means rank by (higher SR, lower mean_vio,
    lower mean); medians put feasible medians first by f, then infeasible
    ones by vbar. Values within ``tol`` tie.
    """
    cells = {}
    for s in stats:
        if (s.algorithm, s.problem) in cells:
            raise ValueError(f"duplicate cell ({s.algorithm}, {s.problem})")
        cells[(s.algorithm, s.problem)] = s
    algorithms = sorted({a for a, _ in cells})
    problems = sorted({p for _, p in cells})
    missing = [(a, p) for a in algorithms for p in problems if (a, p) not in cells]
    if missing:
        raise ValueError("missing cells: " + ", ".join(f"{a}/{p}" for a, p in missing))
    mean_ranks = {a: {} for a in algorithms}
    median_ranks = {a: {} for a in algorithms}
    for p in problems:
        column = [cells[(a, p)] for a in algorithms]
        for a, r in zip(algorithms, competition_ranks([_mean_key(s) for s in column], tol)):
            mean_ranks[a][p] = r
        for a, r in zip(algorithms, competition_ranks([_median_key(s) for s in column], tol)):
            median_ranks[a][p] = r
    return RankTable(algorithms, problems, mean_ranks, median_ranks)


# serialization

def stats_csv(stats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    for s in stats:
        w.writerow(s.row())
    return buf.getvalue()


def stats_json(stats) -> str:
    return json.dumps([asdict(s) for s in stats], indent=2) + "\n"


def read_stats_csv(text: str) -> list[ProblemStats]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and set(rows[0]) != set(STATS_COLUMNS):
        raise ValueError(f"stats CSV must have columns {', '.join(STATS_COLUMNS)}")
    out = []
    for row in rows:
        kw = {}
        for k in STATS_COLUMNS:
            if k in ("problem", "algorithm"):
                kw[k] = row[k]
            elif k in ("c1", "c2", "c3"):
                kw[k] = int(row[k])
            else:
                kw[k] = float(row[k])
        out.append(ProblemStats(**kw))
    return out


def trace_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fes", "f", "v"])
    for fes, f, v in record.trace:
        w.writerow([fes, fmt(f), fmt(v)])
    return buf.getvalue()
