"""Command-line front end: ``hecode run|rank|widegap|list-problems``.

An experiment spec is an INI file::

    [experiment]
    problems = example2, g06
    algorithms = HECO-DE, HCO-DE
    runs = 25
    fes = 20000
    seed = 0
    out = results

    [solver]            ; optional, applies to every cell
    lam = 20
    gamma = 0.1

    [solver:g06]        ; optional, overrides for one problem
    lam = 45

Run ``i`` of every cell uses seed ``seed + i``.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .baselines import WideGapConfig, hitting_time_csv, run_heco_two_weight, run_soco_elitist
from .problems import get_problem, list_problems
from .solver import ALGORITHMS, RunConfig, run_many
from .stats import aggregate_stats, rank_algorithms, read_stats_csv, stats_csv, stats_json, trace_csv

_SOLVER_FIELDS = {f.name for f in dataclasses.fields(RunConfig)} - {"problem", "variant", "seed", "fes_max"}
_INT_FIELDS = {"lam", "pop_initial", "pop_final", "memory_size"}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    problems: tuple
    algorithms: tuple
    runs: int = 25
    fes: int = 20_000
    seed: int = 0
    out: str = "results"
    solver: tuple = ()  # (key, value) pairs
    overrides: tuple = ()  # (problem, ((key, value), ...)) pairs

    def __post_init__(self):
        if self.runs < 1:
            raise SpecError("runs must be >= 1")
        if not self.problems or not self.algorithms:
            raise SpecError("need at least one problem and one algorithm")
        known = set(list_problems())
        bad = [p for p in self.problems if p not in known]
        if bad:
            raise SpecError(f"unknown problem(s): {', '.join(bad)}; known: {', '.join(sorted(known))}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise SpecError(f"unknown algorithm(s): {', '.join(bad)}; known: {', '.join(ALGORITHMS)}")

    def config(self, problem: str, algorithm: str, run_index: int) -> RunConfig:
        kw = dict(self.solver)
        kw.update(dict(self.overrides).get(problem, ()))
        return RunConfig(
            problem=problem, variant=algorithm, fes_max=self.fes, seed=self.seed + run_index, **kw
        )


def _split_list(text):
    return tuple(x.strip() for x in text.replace("\n", ",").split(",") if x.strip())


def _solver_items(section, where):
    items = []
    for key, raw in section.items():
        if key not in _SOLVER_FIELDS:
            raise SpecError(f"unknown solver option {key!r} in [{where}]")
        try:
            value = int(raw) if key in _INT_FIELDS else float(raw)
        except ValueError:
            raise SpecError(f"bad value {raw!r} for {key} in [{where}]") from None
        items.append((key, value))
    return tuple(sorted(items))


def parse_spec(text: str) -> ExperimentSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"malformed spec: {exc}") from None
    if not cp.has_section("experiment"):
        raise SpecError("spec needs an [experiment] section")
    ex = cp["experiment"]
    try:
        spec_kw = dict(
            problems=_split_list(ex.get("problems", "")),
            algorithms=_split_list(ex.get("algorithms", ex.get("variants", ""))),
            runs=ex.getint("runs", 25),
            fes=ex.getint("fes", 20_000),
            seed=ex.getint("seed", 0),
            out=ex.get("out", "results"),
        )
    except ValueError as exc:
        raise SpecError(f"bad [experiment] value: {exc}") from None
    solver = _solver_items(cp["solver"], "solver") if cp.has_section("solver") else ()
    overrides = tuple(
        (name.split(":", 1)[1].strip(), _solver_items(cp[name], name))
        for name in cp.sections()
        if name.startswith("solver:")
    )
    return ExperimentSpec(solver=solver, overrides=overrides, **spec_kw)


# output helpers

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_with_meta(path: Path, text: str, meta: dict) -> None:
    _atomic_write(path, text)
    meta = dict(meta, file=path.name, version=__version__)
    _atomic_write(path.with_name(path.name + ".meta.json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")


# subcommands

def cmd_run(args) -> int:
    try:
        text = Path(args.spec).read_text(encoding="utf-8")
        spec = parse_spec(text)
    except (OSError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.out is not None:
        spec = dataclasses.replace(spec, out=args.out)
    spec_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
    out = Path(spec.out)
    all_stats, failed = [], []
    for problem in spec.problems:
        for algorithm in spec.algorithms:
            configs = [spec.config(problem, algorithm, i) for i in range(spec.runs)]
            try:
                records = run_many(configs, jobs=args.jobs)
            except Exception as exc:  # report the cell, keep going
                failed.append((problem, algorithm, f"{type(exc).__name__}: {exc}"))
                continue
            for i, rec in enumerate(records):
                _write_with_meta(
                    out / "traces" / problem / algorithm / f"run_{i:03d}.csv",
                    trace_csv(rec),
                    {"spec_sha256": spec_hash, "seed": rec.seed, "problem": problem, "algorithm": algorithm},
                )
            all_stats.append(aggregate_stats(records, problem, algorithm))
    if all_stats:
        body = stats_json(all_stats) if args.format == "json" else stats_csv(all_stats)
        _write_with_meta(
            out / f"stats.{args.format}",
            body,
            {"spec_sha256": spec_hash, "seed": spec.seed, "runs": spec.runs},
        )
    for problem, algorithm, msg in failed:
        print(f"failed cell {problem}/{algorithm}: {msg}", file=sys.stderr)
    return 1 if failed else 0


def cmd_rank(args) -> int:
    stats = []
    try:
        for name in args.stats:
            stats.extend(read_stats_csv(Path(name).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    by_alg = {}
    for s in stats:
        by_alg.setdefault(s.algorithm, set()).add(s.problem)
    if len(by_alg) < 2:
        print("error: ranking needs at least two algorithms", file=sys.stderr)
        return 2
    common = set.intersection(*by_alg.values())
    union = set.union(*by_alg.values())
    if common != union:
        for alg, probs in sorted(by_alg.items()):
            if probs != union:
                print(f"error: {alg} lacks problem(s) {', '.join(sorted(union - probs))}", file=sys.stderr)
        return 2
    try:
        table = rank_algorithms(stats)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    body = table.json() if args.format == "json" else table.csv()
    if args.out:
        _write_with_meta(Path(args.out), body, {"inputs": sorted(args.stats), "seed": None})
    else:
        sys.stdout.write(body)
    return 0


def cmd_widegap(args) -> int:
    try:
        cfg = WideGapConfig(trials=args.trials, max_generations=args.max_generations, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    results = [run_soco_elitist(cfg), run_heco_two_weight(cfg)]
    if args.format == "json":
        body = json.dumps(
            {r.arm: [int(h) if h >= 0 else None for h in r.hit_generation] for r in results}, indent=2
        ) + "\n"
    else:
        body = hitting_time_csv(results)
    if args.out:
        _write_with_meta(
            Path(args.out), body,
            {"seed": cfg.seed, "trials": cfg.trials, "max_generations": cfg.max_generations},
        )
    else:
        sys.stdout.write(body)
    for r in results:
        print(f"{r.arm}: {r.successes}/{cfg.trials} hits, median {r.median}", file=sys.stderr)
    return 0


def cmd_list_problems(args) -> int:
    for name in list_problems():
        p = get_problem(name)
        f_star = "" if p.f_star is None else repr(p.f_star)
        print(f"{name}\tD={p.dim}\tg={len(p.inequalities)}\th={len(p.equalities)}\tf*={f_star}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hecode", description="HECO-DE constrained optimization experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment spec")
    p.add_argument("--spec", required=True, help="INI experiment spec")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (0 = all CPUs)")
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("rank", help="rank algorithms from stats CSV files")
    p.add_argument("stats", nargs="+", help="stats CSV file(s)")
    p.add_argument("--out", default=None, help="write the table here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("widegap", help="hitting times across the wide infeasible gap")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--max-generations", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_widegap)

    p = sub.add_parser("list-problems", help="print the problem registry")
    p.set_defaults(func=cmd_list_problems)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
