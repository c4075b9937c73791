import functools

import pytest

from hecode.solver import RunConfig, run_heco_de_batch

CEC_SUBSET = ("g06", "g08", "g11", "g24")
RUNS = 25
# PASS/FAIL lines collected by the acceptance suite
ACCEPTANCE_LINES = []


def toy_config(problem, variant="HECO-DE"):
    return RunConfig(problem=problem, variant=variant, lam=20, gamma=0.1, fes_max=20_000)


def cec_config(problem, variant="HECO-DE"):
    return RunConfig(problem=problem, variant=variant, lam=45, gamma=0.7, pop_initial=450, fes_max=100_000)


@functools.lru_cache(maxsize=None)
def batch_runs(problem, variant):
    """25 seeded runs (seeds 0..24), cached for the whole session."""
    cfg = toy_config(problem, variant) if problem.startswith("example") else cec_config(problem, variant)
    return tuple(run_heco_de_batch(problem, cfg, range(RUNS)))


@pytest.fixture(scope="session")
def runs():
    return batch_runs


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
