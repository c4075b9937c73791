from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hecode.objectives import e_tilde, feasibility_rule_e, min_max_normalize
from hecode.problems import problem_from_callables
from hecode.solver import (
    HECO_VARIANTS,
    ConfigError,
    RunConfig,
    augmented_components,
    augmented_components_dense,
    components,
    run_algorithm,
    run_heco_de,
    run_heco_de_batch,
    run_many,
    run_variant,
)

# frozen outputs of short seeded runs; a change here means the search changed
GOLDEN = [
    ("example2", "HECO-DE", 0.0030879169099828907),
    ("g06", "HECO-DE-FR", -6394.011386170765),
    ("g11", "HCO-DE", 0.768258220438007),
]


@pytest.mark.parametrize("problem, variant, best_f", GOLDEN)
def test_golden_runs(problem, variant, best_f):
    rec = run_heco_de(problem, RunConfig(problem=problem, variant=variant, fes_max=3000, seed=11))
    assert rec.best.f == best_f and rec.feasible
    # N0 = 200, lam = 20: (3000 - 200) / 20 generations
    assert rec.fes == 3000 and rec.generations == 140 and len(rec.trace) == 141


def test_default_initial_population():
    assert RunConfig().resolved(2).pop_initial == 200
    assert RunConfig(lam=4).resolved(10).pop_initial == 120
    assert RunConfig(lam=45).resolved(2).pop_final == 45


@pytest.mark.parametrize(
    "kw",
    [
        dict(lam=3),
        dict(variant="HEC-DE"),
        dict(pop_final=10),
        dict(pop_initial=30_000),
        dict(pop_initial=10, lam=20),
        dict(pop_initial=50, pop_final=60),
        dict(fes_max=0),
    ],
)
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        run_heco_de("example1", RunConfig(problem="example1", **kw))


def test_unknown_algorithm():
    with pytest.raises(ConfigError):
        run_algorithm("example1", RunConfig(variant="nope"))
    with pytest.raises(ConfigError):
        run_variant("example1", RunConfig(variant="SOCO-FR"))


def test_components_first_row_per_variant():
    rng = np.random.default_rng(0)
    f = rng.normal(size=12)
    v = np.where(rng.random(12) < 0.5, 0.0, rng.random(12))
    np.testing.assert_array_equal(components(f, v, "HECO-DE")[0], min_max_normalize(e_tilde(f, v)))
    np.testing.assert_array_equal(components(f, v, "HCO-DE")[0], min_max_normalize(f))
    np.testing.assert_array_equal(components(f, v, "HECO-DE-FR")[0], min_max_normalize(feasibility_rule_e(f, v)))
    np.testing.assert_array_equal(components(f, v)[1:], min_max_normalize(np.stack([v, f])))
    with pytest.raises(ConfigError):
        components(f, v, "bad")


def _random_case(rng, lam):
    # coarse grids make ties and constant columns common
    pick = rng.integers(0, 4)
    f = rng.integers(-3, 4, (2, lam)).astype(float) if pick == 0 else rng.normal(size=(2, lam))
    v = np.where(rng.random((2, lam)) < rng.random(), 0.0, rng.integers(0, 3, (2, lam)) * (pick != 1) + rng.random((2, lam)) * (pick == 1))
    fq, fy = f
    vq, vy = v
    if pick == 3:
        vq[:] = 0.0
    return fq, vq, fy, vy


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.sampled_from(HECO_VARIANTS))
def test_augmented_components_match_dense(seed, lam, variant):
    fq, vq, fy, vy = _random_case(np.random.default_rng(seed), lam)
    cx, cy = augmented_components(fq, vq, fy, vy, variant)
    dx, dy = augmented_components_dense(fq, vq, fy, vy, variant)
    np.testing.assert_array_equal(cx, dx)
    np.testing.assert_array_equal(cy, dy)


@pytest.mark.parametrize("variant", HECO_VARIANTS)
def test_batch_is_bit_identical_to_single_runs(variant):
    cfg = RunConfig(problem="g06", variant=variant, lam=10, fes_max=2500)
    batch = run_heco_de_batch("g06", cfg, [5, 9, 2])
    for rec in batch:
        single = run_heco_de("g06", replace(cfg, seed=rec.seed))
        assert single.trace == rec.trace
        np.testing.assert_array_equal(single.final_x, rec.final_x)
        assert single.best.f == rec.best.f


def test_runs_are_deterministic_and_seed_sensitive():
    cfg = RunConfig(problem="g24", fes_max=2000, seed=3)
    a, b = run_heco_de("g24", cfg), run_heco_de("g24", cfg)
    assert a.trace == b.trace
    c = run_heco_de("g24", replace(cfg, seed=4))
    assert c.trace != a.trace


def test_trace_is_monotone():
    rec = run_heco_de("g11", RunConfig(problem="g11", fes_max=4000, seed=1))
    fes, f, v = (np.array(col) for col in zip(*rec.trace))
    assert np.all(np.diff(fes) == 20)
    assert np.all(np.diff(v) <= 0)
    feas = v == 0
    assert np.all(np.diff(f[feas]) <= 0)
    assert rec.final_x.shape == (20, 2)


def test_unconstrained_problem_is_minimized():
    sphere = problem_from_callables(
        "sphere", [-5.0] * 3, [5.0] * 3, lambda X: (X**2).sum(axis=1), vectorized=True
    )
    rec = run_heco_de(sphere, RunConfig(fes_max=10_000, lam=10))
    assert rec.feasible and rec.best.f < 1e-6


def test_run_many_preserves_order_and_results():
    cfgs = [
        RunConfig(problem=p, variant=v, fes_max=1500, seed=s, lam=10)
        for s in (4, 1)
        for p, v in (("example1", "HECO-DE"), ("g08", "SOCO-FR"), ("example1", "HCO-DE"))
    ]
    expected = [run_algorithm(c.problem, c) for c in cfgs]
    for jobs in (1, 2):
        got = run_many(cfgs, jobs=jobs)
        assert [(r.problem, r.variant, r.seed) for r in got] == [(c.problem, c.variant, c.seed) for c in cfgs]
        assert [r.trace for r in got] == [r.trace for r in expected]
