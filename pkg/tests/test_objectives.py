import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hecode.objectives import (
    WeightScheduleConfig,
    WeightTriple,
    best_of_population,
    death_penalty_e,
    e_tilde,
    feasibility_rule_e,
    min_max_normalize,
    scalarize,
    weight_matrix,
    weight_triple,
)

CFG = WeightScheduleConfig(lam=4, t_max=10, gamma=0.1)


def test_weight_triple_hand_values():
    w = weight_triple(2, 5, CFG)
    assert (w.w1, w.w2, w.w3) == (0.25, 0.35, 0.25)


def test_weight_triple_boundaries():
    assert weight_triple(4, 3, CFG).w3 == 0.0
    assert all(weight_triple(i, 10, CFG).w3 == 0.0 for i in range(1, 5))
    start = weight_triple(1, 0, CFG)
    assert start.w1 == 0.0 and start.w2 == 0.1 and start.w3 == 0.75


def test_weight_matrix_matches_triples():
    cfg = WeightScheduleConfig(lam=7, t_max=33, gamma=0.3)
    for t in (0, 1, 17, 33):
        m = weight_matrix(t, cfg)
        for i in range(1, 8):
            np.testing.assert_array_equal(m[i - 1], weight_triple(i, t, cfg).as_array())


@pytest.mark.parametrize("i, t", [(0, 1), (5, 1), (1, -1), (1, 11)])
def test_weight_triple_rejects_out_of_range(i, t):
    with pytest.raises(ValueError):
        weight_triple(i, t, CFG)


@pytest.mark.parametrize("kw", [dict(lam=0, t_max=1, gamma=0), dict(lam=1, t_max=0, gamma=0), dict(lam=1, t_max=1, gamma=-1)])
def test_schedule_config_validation(kw):
    with pytest.raises(ValueError):
        WeightScheduleConfig(**kw)


def test_min_max_normalize():
    np.testing.assert_array_equal(min_max_normalize([1.0, 3.0, 5.0]), [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(min_max_normalize([2.0, 2.0]), [0.0, 0.0])
    out = min_max_normalize([[0.0, 4.0, 2.0], [7.0, 7.0, 7.0]])
    np.testing.assert_array_equal(out, [[0.0, 1.0, 0.5], [0.0, 0.0, 0.0]])


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)))
def test_min_max_normalize_range(x):
    y = min_max_normalize(x)
    assert np.all((y >= 0) & (y <= 1))
    if x.max() > x.min():
        assert y[np.argmin(x)] == 0.0 and y[np.argmax(x)] == 1.0


def test_best_of_population_and_e_tilde():
    f = np.array([3.0, 1.0, 2.0, -5.0])
    v = np.array([0.0, 0.0, 0.0, 0.1])
    assert best_of_population(f, v) == 1
    np.testing.assert_array_equal(e_tilde(f, v), [2.0, 0.0, 1.0, 6.0])
    # nothing feasible: the least violating member is the reference
    v2 = np.array([0.3, 0.2, 0.2, 0.5])
    assert best_of_population(f, v2) == 1
    np.testing.assert_array_equal(e_tilde(f, v2), [2.0, 0.0, 1.0, 6.0])


def test_e_tilde_stacks_match_rows():
    rng = np.random.default_rng(1)
    f = rng.normal(size=(2, 3, 9))
    v = np.where(rng.random((2, 3, 9)) < 0.5, 0.0, rng.random((2, 3, 9)))
    stacked = e_tilde(f, v)
    for idx in np.ndindex(2, 3):
        np.testing.assert_array_equal(stacked[idx], e_tilde(f[idx], v[idx]))


def test_feasibility_rule_and_death_penalty():
    f = np.array([1.0, 5.0, 2.0])
    v = np.array([0.0, 0.0, 0.5])
    np.testing.assert_array_equal(feasibility_rule_e(f, v), [1.0, 5.0, 5.5])
    np.testing.assert_array_equal(feasibility_rule_e(f, v + 1.0), [1.0, 1.0, 1.5])
    np.testing.assert_array_equal(death_penalty_e(f, v), [1.0, 5.0, np.inf])


def test_scalarize_forms_agree():
    e, v, f = np.array([0.0, 1.0]), np.array([0.5, 0.0]), np.array([1.0, 0.25])
    a = scalarize(WeightTriple(0.2, 0.3, 0.5), e, v, f)
    b = scalarize((0.2, 0.3, 0.5), np.stack([e, v, f]))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a, [0.65, 0.325])
