import json
import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _toys import ConstantScore, PlantedGrid
from ceor.ce_engine import (
    NEG_INF,
    CeParams,
    StopReason,
    check_termination,
    elite_quota,
    elite_sample_count,
    elite_set,
    format_score,
    normalize_probabilities,
    quantile_benchmark,
    round_rng,
    run_ce,
    score_key,
    score_sum,
    smooth_probabilities,
    update_probabilities,
)
from ceor.errors import ConfigError, EmptyElite, EmptyInput, ZeroMass

# -- the -inf score ----------------------------------------------------------


def test_neg_inf_is_a_singleton_below_every_number():
    assert NEG_INF is pickle.loads(pickle.dumps(NEG_INF))
    assert NEG_INF < -1e308 and NEG_INF < 0 and not NEG_INF > -1e308
    assert NEG_INF == NEG_INF and NEG_INF != float("-inf")
    assert sorted([1, NEG_INF, 0], key=score_key) == [NEG_INF, 0, 1]


def test_score_sum_with_neg_inf_is_negative():
    assert score_sum([1, 1, 0]) == 2
    assert score_sum([1] * 1000 + [NEG_INF]) is NEG_INF
    assert format_score(NEG_INF) == "-inf"
    assert format_score(1.0) == 1 and format_score(0.5) == 0.5


# -- benchmark and elites ----------------------------------------------------


def test_quantile_benchmark_examples():
    assert quantile_benchmark([1] + [0] * 99, 0.01) == 1
    assert quantile_benchmark([0] * 100, 0.01) == 0
    assert quantile_benchmark([0] * 99 + [NEG_INF], 0.01) == 0
    with pytest.raises(EmptyInput):
        quantile_benchmark([], 0.01)


def test_elite_quota_guards_float_noise():
    assert elite_quota(100, 0.01) == 1
    assert elite_quota(2000, 0.01) == 20
    assert elite_quota(101, 0.01) == 2
    assert elite_quota(5, 0.01) == 1


def test_elite_set_single_winner():
    scores = [0] * 100
    scores[42] = 1
    assert elite_set(scores, quantile_benchmark(scores, 0.01), 0.01) == (42,)


def test_elite_set_all_equal_takes_lowest_indices():
    scores = [0] * 300
    assert elite_set(scores, 0, 0.01) == (0, 1, 2)


def test_elite_set_fills_quota_with_lowest_index_ties():
    scores = [0] * 500
    for i in (400, 17, 250):
        scores[i] = 1
    gamma = quantile_benchmark(scores, 0.01)
    assert gamma == 0
    assert elite_set(scores, gamma, 0.01) == (17, 250, 400, 0, 1)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.sampled_from([1, 0, NEG_INF]), min_size=1, max_size=300),
    st.sampled_from([0.01, 0.05, 0.1, 0.3]),
)
def test_elite_set_matches_brute_force(scores, rho):
    gamma = quantile_benchmark(scores, rho)
    quota = math.ceil(rho * len(scores) - 1e-9)
    ranked = sorted(range(len(scores)), key=lambda i: (-score_key(scores[i])[0], -score_key(scores[i])[1], i))
    assert elite_set(scores, gamma, rho) == tuple(ranked[:quota])
    assert all(scores[i] >= gamma for i in ranked[:quota])


# -- weights -----------------------------------------------------------------


def test_update_probabilities_examples():
    q = update_probabilities((3, 1, 4, 5))
    assert q == {3: 0.25, 1: 0.25, 4: 0.25, 5: 0.25}
    assert update_probabilities((7,)) == {7: 1.0}
    assert q.get(2, 0.0) == 0.0
    with pytest.raises(EmptyElite):
        update_probabilities(())


def test_smooth_probabilities_examples():
    assert smooth_probabilities({"a": 1.0}, {"a": 0.0}, 0.5) == {"a": 0.5}
    assert smooth_probabilities({"a": 0.3, "b": 0.7}, {"a": 0.3, "b": 0.7}, 0.4) == pytest.approx({"a": 0.3, "b": 0.7})
    assert smooth_probabilities({"a": 1.0}, {"b": 1.0}, 1.0) == {"a": 1.0, "b": 0.0}
    # a candidate first seen this round has no history
    assert smooth_probabilities({"new": 1.0}, {}, 0.7) == {"new": 0.7}
    with pytest.raises(ConfigError):
        smooth_probabilities({}, {}, 1.5)


def test_normalize_probabilities_examples():
    assert normalize_probabilities({0: 0.2, 1: 0.2}) == {0: 0.5, 1: 0.5}
    assert normalize_probabilities({0: 0.3}) == {0: 1.0}
    assert normalize_probabilities({0: 0.3, 1: 0.1}) == pytest.approx({0: 0.75, 1: 0.25}, abs=1e-15)
    with pytest.raises(ZeroMass):
        normalize_probabilities({0: 0.0})


@settings(max_examples=200, deadline=None)
@given(
    st.dictionaries(st.integers(0, 50), st.floats(0.0, 1.0), min_size=1, max_size=20),
    st.dictionaries(st.integers(0, 50), st.floats(0.0, 1.0), max_size=20),
    st.floats(0.01, 1.0),
)
def test_smooth_then_normalize_is_a_simplex(q_e, q_prev, c):
    if sum(q_e.values()) == 0:
        q_e = {k: 1.0 for k in q_e}
    total = sum(q_e.values())
    q_e = {k: v / total for k, v in q_e.items()}
    q_m = smooth_probabilities(q_e, q_prev, c)
    q_n = normalize_probabilities({k: q_m[k] for k in q_e})
    assert abs(math.fsum(q_n.values()) - 1.0) < 1e-12
    assert all(v >= 0 for v in q_n.values())


# -- sample count and termination -------------------------------------------


@pytest.mark.parametrize(
    "M, v, rho, expected",
    [(1000, 10, 0.01, 100), (100, 1, 0.01, 1), (2000, 10, 0.01, 200), (100, 1.5, 0.01, 2), (100, 2.5, 0.01, 3)],
)
def test_elite_sample_count(M, v, rho, expected):
    assert elite_sample_count(CeParams(M=M, v=v, rho=rho)) == expected


def test_elite_sample_count_is_clamped():
    # validate() forbids this setting, the count itself still never exceeds M
    assert elite_sample_count(CeParams(M=10, v=50, rho=0.5)) == 10


def test_check_termination_examples():
    p = CeParams(l=5)
    assert check_termination([0], [0, NEG_INF, 1], p) is StopReason.NEGATIVE_SUM
    assert check_termination([1] * 6, [1, 0], p) is StopReason.GAMMA_STABLE
    assert check_termination([0, 0, 1, 1, 1], [1], p) is StopReason.CONTINUE
    assert check_termination([1] * 5, [1], p) is StopReason.CONTINUE
    assert check_termination([0, 1] * 25, [1], p) is StopReason.MAX_ROUNDS
    # a negative sum outranks the other rules
    assert check_termination([1] * 50, [NEG_INF], p) is StopReason.NEGATIVE_SUM


@pytest.mark.parametrize(
    "kwargs",
    [
        {"M": 0},
        {"rho": 0.0},
        {"rho": 1.0},
        {"v": 0.5},
        {"c": -0.1},
        {"l": 0},
        {"max_rounds": 0},
        {"seed": -1},
        {"M": 10, "v": 50, "rho": 0.5},
        {"M": 10, "v": 1, "rho": 0.01},
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ConfigError):
        CeParams(**kwargs).validate()


def test_round_rng_streams_are_independent_of_call_order():
    a = round_rng(9, 3, 1).random(4)
    round_rng(9, 3, 0).random(100)
    assert np.array_equal(a, round_rng(9, 3, 1).random(4))
    assert not np.array_equal(a, round_rng(9, 4, 1).random(4))
    assert not np.array_equal(a, round_rng(10, 3, 1).random(4))


# -- full runs ---------------------------------------------------------------


PLANTED = CeParams(M=10000, rho=0.01, v=10.0, c=0.7, l=50, max_rounds=50, seed=3)


@pytest.fixture(scope="module")
def planted_run():
    problem = PlantedGrid()
    return problem, run_ce(problem, PLANTED)


def test_planted_run_converges(planted_run):
    problem, res = planted_run
    assert res.stop_reason is StopReason.MAX_ROUNDS
    assert len(res.rounds) == 50
    first = next(r.r for r in res.rounds if all(r.samples[i].point == problem.planted for i in r.elites))
    assert first <= 20
    last = res.rounds[-1]
    assert last.candidates == (problem.planted,) and last.q_n == (1.0,)
    assert all(s.point == problem.planted for s in res.best_samples)


def test_planted_run_invariants(planted_run):
    problem, res = planted_run
    quota = elite_quota(PLANTED.M, PLANTED.rho)
    n_v = elite_sample_count(PLANTED)
    assert problem.evaluated == PLANTED.M * len(res.rounds)
    prev = None
    reached_one = False
    for state in res.rounds:
        assert len(state.samples) == PLANTED.M
        assert len(state.elites) == quota
        for q in (state.q_e, state.q_n):
            assert abs(math.fsum(q) - 1.0) < 1e-12
            assert min(q) >= 0.0
        assert all(0.0 <= m <= 1.0 + 1e-12 for m in state.q_m)
        if state.r == 1:
            assert state.n_v == 0
        else:
            assert state.n_v == n_v
            # the resampled block leads and only contains last round's candidates
            assert {s.point for s in state.samples[:n_v]} <= set(prev.candidates)
        reached_one = reached_one or state.gamma == 1
        if reached_one:
            assert state.gamma == 1
        prev = state


def test_runs_are_deterministic():
    params = CeParams(M=2000, rho=0.01, v=10.0, l=50, max_rounds=12, seed=77)
    a = run_ce(PlantedGrid(), params)
    b = run_ce(PlantedGrid(), params)
    assert a.rounds == b.rounds
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    c = run_ce(PlantedGrid(), CeParams(M=2000, rho=0.01, v=10.0, l=50, max_rounds=12, seed=78))
    assert [r.samples for r in c.rounds] != [r.samples for r in a.rounds]


@pytest.mark.parametrize("l", [1, 3, 5, 8])
def test_constant_scores_stop_after_l_plus_one_rounds(l):
    res = run_ce(ConstantScore(0), CeParams(M=500, l=l, max_rounds=50, v=10.0, rho=0.01))
    assert res.stop_reason is StopReason.GAMMA_STABLE
    assert len(res.rounds) == l + 1
    assert all(r.gamma == 0 for r in res.rounds)


def test_injected_neg_inf_stops_in_round_one():
    res = run_ce(ConstantScore(0, poison_round=1), CeParams(M=500))
    assert res.stop_reason is StopReason.NEGATIVE_SUM
    assert len(res.rounds) == 1
    assert res.rounds[0].score_histogram() == {"0": 499, "-inf": 1}


def test_neg_inf_in_a_later_round():
    res = run_ce(ConstantScore(1, poison_round=3), CeParams(M=500))
    assert res.stop_reason is StopReason.NEGATIVE_SUM
    assert [r.r for r in res.rounds] == [1, 2, 3]


def test_on_round_sees_every_state():
    seen = []
    res = run_ce(ConstantScore(0), CeParams(M=200, v=10, l=2), on_round=seen.append)
    assert tuple(seen) == res.rounds


def test_result_serialization_order():
    res = run_ce(ConstantScore(0), CeParams(M=200, v=10, l=1))
    doc = res.to_dict()
    assert list(doc) == ["params", "rounds", "stop_reason"]
    assert list(doc["rounds"][0]) == ["r", "gamma", "elite_count", "n_v", "score_histogram"]
    assert doc["stop_reason"] == "GammaStable"
    assert doc["params"]["M"] == 200


def test_bad_problem_is_rejected():
    class Short(ConstantScore):
        def evaluate(self, points):
            return super().evaluate(points)[:-1]

    with pytest.raises(ConfigError):
        run_ce(Short(0), CeParams(M=200, v=10))


def test_run_ce_validates_params():
    with pytest.raises(ConfigError):
        run_ce(ConstantScore(0), CeParams(M=100, v=0.5))


def test_identity_key_merges_repeated_points():
    res = run_ce(PlantedGrid(), CeParams(M=3000, l=50, max_rounds=6, seed=1))
    for state in res.rounds:
        assert len(set(state.candidates)) == len(state.candidates)
        for cand, q in zip(state.candidates, state.q_e):
            hits = sum(1 for i in state.elites if state.samples[i].point == cand)
            assert q == pytest.approx(hits / len(state.elites))
