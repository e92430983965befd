import random
from fractions import Fraction
from itertools import combinations

import pytest

import oracles
from coalesce import (
    FeasibilityWitness,
    Infeasible,
    MapFunction,
    StochasticMatrix,
    Support,
    allowed_functions,
    feasible_weights,
    induced_matrix,
    is_consistent,
    is_feasible_support,
    is_weakly_feasible,
    necessary_support_filter,
)

Q = Fraction(1, 4)


def sup(*notations):
    return Support.of(MapFunction.from_notation(s) for s in notations)


def test_quarter_support_weights(ex11, quarter_coupling):
    res = feasible_weights(ex11, quarter_coupling.support())
    assert isinstance(res, FeasibilityWitness)
    assert all(w == Q for _, w in res.weights)
    assert is_consistent(res.as_coupling(), ex11)


def test_full_allowed_support_feasible(ex10):
    res = feasible_weights(ex10, allowed_functions(ex10))
    assert isinstance(res, FeasibilityWitness)
    assert len(res.weights) == 8
    assert all(w > 0 for _, w in res.weights)
    assert sum(w for _, w in res.weights) == 1
    assert induced_matrix(res.as_coupling()).entries == ex10.entries


def test_pair_support_feasible(ex10):
    res = feasible_weights(ex10, sup("123", "231"))
    assert isinstance(res, FeasibilityWitness)
    assert sorted((f.to_notation(), w) for f, w in res.weights) == [
        ("123", Fraction(1, 2)),
        ("231", Fraction(1, 2)),
    ]


def test_unsupported_function_reason(ex10):
    res = feasible_weights(ex10, sup("132", "123"))
    assert isinstance(res, Infeasible)
    assert res.reason == "unsupported-function"
    assert "132" in res.detail


def test_uncovered_cell_reason(ex10):
    res = feasible_weights(ex10, sup("123"))
    assert isinstance(res, Infeasible)
    assert res.reason == "uncovered-cell"


def test_zero_forced_reason(ex10):
    # the identity/cycle pair already fills every cell, starving 133
    res = feasible_weights(ex10, sup("123", "231", "133"))
    assert isinstance(res, Infeasible)
    assert res.reason == "zero-forced"
    assert "133" in res.detail


def test_no_solution_reason(ex10):
    # cells force weight(121) = 0 from one equation and 1/2 from another
    res = feasible_weights(ex10, sup("121", "133", "223"))
    assert isinstance(res, Infeasible)
    assert res.reason == "no-solution"


def test_all_subsets_of_cycle_walk_match_oracle(ex10):
    fs = list(allowed_functions(ex10))
    rows = [list(ex10.row(i)) for i in range(3)]
    tally = {"feasible": 0, "zero-forced": 0, "uncovered-cell": 0, "no-solution": 0}
    for r in range(1, len(fs) + 1):
        for c in combinations(fs, r):
            res = feasible_weights(ex10, Support.of(c))
            feasible = not isinstance(res, Infeasible)
            assert feasible == oracles.oracle_exact_feasible(
                rows, [f.image for f in c]
            )
            tally["feasible" if feasible else res.reason] += 1
    assert tally == {
        "feasible": 45,
        "zero-forced": 132,
        "uncovered-cell": 62,
        "no-solution": 16,
    }


def test_weak_feasibility(ex10):
    # zero-forced supports still admit a coupling inside the support
    assert is_weakly_feasible(ex10, sup("123", "231", "133"))
    assert not is_feasible_support(ex10, sup("123", "231", "133"))
    # contradictory cell equations do not
    assert not is_weakly_feasible(ex10, sup("121", "133", "223"))
    # unsupported functions are dropped before deciding
    assert is_weakly_feasible(ex10, sup("132", "123", "231"))
    assert not is_weakly_feasible(ex10, sup("132", "123"))


def test_weak_feasibility_is_monotone(ex10):
    fs = list(allowed_functions(ex10))
    rng = random.Random(77)
    for _ in range(80):
        base = rng.sample(fs, rng.randint(1, 6))
        extra = rng.sample(fs, rng.randint(1, 2))
        if is_weakly_feasible(ex10, Support.of(base)):
            assert is_weakly_feasible(ex10, Support.of(base + extra))


def test_random_matrices_match_oracle():
    rng = random.Random(78)
    checked = 0
    for _ in range(25):
        n = rng.randint(2, 3)
        rows = (
            oracles.random_doubly_stochastic(rng, n)
            if rng.random() < 0.5
            else oracles.random_stochastic(rng, n)
        )
        P = StochasticMatrix.from_rows(rows)
        fs = list(allowed_functions(P))
        for _ in range(8):
            chosen = rng.sample(fs, rng.randint(1, min(5, len(fs))))
            got = is_feasible_support(P, Support.of(chosen))
            want = oracles.oracle_exact_feasible(rows, [f.image for f in chosen])
            assert got == want
            weak_got = is_weakly_feasible(P, Support.of(chosen))
            weak_want = oracles.oracle_weakly_feasible(rows, [f.image for f in chosen])
            assert weak_got == weak_want
            checked += 1
    assert checked == 200


def test_random_four_state_spot_checks(ex11):
    rng = random.Random(79)
    rows = [list(ex11.row(i)) for i in range(4)]
    fs = list(allowed_functions(ex11))
    for _ in range(40):
        chosen = rng.sample(fs, rng.randint(1, 5))
        got = is_feasible_support(ex11, Support.of(chosen))
        want = oracles.oracle_exact_feasible(rows, [f.image for f in chosen])
        assert got == want


def test_necessary_support_filter(ex10):
    filtered = necessary_support_filter(ex10, sup("132", "123", "231"))
    assert {f.to_notation() for f in filtered} == {"123", "231"}
    with pytest.raises(ValueError):
        necessary_support_filter(ex10, sup("132"))


def test_witness_support_matches_input(ex11, quarter_coupling):
    res = feasible_weights(ex11, quarter_coupling.support())
    assert res.support() == quarter_coupling.support()
