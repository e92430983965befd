import pytest

from coalesce import (
    StochasticMatrix,
    allowed_functions,
    can_exclude_second_largest,
    coalescence_number,
    divisor_members,
    expand_support,
    is_consistent,
    is_feasible_support,
    k_set_certificates,
    k_set_exact,
    k_set_report,
    single_pair_balance,
)
from coalesce.reference import path_walk


@pytest.fixture(scope="module")
def ex11_report():
    from coalesce import parse_matrix

    ex11 = parse_matrix(
        "1/2 1/2 0 0\n0 1/2 1/2 0\n0 0 1/2 1/2\n1/2 0 0 1/2\n"
    )
    return ex11, k_set_exact(ex11, collect_feasible=True)


def test_cycle_walk_achievable_set(ex10):
    report = k_set_report(ex10)
    assert sorted(report.values) == [1, 3]
    assert report.exact
    assert report.subsets_enumerated == 255
    assert [(e.k, e.reason) for e in report.exclusions] == [(2, "exhaustive")]
    for m in report.members:
        assert is_consistent(m.coupling, ex10)
        assert coalescence_number(expand_support(m.coupling)) == m.k


def test_cycle_walk_without_pruning(ex10):
    report = k_set_exact(ex10, prune=False, collect_feasible=True)
    assert sorted(report.values) == [1, 3]
    assert report.subsets_enumerated == 255
    assert report.pruned == 0
    assert report.cover_skipped == 62
    assert report.lp_decided == 193
    assert len(report.feasible) == 45
    # every collected support is genuinely feasible and carries its k
    for sup, k in report.feasible:
        assert is_feasible_support(ex10, sup)
        assert coalescence_number(sup) == k


def test_four_state_achievable_set(ex11_report):
    ex11, report = ex11_report
    assert sorted(report.values) == [1, 2, 4]
    assert report.exact
    assert report.subsets_enumerated == 65535
    assert [(e.k, e.reason) for e in report.exclusions] == [(3, "exhaustive")]
    for m in report.members:
        assert is_consistent(m.coupling, ex11)
        assert coalescence_number(expand_support(m.coupling)) == m.k


def test_four_state_pruning_stats(ex11_report):
    _, report = ex11_report
    assert report.pruned == 58833
    assert report.lp_decided == 4942
    assert len(report.feasible) == 48


def test_two_state_walk():
    report = k_set_report(path_walk(2))
    assert sorted(report.values) == [1, 2]
    assert report.exact


def test_three_state_walk():
    report = k_set_report(path_walk(3))
    assert sorted(report.values) == [1, 3]
    assert [(e.k, e.reason) for e in report.exclusions] == [(2, "exhaustive")]


def test_certificates_on_uniform_matrix():
    # 3^27 - 1 candidate supports: enumeration is hopeless, certificates not
    U = StochasticMatrix.uniform(3)
    report = k_set_certificates(U)
    assert not report.exact
    assert sorted(report.values) == [1, 3]
    assert [(m.k, m.how) for m in report.members] == [
        (1, "aperiodicity"),
        (3, "double-stochasticity"),
    ]
    assert [(e.k, e.reason) for e in report.exclusions] == [
        (2, "single-pair-criterion")
    ]


def test_pair_balance_criterion(ex10):
    assert not single_pair_balance(ex10, 0, 1)
    assert all(
        not single_pair_balance(ex10, a, b)
        for a in range(3)
        for b in range(a + 1, 3)
    )
    with pytest.raises(ValueError):
        single_pair_balance(ex10, 1, 1)


def test_exclude_second_largest_on_reflecting_walks():
    for n in range(3, 6):
        assert can_exclude_second_largest(path_walk(n))
    # n = 2 has no pair criterion to apply
    assert not can_exclude_second_largest(path_walk(2))


def test_divisor_members():
    report = divisor_members(6)
    assert sorted(report.values) == [1, 2, 3, 6]
    assert not report.exact
    U6 = StochasticMatrix.uniform(6)
    for m in report.members:
        assert m.how == "divisor"
        assert is_consistent(m.coupling, U6)


def test_budget_fallback(ex10):
    # an impossible subset budget forces the certificate path
    report = k_set_report(ex10, cap=10)
    assert not report.exact
    assert any("exceed" in note for note in report.notes)
    assert {1, 3} <= set(report.values)
