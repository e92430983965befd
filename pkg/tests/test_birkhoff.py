import random
from fractions import Fraction

import pytest

import oracles
from coalesce import (
    NotDoublyStochastic,
    StochasticMatrix,
    birkhoff_decomposition,
    parse_matrix,
)


def test_cycle_walk_two_terms(ex10):
    dec = birkhoff_decomposition(ex10)
    assert sorted((f.to_notation(), w) for f, w in dec.terms) == [
        ("123", Fraction(1, 2)),
        ("231", Fraction(1, 2)),
    ]
    assert dec.resum().entries == ex10.entries


def test_permutation_matrix_single_term():
    P = parse_matrix("0 1 0\n0 0 1\n1 0 0\n")
    dec = birkhoff_decomposition(P)
    assert len(dec.terms) == 1
    assert dec.terms[0][0].to_notation() == "231"
    assert dec.terms[0][1] == 1


def test_rejects_non_doubly_stochastic():
    with pytest.raises(NotDoublyStochastic):
        birkhoff_decomposition(parse_matrix("1 0\n1/2 1/2\n"))


def test_random_roundtrips_and_term_bound():
    rng = random.Random(80)
    for _ in range(40):
        n = rng.randint(2, 6)
        P = StochasticMatrix.from_rows(oracles.random_doubly_stochastic(rng, n))
        dec = birkhoff_decomposition(P)
        assert dec.resum().entries == P.entries
        assert len(dec.terms) <= (n - 1) ** 2 + 1
        assert all(f.is_permutation() for f, _ in dec.terms)
        assert all(w > 0 for _, w in dec.terms)
        assert sum(w for _, w in dec.terms) == 1


def test_uniform_matrix(ex11):
    U = StochasticMatrix.uniform(4)
    dec = birkhoff_decomposition(U)
    assert dec.resum().entries == U.entries
    assert len(dec.terms) <= 10
    dec11 = birkhoff_decomposition(ex11)
    assert dec11.resum().entries == ex11.entries
