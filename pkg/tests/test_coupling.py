import json
import random
from fractions import Fraction

import pytest

from coalesce import (
    BlockCoupling,
    CouplingFormatError,
    ExplicitCoupling,
    ExplicitPermLaw,
    MapFunction,
    Partition,
    StochasticMatrix,
    SupportTooLarge,
    UniformPermLaw,
    doeblin_coupling,
    expand_support,
    induced_matrix,
    is_consistent,
    parse_coupling,
    permutation_coupling,
    serialize_coupling,
    to_explicit,
    uniform_divisor_coupling,
)

H = Fraction(1, 2)


def test_quarter_coupling_induces_cycle_walk(quarter_coupling, ex11):
    assert induced_matrix(quarter_coupling).entries == ex11.entries
    assert is_consistent(quarter_coupling, ex11)
    assert not is_consistent(quarter_coupling, StochasticMatrix.identity(4))
    assert not is_consistent(quarter_coupling, StochasticMatrix.uniform(4))


def test_weights_must_be_positive_and_sum_to_one():
    one2 = MapFunction.from_notation("12")
    two1 = MapFunction.from_notation("21")
    with pytest.raises(CouplingFormatError):
        ExplicitCoupling.from_pairs([(one2, Fraction(1)), (two1, Fraction(0))])
    with pytest.raises(CouplingFormatError):
        ExplicitCoupling.from_pairs([(one2, H)])
    with pytest.raises(CouplingFormatError):
        ExplicitCoupling.from_pairs([(one2, Fraction(3, 2)), (two1, Fraction(-1, 2))])


def test_duplicate_functions_rejected():
    one2 = MapFunction.from_notation("12")
    with pytest.raises(CouplingFormatError):
        ExplicitCoupling.from_pairs([(one2, H), (one2, H)])


def test_doeblin_product_coupling(ex10):
    mu = doeblin_coupling(ex10)
    assert isinstance(mu, ExplicitCoupling)
    assert mu.support_size() == 8
    assert all(w == Fraction(1, 8) for _, w in mu.iter_terms())
    assert is_consistent(mu, ex10)


def test_doeblin_lazy_form(ex10):
    mu = doeblin_coupling(ex10, lazy=True)
    assert isinstance(mu, BlockCoupling)
    assert mu.partition == Partition.single_block(3)
    assert is_consistent(mu, ex10)
    # same law as the product coupling, reached through one uniform block
    assert sorted(
        (f.to_notation(), w) for f, w in to_explicit(mu).iter_terms()
    ) == sorted((f.to_notation(), w) for f, w in doeblin_coupling(ex10).iter_terms())


def test_permutation_coupling_of_doubly_stochastic(ex10):
    mu = permutation_coupling(ex10)
    assert is_consistent(mu, ex10)
    terms = sorted((f.to_notation(), w) for f, w in mu.iter_terms())
    assert terms == [("123", H), ("231", H)]
    assert all(f.is_permutation() for f, _ in mu.iter_terms())


def test_uniform_divisor_coupling_support():
    mu = uniform_divisor_coupling(4, 2)
    assert is_consistent(mu, StochasticMatrix.uniform(4))
    # 2 block permutations, and 2 choices inside each of 2 blocks per source
    # block: the expanded support multiplies out to 32 distinct functions
    assert len(expand_support(mu)) == 32
    ex = to_explicit(mu)
    assert ex.support_size() == 32
    assert ex.induced.entries == StochasticMatrix.uniform(4).entries


def test_uniform_divisor_coupling_rejects_non_divisor():
    from coalesce import NotADivisor

    with pytest.raises(NotADivisor):
        uniform_divisor_coupling(4, 3)


def test_expand_support_cap():
    mu = uniform_divisor_coupling(4, 2)
    with pytest.raises(SupportTooLarge):
        expand_support(mu, cap=5)


def test_block_coupling_explicit_law(ex11):
    partition = Partition.parse("1,3|2,4")
    law = ExplicitPermLaw(terms=(((0, 1), H), ((1, 0), H)))
    # every state can land in either block; send it to that block's minimum
    point = {0: ((0, Fraction(1)),), 1: ((1, Fraction(1)),)}
    within = tuple(
        ((0, point[0]), (1, point[1])) for _ in range(4)
    )
    # not necessarily consistent with ex11; this just exercises the container
    mu = BlockCoupling(partition=partition, law=law, within=within)
    assert mu.n == 4
    assert mu.law.support_count() == 2
    assert mu.within_dist(2, 1) == point[1]


def test_serialize_roundtrip_explicit(quarter_coupling):
    text = serialize_coupling(quarter_coupling)
    doc = json.loads(text)
    assert doc["n"] == 4
    assert {t["map"] for t in doc["functions"]} == {"1234", "1331", "2244", "2341"}
    back = parse_coupling(text)
    assert isinstance(back, ExplicitCoupling)
    assert back.terms == quarter_coupling.terms


def test_serialize_roundtrip_block():
    mu = uniform_divisor_coupling(6, 3)
    text = serialize_coupling(mu)
    doc = json.loads(text)
    assert doc["block_perms"] == "uniform"
    back = parse_coupling(text)
    assert isinstance(back, BlockCoupling)
    assert back.partition == mu.partition
    assert isinstance(back.law, UniformPermLaw)
    assert expand_support(back) == expand_support(mu)


def test_parse_coupling_rejects_malformed():
    with pytest.raises(CouplingFormatError):
        parse_coupling("{}")
    with pytest.raises(CouplingFormatError):
        parse_coupling(json.dumps({"n": 2, "functions": []}))
    with pytest.raises(CouplingFormatError):
        parse_coupling(
            json.dumps(
                {"n": 2, "functions": [{"map": "12", "weight": "1/2"}]}
            )
        )


def test_sample_image_matches_support(quarter_coupling):
    rng = random.Random(5)
    seen = set()
    for _ in range(200):
        img = quarter_coupling.sample_image(rng)
        seen.add(img)
        assert MapFunction(img) in quarter_coupling.support()
    assert len(seen) == 4


def test_block_sample_image_consistent():
    mu = uniform_divisor_coupling(4, 2)
    sup = {f.image for f in expand_support(mu)}
    rng = random.Random(6)
    for _ in range(100):
        assert mu.sample_image(rng) in sup
