import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from coalesce import ExplicitCoupling, MapFunction, Support, parse_matrix

EX10_TEXT = "1/2 1/2 0\n0 1/2 1/2\n1/2 0 1/2\n"
EX11_TEXT = "1/2 1/2 0 0\n0 1/2 1/2 0\n0 0 1/2 1/2\n1/2 0 0 1/2\n"


@pytest.fixture
def ex10():
    return parse_matrix(EX10_TEXT)


@pytest.fixture
def ex11():
    return parse_matrix(EX11_TEXT)


@pytest.fixture
def ex7_functions():
    return tuple(MapFunction.from_notation(s) for s in ("3434", "4334", "3412", "3421"))


@pytest.fixture
def ex7_support(ex7_functions):
    return Support.of(ex7_functions)


@pytest.fixture
def quarter_coupling():
    q = Fraction(1, 4)
    return ExplicitCoupling.from_pairs(
        (MapFunction.from_notation(s), q) for s in ("1234", "1331", "2244", "2341")
    )
