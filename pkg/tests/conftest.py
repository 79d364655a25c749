from __future__ import annotations

from fractions import Fraction as F

import pytest

from tanslab.core import SymbolDistribution, SymbolSpread, build_tables

TOY_PROBS = (F(3, 16), F(5, 16), F(8, 16))
TOY_SYMBOLS = ("s1", "s2", "s3")
# state 16..31 -> symbol number (1-based), as printed for the running example
EX1_ROW = (3, 3, 1, 2, 2, 3, 1, 2, 3, 1, 2, 3, 2, 3, 3, 3)
SWAPPED_ROW = (3, 3, 1, 2, 2, 3, 1, 2, 3, 2, 2, 3, 1, 3, 3, 3)
WORST_SETS = ((24, 25, 26), (27, 28, 29, 30, 31), tuple(range(16, 24)))


def row_spread(row, symbols=TOY_SYMBOLS) -> SymbolSpread:
    return SymbolSpread(symbols, tuple(r - 1 for r in row))


@pytest.fixture
def toy_dist() -> SymbolDistribution:
    return SymbolDistribution(TOY_SYMBOLS, TOY_PROBS, 4, (3, 5, 8))


@pytest.fixture
def ex1_spread() -> SymbolSpread:
    return row_spread(EX1_ROW)


@pytest.fixture
def swapped_spread() -> SymbolSpread:
    return row_spread(SWAPPED_ROW)


@pytest.fixture
def worst_spread() -> SymbolSpread:
    return SymbolSpread.from_sets(TOY_SYMBOLS, WORST_SETS)


@pytest.fixture
def ex1_tables(toy_dist, ex1_spread):
    return build_tables(toy_dist, ex1_spread)
