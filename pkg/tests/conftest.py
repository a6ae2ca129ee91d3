import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from heckeshift import (
    EigenvalueTable,
    FactorSieve,
    SingularSeries,
    delta_expansion,
    normalize,
    rankin_constant,
    square_table,
)

SESSION_LIMIT = 200_000


@pytest.fixture(scope="session")
def delta_200k():
    return delta_expansion(SESSION_LIMIT, threads=2)


@pytest.fixture(scope="session")
def table_200k(delta_200k):
    return normalize(delta_200k)


@pytest.fixture(scope="session")
def sieve_200k():
    return FactorSieve(SESSION_LIMIT)


@pytest.fixture(scope="session")
def squares_20k(table_200k):
    return square_table(table_200k, 20_000)


@pytest.fixture(scope="session")
def c1f_200k(table_200k):
    return rankin_constant(table_200k)


@pytest.fixture(scope="session")
def singular_300(table_200k, c1f_200k):
    return SingularSeries(table_200k, c1f_200k.chosen, q_max=300)


@pytest.fixture()
def ones_table():
    """Synthetic table with lambda(n) = 1 for all n (counting measure)."""
    limit = 5000
    return EigenvalueTable(12, limit, np.ones(limit + 1), source=None)
