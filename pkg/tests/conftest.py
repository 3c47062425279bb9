import random
from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from creditfair.core import Instance

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

half = st.integers(min_value=0, max_value=12).map(lambda k: Fraction(k, 2))


@st.composite
def instances(draw, max_agents=4, max_rounds=6, max_demand=6, unequal=True):
    n = draw(st.integers(1, max_agents))
    T = draw(st.integers(1, max_rounds))
    if unequal:
        e = draw(st.lists(st.integers(1, 4).map(lambda k: Fraction(k, 2)), min_size=n, max_size=n))
    else:
        e = [Fraction(1)] * n
    rows = draw(st.lists(st.lists(st.integers(0, max_demand), min_size=n, max_size=n),
                         min_size=T, max_size=T))
    return Instance.build(e, rows)


def random_instance(rng: random.Random, max_agents=5, max_rounds=8, max_demand=6,
                    unequal=True) -> Instance:
    n, T = rng.randint(1, max_agents), rng.randint(1, max_rounds)
    e = [Fraction(rng.randint(1, 4), 2) if unequal else Fraction(1) for _ in range(n)]
    rows = [[rng.randint(0, max_demand) for _ in range(n)] for _ in range(T)]
    return Instance.build(e, rows)


@pytest.fixture
def rng():
    return random.Random(20261016)
