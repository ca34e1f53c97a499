import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from weakcomo.prob_core import RandomVariable

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def distinct_ints(m, rng, low=-50, high=50):
    """``m`` distinct integers drawn without replacement."""
    return rng.choice(np.arange(low, high), size=m, replace=False).astype(float)


def equal_weight_pairs(min_m=2, max_m=9, distinct=False):
    """Hypothesis strategy for two equal-weight random variables on one space."""
    elems = st.integers(-20, 20)

    @st.composite
    def build(draw):
        m = draw(st.integers(min_m, max_m))
        if distinct:
            x = draw(st.lists(elems, min_size=m, max_size=m, unique=True))
            y = draw(st.lists(elems, min_size=m, max_size=m, unique=True))
        else:
            x = draw(st.lists(elems, min_size=m, max_size=m))
            y = draw(st.lists(elems, min_size=m, max_size=m))
        return RandomVariable.equal_weight(x, "X"), RandomVariable.equal_weight(y, "Y")

    return build()
