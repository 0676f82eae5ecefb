import numpy as np
import pytest

from rexdesign.design import Design, DesignSpace, build_state
from rexdesign.exceptions import SingularDesignError
from rexdesign.models import QuadraticModelSpec, quadratic_space


@pytest.fixture
def orthonormal():
    """The two-point space {e1, e2} in R^2."""
    return DesignSpace(np.eye(2))


@pytest.fixture
def quadratic():
    """The quadratic model on {-1, 0, 1}, with rows (1, -1, 1), (1, 0, 0), (1, 1, 1)."""
    return quadratic_space(QuadraticModelSpec(d=1, points_per_axis=3))


@pytest.fixture
def quadratic5():
    """The quadratic model on {-1, -0.5, 0, 0.5, 1}."""
    return quadratic_space(QuadraticModelSpec(d=1, points_per_axis=5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def random_instance(rng):
    """A factory of random regular (space, design, state) triples with m <= max_m and n <= max_n.

    About a third of the weights are zero so that exchanges see both interior and boundary steps.
    """

    def make(max_m=6, max_n=20, min_m=1):
        while True:
            m = int(rng.integers(min_m, max_m + 1))
            n = int(rng.integers(m + 1, max(max_n, m + 1) + 1))
            space = DesignSpace(rng.standard_normal((n, m)))
            w = rng.dirichlet(np.ones(n))
            w[rng.random(n) < 0.3] = 0.0
            if w.sum() == 0:
                continue
            design = Design(w / w.sum())
            try:
                return space, design, build_state(space, design)
            except SingularDesignError:
                continue

    return make
