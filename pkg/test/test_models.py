import numpy as np
import pytest

from rexdesign.exceptions import SizeOverflowError
from rexdesign.models import (
    QuadraticModelSpec,
    RandomModelSpec,
    quadratic_space,
    random_space,
)


def test_quadratic_rows_d1():
    """Test the quadratic model on {-1, 0, 1}"""
    space = quadratic_space(QuadraticModelSpec(d=1, points_per_axis=3))

    assert space.regressors.tolist() == [[1, -1, 1], [1, 0, 0], [1, 1, 1]]
    assert space.m == 3


def test_quadratic_rows_d2():
    """Test the row order and monomial order of the 3 x 3 grid"""
    space = quadratic_space(QuadraticModelSpec(d=2, points_per_axis=3))

    assert space.n == 9
    assert space.regressors[0].tolist() == [1, -1, -1, 1, 1, 1]
    # Lexicographic grid order: the last coordinate varies fastest
    assert space.labels[:3].tolist() == [[-1, -1], [-1, 0], [-1, 1]]
    assert space.regressors[1].tolist() == [1, -1, 0, 1, 0, 0]


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
def test_quadratic_m_formula(d):
    """Test that the regressor width is (d + 1)(d + 2) / 2"""
    spec = QuadraticModelSpec(d=d, points_per_axis=3)
    space = quadratic_space(spec)

    assert space.m == spec.m == (d + 1) * (d + 2) // 2
    assert space.n == spec.n == 3**d


def test_quadratic_grid_in_cube():
    """Test that the grid is equally spaced in [-1, 1] with end points"""
    space = quadratic_space(QuadraticModelSpec(d=1, points_per_axis=5))
    assert space.labels[:, 0].tolist() == [-1, -0.5, 0, 0.5, 1]


def test_quadratic_size_cap():
    """Test that grids above the cap are refused before they are built"""
    with pytest.raises(SizeOverflowError):
        quadratic_space(QuadraticModelSpec(d=3, points_per_axis=11), max_points=1000)


def test_quadratic_spec_validation():
    """Test that a grid needs at least two points per axis"""
    with pytest.raises(ValueError):
        QuadraticModelSpec(d=2, points_per_axis=1)
    with pytest.raises(ValueError):
        QuadraticModelSpec(d=0, points_per_axis=3)


def test_random_space_is_seeded():
    """Test that a fixed seed gives the same matrix and another seed does not"""
    a = random_space(RandomModelSpec(n=20, m=4, seed=7))
    b = random_space(RandomModelSpec(n=20, m=4, seed=7))
    c = random_space(RandomModelSpec(n=20, m=4, seed=8))

    assert np.array_equal(a.regressors, b.regressors)
    assert not np.array_equal(a.regressors, c.regressors)


def test_random_space_is_standard_normal():
    """Test that column means of a large sample are close to zero"""
    n = 100_000
    space = random_space(RandomModelSpec(n=n, m=3, seed=0))

    assert np.all(np.abs(space.regressors.mean(axis=0)) < 3.5 / np.sqrt(n))
    np.testing.assert_allclose(space.regressors.std(axis=0), 1, atol=0.02)


def test_random_space_square():
    """Test that n = m is accepted"""
    space = random_space(RandomModelSpec(n=5, m=5, seed=1))
    assert space.regressors.shape == (5, 5)


def test_random_spec_validation():
    """Test that fewer points than dimensions are rejected"""
    with pytest.raises(ValueError):
        RandomModelSpec(n=2, m=3)
