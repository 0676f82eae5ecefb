from dataclasses import dataclass

import numpy as np

from rexdesign import constants
from rexdesign.design import DesignSpace
from rexdesign.exceptions import RankDeficientError, SizeOverflowError


@dataclass(frozen=True)
class QuadraticModelSpec:
    """The full quadratic regression model on an equally spaced grid in [-1, 1]^d.

    Attributes
    ----------
    d : int
        Dimension of the cube.
    points_per_axis : int
        Grid resolution per axis, end points included.
    """

    d: int
    points_per_axis: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be at least 1, not {self.d}.")
        if self.points_per_axis < 2:
            raise ValueError(
                f"points_per_axis must be at least 2, not {self.points_per_axis}."
            )

    @property
    def n(self) -> int:
        return self.points_per_axis**self.d

    @property
    def m(self) -> int:
        return (self.d + 1) * (self.d + 2) // 2


@dataclass(frozen=True)
class RandomModelSpec:
    """A design space of ``n`` regressors drawn independently from the standard normal distribution on R^m."""

    n: int
    m: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < self.m:
            raise ValueError(f"A random model needs n >= m >= 1, got n={self.n}, m={self.m}.")


def quadratic_space(
    spec: QuadraticModelSpec, max_points: int = constants.MAX_GRID_POINTS
) -> DesignSpace:
    """Generate the design space of the full quadratic model on a grid.

    The regressor of the grid point t = (t_1, ..., t_d) is (1, t_1, ..., t_d, t_j t_k for j <= k), with the
    products in row-major upper-triangle order. Rows follow the lexicographic order of the grid and each point's
    coordinates are kept as its label.

    Parameters
    ----------
    spec : QuadraticModelSpec
        The cube dimension and grid resolution.
    max_points : int, default 10,000,000
        The largest number of grid points allowed.

    Returns
    -------
    DesignSpace
        A space with n = points_per_axis^d points and m = (d + 1)(d + 2) / 2.

    Raises
    ------
    SizeOverflowError
        If the grid would have more than ``max_points`` points.

    Examples
    --------
    >>> quadratic_space(QuadraticModelSpec(d=1, points_per_axis=3)).regressors
    array([[ 1., -1.,  1.],
           [ 1.,  0.,  0.],
           [ 1.,  1.,  1.]])
    """
    if spec.n > max_points:
        raise SizeOverflowError(
            f"The grid would have {spec.n:,} points, more than the cap of {max_points:,}."
        )

    axis = np.linspace(-1.0, 1.0, spec.points_per_axis)
    grids = np.meshgrid(*([axis] * spec.d), indexing="ij")
    T = np.stack([g.ravel() for g in grids], axis=1)

    j, k = np.triu_indices(spec.d)
    X = np.hstack([np.ones((spec.n, 1)), T, T[:, j] * T[:, k]])
    return DesignSpace(X, labels=T)


def random_space(spec: RandomModelSpec, max_tries: int = constants.RANDOM_SPACE_TRIES) -> DesignSpace:
    """Generate a design space of standard normal regressors, reproducible from ``spec.seed``.

    Raises
    ------
    RankDeficientError
        If ``max_tries`` draws are all rank-deficient.
    """
    rng = np.random.default_rng(spec.seed)
    for _ in range(max_tries):
        try:
            return DesignSpace(rng.standard_normal((spec.n, spec.m)))
        except RankDeficientError:
            continue

    raise RankDeficientError(
        f"No full-rank {spec.n}x{spec.m} random design space in {max_tries} draws."
    )
