import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from rexdesign.criteria import Criterion, efficiency_bound
from rexdesign.design import Design, DesignSpace, all_variance_d, build_state
from rexdesign.exceptions import NumericalWarning, RankDeficientError, SpanFailureError
from rexdesign.solvers import SolverConfig, TerminationReason, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ellipsoid:
    """The origin-centered ellipsoid {f : f' H f <= 1}."""

    H: np.ndarray

    @property
    def logdet(self) -> float:
        return float(np.linalg.slogdet(self.H)[1])

    def contains(self, point: np.ndarray, tol: float = 1e-9) -> bool:
        return contains(self, point, tol)


@dataclass(frozen=True)
class MVEECertificate:
    """Optimality information of an enclosing ellipsoid.

    Attributes
    ----------
    max_d : float
        The largest variance-function value of the dual design; the ellipsoid is M^-1 / max_d.
    eff_bound : float
        The certified D-efficiency bound m / max_d of the dual design.
    logdet_H : float
        log det H, equal to -log det M - m log(max_d).
    reason : str
        How the dual solve terminated.
    """

    max_d: float
    eff_bound: float
    logdet_H: float
    reason: str


class MVEEResult(NamedTuple):
    ellipsoid: Ellipsoid
    design: Design
    certificate: MVEECertificate


def contains(ellipsoid: Ellipsoid, point: np.ndarray, tol: float = 1e-9) -> bool:
    """Test whether f' H f <= 1 + tol."""
    f = np.asarray(point, dtype=float)
    return bool(f @ ellipsoid.H @ f <= 1 + tol)


def mvee_solve(
    points: np.ndarray, eps: float = 1e-6, config: Optional[SolverConfig] = None
) -> MVEEResult:
    """Find the minimum-volume origin-centered ellipsoid enclosing a set of points.

    The problem is solved through its dual, D-optimal design on the points as regressors. The solver runs until
    max_x d_x(w) <= m (1 + eps), and the returned shape matrix is H = M(w)^-1 / max_x d_x(w), which contains every
    point and tends to M^-1 / m as eps goes to 0.

    Parameters
    ----------
    points : numpy.ndarray
        An (n, m) array of points spanning R^m. Points at the origin are ignored and get zero weight.
    eps : float, default 1e-6
        Relative tolerance, in (0, 1).
    config : SolverConfig, optional
        Solver settings. The criterion and efficiency target are overridden.

    Returns
    -------
    MVEEResult
        The ellipsoid, the dual design over all input points, and a certificate.

    Raises
    ------
    SpanFailureError
        If the points do not span R^m.

    Examples
    --------
    >>> ellipsoid, design, certificate = mvee_solve(np.eye(2))
    >>> ellipsoid.H
    array([[1., 0.],
           [0., 1.]])
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0, 1), not {eps}.")

    P = np.atleast_2d(np.asarray(points, dtype=float))
    nonzero = np.flatnonzero(P.any(axis=1))
    try:
        space = DesignSpace(P[nonzero])
    except RankDeficientError as e:
        raise SpanFailureError(f"The points do not span their space: {e}") from None

    config = replace(
        config or SolverConfig(), criterion=Criterion.D, eff_target=1.0 / (1.0 + eps)
    )
    design, _, reason = solve(space, config)
    if reason is not TerminationReason.EFF_REACHED:
        warnings.warn(
            f"The dual solve stopped with {reason.value} before reaching eps={eps}; "
            "the ellipsoid encloses all points but may not be minimal.",
            NumericalWarning,
        )

    state = build_state(space, design)
    max_d = float(np.max(all_variance_d(state, space)))
    H = state.V / max_d
    H = (H + H.T) / 2

    bound = efficiency_bound(Criterion.D, state, space)
    certificate = MVEECertificate(
        max_d=max_d,
        eff_bound=bound.value,
        logdet_H=-state.logdet - space.m * math.log(max_d),
        reason=reason.value,
    )

    weights = np.zeros(P.shape[0])
    weights[nonzero] = design.weights
    logger.info("MVEE: max d = %.12g, eff bound = %.12g", max_d, bound.value)
    return MVEEResult(Ellipsoid(H), Design(weights), certificate)
