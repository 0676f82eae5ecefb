import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from rexdesign import constants
from rexdesign.design import DesignSpace, SolverState, all_variance_a, all_variance_d
from rexdesign.exceptions import NotSPDError
from rexdesign.params import ParamEnum


class Criterion(ParamEnum):
    """Optimality criteria. I-optimality is solved as A-optimality on transformed regressors."""

    D = "D"
    A = "A"


@dataclass(frozen=True)
class EffBound:
    """A certified lower bound on the efficiency of a design relative to the optimum.

    Attributes
    ----------
    value : float
        The bound, in [0, 1].
    criterion : Criterion
        The criterion the bound refers to.
    max_g : float
        The largest variance-function value over the design space that produced the bound.
    """

    value: float
    criterion: Criterion
    max_g: float


def phi(criterion: Criterion, state: Optional[SolverState]) -> float:
    """Evaluate the criterion on the information matrix of a state.

    Parameters
    ----------
    criterion : Criterion
        D gives det(M)^(1/m), A gives 1 / tr(M^-1).
    state : SolverState, optional
        The state to evaluate. ``None`` or a non-finite log-determinant stands for a singular design.

    Returns
    -------
    float
        The criterion value, or 0 for a singular design.
    """
    criterion = Criterion.get_option(criterion)
    if state is None or not math.isfinite(state.logdet):
        return 0.0

    if criterion is Criterion.D:
        return math.exp(state.logdet / state.m)
    return 1.0 / float(np.trace(state.V))


def variances(criterion: Criterion, state: SolverState, space: DesignSpace) -> np.ndarray:
    """The vector g(w) over all points: d(w) for D-optimality, a(w) for A-optimality."""
    criterion = Criterion.get_option(criterion)
    if criterion is Criterion.D:
        return all_variance_d(state, space)
    return all_variance_a(state, space)


def efficiency_bound(
    criterion: Criterion,
    state: SolverState,
    space: DesignSpace,
    g: Optional[np.ndarray] = None,
) -> EffBound:
    """Compute the equivalence-theorem lower bound on the efficiency of the current design.

    For D-optimality the bound is m / max_x d_x(w), for A-optimality tr(M^-1) / max_x a_x(w). Both equal 1
    exactly at an optimal design.

    Parameters
    ----------
    criterion : Criterion
        The criterion.
    state : SolverState
        The state of a regular design.
    space : DesignSpace
        The design space.
    g : numpy.ndarray, optional
        Precomputed variances for ``criterion``. Computed if not given.

    Returns
    -------
    EffBound
        The bound together with the maximal variance value.
    """
    criterion = Criterion.get_option(criterion)
    if g is None:
        g = variances(criterion, state, space)

    max_g = float(np.max(g))
    if criterion is Criterion.D:
        value = state.m / max_g
    else:
        value = float(np.trace(state.V)) / max_g

    return EffBound(value=min(value, 1.0), criterion=criterion, max_g=max_g)


def i_to_a_transform(space: DesignSpace, L: np.ndarray) -> DesignSpace:
    """Transform an I-optimality problem with moment matrix ``L`` into an A-optimality problem.

    With L = R'R, the transformed regressors h(x) = R'^-1 f(x) satisfy tr(M_h(w)^-1) = tr(M(w)^-1 L) for
    every regular design w.

    Raises
    ------
    NotSPDError
        If ``L`` is not a symmetric positive definite m x m matrix.
    """
    L = np.asarray(L, dtype=float)
    m = space.m
    if L.shape != (m, m):
        raise NotSPDError(f"The moment matrix must be {m}x{m}, not {L.shape}.")
    if not np.allclose(L, L.T, rtol=1e-10, atol=1e-12 * np.abs(L).max()):
        raise NotSPDError("The moment matrix is not symmetric.")

    try:
        R = sla.cholesky(L, lower=False)
    except sla.LinAlgError:
        raise NotSPDError("The moment matrix is not positive definite.") from None

    H = sla.solve_triangular(R, space.regressors.T, trans="T", lower=False).T
    return DesignSpace(H, space.labels)


def log_efficiency(eff: float, cap: float = constants.LOG_EFF_CAP) -> float:
    """Map an efficiency to -log10(1 - eff), so 0.99 -> 2 and 0.9999 -> 4. Efficiency 1 maps to ``cap``."""
    if eff >= 1.0:
        return cap
    return min(cap, -math.log10(1.0 - eff))
