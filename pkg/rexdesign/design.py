import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from rexdesign import constants
from rexdesign.exceptions import (
    NumericalBreakdownError,
    RankDeficientError,
    SingularDesignError,
    StepOutOfRangeError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DesignSpace:
    """A finite design space: ``n`` candidate points, each with a regressor in R^m.

    Attributes
    ----------
    regressors : numpy.ndarray
        An (n, m) read-only array whose rows are the regressors f(1), ..., f(n).
    labels : numpy.ndarray, optional
        Per-point identifiers such as grid coordinates. Carried along, never used in computations.

    Raises
    ------
    RankDeficientError
        If a row is zero, n < m, or the rows do not span R^m.
    """

    regressors: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        X = np.array(self.regressors, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise RankDeficientError(
                f"Regressors must be a non-empty 2D array, not shape {X.shape}."
            )
        if not np.all(np.isfinite(X)):
            raise RankDeficientError("Regressors must be finite.")

        n, m = X.shape
        if n < m:
            raise RankDeficientError(
                f"A design space needs at least m={m} points, got n={n}."
            )

        zero_rows = np.flatnonzero(~X.any(axis=1))
        if zero_rows.size:
            raise RankDeficientError(
                f"Regressors must be non-zero, but row {zero_rows[0]} is the zero vector."
            )

        s = np.linalg.svd(X, compute_uv=False)
        if s[-1] <= constants.RANK_RATIO * s[0]:
            raise RankDeficientError(
                f"The regressors do not span R^{m} (singular value ratio {s[-1] / s[0]:.3g})."
            )

        X.setflags(write=False)
        object.__setattr__(self, "regressors", X)

        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.shape[0] != n:
                raise ValueError(f"Expected {n} labels, got {labels.shape[0]}.")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.regressors.shape[0]

    @property
    def m(self) -> int:
        return self.regressors.shape[1]

    def permuted(self, order: Sequence[int]) -> "DesignSpace":
        """Return the same space with its rows reordered."""
        order = np.asarray(order)
        labels = None if self.labels is None else self.labels[order]
        return DesignSpace(self.regressors[order], labels)


@dataclass
class Design:
    """An approximate design: a probability vector of weights over the design points.

    Weights that are zero are written as exact zeros, so the support needs no tolerance.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("Design weights must be a 1D array.")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("Design weights must be finite and non-negative.")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"Design weights must sum to 1, not {w.sum()!r}.")
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Indices of the points with strictly positive weight, in increasing order."""
        return np.flatnonzero(self.weights > 0)

    @classmethod
    def uniform(cls, n: int, indices: Optional[Sequence[int]] = None) -> "Design":
        """Uniform weights on ``indices``, or on all ``n`` points if none are given."""
        w = np.zeros(n)
        if indices is None:
            w[:] = 1.0 / n
        else:
            idx = np.unique(np.asarray(indices, dtype=int))
            w[idx] = 1.0 / idx.size
        return cls(w)

    @classmethod
    def vertex(cls, n: int, x: int) -> "Design":
        """The one-point design e_x."""
        w = np.zeros(n)
        w[x] = 1.0
        return cls(w)

    def copy(self) -> "Design":
        return Design(self.weights.copy())


@dataclass
class SolverState:
    """Cached information matrix ``M``, its inverse ``V`` and ``log det M`` for a tracked design."""

    M: np.ndarray
    V: np.ndarray
    logdet: float
    exchanges_since_refresh: int = field(default=0)

    @property
    def m(self) -> int:
        return self.M.shape[0]


class CrossTerms(NamedTuple):
    d_u: float
    d_v: float
    d_uv: float
    a_u: float
    a_v: float
    a_uv: float


def information_matrix(space: DesignSpace, design: Design) -> np.ndarray:
    """Compute M(w) = sum_x w_x f(x) f(x)' over the support of ``design``."""
    supp = design.support
    X = space.regressors[supp]
    M = X.T @ (design.weights[supp, None] * X)
    return (M + M.T) / 2


def _factorize(M: np.ndarray) -> Tuple[np.ndarray, float]:
    """Return the inverse and log-determinant of a regular information matrix."""
    eigs = np.linalg.eigvalsh(M)
    if eigs[-1] <= 0 or eigs[0] <= constants.REGULARITY_RATIO * eigs[-1]:
        raise SingularDesignError(
            "The information matrix is singular or ill-conditioned "
            f"(eigenvalue ratio {eigs[0] / eigs[-1] if eigs[-1] > 0 else 0.0:.3g})."
        )

    try:
        c, lower = sla.cho_factor(M)
    except sla.LinAlgError as e:
        raise SingularDesignError(f"Cholesky factorization failed: {e}") from None

    V = sla.cho_solve((c, lower), np.eye(M.shape[0]))
    V = (V + V.T) / 2
    logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
    return V, logdet


def build_state(space: DesignSpace, design: Design) -> SolverState:
    """Build the solver state of a regular design from a fresh factorization.

    Parameters
    ----------
    space : DesignSpace
        The design space the weights refer to.
    design : Design
        A regular design on ``space``.

    Returns
    -------
    SolverState
        The information matrix, its inverse and its log-determinant.

    Raises
    ------
    SingularDesignError
        If the information matrix is singular, or its smallest eigenvalue is below 1e-12 times its largest.

    Examples
    --------
    >>> space = DesignSpace(np.eye(2))
    >>> build_state(space, Design.uniform(2)).logdet
    -1.3862943611198906
    """
    if design.n != space.n:
        raise ValueError(f"The design has {design.n} weights but the space has {space.n} points.")
    M = information_matrix(space, design)
    V, logdet = _factorize(M)
    return SolverState(M=M, V=V, logdet=logdet)


def refresh(state: SolverState, space: DesignSpace, design: Design) -> SolverState:
    """Recompute ``M``, ``V`` and ``logdet`` from scratch in place, and reset the update counter."""
    fresh = build_state(space, design)
    logger.debug(
        "Refreshed state after %d exchanges, logdet drift %.3g",
        state.exchanges_since_refresh,
        state.logdet - fresh.logdet,
    )
    state.M = fresh.M
    state.V = fresh.V
    state.logdet = fresh.logdet
    state.exchanges_since_refresh = 0
    return state


def variance_d(state: SolverState, space: DesignSpace, x: int) -> float:
    """The variance function d_x(w) = f(x)' M^-1 f(x)."""
    f = space.regressors[x]
    return float(f @ state.V @ f)


def variance_a(state: SolverState, space: DesignSpace, x: int) -> float:
    """The A-optimality analogue a_x(w) = f(x)' M^-2 f(x), computed as |M^-1 f(x)|^2."""
    y = state.V @ space.regressors[x]
    return float(y @ y)


def all_variance_d(state: SolverState, space: DesignSpace) -> np.ndarray:
    """The vector of d_x(w) over all points."""
    X = space.regressors
    return np.einsum("ij,ij->i", X @ state.V, X)


def all_variance_a(state: SolverState, space: DesignSpace) -> np.ndarray:
    """The vector of a_x(w) over all points."""
    Y = space.regressors @ state.V
    return np.einsum("ij,ij->i", Y, Y)


def cross_terms(state: SolverState, space: DesignSpace, u: int, v: int) -> CrossTerms:
    """Compute the bilinear forms an exchange between ``u`` and ``v`` needs.

    Only y_u = V f(u) and y_v = V f(v) are formed; the V^2 forms are their inner products.
    """
    fu = space.regressors[u]
    fv = space.regressors[v]
    yu = state.V @ fu
    yv = state.V @ fv
    return CrossTerms(
        d_u=float(fu @ yu),
        d_v=float(fv @ yv),
        d_uv=float(fu @ yv),
        a_u=float(yu @ yu),
        a_v=float(yv @ yv),
        a_uv=float(yu @ yv),
    )


def det_factor(alpha: float, d_u: float, d_v: float, d_uv: float) -> float:
    """The ratio det M(w + alpha(e_v - e_u)) / det M(w)."""
    return (1 + alpha * d_v) * (1 - alpha * d_u) + alpha**2 * d_uv**2


def _rank_one(V: np.ndarray, f: np.ndarray, c: float) -> np.ndarray:
    """Sherman-Morrison: the inverse of V^-1 + c f f'."""
    y = V @ f
    return V - (c / (1 + c * float(f @ y))) * np.outer(y, y)


def apply_exchange(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    u: int,
    v: int,
    alpha: float,
    clamp: bool = False,
) -> Tuple[SolverState, Design]:
    """Move weight ``alpha`` from point ``u`` to point ``v`` and update the state in place.

    Parameters
    ----------
    state : SolverState
        The state tracking ``design``. Updated in place.
    space : DesignSpace
        The design space.
    design : Design
        The current design. Updated in place: w_u <- w_u - alpha, w_v <- w_v + alpha.
    u, v : int
        The exchanged points.
    alpha : float
        The step, which must lie in [-w_v, w_u]. A step within 1e-14 of an end point is snapped to it and
        the corresponding weight is set to exactly zero.
    clamp : bool, default False
        If true, steps outside the interval are clamped into it instead of raising.

    Returns
    -------
    tuple of SolverState and Design
        The updated ``state`` and ``design`` (the same objects that were passed).

    Raises
    ------
    StepOutOfRangeError
        If ``alpha`` lies outside [-w_v, w_u] by more than 1e-14 and ``clamp`` is false.
    NumericalBreakdownError
        If the determinant factor of the exchange is not above 1e-14. The state and design are left untouched.
    """
    w = design.weights
    wu, wv = float(w[u]), float(w[v])
    lo, hi = -wv, wu

    if alpha < lo - constants.BOUNDARY_SNAP or alpha > hi + constants.BOUNDARY_SNAP:
        if not clamp:
            raise StepOutOfRangeError(
                f"Step {alpha!r} is outside [{lo!r}, {hi!r}] for the pair ({u}, {v})."
            )
        alpha = min(hi, max(lo, alpha))

    if abs(alpha - hi) <= constants.BOUNDARY_SNAP:
        alpha = hi
    elif abs(alpha - lo) <= constants.BOUNDARY_SNAP:
        alpha = lo

    if alpha == 0 or u == v:
        return state, design

    fu = space.regressors[u]
    fv = space.regressors[v]
    ct = cross_terms(state, space, u, v)
    factor = det_factor(alpha, ct.d_u, ct.d_v, ct.d_uv)
    if not factor > constants.DET_FACTOR_FLOOR:
        raise NumericalBreakdownError(
            f"Determinant factor {factor:.3g} for the exchange ({u}, {v}, {alpha!r}) is too small."
        )

    # Add the incoming rank-one term first so both denominators stay positive
    if alpha > 0:
        V = _rank_one(_rank_one(state.V, fv, alpha), fu, -alpha)
    else:
        V = _rank_one(_rank_one(state.V, fu, -alpha), fv, alpha)

    state.V = (V + V.T) / 2
    state.M = state.M + alpha * (np.outer(fv, fv) - np.outer(fu, fu))
    state.logdet += float(np.log(factor))
    state.exchanges_since_refresh += 1

    if alpha == hi:
        w[u] = 0.0
        w[v] = wv + wu
    elif alpha == lo:
        w[v] = 0.0
        w[u] = wu + wv
    else:
        w[u] = wu - alpha
        w[v] = wv + alpha

    return state, design
