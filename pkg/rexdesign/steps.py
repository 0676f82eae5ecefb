"""Optimal step-lengths for a two-point weight exchange.

An exchange between points ``u`` and ``v`` moves the design from w to w + alpha (e_v - e_u) with alpha in the
interval [-w_v, w_u]. The functions here return the alpha that maximizes the criterion along that segment.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from rexdesign import constants
from rexdesign.criteria import Criterion
from rexdesign.design import (
    CrossTerms,
    Design,
    DesignSpace,
    SolverState,
    cross_terms,
    det_factor,
)
from rexdesign.exceptions import NumericalAnomalyError

Objective = Callable[[float], float]


class StepBranch(Enum):
    """The formula branch that produced a step."""

    TRIVIAL = "trivial"
    D_INDEPENDENT = "D-independent"
    D_DEPENDENT = "D-dependent"
    A_STATIONARY_G0 = "A-stationary-G0"
    A_STATIONARY = "A-stationary"
    A_BOUNDARY = "A-boundary"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class StepResult:
    """An optimal exchange step.

    Attributes
    ----------
    alpha : float
        The step, in [-w_v, w_u].
    nullifying : bool
        True if the step drives a positive weight to exactly zero (alpha == w_u > 0 or alpha == -w_v < 0).
    branch : StepBranch
        The branch of the step formula that fired.
    """

    alpha: float
    nullifying: bool
    branch: StepBranch


@dataclass(frozen=True)
class AStepConstants:
    """Constants of the A-optimality exchange profile h(alpha) = (alpha A + alpha^2 B) / (1 + alpha C - alpha^2 D)."""

    A: float
    B: float
    C: float
    D: float
    G: float

    @classmethod
    def from_cross_terms(cls, ct: CrossTerms) -> "AStepConstants":
        A = ct.a_v - ct.a_u
        B = 2 * ct.d_uv * ct.a_uv - ct.d_u * ct.a_v - ct.d_v * ct.a_u
        C = ct.d_v - ct.d_u
        D = ct.d_u * ct.d_v - ct.d_uv**2
        return cls(A=A, B=B, C=C, D=D, G=A * D + B * C)

    @property
    def discriminant(self) -> float:
        return self.B**2 - self.A * self.G

    @property
    def discriminant_scale(self) -> float:
        return max(self.B**2, abs(self.A * self.A * self.D), abs(self.A * self.B * self.C))


def _result(alpha: float, lo: float, hi: float, branch: StepBranch) -> StepResult:
    nullifying = (alpha == hi and hi > 0) or (alpha == lo and lo < 0)
    return StepResult(alpha=float(alpha), nullifying=bool(nullifying), branch=branch)


def _interval(design: Design, u: int, v: int) -> Tuple[float, float]:
    return -float(design.weights[v]), float(design.weights[u])


def d_step(state: SolverState, space: DesignSpace, design: Design, u: int, v: int) -> StepResult:
    """The D-optimal step-length of the exchange from ``u`` to ``v``.

    For linearly independent f(u), f(v) this is (d_v - d_u) / (2 [d_u d_v - d_uv^2]) clamped to [-w_v, w_u].
    For dependent regressors, detected by d_u d_v - d_uv^2 <= 1e-12 d_u d_v, it is w_u, 0 or -w_v by the sign of
    d_v - d_u. A difference d_v - d_u within 1e-12 max(d_u, d_v) of zero gives alpha = 0.
    """
    lo, hi = _interval(design, u, v)
    if (lo == 0 and hi == 0) or u == v:
        return _result(0.0, lo, hi, StepBranch.TRIVIAL)

    ct = cross_terms(state, space, u, v)
    denom = ct.d_u * ct.d_v - ct.d_uv**2
    diff = ct.d_v - ct.d_u
    # Equal variances up to rounding mean the pair is already balanced
    balanced = abs(diff) <= constants.ZERO_TOL * max(ct.d_u, ct.d_v)

    if denom <= constants.DEPENDENCE_RATIO * ct.d_u * ct.d_v:
        if balanced:
            alpha = 0.0
        else:
            alpha = hi if diff > 0 else lo
        return _result(alpha, lo, hi, StepBranch.D_DEPENDENT)

    if balanced:
        return _result(0.0, lo, hi, StepBranch.D_INDEPENDENT)
    alpha = diff / (2 * denom)
    return _result(min(hi, max(lo, alpha)), lo, hi, StepBranch.D_INDEPENDENT)


def a_step(state: SolverState, space: DesignSpace, design: Design, u: int, v: int) -> StepResult:
    """The A-optimal step-length of the exchange from ``u`` to ``v``.

    The maximizer of h on [-w_v, w_u] is found in four steps: with G = AD + BC, (1) if G is zero and B is not,
    the stationary point -A / (2B); (2) otherwise the root -(B + sqrt(B^2 - AG)) / G; either is returned if it lies
    strictly inside the interval; (3) else the end point in the direction of the sign of A, or 0 if A is zero.
    Parallel f(u) and f(v) go straight to (3).

    Raises
    ------
    NumericalAnomalyError
        If B^2 - AG is negative beyond rounding, which cannot happen for a consistent state.
    """
    lo, hi = _interval(design, u, v)
    if (lo == 0 and hi == 0) or u == v:
        return _result(0.0, lo, hi, StepBranch.TRIVIAL)

    ct = cross_terms(state, space, u, v)
    k = AStepConstants.from_cross_terms(ct)

    # Parallel regressors: B = G = 0 exactly and h is monotone in alpha
    if k.D <= constants.DEPENDENCE_RATIO * ct.d_u * ct.d_v:
        if abs(k.A) <= constants.ZERO_TOL * max(ct.a_u, ct.a_v):
            alpha = 0.0
        else:
            alpha = hi if k.A > 0 else lo
        return _result(alpha, lo, hi, StepBranch.A_BOUNDARY)

    disc = k.discriminant
    scale = k.discriminant_scale
    if disc < 0:
        if disc < -constants.DISCRIMINANT_TOL * scale:
            raise NumericalAnomalyError(
                f"Negative discriminant {disc:.3g} (scale {scale:.3g}) for the pair ({u}, {v})."
            )
        disc = 0.0

    g_zero = abs(k.G) <= constants.ZERO_TOL * (abs(k.A * k.D) + abs(k.B * k.C))
    b_zero = abs(k.B) <= constants.ZERO_TOL * (
        abs(2 * ct.d_uv * ct.a_uv) + ct.d_u * ct.a_v + ct.d_v * ct.a_u
    )

    r = None
    branch = StepBranch.A_BOUNDARY
    if g_zero and not b_zero:
        r = -k.A / (2 * k.B)
        branch = StepBranch.A_STATIONARY_G0
    elif not g_zero:
        root = math.sqrt(disc)
        if k.B <= 0 and root - k.B > 0:
            r = k.A / (root - k.B)
        else:
            r = -(k.B + root) / k.G
        branch = StepBranch.A_STATIONARY

    if r is not None and math.isfinite(r) and lo < r < hi:
        return _result(r, lo, hi, branch)

    if k.A > 0:
        alpha = hi
    elif k.A < 0:
        alpha = lo
    else:
        alpha = 0.0
    return _result(alpha, lo, hi, StepBranch.A_BOUNDARY)


def d_objective(state: SolverState, space: DesignSpace, u: int, v: int) -> Objective:
    """The change of log det M along the exchange, as a function of alpha."""
    ct = cross_terms(state, space, u, v)

    def objective(alpha: float) -> float:
        factor = det_factor(alpha, ct.d_u, ct.d_v, ct.d_uv)
        return math.log(factor) if factor > 0 else -math.inf

    return objective


def a_objective(state: SolverState, space: DesignSpace, u: int, v: int) -> Objective:
    """The change of -tr(M^-1) along the exchange, as a function of alpha."""
    k = AStepConstants.from_cross_terms(cross_terms(state, space, u, v))

    def objective(alpha: float) -> float:
        denom = 1 + alpha * k.C - alpha**2 * k.D
        if denom <= 0:
            return -math.inf
        return (alpha * k.A + alpha**2 * k.B) / denom

    return objective


def numeric_step(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    u: int,
    v: int,
    objective: Union[Criterion, str, Objective],
) -> StepResult:
    """Maximize a concave exchange profile numerically on [-w_v, w_u].

    Parameters
    ----------
    state, space, design : SolverState, DesignSpace, Design
        The current problem.
    u, v : int
        The exchanged points.
    objective : Criterion, str or callable
        A criterion, whose exact profile is used, or any function of alpha that is concave on the interval.

    Returns
    -------
    StepResult
        The maximizer, snapped to an end point within 1e-10 of it. Ties with alpha = 0 resolve to 0.
    """
    lo, hi = _interval(design, u, v)
    if (lo == 0 and hi == 0) or u == v:
        return _result(0.0, lo, hi, StepBranch.TRIVIAL)

    if not callable(objective):
        criterion = Criterion.get_option(objective)
        make = d_objective if criterion is Criterion.D else a_objective
        objective = make(state, space, u, v)

    def value(alpha: float) -> float:
        f = objective(alpha)
        return f if np.isfinite(f) else -math.inf

    xatol = max(constants.NUMERIC_XTOL * (hi - lo), 1e-300)
    res = minimize_scalar(
        lambda a: -value(a),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xatol, "maxiter": 1000},
    )
    x = float(res.x)
    if abs(x - hi) <= constants.NUMERIC_SNAP:
        x = hi
    elif abs(x - lo) <= constants.NUMERIC_SNAP:
        x = lo

    # Zero first so that flat profiles keep the design unchanged
    best_alpha, best = 0.0, value(0.0)
    tol = 1e-15 * max(1.0, abs(best))
    for candidate in (x, lo, hi):
        f = value(candidate)
        if f > best + tol:
            best_alpha, best = candidate, f

    return _result(best_alpha, lo, hi, StepBranch.NUMERIC)
