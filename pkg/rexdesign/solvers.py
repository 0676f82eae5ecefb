import itertools
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
import xarray as xr

from rexdesign import constants
from rexdesign.criteria import Criterion, efficiency_bound, phi, variances
from rexdesign.design import (
    Design,
    DesignSpace,
    SolverState,
    apply_exchange,
    build_state,
    refresh,
)
from rexdesign.exceptions import (
    NoRegularStartError,
    NumericalBreakdownError,
    NumericalWarning,
    SingularDesignError,
)
from rexdesign.params import ParamEnum
from rexdesign.steps import StepResult, a_step, d_step

logger = logging.getLogger(__name__)

StepFunction = Callable[[SolverState, DesignSpace, Design, int, int], StepResult]


class Algorithm(ParamEnum):
    """Solver algorithms: randomized exchange, vertex exchange and the multiplicative baseline."""

    REX = "rex"
    VEM = "vem"
    MUL = "mul"


class TerminationReason(Enum):
    EFF_REACHED = "EffReached"
    TIME_OUT = "TimeOut"
    STALLED = "Stalled"


@dataclass
class SolverConfig:
    """Settings shared by all solvers.

    Attributes
    ----------
    criterion : Criterion or str, default "D"
        The optimality criterion.
    gamma : float, default 4.0
        Batch size parameter of REX; the greedy set has min(ceil(gamma * m), n) points. Must be at least 1/m.
    eff_target : float, default 1 - 1e-6
        Stop once the certified efficiency bound reaches this value. Must be in (0, 1).
    t_max : float, default 60.0
        Wall-clock budget in seconds.
    seed : int, default 0
        Seed of the random generator used for initial designs and REX permutations.
    refresh_cadence : int, default 64
        Number of rank-one exchanges between full refactorizations.
    algorithm : Algorithm or str, default "rex"
        The algorithm :func:`solve` dispatches to.
    stall_iterations : int, default 50
        Number of consecutive outer iterations without relative improvement above ``stall_tol`` that ends a run.
    stall_tol : float, default 1e-15
        Relative improvement below which an iteration counts towards a stall.
    max_iterations : int, optional
        Cap on outer iterations. Reaching it is reported as a time out.
    clamp_steps : bool, default False
        Clamp out-of-range exchange steps instead of raising.
    timing : bool, default True
        Record elapsed seconds in trajectories. If false, zeros are recorded so that trajectories are reproducible.
    max_init_tries : int, default 100
        Number of random m-point initial designs tried before giving up.
    """

    criterion: Criterion = Criterion.D
    gamma: float = constants.DEFAULT_GAMMA
    eff_target: float = constants.DEFAULT_EFF
    t_max: float = constants.DEFAULT_T_MAX
    seed: int = 0
    refresh_cadence: int = constants.REFRESH_CADENCE
    algorithm: Algorithm = Algorithm.REX
    stall_iterations: int = constants.STALL_ITERATIONS
    stall_tol: float = constants.STALL_TOL
    max_iterations: Optional[int] = None
    clamp_steps: bool = False
    timing: bool = True
    max_init_tries: int = constants.INIT_TRIES

    def __post_init__(self) -> None:
        self.criterion = Criterion.get_option(self.criterion)
        self.algorithm = Algorithm.get_option(self.algorithm)

        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, not {self.gamma}.")
        if not 0 < self.eff_target < 1:
            raise ValueError(f"eff_target must be in (0, 1), not {self.eff_target}.")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, not {self.t_max}.")
        if self.refresh_cadence < 1:
            raise ValueError(f"refresh_cadence must be at least 1, not {self.refresh_cadence}.")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative.")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer.")


class TrajectoryRecord(NamedTuple):
    iteration: int
    seconds: float
    criterion: float
    eff_bound: float
    support_size: int


@dataclass
class Trajectory:
    """Per-iteration history of a solver run."""

    records: List[TrajectoryRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: TrajectoryRecord) -> None:
        self.records.append(record)

    @property
    def criterion_values(self) -> np.ndarray:
        return np.array([r.criterion for r in self.records])

    @property
    def last(self) -> TrajectoryRecord:
        return self.records[-1]

    def to_dataframe(self) -> pd.DataFrame:
        """Return the records as a DataFrame with columns ``iter, seconds, criterion, eff_bound, support_size``."""
        df = pd.DataFrame.from_records(self.records, columns=TrajectoryRecord._fields)
        return df.rename(columns={"iteration": "iter"})

    def to_xarray(self) -> xr.Dataset:
        """Return the records as a Dataset indexed by outer iteration."""
        return self.to_dataframe().set_index("iter").to_xarray()


@dataclass(frozen=True)
class SubspaceSelection:
    """The active points of one REX iteration: the greedy set united with the support."""

    greedy: np.ndarray
    support: np.ndarray
    active: np.ndarray


class Exchange(NamedTuple):
    k: int
    l: int
    step: StepResult


@dataclass
class IterationStats:
    lbe: Optional[Exchange] = None
    pairs: int = 0
    applied: int = 0
    breakdowns: int = 0


class SolveResult(NamedTuple):
    design: Design
    trajectory: Trajectory
    reason: TerminationReason


def step_function(criterion: Criterion) -> StepFunction:
    """The closed-form step for a criterion."""
    return d_step if Criterion.get_option(criterion) is Criterion.D else a_step


def greedy_size(gamma: float, m: int, n: int) -> int:
    """L = min(ceil(gamma * m), n), ignoring rounding noise in the product."""
    return min(math.ceil(round(gamma * m, 9)), n)


def _exchange(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    k: int,
    l: int,
    step: StepResult,
    config: SolverConfig,
) -> bool:
    """Apply a step, refreshing on breakdown or when the cadence is reached. Returns False on breakdown."""
    try:
        apply_exchange(state, space, design, k, l, step.alpha, clamp=config.clamp_steps)
    except NumericalBreakdownError as e:
        warnings.warn(f"{e} Refreshing the state.", NumericalWarning)
        refresh(state, space, design)
        return False

    if state.exchanges_since_refresh >= config.refresh_cadence:
        refresh(state, space, design)
    return True


def lbe_step(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    criterion: Criterion,
    g: Optional[np.ndarray] = None,
) -> Exchange:
    """Perform the leading exchange between the Böhning pair of the current design.

    The pair is k, the support point with the smallest g-value, and l, the point with the largest g-value over
    the whole space (ties to the lowest index). The optimal step is applied in place.

    Parameters
    ----------
    state, space, design : SolverState, DesignSpace, Design
        The current problem. ``state`` and ``design`` are updated in place.
    criterion : Criterion
        Selects g (d or a) and the step formula.
    g : numpy.ndarray, optional
        The variances of the current design, if already computed.

    Returns
    -------
    Exchange
        The pair and the step taken. ``step.nullifying`` tells whether a weight was driven to zero.
    """
    criterion = Criterion.get_option(criterion)
    if g is None:
        g = variances(criterion, state, space)

    supp = design.support
    k = int(supp[np.argmin(g[supp])])
    l = int(np.argmax(g))

    step = step_function(criterion)(state, space, design, k, l)
    if step.alpha != 0:
        apply_exchange(state, space, design, k, l, step.alpha)
    return Exchange(k, l, step)


def select_subspace(g: np.ndarray, design: Design, gamma: float, m: int) -> SubspaceSelection:
    """Choose the active points of a REX iteration.

    The greedy set holds the indices of the L = min(ceil(gamma * m), n) largest entries of ``g``, ties broken
    towards the lowest index; the active set is its union with the support of ``design``.
    """
    g = np.asarray(g)
    L = greedy_size(gamma, m, g.shape[0])
    greedy = np.argsort(-g, kind="stable")[:L]
    support = design.support
    return SubspaceSelection(
        greedy=greedy, support=support, active=np.union1d(greedy, support)
    )


def rex_iterate(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    config: SolverConfig,
    rng: np.random.Generator,
    g: Optional[np.ndarray] = None,
    deadline: Optional[float] = None,
) -> IterationStats:
    """Run one outer iteration of the randomized exchange algorithm in place.

    The iteration performs the leading exchange, selects the active subspace from the updated variances, and
    sweeps the pairs (k_1, l_1), ..., (k_K, l_1), ..., (k_K, l_L) built from random permutations of the support and
    the greedy set. Each pair's optimal step is computed from the live state. If the leading exchange was
    nullifying, only nullifying steps are applied.

    Parameters
    ----------
    state, space, design : SolverState, DesignSpace, Design
        The current problem, updated in place.
    config : SolverConfig
        Supplies the criterion, gamma and the refresh cadence.
    rng : numpy.random.Generator
        The source of the permutations.
    g : numpy.ndarray, optional
        The variances of the current design, if already computed.
    deadline : float, optional
        A ``time.monotonic`` value. The clock is read before every exchange of the sweep, which stops once it
        has passed.

    Returns
    -------
    IterationStats
        The leading exchange and counts of the swept, applied and broken-down pairs.
    """
    criterion = config.criterion
    step = step_function(criterion)

    stats = IterationStats()
    try:
        stats.lbe = lbe_step(state, space, design, criterion, g)
    except NumericalBreakdownError as e:
        warnings.warn(f"{e} Refreshing the state.", NumericalWarning)
        refresh(state, space, design)
        stats.breakdowns += 1

    g = variances(criterion, state, space)
    selection = select_subspace(g, design, config.gamma, space.m)
    ks = rng.permutation(selection.support)
    ls = rng.permutation(selection.greedy)
    only_nullifying = stats.lbe is not None and stats.lbe.step.nullifying

    for l, k in itertools.product(ls, ks):
        if k == l:
            continue
        if deadline is not None and time.monotonic() > deadline:
            break
        stats.pairs += 1
        result = step(state, space, design, int(k), int(l))
        if result.alpha == 0 or (only_nullifying and not result.nullifying):
            continue
        if _exchange(state, space, design, int(k), int(l), result, config):
            stats.applied += 1
        else:
            stats.breakdowns += 1

    return stats


def vem_iterate(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    config: SolverConfig,
    rng: np.random.Generator,
    g: Optional[np.ndarray] = None,
    deadline: Optional[float] = None,
) -> IterationStats:
    """One vertex exchange iteration: a single leading exchange."""
    try:
        lbe = lbe_step(state, space, design, config.criterion, g)
    except NumericalBreakdownError as e:
        warnings.warn(f"{e} Refreshing the state.", NumericalWarning)
        refresh(state, space, design)
        return IterationStats(pairs=1, breakdowns=1)
    return IterationStats(lbe=lbe, pairs=1, applied=int(lbe.step.alpha != 0))


def mul_update(
    state: SolverState, space: DesignSpace, design: Design, criterion: Criterion, g: Optional[np.ndarray] = None
) -> Design:
    """Apply one multiplicative update to ``design`` in place and return it.

    For D-optimality w_x <- w_x d_x / m; for A-optimality w_x <- w_x sqrt(a_x) / sum_y w_y sqrt(a_y).
    """
    criterion = Criterion.get_option(criterion)
    if g is None:
        g = variances(criterion, state, space)

    w = design.weights
    if criterion is Criterion.D:
        w *= g / state.m
    else:
        w *= np.sqrt(g)
    w /= w.sum()
    return design


def _mul_iterate(
    state: SolverState,
    space: DesignSpace,
    design: Design,
    config: SolverConfig,
    rng: np.random.Generator,
    g: Optional[np.ndarray] = None,
    deadline: Optional[float] = None,
) -> IterationStats:
    mul_update(state, space, design, config.criterion, g)
    refresh(state, space, design)
    return IterationStats(applied=int(design.support.size))


def initial_design(
    space: DesignSpace, rng: np.random.Generator, max_tries: int = constants.INIT_TRIES
) -> Tuple[Design, SolverState]:
    """Sample a regular design with uniform weights on m random points.

    Raises
    ------
    NoRegularStartError
        If ``max_tries`` samples are all singular.
    """
    for _ in range(max_tries):
        idx = rng.choice(space.n, size=space.m, replace=False)
        design = Design.uniform(space.n, idx)
        try:
            return design, build_state(space, design)
        except SingularDesignError:
            continue

    raise NoRegularStartError(
        f"No regular {space.m}-point design was found in {max_tries} random tries."
    )


Iterate = Callable[..., IterationStats]


def _sam_solve(
    space: DesignSpace,
    config: SolverConfig,
    iterate: Iterate,
    initial: Optional[Design] = None,
    full_support_start: bool = False,
) -> SolveResult:
    """Run the subspace ascent loop until the efficiency target, the time budget, or a stall."""
    if config.gamma < 1.0 / space.m:
        raise ValueError(f"gamma must be at least 1/m = {1.0 / space.m:.6g}, not {config.gamma}.")

    rng = np.random.default_rng(config.seed)
    start = time.monotonic()
    deadline = start + config.t_max

    if initial is not None:
        design = initial.copy()
        state = build_state(space, design)
    elif full_support_start:
        design = Design.uniform(space.n)
        state = build_state(space, design)
    else:
        design, state = initial_design(space, rng, config.max_init_tries)

    criterion = config.criterion
    trajectory = Trajectory()
    stalled = 0
    iteration = 0

    while True:
        if state.exchanges_since_refresh:
            refresh(state, space, design)
        g = variances(criterion, state, space)
        bound = efficiency_bound(criterion, state, space, g)
        value = phi(criterion, state)
        now = time.monotonic()
        elapsed = now - start if config.timing else 0.0

        trajectory.append(
            TrajectoryRecord(iteration, elapsed, value, bound.value, int(design.support.size))
        )
        logger.debug(
            "iteration %d: criterion=%.12g bound=%.12g support=%d",
            iteration,
            value,
            bound.value,
            design.support.size,
        )

        if bound.value >= config.eff_target:
            reason = TerminationReason.EFF_REACHED
            break
        if now >= deadline:
            reason = TerminationReason.TIME_OUT
            break
        if stalled >= config.stall_iterations:
            reason = TerminationReason.STALLED
            break
        if config.max_iterations is not None and iteration >= config.max_iterations:
            reason = TerminationReason.TIME_OUT
            break

        iterate(state, space, design, config, rng, g=g, deadline=deadline)

        new_value = phi(criterion, state)
        if new_value - value <= config.stall_tol * abs(value):
            stalled += 1
        else:
            stalled = 0
        iteration += 1

    logger.info(
        "%s stopped after %d iterations (%s): criterion=%.12g bound=%.12g",
        config.algorithm.value,
        iteration,
        reason.value,
        value,
        bound.value,
    )
    return SolveResult(design, trajectory, reason)


def solve(space: DesignSpace, config: Optional[SolverConfig] = None, initial: Optional[Design] = None) -> SolveResult:
    """Compute an approximate optimal design with the algorithm named in ``config``.

    With the default algorithm, REX, the run starts from uniform weights on m random points and repeats
    :func:`rex_iterate` until the certified efficiency bound reaches ``eff_target``, the wall clock exceeds
    ``t_max``, or the criterion stalls. One trajectory record is written per outer iteration.

    Parameters
    ----------
    space : DesignSpace
        The design space.
    config : SolverConfig, optional
        Solver settings. Defaults to ``SolverConfig()``.
    initial : Design, optional
        A regular starting design, instead of a random one.

    Returns
    -------
    SolveResult
        The design, the trajectory and the termination reason.

    Raises
    ------
    NoRegularStartError
        If no regular random initial design was found.

    Examples
    --------
    >>> space = DesignSpace([[1, -1, 1], [1, 0, 0], [1, 1, 1]])
    >>> design, trajectory, reason = solve(space, SolverConfig(criterion="A"))
    >>> design.weights.round(4)
    array([0.25, 0.5 , 0.25])
    """
    config = config or SolverConfig()
    if config.algorithm is Algorithm.VEM:
        return vem_solve(space, config, initial)
    if config.algorithm is Algorithm.MUL:
        return mul_solve(space, config, initial)
    return _sam_solve(space, config, rex_iterate, initial)


def vem_solve(space: DesignSpace, config: Optional[SolverConfig] = None, initial: Optional[Design] = None) -> SolveResult:
    """Compute an approximate optimal design with the vertex exchange method: one leading exchange per iteration."""
    return _sam_solve(space, config or SolverConfig(), vem_iterate, initial)


def mul_solve(space: DesignSpace, config: Optional[SolverConfig] = None, initial: Optional[Design] = None) -> SolveResult:
    """Compute an approximate optimal design with the multiplicative algorithm.

    The run starts from the uniform design on all points, since a multiplicative update keeps zero weights at zero.
    """
    return _sam_solve(space, config or SolverConfig(), _mul_iterate, initial, full_support_start=True)
