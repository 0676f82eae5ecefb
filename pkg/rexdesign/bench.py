import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd
import xarray as xr
from joblib import Parallel, delayed  # type: ignore
from tqdm.auto import tqdm  # type: ignore

from rexdesign import constants
from rexdesign.criteria import log_efficiency
from rexdesign.design import DesignSpace
from rexdesign.exceptions import BenchmarkWarning
from rexdesign.solvers import Algorithm, SolverConfig, Trajectory, solve
from rexdesign.utils import FLOAT_FORMAT, parallel_tqdm

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "instance",
    "algorithm",
    "repeat",
    "iter",
    "seconds",
    "criterion",
    "eff_bound",
    "log_eff",
    "support_size",
]

CellKey = Tuple[str, str, int]


@dataclass
class BenchRun:
    """The outcome of one (instance, algorithm, repeat) cell.

    A failed run keeps its error message and has no trajectory.
    """

    seed: int
    trajectory: Optional[Trajectory] = None
    reason: Optional[str] = None
    support_size: Optional[int] = None
    seconds: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BenchReport:
    """Trajectories of a benchmark, keyed by (instance, algorithm, repeat)."""

    runs: Dict[CellKey, BenchRun] = field(default_factory=dict)
    repeats: int = constants.DEFAULT_REPEATS

    def __len__(self) -> int:
        return len(self.runs)

    def to_dataframe(self) -> pd.DataFrame:
        """One row per outer iteration of every successful run, with log-efficiency from the certified bound."""
        frames = []
        for (instance, algorithm, repeat), run in sorted(self.runs.items()):
            if run.trajectory is None:
                continue
            df = run.trajectory.to_dataframe()
            df.insert(0, "repeat", repeat)
            df.insert(0, "algorithm", algorithm)
            df.insert(0, "instance", instance)
            df["log_eff"] = [log_efficiency(e) for e in df["eff_bound"]]
            frames.append(df)

        if not frames:
            return pd.DataFrame(columns=CSV_COLUMNS)
        return pd.concat(frames, ignore_index=True)[CSV_COLUMNS]

    def to_csv(self, path: str) -> None:
        """Write the trajectory CSV: a header row and one row per outer iteration."""
        self.to_dataframe().to_csv(
            path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )

    def summary(self) -> pd.DataFrame:
        """One row per cell with the final state of the run or its error."""
        rows = []
        for (instance, algorithm, repeat), run in sorted(self.runs.items()):
            last = run.trajectory.last if run.trajectory is not None and len(run.trajectory) else None
            rows.append(
                {
                    "instance": instance,
                    "algorithm": algorithm,
                    "repeat": repeat,
                    "seed": run.seed,
                    "reason": run.reason,
                    "iterations": None if last is None else last.iteration,
                    "criterion": None if last is None else last.criterion,
                    "eff_bound": None if last is None else last.eff_bound,
                    "support_size": run.support_size,
                    "seconds": run.seconds,
                    "error": run.error,
                }
            )
        return pd.DataFrame(rows)

    def to_xarray(self) -> xr.Dataset:
        """Stack the trajectories into a Dataset with dimensions (instance, algorithm, repeat, iter).

        Shorter runs are padded with NaN. The ``rex`` accessor on the result summarizes time-to-efficiency.
        """
        df = self.to_dataframe()
        if df.empty:
            return xr.Dataset()
        df = df.astype({"support_size": float})
        return df.set_index(["instance", "algorithm", "repeat", "iter"]).to_xarray()


def _run_cell(space: DesignSpace, config: SolverConfig) -> BenchRun:
    start = time.monotonic()
    try:
        design, trajectory, reason = solve(space, config)
    except Exception as e:
        return BenchRun(
            seed=config.seed,
            seconds=time.monotonic() - start,
            error=f"{type(e).__name__}: {e}",
        )
    return BenchRun(
        seed=config.seed,
        trajectory=trajectory,
        reason=reason.value,
        support_size=int(design.support.size),
        seconds=time.monotonic() - start,
    )


def run_benchmark(
    instances: Mapping[str, DesignSpace],
    algorithms: Sequence[str],
    config: Optional[SolverConfig] = None,
    repeats: int = constants.DEFAULT_REPEATS,
    num_cores: int = 1,
    progress: bool = True,
) -> BenchReport:
    """Run every algorithm on every instance ``repeats`` times and collect the trajectories.

    Parameters
    ----------
    instances : Mapping[str, DesignSpace]
        Named design spaces.
    algorithms : Sequence[str]
        Algorithm names, from "rex", "vem", "mul".
    config : SolverConfig, optional
        Shared solver settings. Repeat r of every cell runs with seed ``config.seed + r``.
    repeats : int, default 5
        Number of runs per (instance, algorithm).
    num_cores : int, default 1
        The number of worker processes. -1 uses all available cores.
    progress : bool, default True
        If true, a progress bar tracks completed runs.

    Returns
    -------
    BenchReport
        The runs keyed by (instance, algorithm, repeat). Runs that raised are recorded with their error and
        reported with a :class:`BenchmarkWarning`.

    Raises
    ------
    ValueError
        If ``repeats`` is less than 1 or an algorithm name is unknown.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, not {repeats}.")
    config = config or SolverConfig()
    algs = [Algorithm.get_option(a) for a in algorithms]

    cells: List[Tuple[CellKey, DesignSpace, SolverConfig]] = [
        (
            (name, alg.value, r),
            space,
            replace(config, algorithm=alg, seed=config.seed + r),
        )
        for name, space in instances.items()
        for alg in algs
        for r in range(repeats)
    ]

    report = BenchReport(repeats=repeats)
    if not cells:
        return report

    with Parallel(n_jobs=num_cores) as p:
        with parallel_tqdm(
            tqdm(desc="Running benchmark", total=len(cells), disable=not progress)
        ):
            runs = p(delayed(_run_cell)(space, cfg) for _, space, cfg in cells)

    for (key, _, _), run in zip(cells, runs):
        report.runs[key] = run
        if not run.ok:
            warnings.warn(f"Benchmark run {key} failed: {run.error}", BenchmarkWarning)
        else:
            logger.info(
                "%s/%s/%d: %s after %.3fs", key[0], key[1], key[2], run.reason, run.seconds
            )

    return report
