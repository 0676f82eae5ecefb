"""Command-line interface: ``rexdesign solve``, ``rexdesign bench``, ``rexdesign mvee`` and ``rexdesign replay``."""
import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from rexdesign import __version__, constants
from rexdesign.bench import BenchReport, BenchRun, run_benchmark
from rexdesign.criteria import Criterion, i_to_a_transform
from rexdesign.design import DesignSpace
from rexdesign.exceptions import InputError, OptimalDesignError
from rexdesign.models import (
    QuadraticModelSpec,
    RandomModelSpec,
    quadratic_space,
    random_space,
)
from rexdesign.mvee import contains, mvee_solve
from rexdesign.solvers import Algorithm, SolverConfig, TerminationReason, solve
from rexdesign.utils import file_digest, read_matrix_csv, write_design_csv, write_matrix_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_BUDGET = 2


class _Parser(argparse.ArgumentParser):
    """An argument parser that raises on bad arguments instead of exiting with status 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise InputError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    """Everything needed to reproduce a CLI run.

    Attributes
    ----------
    command : str
        The subcommand that ran.
    argv : List[str]
        The arguments of the run without ``--out``.
    config : Dict[str, Any]
        The resolved solver configuration, with every default materialized.
    inputs : Dict[str, str]
        SHA-256 digests of the input files, by path.
    seed : int
        The base random seed.
    version : str
        The version of ``rexdesign`` that wrote the manifest.
    result : Dict[str, Any]
        Termination and quality information of the run.
    """

    command: str
    argv: List[str]
    config: Dict[str, Any]
    inputs: Dict[str, str]
    seed: int
    version: str = __version__
    result: Dict[str, Any] = field(default_factory=dict)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        try:
            with open(path, encoding="utf-8") as f:
                return cls(**json.load(f))
        except (OSError, ValueError, TypeError) as e:
            raise InputError(f"{path}: not a valid run manifest ({e}).") from None


def _json_default(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def _config_dict(config: SolverConfig) -> Dict[str, Any]:
    return json.loads(json.dumps(asdict(config), default=_json_default))


def _strip_out(argv: Sequence[str]) -> List[str]:
    """Drop ``--out`` and its value so that a manifest can be replayed into another directory."""
    out: List[str] = []
    skip = False
    for arg in argv:
        if skip:
            skip = False
            continue
        if arg == "--out":
            skip = True
            continue
        if arg.startswith("--out="):
            continue
        out.append(arg)
    return out


def _solver_parent() -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    parent.add_argument("--gamma", type=float, default=constants.DEFAULT_GAMMA, help="REX batch size parameter (default 4).")
    parent.add_argument("--eff", type=float, default=constants.DEFAULT_EFF, help="Target efficiency bound (default 0.999999).")
    parent.add_argument("--t-max", type=float, default=constants.DEFAULT_T_MAX, help="Time budget in seconds (default 60).")
    parent.add_argument("--seed", type=int, default=0, help="Random seed (default 0).")
    parent.add_argument("--refresh-cadence", type=int, default=constants.REFRESH_CADENCE, help="Exchanges between refactorizations (default 64).")
    parent.add_argument("--no-timing", action="store_true", help="Record zero elapsed seconds so trajectories are reproducible.")
    parent.add_argument("--out", required=True, help="Output directory.")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rexdesign", description="Optimal approximate experimental designs by randomized exchange.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Log progress (-vv for every iteration).")
    commands = parser.add_subparsers(dest="command", required=True)
    solver = _solver_parent()

    p = commands.add_parser("solve", parents=[solver], help="Compute an optimal design for a design space file.")
    p.add_argument("--input", required=True, help="n x m regressor matrix CSV.")
    p.add_argument("--criterion", choices=["d", "a", "i"], type=str.lower, default="d")
    p.add_argument("--moment", help="m x m SPD moment matrix CSV, required for --criterion i.")
    p.add_argument("--algorithm", choices=Algorithm.names(), type=str.lower, default="rex")

    p = commands.add_parser("bench", help="Benchmark algorithms on generated models.")
    families = p.add_subparsers(dest="family", required=True)
    bench_parent = _Parser(add_help=False)
    bench_parent.add_argument("--criterion", choices=["d", "a"], type=str.lower, default="d")
    bench_parent.add_argument("--algorithms", default="rex,vem,mul", help="Comma-separated algorithm names.")
    bench_parent.add_argument("--repeats", type=int, default=constants.DEFAULT_REPEATS)
    bench_parent.add_argument("--workers", type=int, default=1)
    bench_parent.add_argument("--no-progress", action="store_true")

    q = families.add_parser("quadratic", parents=[solver, bench_parent], help="Full quadratic model on a grid in [-1, 1]^d.")
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--points-per-axis", type=int, required=True)

    r = families.add_parser("random", parents=[solver, bench_parent], help="Standard normal regressors.")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--m", type=int, required=True)
    r.add_argument("--model-seed", type=int, default=0)

    p = commands.add_parser("mvee", parents=[solver], help="Minimum-volume origin-centered enclosing ellipsoid.")
    p.add_argument("--input", required=True, help="n x m points CSV.")
    p.add_argument("--eps", type=float, default=1e-6)

    p = commands.add_parser("replay", help="Re-run the command recorded in a manifest.")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="Output directory.")

    return parser


def _config_from_args(args: argparse.Namespace, criterion: Criterion, algorithm: str = "rex") -> SolverConfig:
    return SolverConfig(
        criterion=criterion,
        gamma=args.gamma,
        eff_target=args.eff,
        t_max=args.t_max,
        seed=args.seed,
        refresh_cadence=args.refresh_cadence,
        algorithm=algorithm,
        timing=not args.no_timing,
    )


def _exit_code(reason: TerminationReason) -> int:
    return EXIT_OK if reason is TerminationReason.EFF_REACHED else EXIT_BUDGET


def cmd_solve(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Solve a design problem from files and write ``design.csv``, ``trajectory.csv`` and ``manifest.json``."""
    if args.criterion == "i" and not args.moment:
        raise InputError("--criterion i requires --moment <path> with the m x m moment matrix.")
    if args.moment and args.criterion != "i":
        raise InputError("--moment is only used with --criterion i.")

    space = DesignSpace(read_matrix_csv(args.input))
    inputs = {args.input: file_digest(args.input)}

    if args.criterion == "i":
        space = i_to_a_transform(space, read_matrix_csv(args.moment))
        inputs[args.moment] = file_digest(args.moment)
    criterion = Criterion.A if args.criterion in ("a", "i") else Criterion.D

    config = _config_from_args(args, criterion, args.algorithm)
    design, trajectory, reason = solve(space, config)

    os.makedirs(args.out, exist_ok=True)
    instance = os.path.splitext(os.path.basename(args.input))[0]
    report = BenchReport(repeats=1)
    report.runs[(instance, config.algorithm.value, 0)] = BenchRun(seed=config.seed, trajectory=trajectory)
    report.to_csv(os.path.join(args.out, "trajectory.csv"))
    write_design_csv(os.path.join(args.out, "design.csv"), design)

    last = trajectory.last
    RunManifest(
        command="solve",
        argv=_strip_out(argv),
        config=_config_dict(config),
        inputs=inputs,
        seed=config.seed,
        result={
            "termination": reason.value,
            "criterion": last.criterion,
            "eff_bound": last.eff_bound,
            "support_size": last.support_size,
            "iterations": last.iteration,
        },
    ).write(os.path.join(args.out, "manifest.json"))

    print(f"{reason.value}: criterion={last.criterion:.12g} eff_bound={last.eff_bound:.12g} support={last.support_size}")
    return _exit_code(reason)


def cmd_bench(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Run a benchmark on a generated model family and write ``bench.csv``, ``summary.csv`` and ``manifest.json``."""
    if args.repeats < 1:
        raise InputError(f"--repeats must be at least 1, not {args.repeats}.")

    names = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    algorithms = [Algorithm.get_option(a).value for a in names]

    if args.family == "quadratic":
        spec = QuadraticModelSpec(d=args.d, points_per_axis=args.points_per_axis)
        instance = f"quadratic_d{spec.d}_k{spec.points_per_axis}"
        space = quadratic_space(spec)
    else:
        rspec = RandomModelSpec(n=args.n, m=args.m, seed=args.model_seed)
        instance = f"random_n{rspec.n}_m{rspec.m}_s{rspec.seed}"
        space = random_space(rspec)

    config = _config_from_args(args, Criterion.get_option(args.criterion))
    report = run_benchmark(
        {instance: space},
        algorithms,
        config,
        repeats=args.repeats,
        num_cores=args.workers,
        progress=not args.no_progress,
    )

    os.makedirs(args.out, exist_ok=True)
    report.to_csv(os.path.join(args.out, "bench.csv"))
    summary = report.summary()
    summary.to_csv(os.path.join(args.out, "summary.csv"), index=False, lineterminator="\n")

    RunManifest(
        command="bench",
        argv=_strip_out(argv),
        config=_config_dict(config),
        inputs={},
        seed=config.seed,
        result={
            "instance": instance,
            "runs": len(report),
            "failed": int(sum(not run.ok for run in report.runs.values())),
        },
    ).write(os.path.join(args.out, "manifest.json"))

    if len(report):
        print(report.to_xarray().rex.summary().to_string())
    return EXIT_OK


def cmd_mvee(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Compute an enclosing ellipsoid and write ``ellipsoid.csv``, ``design.csv`` and ``manifest.json``."""
    points = read_matrix_csv(args.input)
    config = _config_from_args(args, Criterion.D)
    ellipsoid, design, certificate = mvee_solve(points, eps=args.eps, config=config)

    outside = [i for i, p in enumerate(points) if not contains(ellipsoid, p, tol=1e-9)]
    if outside:
        raise OptimalDesignError(f"Points {outside[:5]} are outside the computed ellipsoid.")

    os.makedirs(args.out, exist_ok=True)
    write_matrix_csv(os.path.join(args.out, "ellipsoid.csv"), ellipsoid.H)
    write_design_csv(os.path.join(args.out, "design.csv"), design)
    RunManifest(
        command="mvee",
        argv=_strip_out(argv),
        config=_config_dict(config),
        inputs={args.input: file_digest(args.input)},
        seed=config.seed,
        result={"eps": args.eps, **asdict(certificate)},
    ).write(os.path.join(args.out, "manifest.json"))

    print(f"{certificate.reason}: max_d={certificate.max_d:.12g} logdet_H={certificate.logdet_H:.12g}")
    return EXIT_OK if certificate.reason == TerminationReason.EFF_REACHED.value else EXIT_BUDGET


def cmd_replay(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Re-run a manifest's command after checking that its inputs are unchanged."""
    manifest = RunManifest.read(args.manifest)
    for path, digest in manifest.inputs.items():
        if not os.path.isfile(path) or file_digest(path) != digest:
            raise InputError(f"{path}: input is missing or differs from the manifest.")
    if manifest.version != __version__:
        logger.warning("Manifest written by version %s, replaying with %s.", manifest.version, __version__)
    return main([*manifest.argv, "--out", args.out])


COMMANDS = {
    "solve": cmd_solve,
    "bench": cmd_bench,
    "mvee": cmd_mvee,
    "replay": cmd_replay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line interface and return its exit code.

    Exit codes are 0 when the efficiency target was reached, 2 when the time budget ran out or the solver stalled
    (outputs are still written), and 1 for invalid input.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO,
            format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        )

    try:
        return COMMANDS[args.command](args, argv)
    except (OptimalDesignError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
