from rexdesign import xarray
from rexdesign.bench import BenchReport, run_benchmark
from rexdesign.criteria import Criterion, efficiency_bound, i_to_a_transform, phi
from rexdesign.design import Design, DesignSpace, apply_exchange, build_state
from rexdesign.models import QuadraticModelSpec, RandomModelSpec, quadratic_space, random_space
from rexdesign.mvee import Ellipsoid, mvee_solve
from rexdesign.solvers import (
    Algorithm,
    SolverConfig,
    TerminationReason,
    mul_solve,
    rex_iterate,
    solve,
    vem_solve,
)
from rexdesign.steps import a_step, d_step, numeric_step

__version__ = "0.1.0"

__all__ = [
    "xarray",
    "Algorithm",
    "BenchReport",
    "Criterion",
    "Design",
    "DesignSpace",
    "Ellipsoid",
    "QuadraticModelSpec",
    "RandomModelSpec",
    "SolverConfig",
    "TerminationReason",
    "a_step",
    "apply_exchange",
    "build_state",
    "d_step",
    "efficiency_bound",
    "i_to_a_transform",
    "mul_solve",
    "mvee_solve",
    "numeric_step",
    "phi",
    "quadratic_space",
    "random_space",
    "rex_iterate",
    "run_benchmark",
    "solve",
    "vem_solve",
]
