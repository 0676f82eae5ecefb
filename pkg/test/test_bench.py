import mock
import pytest

from rexdesign.bench import CSV_COLUMNS, run_benchmark
from rexdesign.criteria import log_efficiency
from rexdesign.exceptions import BenchmarkWarning
from rexdesign.models import (
    QuadraticModelSpec,
    RandomModelSpec,
    quadratic_space,
    random_space,
)
from rexdesign.solvers import SolverConfig, TerminationReason


def test_benchmark_cells(quadratic):
    """Test that two algorithms with two repeats give four trajectories with distinct seeds"""
    report = run_benchmark(
        {"quad": quadratic}, ["rex", "vem"], SolverConfig(seed=10), repeats=2, progress=False
    )

    assert sorted(report.runs) == [("quad", "rex", 0), ("quad", "rex", 1), ("quad", "vem", 0), ("quad", "vem", 1)]
    assert [report.runs[("quad", "rex", r)].seed for r in range(2)] == [10, 11]
    assert all(run.ok for run in report.runs.values())


def test_benchmark_csv(tmp_path, quadratic):
    """Test the trajectory CSV header and line endings"""
    report = run_benchmark({"quad": quadratic}, ["rex"], repeats=2, progress=False)
    path = tmp_path / "bench.csv"
    report.to_csv(str(path))

    data = path.read_bytes()
    assert data.splitlines()[0].decode() == ",".join(CSV_COLUMNS)
    assert b"\r\n" not in data


def test_log_eff_is_from_certified_bound(quadratic5):
    """Test that every reported log-efficiency comes from the certified bound"""
    report = run_benchmark({"q5": quadratic5}, ["rex", "mul"], repeats=1, progress=False)
    df = report.to_dataframe()

    assert len(df)
    for eff, log_eff in zip(df["eff_bound"], df["log_eff"]):
        assert log_eff == log_efficiency(eff)


def test_empty_algorithms(quadratic):
    """Test that no algorithms give an empty report"""
    report = run_benchmark({"quad": quadratic}, [], progress=False)

    assert len(report) == 0
    assert report.to_dataframe().columns.tolist() == CSV_COLUMNS


def test_bad_repeats(quadratic):
    """Test that at least one repeat is required"""
    with pytest.raises(ValueError):
        run_benchmark({"quad": quadratic}, ["rex"], repeats=0)


def test_unknown_algorithm(quadratic):
    """Test that an unknown algorithm fails before anything runs"""
    with pytest.raises(ValueError, match="mul"):
        run_benchmark({"quad": quadratic}, ["rex", "ybt"])


def test_failed_run_is_recorded(quadratic):
    """Test that a run that raises is recorded with its error and a warning"""
    with mock.patch("rexdesign.bench.solve", side_effect=RuntimeError("boom")):
        with pytest.warns(BenchmarkWarning, match="boom"):
            report = run_benchmark({"quad": quadratic}, ["rex"], repeats=1, progress=False)

    run = report.runs[("quad", "rex", 0)]
    assert not run.ok
    assert "boom" in run.error
    assert report.to_dataframe().empty
    assert report.summary()["error"].iloc[0] == "RuntimeError: boom"


def test_report_to_xarray(quadratic):
    """Test that trajectories stack over instance, algorithm, repeat and iteration"""
    report = run_benchmark({"quad": quadratic}, ["rex", "vem"], repeats=3, progress=False)
    ds = report.to_xarray()

    assert set(ds.dims) == {"instance", "algorithm", "repeat", "iter"}
    assert ds.sizes["repeat"] == 3
    assert "log_eff" in ds


@pytest.mark.slow
def test_quadratic_d2_reaches_log_eff_6():
    """Test REX on the 11 x 11 quadratic grid reaches efficiency 0.999999 within 30 s"""
    space = quadratic_space(QuadraticModelSpec(d=2, points_per_axis=11))
    config = SolverConfig(eff_target=1 - 1e-6, t_max=30)
    report = run_benchmark({"quad": space}, ["rex"], config, repeats=1, progress=False)

    run = report.runs[("quad", "rex", 0)]
    assert run.reason == TerminationReason.EFF_REACHED.value
    assert run.trajectory.last.eff_bound >= 1 - 1e-6


@pytest.mark.slow
@pytest.mark.parametrize(
    "space",
    [
        quadratic_space(QuadraticModelSpec(d=3, points_per_axis=15)),
        random_space(RandomModelSpec(n=1000, m=10, seed=0)),
    ],
    ids=["quadratic-d3", "random-1000x10"],
)
def test_desk_scale_log_eff_4(space):
    """Test that REX with gamma 4 reaches log-efficiency 4 within 60 s in all five repeats"""
    config = SolverConfig(gamma=4, eff_target=0.9999, t_max=60)
    report = run_benchmark({"instance": space}, ["rex"], config, repeats=5, progress=False)

    for run in report.runs.values():
        assert run.reason == TerminationReason.EFF_REACHED.value
        assert log_efficiency(run.trajectory.last.eff_bound) >= 4 - 1e-9
        values = run.trajectory.criterion_values
        assert all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))
