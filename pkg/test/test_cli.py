import json

import numpy as np
import pandas as pd
import pytest

from rexdesign.cli import main
from rexdesign.criteria import Criterion, phi
from rexdesign.design import DesignSpace, build_state
from rexdesign.utils import read_design_csv, read_matrix_csv, write_matrix_csv

QUADRATIC = "1,-1,1\n1,0,0\n1,1,1\n"


@pytest.fixture
def quadratic_csv(tmp_path):
    path = tmp_path / "quadratic.csv"
    path.write_text(QUADRATIC)
    return str(path)


@pytest.fixture
def random_csv(tmp_path):
    path = tmp_path / "random.csv"
    write_matrix_csv(str(path), np.random.default_rng(5).standard_normal((60, 4)))
    return str(path)


def test_solve_quadratic(tmp_path, quadratic_csv):
    """Test that solving the quadratic model writes the uniform D-optimal design"""
    out = tmp_path / "out"
    code = main(["solve", "--input", quadratic_csv, "--criterion", "d", "--out", str(out)])

    assert code == 0
    design = pd.read_csv(out / "design.csv")
    assert design["index"].tolist() == [0, 1, 2]
    np.testing.assert_allclose(design["weight"], 1 / 3, atol=1e-6)
    assert (out / "trajectory.csv").exists()

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert manifest["result"]["termination"] == "EffReached"
    assert manifest["config"]["gamma"] == 4.0
    assert manifest["config"]["criterion"] == "D"
    assert quadratic_csv in manifest["inputs"]


def test_identity_moment_matches_a(tmp_path, quadratic_csv):
    """Test that I-optimality with the identity moment matrix reproduces A-optimality exactly"""
    moment = tmp_path / "I.csv"
    moment.write_text("1,0,0\n0,1,0\n0,0,1\n")
    a_out, i_out = tmp_path / "a", tmp_path / "i"

    assert main(["solve", "--input", quadratic_csv, "--criterion", "a", "--no-timing", "--out", str(a_out)]) == 0
    assert (
        main(
            [
                "solve",
                "--input",
                quadratic_csv,
                "--criterion",
                "i",
                "--moment",
                str(moment),
                "--no-timing",
                "--out",
                str(i_out),
            ]
        )
        == 0
    )

    assert (a_out / "design.csv").read_bytes() == (i_out / "design.csv").read_bytes()
    assert (a_out / "trajectory.csv").read_bytes() == (i_out / "trajectory.csv").read_bytes()


def test_missing_moment(tmp_path, quadratic_csv, capsys):
    """Test that I-optimality without a moment matrix fails with a hint"""
    code = main(["solve", "--input", quadratic_csv, "--criterion", "i", "--out", str(tmp_path)])

    assert code == 1
    assert "--moment" in capsys.readouterr().err


def test_bad_input_file(tmp_path, capsys):
    """Test that an unparseable input exits with status 1 and names the file"""
    path = tmp_path / "broken.csv"
    path.write_text("1,2\n3,oops\n")

    assert main(["solve", "--input", str(path), "--out", str(tmp_path / "out")]) == 1
    assert "broken.csv" in capsys.readouterr().err


def test_bad_flag(tmp_path, quadratic_csv, capsys):
    """Test that argument errors exit with status 1 rather than the budget status"""
    assert main(["solve", "--input", quadratic_csv, "--criterion", "e", "--out", str(tmp_path)]) == 1
    assert "criterion" in capsys.readouterr().err


def test_time_out_exit_code(tmp_path, random_csv):
    """Test that an exhausted budget exits with status 2 and still writes the design"""
    out = tmp_path / "out"
    code = main(["solve", "--input", random_csv, "--t-max", "1e-9", "--out", str(out)])

    assert code == 2
    assert (out / "design.csv").exists()


def test_design_round_trip(tmp_path, random_csv):
    """Test that the written design re-scores to the logged final criterion"""
    out = tmp_path / "out"
    main(["solve", "--input", random_csv, "--eff", "0.9999", "--out", str(out)])

    space = DesignSpace(read_matrix_csv(random_csv))
    design = read_design_csv(str(out / "design.csv"), space.n)
    manifest = json.loads((out / "manifest.json").read_text())

    rows = [line.split(",") for line in (out / "design.csv").read_text().splitlines()[1:]]
    written = np.zeros(space.n)
    for index, weight in rows:
        written[int(index)] = float(weight)
    assert np.array_equal(design.weights, written)

    rescored = phi(Criterion.D, build_state(space, design))
    assert rescored == pytest.approx(manifest["result"]["criterion"], rel=1e-12)


def test_same_seed_same_files(tmp_path, random_csv):
    """Test that two runs with the same seed write identical files"""
    outs = [tmp_path / "first", tmp_path / "second"]
    for out in outs:
        assert main(["solve", "--input", random_csv, "--seed", "9", "--no-timing", "--out", str(out)]) == 0

    for name in ("design.csv", "trajectory.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_replay(tmp_path, random_csv):
    """Test that replaying a manifest reproduces the trajectory byte for byte"""
    first, second = tmp_path / "first", tmp_path / "second"
    main(["solve", "--input", random_csv, "--algorithm", "vem", "--no-timing", "--out", str(first)])

    assert main(["replay", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()


def test_replay_with_changed_input(tmp_path, random_csv, capsys):
    """Test that a replay refuses inputs that no longer match their digest"""
    out = tmp_path / "out"
    main(["solve", "--input", random_csv, "--no-timing", "--out", str(out)])
    with open(random_csv, "a") as f:
        f.write("1,1,1,1\n")

    assert main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "again")]) == 1
    assert "differs" in capsys.readouterr().err


def test_bench_quadratic(tmp_path):
    """Test that two algorithms with two repeats write four trajectories to one CSV"""
    out = tmp_path / "bench"
    code = main(
        [
            "bench",
            "quadratic",
            "--d",
            "1",
            "--points-per-axis",
            "3",
            "--algorithms",
            "rex,vem",
            "--repeats",
            "2",
            "--no-progress",
            "--out",
            str(out),
        ]
    )

    assert code == 0
    df = pd.read_csv(out / "bench.csv")
    assert len(df.groupby(["algorithm", "repeat"])) == 4
    assert df["instance"].unique().tolist() == ["quadratic_d1_k3"]
    assert (out / "summary.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["result"]["runs"] == 4


def test_bench_random(tmp_path):
    """Test a benchmark on a seeded random model"""
    out = tmp_path / "bench"
    code = main(
        ["bench", "random", "--n", "30", "--m", "3", "--algorithms", "mul", "--repeats", "1", "--eff", "0.99", "--no-progress", "--out", str(out)]
    )

    assert code == 0
    assert pd.read_csv(out / "bench.csv")["algorithm"].unique().tolist() == ["mul"]


def test_bench_unknown_algorithm(tmp_path, capsys):
    """Test that an unknown algorithm exits with status 1 and lists the valid names"""
    code = main(
        ["bench", "quadratic", "--d", "1", "--points-per-axis", "3", "--algorithms", "rex,cocktail", "--out", str(tmp_path)]
    )

    assert code == 1
    err = capsys.readouterr().err
    assert "rex" in err and "vem" in err and "mul" in err


def test_bench_zero_repeats(tmp_path):
    """Test that zero repeats are refused"""
    code = main(["bench", "quadratic", "--d", "1", "--points-per-axis", "3", "--repeats", "0", "--out", str(tmp_path)])
    assert code == 1


def test_mvee_orthonormal(tmp_path):
    """Test that {e1, e2} gives the identity ellipsoid"""
    points = tmp_path / "points.csv"
    points.write_text("1,0\n0,1\n")
    out = tmp_path / "out"

    assert main(["mvee", "--input", str(points), "--out", str(out)]) == 0
    np.testing.assert_allclose(read_matrix_csv(str(out / "ellipsoid.csv")), np.eye(2), atol=1e-6)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["result"]["max_d"] == pytest.approx(2.0)


def test_mvee_rank_deficient(tmp_path, capsys):
    """Test that points along one line exit with status 1"""
    points = tmp_path / "points.csv"
    points.write_text("1,2\n2,4\n-1,-2\n")

    assert main(["mvee", "--input", str(points), "--out", str(tmp_path / "out")]) == 1
    assert "span" in capsys.readouterr().err


def test_mvee_loose_eps(tmp_path, random_csv):
    """Test that a loose tolerance still encloses every point"""
    out = tmp_path / "out"

    assert main(["mvee", "--input", random_csv, "--eps", "0.5", "--out", str(out)]) == 0
    H = read_matrix_csv(str(out / "ellipsoid.csv"))
    X = read_matrix_csv(random_csv)
    assert np.all(np.einsum("ij,jk,ik->i", X, H, X) <= 1 + 1e-9)
