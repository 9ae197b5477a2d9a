import subprocess
import sys

import pytest

from conftest import read_outputs
from tfks import cli

SMALL = ["--set", "grid.nx=16", "--set", "grid.nt=21"]


def test_known_keys_cover_sections():
    keys = cli.known_keys()
    for k in ("params.alpha", "grid.nx", "solver.theta", "solve.path", "reduce.case",
              "symmetry.levels", "convergence.study", "seed", "output_dir"):
        assert k in keys


def test_config_file_and_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nparams.alpha = 0.6\ngrid.nx = 16\ngrid.nt = 11\n")
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert "params.alpha=0.6" in (tmp_path / "a" / "config.cfg").read_text()
    assert cli.main(["solve", "--set", "params.alfa=0.6", "--out", str(tmp_path / "b")]) == 1
    assert cli.main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_bad_values(tmp_path, capsys):
    assert cli.main(["solve", "--set", "params.alpha=two", "--out", str(tmp_path)]) == 1
    assert cli.main(["solve", "--set", "params.alpha=1.5", *SMALL, "--out", str(tmp_path)]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["solve", "--path", "sideways"]) == 1
    assert "error" in capsys.readouterr().err


def test_solve_outputs(tmp_path, capsys):
    out = tmp_path / "s"
    assert cli.main(["solve", "--system", "original", "--path", "both", *SMALL, "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"manifest.txt", "config.cfg"} <= names
    assert any(n.startswith("traj") and n.endswith(".csv") for n in names)
    assert any(n.startswith("residual") for n in names)
    assert any(n.endswith(".gp") for n in names)
    manifest = (out / "manifest.txt").read_text()
    assert manifest.splitlines()[-1].startswith("wall_time_s")
    assert "tfks solve" in manifest


def test_solve_exact(tmp_path):
    args = ["solve", "--exact", "--system", "original", "--set", "params.chi=0", "--set", "params.r=0",
            "--set", "grid.nx=32", "--set", "grid.nt=101"]
    assert cli.main(args + ["--out", str(tmp_path / "ok")]) == 0
    # a regime violation is a validation error
    assert cli.main(["solve", "--exact", "--out", str(tmp_path / "bad")]) == 1
    # an impossible tolerance is a numerical failure
    assert cli.main(args + ["--set", "solve.tolerance=1e-30", "--out", str(tmp_path / "tight")]) == 3


def test_solve_blowup_exit_3(tmp_path):
    args = ["solve", "--set", "params.alpha=1", "--set", "params.lam=0", "--set", "params.chi=0",
            "--set", "params.r=50", "--set", "params.K0=inf", "--set", "grid.T=5", *SMALL,
            "--out", str(tmp_path)]
    assert cli.main(args) == 3


@pytest.mark.parametrize("case", ["I", "II.A", "III.A"])
def test_reduce_time_cases(tmp_path, case):
    extra = {"I": [], "II.A": ["--set", "params.lam=0"],
             "III.A": ["--set", "params.chi=0", "--set", "params.r=0"]}[case]
    assert cli.main(["reduce", "--case", case, *extra, "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"config.cfg", "curves.csv", "manifest.txt", "plot.gp", "reduced.txt"}
    assert (tmp_path / "curves.csv").read_text().startswith("t,")
    assert f"case: {case} " in (tmp_path / "reduced.txt").read_text()


def test_reduce_steady_state(tmp_path, capsys):
    assert cli.main(["reduce", "--case", "II.B", "--set", "params.lam=0",
                     "--set", "grid.boundary=neumann", "--set", "grid.x1=10", "--set", "grid.nx=100",
                     "--out", str(tmp_path)]) == 0
    assert (tmp_path / "profiles.csv").exists() and (tmp_path / "newton.csv").exists()
    assert "SteadyState" in capsys.readouterr().out


def test_reduce_regime_violation(tmp_path, capsys):
    assert cli.main(["reduce", "--case", "II.B", "--set", "params.lam=0.3", "--out", str(tmp_path)]) == 1
    assert "lam == 0" in capsys.readouterr().err


def test_reduce_refusal(tmp_path, capsys):
    code = cli.main(["reduce", "--case", "II.C", "--formal", "--speed", "1", "--set", "params.lam=0",
                     "--set", "params.alpha=0.7", "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert "formal identity not validated" in err and "history dependent" in err


def test_reduce_traveling_and_similarity(tmp_path, capsys):
    assert cli.main(["reduce", "--case", "II.C", "--speed", "0.5", "--set", "params.lam=0",
                     "--set", "params.alpha=0.7", *SMALL, "--out", str(tmp_path / "tw")]) == 0
    assert (tmp_path / "tw" / "tw_residual.csv").exists()
    assert cli.main(["reduce", "--case", "III.B", "--set", "params.chi=0", "--set", "params.r=0",
                     "--set", "params.D_c=0", "--out", str(tmp_path / "sim")]) == 0
    out = capsys.readouterr().out
    assert "does not automatically become an ordinary differential equation" in out


def test_symmetry(tmp_path, capsys):
    assert cli.main(["symmetry", "--regime", "generic", "--set", "symmetry.levels=51,101,201",
                     "--set", "symmetry.nx=16", "--out", str(tmp_path)]) == 0
    csv_text = (tmp_path / "symmetry.csv").read_text()
    assert csv_text.startswith("generator,regime")
    assert cli.main(["symmetry", "--regime", "untempered", "--out", str(tmp_path / "x")]) == 0
    # generic parameters are outside the untempered regime
    assert cli.main(["symmetry", "--regime", "untempered", "--set", "params.lam=0.5",
                     "--out", str(tmp_path / "y")]) == 1
    assert cli.main(["symmetry", "--regime", "generic", "--generator", "nope",
                     "--out", str(tmp_path / "z")]) == 1


def test_symmetry_rerun_from_config(tmp_path):
    first = tmp_path / "first"
    assert cli.main(["symmetry", "--regime", "chi0-r0", "--set", "symmetry.levels=51,101,201",
                     "--out", str(first)]) == 0
    second = tmp_path / "second"
    assert cli.main(["symmetry", "--config", str(first / "config.cfg"), "--out", str(second)]) == 0
    assert (first / "symmetry.csv").read_bytes() == (second / "symmetry.csv").read_bytes()


def test_algebra(capsys):
    assert cli.main(["algebra", "--regime", "chi0-r0", "--lam", "1"]) == 0
    out = capsys.readouterr().out
    assert "[X2, X1] = 0.5 X1" in out and "d/dt - 0.5 x d/dx" in out
    assert cli.main(["algebra", "--regime", "chi0-r0", "--lam", "0"]) == 1
    assert cli.main(["algebra", "--regime", "weird"]) == 1


def test_convergence(tmp_path, capsys):
    assert cli.main(["convergence", "--study", "caputo", "--out", str(tmp_path / "a")]) == 0
    assert "fitted order" in capsys.readouterr().out
    assert cli.main(["convergence", "--study", "caputo", "--set", "convergence.target_low=5",
                     "--out", str(tmp_path / "b")]) == 3
    assert cli.main(["convergence", "--study", "nope", "--out", str(tmp_path / "c")]) == 1


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUTPUT, str(tmp_path / "root"))
    assert cli.main(["convergence", "--study", "caputo"]) == 0
    assert (tmp_path / "root" / "convergence" / "manifest.txt").exists()


@pytest.mark.parametrize("jobs", [1, 2])
def test_sweep(tmp_path, jobs):
    assert cli.main(["solve", *SMALL, "--sweep", "params.alpha=0.5,0.9", "--jobs", str(jobs),
                     "--out", str(tmp_path)]) == 0
    dirs = sorted(p.name for p in tmp_path.iterdir())
    assert dirs == ["job_000_params.alpha=0.5", "job_001_params.alpha=0.9"]
    assert (tmp_path / dirs[1] / "manifest.txt").exists()


def test_sweep_partial_failure(tmp_path):
    assert cli.main(["solve", *SMALL, "--sweep", "params.alpha=0.5,1.5", "--out", str(tmp_path)]) == 1


def test_determinism(tmp_path):
    argv = ["solve", "--set", "solve.initial=random", "--set", "seed=7", *SMALL]
    assert cli.main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(argv + ["--out", str(tmp_path / "b")]) == 0
    assert read_outputs(tmp_path / "a") == read_outputs(tmp_path / "b")
    assert cli.main(["solve", "--set", "solve.initial=random", "--set", "seed=8", *SMALL,
                     "--out", str(tmp_path / "c")]) == 0
    assert read_outputs(tmp_path / "a") != read_outputs(tmp_path / "c")


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "tfks.cli", "algebra", "--regime", "untempered"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "X2 = d/dt" in res.stdout
