"""End-to-end tests of the ``freespec`` command line."""

import json

import numpy as np
import pandas as pd
import pytest

from projects.free_spectra.cli import RunConfig, main, run
from shared.artifacts import read_sidecar, sidecar_path

SEMICIRCLES = ["--var", "1=semicircle(0,1)", "--var", "2=semicircle(0,1)"]
SUM = ["--poly", "x1 + x2", "--nvars", "2"]


def density_args(out, grid="-3.5:3.5:29", eps="0.01"):
    return ["density", *SUM, *SEMICIRCLES, f"--grid={grid}", "--eps", eps, "--out", str(out)]


def simulate_args(out, n="60"):
    return ["simulate", *SUM, "--ensemble", "1=gue", "--ensemble", "2=gue", "--n", n, "--reps", "2", "--seed", "3", "--out", str(out)]


@pytest.fixture
def artifacts(tmp_path):
    curve, eigs = tmp_path / "curve.csv", tmp_path / "eigs.csv"
    assert main(density_args(curve)) == 0
    assert main(simulate_args(eigs)) == 0
    return curve, eigs


def test_help():
    assert main(["--help"]) == 0


class TestLinearize:
    def test_writes_verified_json(self, tmp_path):
        out = tmp_path / "lin.json"
        code = main(["linearize", "--poly", "x1*x2 + x2*x1", "--nvars", "2", "--verify", "50", "--seed", "1", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["method"] == "compact"
        assert payload["polynomial"] == "x1*x2 + x2*x1"
        assert payload["verification"]["passed"] is True
        assert payload["config"]["verify"] == 50

    def test_anderson(self, tmp_path):
        out = tmp_path / "lin.json"
        assert main(["linearize", "--poly", "x1*x2 + x2*x1", "--nvars", "2", "--method", "anderson", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["method"] == "anderson"

    def test_parse_error_reports_position(self, capsys):
        assert main(["linearize", "--poly", "x1 + * x2", "--nvars", "2"]) == 2
        assert "position" in capsys.readouterr().err

    def test_variable_out_of_range(self):
        assert main(["linearize", "--poly", "x3", "--nvars", "2"]) == 2

    def test_missing_option(self):
        assert main(["linearize", "--nvars", "2"]) == 1

    def test_unknown_method(self):
        assert main(["linearize", "--poly", "x1", "--nvars", "1", "--method", "fancy"]) == 1


class TestDensity:
    def test_writes_curve_and_sidecar(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(density_args(out)) == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["t", "rho", "raw_rho", "iterations", "residual"]
        assert len(frame) == 29
        sidecar = read_sidecar(out)
        assert sidecar["config"]["bindings"] == {"1": "semicircle(0,1)", "2": "semicircle(0,1)"}
        assert sidecar["curve"]["epsilon"] == 0.01
        assert sidecar["curve"]["measures"][1]["kind"] == "semicircle"

    def test_sidecar_reproduces_the_run(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(density_args(out)) == 0
        first = pd.read_csv(out)
        config = RunConfig.model_validate(read_sidecar(out)["config"])
        again = tmp_path / "again.csv"
        assert run(config.model_copy(update={"out": again})) == 0
        pd.testing.assert_frame_equal(pd.read_csv(again), first)

    def test_bad_measure(self, tmp_path):
        args = density_args(tmp_path / "c.csv")
        args[args.index("2=semicircle(0,1)")] = "2=cauchy(0,1)"
        assert main(args) == 1

    def test_missing_table(self, tmp_path):
        args = density_args(tmp_path / "c.csv")
        args[args.index("2=semicircle(0,1)")] = f"2=table({tmp_path / 'nowhere.csv'})"
        assert main(args) == 4

    def test_missing_binding(self, tmp_path):
        args = ["density", *SUM, "--var", "1=semicircle(0,1)", "--out", str(tmp_path / "c.csv")]
        assert main(args) == 1

    def test_bad_grid(self, tmp_path):
        assert main(density_args(tmp_path / "c.csv", grid="2:-2:5")) == 1

    def test_non_selfadjoint(self, tmp_path):
        args = ["density", "--poly", "x1*x2", "--nvars", "2", *SEMICIRCLES, "--out", str(tmp_path / "c.csv")]
        assert main(args) == 1

    def test_no_convergence(self, tmp_path):
        args = density_args(tmp_path / "c.csv", grid="-1:1:3") + ["--max-iter", "1"]
        assert main(args) == 3


class TestSimulate:
    def test_writes_eigenvalues(self, tmp_path):
        out = tmp_path / "eigs.csv"
        assert main(simulate_args(out)) == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["eigenvalue"]
        assert len(frame) == 120
        assert frame["eigenvalue"].is_monotonic_increasing
        sidecar = read_sidecar(out)
        assert sidecar["ensembles"] == ["gue", "gue"]
        assert sidecar["seed"] == 3

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(simulate_args(a)) == 0
        assert main(simulate_args(b)) == 0
        assert a.read_text() == b.read_text()

    def test_bad_ensemble(self, tmp_path):
        args = ["simulate", *SUM, "--ensemble", "1=gue", "--ensemble", "2=goe", "--n", "10", "--out", str(tmp_path / "e.csv")]
        assert main(args) == 1


class TestCompare:
    def test_report_with_oracle_and_overlay(self, artifacts, tmp_path):
        curve, eigs = artifacts
        before = {p: p.read_bytes() for p in (curve, eigs, sidecar_path(curve), sidecar_path(eigs))}
        report_path, overlay = tmp_path / "report.json", tmp_path / "overlay.dat"
        args = ["compare", "--curve", str(curve), "--eigs", str(eigs), "--oracle", "--bins", "20"]
        assert main(args + ["--overlay", str(overlay), "--out", str(report_path)]) == 0

        report = json.loads(report_path.read_text())
        assert 0.0 <= report["ks"] < 0.3
        assert report["eigenvalues"] == 120
        assert [row["k"] for row in report["moments"]] == [1, 2, 3, 4]
        assert report["moments"][1]["oracle"] == pytest.approx(2.0)
        assert report["moments"][3]["oracle"] == pytest.approx(8.0)

        rows = np.loadtxt(overlay)
        assert rows.shape == (20, 3)
        assert overlay.read_text().startswith("# bin_centre histogram density")
        assert all(p.read_bytes() == data for p, data in before.items())

    def test_without_oracle(self, artifacts, tmp_path):
        curve, eigs = artifacts
        out = tmp_path / "report.json"
        assert main(["compare", "--curve", str(curve), "--eigs", str(eigs), "--out", str(out)]) == 0
        assert all(row["oracle"] is None for row in json.loads(out.read_text())["moments"])

    def test_refuses_to_overwrite_inputs(self, artifacts):
        curve, eigs = artifacts
        assert main(["compare", "--curve", str(curve), "--eigs", str(eigs), "--out", str(sidecar_path(curve))]) == 1
        assert main(["compare", "--curve", str(curve), "--eigs", str(eigs), "--overlay", str(eigs)]) == 1

    def test_missing_eigenvalues(self, artifacts, tmp_path):
        curve, _ = artifacts
        assert main(["compare", "--curve", str(curve), "--eigs", str(tmp_path / "none.csv")]) == 4

    def test_wrong_columns(self, artifacts, tmp_path):
        curve, _ = artifacts
        bad = tmp_path / "bad.csv"
        bad.write_text("value\n1.0\n")
        assert main(["compare", "--curve", str(curve), "--eigs", str(bad)]) == 4

    def test_oracle_needs_sidecar(self, artifacts, tmp_path):
        curve, eigs = artifacts
        bare = tmp_path / "bare.csv"
        bare.write_bytes(curve.read_bytes())
        assert main(["compare", "--curve", str(bare), "--eigs", str(eigs), "--oracle"]) == 1


def test_example(tmp_path):
    out_dir = tmp_path / "anticommutator"
    args = ["example", "anticommutator", "--n", "40", "--reps", "1", "--grid-points", "11", "--eps", "0.05", "--out-dir", str(out_dir)]
    assert main(args) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["dimension"] == 3
    assert report["reference_check"]["passed"] is True
    assert report["experiment"]["status"] == "completed"
    assert len(pd.read_csv(out_dir / "eigs.csv")) == 40
    assert len(pd.read_csv(out_dir / "curve.csv")) == 11


def test_unknown_example():
    assert main(["example", "quartic"]) == 1


class TestRunConfig:
    def test_bindings_from_pairs(self):
        cfg = RunConfig(command="density", poly="x1", nvars=1, bindings=["1=mp(0.5,1)"], out="c.csv")
        assert cfg.bindings == {1: "mp(0.5,1)"}

    @pytest.mark.parametrize("bindings", [["x=gue"], ["1gue"], ["1=gue", "1=gue"], ["1="]])
    def test_malformed_bindings(self, bindings):
        with pytest.raises(ValueError):
            RunConfig(command="simulate", poly="x1", nvars=1, bindings=bindings, out="e.csv")

    def test_solver_overrides(self):
        cfg = RunConfig(command="linearize", poly="x1", nvars=1, max_iter=7)
        solver = cfg.solver()
        assert solver.max_iter == 7
        assert solver.tol == pytest.approx(1e-12)
