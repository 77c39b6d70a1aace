import json
from pathlib import Path

import pytest

import main
from suslov_lab.lab import consistency
from suslov_lab.lab.reporter import comparison_columns

HEADER = (
    "t,omega1,omega2,omega3,lambda,energy,reduced_residual,unreduced_residual,"
    "orthonormality_defect,R11,R12,R13,R21,R22,R23,R31,R32,R33"
)
SHORT_RUN = ["--eps", "0.1", "--t-final", "1"]


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(path: Path, **values) -> str:
    path.write_text(json.dumps(values))
    return str(path)


class TestRun:
    def test_writes_csv_and_manifest(self, workdir):
        assert main.main(["run", "--method", "midpoint", *SHORT_RUN, "--out", "run.csv"]) == main.EXIT_OK
        data = (workdir / "run.csv").read_bytes()
        assert b"\r" not in data
        lines = data.decode().splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 12

        manifest = json.loads((workdir / "run.csv.manifest.json").read_text())
        assert manifest["command"] == "run"
        assert manifest["config"]["method"] == "midpoint"
        assert manifest["summary"]["rows"] == 11
        assert manifest["summary"]["execution_time_seconds"] > 0.0

    def test_deterministic(self, workdir):
        for name in ("first.csv", "second.csv"):
            assert main.main(["run", "--method", "variational", *SHORT_RUN, "--out", name]) == main.EXIT_OK
        assert (workdir / "first.csv").read_bytes() == (workdir / "second.csv").read_bytes()

    def test_plots_flag(self, workdir):
        assert main.main(["run", "--method", "rk4", *SHORT_RUN, "--out", "rk4.csv", "--plots"]) == main.EXIT_OK
        assert (workdir / "rk4_six_panel.py").exists()
        manifest = json.loads((workdir / "rk4.csv.manifest.json").read_text())
        assert manifest["outputs"] == ["rk4.csv", "rk4_six_panel.py"]

    def test_invalid_step(self, workdir):
        assert main.main(["run", "--eps", "-1"]) == main.EXIT_CONFIG
        assert not (workdir / "trajectory.csv").exists()

    def test_missing_config_file(self):
        assert main.main(["run", "--config", "absent.json"]) == main.EXIT_CONFIG

    def test_solver_failure(self, workdir):
        config = write_config(workdir / "cfg.json", newton_max_iter=1, newton_tol=1e-30)
        assert main.main(["run", "--config", config, *SHORT_RUN, "--out", "run.csv"]) == main.EXIT_SOLVER


class TestCompare:
    def test_merged_header(self, workdir):
        argv = ["compare", "--method", "midpoint", "--method-b", "rk4", *SHORT_RUN, "--out", "cmp.csv"]
        assert main.main(argv) == main.EXIT_OK
        lines = (workdir / "cmp.csv").read_text().splitlines()
        assert lines[0] == ",".join(comparison_columns())
        assert len(lines) == 12
        assert (workdir / "cmp.csv.manifest.json").exists()

    def test_plots_use_method_labels(self, workdir):
        argv = ["compare", "--method", "midpoint", *SHORT_RUN, "--out", "cmp.csv", "--plots"]
        assert main.main(argv) == main.EXIT_OK
        assert "['midpoint', 'variational']" in (workdir / "cmp_five_panel.py").read_text()


class TestConsistency:
    def test_assert_passes(self, workdir):
        argv = ["consistency", "--method", "midpoint", "--eps-count", "5", "--assert"]
        assert main.main(argv) == main.EXIT_OK
        report = json.loads((workdir / "consistency.json").read_text())
        assert report["scheme"] == "midpoint"
        assert len((workdir / "consistency.csv").read_text().splitlines()) == 6
        fits = (workdir / "consistency_fits.csv").read_text().splitlines()
        assert fits[0] == "quantity,kind,value,expected,residual,status"
        assert [line.split(",")[0] for line in fits[1:]] == ["err_omega", "err_lambda", "err_group", "err_velocity"]
        manifest = json.loads((workdir / "consistency.csv.manifest.json").read_text())
        assert manifest["outputs"] == ["consistency.csv", "consistency_fits.csv", "consistency.json"]

    def test_assert_reports_miss(self, monkeypatch):
        expected = dict(consistency.EXPECTED_SLOPES["midpoint"], err_omega=5.0)
        monkeypatch.setitem(consistency.EXPECTED_SLOPES, "midpoint", expected)
        argv = ["consistency", "--method", "midpoint", "--eps-count", "5"]
        assert main.main(argv) == main.EXIT_OK
        assert main.main([*argv, "--assert"]) == main.EXIT_SLOPE_MISS

    def test_rest_cannot_be_fitted(self, workdir):
        config = write_config(workdir / "rest.json", omega0=[0.0, 0.0, 0.0])
        argv = ["consistency", "--config", config, "--method", "midpoint", "--eps-count", "5"]
        assert main.main(argv) == main.EXIT_FIT

    def test_rk4_rejected(self):
        assert main.main(["consistency", "--method", "rk4"]) == main.EXIT_CONFIG


class TestPlotScripts:
    def test_for_existing_csv(self, workdir):
        main.main(["run", *SHORT_RUN, "--out", "run.csv"])
        assert main.main(["plot-scripts", "run.csv", "--out-dir", "plots"]) == main.EXIT_OK
        assert (workdir / "plots" / "run_six_panel.py").exists()

    def test_empty_csv(self, workdir):
        (workdir / "empty.csv").write_text(HEADER + "\n")
        assert main.main(["plot-scripts", "empty.csv"]) == main.EXIT_CONFIG
        assert not (workdir / "empty_six_panel.py").exists()

    def test_missing_csv(self):
        assert main.main(["plot-scripts", "absent.csv"]) == main.EXIT_CONFIG


class TestManifests:
    def test_lists_runs(self, workdir, capsys):
        main.main(["run", *SHORT_RUN, "--out", "run.csv"])
        assert main.main(["manifests"]) == main.EXIT_OK
        assert "run.csv.manifest.json" in capsys.readouterr().out

    def test_latest(self, workdir, capsys):
        main.main(["run", *SHORT_RUN, "--out", "run.csv"])
        capsys.readouterr()
        assert main.main(["manifests", "--latest"]) == main.EXIT_OK
        assert '"command": "run"' in capsys.readouterr().out

    def test_latest_without_manifests(self):
        assert main.main(["manifests", "--latest"]) == main.EXIT_CONFIG


def test_no_command():
    assert main.main([]) == main.EXIT_CONFIG
