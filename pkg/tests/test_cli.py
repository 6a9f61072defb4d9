"""
Tests for the command-line interface and the report batteries.
"""

import json

import pytest

import fracdelay.analysis.report as report_module
import fracdelay.core.config as config_module
from fracdelay.analysis.report import ReportGenerator
from fracdelay.core.config import RunConfig
from fracdelay.core.validation import SpectralHitError
from fracdelay.ui.cli import main

SMALL_RUN = {
    "problem": {"A": [[0.05]], "alpha": 2.5, "gamma": -0.5, "lambda": 1, "N": 80,
                "forcing": {"kind": "random", "seed": 5}},
    "grid": {"m": 256, "contour_nodes": 256},
    "mr": {"trials": 4, "horizons": [8, 16]},
}


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))
    monkeypatch.setattr(config_module, "_config", None)
    yield


@pytest.fixture
def run_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(SMALL_RUN))
    return path


def read_report(out, command):
    return json.loads((out / f"{command}_report.json").read_text())


class TestSolveCommand:
    """Tests for `fracdelay solve`."""

    def test_writes_artifacts(self, run_file, tmp_path, capsys):
        """Test the solution CSV and JSON report are written."""
        out = tmp_path / "out"
        assert main(["solve", "-c", str(run_file), "-o", str(out)]) == 0
        assert (out / "solution.csv").exists()
        report = read_report(out, "solve")
        assert report["verdicts"]["residual"] == "pass"
        assert report["verdicts"]["initial_values"] == "pass"
        assert report["seeds"]["forcing"] == 5
        assert report["config"]["problem"]["N"] == 80
        assert "residual" in capsys.readouterr().out

    def test_both_methods(self, run_file, tmp_path):
        """Test --method both records the method equivalence."""
        out = tmp_path / "out"
        assert main(["solve", "-c", str(run_file), "-o", str(out), "--method", "both"]) == 0
        assert read_report(out, "solve")["verdicts"]["method_equivalence"] == "pass"

    def test_rerun_from_report(self, run_file, tmp_path):
        """Test a report reproduces its solution when fed back as config."""
        out = tmp_path / "out"
        main(["solve", "-c", str(run_file), "-o", str(out)])
        first = (out / "solution.csv").read_text()
        report_path = tmp_path / "saved_report.json"
        report_path.write_text((out / "solve_report.json").read_text())
        assert main(["solve", "-c", str(report_path)]) == 0
        assert (out / "solution.csv").read_text() == first

    def test_seed_override(self, run_file, tmp_path):
        """Test --seed changes the random forcing."""
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["solve", "-c", str(run_file), "-o", str(out_a)])
        main(["solve", "-c", str(run_file), "-o", str(out_b), "--seed", "6"])
        assert (out_a / "solution.csv").read_text() != (out_b / "solution.csv").read_text()
        assert read_report(out_b, "solve")["seeds"]["forcing"] == 6

    def test_invalid_alpha(self, tmp_path, capsys):
        """Test an invalid problem exits with code 2."""
        data = json.loads(json.dumps(SMALL_RUN))
        data["problem"]["alpha"] = 3.5
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        assert main(["solve", "-c", str(path), "-o", str(tmp_path / "out")]) == 2
        assert "Error:" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        """Test an unknown config key exits with code 2."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"problem": {"beta": 1}}))
        assert main(["solve", "-c", str(path)]) == 2

    def test_missing_file(self, tmp_path):
        """Test a missing config file exits with code 1."""
        assert main(["solve", "-c", str(tmp_path / "absent.json")]) == 1


class TestVerifyCommand:
    """Tests for `fracdelay verify`."""

    def test_passes(self, run_file, tmp_path):
        """Test the identity battery passes at default tolerances."""
        out = tmp_path / "out"
        assert main(["verify", "-c", str(run_file), "-o", str(out)]) == 0
        verdicts = read_report(out, "verify")["verdicts"]
        for name in ("kernel_semigroup", "kernel_identity", "h_recursion", "conv_diff_identity",
                     "resolvent_residual", "solution_residual", "method_equivalence",
                     "homogeneous", "homogeneous_control", "transform_h", "transform_kernel",
                     "transform_solution_kernel"):
            assert verdicts[name] == "pass", name

    def test_tight_tolerance_fails(self, run_file, tmp_path):
        """Test an impossible tolerance exits with code 3."""
        out = tmp_path / "out"
        assert main(["verify", "-c", str(run_file), "-o", str(out), "--tol", "1e-18"]) == 3
        assert read_report(out, "verify")["exit_code"] == 3


class TestSymbolCommand:
    """Tests for `fracdelay symbol`."""

    def test_scan(self, run_file, tmp_path):
        """Test the scan CSV and the symbol verdicts."""
        out = tmp_path / "out"
        assert main(["symbol", "-c", str(run_file), "-o", str(out)]) == 0
        report = read_report(out, "symbol")
        assert (out / "symbol_scan.csv").exists()
        assert report["verdicts"]["symbol"] == "bounded"
        assert report["verdicts"]["condition_c"] == "pass"
        assert report["metrics"]["unstable_modes"] == 2

    def test_spectral_hit_exit_code(self, run_file, tmp_path, monkeypatch):
        """Test a spectral hit exits with code 4."""
        def hit(*args, **kwargs):
            raise SpectralHitError("f(t) - A is singular at t=0.5", point=0.5)

        monkeypatch.setattr(report_module, "blunck_scan", hit)
        assert main(["symbol", "-c", str(run_file), "-o", str(tmp_path / "out")]) == 4


class TestMRCommand:
    """Tests for `fracdelay mr`."""

    def test_trend_report(self, run_file, tmp_path):
        """Test the trend tables, reconstruction and resolvent bound."""
        out = tmp_path / "out"
        assert main(["mr", "-c", str(run_file), "-o", str(out)]) == 0
        report = read_report(out, "mr")
        assert report["verdicts"]["mr"] in ("MR-consistent", "inconsistent")
        assert report["verdicts"]["reconstruction"] == "pass"
        assert report["verdicts"]["resolvent_bound"] == "fail"
        assert [t["kind"] for t in report["metrics"]["trend"]["operators"]] == ["E_alpha",
                                                                                "F_alpha"]
        assert report["seeds"]["trials"] == 0


class TestReportCommand:
    """Tests for `fracdelay report`."""

    def test_all_batteries(self, run_file, tmp_path):
        """Test the combined report prefixes verdicts by battery."""
        out = tmp_path / "out"
        assert main(["report", "-c", str(run_file), "-o", str(out)]) == 0
        report = read_report(out, "report")
        prefixes = {name.split(".")[0] for name in report["verdicts"]}
        assert prefixes == {"solve", "verify", "symbol", "mr"}


class TestReportGenerator:
    """Tests for ReportGenerator outside the CLI."""

    def test_text_summary(self, tmp_path):
        """Test the text summary lists verdicts and artifacts."""
        run = RunConfig.from_dict(SMALL_RUN)
        run.directory = str(tmp_path)
        generator = ReportGenerator(run)
        report = generator.run_solve()
        path = generator.save_report(report)
        text = generator.generate_text(report)
        assert text.startswith("fracdelay solve")
        assert str(path) in text
        assert json.loads(generator.generate_json(report))["command"] == "solve"


class TestConfigCommand:
    """Tests for `fracdelay config`."""

    def test_set_and_show(self, capsys):
        """Test a value set through the CLI is shown afterwards."""
        assert main(["config", "--set", "grid.m=1024"]) == 0
        config_module._config = None
        assert main(["config", "--show"]) == 0
        shown = capsys.readouterr().out
        data = json.loads(shown[shown.index("{"):])
        assert data["grid"]["m"] == 1024

    def test_bad_assignment(self, capsys):
        """Test malformed assignments exit with code 2."""
        assert main(["config", "--set", "grid.m"]) == 2
        assert main(["config", "--set", "plot.style=dark"]) == 2

    def test_reset(self, capsys):
        """Test --reset restores defaults."""
        main(["config", "--set", "grid.m=1024"])
        assert main(["config", "--reset"]) == 0
        assert config_module.get_config().grid.m == 4096

    @pytest.mark.parametrize("command", ["solve", "verify", "mr"])
    def test_max_horizon_limits_runs(self, run_file, tmp_path, command):
        """Test numerics.max_horizon below N makes the batteries exit with code 2."""
        assert main(["config", "--set", "numerics.max_horizon=50"]) == 0
        config_module._config = None
        assert main([command, "-c", str(run_file), "-o", str(tmp_path / "out")]) == 2

    def test_capacity_limits_runs(self, run_file, tmp_path):
        """Test numerics.capacity_threshold is applied to the solution kernel."""
        assert main(["config", "--set", "numerics.capacity_threshold=1e3"]) == 0
        config_module._config = None
        assert main(["solve", "-c", str(run_file), "-o", str(tmp_path / "out")]) == 2

    def test_abs_floor_recorded_in_generator(self, tmp_path):
        """Test the generator reads its limits from the numerics section."""
        config = config_module.Config()
        config.numerics.max_horizon = 500
        config.numerics.abs_floor = 1e-9
        run = RunConfig.from_dict(SMALL_RUN)
        generator = ReportGenerator(run, config=config)
        assert generator.limits == {"max_horizon": 500, "capacity": 1e300}
        assert generator.abs_floor == 1e-9
        assert generator.overflow_warning == 1e280


class TestParser:
    """Tests for the top-level parser."""

    def test_no_command_prints_help(self, capsys):
        """Test running without a command."""
        assert main([]) == 0
        assert "usage" in capsys.readouterr().out

    def test_version(self, capsys):
        """Test --version exits cleanly."""
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "1.0.0" in capsys.readouterr().out
