import json

import pytest
from click.testing import CliRunner

from app.services.verification_service import VerificationService
from main import cli


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def small_run(quadratic4_config) -> dict:
    return {**quadratic4_config, "periods": 200, "burn_in": 10, "replications": 2}


class TestBench:
    def test_quadratic4(self, runner, config_dir):
        result = runner.invoke(cli, ["bench", "--config", str(config_dir / "quadratic4.json")])
        assert result.exit_code == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["nash"]["decimal"] == "15"
        assert payload["walrasian"]["decimal"] == "18"
        assert [b["decimal"] for b in payload["bounds"]] == ["0", "60"]
        assert payload["grid_descent"]["b"][1]["decimal"] == "55"

    def test_writes_output(self, runner, config_dir, tmp_path):
        out = tmp_path / "results"
        result = runner.invoke(
            cli, ["bench", "--config", str(config_dir / "quadratic4.json"), "--out", str(out), "--format", "csv"]
        )
        assert result.exit_code == 0, result.stderr
        lines = (out / "bench.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "q,lower,upper,grid_points"
        assert len(lines) == 92

    def test_dot_is_only_for_graphs(self, runner, config_dir):
        result = runner.invoke(cli, ["bench", "--config", str(config_dir / "quadratic4.json"), "--format", "dot"])
        assert result.exit_code == 2


class TestConfigErrors:
    def test_missing_firm_count(self, runner, write_config, quadratic4_config):
        del quadratic4_config["model"]["n"]
        result = runner.invoke(cli, ["bench", "--config", write_config(quadratic4_config)])
        assert result.exit_code == 2
        assert "model.n required" in result.stderr

    def test_zero_replications(self, runner, write_config, quadratic4_config):
        quadratic4_config["replications"] = 0
        result = runner.invoke(cli, ["simulate", "--config", write_config(quadratic4_config)])
        assert result.exit_code == 2

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["bench", "--config", str(tmp_path / "nope.json")])
        assert result.exit_code == 2
        assert "not found" in result.stderr

    def test_eta_below_one(self, runner, config_dir):
        result = runner.invoke(cli, ["analyze", "--config", str(config_dir / "quadratic4.json"), "--eta", "0.5"])
        assert result.exit_code == 2


class TestAnalyze:
    def test_eta2(self, runner, config_dir):
        result = runner.invoke(cli, ["analyze", "--config", str(config_dir / "quadratic4.json"), "--eta", "2"])
        assert result.exit_code == 0, result.stderr
        payload = json.loads(result.stdout)
        assert [node["label"] for node in payload["lre"]] == ["mon(15,BR)", "mon(18,IM)"]
        assert payload["min_cost"] == 92.0
        assert payload["rule_inertia"]["min_memory"] == 3
        assert payload["rule_inertia"]["path_available"]

    def test_dot(self, runner, config_dir):
        result = runner.invoke(cli, ["analyze", "--config", str(config_dir / "duopoly.json"), "--format", "dot"])
        assert result.exit_code == 0, result.stderr
        assert result.stdout.startswith("digraph resistances {")

    def test_non_sf_criterion(self, runner, write_config, quadratic4_config):
        quadratic4_config["criteria"] = [{"kind": "imitate_if_better"}]
        result = runner.invoke(cli, ["analyze", "--config", write_config(quadratic4_config)])
        assert result.exit_code == 1
        assert "simulate" in result.stderr


class TestSimulate:
    def test_deterministic(self, runner, write_config, small_run):
        path = write_config(small_run)
        first = runner.invoke(cli, ["simulate", "--config", path, "--seed", "5"])
        second = runner.invoke(cli, ["simulate", "--config", path, "--seed", "5"])
        assert first.exit_code == 0, first.stderr
        assert first.stdout == second.stdout
        payload = json.loads(first.stdout)
        assert payload["seed"] == 5
        assert payload["predicted_lre"] == ["mon(15,BR)", "mon(18,IM)"]

    def test_sweep_and_trajectory(self, runner, write_config, small_run, tmp_path, mocker):
        mocker.patch("app.services.simulation_service.SimulationService.predicted_lre", return_value=[])
        out = tmp_path / "sim"
        result = runner.invoke(
            cli,
            ["simulate", "--config", write_config(small_run), "--epsilon-sweep", "0.1,0.05", "--out", str(out)],
        )
        assert result.exit_code == 0, result.stderr
        payload = json.loads((out / "simulate.json").read_text(encoding="utf-8"))
        assert {row["epsilon"] for row in payload["rows"]} == {0.1, 0.05}
        assert set(payload["mistakes"]) == {"0.1", "0.05"}
        assert (out / "trajectory.csv").exists()

    def test_bad_sweep(self, runner, config_dir):
        result = runner.invoke(
            cli, ["simulate", "--config", str(config_dir / "quadratic4.json"), "--epsilon-sweep", "0.1,abc"]
        )
        assert result.exit_code == 2

    def test_zero_noise(self, runner, write_config, small_run):
        small_run["noise"] = {**small_run["noise"], "epsilon": 0}
        result = runner.invoke(cli, ["simulate", "--config", write_config(small_run)])
        assert result.exit_code == 2
        assert "epsilon" in result.stderr


class TestVerify:
    def test_increasing_demand_fails(self, runner, config_dir, mocker):
        mocker.patch.object(VerificationService, "check_criteria")
        result = runner.invoke(cli, ["verify", "--config", str(config_dir / "increasing_demand.json")])
        assert result.exit_code == 1
        payload = json.loads(result.stdout)
        assert payload["checks"][0]["name"] == "strategic_substitutes"
        assert not payload["checks"][0]["passed"]


class TestAggregative:
    def test_commons(self, runner, config_dir):
        result = runner.invoke(cli, ["aggregative", "--config", str(config_dir / "commons.json")])
        assert result.exit_code == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["ats"]["decimal"] == "0.5"
        assert payload["nash"] is None
        assert payload["lre"] is None
