import json

import pytest

from vecoff.cli import _parse_cost_arg, _parse_policy_args, main
from vecoff.config import default_config, save_config
from vecoff.experiments import ALGO_TAGS, MetricsReport
from vecoff.heuristics import PsoParams
from vecoff.mobility import ingest_trace


@pytest.fixture
def fast_config(tmp_path):
    """Config file with a small swarm so CLI runs stay quick."""
    cfg = default_config()
    cfg.pso = PsoParams(swarm_size=8, iterations_static=10, iterations_dynamic=5)
    path = tmp_path / "config.json"
    save_config(cfg, str(path))
    return str(path)


class TestArgHelpers:
    def test_cost_single_float_covers_every_algo(self):
        costs = _parse_cost_arg("0.01")
        assert costs == {algo: 0.01 for algo in ALGO_TAGS}

    def test_cost_pairs(self):
        costs = _parse_cost_arg("dqn=5e-4, fcfs=1e-5")
        assert costs == {"dqn": 5e-4, "fcfs": 1e-5}

    def test_cost_unknown_tag_rejected(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            _parse_cost_arg("lifo=1.0")

    def test_cost_malformed_rejected(self):
        with pytest.raises(ValueError):
            _parse_cost_arg("dqn")

    def test_cost_absent(self):
        assert _parse_cost_arg(None) is None

    def test_policy_bare_path_binds_to_the_subcommand_algo(self):
        assert _parse_policy_args(["p.json"], "dqn") == {"dqn": "p.json"}

    def test_policy_pairs(self):
        out = _parse_policy_args(["dqn=a.json", "ppo=b.json"], None)
        assert out == {"dqn": "a.json", "ppo": "b.json"}

    def test_policy_bare_path_needs_an_rl_context(self):
        with pytest.raises(ValueError, match="algo=path"):
            _parse_policy_args(["p.json"], "fcfs")

    def test_policy_unknown_tag_rejected(self):
        with pytest.raises(ValueError, match="dqn or ppo"):
            _parse_policy_args(["fcfs=p.json"], None)


class TestGenTrace:
    def test_writes_a_deterministic_trace(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(["gen-trace", "--vehicles", "5", "--seed", "3", "--out", str(a)]) == 0
        assert main(["gen-trace", "--vehicles", "5", "--seed", "3", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        samples = ingest_trace(str(a))
        assert {s.vehicle_id for s in samples} == set(range(5))
        assert "wrote" in capsys.readouterr().out


class TestRun:
    def test_heuristic_run_writes_a_report(self, tmp_path, fast_config, capsys):
        out = tmp_path / "report.csv"
        code = main([
            "run", "--config", fast_config, "--algo", "fcfs",
            "--vehicles", "30", "--seed", "1",
            "--synthetic-exec-cost", "0",
            "--out", str(out),
        ])
        assert code == 0
        report = MetricsReport.from_csv(str(out))
        assert len(report.rows) == 1
        assert report.rows[0].algo == "fcfs"
        assert "objective" in capsys.readouterr().out

    def test_dump_writes_task_records(self, tmp_path, fast_config):
        out = tmp_path / "report.csv"
        dump = tmp_path / "episode.jsonl"
        code = main([
            "run", "--config", fast_config, "--algo", "sdf",
            "--vehicles", "30", "--seed", "1",
            "--synthetic-exec-cost", "0",
            "--out", str(out), "--dump", str(dump),
        ])
        assert code == 0
        records = [json.loads(line) for line in dump.read_text().splitlines()]
        kinds = {r["kind"] for r in records}
        assert "task" in kinds
        assert sum(1 for r in records if r["kind"] == "task") == 30

    def test_rl_algo_without_policy_fails_with_hint(self, tmp_path, capsys):
        code = main([
            "run", "--algo", "dqn", "--vehicles", "30",
            "--out", str(tmp_path / "r.csv"),
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "--policy" in err
        assert "dqn" in err

    def test_unknown_subcommand_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--algo", "fcfs"])  # no --out
        assert exc.value.code == 2

    def test_bad_config_file_fails_cleanly(self, tmp_path, capsys):
        bad = tmp_path / "config.json"
        bad.write_text("{broken")
        code = main([
            "run", "--config", str(bad), "--algo", "fcfs",
            "--out", str(tmp_path / "r.csv"),
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestTrainAndDeploy:
    def test_tiny_train_then_run(self, tmp_path, fast_config, capsys):
        policy_path = tmp_path / "dqn.json"
        code = main([
            "train", "--config", fast_config, "--algo", "dqn",
            "--vehicles", "30", "--episodes", "8", "--seed", "2",
            "--out", str(policy_path), "--curve", str(tmp_path / "curve.csv"),
        ])
        assert code == 0
        curve = (tmp_path / "curve.csv").read_text().splitlines()
        assert curve[0] == "episode,total_reward"
        assert len(curve) == 9

        out = tmp_path / "report.csv"
        code = main([
            "run", "--config", fast_config, "--algo", "dqn",
            "--vehicles", "30", "--seed", "1",
            "--policy", str(policy_path),
            "--synthetic-exec-cost", "0",
            "--out", str(out),
        ])
        assert code == 0
        report = MetricsReport.from_csv(str(out))
        assert report.rows[0].algo == "dqn"


class TestMatrixAndExport:
    def test_small_matrix_then_export_round_trip(self, tmp_path, fast_config):
        csv_path = tmp_path / "report.csv"
        code = main([
            "matrix", "--config", fast_config,
            "--algos", "fcfs,sdf",
            "--vehicles", "20,30", "--seeds", "1,2",
            "--synthetic-exec-cost", "0",
            "--format", "csv", "--out", str(csv_path),
        ])
        assert code == 0
        report = MetricsReport.from_csv(str(csv_path))
        assert len(report.rows) == 2 * 2 * 2
        assert len(report.means) == 4

        json_path = tmp_path / "report.json"
        assert main([
            "export", "--in", str(csv_path), "--format", "json", "--out", str(json_path),
        ]) == 0
        back = MetricsReport.from_json(str(json_path))
        assert back.rows == report.rows
        assert back.means == report.means

        again = tmp_path / "again.csv"
        assert main([
            "export", "--in", str(json_path), "--format", "csv", "--out", str(again),
        ]) == 0
        assert again.read_bytes() == csv_path.read_bytes()

    def test_matrix_rl_needs_policies(self, tmp_path, capsys):
        code = main([
            "matrix", "--algos", "fcfs,dqn", "--vehicles", "20", "--seeds", "1",
            "--out", str(tmp_path / "r.csv"),
        ])
        assert code == 1
        assert "--policy" in capsys.readouterr().err
