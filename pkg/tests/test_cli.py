import json

import pytest

from match_advisor.cli import run_cli


def run(capsys, *argv):
    code = run_cli(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_good_fixture_exits_zero(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "validate", "--instance",
                           str(fixtures_dir / "good_instance.json"))
        assert code == 0
        assert json.loads(out)["ok"] is True

    def test_bad_fixture_exits_one_with_error_json(self, capsys, fixtures_dir):
        code, out, err = run(capsys, "validate", "--instance",
                             str(fixtures_dir / "bad_instance.json"))
        assert code == 1
        payload = json.loads(err)
        assert payload["error"] == "invalid-instance"
        assert any("minimality" in v for v in payload["violations"])

    def test_missing_file_exits_one(self, capsys, tmp_path):
        code, _, err = run(capsys, "validate", "--instance",
                           str(tmp_path / "nope.json"))
        assert code == 1
        assert json.loads(err)["error"]


class TestEstimate:
    def test_exact_on_seeker_fixture(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "estimate", "--instance",
                           str(fixtures_dir / "seeker_three_options.json"),
                           "--method", "exact")
        assert code == 0
        payload = json.loads(out)
        assert payload["value"] == 0.75
        assert (payload["numerator"], payload["denominator"]) == (3, 4)

    def test_sampling_is_seed_reproducible(self, capsys, fixtures_dir):
        args = ("estimate", "--instance", str(fixtures_dir / "seeker_three_options.json"),
                "--method", "sample", "--samples", "200", "--seed", "9")
        code1, out1, _ = run(capsys, *args)
        code2, out2, _ = run(capsys, *args)
        assert code1 == code2 == 0 and out1 == out2

    def test_hkuno_sample_count(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "estimate", "--instance",
                           str(fixtures_dir / "seeker_three_options.json"),
                           "--method", "hkuno", "--theta-hk", "4",
                           "--theta-u", "2", "--seed", "3")
        assert code == 0
        assert json.loads(out)["samples"] == 12


class TestAdvise:
    def test_budget_zero_keeps_empty_set(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "advise", "--instance",
                           str(fixtures_dir / "good_instance.json"),
                           "--budget", "0")
        assert code == 0
        payload = json.loads(out)
        assert payload["chosen"] == [] and payload["gain"] == 0

    def test_json_output_shape(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "advise", "--instance",
                           str(fixtures_dir / "good_instance.json"),
                           "--budget", "2")
        assert code == 0
        payload = json.loads(out)
        assert set(payload) >= {"chosen", "cost", "probability", "baseline",
                                "gain", "scenario1", "metadata"}

    def test_csv_output(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "advise", "--instance",
                           str(fixtures_dir / "good_instance.json"),
                           "--budget", "1", "--out", "csv")
        assert code == 0
        header, row = out.strip().splitlines()
        assert header.split(",")[0] == "chosen"
        assert len(row.split(",")) == len(header.split(","))

    def test_solver_override(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "advise", "--instance",
                           str(fixtures_dir / "good_instance.json"),
                           "--budget", "1", "--solver", "exhaustive")
        assert code == 0
        assert json.loads(out)["metadata"]["solver"] in ("exhaustive", "scenario1")


class TestGenerate:
    def test_gen_er_then_validate(self, capsys, tmp_path):
        out_path = tmp_path / "er.json"
        code, out, _ = run(capsys, "gen", "er", "--agents", "6", "--resources", "5",
                           "--edge-prob", "0.3", "--restrictions", "4",
                           "--seed", "11", "--out", str(out_path))
        assert code == 0 and out_path.exists()
        code, out, _ = run(capsys, "validate", "--instance", str(out_path))
        assert code == 0

    def test_gen_er_seed_reproducible(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for target in (a, b):
            run(capsys, "gen", "er", "--agents", "5", "--resources", "4",
                "--edge-prob", "0.25", "--restrictions", "3",
                "--seed", "5", "--out", str(target))
        assert a.read_bytes() == b.read_bytes()

    def test_gen_maxcov_reports_target(self, capsys, tmp_path):
        out_path = tmp_path / "cov.json"
        code, out, _ = run(capsys, "gen", "maxcov", "--universe", "3",
                           "--family", "[[0,1],[1,2]]", "--q", "1", "--t", "2",
                           "--out", str(out_path))
        assert code == 0
        assert json.loads(out)["target_probability"] == "2/3"
        code, _, _ = run(capsys, "validate", "--instance", str(out_path))
        assert code == 0

    def test_gen_threshold_standin_preset_dims(self, capsys, tmp_path):
        rp, ap = tmp_path / "r.csv", tmp_path / "a.csv"
        code, out, _ = run(capsys, "gen", "threshold-standin", "--preset", "cocl",
                           "--out-resources", str(rp), "--out-agents", str(ap))
        assert code == 0
        payload = json.loads(out)
        assert payload["agents"] == 154 and payload["resources"] == 144
        assert payload["standin"] is True
        assert len(rp.read_text().splitlines()) == 145


class TestEnumerate:
    def test_streams_json_lines(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "enumerate", "--instance",
                           str(fixtures_dir / "seeker_three_options.json"))
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 4
        assert all("pairs" in json.loads(line) for line in lines)

    def test_cap_limits_stream(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "enumerate", "--instance",
                           str(fixtures_dir / "seeker_three_options.json"), "--cap", "2")
        assert code == 0
        assert len(out.strip().splitlines()) == 2


class TestUsageErrors:
    def test_unknown_command_exits_two(self, capsys):
        assert run_cli(["frobnicate"]) == 2

    def test_missing_required_flag_exits_two(self, capsys):
        assert run_cli(["estimate"]) == 2


class TestExperimentCommand:
    def test_desk_scale_synthetic_run(self, capsys, tmp_path):
        config = {
            "protocol": "synthetic-mcsr",
            "seed": 3,
            "n_instances": 3,
            "n_agents": 6,
            "n_resources": 4,
            "edge_prob": 0.3,
            "n_restrictions": [3],
            "max_restr_per_resource": 2,
            "budgets": [1, 2],
            "solvers": ["greedy", "exhaustive"],
            "oracle": "exact",
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config), encoding="utf-8")
        out_dir = tmp_path / "out"
        code, out, err = run(capsys, "experiment", "synthetic-mcsr",
                             "--config", str(config_path), "--out", str(out_dir),
                             "--no-plot")
        assert code == 0, err
        result = json.loads(out)
        assert (out_dir / "runs.csv").exists()
        assert (out_dir / "summary.csv").exists()
        assert result["runs"] == 3 * 2 * 2

    def test_protocol_mismatch_rejected(self, capsys, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"protocol": "threshold"}), encoding="utf-8")
        code, _, err = run(capsys, "experiment", "synthetic-mcsr",
                           "--config", str(config_path), "--out", str(tmp_path / "o"))
        assert code == 1
        assert "does not match" in json.loads(err)["message"]
