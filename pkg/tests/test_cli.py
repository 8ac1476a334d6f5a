"""End-to-end CLI runs: files in, files out, stable bytes."""

import json

import pytest

from guesslab import Command
from guesslab.cli import main
from guesslab.cpc_sim import build_mode_net, echo_program
from guesslab.petri_net import serialize_net


@pytest.fixture
def mode_net_file(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps(serialize_net(build_mode_net())))
    return path


def _record_file(tmp_path):
    record = {
        Command("0").to_hex(): [{"lambda": 0.0, "n": 3}, {"lambda": 1.0, "n": 1}],
        Command("1").to_hex(): [{"lambda": 1.0, "n": 4}],
    }
    path = tmp_path / "record.json"
    path.write_text(json.dumps(record))
    return path


class TestDistance:
    def test_quarter_turn(self, capsys):
        assert main(["distance", "1,0", "0.5,0.5"]) == 0
        assert capsys.readouterr().out.strip() == "0.7853982"

    def test_identical_distributions(self, capsys):
        assert main(["distance", "0.25,0.75", "0.25,0.75"]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(0.0, abs=1e-6)

    def test_invalid_distribution_is_a_domain_error(self, capsys):
        assert main(["distance", "0.2,0.2", "1,0"]) == 1
        assert "error:" in capsys.readouterr().err


class TestSampleSizeVerb:
    def test_bound_table(self, tmp_path, capsys):
        out = tmp_path / "bounds.csv"
        code = main(["sample-size", "--epsilons", "0.2,0.1,0.05",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("# ")
        manifest = json.loads(lines[0][2:])
        assert manifest["tool"] == "guesslab"
        assert manifest["verb"] == "sample-size"
        assert lines[1] == "epsilon,n_bound"
        assert lines[2:] == ["0.2,25", "0.1,100", "0.05,400"]

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        out = tmp_path / "bounds.csv"
        args = ["sample-size", "--epsilons", "1,0.5,0.2", "--out", str(out)]
        assert main(args) == 0
        first = out.read_bytes()
        assert main(args + ["--force"]) == 0
        assert out.read_bytes() == first

    def test_overwrite_needs_force(self, tmp_path, capsys):
        out = tmp_path / "bounds.csv"
        args = ["sample-size", "--epsilons", "1", "--out", str(out)]
        assert main(args) == 0
        assert main(args) == 1
        assert "refusing to overwrite" in capsys.readouterr().err


class TestNetVerbs:
    def test_validate_reports_the_pieces(self, mode_net_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["net-validate", str(mode_net_file), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["ok"] is True
        assert len(payload["events"]) == 6
        assert payload["inputs"] == ["verdict"]
        assert payload["outputs"] == ["stage_report"]

    def test_validate_output_is_stable(self, mode_net_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        args = ["net-validate", str(mode_net_file), "--out", str(out)]
        assert main(args) == 0
        first = out.read_bytes()
        assert main(args + ["--force"]) == 0
        assert out.read_bytes() == first

    def test_analyze_finds_the_scheduler_cycle(self, mode_net_file, capsys):
        code = main(["net-analyze", str(mode_net_file), "--initial", "ready"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["reachable_count"] == 4
        assert len(payload["live_events"]) == 6
        assert payload["dead_events"] == []

    def test_simulate_with_injection(self, mode_net_file, tmp_path, capsys):
        marking = tmp_path / "marking.json"
        marking.write_text(json.dumps({"ready": "go"}))
        trace = tmp_path / "trace.jsonl"
        code = main([
            "net-simulate", str(mode_net_file),
            "--marking", str(marking), "--steps", "4",
            "--inject", "2:verdict:pass",
            "--out", str(trace),
        ])
        assert code == 0
        lines = trace.read_text().strip().split("\n")
        first = json.loads(lines[0])
        assert first["manifest"]["verb"] == "net-simulate"
        events = [json.loads(line).get("event") for line in lines[1:]]
        assert "begin_run" in events
        assert "test_pass" in events

    def test_refine_splits_and_names_variants(self, mode_net_file, tmp_path, capsys):
        partition = tmp_path / "partition.json"
        partition.write_text(json.dumps({"verdict": [["pass"], ["fail"]]}))
        code = main(["net-refine", str(mode_net_file),
                     "--partition", str(partition)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        event_map = payload["event_map"]
        # each original event keeps exactly one nonempty variant: the verdict
        # split leaves test_pass only its "pass" block and test_fail only "fail"
        assert sorted(event_map.values()) == sorted(build_mode_net().events)
        assert set(event_map) == {f"{eid}__1" for eid in build_mode_net().events}

    def test_coarsen_blackens_every_color_set(self, mode_net_file, capsys):
        assert main(["net-coarsen", str(mode_net_file)]) == 0
        payload = json.loads(capsys.readouterr().out)
        colors = {
            json.dumps(c, sort_keys=True)
            for spec in payload["net"]["states"].values()
            for c in spec["colors"]
        }
        assert colors == {json.dumps({"reserved": "black"}, sort_keys=True)}


class TestFitModels:
    def test_perfect_fit_has_zero_residual(self, tmp_path, capsys):
        record = _record_file(tmp_path)
        assert main(["fit-models", str(record)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["models"]) == 1
        assert payload["residuals"][0] == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal_pair_emits_two_models(self, tmp_path, capsys):
        record = _record_file(tmp_path)
        assert main(["fit-models", str(record), "--orthogonal-pair"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["models"]) == 2
        assert payload["residuals"] == pytest.approx([0.0, 0.0], abs=1e-7)


class TestCalibrateVerb:
    def test_full_run_writes_table_trace_and_figure(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "family_bits": 8,
            "target_angle": 0.8,
            "offset": 0.3,
            "schedule": [0.4, 0.2],
        }))
        out = tmp_path / "stages.csv"
        trace = tmp_path / "trace.jsonl"
        code = main(["calibrate", "--config", str(config),
                     "--out", str(out), "--trace", str(trace), "--seed", "5"])
        assert code == 0
        summary = _first_json(capsys)
        assert summary["stages_total"] == 2
        assert abs(summary["final_theta"][0] - 0.5) <= 0.1
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("# ")
        assert lines[1].split(",")[0] == "stage"
        assert len(lines) == 4
        assert json.loads(trace.read_text().split("\n")[0])["manifest"]["verb"] == "calibrate"
        assert (tmp_path / "stages.png").exists()


def _first_json(capsys) -> dict:
    """The JSON object on stdout, skipping any leading 'wrote ...' lines."""
    text = capsys.readouterr().out
    start = text.find("{")
    return json.loads(text[start:])


class TestGateErrorVerb:
    def test_table_and_figure(self, tmp_path, capsys):
        out = tmp_path / "gate_error.csv"
        code = main(["gate-error", "--lengths", "1,3", "--per-gate-error",
                     "0.05", "--draws", "10", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[1] == "gate_count,per_gate_error,bound,max_measured,mean_measured"
        first_row = lines[2].split(",")
        assert first_row[0] == "1"
        assert float(first_row[3]) == pytest.approx(0.05, abs=1e-9)
        assert (tmp_path / "gate_error.png").exists()


class TestTmpRunVerb:
    def test_echo_program_round_trip(self, tmp_path, capsys):
        program = tmp_path / "echo.json"
        program.write_text(json.dumps(echo_program().to_json_obj()))
        assert main(["tmp-run", "--program", str(program),
                     "--inputs", "a,b,end"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["outputs"] == ["a", "b"]
        assert payload["halted"] is True
        assert payload["timed_out"] is False


class TestErrorPaths:
    def test_malformed_json_reports_line_and_column(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"states": \n oops')
        assert main(["net-validate", str(bad)]) == 1
        err = capsys.readouterr().err
        assert "line 2" in err
        assert "column" in err

    def test_unknown_verb_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_seed_falls_back_to_the_environment(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("GUESSLAB_SEED", "17")
        out = tmp_path / "bounds.csv"
        assert main(["sample-size", "--epsilons", "1", "--out", str(out)]) == 0
        manifest = json.loads(out.read_text().split("\n")[0][2:])
        assert manifest["seed"] == 17

    def test_bad_environment_seed(self, mode_net_file, capsys, monkeypatch):
        monkeypatch.setenv("GUESSLAB_SEED", "many")
        assert main(["net-coarsen", str(mode_net_file)]) == 1
        assert "GUESSLAB_SEED" in capsys.readouterr().err
