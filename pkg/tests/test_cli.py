"""End-to-end tests for the command-line interface."""

import json
import signal
import socket
import subprocess
import sys
import time

import pytest

from touchinfer.cli import CONFIG_ENV, CliError, Config, load_config, run
from touchinfer.ingest import assemble_session
from touchinfer.model import trace_to_line

from test_ingest import session_lines
from touchinfer.model import TouchAction


def invoke(*argv):
    return run(list(argv))


# ------------------------------------------------------------------ config


def test_default_config_is_valid():
    config = Config()
    assert config.port == 9321
    assert config.profile == "nexus5"


def test_config_rejects_bad_port():
    with pytest.raises(CliError):
        Config(port=0)
    with pytest.raises(CliError):
        Config(port=70000)


def test_config_rejects_unknown_profile():
    with pytest.raises(CliError):
        Config(profile="palmpilot")


def test_load_config_from_file(tmp_path):
    file = tmp_path / "cfg.json"
    file.write_text(json.dumps({"dataset": str(tmp_path / "d.jsonl"),
                                "seed": 7, "port": 4444}))
    config = load_config(str(file))
    assert config.seed == 7
    assert config.port == 4444
    assert str(config.dataset) == str(tmp_path / "d.jsonl")


def test_load_config_env_fallback(tmp_path, monkeypatch):
    file = tmp_path / "cfg.json"
    file.write_text(json.dumps({"seed": 12}))
    monkeypatch.setenv(CONFIG_ENV, str(file))
    assert load_config(None).seed == 12
    # explicit path wins over the env var
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"seed": 99}))
    assert load_config(str(other)).seed == 99


def test_load_config_rejects_unknown_keys(tmp_path):
    file = tmp_path / "cfg.json"
    file.write_text(json.dumps({"sed": 12}))
    with pytest.raises(CliError, match="unknown config keys"):
        load_config(str(file))


def test_load_config_bad_json_exits_one(tmp_path, capsys):
    file = tmp_path / "cfg.json"
    file.write_text("{not json")
    assert invoke("--config", str(file), "synth", "--kind", "actions",
                  "--per-class", "1", "--separation", "1") == 1
    assert "not valid JSON" in capsys.readouterr().err


# --------------------------------------------------------------- exit codes


def test_help_exits_zero(capsys):
    assert invoke("--help") == 0
    out = capsys.readouterr().out
    for name in ("serve", "synth", "extract", "train", "eval", "report"):
        assert name in out


def test_unknown_subcommand_exits_two(capsys):
    assert invoke("bogus") == 2
    assert "usage" in capsys.readouterr().err


def test_missing_required_flag_exits_two():
    assert invoke("synth") == 2


def test_module_error_exits_one(tmp_path, capsys):
    out = tmp_path / "x.jsonl"
    assert invoke("synth", "--kind", "actions", "--per-class", "2",
                  "--separation", "0", "--out", str(out)) == 1
    assert "separation" in capsys.readouterr().err


# ------------------------------------------------------------- happy paths


def synth_extract(tmp_path, kind, phase, per_class, seed):
    dataset = tmp_path / f"{kind}.jsonl"
    matrix = tmp_path / f"phase{phase}.json"
    assert invoke("synth", "--kind", kind, "--per-class", str(per_class),
                  "--separation", "16", "--seed", str(seed),
                  "--out", str(dataset)) == 0
    assert invoke("extract", "--phase", str(phase), "--in", str(dataset),
                  "--out", str(matrix)) == 0
    return matrix


def test_knn_chain_produces_report(tmp_path, capsys):
    matrix = synth_extract(tmp_path, "actions", 1, per_class=5, seed=1)
    model = tmp_path / "knn.json"
    stem = tmp_path / "knn-eval"
    assert invoke("train", "--model", "knn", "--in", str(matrix),
                  "--out", str(model)) == 0
    assert invoke("eval", "--model", "knn", "--in", str(matrix),
                  "--folds", "5", "--report", str(stem)) == 0
    out = capsys.readouterr().out
    assert "stage 1: action groups" in out
    assert "stage 2: scroll direction" in out
    assert "combined: all touch actions" in out
    assert stem.with_suffix(".txt").exists()
    kinds = [json.loads(line)["record"]
             for line in stem.with_suffix(".jsonl").read_text().splitlines()]
    assert kinds == ["eval-report", "confusion", "confusion", "confusion"]


def test_ann_chain_produces_report(tmp_path, capsys):
    matrix = synth_extract(tmp_path, "digits", 2, per_class=8, seed=2)
    model = tmp_path / "ann.json"
    stem = tmp_path / "ann-eval"
    assert invoke("train", "--model", "ann", "--in", str(matrix),
                  "--out", str(model), "--hidden", "16", "--seed", "3") == 0
    assert invoke("eval", "--model", "ann", "--in", str(matrix),
                  "--model-file", str(model), "--seed", "3",
                  "--report", str(stem)) == 0
    out = capsys.readouterr().out
    assert "seeds: split=3, train=3" in out
    assert "digit hit rate" in out
    assert "identification rate (%) by number of guesses" in out
    assert stem.with_suffix(".guess.jsonl").exists()


def test_report_rerender_is_byte_identical(tmp_path, capsys):
    matrix = synth_extract(tmp_path, "actions", 1, per_class=5, seed=1)
    stem = tmp_path / "eval"
    assert invoke("eval", "--model", "knn", "--in", str(matrix),
                  "--folds", "5", "--report", str(stem)) == 0
    rendered = tmp_path / "again.txt"
    assert invoke("report", "--in", str(stem.with_suffix(".jsonl")),
                  "--out", str(rendered)) == 0
    assert rendered.read_bytes() == stem.with_suffix(".txt").read_bytes()


def test_eval_is_replayable(tmp_path):
    matrix = synth_extract(tmp_path, "actions", 1, per_class=5, seed=4)
    for stem in ("a", "b"):
        assert invoke("eval", "--model", "knn", "--in", str(matrix),
                      "--folds", "5", "--seed", "9",
                      "--report", str(tmp_path / stem)) == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_config_paths_supply_defaults(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "dataset": str(tmp_path / "traces.jsonl"),
        "matrices": str(tmp_path / "mat"),
        "models": str(tmp_path / "mod"),
        "reports": str(tmp_path / "rep"),
        "seed": 1,
    }))
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert invoke("synth", "--kind", "actions", "--per-class", "5",
                  "--separation", "16") == 0
    assert invoke("extract", "--phase", "1") == 0
    assert invoke("train", "--model", "knn") == 0
    assert invoke("eval", "--model", "knn", "--folds", "5") == 0
    assert (tmp_path / "traces.jsonl").exists()
    assert (tmp_path / "mat" / "phase1.json").exists()
    assert (tmp_path / "mod" / "knn.json").exists()
    assert (tmp_path / "rep" / "knn-eval.txt").exists()


# ------------------------------------------------------------- error paths


def test_synth_refuses_overwrite(tmp_path, capsys):
    out = tmp_path / "d.jsonl"
    args = ("synth", "--kind", "actions", "--per-class", "2",
            "--separation", "4", "--out", str(out))
    assert invoke(*args) == 0
    assert invoke(*args) == 1
    assert "refusing to overwrite" in capsys.readouterr().err
    assert invoke(*args, "--force") == 0


def test_synth_is_deterministic(tmp_path):
    one, two = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
    for out in (one, two):
        assert invoke("synth", "--kind", "digits", "--per-class", "3",
                      "--separation", "8", "--seed", "5",
                      "--out", str(out)) == 0
    assert one.read_bytes() == two.read_bytes()


def test_extract_missing_dataset(tmp_path, capsys):
    assert invoke("extract", "--phase", "1",
                  "--in", str(tmp_path / "none.jsonl")) == 1
    assert "dataset not found" in capsys.readouterr().err


def test_eval_before_train_reports_model_not_found(tmp_path, capsys):
    matrix = synth_extract(tmp_path, "digits", 2, per_class=3, seed=1)
    assert invoke("eval", "--model", "ann", "--in", str(matrix),
                  "--model-file", str(tmp_path / "ann.json")) == 1
    assert "model not found" in capsys.readouterr().err


def test_train_knn_rejects_digit_labels(tmp_path, capsys):
    matrix = synth_extract(tmp_path, "digits", 2, per_class=3, seed=1)
    assert invoke("train", "--model", "knn", "--in", str(matrix),
                  "--out", str(tmp_path / "m.json")) == 1
    assert "touch-action labels" in capsys.readouterr().err


def test_eval_ann_layout_mismatch(tmp_path, capsys):
    phase2 = synth_extract(tmp_path, "digits", 2, per_class=8, seed=2)
    model = tmp_path / "ann.json"
    assert invoke("train", "--model", "ann", "--in", str(phase2),
                  "--out", str(model), "--hidden", "8", "--seed", "0",
                  "--max-epochs", "2") == 0
    phase1 = synth_extract(tmp_path, "actions", 1, per_class=3, seed=1)
    assert invoke("eval", "--model", "ann", "--in", str(phase1),
                  "--model-file", str(model)) == 1
    assert "different feature layout" in capsys.readouterr().err


# ------------------------------------------------------------------- serve


def test_serve_round_trip(tmp_path):
    dataset = tmp_path / "served.jsonl"
    lines = session_lines("cli", [TouchAction.CLICK, 7], seed=3)
    expected, _ = assemble_session(lines)

    proc = subprocess.Popen(
        [sys.executable, "-m", "touchinfer", "serve", "--port", "0",
         "--out", str(dataset)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        banner = proc.stdout.readline()
        port = int(banner.split(":")[-1].split(",")[0])
        with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
            sock.sendall(("\n".join(lines) + "\n").encode("utf-8"))
            sock.shutdown(socket.SHUT_WR)
            while sock.recv(4096):
                pass
        proc.send_signal(signal.SIGINT)
        out, err = proc.communicate(timeout=30)
    finally:
        proc.kill()
    assert proc.returncode == 0, err
    assert "stopped" in out
    assert dataset.read_text().splitlines() == [trace_to_line(t) for t in expected]
