import json
import subprocess
import sys
from pathlib import Path

import pytest

from concernmine import cli
from concernmine.pipeline import OUTPUTS, ConfigError, PipelineConfig, config_hash, parse_k_range, parse_states

REPORT_FILES = OUTPUTS["report"]


def run(*argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


def digests(out: Path) -> dict:
    return {name: (out / name).read_bytes() for name in REPORT_FILES}


def test_pipeline_deterministic_across_processes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["pipeline", "--out", str(a), "--seed", "7"]) == 0
    proc = subprocess.run([sys.executable, "-m", "concernmine.cli", "pipeline", "--out", str(b), "--seed", "7"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert digests(a) == digests(b)


def test_stage_by_stage_matches_one_shot(tmp_path):
    one, staged = tmp_path / "one", tmp_path / "staged"
    assert cli.main(["pipeline", "--out", str(one)]) == 0
    for stage in ("ingest", "prep", "topics", "classify", "validate", "report"):
        assert cli.main([stage, "--out", str(staged)]) == 0, stage
    assert digests(one) == digests(staged)


def test_validate_mock_kappa_is_one(tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["ingest", "--out", str(out)]) == 0
    capsys.readouterr()
    assert cli.main(["validate", "--out", str(out), "--runs", "3"]) == 0
    result = json.loads(capsys.readouterr().out)
    v = json.loads((out / "validation.json").read_text())
    assert v["kappa"]["taxonomy"] == 1.0 and v["kappa"]["display"] == 1.0
    assert v["runs"] == 3 and result["kappa"]["taxonomy"] == 1.0
    assert (out / "validation_per_topic.csv").read_text().startswith("topic,")


def test_second_pipeline_run_is_up_to_date_and_restartable(tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["pipeline", "--out", str(out)]) == 0
    capsys.readouterr()
    assert cli.main(["pipeline", "--out", str(out)]) == 0
    status = json.loads(capsys.readouterr().out)
    assert set(status.values()) == {"up-to-date"}
    before = digests(out)
    for name in REPORT_FILES:
        (out / name).unlink()
    assert cli.main(["pipeline", "--out", str(out)]) == 0
    status = json.loads(capsys.readouterr().out)
    assert [s for s, v in status.items() if v != "up-to-date"] == ["report"]
    assert digests(out) == before


def test_topics_chooses_k_near_five(tmp_path, capsys):
    corpus = tmp_path / "lda.jsonl"
    assert cli.main(["synth", "--kind", "lda", "--topics", "5", "--n", "300", "--seed", "3",
                     "--corpus-file", str(corpus)]) == 0
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"corpus": str(corpus),
                               "lda": {"alpha": 0.1, "beta": 0.01, "iterations": 300, "burn_in": 50}}))
    out = tmp_path / "o"
    for stage in ("ingest", "prep"):
        assert cli.main([stage, "--config", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    assert cli.main(["topics", "--config", str(cfg), "--out", str(out), "--k-range", "2..8"]) == 0
    K = json.loads(capsys.readouterr().out)["K"]
    assert 4 <= K <= 7
    assert json.loads((out / "topics.json").read_text())["K"] == K
    header = (out / "coherence.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "K"


def test_missing_upstream_is_actionable(tmp_path, capsys):
    code, out = run("report", "--out", tmp_path / "empty", capsys=capsys)
    assert code == 2
    assert "run `concernmine ingest` first" in out.err


def test_stale_upstream_refused_unless_allowed(tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["ingest", "--out", str(out)]) == 0
    assert cli.main(["prep", "--out", str(out)]) == 0
    capsys.readouterr()
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"min_df": 2}))
    code, res = run("topics", "--config", cfg, "--out", out, "--k-range", "2..3", capsys=capsys)
    assert code == 1 and "stale" in res.err.lower() and "--allow-stale" in res.err
    code, res = run("topics", "--config", cfg, "--out", out, "--k-range", "2..3", "--allow-stale",
                    capsys=capsys)
    assert code == 0


def test_manifest_records_hashes(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["ingest", "--out", str(out)]) == 0
    assert cli.main(["prep", "--out", str(out)]) == 0
    m = json.loads((out / "manifests" / "prep.json").read_text())
    cfg = PipelineConfig(output=str(out))
    assert m["config_hash"] == config_hash(cfg, "prep")
    assert set(m["outputs"]) == set(OUTPUTS["prep"]) and all(len(h) == 64 for h in m["outputs"].values())
    assert "ingest/posts.jsonl" in m["inputs"] and "created_utc" in m


def test_seed_changes_config_hash():
    assert config_hash(PipelineConfig(seed=1), "topics") != config_hash(PipelineConfig(seed=2), "topics")
    assert config_hash(PipelineConfig(seed=1), "ingest") == config_hash(PipelineConfig(seed=2), "ingest")


def exit_code(argv):
    try:
        return cli.main(argv)
    except SystemExit as e:  # argparse rejects before main returns
        return e.code


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["pipeline", "--k-range", "8..2"],
    ["pipeline", "--runs", "1"],
    ["pipeline", "--period", "week"],
    ["pipeline", "--seed", "-1"],
])
def test_usage_errors_exit_1(argv, tmp_path, capsys):
    assert exit_code(argv + ["--out", str(tmp_path)]) == 1


def test_config_rejects_secret_and_missing_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"backend": {"kind": "http_chat", "api_key": "sk-x"}}))
    code, res = run("config", "--config", cfg, capsys=capsys)
    assert code == 1 and "environment variable" in res.err
    cfg.write_text(json.dumps({"corpus": str(tmp_path / "nope.jsonl")}))
    assert run("config", "--config", cfg, capsys=capsys)[0] == 1
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run("config", "--config", cfg, capsys=capsys)[0] == 1


def test_data_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("definitely not json\n")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"corpus": str(bad)}))
    code, res = run("ingest", "--config", cfg, "--out", tmp_path / "o", capsys=capsys)
    assert code == 2


def test_backend_error_exit_3(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"backend": {"kind": "http_chat", "endpoint": "http://127.0.0.1:9/v1",
                                           "max_retries": 0, "timeout": 0.5}}))
    out = tmp_path / "o"
    assert cli.main(["ingest", "--out", str(out), "--config", str(cfg)]) == 0
    code, res = run("classify", "--config", cfg, "--out", out, capsys=capsys)
    assert code == 3 and "backend error" in res.err


def test_config_command_applies_flags(capsys):
    code, res = run("config", "--seed", "42", "--states", "ca,ny", "--period", "month", "--k-range", "3..9",
                    "--backend", "mock", capsys=capsys)
    d = json.loads(res.out)
    assert code == 0 and d["seed"] == 42 and d["states"] == ["CA", "NY"] and d["period"] == "month"
    assert d["k_range"] == [3, 9]


def test_parsers():
    assert parse_k_range("2..12") == (2, 12)
    assert parse_states("all") == () and parse_states("tx, fl") == ("FL", "TX")
    with pytest.raises(ConfigError):
        parse_k_range("2-12")
