import csv
import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest
import yaml

from tsfuzz import cli, storage
from tsfuzz.campaign import RunRow
from tsfuzz.config import ConfigError, build
from tsfuzz.stats import cohens_d

SMALL = """
network: {n_ues: 6, epochs_per_window: 10, n_windows: 3}
ga: {mu: 4, generations: 1}
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return str(p)


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows_of(path):
    return storage.read_runs(path)


def test_run_writes_results(cfg, tmp_path):
    out = tmp_path / "r"
    assert run("run", "--config", cfg, "--scenario", "coverage_hole", "--policy", "a3", "--method", "ai",
               "--trials", 2, "--seed", 7, "--out", out, "--quiet") == 0
    for name in ("runs.csv", "records.csv", "history.csv", "report.json", "plan.json", "genomes.jsonl"):
        assert (out / name).is_file()
    rows = rows_of(out / "runs.csv")
    assert len(rows) == 2 and {r.method for r in rows} == {"ai"}
    header = (out / "runs.csv").read_text().splitlines()[:2]
    assert header == ["# tsfuzz-runs/1.0",
                      "scenario,policy,method,trial,seed,total_vulns,critical_count,mean_severity,evals_used"]
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["total_vulns"] == sum(r.total_vulns for r in rows)


def test_run_is_byte_identical(cfg, tmp_path):
    args = ["run", "--config", cfg, "--scenario", "coverage_hole", "--policy", "utility", "--trials", 2,
            "--seed", 7, "--quiet"]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b", "--jobs", 2) == 0
    for m in ("ai", "traditional"):
        assert (tmp_path / "a" / m / "runs.csv").read_bytes() == (tmp_path / "b" / m / "runs.csv").read_bytes()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_config_errors(tmp_path, capsys):
    assert run("run", "--config", tmp_path / "missing.yaml") == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("ga: {mu: 5}\n")
    assert run("run", "--config", bad) == 2
    assert "ga:" in capsys.readouterr().err
    bad.write_text("network: {n_uess: 5}\n")
    assert run("run", "--config", bad) == 2
    assert "network.n_uess" in capsys.readouterr().err
    bad.write_text("thresholds: {qoe: fast}\n")
    assert run("run", "--config", bad) == 2
    assert "thresholds.qoe" in capsys.readouterr().err
    assert run("run", "--scenario", "nowhere") == 2
    assert run("bogus") == 2


def test_empty_config_has_full_defaults(monkeypatch):
    monkeypatch.delenv("TSFUZZ_OUTPUT_DIR", raising=False)
    c = build({})
    assert len(c.plan.scenarios) == 6 and len(c.plan.policies) == 5
    assert c.plan.network.isd == 100.0 and c.plan.network.radio.bandwidth == 13.68e6
    assert c.plan.policy.a3_hysteresis == 3.0 and c.plan.thresholds.qoe == 10e6
    assert str(c.output_dir) == "tsfuzz-results"
    monkeypatch.setenv("TSFUZZ_OUTPUT_DIR", "/tmp/elsewhere")
    assert str(build({}).output_dir) == "/tmp/elsewhere"
    assert str(build({}, {"output_dir": "x"}).output_dir) == "x"
    with pytest.raises(ConfigError):
        build({"trials": 0})


def test_compare_with_itself(cfg, tmp_path, capsys):
    out = tmp_path / "r"
    assert run("run", "--config", cfg, "--scenario", "stable_mobility", "--policy", "random", "--trials", 3,
               "--out", out, "--quiet", "--method", "ai") == 0
    capsys.readouterr()
    assert run("compare", out, out, "--out", tmp_path / "c.json") == 0
    text = capsys.readouterr().out
    assert "+0.0%" in text
    report = json.loads((tmp_path / "c.json").read_text())
    assert report["improvement_rate"] == 0.0
    assert report["welch_t_vulns"]["p_value"] == 1.0 and report["mann_whitney_critical"]["p_value"] == 1.0
    jsonschema.validate(report, cli.load_schema())


def test_compare_both_methods_validates(cfg, tmp_path):
    out = tmp_path / "r"
    assert run("run", "--config", cfg, "--scenario", "coverage_hole", "--policy", "a3", "--trials", 2,
               "--out", out, "--quiet") == 0
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, cli.load_schema())
    assert report["ai"]["evals_used"] == report["traditional"]["evals_used"] == 2 * 8


def _fixture_dir(d, method, totals):
    d.mkdir()
    rows = [RunRow("s", "p", method, t, t, v, 0, 2.0, 8) for t, v in enumerate(totals)]
    storage.write_table(d / "runs.csv", "runs", storage.RUN_COLUMNS, [r.__dict__ for r in rows])
    storage.write_table(d / "records.csv", "records", storage.RECORD_COLUMNS, [
        {"run_id": "s/p/0", "scenario": "s", "policy": "p", "method": method, "eval_index": 0,
         "genome_hash": "x", "window_index": 0, "kind": "qoe", "severity": 2, "measured_value": 1.0,
         "threshold": 2.0, "critical": False}])
    storage.write_json(d / "plan.json", {"seed": 1, "method": method})


def test_compare_prints_cohens_d(tmp_path, capsys):
    ai, tr = [30, 34, 28, 40, 33], [20, 25, 21, 30, 22]
    _fixture_dir(tmp_path / "a", "ai", ai)
    _fixture_dir(tmp_path / "t", "traditional", tr)
    assert run("compare", tmp_path / "a", tmp_path / "t") == 0
    text = capsys.readouterr().out
    assert f"{cohens_d(ai, tr):.3f}" in text


def test_compare_plan_mismatch(tmp_path):
    _fixture_dir(tmp_path / "a", "ai", [1, 2])
    _fixture_dir(tmp_path / "t", "traditional", [1, 2])
    storage.write_json(tmp_path / "t" / "plan.json", {"seed": 2, "method": "traditional"})
    assert run("compare", tmp_path / "a", tmp_path / "t") == 2


def test_csv_version_gate(tmp_path):
    p = tmp_path / "runs.csv"
    p.write_text("# tsfuzz-runs/2.0\nscenario\n")
    with pytest.raises(storage.SchemaError):
        storage.read_runs(p)
    p.write_text("# tsfuzz-runs/1.7\n" + ",".join(storage.RUN_COLUMNS) + "\n")
    assert storage.read_runs(p) == []
    p.write_text("scenario\n")
    with pytest.raises(storage.SchemaError):
        storage.read_runs(p)


def test_replay_reproduces_a_recorded_vulnerability(cfg, tmp_path):
    out = tmp_path / "r"
    assert run("run", "--config", cfg, "--scenario", "high_interference", "--policy", "qlearning",
               "--method", "ai", "--trials", 1, "--out", out, "--quiet") == 0
    rec = next(iter(storage.read_table(out / "records.csv", "records")))
    entry = storage.find_genome(out / "genomes.jsonl", rec["genome_hash"])
    trace = tmp_path / "trace.csv"
    assert run("replay", out / "genomes.jsonl", "--hash", rec["genome_hash"], "--out", tmp_path / "e.json",
               "--trace", trace) == 0
    res = json.loads((tmp_path / "e.json").read_text())
    assert [res["objectives"][k] for k in ("f1", "f2", "f3")] == entry["objectives"]
    assert len(res["records"]) == entry["n_vulns"]
    lines = trace.read_text().splitlines()
    assert lines[1] == "time,ue,cell,sinr_db,throughput_bps"
    assert len(lines) - 2 == 6 * 30
    # a different seed is allowed to differ
    assert run("replay", out / "genomes.jsonl", "--hash", rec["genome_hash"], "--seed", 1,
               "--out", tmp_path / "f.json") == 0


def test_replay_rejects_out_of_bounds_genome(cfg, tmp_path):
    out = tmp_path / "r"
    assert run("run", "--config", cfg, "--scenario", "coverage_hole", "--policy", "a3", "--method", "ai",
               "--trials", 1, "--out", out, "--quiet") == 0
    entry = storage.find_genome(out / "genomes.jsonl")
    entry["genome"]["values"][-1] = 50.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(entry))
    assert run("replay", bad, "--plan", out / "plan.json") == 2


def test_evaluation_failure_exits_1(cfg, tmp_path, monkeypatch):
    import tsfuzz.campaign as campaign

    def broken(*a, **k):
        raise RuntimeError("solver diverged")

    monkeypatch.setattr(campaign, "evaluate", broken)
    assert run("run", "--config", cfg, "--scenario", "coverage_hole", "--policy", "a3", "--method", "ai",
               "--trials", 1, "--out", tmp_path / "r", "--quiet") == 1


def test_plot_csv(cfg, tmp_path):
    out = tmp_path / "r"
    assert run("run", "--config", cfg, "--scenario", "coverage_hole", "--policy", "a3", "--method", "ai",
               "--trials", 2, "--out", out, "--quiet") == 0
    assert run("plot-csv", out, "--out", tmp_path / "h.csv") == 0
    rows = storage.read_table(tmp_path / "h.csv", "plothistory")
    assert [int(r["generation"]) for r in rows] == [0, 1]
    assert run("plot-csv", out, "--what", "runs", "--out", tmp_path / "t.csv") == 0
    (cell,) = storage.read_table(tmp_path / "t.csv", "plotruns")
    assert int(cell["total_vulns"]) == sum(r.total_vulns for r in rows_of(out / "runs.csv"))


def test_unsigned_exponent_is_a_number(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("radio: {bandwidth: 13.68e6}\n")
    assert build(yaml.safe_load(p.read_text())).plan.network.radio.bandwidth == 13.68e6
