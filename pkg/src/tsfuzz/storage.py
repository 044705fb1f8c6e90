"""Results-directory formats: versioned CSV tables plus JSON documents."""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

import numpy as np

from .campaign import CampaignResult, RunRow, severity_counts

SCHEMA_MAJOR = 1
SCHEMA_MINOR = 0

RUN_COLUMNS = ("scenario", "policy", "method", "trial", "seed", "total_vulns", "critical_count",
               "mean_severity", "evals_used")
RECORD_COLUMNS = ("run_id", "scenario", "policy", "method", "eval_index", "genome_hash", "window_index",
                  "kind", "severity", "measured_value", "threshold", "critical")
HISTORY_COLUMNS = ("scenario", "policy", "method", "trial", "generation", "best_cumulative_vulns",
                   "max_f1", "max_f2", "max_f3", "evals_used")
TRACE_COLUMNS = ("time", "ue", "cell", "sinr_db", "throughput_bps")

_HEADER = re.compile(r"^# tsfuzz-(?P<table>[a-z]+)/(?P<major>\d+)\.(?P<minor>\d+)$")


class SchemaError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "1" if v else "0"
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def write_table(path, table: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# tsfuzz-{table}/{SCHEMA_MAJOR}.{SCHEMA_MINOR}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue())


def read_table(path, table: str) -> list[dict]:
    """Rows as dicts of strings; rejects foreign tables and unknown major versions."""
    lines = Path(path).read_text().splitlines()
    m = _HEADER.match(lines[0]) if lines else None
    if m is None or m["table"] != table:
        raise SchemaError(f"{path}: missing tsfuzz-{table} header")
    if int(m["major"]) != SCHEMA_MAJOR:
        raise SchemaError(f"{path}: unsupported schema version {m['major']}.{m['minor']}")
    return list(csv.DictReader(lines[1:]))


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _row_dict(row: RunRow) -> dict:
    return {c: getattr(row, c) for c in RUN_COLUMNS}


def write_campaign(result: CampaignResult, out_dir, plan_doc: dict, report: dict) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "runs.csv", "runs", RUN_COLUMNS, [_row_dict(r) for r in result.rows])

    def records():
        for o in result.outcomes:
            for r in o.records:
                yield {
                    "run_id": r.run_id, "scenario": r.scenario, "policy": r.policy, "method": o.row.method,
                    "eval_index": r.eval_index, "genome_hash": r.genome_hash,
                    "window_index": r.window_index, "kind": r.kind.value, "severity": r.severity,
                    "measured_value": float(r.measured_value), "threshold": float(r.threshold),
                    "critical": bool(r.critical),
                }

    write_table(out / "records.csv", "records", RECORD_COLUMNS, records())

    def history():
        for o in result.outcomes:
            for h in o.history:
                yield {"scenario": o.row.scenario, "policy": o.row.policy, "method": o.row.method,
                       "trial": o.row.trial, **h}

    write_table(out / "history.csv", "history", HISTORY_COLUMNS, history())
    with open(out / "genomes.jsonl", "w") as fh:
        for o in result.outcomes:
            for e in o.evaluations:
                fh.write(json.dumps({"method": o.row.method, **e}, sort_keys=True) + "\n")
    write_json(out / "plan.json", plan_doc)
    write_json(out / "report.json", report)
    return out


def read_runs(path) -> list[RunRow]:
    rows = []
    for d in read_table(path, "runs"):
        rows.append(RunRow(
            scenario=d["scenario"], policy=d["policy"], method=d["method"], trial=int(d["trial"]),
            seed=int(d["seed"]), total_vulns=int(d["total_vulns"]), critical_count=int(d["critical_count"]),
            mean_severity=float(d["mean_severity"]), evals_used=int(d["evals_used"]),
        ))
    return rows


def read_severity_counts(path) -> np.ndarray:
    class _R:
        __slots__ = ("severity",)

    recs = []
    for d in read_table(path, "records"):
        r = _R()
        r.severity = int(d["severity"])
        recs.append(r)
    return severity_counts(recs)


def read_json(path):
    return json.loads(Path(path).read_text())


def find_genome(path, genome_hash: str | None = None, index: int = 0) -> dict:
    """A genome entry from a JSON document or a JSON-lines file.

    With ``genome_hash`` the first matching line is returned; otherwise line ``index``.
    """
    text = Path(path).read_text().strip()
    if not text:
        raise ValueError(f"{path}: empty genome file")
    try:
        entries = [json.loads(text)]
    except json.JSONDecodeError:
        entries = [json.loads(line) for line in text.splitlines() if line.strip()]
    if genome_hash is not None:
        for e in entries:
            if e.get("genome_hash") == genome_hash:
                return e
        raise KeyError(f"genome {genome_hash} not found in {path}")
    return entries[index]


def write_trace(path, trace: dict) -> None:
    """One row per (epoch, UE)."""
    t = np.asarray(trace["time"])
    serving = np.asarray(trace["serving"])
    sinr_db = 10.0 * np.log10(np.asarray(trace["sinr"]))
    thr = np.asarray(trace["throughput"])
    n = serving.shape[1]

    def rows():
        for k in range(t.size):
            for u in range(n):
                yield {"time": float(t[k]), "ue": u, "cell": int(serving[k, u]),
                       "sinr_db": float(sinr_db[k, u]), "throughput_bps": float(thr[k, u])}

    write_table(path, "trace", TRACE_COLUMNS, rows())
