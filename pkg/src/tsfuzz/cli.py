"""Command-line interface: ``tsfuzz run | compare | replay | plot-csv``."""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import storage
from .campaign import EvaluationError, Method, aggregate, run_campaign, summarize
from .config import ConfigError, build, load_document, plan_from_dict, plan_to_dict
from .genome import Genome
from .kpi import Thresholds
from .objectives import evaluate
from .policies import PolicyConfig, PolicyKind

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
COMPARE_SCHEMA = "compare_report.schema.json"


class UsageError(Exception):
    pass


def _split(values):
    if not values:
        return None
    out = []
    for v in values:
        out.extend(x for x in v.split(",") if x)
    return out


def load_schema(name: str = COMPARE_SCHEMA) -> dict:
    return json.loads((resources.files("tsfuzz") / "schemas" / name).read_text())


def cmd_run(args) -> int:
    doc = load_document(args.config) if args.config else {}
    overrides = {
        "scenarios": _split(args.scenario),
        "policies": _split(args.policy),
        "method": args.method,
        "trials": args.trials,
        "seed": args.seed,
        "jobs": args.jobs,
        "output_dir": args.out,
    }
    cfg = build(doc, overrides)
    out = cfg.output_dir
    results = {}
    for method in cfg.methods:
        plan = cfg.plan_for(method)
        target = out if len(cfg.methods) == 1 else out / method.value
        progress = None
        if not args.quiet:
            def progress(row, _m=method.value):
                print(f"[{_m}] {row.scenario}/{row.policy}/{row.trial}: "
                      f"{row.total_vulns} vulnerabilities, {row.critical_count} critical", file=sys.stderr)
        result = run_campaign(plan, jobs=cfg.jobs, progress=progress)
        report = {
            "schema": "tsfuzz-run/1",
            "method": method.value,
            "summary": summarize(result.rows, result.severity_counts),
        }
        storage.write_campaign(result, target, plan_to_dict(plan), report)
        results[method] = result
    if len(cfg.methods) == 2:
        ai, trad = results[Method.AI], results[Method.TRADITIONAL]
        report = compare_report(ai.rows, trad.rows, ai.severity_counts, trad.severity_counts,
                                plan_to_dict(cfg.plan))
        storage.write_json(out / "report.json", report)
        if not args.quiet:
            print(format_table(report))
    print(out)
    return EXIT_OK


def compare_report(ai_rows, trad_rows, ai_sev, trad_sev, plan_doc) -> dict:
    plan_doc = {k: v for k, v in plan_doc.items() if k != "method"}
    return {"schema": "tsfuzz-compare/1", "plan": plan_doc,
            **aggregate(ai_rows, trad_rows, ai_sev, trad_sev)}


def _load_dir(d):
    d = Path(d)
    try:
        plan = storage.read_json(d / "plan.json")
        rows = storage.read_runs(d / "runs.csv")
        sev = storage.read_severity_counts(d / "records.csv")
    except (OSError, ValueError) as exc:
        raise UsageError(f"{d}: {exc}") from exc
    return plan, rows, sev


def cmd_compare(args) -> int:
    plan_a, rows_a, sev_a = _load_dir(args.ai_dir)
    plan_t, rows_t, sev_t = _load_dir(args.traditional_dir)
    strip = lambda p: {k: v for k, v in p.items() if k != "method"}
    if strip(plan_a) != strip(plan_t):
        raise UsageError("the two result directories come from different plans")
    try:
        report = compare_report(rows_a, rows_t, sev_a, sev_t, plan_a)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        storage.write_json(args.out, report)
    print(format_table(report))
    return EXIT_OK


def _num(v, fmt="{:.3f}"):
    return "n/a" if v is None else fmt.format(v)


def format_table(report: dict) -> str:
    ai, tr = report["ai"], report["traditional"]
    imp = report["improvement_rate"]
    wt = report["welch_t_vulns"]
    mw = report["mann_whitney_critical"]
    lines = [
        ("Metric", "AI fuzzing", "Traditional"),
        ("Total vulnerabilities", f"{ai['total_vulns']:,}", f"{tr['total_vulns']:,}"),
        ("Vulnerabilities per run", f"{ai['vulns_per_run_mean']:.2f} ± {ai['vulns_per_run_sd']:.2f}",
         f"{tr['vulns_per_run_mean']:.2f} ± {tr['vulns_per_run_sd']:.2f}"),
        ("Critical failures", f"{ai['critical_total']:,}", f"{tr['critical_total']:,}"),
        ("Critical per run", f"{ai['critical_per_run_mean']:.2f} ± {ai['critical_per_run_sd']:.2f}",
         f"{tr['critical_per_run_mean']:.2f} ± {tr['critical_per_run_sd']:.2f}"),
        ("Average severity", f"{ai['mean_severity']:.2f}", f"{tr['mean_severity']:.2f}"),
        ("Shannon diversity", f"{ai['shannon_diversity']:.3f}", f"{tr['shannon_diversity']:.3f}"),
        ("Improvement rate", _num(None if imp is None else 100 * imp, "{:+.1f}%"), ""),
        ("Welch t (vulnerabilities)", _num(wt and wt["statistic"]), f"p = {_num(wt and wt['p_value'], '{:.4g}')}"),
        ("Mann-Whitney U (critical)", _num(mw["statistic"], "{:.1f}"), f"p = {_num(mw['p_value'], '{:.4g}')}"),
        ("Cohen's d (vulnerabilities)", _num(report["cohens_d_vulns"]), ""),
    ]
    w0 = max(len(r[0]) for r in lines)
    w1 = max(len(r[1]) for r in lines)
    # per-method rows are right-aligned; the last four rows carry p-values instead
    head, tail = lines[:-4], lines[-4:]
    w2 = max(len(r[2]) for r in head)
    out = [f"{a:<{w0}}  {b:>{w1}}  {c:>{w2}}" for a, b, c in head]
    out += [f"{a:<{w0}}  {b:>{w1}}  {c}".rstrip() for a, b, c in tail]
    return "\n".join(out)


def cmd_replay(args) -> int:
    path = Path(args.genome)
    try:
        entry = storage.find_genome(path, args.hash, args.index)
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    genome_doc = entry.get("genome", entry)
    plan_path = Path(args.plan) if args.plan else path.parent / "plan.json"
    network, thresholds, policy = None, Thresholds(), PolicyConfig()
    if plan_path.is_file():
        plan = plan_from_dict(storage.read_json(plan_path))
        network, thresholds, policy = plan.network, plan.thresholds, plan.policy
    elif args.plan:
        raise UsageError(f"plan file not found: {plan_path}")
    try:
        genome = Genome.from_dict(genome_doc, network)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"invalid genome: {exc}") from exc
    if args.scenario and args.scenario != genome.scenario.kind:
        raise UsageError(f"genome belongs to scenario {genome.scenario.kind}, not {args.scenario}")
    if not genome.in_bounds():
        raise UsageError("genome violates its scenario bounds")
    kind = args.policy or entry.get("policy") or _policy_from_run(entry)
    if kind is None:
        raise UsageError("--policy is required for this genome file")
    seed = args.seed if args.seed is not None else entry.get("seed")
    if seed is None:
        raise UsageError("--seed is required for this genome file")
    policy = replace(policy, kind=PolicyKind(kind))
    res = evaluate(genome, policy, int(seed), thresholds, trace=bool(args.trace))
    doc = res.to_dict()
    doc["policy"] = policy.kind.value
    doc["scenario"] = genome.scenario.kind
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.trace:
        storage.write_trace(args.trace, res.trace)
    return EXIT_OK


def _policy_from_run(entry):
    run_id = entry.get("run_id")
    return run_id.split("/")[1] if run_id and run_id.count("/") == 2 else None


def cmd_plot_csv(args) -> int:
    """Plot-ready tables: mean convergence per generation, or totals per cell."""
    d = Path(args.results)
    if args.what == "history":
        rows = storage.read_table(d / "history.csv", "history")
        acc = defaultdict(list)
        for r in rows:
            acc[(r["method"], int(r["generation"]))].append(
                (float(r["best_cumulative_vulns"]), int(r["evals_used"])))
        out = [{"method": m, "generation": g,
                "mean_best_cumulative_vulns": float(np.mean([v for v, _ in vals])),
                "evals_used": int(np.max([e for _, e in vals])), "n_runs": len(vals)}
               for (m, g), vals in sorted(acc.items())]
        cols = ("method", "generation", "mean_best_cumulative_vulns", "evals_used", "n_runs")
    else:
        rows = storage.read_runs(d / "runs.csv")
        acc = defaultdict(list)
        for r in rows:
            acc[(r.scenario, r.policy, r.method)].append(r)
        out = [{"scenario": s, "policy": p, "method": m, "total_vulns": sum(r.total_vulns for r in rs),
                "critical_count": sum(r.critical_count for r in rs), "n_runs": len(rs)}
               for (s, p, m), rs in sorted(acc.items())]
        cols = ("scenario", "policy", "method", "total_vulns", "critical_count", "n_runs")
    storage.write_table(args.out, f"plot{args.what}", cols, out)
    print(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsfuzz", description="Fuzz traffic-steering policies with NSGA-II.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a campaign")
    r.add_argument("--config", help="YAML campaign configuration")
    r.add_argument("--scenario", action="append", help="scenario name(s); repeat or comma-separate")
    r.add_argument("--policy", action="append", help="policy name(s); repeat or comma-separate")
    r.add_argument("--method", choices=["ai", "traditional", "both"])
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=int)
    r.add_argument("--out", help="results directory (default: $TSFUZZ_OUTPUT_DIR or ./tsfuzz-results)")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="compare an AI and a traditional results directory")
    c.add_argument("ai_dir")
    c.add_argument("traditional_dir")
    c.add_argument("--out", help="write the JSON report here")
    c.set_defaults(func=cmd_compare)

    rp = sub.add_parser("replay", help="re-run one evaluation")
    rp.add_argument("genome", help="genome JSON or a genomes.jsonl file")
    rp.add_argument("--hash", help="pick the entry with this genome hash")
    rp.add_argument("--index", type=int, default=0, help="pick this line of a JSON-lines file")
    rp.add_argument("--scenario")
    rp.add_argument("--policy", choices=[k.value for k in PolicyKind])
    rp.add_argument("--seed", type=int)
    rp.add_argument("--plan", help="plan.json giving network, thresholds and policy parameters")
    rp.add_argument("--trace", help="write the per-epoch trace CSV here")
    rp.add_argument("--out", help="write the evaluation JSON here instead of stdout")
    rp.set_defaults(func=cmd_replay)

    pc = sub.add_parser("plot-csv", help="emit plot-ready CSV from a results directory")
    pc.add_argument("results")
    pc.add_argument("--what", choices=["history", "runs"], default="history")
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_plot_csv)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UsageError, storage.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvaluationError as exc:
        print(f"evaluation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
