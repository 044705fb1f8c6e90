"""Experiment orchestration: AI fuzzing and traditional testing runs, and their comparison."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .genome import Genome, Scenario, ScenarioKind, scenario_spec
from .kpi import Thresholds
from .netstate import NetworkConfig
from .nsga2 import STREAM_EVALUATION, EvaluationError, GaConfig, evolve
from .objectives import evaluate
from .policies import PolicyConfig, PolicyKind
from .seeds import derive_seed
from . import stats

SEVERITY_LEVELS = (1, 2, 3, 4, 5)
# sub-stream of a traditional run seed that orders the grid
STREAM_GRID = 2


class Method(str, Enum):
    AI = "ai"
    TRADITIONAL = "traditional"


@dataclass(frozen=True)
class CampaignPlan:
    scenarios: tuple = tuple(ScenarioKind)
    policies: tuple = tuple(PolicyKind)
    trials_per_cell: int = 10
    method: Method = Method.AI
    ga: GaConfig = GaConfig()
    seed: int = 0
    network: NetworkConfig = NetworkConfig()
    thresholds: Thresholds = Thresholds()
    policy: PolicyConfig = PolicyConfig()

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(ScenarioKind(s) for s in self.scenarios))
        object.__setattr__(self, "policies", tuple(PolicyKind(p) for p in self.policies))
        object.__setattr__(self, "method", Method(self.method))
        if not self.scenarios or not self.policies:
            raise ValueError("plan needs at least one scenario and one policy")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")

    @property
    def n_runs(self) -> int:
        return len(self.scenarios) * len(self.policies) * self.trials_per_cell

    @property
    def budget(self) -> int:
        return self.ga.budget

    def jobs(self) -> list[RunSpec]:
        out = []
        for sc in self.scenarios:
            for pol in self.policies:
                for trial in range(self.trials_per_cell):
                    seed = run_seed(self.seed, sc, pol, trial)
                    out.append(RunSpec(sc, pol, trial, seed))
        return out

    def comparable(self, other: CampaignPlan) -> bool:
        """Same experiment apart from the method."""
        return replace(self, method=Method.AI) == replace(other, method=Method.AI)


@dataclass(frozen=True)
class RunSpec:
    scenario: ScenarioKind
    policy: PolicyKind
    trial: int
    seed: int

    @property
    def run_id(self) -> str:
        return f"{self.scenario.value}/{self.policy.value}/{self.trial}"


def run_seed(master: int, scenario, policy, trial: int) -> int:
    """Seed shared by the AI and traditional runs of one (scenario, policy, trial) cell."""
    return derive_seed(master, list(ScenarioKind).index(ScenarioKind(scenario)),
                       PolicyKind(policy).code, trial)


@dataclass(frozen=True)
class RunRow:
    scenario: str
    policy: str
    method: str
    trial: int
    seed: int
    total_vulns: int
    critical_count: int
    mean_severity: float
    evals_used: int


@dataclass
class RunOutcome:
    row: RunRow
    records: list
    history: list[dict]
    evaluations: list[dict] = field(default_factory=list)

    @property
    def severity_counts(self) -> np.ndarray:
        return severity_counts(self.records)


def severity_counts(records) -> np.ndarray:
    counts = np.zeros(len(SEVERITY_LEVELS), dtype=np.int64)
    for r in records:
        counts[int(r.severity) - 1] += 1
    return counts


def _row(spec: RunSpec, method: Method, records, evals_used: int) -> RunRow:
    sev = [r.severity for r in records]
    return RunRow(
        scenario=spec.scenario.value,
        policy=spec.policy.value,
        method=method.value,
        trial=spec.trial,
        seed=spec.seed,
        total_vulns=len(records),
        critical_count=sum(bool(r.critical) for r in records),
        mean_severity=float(np.mean(sev)) if sev else 0.0,
        evals_used=evals_used,
    )


def _evaluation_entry(spec, eval_index, seed, genome, result):
    return {
        "run_id": spec.run_id,
        "eval_index": eval_index,
        "seed": int(seed),
        "genome_hash": genome.hash,
        "objectives": list(result.objectives),
        "n_vulns": result.n_vulns,
        "genome": genome.to_dict(),
    }


def run_ai_fuzzing(scenario: Scenario, policy: PolicyConfig, ga: GaConfig, seed: int,
                   thresholds: Thresholds | None = None, spec: RunSpec | None = None) -> RunOutcome:
    """One NSGA-II run; every record from every evaluation counts toward the run."""
    thresholds = thresholds or Thresholds()
    spec = spec or RunSpec(ScenarioKind(scenario.kind), policy.kind, 0, seed)
    records, entries = [], []

    def evaluator(genome, eval_seed, eval_index):
        res = evaluate(genome, policy, eval_seed, thresholds, run_id=spec.run_id, eval_index=eval_index)
        records.extend(res.records)
        entries.append(_evaluation_entry(spec, eval_index, eval_seed, genome, res))
        return res

    evo = evolve(scenario, evaluator, ga, seed)
    return RunOutcome(_row(spec, Method.AI, records, len(entries)), records, evo.history, entries)


def traditional_genomes(scenario: Scenario, budget: int, seed: int) -> list[Genome]:
    """Centred Latin-hypercube grid over the free genes.

    Each free gene takes every stratum midpoint ``(i + 0.5) / budget`` of its
    range exactly once; the pairing of strata across genes is a seeded
    permutation per gene. Budget 1 yields the bounds midpoint.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, STREAM_GRID))
    free = np.flatnonzero(scenario.free)
    strata = (np.arange(budget) + 0.5) / budget
    unit = np.empty((budget, free.size))
    for j in range(free.size):
        unit[:, j] = strata[rng.permutation(budget)]
    out = []
    span = scenario.upper - scenario.lower
    for k in range(budget):
        v = scenario.lower.copy()
        v[free] = scenario.lower[free] + unit[k] * span[free]
        out.append(Genome(np.clip(v, scenario.lower, scenario.upper), scenario))
    return out


def run_traditional(scenario: Scenario, policy: PolicyConfig, budget: int, seed: int,
                    thresholds: Thresholds | None = None, spec: RunSpec | None = None,
                    block: int | None = None, evaluator=None) -> RunOutcome:
    """Feedback-free evaluation of a fixed grid of ``budget`` genomes.

    History rows group evaluations into blocks of ``block`` (default: the
    whole budget) so they line up with the generations of a paired fuzzing run.
    """
    thresholds = thresholds or Thresholds()
    spec = spec or RunSpec(ScenarioKind(scenario.kind), policy.kind, 0, seed)
    block = block or budget
    records, entries, history = [], [], []
    best = 0
    max_f = np.full(3, -np.inf)
    genomes = traditional_genomes(scenario, budget, seed)
    for i, g in enumerate(genomes):
        eval_seed = derive_seed(seed, STREAM_EVALUATION, i)
        try:
            if evaluator is None:
                res = evaluate(g, policy, eval_seed, thresholds, run_id=spec.run_id, eval_index=i)
            else:
                res = evaluator(g, eval_seed, i)
        except Exception as exc:
            raise EvaluationError(f"evaluation {i} (genome {g.hash}) failed: {exc}") from exc
        records.extend(res.records)
        entries.append(_evaluation_entry(spec, i, eval_seed, g, res))
        best = max(best, len(res.records))
        max_f = np.maximum(max_f, res.objectives)
        if (i + 1) % block == 0 or i + 1 == budget:
            history.append({
                "generation": len(history),
                "best_cumulative_vulns": best,
                "max_f1": float(max_f[0]),
                "max_f2": float(max_f[1]),
                "max_f3": float(max_f[2]),
                "evals_used": i + 1,
            })
    return RunOutcome(_row(spec, Method.TRADITIONAL, records, budget), records, history, entries)


def execute(plan: CampaignPlan, spec: RunSpec) -> RunOutcome:
    """Run one cell of the plan."""
    scenario = scenario_spec(spec.scenario, plan.network)
    policy = replace(plan.policy, kind=spec.policy)
    if plan.method is Method.AI:
        return run_ai_fuzzing(scenario, policy, plan.ga, spec.seed, plan.thresholds, spec)
    return run_traditional(scenario, policy, plan.budget, spec.seed, plan.thresholds, spec,
                           block=plan.ga.mu)


def _execute_packed(args):
    return execute(*args)


@dataclass
class CampaignResult:
    plan: CampaignPlan
    outcomes: list[RunOutcome]

    @property
    def rows(self) -> list[RunRow]:
        return [o.row for o in self.outcomes]

    @property
    def severity_counts(self) -> np.ndarray:
        return sum((o.severity_counts for o in self.outcomes), np.zeros(len(SEVERITY_LEVELS), dtype=np.int64))


def run_campaign(plan: CampaignPlan, jobs: int = 1, progress=None) -> CampaignResult:
    """Execute every run of ``plan``; outcomes come back in plan order for any ``jobs``."""
    specs = plan.jobs()
    outcomes = []
    if jobs <= 1:
        for spec in specs:
            outcomes.append(execute(plan, spec))
            if progress:
                progress(outcomes[-1].row)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_execute_packed, [(plan, s) for s in specs]):
                outcomes.append(out)
                if progress:
                    progress(out.row)
    return CampaignResult(plan, outcomes)


def summarize(rows, sev_counts) -> dict:
    """Per-method aggregates over run rows and the method's severity histogram."""
    vulns = np.array([r.total_vulns for r in rows], dtype=float)
    crit = np.array([r.critical_count for r in rows], dtype=float)
    sev_counts = np.asarray(sev_counts, dtype=np.int64)
    n = len(rows)
    out = {
        "n_runs": n,
        "total_vulns": int(vulns.sum()),
        "critical_total": int(crit.sum()),
        "vulns_per_run_mean": float(vulns.mean()) if n else 0.0,
        "vulns_per_run_sd": float(vulns.std(ddof=1)) if n > 1 else 0.0,
        "critical_per_run_mean": float(crit.mean()) if n else 0.0,
        "critical_per_run_sd": float(crit.std(ddof=1)) if n > 1 else 0.0,
        "mean_severity": (float(np.dot(sev_counts, SEVERITY_LEVELS) / sev_counts.sum())
                          if sev_counts.sum() else 0.0),
        "severity_counts": [int(c) for c in sev_counts],
        "shannon_diversity": stats.shannon_diversity(sev_counts) if sev_counts.sum() else 0.0,
        "vulns_ci95": list(stats.mean_ci95(vulns)) if n > 1 else None,
        "critical_ci95": list(stats.mean_ci95(crit)) if n > 1 else None,
        "evals_used": int(sum(r.evals_used for r in rows)),
    }
    return out


def _test(fn, x, y):
    """Test result as a dict; degenerate samples give a finite, documented fallback."""
    try:
        res = fn(x, y)
        return {"statistic": res.statistic, "p_value": res.p_value, "n1": res.n1, "n2": res.n2}
    except ValueError:
        same = float(np.mean(x)) == float(np.mean(y))
        stat = 0.0 if same else math.copysign(math.inf, np.mean(x) - np.mean(y))
        return {"statistic": stat, "p_value": 1.0 if same else 0.0, "n1": len(x), "n2": len(y)}


def aggregate(ai_rows, trad_rows, ai_severity, trad_severity) -> dict:
    """Paired AI-vs-traditional comparison; every figure derives from the inputs."""
    ai_rows, trad_rows = list(ai_rows), list(trad_rows)
    key = lambda r: (r.scenario, r.policy, r.trial, r.seed)
    if sorted(map(key, ai_rows)) != sorted(map(key, trad_rows)):
        raise ValueError("campaigns do not share a plan")
    # canonical order makes the result independent of row order
    ai_rows.sort(key=key)
    trad_rows.sort(key=key)
    ai = summarize(ai_rows, ai_severity)
    trad = summarize(trad_rows, trad_severity)
    va = [r.total_vulns for r in ai_rows]
    vt = [r.total_vulns for r in trad_rows]
    ca = [r.critical_count for r in ai_rows]
    ct = [r.critical_count for r in trad_rows]
    improvement = ((ai["total_vulns"] - trad["total_vulns"]) / trad["total_vulns"]
                   if trad["total_vulns"] else None)
    try:
        d = stats.cohens_d(va, vt) if len(va) > 1 else None
    except ValueError:
        d = 0.0 if np.mean(va) == np.mean(vt) else None
    return {
        "ai": ai,
        "traditional": trad,
        "improvement_rate": improvement,
        "welch_t_vulns": _test(stats.welch_t, va, vt) if len(va) > 1 else None,
        "mann_whitney_vulns": _test(stats.mann_whitney_u, va, vt),
        "welch_t_critical": _test(stats.welch_t, ca, ct) if len(ca) > 1 else None,
        "mann_whitney_critical": _test(stats.mann_whitney_u, ca, ct),
        "cohens_d_vulns": d,
    }
