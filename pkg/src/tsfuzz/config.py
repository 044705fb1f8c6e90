"""Campaign configuration documents: defaults, validation and plan conversion."""

from __future__ import annotations

import dataclasses
import os
from pathlib import Path

import yaml

from .campaign import CampaignPlan, Method
from .channel import RadioParams
from .genome import ScenarioKind
from .kpi import Thresholds
from .netstate import NetworkConfig
from .nsga2 import GaConfig
from .policies import PolicyConfig, PolicyKind

OUTPUT_DIR_ENV = "TSFUZZ_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "tsfuzz-results"

# desk-scale defaults: an empty document runs every scenario and policy quickly
DEFAULTS = {
    "scenarios": [s.value for s in ScenarioKind],
    "policies": [p.value for p in PolicyKind],
    "method": "both",
    "trials": 2,
    "seed": 0,
    "jobs": 1,
    "output_dir": None,
    "network": {"n_ues": 20},
    "ga": {"mu": 12, "generations": 10},
}

SECTIONS = {
    "network": NetworkConfig,
    "radio": RadioParams,
    "ga": GaConfig,
    "thresholds": Thresholds,
    "policy": PolicyConfig,
}
TOP_LEVEL = {"scenarios", "policies", "method", "trials", "seed", "jobs", "output_dir", *SECTIONS}
METHODS = ("ai", "traditional", "both")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        # YAML 1.1 loads exponents without a sign (13.68e6) as strings
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{path}: expected a list of {len(default)} values, got {value!r}")
        return tuple(_coerce(v, d, f"{path}[{i}]") for i, (v, d) in enumerate(zip(value, default)))
    return value


def _build(cls, doc, path, **extra):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, value in doc.items():
        if key not in fields or key in extra:
            raise ConfigError(f"{path}.{key}: unknown field")
        default = getattr(defaults, key)
        if key == "n_max":
            if value is not None:
                value = _coerce(value, 0, f"{path}.{key}")
        elif key == "kind":
            value = _choice(value, [k.value for k in PolicyKind], f"{path}.{key}")
        else:
            value = _coerce(value, default, f"{path}.{key}")
        kwargs[key] = value
    try:
        return cls(**kwargs, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _choice(value, allowed, path):
    if value not in allowed:
        raise ConfigError(f"{path}: {value!r} is not one of {', '.join(allowed)}")
    return value


def _choices(values, allowed, path):
    if isinstance(values, str):
        values = [values]
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{path}: expected a non-empty list")
    return [_choice(v, allowed, f"{path}[{i}]") for i, v in enumerate(values)]


@dataclasses.dataclass(frozen=True)
class RunConfig:
    plan: CampaignPlan
    methods: tuple[Method, ...]
    jobs: int
    output_dir: Path

    def plan_for(self, method: Method) -> CampaignPlan:
        return dataclasses.replace(self.plan, method=method)


def merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def load_document(path) -> dict:
    """Parse a YAML config file; a missing or malformed file is a ConfigError."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: not valid YAML ({exc})") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return doc


def build(doc: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file document, then flag overrides."""
    doc = merge(merge(DEFAULTS, doc or {}), {k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(doc) - TOP_LEVEL
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
    radio = _build(RadioParams, doc.get("radio"), "radio")
    network = _build(NetworkConfig, doc.get("network"), "network", radio=radio)
    ga = _build(GaConfig, doc.get("ga"), "ga")
    thresholds = _build(Thresholds, doc.get("thresholds"), "thresholds")
    policy = _build(PolicyConfig, doc.get("policy"), "policy")
    scenarios = _choices(doc["scenarios"], [s.value for s in ScenarioKind], "scenarios")
    policies = _choices(doc["policies"], [p.value for p in PolicyKind], "policies")
    method = _choice(doc["method"], list(METHODS), "method")
    trials = _coerce(doc["trials"], 0, "trials")
    seed = _coerce(doc["seed"], 0, "seed")
    jobs = _coerce(doc["jobs"], 0, "jobs")
    if trials < 1:
        raise ConfigError("trials: must be >= 1")
    if seed < 0:
        raise ConfigError("seed: must be >= 0")
    if jobs < 1:
        raise ConfigError("jobs: must be >= 1")
    out = doc.get("output_dir") or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR
    methods = (Method.AI, Method.TRADITIONAL) if method == "both" else (Method(method),)
    plan = CampaignPlan(scenarios=tuple(scenarios), policies=tuple(policies), trials_per_cell=trials,
                        method=methods[0], ga=ga, seed=seed, network=network, thresholds=thresholds,
                        policy=policy)
    return RunConfig(plan=plan, methods=methods, jobs=jobs, output_dir=Path(out))


def _section(obj, skip=()) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        if f.name in skip:
            continue
        v = getattr(obj, f.name)
        if isinstance(v, tuple):
            v = list(v)
        elif hasattr(v, "value"):
            v = v.value
        out[f.name] = v
    return out


def plan_to_dict(plan: CampaignPlan) -> dict:
    """JSON-ready plan; :func:`plan_from_dict` inverts it."""
    return {
        "scenarios": [s.value for s in plan.scenarios],
        "policies": [p.value for p in plan.policies],
        "method": plan.method.value,
        "trials": plan.trials_per_cell,
        "seed": plan.seed,
        "network": _section(plan.network, skip=("radio",)),
        "radio": _section(plan.network.radio),
        "ga": _section(plan.ga),
        "thresholds": _section(plan.thresholds),
        "policy": _section(plan.policy, skip=("kind",)),
    }


def plan_from_dict(doc: dict) -> CampaignPlan:
    doc = dict(doc)
    method = doc.pop("method")
    cfg = build(doc, {"method": method})
    return cfg.plan_for(Method(method))
