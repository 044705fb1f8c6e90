"""Window KPIs, threshold classification and severity scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class VulnKind(str, Enum):
    STABILITY = "stability"
    QOE = "qoe"
    FAIRNESS = "fairness"


@dataclass(frozen=True)
class Thresholds:
    """Failure thresholds: QoE in bit/s, fairness as Jain index, stability in HO/UE/min."""

    qoe: float = 10e6
    fairness: float = 0.7
    stability: float = 3.0
    critical_ue_count: int = 3
    ping_pong_horizon: float = 3.0

    def __post_init__(self):
        if min(self.qoe, self.fairness, self.stability, self.ping_pong_horizon) <= 0:
            raise ValueError("thresholds must be positive")
        if self.critical_ue_count < 0:
            raise ValueError("critical_ue_count must be >= 0")


@dataclass(frozen=True, eq=False)
class KpiWindow:
    window_index: int
    handovers_per_ue: np.ndarray
    per_ue_throughput: np.ndarray
    thr_5pct: float
    jain: float
    ho_rate: float
    ping_pong_ues: int

    @property
    def total_handovers(self) -> int:
        return int(np.sum(self.handovers_per_ue))


@dataclass(frozen=True)
class VulnerabilityRecord:
    kind: VulnKind
    severity: int
    window_index: int
    measured_value: float
    threshold: float
    critical: bool = False
    run_id: str = ""
    scenario: str = ""
    policy: str = ""
    eval_index: int = -1
    genome_hash: str = ""


def percentile5(throughputs) -> float:
    """Nearest-rank 5th percentile (no interpolation)."""
    x = np.sort(np.asarray(throughputs, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("percentile of an empty vector")
    rank = max(1, -(-5 * x.size // 100))  # integer ceil(0.05 * N)
    return float(x[rank - 1])


def jain_index(throughputs) -> float:
    """Jain's fairness index; an all-zero vector is defined as perfectly fair."""
    x = np.asarray(throughputs, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("jain index of an empty vector")
    sq = float(np.dot(x, x))
    if sq == 0.0:
        return 1.0
    s = float(x.sum())
    return s * s / (x.size * sq)


def handover_rate(history, n_ues: int, window_minutes: float) -> float:
    """Mean handovers per UE per minute."""
    if window_minutes <= 0:
        raise ValueError("window must be positive")
    return len(history) / (n_ues * window_minutes)


def event_array(history) -> np.ndarray:
    """Handover events as a (K, 4) array of (time, ue, from_cell, to_cell)."""
    if isinstance(history, np.ndarray):
        return history.reshape(-1, 4).astype(float, copy=False)
    return np.array([tuple(e) for e in history], dtype=float).reshape(-1, 4)


def ping_pong_ues(history, horizon: float = 3.0) -> int:
    """Number of UEs with an A->B->A return within ``horizon`` seconds of leaving A."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    ev = event_array(history)
    if len(ev) < 2:
        return 0
    ev = ev[np.lexsort((ev[:, 0], ev[:, 1]))]
    first, second = ev[:-1], ev[1:]
    hit = (
        (first[:, 1] == second[:, 1])
        & (second[:, 2] == first[:, 3])
        & (second[:, 3] == first[:, 2])
        & (second[:, 0] - first[:, 0] <= horizon)
    )
    return int(np.unique(first[hit, 1]).size)


def severity_score(kind, measured: float, threshold: float, n_kinds_violated: int) -> int:
    """Integer severity 1-5 from the relative exceedance of a threshold.

    One extra level when two or more kinds fail in the same window.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    exceedance = abs(measured - threshold) / threshold
    level = 1 + math.floor(4 * min(1.0, exceedance))
    if n_kinds_violated >= 2:
        level += 1
    return int(min(5, max(1, level)))


def classify(window: KpiWindow, thresholds: Thresholds, critical_ue_count: int | None = None, **provenance):
    """At most one record per KPI kind for one window.

    ``provenance`` fills the run/scenario/policy/eval fields of each record.
    """
    if critical_ue_count is None:
        critical_ue_count = thresholds.critical_ue_count
    hits = []
    if window.thr_5pct < thresholds.qoe:
        hits.append((VulnKind.QOE, window.thr_5pct, thresholds.qoe))
    if window.jain < thresholds.fairness:
        hits.append((VulnKind.FAIRNESS, window.jain, thresholds.fairness))
    if window.ho_rate > thresholds.stability:
        hits.append((VulnKind.STABILITY, window.ho_rate, thresholds.stability))
    records = []
    for kind, value, tau in hits:
        critical = kind is VulnKind.STABILITY and window.ping_pong_ues > critical_ue_count
        records.append(
            VulnerabilityRecord(
                kind=kind,
                severity=severity_score(kind, value, tau, len(hits)),
                window_index=window.window_index,
                measured_value=float(value),
                threshold=float(tau),
                critical=critical,
                **provenance,
            )
        )
    return records


def window_kpis(window_index: int, events, throughput_samples, n_ues: int, window_minutes: float,
                horizon: float = 3.0) -> KpiWindow:
    """Summarise one window from its handover events and per-epoch UE throughputs.

    ``throughput_samples`` is (epochs, N); per-UE throughput is its mean over
    the window.
    """
    per_ue = np.asarray(throughput_samples, dtype=float).mean(axis=0)
    events = event_array(events)
    ho = np.bincount(events[:, 1].astype(np.intp), minlength=n_ues)
    return KpiWindow(
        window_index=window_index,
        handovers_per_ue=ho,
        per_ue_throughput=per_ue,
        thr_5pct=percentile5(per_ue),
        jain=jain_index(per_ue),
        ho_rate=handover_rate(events, n_ues, window_minutes),
        ping_pong_ues=ping_pong_ues(events, horizon),
    )
