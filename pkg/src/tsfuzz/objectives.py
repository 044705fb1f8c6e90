"""Fitness objectives and the closed simulate-then-score evaluation loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as _k
from .genome import Genome, decode
from .kpi import KpiWindow, Thresholds, classify, jain_index, window_kpis
from .netstate import MobilityModel, channel_matrices, strongest_cell
from .policies import PolicyConfig, PolicyKind, epsilon_schedule

QOE_EPSILON_MBPS = 1e-6


class ObjectiveVector(NamedTuple):
    """Instability, QoE degradation and unfairness; all maximised."""

    f1: float
    f2: float
    f3: float


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    objectives: ObjectiveVector
    windows: list
    records: list
    genome_hash: str
    seed: int
    trace: dict | None = None

    @property
    def n_vulns(self) -> int:
        return len(self.records)

    @property
    def n_critical(self) -> int:
        return sum(r.critical for r in self.records)

    def to_dict(self) -> dict:
        return {
            "genome_hash": self.genome_hash,
            "seed": self.seed,
            "objectives": dict(self.objectives._asdict()),
            "windows": [
                {
                    "window_index": w.window_index,
                    "total_handovers": w.total_handovers,
                    "thr_5pct": w.thr_5pct,
                    "jain": w.jain,
                    "ho_rate": w.ho_rate,
                    "ping_pong_ues": w.ping_pong_ues,
                }
                for w in self.windows
            ],
            "records": [
                {
                    "kind": r.kind.value,
                    "severity": r.severity,
                    "window_index": r.window_index,
                    "measured_value": r.measured_value,
                    "threshold": r.threshold,
                    "critical": r.critical,
                }
                for r in self.records
            ],
        }


def f1_instability(handover_counts) -> float:
    """Population variance of per-window handover totals."""
    h = np.asarray(handover_counts, dtype=float)
    if h.size < 1:
        raise ValueError("need at least one window")
    return float(np.mean((h - h.mean()) ** 2))


def f2_qoe(thr_5pct_bps: float, epsilon: float = QOE_EPSILON_MBPS) -> float:
    """Inverse lower-tail throughput, with throughput in Mb/s."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return 1.0 / (thr_5pct_bps / 1e6 + epsilon)


def f3_unfairness(throughputs) -> float:
    return 1.0 - jain_index(throughputs)


def objectives_from_windows(windows: list[KpiWindow]) -> ObjectiveVector:
    """f1 on window handover totals, f2 on the mean window 5th percentile,
    f3 on per-UE throughput averaged over windows."""
    f1 = f1_instability([w.total_handovers for w in windows])
    f2 = f2_qoe(float(np.mean([w.thr_5pct for w in windows])))
    f3 = f3_unfairness(np.mean([w.per_ue_throughput for w in windows], axis=0))
    return ObjectiveVector(f1, f2, f3)


def simulate(genome: Genome, policy: PolicyConfig, seed: int):
    """Run the epoch loop; returns (initial serving, serving log, throughput log, sinr, dt).

    The seed is split into independent streams for shadowing, mobility and
    the policy's own randomness.
    """
    cfg = decode(genome)
    net = genome.scenario.network
    n, m = cfg.n_ues, cfg.n_cells
    per_window, n_windows = net.epochs_per_window, net.n_windows
    total = per_window * n_windows
    radio = cfg.radio

    shadow_ss, mobility_ss, policy_ss = np.random.SeedSequence(seed).spawn(3)
    shadows = radio.shadowing_sigma_db * np.random.default_rng(shadow_ss).standard_normal((n_windows, n, m))
    model = MobilityModel.random(cfg.positions, cfg.roam_half_width, cfg.box_side, cfg.speed_range,
                                 np.random.default_rng(mobility_ss), depth=total + 1)
    positions = model.trajectory(cfg.positions, net.dt, total)

    # epoch k >= 1 belongs to window (k - 1) // per_window; the initial state uses window 0
    window_of = np.maximum(0, np.arange(total + 1) - 1) // per_window
    _, rsrp, sinr = channel_matrices(positions, cfg.sites, radio, shadows[window_of], cfg.active)

    cells = np.flatnonzero(cfg.active)
    pol_rng = np.random.default_rng(policy_ss)
    explore = np.zeros((total, n), dtype=bool)
    random_cells = np.zeros((total, n), dtype=np.int64)
    if policy.kind in (PolicyKind.RANDOM, PolicyKind.QLEARNING):
        eps = np.array([epsilon_schedule(k, total, policy.q_epsilon) for k in range(total)])
        explore = pol_rng.random((total, n)) < eps[:, None]
        random_cells = cells[pol_rng.integers(0, cells.size, size=(total, n))]

    serving0 = strongest_cell(rsrp[0], cfg.active).astype(np.int64)
    serving_log, thr_log = _k.run_epochs(
        policy.kind.code, rsrp, sinr, cfg.active, np.asarray(cfg.background, dtype=float), float(cfg.n_max),
        serving0, policy.as_params(), explore, random_cells, float(radio.bandwidth), 1000.0 * net.dt,
    )
    return serving0, serving_log, thr_log, sinr, net.dt


def handover_events(serving0, serving_log, dt) -> np.ndarray:
    """(K, 4) array of (time, ue, from, to) from a serving-cell log, in time order."""
    prev = np.vstack([serving0[None, :], serving_log[:-1]])
    k, u = np.nonzero(serving_log != prev)
    return np.column_stack([(k + 1) * dt, u, prev[k, u], serving_log[k, u]]).astype(float)


def evaluate(genome: Genome, policy: PolicyConfig, seed: int, thresholds: Thresholds | None = None,
             trace: bool = False, **provenance) -> EvaluationResult:
    """Simulate one configuration under one policy and score it.

    Pure in ``(genome, policy, seed, thresholds)``. ``provenance``
    (run_id, eval_index, ...) is stamped onto the emitted records.
    """
    thresholds = thresholds or Thresholds()
    net = genome.scenario.network
    serving0, serving_log, thr_log, sinr, dt = simulate(genome, policy, seed)
    n = serving_log.shape[1]
    per_window = net.epochs_per_window
    events = handover_events(serving0, serving_log, dt)
    epoch_of_event = np.rint(events[:, 0] / dt).astype(np.int64)

    provenance.setdefault("policy", policy.kind.value)
    provenance.setdefault("scenario", genome.scenario.kind)
    provenance.setdefault("genome_hash", genome.hash)
    windows, records = [], []
    for w in range(net.n_windows):
        lo, hi = w * per_window, (w + 1) * per_window
        in_window = (epoch_of_event > lo) & (epoch_of_event <= hi)
        kw = window_kpis(w, events[in_window], thr_log[lo:hi], n, per_window * dt / 60.0,
                         thresholds.ping_pong_horizon)
        windows.append(kw)
        records.extend(classify(kw, thresholds, **provenance))

    result_trace = None
    if trace:
        steps = np.arange(serving_log.shape[0])
        ues = np.arange(n)
        result_trace = {
            "time": dt * (steps + 1),
            "serving": serving_log,
            "sinr": sinr[1:][steps[:, None], ues[None, :], serving_log],
            "throughput": thr_log,
        }
    return EvaluationResult(
        objectives=objectives_from_windows(windows),
        windows=windows,
        records=records,
        genome_hash=genome.hash,
        seed=int(seed),
        trace=result_trace,
    )
