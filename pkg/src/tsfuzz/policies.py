"""Traffic-steering policies under test.

Every policy maps the current :class:`~tsfuzz.netstate.NetworkState` to one
target cell per UE. The decision arithmetic lives in compiled kernels shared
with the simulator loop; the functions here are the state-level entry points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as _k
from .netstate import NetworkState

RATE_CAP_SINR = _k.RATE_CAP_SINR
N_Q_STATES = _k.N_Q_STATES


class PolicyKind(str, Enum):
    A3 = "a3"
    UTILITY = "utility"
    LOAD_AWARE = "load_aware"
    RANDOM = "random"
    QLEARNING = "qlearning"

    @property
    def code(self) -> int:
        return list(PolicyKind).index(self)


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind = PolicyKind.A3
    a3_hysteresis: float = 3.0
    a3_ttt: float = 160.0
    utility_weights: tuple[float, float, float] = (0.5, 0.3, 0.2)
    la_min_sinr: float = 0.0
    la_max_load: float = 0.8
    q_eta: float = 0.3
    q_gamma: float = 0.9
    q_epsilon: tuple[float, float] = (0.1, 0.01)
    reward_weights: tuple[float, float, float] = (0.5, 0.3, 0.2)

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        object.__setattr__(self, "utility_weights", tuple(float(w) for w in self.utility_weights))
        object.__setattr__(self, "reward_weights", tuple(float(w) for w in self.reward_weights))
        object.__setattr__(self, "q_epsilon", tuple(float(e) for e in self.q_epsilon))
        if self.a3_hysteresis < 0 or self.a3_ttt < 0:
            raise ValueError("A3 hysteresis and TTT must be >= 0")
        w = np.asarray(self.utility_weights)
        if w.shape != (3,) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("utility_weights must be 3 non-negative values with positive sum")
        if len(self.reward_weights) != 3 or min(self.reward_weights) < 0:
            raise ValueError("reward_weights must be 3 non-negative values")
        if not 0 <= self.q_eta <= 1:
            raise ValueError("q_eta must lie in [0, 1]")
        if not 0 <= self.q_gamma < 1:
            raise ValueError("q_gamma must lie in [0, 1)")
        if len(self.q_epsilon) != 2:
            raise ValueError("q_epsilon must be (start, end)")
        start, end = self.q_epsilon
        if not 1 >= start >= end >= 0:
            raise ValueError("q_epsilon must satisfy 1 >= start >= end >= 0")

    def as_params(self) -> np.ndarray:
        """Flat parameter vector in the layout expected by ``_kernels.run_epochs``."""
        p = np.zeros(_k.N_PARAMS)
        p[_k.P_HYST] = self.a3_hysteresis
        p[_k.P_TTT] = self.a3_ttt
        p[_k.P_W_SINR], p[_k.P_W_LOAD], p[_k.P_W_RATE] = self.utility_weights
        p[_k.P_LA_SINR] = self.la_min_sinr
        p[_k.P_LA_LOAD] = self.la_max_load
        p[_k.P_ETA] = self.q_eta
        p[_k.P_GAMMA] = self.q_gamma
        p[_k.P_R1], p[_k.P_R2], p[_k.P_R3] = self.reward_weights
        return p


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def decide_a3(state: NetworkState, cfg: PolicyConfig, timers, dt_ms: float = 1000.0):
    """Event-A3 handover with hysteresis and time-to-trigger.

    ``timers`` holds, per UE, how long (ms) the entering condition has held.
    An epoch in which the condition holds counts as ``dt_ms`` of persistence,
    so any TTT up to one epoch is met on the first epoch it is observed.
    Returns ``(targets, timers)``.
    """
    return _k.a3_decide(state.rsrp_dbm, state.active, state.serving, np.asarray(timers, dtype=float),
                        float(cfg.a3_hysteresis), float(cfg.a3_ttt), float(dt_ms))


def utility_scores(nsinr, loads, nrate, weights):
    """Composite utility on already-normalised SINR and rate terms."""
    w_sinr, w_load, w_rate = weights
    return w_sinr * np.asarray(nsinr) + w_load * (1.0 - np.asarray(loads)) + w_rate * np.asarray(nrate)


def decide_utility(state: NetworkState, cfg: PolicyConfig) -> np.ndarray:
    """Per UE, the active cell with the highest utility; ties go to the lowest index.

    SINR maps affinely from [-10, 30] dB onto [0, 1]; the rate term is the
    single-user Shannon rate relative to its value at 30 dB.
    """
    return _k.utility_decide(state.sinr, state.loads, state.active, *map(float, cfg.utility_weights))


def decide_load_aware(state: NetworkState, cfg: PolicyConfig) -> np.ndarray:
    """Least-loaded cell among those meeting the SINR floor and load ceiling.

    Ties go to the higher SINR, then to the lower index. A UE with no
    feasible candidate falls back to its max-SINR cell.
    """
    return _k.load_aware_decide(state.sinr, state.loads, state.active,
                                float(cfg.la_min_sinr), float(cfg.la_max_load))


def decide_random(state: NetworkState, seed) -> np.ndarray:
    cells = np.flatnonzero(state.active)
    if cells.size == 0:
        raise ValueError("no active cell")
    return cells[_rng(seed).integers(0, cells.size, size=state.n_ues)]


@dataclass
class QTable:
    """Tabular action values over discretised states; unseen entries read as 0.

    States combine serving RSRP (4 bins), serving SINR (4 bins) and serving
    load (3 bins); the queue component is held in a single bin.
    """

    n_cells: int
    values: np.ndarray = field(default=None)
    visits: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros((N_Q_STATES, self.n_cells))
        if self.visits is None:
            self.visits = np.zeros((N_Q_STATES, self.n_cells), dtype=np.int64)

    def __getitem__(self, key) -> float:
        s, a = key
        return float(self.values[s, a])


def q_state_keys(state: NetworkState) -> np.ndarray:
    return _k.q_keys(state.rsrp_dbm, state.sinr, state.loads, state.serving)


def q_decide(state: NetworkState, q: QTable, epsilon: float, seed) -> np.ndarray:
    """Epsilon-greedy choice; greedy ties prefer the serving cell, then the lowest index."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    rng = _rng(seed)
    cells = np.flatnonzero(state.active)
    explore = rng.random(state.n_ues) < epsilon
    random_cells = cells[rng.integers(0, cells.size, size=state.n_ues)]
    return _k.q_greedy(q.values, q_state_keys(state), state.active, state.serving, explore, random_cells)


def q_reward(throughput, fairness, did_handover, weights, bandwidth=None):
    """Reward ``w1*T + w2*J - w3*C_HO`` with a unit cost per handover.

    ``throughput`` is in bit/s when ``bandwidth`` is given (normalised by the
    single-user rate at 30 dB SINR), otherwise it is taken as already in [0, 1].
    """
    w1, w2, w3 = weights
    t = np.asarray(throughput, dtype=float)
    if bandwidth is not None:
        return _k.q_rewards(np.atleast_1d(t), float(fairness), np.atleast_1d(np.asarray(did_handover, dtype=bool)),
                            float(w1), float(w2), float(w3), float(bandwidth))
    return w1 * t + w2 * fairness - w3 * np.asarray(did_handover, dtype=float)


def q_update(q: QTable, s, a, r, s_next, eta, gamma) -> QTable:
    """In place: ``Q(s,a) <- (1-eta) Q(s,a) + eta [r + gamma max_a' Q(s',a')]``."""
    if not 0 <= eta <= 1 or not 0 <= gamma < 1:
        raise ValueError("need eta in [0, 1] and gamma in [0, 1)")
    _k.q_update(q.values, q.visits, int(s), int(a), float(r), int(s_next), float(eta), float(gamma))
    return q


def epsilon_schedule(epoch: int, total: int, eps=(0.1, 0.01)) -> float:
    """Linear decay from ``eps[0]`` at epoch 0 to ``eps[1]`` at the last epoch."""
    if total < 1:
        raise ValueError("total must be >= 1")
    start, end = eps
    if total == 1:
        return float(start)
    return float(start + (end - start) * min(epoch, total - 1) / (total - 1))
