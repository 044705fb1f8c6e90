"""Time-stepped network state: positions, loads, associations, channel."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels as _k
from .channel import RadioParams, distances, gains_from_loss, path_loss_db, sinr_matrix


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment and timing parameters shared by every evaluation."""

    n_cells: int = 7
    n_ues: int = 40
    isd: float = 100.0
    radio: RadioParams = field(default_factory=RadioParams)
    speed_range: tuple[float, float] = (1.0, 5.0)
    box_factor: float = 2.5
    n_max: int | None = None
    roam_factor: float = 0.3
    dt: float = 1.0
    epochs_per_window: int = 60
    n_windows: int = 15

    def __post_init__(self):
        if self.n_cells != 7:
            raise ValueError("the hexagonal layout has exactly 7 sites")
        if self.n_ues < 1:
            raise ValueError("n_ues must be >= 1")
        if self.isd <= 0 or self.dt <= 0:
            raise ValueError("isd and dt must be positive")
        lo, hi = self.speed_range
        if not 0 < lo <= hi:
            raise ValueError("speed_range must satisfy 0 < lo <= hi")
        if self.epochs_per_window < 1 or self.n_windows < 1:
            raise ValueError("epochs_per_window and n_windows must be >= 1")

    @property
    def box_side(self) -> float:
        return self.box_factor * self.isd

    @property
    def roam_half_width(self) -> float:
        return self.roam_factor * self.isd

    @property
    def capacity(self) -> int:
        return self.n_ues if self.n_max is None else self.n_max

    @property
    def n_epochs(self) -> int:
        return self.epochs_per_window * self.n_windows


def hex_sites(isd: float, box_side: float) -> np.ndarray:
    """Centre site plus a ring of six at distance ``isd``, centred in the box."""
    c = box_side / 2.0
    angles = np.deg2rad(np.arange(6) * 60.0)
    ring = np.column_stack([c + isd * np.cos(angles), c + isd * np.sin(angles)])
    return np.vstack([[c, c], ring])


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Decoded scenario configuration consumed by :func:`init_state`."""

    positions: np.ndarray
    background: np.ndarray
    radio: RadioParams
    sites: np.ndarray
    box_side: float
    active: np.ndarray
    n_max: int
    speed_range: tuple[float, float] = (1.0, 5.0)
    roam_half_width: float = 30.0

    @property
    def n_ues(self) -> int:
        return len(self.positions)

    @property
    def n_cells(self) -> int:
        return len(self.sites)


class Handover(NamedTuple):
    time: float
    ue: int
    from_cell: int
    to_cell: int


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Snapshot of the network at one decision epoch.

    ``serving`` holds one cell index per UE; ``assoc`` is the equivalent
    one-hot matrix. ``rsrp_dbm`` and ``sinr`` are N x M channel-quality
    matrices for the current positions and shadowing.
    """

    time: float
    positions: np.ndarray
    loads: np.ndarray
    serving: np.ndarray
    gains: np.ndarray
    rsrp_dbm: np.ndarray
    sinr: np.ndarray
    active: np.ndarray
    background: np.ndarray
    n_max: int
    ho_history: tuple[Handover, ...] = ()

    @property
    def n_ues(self) -> int:
        return len(self.serving)

    @property
    def n_cells(self) -> int:
        return len(self.active)

    @property
    def assoc(self) -> np.ndarray:
        a = np.zeros((self.n_ues, self.n_cells), dtype=np.int8)
        a[np.arange(self.n_ues), self.serving] = 1
        return a

    @property
    def active_cells(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.active))

    @property
    def cell_counts(self) -> np.ndarray:
        return np.bincount(self.serving, minlength=self.n_cells)


@dataclass
class MobilityModel:
    """Random-waypoint mobility with zero pause time.

    Each UE roams inside its own square around a home point. Future waypoints and speeds are pre-drawn into per-UE queues
    (``pool_waypoints``/``pool_speeds``) so that stepping one epoch at a time
    and generating a whole trajectory consume exactly the same draws.
    """

    waypoint: np.ndarray
    speed: np.ndarray
    box_side: float
    speed_range: tuple[float, float] = (1.0, 5.0)
    pool_waypoints: np.ndarray | None = None
    pool_speeds: np.ndarray | None = None
    pointer: np.ndarray | None = None

    def __post_init__(self):
        lo, hi = self.speed_range
        if not 0 < lo <= hi:
            raise ValueError("speed_range must satisfy 0 < lo <= hi")
        self.speed = np.array(self.speed, dtype=float)
        self.waypoint = np.array(self.waypoint, dtype=float)
        n = len(self.speed)
        if np.any(self.speed < lo) or np.any(self.speed > hi):
            raise ValueError(f"speeds must lie in [{lo}, {hi}] m/s")
        if np.any(self.waypoint < 0) or np.any(self.waypoint > self.box_side):
            raise ValueError("waypoints must lie inside the deployment box")
        if self.pool_waypoints is None:
            self.pool_waypoints = self.waypoint[None].copy()
            self.pool_speeds = self.speed[None].copy()
        if self.pointer is None:
            self.pointer = np.zeros(n, dtype=np.int64)

    @classmethod
    def random(cls, homes, roam_half_width, box_side, speed_range, rng, depth=64) -> MobilityModel:
        """Draw ``depth`` future waypoints per UE, uniform in its roaming square."""
        homes = np.asarray(homes, dtype=float)
        lo = np.clip(homes - roam_half_width, 0.0, box_side)
        hi = np.clip(homes + roam_half_width, 0.0, box_side)
        n = len(homes)
        pool_wp = lo + (hi - lo) * rng.random((depth, n, 2))
        pool_speed = rng.uniform(*speed_range, size=(depth, n))
        return cls(pool_wp[0], pool_speed[0], box_side, tuple(speed_range), pool_wp, pool_speed)

    def advance(self, positions, dt) -> np.ndarray:
        """Move every UE ``speed * dt`` towards its waypoint.

        A UE within one step of its waypoint lands on it exactly and takes
        the next waypoint and speed from its queue.
        """
        return _k.advance(np.ascontiguousarray(positions, dtype=float), self.waypoint, self.speed,
                          self.pool_waypoints, self.pool_speeds, self.pointer, float(dt), float(self.box_side))

    def trajectory(self, positions, dt, n_steps) -> np.ndarray:
        """Positions for steps 0..n_steps, shape (n_steps + 1, N, 2)."""
        return _k.trajectory(np.ascontiguousarray(positions, dtype=float), self.waypoint, self.speed,
                             self.pool_waypoints, self.pool_speeds, self.pointer, float(dt),
                             float(self.box_side), int(n_steps))


def channel_matrices(positions, sites, radio: RadioParams, shadow_db, active):
    """Gains, RSRP (dBm) and SINR matrices for given positions and shadowing."""
    loss = path_loss_db(distances(positions, sites), radio.carrier_frequency) + shadow_db
    # gains are capped at 1, i.e. loss floored at 0 dB
    np.maximum(loss, 0.0, out=loss)
    gains = gains_from_loss(loss)
    rsrp = radio.tx_power_dbm - loss
    return gains, rsrp, sinr_matrix(gains, radio, active)


def compute_loads(serving, n_cells, n_max, background) -> np.ndarray:
    return _k.cell_loads(np.asarray(serving, dtype=np.int64), n_cells, float(n_max),
                         np.asarray(background, dtype=float))


def init_state(config: SimConfig, seed) -> NetworkState:
    """Place UEs and attach each one to its strongest-RSRP active cell.

    ``seed`` drives the shadowing realisation of the first window.
    """
    if not config.active.any():
        raise ValueError("unservable UE: no active cell")
    shadow = config.radio.shadowing_sigma_db * np.random.default_rng(seed).standard_normal(
        (config.n_ues, config.n_cells)
    )
    return _initial_state(config, shadow)


def _initial_state(config: SimConfig, shadow_db) -> NetworkState:
    positions = np.asarray(config.positions, dtype=float)
    gains, rsrp, sinr = channel_matrices(positions, config.sites, config.radio, shadow_db, config.active)
    serving = strongest_cell(rsrp, config.active).astype(np.int64)
    loads = compute_loads(serving, config.n_cells, config.n_max, config.background)
    return NetworkState(
        time=0.0,
        positions=positions,
        loads=loads,
        serving=serving,
        gains=gains,
        rsrp_dbm=rsrp,
        sinr=sinr,
        active=np.asarray(config.active, dtype=bool),
        background=np.asarray(config.background, dtype=float),
        n_max=config.n_max,
    )


def strongest_cell(rsrp_dbm, active) -> np.ndarray:
    return np.argmax(np.where(active, rsrp_dbm, -np.inf), axis=-1)


def step_mobility(state: NetworkState, model: MobilityModel, dt: float) -> NetworkState:
    """Advance positions by one epoch; channel matrices are left to :func:`refresh_channel`.

    Randomness lives in the model's pre-drawn waypoint queue.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    positions = model.advance(state.positions, dt)
    return replace(state, time=state.time + dt, positions=positions)


def refresh_channel(state: NetworkState, sites, radio: RadioParams, shadow_db) -> NetworkState:
    gains, rsrp, sinr = channel_matrices(state.positions, sites, radio, shadow_db, state.active)
    return replace(state, gains=gains, rsrp_dbm=rsrp, sinr=sinr)


def update_loads(state: NetworkState, background=None) -> NetworkState:
    """Recompute ``L_j = min(1, n_j / N_max + background_j)``."""
    background = state.background if background is None else np.asarray(background, dtype=float)
    if np.any(background < 0) or np.any(background > 1):
        raise ValueError("background load must lie in [0, 1]")
    loads = compute_loads(state.serving, state.n_cells, state.n_max, background)
    return replace(state, loads=loads, background=background)


def apply_decisions(state: NetworkState, target) -> NetworkState:
    """Rewrite associations and log one handover per UE whose cell changed."""
    target = np.asarray(target, dtype=np.int64)
    bad = np.flatnonzero(~state.active[target])
    if bad.size:
        raise ValueError(f"target cell inactive for UE(s) {bad.tolist()}")
    moved = np.flatnonzero(target != state.serving)
    events = tuple(
        Handover(state.time, int(u), int(state.serving[u]), int(target[u])) for u in moved
    )
    loads = compute_loads(target, state.n_cells, state.n_max, state.background)
    return replace(state, serving=target, loads=loads, ho_history=state.ho_history + events)


def shared_throughput(state: NetworkState, radio: RadioParams) -> np.ndarray:
    """Per-UE bit/s with an equal time share among the UEs of each cell."""
    return served_throughput(state.sinr, state.serving, radio.bandwidth, state.n_cells)


def served_throughput(sinr, serving, bandwidth, n_cells) -> np.ndarray:
    return _k.served_throughput(np.ascontiguousarray(sinr, dtype=float), np.asarray(serving, dtype=np.int64),
                                float(bandwidth), int(n_cells))
