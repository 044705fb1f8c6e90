"""Configuration vectors searched by the fuzzer and the six test scenarios.

Layout of a genome for N UEs and M cells (length 2N + M + 2)::

    [x0, y0, x1, y1, ..., x_{N-1}, y_{N-1} | load_bias_0 .. load_bias_{M-1} | interference_scale | isd_scale]

UE positions are in metres in the nominal (isd_scale = 1) frame; decoding
scales the whole layout, sites and UEs alike, by ``isd_scale``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .netstate import NetworkConfig, SimConfig, hex_sites

POSITION_SIGMA_REF = 50.0
NON_POSITION_SIGMA_FRACTION = 0.1
CLUSTER_FRACTION = 0.7
CLUSTER_HALF_WIDTH = 0.4  # x ISD; box corner stays inside 0.6 * ISD


class ScenarioKind(str, Enum):
    STABLE_MOBILITY = "stable_mobility"
    STABLE_HIGH_LOAD = "stable_high_load"
    LOAD_IMBALANCE = "load_imbalance"
    COVERAGE_HOLE = "coverage_hole"
    HIGH_INTERFERENCE = "high_interference"
    CONGESTION_CRISIS = "congestion_crisis"


@dataclass(frozen=True, eq=False)
class Scenario:
    """Bounds, frozen genes and active cells of one test scenario.

    Frozen genes have ``lower == upper == fixed`` and are never touched by the
    variation operators.
    """

    kind: str
    active_cells: tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray
    frozen: np.ndarray
    layout: dict = field(default_factory=dict)
    network: NetworkConfig | None = None
    cluster_cells: tuple[int, ...] = ()
    clustered_ues: tuple[int, ...] = ()

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        frozen = np.asarray(self.frozen, dtype=bool)
        if not lower.shape == upper.shape == frozen.shape:
            raise ValueError("bounds and frozen mask must share one shape")
        if np.any(lower > upper):
            raise ValueError("lower bound above upper bound")
        if np.any(lower[frozen] != upper[frozen]):
            raise ValueError("frozen genes need degenerate bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "active_cells", tuple(int(c) for c in self.active_cells))

    @property
    def size(self) -> int:
        return self.lower.size

    @property
    def free(self) -> np.ndarray:
        return ~self.frozen

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def mutation_scales(self, sigma: float) -> np.ndarray:
        """Per-gene mutation std: ``sigma`` metres on positions, a proportional
        share of the range elsewhere (10 % of the range at the reference sigma)."""
        span = self.upper - self.lower
        scales = (sigma / POSITION_SIGMA_REF) * NON_POSITION_SIGMA_FRACTION * span
        pos = self.layout.get("ue_positions")
        if pos is not None:
            scales[pos] = sigma
        scales[self.frozen] = 0.0
        return scales


@dataclass(frozen=True, eq=False)
class Genome:
    values: np.ndarray
    scenario: Scenario

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.scenario.size,):
            raise ValueError(f"genome length {values.size} != layout length {self.scenario.size}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def hash(self) -> str:
        h = hashlib.sha1(self.scenario.kind.encode())
        h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def in_bounds(self) -> bool:
        v, sc = self.values, self.scenario
        return bool(np.all(v >= sc.lower) and np.all(v <= sc.upper))

    def to_dict(self) -> dict:
        sc = self.scenario
        layout = {name: [sl.start, sl.stop] for name, sl in sc.layout.items()}
        return {
            "format": "tsfuzz-genome/1",
            "scenario": sc.kind,
            "n_ues": sc.network.n_ues if sc.network else None,
            "layout": layout,
            "values": [float(v) for v in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict, network: NetworkConfig | None = None) -> Genome:
        if not str(doc.get("format", "")).startswith("tsfuzz-genome/1"):
            raise ValueError("unsupported genome format")
        if network is None:
            network = NetworkConfig(n_ues=int(doc["n_ues"]))
        scenario = scenario_spec(doc["scenario"], network)
        return cls(np.asarray(doc["values"], dtype=float), scenario)


def _slices(n_ues: int, n_cells: int) -> dict:
    p = 2 * n_ues
    return {
        "ue_positions": slice(0, p),
        "cell_load_bias": slice(p, p + n_cells),
        "interference_scale": slice(p + n_cells, p + n_cells + 1),
        "isd_scale": slice(p + n_cells + 1, p + n_cells + 2),
    }


def designated_cells(network: NetworkConfig, active) -> tuple[int, int]:
    """The two active sites nearest the (0, 0) corner of the deployment box."""
    sites = hex_sites(network.isd, network.box_side)
    d = np.hypot(sites[:, 0], sites[:, 1])
    order = [int(i) for i in np.argsort(d, kind="stable") if i in set(active)]
    return order[0], order[1]


def scenario_spec(kind, network: NetworkConfig | None = None) -> Scenario:
    """Build the bounds and frozen genes of one of the six scenarios."""
    kind = ScenarioKind(kind)
    network = network or NetworkConfig()
    n, m = network.n_ues, network.n_cells
    layout = _slices(n, m)
    size = 2 * n + m + 2
    lower = np.zeros(size)
    upper = np.zeros(size)
    lower[layout["ue_positions"]] = 0.0
    upper[layout["ue_positions"]] = network.box_side
    lower[layout["cell_load_bias"]] = 0.0
    upper[layout["cell_load_bias"]] = 1.0
    lower[layout["interference_scale"]], upper[layout["interference_scale"]] = 0.5, 3.0
    lower[layout["isd_scale"]], upper[layout["isd_scale"]] = 0.75, 2.0
    frozen = np.zeros(size, dtype=bool)

    def fix(name, value):
        sl = layout[name]
        lower[sl] = upper[sl] = value
        frozen[sl] = True

    def bound(name, lo, hi):
        sl = layout[name]
        lower[sl], upper[sl] = lo, hi

    active = list(range(m))
    outage = kind in (ScenarioKind.COVERAGE_HOLE, ScenarioKind.CONGESTION_CRISIS)
    if outage:
        active.remove(0)
        i = layout["cell_load_bias"].start
        lower[i] = upper[i] = 0.0
        frozen[i] = True

    if kind in (ScenarioKind.STABLE_MOBILITY, ScenarioKind.STABLE_HIGH_LOAD):
        fix("interference_scale", 1.0)
        fix("isd_scale", 1.0)
        if kind is ScenarioKind.STABLE_HIGH_LOAD:
            bound("cell_load_bias", 0.6, 1.0)
    elif kind in (ScenarioKind.LOAD_IMBALANCE, ScenarioKind.COVERAGE_HOLE):
        fix("interference_scale", 1.0)
        bound("isd_scale", 1.0, 2.0)
    elif kind is ScenarioKind.HIGH_INTERFERENCE:
        bound("interference_scale", 1.5, 3.0)
        bound("isd_scale", 0.75, 1.0)
    elif kind is ScenarioKind.CONGESTION_CRISIS:
        bound("interference_scale", 1.0, 2.0)
        bound("isd_scale", 0.75, 1.5)
        sl = layout["cell_load_bias"]
        lower[sl] = np.where(frozen[sl], 0.0, 0.5)

    cluster_cells: tuple[int, ...] = ()
    clustered: tuple[int, ...] = ()
    if kind in (ScenarioKind.LOAD_IMBALANCE, ScenarioKind.CONGESTION_CRISIS):
        cluster_cells = designated_cells(network, active)
        sites = hex_sites(network.isd, network.box_side)
        half = CLUSTER_HALF_WIDTH * network.isd
        n_cluster = int(np.ceil(CLUSTER_FRACTION * n))
        clustered = tuple(range(n_cluster))
        for u in clustered:
            centre = sites[cluster_cells[u % 2]]
            for axis in range(2):
                g = 2 * u + axis
                lower[g] = max(0.0, centre[axis] - half)
                upper[g] = min(network.box_side, centre[axis] + half)

    return Scenario(
        kind=kind.value,
        active_cells=tuple(active),
        lower=lower,
        upper=upper,
        frozen=frozen,
        layout=layout,
        network=network,
        cluster_cells=cluster_cells,
        clustered_ues=clustered,
    )


def random_genome(scenario: Scenario, seed) -> Genome:
    """Uniform draw of every free gene within its bounds."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    values = rng.uniform(scenario.lower, scenario.upper)
    values[scenario.frozen] = scenario.lower[scenario.frozen]
    return Genome(values, scenario)


def clamp(genome: Genome) -> Genome:
    """Project every gene into its bounds (frozen genes return to their fixed value)."""
    sc = genome.scenario
    values = np.clip(genome.values, sc.lower, sc.upper)
    values[sc.frozen] = sc.lower[sc.frozen]
    return Genome(values, sc)


def decode(genome: Genome) -> SimConfig:
    """Turn a genome into the simulator's initial configuration."""
    sc = genome.scenario
    if not genome.in_bounds():
        raise ValueError("genome violates bounds")
    network = sc.network or NetworkConfig()
    v = genome.values
    lay = sc.layout
    scale = float(v[lay["isd_scale"]][0])
    interference = float(v[lay["interference_scale"]][0])
    positions = v[lay["ue_positions"]].reshape(-1, 2) * scale
    active = np.zeros(network.n_cells, dtype=bool)
    active[list(sc.active_cells)] = True
    background = np.where(active, v[lay["cell_load_bias"]], 0.0)
    radio = replace(network.radio, interference_scale=interference)
    box = network.box_side * scale
    return SimConfig(
        positions=positions,
        background=background,
        radio=radio,
        sites=hex_sites(network.isd * scale, box),
        box_side=box,
        active=active,
        n_max=network.capacity,
        speed_range=network.speed_range,
        roam_half_width=network.roam_half_width * scale,
    )
