"""NSGA-II: non-dominated sorting, crowding, and the elitist generational loop.

All objectives are maximised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .genome import Genome, Scenario, clamp, random_genome
from .seeds import derive_seed

# seed stream identifiers under a run seed
STREAM_VARIATION = 0
STREAM_EVALUATION = 1


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaConfig:
    mu: int = 40
    generations: int = 25
    p_c: float = 0.9
    alpha: float = 0.5
    p_m: float = 0.5
    sigma: float = 50.0

    def __post_init__(self):
        if self.mu < 2 or self.mu % 2:
            raise ValueError("mu must be an even number >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not (0 <= self.p_c <= 1 and 0 <= self.p_m <= 1):
            raise ValueError("p_c and p_m must lie in [0, 1]")
        if self.alpha < 0 or self.sigma < 0:
            raise ValueError("alpha and sigma must be >= 0")

    @property
    def budget(self) -> int:
        """Evaluator calls per run: the initial population plus mu per generation."""
        return self.mu * (self.generations + 1)


@dataclass(eq=False)
class Individual:
    genome: Genome
    objectives: tuple
    rank: int = -1
    crowding: float = 0.0
    result: object = None
    eval_index: int = -1


def _objectives(item):
    return item.objectives if hasattr(item, "objectives") else item


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b):
        raise ValueError("objective vectors differ in length")
    better = False
    for x, y in zip(a, b):
        if x < y:
            return False
        if x > y:
            better = True
    return better


def fast_nondominated_sort(pop) -> list[list[int]]:
    """Partition ``pop`` into fronts of indices; front 0 is the non-dominated set.

    Sets ``rank`` on members that are :class:`Individual`.
    """
    if len(pop) == 0:
        raise ValueError("empty population")
    objs = np.array([tuple(_objectives(p)) for p in pop], dtype=float)
    n = len(objs)
    ge = np.all(objs[:, None, :] >= objs[None, :, :], axis=2)
    gt = np.any(objs[:, None, :] > objs[None, :, :], axis=2)
    dom = ge & gt  # dom[i, j]: i dominates j
    dominated_by = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if dominated_by[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                dominated_by[j] -= 1
                if dominated_by[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    for r, front in enumerate(fronts):
        for i in front:
            if isinstance(pop[i], Individual):
                pop[i].rank = r
    return fronts


def crowding_distance(front) -> list[float]:
    """Normalised neighbour gaps summed over objectives; boundary members get +inf.

    Sets ``crowding`` on members that are :class:`Individual`.
    """
    if len(front) == 0:
        raise ValueError("empty front")
    objs = np.array([tuple(_objectives(p)) for p in front], dtype=float)
    n, m = objs.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = math.inf
    else:
        for k in range(m):
            order = np.argsort(objs[:, k], kind="stable")
            vals = objs[order, k]
            span = vals[-1] - vals[0]
            dist[order[0]] = dist[order[-1]] = math.inf
            if span > 0:
                dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    out = [float(d) for d in dist]
    for p, d in zip(front, out):
        if isinstance(p, Individual):
            p.crowding = d
    return out


def assign_rank_and_crowding(pop: list[Individual]) -> list[list[int]]:
    fronts = fast_nondominated_sort(pop)
    for front in fronts:
        crowding_distance([pop[i] for i in front])
    return fronts


def tournament_select(pop: list[Individual], seed) -> Individual:
    """Binary tournament: lower rank wins, then larger crowding, then a coin flip."""
    rng = _rng(seed)
    i, j = rng.choice(len(pop), size=2, replace=False)
    a, b = pop[i], pop[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.random() < 0.5 else b


def blx_crossover(p1: Genome, p2: Genome, alpha: float, p_c: float, seed) -> tuple[Genome, Genome]:
    """BLX-alpha on free genes; children are clamped to the scenario bounds."""
    if p1.scenario is not p2.scenario and (p1.scenario.kind != p2.scenario.kind or p1.values.shape != p2.values.shape):
        raise ValueError("parents have different layouts")
    rng = _rng(seed)
    if rng.random() >= p_c:
        return p1, p2
    sc = p1.scenario
    a, b = p1.values, p2.values
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    ext = alpha * (hi - lo)
    free = sc.free
    children = []
    for _ in range(2):
        v = a.copy()
        v[free] = rng.uniform(lo[free] - ext[free], hi[free] + ext[free])
        children.append(clamp(Genome(v, sc)))
    return children[0], children[1]


def gaussian_mutation(g: Genome, p_m: float, sigma: float, seed) -> Genome:
    """With probability ``p_m`` perturb every free gene by N(0, sigma_g^2), then clamp."""
    rng = _rng(seed)
    if rng.random() >= p_m:
        return g
    scales = g.scenario.mutation_scales(sigma)
    v = g.values + scales * rng.standard_normal(g.values.size)
    return clamp(Genome(v, g.scenario))


@dataclass
class EvolutionResult:
    front: list[Individual]
    population: list[Individual]
    history: list[dict]
    evaluated: list[Individual] = field(default_factory=list)


Evaluator = Callable[[Genome, int, int], object]


def evolve(scenario: Scenario, evaluator: Evaluator, cfg: GaConfig, seed: int) -> EvolutionResult:
    """Run NSGA-II for ``cfg.generations`` generations.

    ``evaluator(genome, eval_seed, eval_index)`` must return an object with
    ``objectives`` and ``records``. Evaluation seeds are indexed by the
    evaluation's position in the run, so the outcome is fixed by ``seed``.
    """
    rng = np.random.default_rng(derive_seed(seed, STREAM_VARIATION))
    evaluated: list[Individual] = []
    best = 0

    def run(genomes, generation):
        nonlocal best
        out = []
        for g in genomes:
            idx = len(evaluated)
            try:
                res = evaluator(g, derive_seed(seed, STREAM_EVALUATION, idx), idx)
            except Exception as exc:
                raise EvaluationError(
                    f"generation {generation}: evaluation {idx} (genome {g.hash}) failed: {exc}"
                ) from exc
            ind = Individual(g, tuple(res.objectives), result=res, eval_index=idx)
            evaluated.append(ind)
            best = max(best, len(res.records))
            out.append(ind)
        return out

    def snapshot(generation, pop):
        objs = np.array([ind.objectives for ind in pop], dtype=float)
        return {
            "generation": generation,
            "best_cumulative_vulns": best,
            "max_f1": float(objs[:, 0].max()),
            "max_f2": float(objs[:, 1].max()),
            "max_f3": float(objs[:, 2].max()),
            "evals_used": len(evaluated),
        }

    population = run([random_genome(scenario, rng) for _ in range(cfg.mu)], 0)
    assign_rank_and_crowding(population)
    history = [snapshot(0, population)]

    for gen in range(1, cfg.generations + 1):
        offspring_genomes = []
        while len(offspring_genomes) < cfg.mu:
            a = tournament_select(population, rng).genome
            b = tournament_select(population, rng).genome
            c1, c2 = blx_crossover(a, b, cfg.alpha, cfg.p_c, rng)
            offspring_genomes.append(gaussian_mutation(c1, cfg.p_m, cfg.sigma, rng))
            offspring_genomes.append(gaussian_mutation(c2, cfg.p_m, cfg.sigma, rng))
        union = population + run(offspring_genomes[: cfg.mu], gen)
        assign_rank_and_crowding(union)
        union.sort(key=lambda ind: (ind.rank, -ind.crowding, ind.genome.hash, ind.eval_index))
        population = union[: cfg.mu]
        history.append(snapshot(gen, population))

    fronts = assign_rank_and_crowding(population)
    front = [population[i] for i in fronts[0]]
    return EvolutionResult(front=front, population=population, history=history, evaluated=evaluated)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
