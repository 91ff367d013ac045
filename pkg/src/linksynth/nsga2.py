"""NSGA-II baseline: evolve normalized link sets toward target conditions
using the frozen surrogate as the fitness oracle.

The surrogate cannot know Grashof validity, so evolution is unconstrained
and invalid individuals only get flagged at the final exact re-evaluation;
that mirrors how an optimizer driven purely by a learned objective drifts
into mechanically impossible corners for extreme targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from linksynth import conditions as cond_mod
from linksynth.cgan import Predictor
from linksynth.kinematics import _valid_mask
from linksynth.neuralnet import forward

_SBX_ETA = 15.0
_MUT_ETA = 20.0
_MUT_PROB = 0.2  # per gene: 1/5 for the five linkage genes
_CROSSOVER_PROB = 0.9
_DUP_DECIMALS = 9


@dataclass
class Individual:
    genes: np.ndarray  # (5,) in [0, 1]
    objectives: np.ndarray  # (2,) |d_hat - d_t|, |eta_hat - eta_t| in raw units
    rank: int = 0
    crowding: float = 0.0
    valid: bool | None = None
    conditions: tuple[float, float] | None = None


@dataclass
class Population:
    individuals: list[Individual]
    generation: int
    target: tuple[float, float]
    duplicate_count: int = 0
    invalid_count: int = 0

    def genes_array(self) -> np.ndarray:
        return np.stack([ind.genes for ind in self.individuals])


def fast_nondominated_sort(objectives: np.ndarray) -> list[list[int]]:
    """Deb's fast non-dominated sort over a [N, 2] objective matrix; returns
    fronts of indices, best first."""
    n = len(objectives)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = np.zeros(n, dtype=int)
    for p in range(n):
        less = objectives[p] <= objectives
        strict = objectives[p] < objectives
        dominates_p_row = np.all(less, axis=1) & np.any(strict, axis=1)
        for q in np.nonzero(dominates_p_row)[0]:
            dominated_by[p].append(int(q))
        dominated_row = np.all(objectives <= objectives[p], axis=1) & np.any(
            objectives < objectives[p], axis=1
        )
        domination_count[p] = int(dominated_row.sum())
    fronts = [list(np.nonzero(domination_count == 0)[0])]
    while fronts[-1]:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    nxt.append(q)
        fronts.append(sorted(nxt))
    fronts.pop()
    return [list(map(int, f)) for f in fronts]


def crowding_distance(front_objectives: np.ndarray) -> np.ndarray:
    """Boundary individuals get inf; interior ones the normalized cuboid
    perimeter contribution. Order-free in the input arrangement."""
    n = len(front_objectives)
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for m in range(front_objectives.shape[1]):
        order = np.argsort(front_objectives[:, m], kind="stable")
        vals = front_objectives[order, m]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span <= 0:
            continue
        dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def _objectives(genes: np.ndarray, predictor: Predictor, target: np.ndarray) -> np.ndarray:
    est = predictor.normalizer.denormalize_conditions(forward(predictor.model, genes))
    return np.abs(est - target)


def _sbx(parents_a: np.ndarray, parents_b: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover, per-gene, clamped to [0, 1]."""
    u = rng.random(parents_a.shape)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (_SBX_ETA + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (_SBX_ETA + 1.0)),
    )
    cross = rng.random((len(parents_a), 1)) < _CROSSOVER_PROB
    beta = np.where(cross, beta, 1.0)
    c1 = 0.5 * ((1 + beta) * parents_a + (1 - beta) * parents_b)
    c2 = 0.5 * ((1 - beta) * parents_a + (1 + beta) * parents_b)
    return np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)


def _polynomial_mutation(genes: np.ndarray, rng) -> np.ndarray:
    """Deb's polynomial mutation with boundary-aware perturbation."""
    u = rng.random(genes.shape)
    do = rng.random(genes.shape) < _MUT_PROB
    x = genes.copy()
    lo_gap = x
    hi_gap = 1.0 - x
    exp = 1.0 / (_MUT_ETA + 1.0)
    left = u < 0.5
    dl = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - lo_gap) ** (_MUT_ETA + 1.0)) ** exp - 1.0
    dr = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - hi_gap) ** (_MUT_ETA + 1.0)) ** exp
    delta = np.where(left, dl, dr)
    x = np.where(do, x + delta, x)
    return np.clip(x, 0.0, 1.0)


def _tournament(ranks: np.ndarray, crowd: np.ndarray, n_picks: int, rng) -> np.ndarray:
    a = rng.integers(0, len(ranks), n_picks)
    b = rng.integers(0, len(ranks), n_picks)
    a_wins = (ranks[a] < ranks[b]) | ((ranks[a] == ranks[b]) & (crowd[a] > crowd[b]))
    return np.where(a_wins, a, b)


def optimize(
    target: tuple[float, float],
    predictor: Predictor,
    pop_size: int = 100,
    generations: int = 200,
    seed: int = 0,
    n_steps: int = 360,
) -> Population:
    """Standard elitist (mu + lambda) NSGA-II; the returned population holds
    exact recomputed conditions and validity flags."""
    if pop_size < 4 or pop_size % 2:
        raise ValueError("pop_size must be even and >= 4")
    rng = np.random.default_rng(seed)
    tgt = np.asarray(target, dtype=float)
    genes = rng.random((pop_size, 5))
    objs = _objectives(genes, predictor, tgt)

    for _ in range(generations):
        fronts = fast_nondominated_sort(objs)
        ranks = np.empty(pop_size, dtype=int)
        crowd = np.empty(pop_size)
        for r, front in enumerate(fronts, start=1):
            ranks[front] = r
            crowd[front] = crowding_distance(objs[front])

        picks = _tournament(ranks, crowd, pop_size, rng)
        pa, pb = genes[picks[0::2]], genes[picks[1::2]]
        c1, c2 = _sbx(pa, pb, rng)
        children = np.concatenate([c1, c2])
        children = _polynomial_mutation(children, rng)
        child_objs = _objectives(children, predictor, tgt)

        all_genes = np.concatenate([genes, children])
        all_objs = np.concatenate([objs, child_objs])
        fronts = fast_nondominated_sort(all_objs)
        keep: list[int] = []
        for front in fronts:
            if len(keep) + len(front) <= pop_size:
                keep.extend(front)
                continue
            crowd_f = crowding_distance(all_objs[front])
            order = np.argsort(-crowd_f, kind="stable")
            keep.extend(np.asarray(front)[order[: pop_size - len(keep)]])
            break
        genes = all_genes[keep]
        objs = all_objs[keep]

    fronts = fast_nondominated_sort(objs)
    individuals = [Individual(genes=g, objectives=o) for g, o in zip(genes, objs)]
    for r, front in enumerate(fronts, start=1):
        crowd_f = crowding_distance(objs[front])
        for i, idx in enumerate(front):
            individuals[idx].rank = r
            individuals[idx].crowding = float(crowd_f[i])

    norm = predictor.normalizer
    rows = norm.denormalize_linkage(genes)
    valid = _valid_mask(rows)
    for i, ind in enumerate(individuals):
        ind.valid = bool(valid[i])
        if valid[i]:
            pair = cond_mod.evaluate_rows(rows[i : i + 1], n_steps=n_steps)[0]
            ind.conditions = (float(pair[0]), float(pair[1]))

    rounded = {tuple(np.round(g, _DUP_DECIMALS)) for g in genes}
    duplicate_count = pop_size - len(rounded)
    return Population(
        individuals=individuals,
        generation=generations,
        target=(float(tgt[0]), float(tgt[1])),
        duplicate_count=duplicate_count,
        invalid_count=int((~valid).sum()),
    )
