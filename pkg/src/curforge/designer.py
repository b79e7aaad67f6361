"""Curriculum scoring and ranking from the inter-class distance table.

Each curriculum position contributes an advantage term:

* step 1: one minus the population variance of the first task's distances to
  every later task (prefer starting from the most "central" task);
* steps up to the midpoint: the distance to the immediately preceding task
  (prefer consecutive tasks that are far apart, hence easy to separate);
* steps past the midpoint: one minus the distance to the mirrored early task
  (prefer late tasks that echo early ones, a feature-level replay).

The score of a curriculum is the sum of its advantages; higher is better.
All arithmetic is done with plain sequential float operations in a fixed
order so that scores are bit-reproducible regardless of parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Curriculum, TaskSpec, enumerate_curricula
from .distance import DistanceMatrix

DEFAULT_ENUMERATION_LIMIT = math.factorial(10)


class DesignerError(ValueError):
    pass


@dataclass(frozen=True)
class AdvantageBreakdown:
    """Per-step advantages v_1..v_T and their sum (summed in index order)."""

    v: tuple[float, ...]
    s: float


@dataclass(frozen=True)
class RankedCurricula:
    """Curricula with scores, sorted non-increasing; ties broken by the
    lexicographic task-index permutation. ``source`` records how the scores
    were produced (designer / empirical / random)."""

    entries: tuple[tuple[Curriculum, float], ...]
    source: str

    def curricula(self) -> list[Curriculum]:
        return [c for c, _ in self.entries]

    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def to_json(self) -> list[dict]:
        return [{"curriculum": c.to_json(), "score": s} for c, s in self.entries]


def _population_variance(values: Sequence[float]) -> float:
    # Sequential sums, divide by the count: keeps v_1 a fixed function of the
    # listed distances with no sample-correction ambiguity.
    n = len(values)
    total = 0.0
    for x in values:
        total += x
    mean = total / n
    acc = 0.0
    for x in values:
        acc += (x - mean) * (x - mean)
    return acc / n


def _check_matrix(c: Curriculum, d: DistanceMatrix) -> tuple[int, ...]:
    if not d.normalized:
        raise DesignerError("curriculum scoring requires a normalized distance matrix")
    if c.n_tasks < 2:
        raise DesignerError("curriculum scoring needs at least two tasks")
    perm = c.task_index_permutation()
    if d.n != len(perm):
        raise DesignerError(f"matrix is {d.n}x{d.n} but curriculum has {len(perm)} tasks")
    return perm


def advantage(t: int, c: Curriculum, d: DistanceMatrix) -> float:
    """Advantage v_t of the task at curriculum position t (1-indexed)."""
    perm = _check_matrix(c, d)
    n = len(perm)
    if not (1 <= t <= n):
        raise DesignerError(f"step index {t} out of range 1..{n}")
    if t == 1:
        firsts = [d.at(perm[0], perm[j]) for j in range(1, n)]
        return 1.0 - _population_variance(firsts)
    if t <= n // 2:
        return d.at(perm[t - 1], perm[t - 2])
    return 1.0 - d.at(perm[t - 1], perm[n - t])


def score_curriculum(c: Curriculum, d: DistanceMatrix) -> AdvantageBreakdown:
    """All advantage terms for ``c`` plus their in-order sum."""
    perm = _check_matrix(c, d)
    n = len(perm)
    v = []
    firsts = [d.at(perm[0], perm[j]) for j in range(1, n)]
    v.append(1.0 - _population_variance(firsts))
    for t in range(2, n + 1):
        if t <= n // 2:
            v.append(d.at(perm[t - 1], perm[t - 2]))
        else:
            v.append(1.0 - d.at(perm[t - 1], perm[n - t]))
    s = 0.0
    for vt in v:
        s += vt
    return AdvantageBreakdown(v=tuple(v), s=s)


def rank_all(
    tasks: Sequence[TaskSpec],
    d: DistanceMatrix,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> RankedCurricula:
    """Score every task permutation and sort by score, best first."""
    total = math.factorial(len(tasks))
    if total > limit:
        raise DesignerError(
            f"{len(tasks)} tasks give {total} permutations, over the limit of {limit}; "
            "reduce the number of tasks"
        )
    curricula = enumerate_curricula(tasks)
    scored = [(c, score_curriculum(c, d).s) for c in curricula]
    scored.sort(key=lambda item: (-item[1], item[0].task_index_permutation()))
    return RankedCurricula(entries=tuple(scored), source="designer")


def rank_all_with_breakdown(
    tasks: Sequence[TaskSpec],
    d: DistanceMatrix,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> list[dict]:
    """rank_all plus per-step advantages, in rank order, JSON-ready."""
    ranked = rank_all(tasks, d, limit=limit)
    out = []
    for c, s in ranked.entries:
        breakdown = score_curriculum(c, d)
        out.append({"curriculum": c.to_json(), "score": s, "advantages": list(breakdown.v)})
    return out


def random_rank(curricula: Sequence[Curriculum], seed: int) -> RankedCurricula:
    """Seeded uniform shuffle of the curricula; scores are descending rank positions."""
    if len(curricula) == 0:
        raise DesignerError("cannot rank an empty curriculum list")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(curricula))
    n = len(curricula)
    entries = tuple((curricula[i], float(n - pos)) for pos, i in enumerate(order))
    return RankedCurricula(entries=entries, source="random")
