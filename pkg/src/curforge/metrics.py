"""Effectiveness and agreement metrics for curriculum experiments.

Effectiveness combines average seen-class accuracy (alpha) with first-task
forgetting (beta) as f = 2 / (beta + 1/alpha): a harmonic-style score that
punishes either learning nothing or forgetting everything. Agreement between
ranked curriculum sets is measured three ways: top-K overlap (recall),
Spearman rank correlation over the full order, and a string-interleaving
Hamming discrepancy that is sensitive to class order inside the curricula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import AccuracyMatrix, Curriculum, curriculum_to_string
from .designer import RankedCurricula
from .special import student_t_two_sided_p

_DENOM_FLOOR = 1e-9


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class Effectiveness:
    alpha: float
    beta: float
    f: float


def alpha_beta(
    acc: AccuracyMatrix, at_task: int, task_sizes: Sequence[int] | None = None
) -> tuple[float, float]:
    """Average seen-task accuracy (class-count weighted) and first-task drop
    after training task ``at_task``."""
    if not (1 <= at_task <= acc.n_tasks):
        raise MetricsError(f"task index {at_task} outside recorded range 1..{acc.n_tasks}")
    if task_sizes is None:
        weights = [1.0] * at_task
    else:
        if len(task_sizes) < at_task:
            raise MetricsError("task_sizes shorter than the evaluation point")
        weights = [float(s) for s in task_sizes[:at_task]]
    total = sum(weights)
    alpha = sum(w * acc.at(at_task, j + 1) for j, w in enumerate(weights)) / total
    beta = acc.at(1, 1) - acc.at(at_task, 1)
    return alpha, beta


def effectiveness(alpha: float, beta: float) -> float:
    """f = 2 / (beta + 1/alpha), with f = 0 when alpha = 0."""
    if not (0.0 <= alpha <= 1.0):
        raise MetricsError(f"alpha {alpha} outside [0, 1]")
    if not (-1.0 <= beta <= 1.0):
        raise MetricsError(f"beta {beta} outside [-1, 1]")
    if alpha == 0.0:
        return 0.0
    denom = beta + 1.0 / alpha
    if denom < _DENOM_FLOOR:
        denom = _DENOM_FLOOR
    return 2.0 / denom


@dataclass(frozen=True)
class FOverTime:
    """Per-task f for a run plus analytic reference curves for the same task
    shapes: a uniform-guess-over-seen-classes model and a model that is
    perfect on the current task but forgets everything else."""

    f: tuple[float, ...]
    random_baseline: tuple[float, ...]
    overfit_baseline: tuple[float, ...]


def random_baseline_f(task_sizes: Sequence[int]) -> tuple[float, ...]:
    out = []
    seen = 0
    first = task_sizes[0]
    for size in task_sizes:
        seen += size
        alpha = 1.0 / seen
        beta = 1.0 / first - 1.0 / seen
        out.append(effectiveness(alpha, beta))
    return tuple(out)


def overfit_baseline_f(task_sizes: Sequence[int]) -> tuple[float, ...]:
    out = []
    seen = 0
    for t, size in enumerate(task_sizes, start=1):
        seen += size
        if t == 1:
            out.append(effectiveness(1.0, 0.0))
        else:
            out.append(effectiveness(size / seen, 1.0))
    return tuple(out)


def f_over_time(acc: AccuracyMatrix, task_sizes: Sequence[int] | None = None) -> FOverTime:
    sizes = tuple(task_sizes) if task_sizes is not None else (1,) * acc.n_tasks
    if len(sizes) != acc.n_tasks:
        raise MetricsError("task_sizes length does not match the accuracy matrix")
    fs = []
    for t in range(1, acc.n_tasks + 1):
        a, b = alpha_beta(acc, t, sizes)
        fs.append(effectiveness(a, b))
    return FOverTime(
        f=tuple(fs),
        random_baseline=random_baseline_f(sizes),
        overfit_baseline=overfit_baseline_f(sizes),
    )


# ---------------------------------------------------------------------------
# ranking agreement


def _key(c: Curriculum):
    return tuple(t.classes for t in c.tasks)


def _universe(r: RankedCurricula) -> set:
    return {_key(c) for c, _ in r.entries}


def recall_at_k(cd: RankedCurricula, empirical: Sequence[RankedCurricula], k: int) -> float:
    """Fraction of the designer's top-k found in the union of the empirical top-ks."""
    if k < 1 or k > len(cd.entries):
        raise MetricsError(f"k must be in 1..{len(cd.entries)}")
    cd_universe = _universe(cd)
    union: set = set()
    for ranking in empirical:
        if _universe(ranking) != cd_universe:
            raise MetricsError("rankings cover different curriculum universes")
        union.update(_key(c) for c, _ in ranking.entries[:k])
    top = {_key(c) for c, _ in cd.entries[:k]}
    return len(top & union) / k


@dataclass(frozen=True)
class TierPartition:
    """Five uniform-width bins over the observed f range; tier 5 is the best.

    ``members[i]`` holds tier i+1's (curriculum, f) pairs sorted by f
    descending. Values exactly on a bin edge go to the higher tier.
    """

    bounds: tuple[float, ...]
    members: tuple[tuple[tuple[Curriculum, float], ...], ...]

    @property
    def top_tier(self) -> tuple[tuple[Curriculum, float], ...]:
        return self.members[-1]


def tier_partition(records: Sequence[tuple[Curriculum, float]]) -> TierPartition:
    if len(records) == 0:
        raise MetricsError("cannot tier an empty record set")
    fs = [f for _, f in records]
    lo, hi = min(fs), max(fs)
    ordered = sorted(records, key=lambda item: -item[1])
    if hi == lo:
        bounds = tuple([lo] * 6)
        members = tuple([()] * 4 + [tuple(ordered)])
        return TierPartition(bounds=bounds, members=members)
    width = (hi - lo) / 5.0
    bounds = tuple(lo + i * width for i in range(6))
    tiers: list[list[tuple[Curriculum, float]]] = [[] for _ in range(5)]
    for c, f in ordered:
        idx = int(math.floor((f - lo) * 5.0 / (hi - lo)))
        if idx > 4:
            idx = 4
        tiers[idx].append((c, f))
    return TierPartition(bounds=bounds, members=tuple(tuple(t) for t in tiers))


def interleave_concat(curricula: Sequence[Curriculum]) -> str:
    """Position-wise interleaving of the curricula's letter encodings: for each
    class position, emit that position's letter from every curriculum in order."""
    if len(curricula) == 0:
        raise MetricsError("cannot interleave an empty curriculum set")
    strings = [curriculum_to_string(c) for c in curricula]
    length = len(strings[0])
    if any(len(s) != length for s in strings):
        raise MetricsError("curricula must have the same number of classes")
    return "".join(s[p] for p in range(length) for s in strings)


def _hamming_fraction(a: str, b: str) -> float:
    if len(a) != len(b):
        raise MetricsError("cannot compare strings of different lengths")
    if len(a) == 0:
        return 0.0
    return sum(1 for x, y in zip(a, b) if x != y) / len(a)


def discrepancy_h(
    set_a: Sequence[Curriculum],
    set_b: Sequence[Curriculum],
    n_a: int | None = None,
    n_b: int | None = None,
) -> float:
    """Mean Hamming discrepancy between two ranked curriculum sets.

    Each pass uses one set's size as the reference count, truncates both
    ranked lists to that many curricula (never more than either list holds),
    interleaves each into a string, and takes the mismatch fraction. The
    result is the mean over the two passes; identical ordered sets give 0.
    """
    if len(set_a) == 0 or len(set_b) == 0:
        raise MetricsError("cannot compare empty curriculum sets")
    n_a = len(set_a) if n_a is None else n_a
    n_b = len(set_b) if n_b is None else n_b
    passes = []
    for ref in (n_a, n_b):
        n = min(ref, len(set_a), len(set_b))
        if n < 1:
            raise MetricsError("reference count must be at least 1")
        passes.append(
            _hamming_fraction(interleave_concat(set_a[:n]), interleave_concat(set_b[:n]))
        )
    return (passes[0] + passes[1]) / 2.0


def _average_ranks(ranking: RankedCurricula) -> dict:
    """Map curriculum key -> rank position (1 = best), averaging tied scores."""
    entries = ranking.entries
    ranks: dict = {}
    i = 0
    while i < len(entries):
        j = i
        while j < len(entries) and entries[j][1] == entries[i][1]:
            j += 1
        avg = (i + 1 + j) / 2.0  # mean of positions i+1 .. j
        for k in range(i, j):
            ranks[_key(entries[k][0])] = avg
        i = j
    return ranks


def spearman(rank_a: RankedCurricula, rank_b: RankedCurricula) -> float:
    """Spearman rho between two rankings of the same curricula (average ranks
    for ties)."""
    if _universe(rank_a) != _universe(rank_b):
        raise MetricsError("rankings cover different curriculum universes")
    ra = _average_ranks(rank_a)
    rb = _average_ranks(rank_b)
    keys = sorted(ra.keys())
    xs = [ra[k] for k in keys]
    ys = [rb[k] for k in keys]
    n = len(keys)
    if n < 2:
        raise MetricsError("need at least two curricula for a correlation")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise MetricsError("a ranking with all-tied scores has no defined correlation")
    return sxy / math.sqrt(sxx * syy)


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float


def two_sample_ttest(
    xs: Sequence[float], ys: Sequence[float], equal_var: bool = False
) -> TTestResult:
    """Two-sample t-test, Welch by default (Welch-Satterthwaite dof); set
    ``equal_var`` for the pooled-variance variant. Two-sided p-value."""
    n1, n2 = len(xs), len(ys)
    if n1 < 2 or n2 < 2:
        raise MetricsError("each sample needs at least two observations")
    m1 = sum(xs) / n1
    m2 = sum(ys) / n2
    v1 = sum((x - m1) ** 2 for x in xs) / (n1 - 1)
    v2 = sum((y - m2) ** 2 for y in ys) / (n2 - 1)
    if equal_var:
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2)
        if pooled == 0.0:
            raise MetricsError("degenerate (zero) variance in both samples")
        se = math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
        df = float(n1 + n2 - 2)
    else:
        q1 = v1 / n1
        q2 = v2 / n2
        if q1 + q2 == 0.0:
            raise MetricsError("degenerate (zero) variance in both samples")
        se = math.sqrt(q1 + q2)
        df = (q1 + q2) ** 2 / (
            (q1**2 / (n1 - 1) if q1 > 0 else 0.0) + (q2**2 / (n2 - 1) if q2 > 0 else 0.0)
        )
    t = (m1 - m2) / se
    return TTestResult(t=t, p=student_t_two_sided_p(t, df), df=df)
