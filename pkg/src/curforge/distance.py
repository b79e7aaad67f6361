"""Class prototypes and the inter-class distance table that drives curriculum scoring.

Prototypes are (sampled) mean feature vectors per class. Pairwise prototype
distances form a symmetric matrix which is, by default, normalized so the
largest off-diagonal entry is 1; the scorer's complement terms assume
distances in [0, 1]. The matrix is stored once in fixed class/task order and
reindexed per curriculum, never rebuilt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

METRICS = ("cosine", "euclidean")


class DistanceError(ValueError):
    pass


@dataclass(frozen=True)
class Prototype:
    """Mean feature vector of (a sample of) one class or one task."""

    label: int
    mean: np.ndarray
    sample_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        if self.mean.ndim != 1:
            raise DistanceError("prototype mean must be a 1-d vector")
        if not np.all(np.isfinite(self.mean)):
            raise DistanceError("prototype mean has non-finite entries")
        if self.sample_count < 1:
            raise DistanceError("sample_count must be positive")


def compute_prototype(
    features: Sequence[np.ndarray] | np.ndarray,
    sample_size: int,
    rng_seed: int,
    label: int = 0,
) -> Prototype:
    """Mean over a seeded uniform sample (without replacement) of the vectors.

    When sample_size covers the whole population the result is the exact full
    mean, independent of the seed.
    """
    mat = np.asarray(features, dtype=np.float64)
    if mat.size == 0:
        raise DistanceError("cannot build a prototype from an empty feature list")
    if mat.ndim == 1:
        mat = mat[None, :]
    if mat.ndim != 2:
        raise DistanceError("features must be a list of equal-length vectors")
    if sample_size < 1:
        raise DistanceError("sample_size must be positive")
    n = mat.shape[0]
    if sample_size >= n:
        chosen = mat
        count = n
    else:
        rng = np.random.default_rng(rng_seed)
        idx = rng.choice(n, size=sample_size, replace=False)
        chosen = mat[np.sort(idx)]
        count = sample_size
    return Prototype(label=label, mean=chosen.mean(axis=0), sample_count=count)


def task_prototype(members: Sequence[Prototype], label: int = 0) -> Prototype:
    """Prototype of a multi-class task: plain mean of member prototype means."""
    if len(members) == 0:
        raise DistanceError("task_prototype needs at least one member")
    dims = {m.mean.shape[0] for m in members}
    if len(dims) != 1:
        raise DistanceError(f"member prototypes disagree on dimension: {sorted(dims)}")
    stacked = np.stack([m.mean for m in members])
    return Prototype(
        label=label,
        mean=stacked.mean(axis=0),
        sample_count=sum(m.sample_count for m in members),
    )


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(angle between a and b), in [0, 2]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DistanceError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DistanceError("cosine distance is undefined for zero-norm vectors")
    # rounding can push the cosine of (anti)parallel vectors a hair past +/-1
    return min(2.0, max(0.0, 1.0 - float(np.dot(a, b)) / (na * nb)))


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DistanceError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


_METRIC_FNS = {"cosine": cosine_distance, "euclidean": euclidean_distance}


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise prototype distances with zero diagonal.

    ``d[i][j]`` is the distance between prototypes i and j in the fixed base
    order. Curriculum-relative lookups remap indices through the curriculum's
    permutation instead of rebuilding the table.
    """

    d: np.ndarray
    metric: str
    normalized: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "d", np.asarray(self.d, dtype=np.float64))
        if self.d.ndim != 2 or self.d.shape[0] != self.d.shape[1]:
            raise DistanceError("distance matrix must be square")
        if self.metric not in METRICS:
            raise DistanceError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if not np.allclose(self.d, self.d.T, atol=0.0):
            raise DistanceError("distance matrix must be symmetric")
        if np.any(np.diag(self.d) != 0.0):
            raise DistanceError("distance matrix must have a zero diagonal")
        if np.any(self.d < 0.0):
            raise DistanceError("distances cannot be negative")

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def at(self, i: int, j: int) -> float:
        return float(self.d[i, j])

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "normalized": self.normalized,
            "n": self.n,
            "d": [float(x) for x in self.d.reshape(-1)],
        }

    @staticmethod
    def from_json(data: dict) -> "DistanceMatrix":
        n = int(data["n"])
        flat = np.asarray(data["d"], dtype=np.float64)
        if flat.size != n * n:
            raise DistanceError(f"expected {n * n} entries, got {flat.size}")
        return DistanceMatrix(d=flat.reshape(n, n), metric=data["metric"], normalized=bool(data["normalized"]))


def build_distance_matrix(
    prototypes: Sequence[Prototype], metric: str = "cosine", normalize: bool = True
) -> DistanceMatrix:
    """Pairwise prototype distances; optionally scaled so max off-diagonal = 1."""
    if len(prototypes) < 2:
        raise DistanceError("need at least two prototypes")
    if metric not in _METRIC_FNS:
        raise DistanceError(f"unknown metric {metric!r}; expected one of {METRICS}")
    fn = _METRIC_FNS[metric]
    n = len(prototypes)
    d = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            dist = fn(prototypes[i].mean, prototypes[j].mean)
            d[i, j] = dist
            d[j, i] = dist
    if normalize:
        peak = float(d.max())
        if peak > 0.0:
            d = d / peak
            np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d=d, metric=metric, normalized=normalize)
