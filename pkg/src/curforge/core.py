"""Domain model: classes, tasks, curricula, accuracy records.

A curriculum is an ordered sequence of tasks, each task an ordered group of
class ids, together covering every class of a dataset exactly once. Only the
task order is permuted; the class order inside a task is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class ValidationError(ValueError):
    """Invalid domain object. ``code`` identifies the failed check."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class TaskSpec:
    """One unit of the incremental sequence: an ordered group of class ids."""

    classes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.classes) == 0:
            raise ValidationError("empty-task", "a task must contain at least one class")
        if any(c < 0 for c in self.classes):
            raise ValidationError("negative-class", f"negative class id in {self.classes}")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("duplicate-class", f"duplicate class id within task {self.classes}")

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class Curriculum:
    """Ordered tasks covering every class exactly once."""

    tasks: tuple[TaskSpec, ...]

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_classes(self) -> int:
        return sum(len(t) for t in self.tasks)

    def class_order(self) -> tuple[int, ...]:
        """All class ids, task by task, in curriculum order."""
        return tuple(c for t in self.tasks for c in t.classes)

    def task_sizes(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.tasks)

    def task_index_permutation(self) -> tuple[int, ...]:
        """Position of each task within the canonical (sorted-by-classes) base set.

        This permutation is the curriculum's canonical identity; all
        deterministic tie-breaking sorts on it.
        """
        base = sorted(self.tasks, key=lambda t: t.classes)
        index = {t.classes: i for i, t in enumerate(base)}
        return tuple(index[t.classes] for t in self.tasks)

    def to_json(self) -> list[list[int]]:
        return [list(t.classes) for t in self.tasks]

    @staticmethod
    def from_json(data: Sequence[Sequence[int]]) -> "Curriculum":
        return Curriculum(tuple(TaskSpec(tuple(int(c) for c in task)) for task in data))


def validate_curriculum(c: Curriculum, n_classes: int) -> None:
    """Raise ValidationError unless ``c`` covers classes 0..n_classes-1 exactly once."""
    seen: set[int] = set()
    for task in c.tasks:
        for cls in task.classes:
            if cls in seen:
                raise ValidationError("duplicate-class", f"class {cls} appears in more than one task")
            if cls >= n_classes:
                raise ValidationError(
                    "unknown-class", f"class {cls} out of range for {n_classes} classes"
                )
            seen.add(cls)
    missing = set(range(n_classes)) - seen
    if missing:
        raise ValidationError("missing-class", f"classes {sorted(missing)} not covered by any task")


def enumerate_curricula(tasks: Sequence[TaskSpec]) -> list[Curriculum]:
    """All |tasks|! task orderings, in lexicographic order of task-index sequences."""
    if len(tasks) == 0:
        raise ValidationError("empty-task-list", "need at least one task")
    seen: set[int] = set()
    for task in tasks:
        for cls in task.classes:
            if cls in seen:
                raise ValidationError("duplicate-class", f"class {cls} appears in more than one task")
            seen.add(cls)
    tasks = tuple(tasks)
    return [Curriculum(tuple(tasks[i] for i in perm)) for perm in permutations(range(len(tasks)))]


def n_curricula(n_tasks: int) -> int:
    return math.factorial(n_tasks)


def curriculum_to_string(c: Curriculum) -> str:
    """Letter encoding: class k becomes the k-th uppercase letter, listed task by task."""
    order = c.class_order()
    if len(order) > len(_LETTERS):
        raise ValidationError(
            "unsupported-size", f"string encoding supports at most {len(_LETTERS)} classes"
        )
    return "".join(_LETTERS[k] for k in order)


def curriculum_from_string(s: str, task_sizes: Iterable[int]) -> Curriculum:
    """Inverse of curriculum_to_string given the per-task class counts."""
    order = [_LETTERS.index(ch) for ch in s]
    tasks = []
    pos = 0
    for size in task_sizes:
        tasks.append(TaskSpec(tuple(order[pos : pos + size])))
        pos += size
    if pos != len(order):
        raise ValidationError("shape-mismatch", "task sizes do not account for every letter")
    return Curriculum(tuple(tasks))


@dataclass(frozen=True)
class AccuracyMatrix:
    """Lower-triangular accuracy table: rows[t-1][j-1] is accuracy on task j's
    test set measured after finishing training task t (1-indexed, j <= t).
    Entries above the diagonal do not exist, they are never zero-filled.
    """

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        for t, row in enumerate(self.rows, start=1):
            if len(row) != t:
                raise ValidationError("ragged-accuracy", f"row {t} must have exactly {t} entries")
            if any(not (0.0 <= a <= 1.0) for a in row):
                raise ValidationError("accuracy-range", f"row {t} has entries outside [0, 1]")

    @property
    def n_tasks(self) -> int:
        return len(self.rows)

    def at(self, t: int, j: int) -> float:
        """Accuracy on task j after training task t (both 1-indexed)."""
        if not (1 <= j <= t <= self.n_tasks):
            raise ValidationError("undefined-entry", f"entry ({t}, {j}) is not defined")
        return self.rows[t - 1][j - 1]

    def to_json(self) -> list[list[float]]:
        return [list(row) for row in self.rows]

    @staticmethod
    def from_json(data: Sequence[Sequence[float]]) -> "AccuracyMatrix":
        return AccuracyMatrix(tuple(tuple(float(a) for a in row) for row in data))


@dataclass(frozen=True)
class RunRecord:
    """Result of one (curriculum, strategy, seed) training run."""

    curriculum: Curriculum
    strategy: str
    seed: int
    acc: AccuracyMatrix
    alpha: float
    beta: float
    f: float

    def to_json(self) -> dict:
        return {
            "curriculum": self.curriculum.to_json(),
            "strategy": self.strategy,
            "seed": self.seed,
            "acc": self.acc.to_json(),
            "alpha": self.alpha,
            "beta": self.beta,
            "f": self.f,
        }

    @staticmethod
    def from_json(data: dict) -> "RunRecord":
        return RunRecord(
            curriculum=Curriculum.from_json(data["curriculum"]),
            strategy=data["strategy"],
            seed=int(data["seed"]),
            acc=AccuracyMatrix.from_json(data["acc"]),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            f=float(data["f"]),
        )
