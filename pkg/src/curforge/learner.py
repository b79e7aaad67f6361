"""Online class-incremental training of a linear softmax head on frozen features.

The head is fixed-size (one logit per dataset class); the softmax is masked
to the classes seen so far, both in training and in evaluation. Four
strategies: plain fine-tuning (vanilla), a quadratic penalty anchored at
per-task parameter snapshots weighted by a diagonal Fisher estimate (ewc),
distillation of the pre-task model's softened outputs (lwf), and batch-level
rehearsal from a bounded memory buffer (replay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .core import AccuracyMatrix, Curriculum, RunRecord, validate_curriculum
from .metrics import alpha_beta, effectiveness

STRATEGIES = ("vanilla", "ewc", "lwf", "replay")
INIT_KINDS = ("gaussian", "uniform", "xavier")


class LearnerError(ValueError):
    pass


@dataclass(frozen=True)
class HeadParams:
    W: np.ndarray  # (n_classes, dim)
    b: np.ndarray  # (n_classes,)

    def copy(self) -> "HeadParams":
        return HeadParams(W=self.W.copy(), b=self.b.copy())


@dataclass(frozen=True)
class HeadGrads:
    dW: np.ndarray
    db: np.ndarray


@dataclass(frozen=True)
class AdamState:
    mW: np.ndarray
    vW: np.ndarray
    mb: np.ndarray
    vb: np.ndarray
    step_count: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def fresh(n_classes: int, dim: int, lr: float = 1e-3) -> "AdamState":
        return AdamState(
            mW=np.zeros((n_classes, dim)),
            vW=np.zeros((n_classes, dim)),
            mb=np.zeros(n_classes),
            vb=np.zeros(n_classes),
            step_count=0,
            lr=lr,
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1  # 1 = online, single pass
    batch_size: int = 32
    lr: float = 1e-3
    lam_ewc: float = 100.0
    lam_lwf: float = 1.0
    tau: float = 2.0
    buffer_fraction: float = 0.02
    buffer_policy: str = "global"  # "global" (fixed total) or "per-task"
    shuffle_within_task: bool = False
    seed: int = 0
    init: str = "gaussian"
    init_seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise LearnerError("epochs must be >= 1")
        if self.batch_size < 1:
            raise LearnerError("batch_size must be >= 1")
        if not (0.0 < self.buffer_fraction <= 1.0):
            raise LearnerError("buffer_fraction must be in (0, 1]")
        if self.buffer_policy not in ("global", "per-task"):
            raise LearnerError(f"unknown buffer policy {self.buffer_policy!r}")
        if self.init not in INIT_KINDS:
            raise LearnerError(f"unknown init {self.init!r}; expected one of {INIT_KINDS}")


# ---------------------------------------------------------------------------
# strategy state


@dataclass(frozen=True)
class VanillaState:
    pass


@dataclass(frozen=True)
class EwcAnchor:
    W_star: np.ndarray
    b_star: np.ndarray
    fisher_W: np.ndarray  # elementwise importance, >= 0
    fisher_b: np.ndarray
    lam: float


@dataclass(frozen=True)
class EwcState:
    anchors: tuple[EwcAnchor, ...] = ()


@dataclass(frozen=True)
class LwfState:
    old: HeadParams | None  # snapshot taken at the task boundary
    prev_classes: tuple[int, ...]  # classes seen before the current task
    lam: float
    tau: float


class ReplayBuffer:
    """Bounded memory of past examples.

    Under the "global" policy the buffer is a single reservoir of fixed
    capacity holding a uniform sample of every example absorbed so far.
    Under the "per-task" policy each absorbed task contributes its own
    uniform sample of ceil(fraction * task size) examples, so the buffer
    grows with the number of completed tasks.
    """

    def __init__(self, dim: int, policy: str = "global", capacity: int = 0, fraction: float = 0.1):
        if policy not in ("global", "per-task"):
            raise LearnerError(f"unknown buffer policy {policy!r}")
        if policy == "global" and capacity < 1:
            raise LearnerError("global replay buffer needs capacity >= 1")
        self.policy = policy
        self.capacity = capacity
        self.fraction = fraction
        self.xs = np.empty((0, dim))
        self.ys = np.empty(0, dtype=np.int64)
        self._stream_count = 0  # examples offered so far (global reservoir)

    def __len__(self) -> int:
        return len(self.ys)

    def sample(self, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        k = min(k, len(self.ys))
        idx = rng.choice(len(self.ys), size=k, replace=False)
        return self.xs[idx], self.ys[idx]


def update_replay_buffer(
    buf: ReplayBuffer, task_data: tuple[np.ndarray, np.ndarray], rng: np.random.Generator | int
) -> ReplayBuffer:
    """Absorb a finished task's examples into the buffer (mutates and returns it)."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    X, y = task_data
    if buf.policy == "per-task":
        take = max(1, math.ceil(buf.fraction * len(y)))
        take = min(take, len(y))
        idx = np.sort(rng.choice(len(y), size=take, replace=False))
        buf.xs = np.concatenate([buf.xs, X[idx]])
        buf.ys = np.concatenate([buf.ys, y[idx]])
        return buf
    # global policy: classic reservoir, uniform over the whole stream
    for i in range(len(y)):
        buf._stream_count += 1
        if len(buf.ys) < buf.capacity:
            buf.xs = np.concatenate([buf.xs, X[i : i + 1]])
            buf.ys = np.concatenate([buf.ys, y[i : i + 1]])
        else:
            j = int(rng.integers(0, buf._stream_count))
            if j < buf.capacity:
                buf.xs[j] = X[i]
                buf.ys[j] = y[i]
    return buf


StrategyState = VanillaState | EwcState | LwfState


# ---------------------------------------------------------------------------
# head initialization, forward, loss, optimizer


def init_head(n_classes: int, dim: int, kind: str = "gaussian", seed: int = 0) -> HeadParams:
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        W = rng.normal(0.0, 0.01, size=(n_classes, dim))
    elif kind == "uniform":
        W = rng.uniform(-0.05, 0.05, size=(n_classes, dim))
    elif kind == "xavier":
        bound = math.sqrt(6.0 / (n_classes + dim))
        W = rng.uniform(-bound, bound, size=(n_classes, dim))
    else:
        raise LearnerError(f"unknown init {kind!r}; expected one of {INIT_KINDS}")
    return HeadParams(W=W, b=np.zeros(n_classes))


def forward(h: HeadParams, x: np.ndarray) -> np.ndarray:
    """Logits W x + b for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != h.W.shape[1]:
        raise LearnerError(f"feature dimension {x.shape} does not match head {h.W.shape}")
    return h.W @ x + h.b


def _masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    z = np.where(mask, logits, -np.inf)
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    expz = np.where(mask, np.exp(shifted), 0.0)
    return shifted - np.log(expz.sum(axis=1, keepdims=True))


def _softmax_over(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    return expz / expz.sum(axis=1, keepdims=True)


def loss_and_grad(
    h: HeadParams,
    batch: tuple[np.ndarray, np.ndarray],
    seen_mask: np.ndarray,
    strategy: StrategyState,
) -> tuple[float, HeadGrads]:
    """Masked cross-entropy plus the strategy's regularizer, with exact gradients.

    The softmax runs over seen classes only; labels must lie inside the seen
    set. Regularizers: sum over anchors of lam/2 * F * (theta - theta*)^2 for
    ewc, and lam * tau^2 * KL(old_soft || new_soft) over previously seen
    classes for lwf.
    """
    X, y = batch
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    mask = np.asarray(seen_mask, dtype=bool)
    if X.ndim != 2 or X.shape[1] != h.W.shape[1]:
        raise LearnerError("batch feature dimension does not match head")
    if np.any(~mask[y]):
        bad = sorted(set(int(c) for c in y[~mask[y]]))
        raise LearnerError(f"batch labels {bad} are outside the seen class set")
    n = X.shape[0]

    logits = X @ h.W.T + h.b
    log_p = _masked_log_softmax(logits, mask[None, :])
    loss = -float(log_p[np.arange(n), y].sum()) / n

    probs = np.where(mask[None, :], np.exp(log_p), 0.0)
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    dW = delta.T @ X
    db = delta.sum(axis=0)

    if isinstance(strategy, EwcState):
        for a in strategy.anchors:
            dw_pen = h.W - a.W_star
            db_pen = h.b - a.b_star
            loss += 0.5 * a.lam * (
                float((a.fisher_W * dw_pen**2).sum()) + float((a.fisher_b * db_pen**2).sum())
            )
            dW += a.lam * a.fisher_W * dw_pen
            db += a.lam * a.fisher_b * db_pen
    elif isinstance(strategy, LwfState):
        if strategy.old is not None and len(strategy.prev_classes) > 0:
            prev = np.asarray(strategy.prev_classes, dtype=np.int64)
            tau = strategy.tau
            z_old = (X @ strategy.old.W.T + strategy.old.b)[:, prev] / tau
            z_new = logits[:, prev] / tau
            p_old = _softmax_over(z_old)
            p_new = _softmax_over(z_new)
            kl = (p_old * (np.log(p_old) - np.log(p_new))).sum(axis=1)
            loss += strategy.lam * tau**2 * float(kl.mean())
            d_prev = strategy.lam * tau * (p_new - p_old) / n
            dW[prev] += d_prev.T @ X
            db[prev] += d_prev.sum(axis=0)
    return loss, HeadGrads(dW=dW, db=db)


def adam_step(h: HeadParams, grads: HeadGrads, st: AdamState) -> tuple[HeadParams, AdamState]:
    """One bias-corrected Adam update; rejects non-finite gradients."""
    if not (np.all(np.isfinite(grads.dW)) and np.all(np.isfinite(grads.db))):
        raise LearnerError("non-finite gradient; aborting the run")
    t = st.step_count + 1
    mW = st.beta1 * st.mW + (1 - st.beta1) * grads.dW
    vW = st.beta2 * st.vW + (1 - st.beta2) * grads.dW**2
    mb = st.beta1 * st.mb + (1 - st.beta1) * grads.db
    vb = st.beta2 * st.vb + (1 - st.beta2) * grads.db**2
    c1 = 1 - st.beta1**t
    c2 = 1 - st.beta2**t
    W = h.W - st.lr * (mW / c1) / (np.sqrt(vW / c2) + st.eps)
    b = h.b - st.lr * (mb / c1) / (np.sqrt(vb / c2) + st.eps)
    return HeadParams(W=W, b=b), replace(st, mW=mW, vW=vW, mb=mb, vb=vb, step_count=t)


def consolidate_ewc(
    h: HeadParams,
    task_data: tuple[np.ndarray, np.ndarray],
    seen_mask: np.ndarray,
    lam: float,
) -> EwcAnchor:
    """Anchor the current parameters with a diagonal Fisher estimate: the mean
    over task examples of the squared per-example cross-entropy gradient."""
    X, y = task_data
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise LearnerError("cannot consolidate from empty task data")
    mask = np.asarray(seen_mask, dtype=bool)
    n = X.shape[0]
    logits = X @ h.W.T + h.b
    probs = np.where(mask[None, :], np.exp(_masked_log_softmax(logits, mask[None, :])), 0.0)
    delta = probs
    delta[np.arange(n), y] -= 1.0
    # per-example grad for W[k, j] is delta[i, k] * X[i, j]; square then average
    fisher_W = (delta**2).T @ (X**2) / n
    fisher_b = (delta**2).mean(axis=0)
    return EwcAnchor(
        W_star=h.W.copy(), b_star=h.b.copy(), fisher_W=fisher_W, fisher_b=fisher_b, lam=lam
    )


# ---------------------------------------------------------------------------
# the run loop


def iter_batches(n: int, batch_size: int, order: np.ndarray) -> Iterator[np.ndarray]:
    """Split ``order`` (a permutation of range(n)) into consecutive batches."""
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def evaluate_accuracy(
    h: HeadParams, X: np.ndarray, y: np.ndarray, seen_mask: np.ndarray
) -> float:
    """Fraction of correct argmax predictions, logits masked to seen classes."""
    logits = np.asarray(X, dtype=np.float64) @ h.W.T + h.b
    logits = np.where(np.asarray(seen_mask, dtype=bool)[None, :], logits, -np.inf)
    pred = logits.argmax(axis=1)
    return float((pred == np.asarray(y)).mean())


def _task_arrays(dataset, task, split: str) -> tuple[np.ndarray, np.ndarray]:
    per_class = dataset.train if split == "train" else dataset.test
    xs = [per_class[k] for k in task.classes]
    ys = [np.full(len(per_class[k]), k, dtype=np.int64) for k in task.classes]
    return np.concatenate(xs), np.concatenate(ys)


def run_curriculum(dataset, c: Curriculum, strategy: str, cfg: TrainConfig) -> RunRecord:
    """Train through the curriculum task by task and record per-task accuracies.

    Online protocol: each training example feeds exactly one gradient step per
    epoch (replay reuse aside). After each task, accuracy is measured on every
    seen task's test split with the argmax restricted to seen classes.
    """
    if strategy not in STRATEGIES:
        raise LearnerError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    validate_curriculum(c, dataset.n_classes)
    n_classes, dim = dataset.n_classes, dataset.dim

    head = init_head(n_classes, dim, cfg.init, cfg.init_seed)
    adam = AdamState.fresh(n_classes, dim, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)

    buf: ReplayBuffer | None = None
    if strategy == "replay":
        if cfg.buffer_policy == "global":
            total_train = sum(len(dataset.train[k]) for k in range(n_classes))
            capacity = max(1, round(cfg.buffer_fraction * total_train))
        else:
            capacity = 0
        buf = ReplayBuffer(dim, cfg.buffer_policy, capacity=capacity, fraction=cfg.buffer_fraction)

    anchors: list[EwcAnchor] = []
    lwf_old: HeadParams | None = None
    lwf_prev: tuple[int, ...] = ()
    seen: list[int] = []
    rows: list[tuple[float, ...]] = []

    for t, task in enumerate(c.tasks, start=1):
        try:
            if strategy == "lwf" and t >= 2:
                lwf_old = head.copy()
                lwf_prev = tuple(seen)
            seen.extend(task.classes)
            mask = np.zeros(n_classes, dtype=bool)
            mask[seen] = True

            if strategy == "ewc":
                state: StrategyState = EwcState(anchors=tuple(anchors))
            elif strategy == "lwf":
                state = LwfState(old=lwf_old, prev_classes=lwf_prev, lam=cfg.lam_lwf, tau=cfg.tau)
            else:
                state = VanillaState()

            X, y = _task_arrays(dataset, task, "train")
            for _ in range(cfg.epochs):
                if cfg.shuffle_within_task:
                    order = rng.permutation(len(y))
                else:
                    order = np.arange(len(y))
                for idx in iter_batches(len(y), cfg.batch_size, order):
                    bx, by = X[idx], y[idx]
                    if buf is not None and len(buf) > 0:
                        rx, ry = buf.sample(len(idx), rng)
                        bx = np.concatenate([bx, rx])
                        by = np.concatenate([by, ry])
                    _, grads = loss_and_grad(head, (bx, by), mask, state)
                    head, adam = adam_step(head, grads, adam)

            row = []
            for j in range(t):
                tx, ty = _task_arrays(dataset, c.tasks[j], "test")
                row.append(evaluate_accuracy(head, tx, ty, mask))
            rows.append(tuple(row))

            if strategy == "ewc":
                anchors.append(consolidate_ewc(head, (X, y), mask, cfg.lam_ewc))
            if buf is not None:
                update_replay_buffer(buf, (X, y), rng)
        except Exception as exc:
            raise LearnerError(f"run failed at task {t}: {exc}") from exc

    acc = AccuracyMatrix(tuple(rows))
    alpha, beta = alpha_beta(acc, acc.n_tasks, task_sizes=c.task_sizes())
    f = effectiveness(alpha, beta)
    return RunRecord(
        curriculum=c, strategy=strategy, seed=cfg.seed, acc=acc, alpha=alpha, beta=beta, f=f
    )
