"""Few-shot outlier exposure: train a small head on frozen embeddings, score p(in|x).

The head is either linear or a one-hidden-layer ReLU MLP, trained with
minibatch cross-entropy plus an L2 penalty on weights (biases excluded)
using Adam. OOD rows are oversampled so classes are approximately
balanced; the replication factor defaults to (n_in/n_oe) * (O/K).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .embed_store import ClassPartition, EmbeddingSet, read_container, write_container
from .metrics import ScoreSet, auroc
from .probs import softmax

HEAD_MAGIC = b"OODHED01"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class OeConfig:
    """Training configuration; defaults follow the linear-head recipe."""

    head_kind: str = "linear"  # or "mlp_one_hidden"
    hidden_units: int = 1024
    batch_size: int = 200
    learning_rate: float = 1e-3
    l2_penalty: float = 1.0
    max_steps: int = 1000
    seed: int = 0
    oversample_override: float | None = None
    eval_every: int = 100

    def __post_init__(self):
        if self.head_kind not in ("linear", "mlp_one_hidden"):
            raise ValueError(f"unknown head_kind {self.head_kind!r}")
        for name in ("hidden_units", "batch_size", "max_steps", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be non-negative")
        if self.oversample_override is not None and self.oversample_override <= 0:
            raise ValueError("oversample_override must be positive")


def mlp_config(**overrides) -> OeConfig:
    """The one-hidden-layer recipe: 1024 units, 10k steps, lr 1e-3."""
    base = dict(head_kind="mlp_one_hidden", hidden_units=1024, max_steps=10000)
    base.update(overrides)
    return OeConfig(**base)


@dataclass
class OeHead:
    """A trained head h(z) -> p over K in-distribution + O' outlier classes."""

    layers: list[tuple[np.ndarray, np.ndarray]]  # [(W, b), ...]
    head_kind: str
    partition: ClassPartition
    in_class_ids: list[int]
    out_class_ids: list[int]  # empty in collapsed mode
    config: OeConfig
    gamma: float = 1.0
    training_log: list[float] = field(default_factory=list)

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def out_width(self) -> int:
        return self.layers[-1][0].shape[1]


def oversampling_factor(n_in: int, n_oe: int, k: int, o: int) -> float:
    """(n_in / n_oe) * (o / k): replication rate that roughly balances classes."""
    if min(n_in, n_oe, k, o) < 1:
        raise ValueError("all counts must be >= 1")
    return (n_in / n_oe) * (o / k)


def _init_layers(rng: np.random.Generator, dims: list[int]) -> list:
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append((w, np.zeros(fan_out)))
    return layers


def _forward(layers, head_kind: str, x: np.ndarray):
    """Returns (logits, hidden activation or None)."""
    if head_kind == "linear":
        (w, b) = layers[0]
        return x @ w + b, None
    (w1, b1), (w2, b2) = layers
    h = np.maximum(x @ w1 + b1, 0.0)
    return h @ w2 + b2, h


def forward_probs(head: OeHead, x: np.ndarray) -> np.ndarray:
    logits, _ = _forward(head.layers, head.head_kind, x)
    return softmax(logits)


def _loss_and_grads(layers, head_kind, x, y, l2):
    """Mean cross-entropy + 0.5*l2*||W||^2 (weights only); analytic gradients."""
    logits, h = _forward(layers, head_kind, x)
    p = softmax(logits)
    n = x.shape[0]
    eps = np.finfo(np.float64).tiny
    ce = -np.log(np.maximum(p[np.arange(n), y], eps)).mean()
    loss = ce + 0.5 * l2 * sum(float((w * w).sum()) for w, _ in layers)

    dlogits = p.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    if head_kind == "linear":
        (w, _) = layers[0]
        grads = [(x.T @ dlogits + l2 * w, dlogits.sum(axis=0))]
    else:
        (w1, _), (w2, _) = layers
        gw2 = h.T @ dlogits + l2 * w2
        gb2 = dlogits.sum(axis=0)
        dh = (dlogits @ w2.T) * (h > 0.0)
        gw1 = x.T @ dh + l2 * w1
        gb1 = dh.sum(axis=0)
        grads = [(gw1, gb1), (gw2, gb2)]
    return loss, grads


def head_loss(head: OeHead, batch: EmbeddingSet) -> float:
    """Training objective on a batch whose labels are head-space indices."""
    if batch.labels is None:
        raise ValueError("batch must carry head-space labels")
    loss, _ = _loss_and_grads(
        head.layers,
        head.head_kind,
        batch.data.astype(np.float64),
        batch.labels.astype(np.int64),
        head.config.l2_penalty,
    )
    return loss


def head_gradient(head: OeHead, batch: EmbeddingSet) -> np.ndarray:
    """Flat analytic gradient of the training objective on a batch.

    Parameter order is W then b per layer, input to output, each
    flattened row-major.
    """
    if batch.labels is None:
        raise ValueError("batch must carry head-space labels")
    if batch.dim != head.in_dim:
        raise ValueError(f"batch dim {batch.dim} != head input dim {head.in_dim}")
    _, grads = _loss_and_grads(
        head.layers,
        head.head_kind,
        batch.data.astype(np.float64),
        batch.labels.astype(np.int64),
        head.config.l2_penalty,
    )
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in grads])


def flatten_params(head: OeHead) -> np.ndarray:
    """Parameters in the same flat order head_gradient uses."""
    return np.concatenate(
        [np.concatenate([w.ravel(), b.ravel()]) for w, b in head.layers]
    )


def set_flat_params(head: OeHead, flat: np.ndarray) -> None:
    pos = 0
    new_layers = []
    for w, b in head.layers:
        nw = flat[pos : pos + w.size].reshape(w.shape).copy()
        pos += w.size
        nb = flat[pos : pos + b.size].copy()
        pos += b.size
        new_layers.append((nw, nb))
    head.layers = new_layers


def _epoch_indices(rng, n_in, n_oe, gamma):
    """Row indices for one epoch: all in rows, OOD rows replicated ~gamma times.

    Each OOD row appears floor(gamma) times plus one more with
    probability frac(gamma), so the expected count is exactly gamma and
    the realized count is within one replication of it.
    """
    whole = int(np.floor(gamma))
    frac = gamma - whole
    reps = np.full(n_oe, whole, dtype=np.int64)
    if frac > 0.0:
        reps += (rng.random(n_oe) < frac).astype(np.int64)
    idx = np.concatenate(
        [np.arange(n_in), n_in + np.repeat(np.arange(n_oe), reps)]
    )
    rng.shuffle(idx)
    return idx


def _head_space_labels(in_train, oe_train, partition):
    """Map raw class ids to head output indices; returns (labels, in_ids, out_ids)."""
    in_ids = sorted(set(int(v) for v in in_train.labels))
    in_map = {c: i for i, c in enumerate(in_ids)}
    y_in = np.array([in_map[int(v)] for v in in_train.labels], dtype=np.int64)
    k = len(in_ids)
    if partition.mode == "collapsed_single_class":
        y_oe = np.full(oe_train.n, k, dtype=np.int64)
        out_ids = []
    else:
        if oe_train.labels is None:
            raise ValueError("labeled_outliers mode requires OOD labels")
        out_ids = sorted(set(int(v) for v in oe_train.labels))
        out_map = {c: k + i for i, c in enumerate(out_ids)}
        y_oe = np.array([out_map[int(v)] for v in oe_train.labels], dtype=np.int64)
    return np.concatenate([y_in, y_oe]), in_ids, out_ids


def train_oe_head(
    in_train: EmbeddingSet,
    oe_train: EmbeddingSet,
    config: OeConfig,
    partition: ClassPartition | None = None,
    validation: tuple[EmbeddingSet, EmbeddingSet] | None = None,
) -> OeHead:
    """Train the head by Adam on cross-entropy with seeded OOD oversampling.

    When a (in_val, out_val) pair is supplied, AUROC is evaluated every
    eval_every steps and the best checkpoint is returned; otherwise the
    final step's parameters are returned. Deterministic given the seed.
    """
    if in_train.labels is None:
        raise ValueError("in_train must have labels")
    if oe_train is None or oe_train.n < 1:
        raise ValueError("oe_train must be non-empty")
    if in_train.dim != oe_train.dim:
        raise ValueError(
            f"dimension mismatch: in_train D={in_train.dim}, oe_train D={oe_train.dim}"
        )
    k = len(set(int(v) for v in in_train.labels))
    if partition is None:
        o = (
            len(set(int(v) for v in oe_train.labels))
            if oe_train.labels is not None
            else 1
        )
        partition = ClassPartition(k_in=k, o_out=o)
    if partition.k_in != k:
        raise ValueError(f"partition says K={partition.k_in} but data has {k} classes")

    labels, in_ids, out_ids = _head_space_labels(in_train, oe_train, partition)
    data = np.concatenate(
        [in_train.data.astype(np.float64), oe_train.data.astype(np.float64)]
    )
    gamma = (
        config.oversample_override
        if config.oversample_override is not None
        else oversampling_factor(in_train.n, oe_train.n, partition.k_in, partition.o_out)
    )

    rng = np.random.default_rng(config.seed)
    width = partition.head_width
    if config.head_kind == "linear":
        dims = [in_train.dim, width]
    else:
        dims = [in_train.dim, config.hidden_units, width]
    layers = _init_layers(rng, dims)

    head = OeHead(
        layers=layers,
        head_kind=config.head_kind,
        partition=partition,
        in_class_ids=in_ids,
        out_class_ids=out_ids,
        config=config,
        gamma=float(gamma),
    )

    # Adam state, one (m, v) pair per parameter tensor in flat order.
    flat = flatten_params(head)
    m = np.zeros_like(flat)
    v = np.zeros_like(flat)

    best = None  # (auroc, flat params) under validation selection
    step = 0
    log: list[float] = []
    while step < config.max_steps:
        epoch = _epoch_indices(rng, in_train.n, oe_train.n, gamma)
        for start in range(0, epoch.size, config.batch_size):
            if step >= config.max_steps:
                break
            batch = epoch[start : start + config.batch_size]
            loss, grads = _loss_and_grads(
                head.layers, head.head_kind, data[batch], labels[batch],
                config.l2_penalty,
            )
            if not np.isfinite(loss):
                raise ArithmeticError(f"non-finite loss at step {step}")
            log.append(float(loss))
            g = np.concatenate(
                [np.concatenate([gw.ravel(), gb.ravel()]) for gw, gb in grads]
            )
            step += 1
            m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
            mhat = m / (1.0 - ADAM_BETA1**step)
            vhat = v / (1.0 - ADAM_BETA2**step)
            flat = flatten_params(head) - config.learning_rate * mhat / (
                np.sqrt(vhat) + ADAM_EPS
            )
            set_flat_params(head, flat)
            if validation is not None and (
                step % config.eval_every == 0 or step == config.max_steps
            ):
                score = auroc(
                    ScoreSet(
                        in_scores=score_oe(head, validation[0]),
                        out_scores=score_oe(head, validation[1]),
                    )
                )
                if best is None or score > best[0]:
                    best = (score, flat.copy())
    if best is not None:
        set_flat_params(head, best[1])
    head.training_log = log
    return head


def score_oe(head: OeHead, query: EmbeddingSet) -> np.ndarray:
    """p(in|x): forward pass, softmax, sum over the K in-distribution columns."""
    if query.dim != head.in_dim:
        raise ValueError(f"query dim {query.dim} != head input dim {head.in_dim}")
    p = forward_probs(head, query.data.astype(np.float64))
    return p[:, : head.partition.k_in].sum(axis=1)


def save_head(head: OeHead, path) -> None:
    cfg = head.config
    header = {
        "kind": "oe_head",
        "head_kind": head.head_kind,
        "shapes": [[list(w.shape), list(b.shape)] for w, b in head.layers],
        "partition": {
            "k_in": head.partition.k_in,
            "o_out": head.partition.o_out,
            "mode": head.partition.mode,
        },
        "in_class_ids": head.in_class_ids,
        "out_class_ids": head.out_class_ids,
        "gamma": head.gamma,
        "config": {
            "head_kind": cfg.head_kind,
            "hidden_units": cfg.hidden_units,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "l2_penalty": cfg.l2_penalty,
            "max_steps": cfg.max_steps,
            "seed": cfg.seed,
            "oversample_override": cfg.oversample_override,
            "eval_every": cfg.eval_every,
        },
    }
    payload = b"".join(
        w.astype("<f8").tobytes() + b.astype("<f8").tobytes() for w, b in head.layers
    )
    write_container(path, HEAD_MAGIC, header, payload)


def load_head(path) -> OeHead:
    header, payload = read_container(path, HEAD_MAGIC)
    layers = []
    pos = 0
    for wshape, bshape in header["shapes"]:
        wsize = int(np.prod(wshape))
        w = np.frombuffer(payload[pos : pos + wsize * 8], dtype="<f8").reshape(wshape)
        pos += wsize * 8
        bsize = int(np.prod(bshape))
        b = np.frombuffer(payload[pos : pos + bsize * 8], dtype="<f8")
        pos += bsize * 8
        layers.append((w.copy(), b.copy()))
    part = header["partition"]
    return OeHead(
        layers=layers,
        head_kind=header["head_kind"],
        partition=ClassPartition(
            k_in=int(part["k_in"]), o_out=int(part["o_out"]), mode=part["mode"]
        ),
        in_class_ids=[int(c) for c in header["in_class_ids"]],
        out_class_ids=[int(c) for c in header["out_class_ids"]],
        config=OeConfig(**header["config"]),
        gamma=float(header["gamma"]),
    )
