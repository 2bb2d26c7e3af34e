"""Supervised bottleneck head: linear D->d, sigmoid, linear d->1, sigmoid.

Trained with mini-batch SGD (momentum) or Adam on binary cross-entropy over
frozen embeddings; the d-dimensional sigmoid activations are the reduced
representation handed to clustering.
"""

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DimensionMismatch, DivergedLoss, SingleClassData

EPS = 1e-12  # probability clamp before the log


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    weight_init_scale: float = 1.0
    d: int = 128
    optimizer: str = "sgd"  # "sgd" (momentum 0.9) or "adam"
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.epochs < 1 or self.d < 1:
            raise ValueError("batch_size, epochs and d must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


# Mirrors the upstream classifier's own training recipe, for users who want
# the head trained exactly like the full network.
CLASSIFIER_PRESET = TrainConfig(learning_rate=1e-6, batch_size=64, epochs=20,
                                optimizer="adam")


@dataclass
class HeadModel:
    w1: np.ndarray  # (d, D)
    b1: np.ndarray  # (d,)
    w2: np.ndarray  # (d,)
    b2: float
    config: TrainConfig | None = None

    @property
    def d(self):
        return self.w1.shape[0]

    @property
    def input_dim(self):
        return self.w1.shape[1]

    def to_json(self):
        return json.dumps(
            {
                "d": self.d,
                "D": self.input_dim,
                "w1": self.w1.ravel().tolist(),
                "b1": self.b1.tolist(),
                "w2": self.w2.tolist(),
                "b2": self.b2,
                "config": asdict(self.config) if self.config else None,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        cfg = TrainConfig(**obj["config"]) if obj.get("config") else None
        return cls(
            w1=np.array(obj["w1"], dtype=float).reshape(obj["d"], obj["D"]),
            b1=np.array(obj["b1"], dtype=float),
            w2=np.array(obj["w2"], dtype=float),
            b2=float(obj["b2"]),
            config=cfg,
        )


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward(X, head):
    z1 = X @ head.w1.T + head.b1
    h = _sigmoid(z1)
    z2 = h @ head.w2 + head.b2
    p = _sigmoid(z2)
    return h, p


def bce_loss(p, y):
    pc = np.clip(p, EPS, 1.0 - EPS)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log1p(-pc)))


def _gradients(X, y, head):
    """Analytic BCE gradients; clamped (saturated) samples contribute zero."""
    n = X.shape[0]
    h, p = _forward(X, head)
    live = (p > EPS) & (p < 1.0 - EPS)
    dz2 = np.where(live, p - y, 0.0) / n
    gw2 = h.T @ dz2
    gb2 = float(dz2.sum())
    dh = np.outer(dz2, head.w2)
    dz1 = dh * h * (1.0 - h)
    gw1 = dz1.T @ X
    gb1 = dz1.sum(axis=0)
    return gw1, gb1, gw2, gb2


def init_head(input_dim, cfg, rng):
    s1 = cfg.weight_init_scale / np.sqrt(input_dim)
    s2 = cfg.weight_init_scale / np.sqrt(cfg.d)
    return HeadModel(
        w1=rng.uniform(-s1, s1, size=(cfg.d, input_dim)),
        b1=np.zeros(cfg.d),
        w2=rng.uniform(-s2, s2, size=cfg.d),
        b2=0.0,
        config=cfg,
    )


def train_head(train_X, train_y, cfg):
    """Fit the head by mini-batch gradient descent; deterministic given seed.

    Returns the trained HeadModel and the per-epoch full-data loss history
    (history[0] is the pre-training loss).
    """
    X = np.asarray(train_X, dtype=float)
    y = np.asarray(train_y, dtype=float)
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassData("training labels contain a single class")

    rng = np.random.default_rng(cfg.seed)
    head = init_head(X.shape[1], cfg, rng)
    params = [head.w1, head.b1, head.w2, np.array([head.b2])]
    vel = [np.zeros_like(p) for p in params]
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    step = 0

    losses = [bce_loss(_forward(X, head)[1], y)]
    n = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grads = _gradients(X[batch], y[batch], head)
            grads = list(grads[:3]) + [np.array([grads[3]])]
            step += 1
            for p, g, v, m1, m2 in zip(params, grads, vel, adam_m, adam_v):
                if cfg.optimizer == "sgd":
                    v *= cfg.momentum
                    v -= cfg.learning_rate * g
                    p += v
                else:
                    beta1, beta2, eps = 0.9, 0.999, 1e-8
                    m1 *= beta1
                    m1 += (1 - beta1) * g
                    m2 *= beta2
                    m2 += (1 - beta2) * g * g
                    mhat = m1 / (1 - beta1**step)
                    vhat = m2 / (1 - beta2**step)
                    p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
            head.b2 = float(params[3][0])
        loss = bce_loss(_forward(X, head)[1], y)
        if not np.isfinite(loss):
            raise DivergedLoss(f"training loss became {loss}")
        losses.append(loss)
    return head, losses


def reduce(X, head):
    """d-dimensional sigmoid activations; entries strictly in (0, 1)."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != head.input_dim:
        raise DimensionMismatch(f"input dim {X.shape[1]} != head dim {head.input_dim}")
    return _sigmoid(X @ head.w1.T + head.b1)


def head_confidence(X, head):
    """Positive-class probability produced by the head's own classifier."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != head.input_dim:
        raise DimensionMismatch(f"input dim {X.shape[1]} != head dim {head.input_dim}")
    return _forward(X, head)[1]


def gradient_check(head, X, y, epsilon=1e-5):
    """Max relative error between analytic and central-difference gradients."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    analytic = _gradients(X, y, head)
    analytic = np.concatenate(
        [analytic[0].ravel(), analytic[1], analytic[2], [analytic[3]]]
    )

    def loss_at(flat):
        d, D = head.d, head.input_dim
        w1 = flat[: d * D].reshape(d, D)
        b1 = flat[d * D : d * D + d]
        w2 = flat[d * D + d : d * D + 2 * d]
        b2 = float(flat[-1])
        trial = HeadModel(w1=w1, b1=b1, w2=w2, b2=b2)
        return bce_loss(_forward(X, trial)[1], y)

    flat = np.concatenate([head.w1.ravel(), head.b1, head.w2, [head.b2]])
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        bump = np.zeros_like(flat)
        bump[i] = epsilon
        numeric[i] = (loss_at(flat + bump) - loss_at(flat - bump)) / (2 * epsilon)

    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))
