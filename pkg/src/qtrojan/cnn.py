"""TrojanNet: a small numpy CNN over unitary feature tensors.

Layer stack (channel-last, no padding)::

    input S x S x 2
    conv 3x3, 32 filters, stride 1 -> (S-2) x (S-2) x 32, ReLU
    maxpool 2x2 stride 2           -> (S-2)/2 x (S-2)/2 x 32
    flatten -> dense 64, ReLU -> dense 2 -> softmax

With S = 32 the flatten width is 15*15*32 = 7200. Parameters are float32 by
default; every routine follows the dtype of the parameters, so a float64
copy can be used for gradient checking.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

KERNEL = 3
FILTERS = 32
HIDDEN = 64
CLASSES = 2
CHANNELS = 2
CHECKPOINT_MAGIC = b"QTNET001"


@dataclass
class TrojanNetModel:
    conv_w: np.ndarray  # (3, 3, 2, 32)
    conv_b: np.ndarray  # (32,)
    dense1_w: np.ndarray  # (flat, 64)
    dense1_b: np.ndarray  # (64,)
    dense2_w: np.ndarray  # (64, 2)
    dense2_b: np.ndarray  # (2,)
    input_size: int = 32

    PARAMS = ("conv_w", "conv_b", "dense1_w", "dense1_b", "dense2_w", "dense2_b")

    @property
    def pooled(self) -> int:
        return (self.input_size - KERNEL + 1) // 2

    @property
    def flat(self) -> int:
        return self.pooled**2 * FILTERS

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in self.PARAMS}

    def astype(self, dtype) -> "TrojanNetModel":
        return TrojanNetModel(**{k: v.astype(dtype) for k, v in self.params().items()}, input_size=self.input_size)

    def copy(self) -> "TrojanNetModel":
        return self.astype(self.conv_w.dtype)


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def glorot_limits(input_size: int = 32) -> dict[str, float]:
    flat = ((input_size - KERNEL + 1) // 2) ** 2 * FILTERS
    return {
        "conv_w": np.sqrt(6.0 / (KERNEL * KERNEL * CHANNELS + KERNEL * KERNEL * FILTERS)),
        "dense1_w": np.sqrt(6.0 / (flat + HIDDEN)),
        "dense2_w": np.sqrt(6.0 / (HIDDEN + CLASSES)),
    }


def init_weights(seed: int, input_size: int = 32, dtype=np.float32) -> TrojanNetModel:
    """Glorot-uniform weights (Keras fan convention for convolutions), zero biases."""
    rng = np.random.default_rng(seed)
    flat = ((input_size - KERNEL + 1) // 2) ** 2 * FILTERS
    k2 = KERNEL * KERNEL
    return TrojanNetModel(
        conv_w=_glorot(rng, (KERNEL, KERNEL, CHANNELS, FILTERS), k2 * CHANNELS, k2 * FILTERS, dtype),
        conv_b=np.zeros(FILTERS, dtype),
        dense1_w=_glorot(rng, (flat, HIDDEN), flat, HIDDEN, dtype),
        dense1_b=np.zeros(HIDDEN, dtype),
        dense2_w=_glorot(rng, (HIDDEN, CLASSES), HIDDEN, CLASSES, dtype),
        dense2_b=np.zeros(CLASSES, dtype),
        input_size=input_size,
    )


# --------------------------------------------------------------------------
# Forward / backward


def _im2col(x: np.ndarray) -> np.ndarray:
    """(N, S, S, C) -> (N, S-2, S-2, 3*3*C) patches ordered (kh, kw, c)."""
    win = sliding_window_view(x, (KERNEL, KERNEL), axis=(1, 2))  # N, o, o, C, kh, kw
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(x.shape[0], x.shape[1] - 2, x.shape[2] - 2, -1)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class Cache:
    cols: np.ndarray
    conv: np.ndarray
    pool_arg: np.ndarray
    flat: np.ndarray
    hidden: np.ndarray
    probs: np.ndarray


def forward(model: TrojanNetModel, x: np.ndarray) -> tuple[np.ndarray, Cache]:
    """Class probabilities (N, 2) plus activations needed for backprop."""
    s = model.input_size
    if x.ndim != 4 or x.shape[1:] != (s, s, CHANNELS):
        raise ValueError(f"expected batch of shape (N, {s}, {s}, {CHANNELS}), got {x.shape}")
    dtype = model.conv_w.dtype
    x = x.astype(dtype, copy=False)
    n, p = len(x), model.pooled

    cols = _im2col(x)
    conv = cols @ model.conv_w.reshape(-1, FILTERS) + model.conv_b
    act = np.maximum(conv, 0)

    windows = act[:, : 2 * p, : 2 * p].reshape(n, p, 2, p, 2, FILTERS)
    windows = windows.transpose(0, 1, 3, 5, 2, 4).reshape(n, p, p, FILTERS, 4)
    pool_arg = windows.argmax(axis=-1)  # first maximal element wins ties
    pooled = np.take_along_axis(windows, pool_arg[..., None], axis=-1)[..., 0]

    flat = pooled.reshape(n, -1)
    hidden = np.maximum(flat @ model.dense1_w + model.dense1_b, 0)
    probs = softmax(hidden @ model.dense2_w + model.dense2_b)
    return probs, Cache(cols, conv, pool_arg, flat, hidden, probs)


def predict_proba(model: TrojanNetModel, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
    return np.concatenate([forward(model, x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)])


def cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    eps = np.finfo(probs.dtype).tiny
    return float(-np.mean(np.log(np.maximum((probs * onehot).sum(axis=1), eps))))


def one_hot(labels, classes: int = CLASSES) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _backward(model: TrojanNetModel, x: np.ndarray, onehot: np.ndarray):
    if onehot.shape != (len(x), CLASSES):
        raise ValueError(f"labels must have shape ({len(x)}, {CLASSES}), got {onehot.shape}")
    probs, c = forward(model, x)
    dtype = model.conv_w.dtype
    onehot = onehot.astype(dtype)
    n, p = len(x), model.pooled
    loss = cross_entropy(probs, onehot)

    d_logits = (probs - onehot) / n
    g = {
        "dense2_w": c.hidden.T @ d_logits,
        "dense2_b": d_logits.sum(axis=0),
    }
    d_hidden = (d_logits @ model.dense2_w.T) * (c.hidden > 0)
    g["dense1_w"] = c.flat.T @ d_hidden
    g["dense1_b"] = d_hidden.sum(axis=0)
    d_pooled = (d_hidden @ model.dense1_w.T).reshape(n, p, p, FILTERS)

    # route each pooled gradient back to its winning cell
    d_windows = np.zeros((n, p, p, FILTERS, 4), dtype)
    np.put_along_axis(d_windows, c.pool_arg[..., None], d_pooled[..., None], axis=-1)
    d_act = np.zeros_like(c.conv)
    d_act[:, : 2 * p, : 2 * p] = (
        d_windows.reshape(n, p, p, FILTERS, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * p, 2 * p, FILTERS)
    )
    d_conv = d_act * (c.conv > 0)
    g["conv_w"] = (c.cols.reshape(-1, c.cols.shape[-1]).T @ d_conv.reshape(-1, FILTERS)).reshape(model.conv_w.shape)
    g["conv_b"] = d_conv.sum(axis=(0, 1, 2))
    return loss, {k: v.astype(dtype, copy=False) for k, v in g.items()}, probs


def loss_and_grad(model: TrojanNetModel, x: np.ndarray, onehot: np.ndarray):
    """Mean categorical cross-entropy and its gradient for every parameter."""
    loss, grads, _ = _backward(model, x, onehot)
    return loss, grads


def predict(probs: np.ndarray) -> np.ndarray:
    """Argmax class; exact ties go to class 0."""
    return (probs[:, 1] > probs[:, 0]).astype(np.int64)


# --------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float = float("nan")
    val_acc: float = float("nan")


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, model: TrojanNetModel, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1t = 1 - self.beta1**self.t
        b2t = 1 - self.beta2**self.t
        for k, g in grads.items():
            p = getattr(model, k)
            m = self.m.setdefault(k, np.zeros_like(p))
            v = self.v.setdefault(k, np.zeros_like(p))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= (self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)).astype(p.dtype)


def evaluate_loss(model: TrojanNetModel, x: np.ndarray, y) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) without updating anything."""
    probs = predict_proba(model, x)
    y = np.asarray(y, dtype=np.int64)
    return cross_entropy(probs, one_hot(y).astype(probs.dtype)), float(np.mean(predict(probs) == y))


def train(
    model: TrojanNetModel,
    x: np.ndarray,
    y,
    cfg: TrainConfig = TrainConfig(),
    x_val: np.ndarray | None = None,
    y_val=None,
) -> tuple[TrojanNetModel, list[EpochStats]]:
    """Adam minibatch training; returns a trained copy and per-epoch history.

    Training loss/accuracy are running averages over the epoch's batches,
    measured before each update (the usual Keras reporting). Validation
    metrics are computed after the epoch when a validation set is given.
    """
    if len(x) == 0:
        raise ValueError("empty training set")
    model = model.copy()
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(x))
        total_loss, correct = 0.0, 0
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads, probs = _backward(model, x[idx], one_hot(y[idx]))
            total_loss += loss * len(idx)
            correct += int(np.sum(predict(probs) == y[idx]))
            opt.step(model, grads)
        stats = EpochStats(epoch, total_loss / len(x), correct / len(x))
        if x_val is not None and len(x_val):
            stats.val_loss, stats.val_acc = evaluate_loss(model, x_val, y_val)
        history.append(stats)
    return model, history


def history_csv(history: list[EpochStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
    for h in history:
        w.writerow([h.epoch] + [format(v, ".8g") for v in (h.train_loss, h.train_acc, h.val_loss, h.val_acc)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class EvalMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "EvalMetrics":
        t = np.asarray(y_true, dtype=np.int64)
        p = np.asarray(y_pred, dtype=np.int64)
        return cls(
            tp=int(np.sum((t == 1) & (p == 1))),
            fp=int(np.sum((t == 0) & (p == 1))),
            tn=int(np.sum((t == 0) & (p == 0))),
            fn=int(np.sum((t == 1) & (p == 0))),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
        }


def evaluate(model: TrojanNetModel, x: np.ndarray, y) -> EvalMetrics:
    """Confusion-matrix metrics with Trojan-inserted (label 1) as the positive class."""
    if len(x) == 0:
        raise ValueError("empty test set")
    return EvalMetrics.from_predictions(y, predict(predict_proba(model, x)))


# --------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(model: TrojanNetModel, path) -> None:
    """``QTNET001``, u32 dim count, u32 dims, then float32 LE weights in declaration order."""
    dims = [model.input_size, model.input_size, CHANNELS, FILTERS, KERNEL, KERNEL, model.flat, HIDDEN, CLASSES]
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack(f"<I{len(dims)}I", len(dims), *dims))
        for k in TrojanNetModel.PARAMS:
            fh.write(np.ascontiguousarray(getattr(model, k), dtype="<f4").tobytes())


def load_checkpoint(path) -> TrojanNetModel:
    data = open(path, "rb").read()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a TrojanNet checkpoint")
    (ndims,) = struct.unpack_from("<I", data, 8)
    dims = struct.unpack_from(f"<{ndims}I", data, 12)
    size = dims[0]
    template = init_weights(0, size)
    if tuple(dims) != (size, size, CHANNELS, FILTERS, KERNEL, KERNEL, template.flat, HIDDEN, CLASSES):
        raise ValueError(f"{path}: unsupported architecture {dims}")
    pos = 12 + 4 * ndims
    arrays = {}
    for k in TrojanNetModel.PARAMS:
        shape = getattr(template, k).shape
        count = int(np.prod(shape))
        arrays[k] = np.frombuffer(data, "<f4", count, pos).reshape(shape).astype(np.float32)
        pos += 4 * count
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes")
    return TrojanNetModel(**arrays, input_size=size)
