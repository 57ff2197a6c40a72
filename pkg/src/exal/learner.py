"""Small binary image classifier with exact gradients and bit-stable training.

Architecture (fixed): 3x3 convolution with 8 filters, stride 1, zero padding
to keep the spatial size -> ReLU -> 2x2 max pool (stride 2, floor on odd
sizes) -> flatten -> dense layer to 2 logits -> softmax. Everything runs in
float64 and is written in plain numpy so that training is deterministic
given (data, config, seed) and analytic gradients can be audited against
finite differences.

Class scores break ties toward class 0 (``argmax`` takes the first maximum),
so an all-zero network predicts class 0 everywhere.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError

N_FILTERS = 8
KERNEL = 3
MIN_SIDE = 8

WEIGHTS_MAGIC = b"EXALW1"


@dataclass
class Dataset:
    """Flattened grayscale images with binary labels.

    ``X`` is ``(n, H*W)`` float64 with intensities nominally in [0, 1]; rows
    under adversarial perturbation may leave that range and are used as-is.
    Label 1 is the positive class.
    """

    X: np.ndarray
    y: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        h, w = self.shape
        if self.X.ndim != 2:
            raise ConfigurationError(f"X must be 2-d (n, pixels), got ndim={self.X.ndim}")
        if self.X.shape[0] != self.y.shape[0]:
            raise ConfigurationError(
                f"{self.X.shape[0]} rows of X vs {self.y.shape[0]} labels"
            )
        if self.X.shape[1] != h * w:
            raise ConfigurationError(
                f"X has {self.X.shape[1]} pixels per row, shape {h}x{w} needs {h * w}"
            )
        if not np.isin(self.y, (0, 1)).all():
            raise ConfigurationError("labels must contain only 0 and 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    rng_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.rng_seed < 0:
            raise ConfigurationError(f"rng_seed must be non-negative, got {self.rng_seed}")


@dataclass
class Metrics:
    """Confusion counts and derived scores for the positive class (label 1)."""

    tp: int
    fp: int
    tn: int
    fn: int
    recall: float
    precision: float
    f1: float


@dataclass
class ModelWeights:
    """Ordered named snapshot of all trainable parameters (deep copies)."""

    params: tuple[tuple[str, np.ndarray], ...]

    @classmethod
    def from_model(cls, model: "ConvNet") -> "ModelWeights":
        return cls(tuple((name, arr.copy()) for name, arr in model.named_params()))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: arr for name, arr in self.params}


def compute_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> Metrics:
    """Positive-class precision/recall/F1; zero denominators score 0.0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label shape {y_true.shape} vs prediction {y_pred.shape}")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return Metrics(tp=tp, fp=fp, tn=tn, fn=fn, recall=recall, precision=precision, f1=f1)


class ConvNet:
    """The fixed conv -> relu -> pool -> dense classifier."""

    def __init__(self, shape: tuple[int, int], rng_seed: int = 0):
        h, w = int(shape[0]), int(shape[1])
        if h < MIN_SIDE or w < MIN_SIDE:
            raise ConfigurationError(
                f"image shape must be at least {MIN_SIDE}x{MIN_SIDE}, got {h}x{w}"
            )
        self.shape = (h, w)
        self.pooled = (h // 2, w // 2)
        n_flat = self.pooled[0] * self.pooled[1] * N_FILTERS

        rng = np.random.default_rng(rng_seed)
        # uniform He-style init: limit = sqrt(6 / fan_in), biases zero
        conv_limit = np.sqrt(6.0 / (KERNEL * KERNEL))
        fc_limit = np.sqrt(6.0 / n_flat)
        self.conv_w = rng.uniform(-conv_limit, conv_limit, size=(N_FILTERS, KERNEL, KERNEL))
        self.conv_b = np.zeros(N_FILTERS)
        self.fc_w = rng.uniform(-fc_limit, fc_limit, size=(n_flat, 2))
        self.fc_b = np.zeros(2)
        self.loss_history: list[float] = []

    def named_params(self):
        return (
            ("conv_w", self.conv_w),
            ("conv_b", self.conv_b),
            ("fc_w", self.fc_w),
            ("fc_b", self.fc_b),
        )

    # -- forward ---------------------------------------------------------

    def _forward(self, X: np.ndarray):
        """Return logits plus the caches backward needs."""
        h, w = self.shape
        n = X.shape[0]
        imgs = X.reshape(n, h, w)
        padded = np.pad(imgs, ((0, 0), (1, 1), (1, 1)))
        cols = sliding_window_view(padded, (KERNEL, KERNEL), axis=(1, 2))
        conv = np.einsum("nhwij,fij->nhwf", cols, self.conv_w, optimize=True) + self.conv_b
        relu = np.maximum(conv, 0.0)

        hp, wp = self.pooled
        cropped = relu[:, : 2 * hp, : 2 * wp, :]
        windows = (
            cropped.reshape(n, hp, 2, wp, 2, N_FILTERS)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(n, hp, wp, N_FILTERS, 4)
        )
        pool_idx = np.argmax(windows, axis=-1)
        pooled = np.take_along_axis(windows, pool_idx[..., None], axis=-1)[..., 0]

        flat = pooled.reshape(n, -1)
        logits = flat @ self.fc_w + self.fc_b
        cache = (cols, conv, flat, pool_idx)
        return logits, cache

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Softmax class probabilities, shape (n, 2)."""
        logits, _ = self._forward(np.asarray(X, dtype=np.float64))
        return _softmax(logits)

    def predict(self, X: np.ndarray) -> np.ndarray:
        logits, _ = self._forward(np.asarray(X, dtype=np.float64))
        return np.argmax(logits, axis=1)

    # -- backward --------------------------------------------------------

    def _loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        n = X.shape[0]
        logits, (cols, conv, flat, pool_idx) = self._forward(X)
        probs = _softmax(logits)
        picked = probs[np.arange(n), y]
        loss = float(-np.mean(np.log(picked)))

        dlogits = probs.copy()
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n

        d_fc_w = flat.T @ dlogits
        d_fc_b = dlogits.sum(axis=0)
        dflat = dlogits @ self.fc_w.T

        hp, wp = self.pooled
        dpooled = dflat.reshape(n, hp, wp, N_FILTERS)
        dwindows = np.zeros((n, hp, wp, N_FILTERS, 4))
        np.put_along_axis(dwindows, pool_idx[..., None], dpooled[..., None], axis=-1)
        dcropped = (
            dwindows.reshape(n, hp, wp, N_FILTERS, 2, 2)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(n, 2 * hp, 2 * wp, N_FILTERS)
        )
        h, w = self.shape
        drelu = np.zeros((n, h, w, N_FILTERS))
        drelu[:, : 2 * hp, : 2 * wp, :] = dcropped
        dconv = drelu * (conv > 0.0)

        d_conv_w = np.einsum("nhwij,nhwf->fij", cols, dconv, optimize=True)
        d_conv_b = dconv.sum(axis=(0, 1, 2))

        grads = {
            "conv_w": d_conv_w,
            "conv_b": d_conv_b,
            "fc_w": d_fc_w,
            "fc_b": d_fc_b,
        }
        return loss, grads


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def build_model(shape: tuple[int, int], rng_seed: int = 0) -> ConvNet:
    """Fresh classifier with parameters drawn deterministically from the seed."""
    return ConvNet(shape, rng_seed)


def get_weights(model: ConvNet) -> ModelWeights:
    return ModelWeights.from_model(model)


def set_weights(model: ConvNet, weights: ModelWeights) -> None:
    """Restore a snapshot; names and shapes must match the model exactly."""
    current = dict(model.named_params())
    incoming = weights.as_dict()
    if list(incoming) != [name for name, _ in model.named_params()]:
        raise ValueError(
            f"weight names {list(incoming)} do not match model parameters "
            f"{[name for name, _ in model.named_params()]}"
        )
    for name, arr in incoming.items():
        if arr.shape != current[name].shape:
            raise ValueError(
                f"parameter {name!r} has shape {arr.shape}, model expects "
                f"{current[name].shape}"
            )
    model.conv_w = incoming["conv_w"].astype(np.float64).copy()
    model.conv_b = incoming["conv_b"].astype(np.float64).copy()
    model.fc_w = incoming["fc_w"].astype(np.float64).copy()
    model.fc_b = incoming["fc_b"].astype(np.float64).copy()


def loss_and_gradients(model: ConvNet, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and exact gradients for every parameter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    return model._loss_and_grads(X, y)


def train(model: ConvNet, data: Dataset, cfg: TrainConfig) -> ModelWeights:
    """Mini-batch SGD with momentum on the cross-entropy loss.

    Shuffling is driven by ``cfg.rng_seed`` only, so the final weights are a
    pure function of (initial weights, data, config). Per-epoch mean batch
    loss is appended to ``model.loss_history``.
    """
    if data.n == 0:
        raise ConfigurationError("training data is empty")
    classes = np.unique(data.y)
    if classes.size < 2:
        raise ConfigurationError(
            f"training data contains only class {int(classes[0])}; need both classes"
        )

    rng = np.random.default_rng(cfg.rng_seed)
    velocity = {name: np.zeros_like(arr) for name, arr in model.named_params()}
    for _ in range(cfg.epochs):
        order = rng.permutation(data.n)
        losses = []
        for start in range(0, data.n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = model._loss_and_grads(data.X[idx], data.y[idx])
            losses.append(loss)
            for name, arr in model.named_params():
                velocity[name] = cfg.momentum * velocity[name] + grads[name]
                arr -= cfg.learning_rate * velocity[name]
        model.loss_history.append(float(np.mean(losses)))
    return get_weights(model)


def evaluate(model: ConvNet, data: Dataset) -> Metrics:
    """Argmax predictions scored against the positive class (label 1)."""
    if data.n == 0:
        raise ValueError("evaluation data is empty")
    return compute_metrics(data.y, model.predict(data.X))


def export_loss_history(history, path) -> None:
    """Write the per-epoch training loss as ``epoch,loss`` CSV."""
    lines = ["epoch,loss"]
    lines.extend(f"{i + 1},{loss!r}" for i, loss in enumerate(history))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# -- weight snapshot container -----------------------------------------------
# layout: magic "EXALW1", uint32 layer count, then per layer:
#   uint32 name length, name bytes (utf-8), uint32 rank, rank x uint32 dims,
#   float64 values. All integers and floats little-endian.


def weights_to_bytes(weights: ModelWeights) -> bytes:
    buf = io.BytesIO()
    buf.write(WEIGHTS_MAGIC)
    buf.write(struct.pack("<I", len(weights.params)))
    for name, arr in weights.params:
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return buf.getvalue()


def weights_from_bytes(blob: bytes) -> ModelWeights:
    view = memoryview(blob)
    if bytes(view[:6]) != WEIGHTS_MAGIC:
        raise ValueError(
            f"bad weight container magic {bytes(view[:6])!r}, expected {WEIGHTS_MAGIC!r}"
        )
    offset = 6
    (count,) = struct.unpack_from("<I", view, offset)
    offset += 4
    params = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", view, offset)
        offset += 4
        name = bytes(view[offset : offset + name_len]).decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", view, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}I", view, offset)
        offset += 4 * rank
        size = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(view, dtype="<f8", count=size, offset=offset).reshape(dims)
        offset += 8 * size
        params.append((name, arr.astype(np.float64)))
    if offset != len(blob):
        raise ValueError(
            f"weight container has {len(blob) - offset} trailing bytes"
        )
    return ModelWeights(params=tuple(params))


def save_weights(weights: ModelWeights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(weights_to_bytes(weights))


def load_weights(path) -> ModelWeights:
    with open(path, "rb") as fh:
        return weights_from_bytes(fh.read())
