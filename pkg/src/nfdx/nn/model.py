"""Convolutional classifier built from numpy primitives.

Stack: [conv3x3 + ReLU -> maxpool 2x2] x 3 -> flatten -> dense + ReLU ->
dropout -> dense -> softmax. Convolutions use zero "same" padding and
stride 1; pooling drops a trailing odd row/column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import LabelError, ShapeError
from . import kernels

__all__ = [
    "ArchConfig",
    "ConvLayer",
    "PoolLayer",
    "DenseLayer",
    "CnnModel",
    "init_model",
    "conv_forward",
    "maxpool_forward",
    "softmax",
    "dropout",
    "forward",
    "predict_proba",
    "predict",
    "loss_and_gradients",
]


@dataclass(frozen=True)
class ArchConfig:
    side: int = 100
    in_channels: int = 3
    filters: tuple = (64, 64, 128)
    kernel: int = 3
    hidden: int = 128
    n_classes: int = 4
    dropout: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))
        if not 0.0 <= self.dropout < 1.0:
            raise ShapeError(f"dropout rate must be in [0, 1), got {self.dropout}")
        if min(self.side, self.in_channels, self.kernel, self.hidden, self.n_classes, *self.filters) < 1:
            raise ShapeError(f"architecture sizes must be positive: {self}")
        if self.kernel % 2 != 1:
            raise ShapeError("same padding needs an odd kernel size")

    def feature_sides(self) -> list[int]:
        """Spatial side seen by each conv layer; raises if a pool would hit side < 2."""
        sides = []
        s = self.side
        for _ in self.filters:
            sides.append(s)
            if s < 2:
                raise ShapeError(f"input side {self.side} is too small for {len(self.filters)} pooling stages")
            s //= 2
        return sides

    @property
    def flat_size(self) -> int:
        return self.filters[-1] * (self.feature_sides()[-1] // 2) ** 2

    def param_shapes(self) -> dict[str, tuple]:
        shapes = {}
        c_in = self.in_channels
        for i, f in enumerate(self.filters):
            shapes[f"conv{i}.w"] = (f, c_in, self.kernel, self.kernel)
            shapes[f"conv{i}.b"] = (f,)
            c_in = f
        shapes["fc0.w"] = (self.hidden, self.flat_size)
        shapes["fc0.b"] = (self.hidden,)
        shapes["fc1.w"] = (self.n_classes, self.hidden)
        shapes["fc1.b"] = (self.n_classes,)
        return shapes


@dataclass
class ConvLayer:
    """3-D filter bank (out, in, k, k) with one bias per output channel."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 4 or self.weights.shape[2] != self.weights.shape[3]:
            raise ShapeError(f"conv weights must be (out, in, k, k), got {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ShapeError(f"expected {self.weights.shape[0]} biases, got {self.biases.shape}")


@dataclass(frozen=True)
class PoolLayer:
    window: int = 2
    stride: int = 2


@dataclass
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: str = "relu"


@dataclass
class CnnModel:
    arch: ArchConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.arch.param_shapes()
        if set(self.params) != set(shapes):
            raise ShapeError(f"parameter names {sorted(self.params)} do not match architecture")
        for name, shape in shapes.items():
            arr = np.ascontiguousarray(self.params[name], dtype=np.float64)
            if arr.shape != shape:
                raise ShapeError(f"{name}: expected shape {shape}, got {arr.shape}")
            self.params[name] = arr

    def copy(self) -> "CnnModel":
        return CnnModel(self.arch, {k: v.copy() for k, v in self.params.items()})

    def conv_layers(self) -> list[ConvLayer]:
        return [ConvLayer(self.params[f"conv{i}.w"], self.params[f"conv{i}.b"]) for i in range(len(self.arch.filters))]

    def parameter_names(self) -> list[str]:
        return list(self.arch.param_shapes())

    def n_parameters(self) -> int:
        return sum(v.size for v in self.params.values())


def init_model(arch: ArchConfig = ArchConfig(), seed=0) -> CnnModel:
    """He-style uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in arch.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = math.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape)
    return CnnModel(arch, params)


# ---------------------------------------------------------------- layer ops


def _conv_pre(x, w, b):
    n, c, h, s = x.shape
    f, _, k, _ = w.shape
    cols = kernels.im2col(x, k)
    z = cols @ w.reshape(f, -1).T
    z += b
    return np.ascontiguousarray(z.reshape(n, h, s, f).transpose(0, 3, 1, 2)), cols


def conv_forward(x, layer: ConvLayer) -> np.ndarray:
    """Same-padded stride-1 cross-correlation + bias + ReLU.

    Accepts (C, H, W) or (B, C, H, W); output keeps the spatial size.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4 or x.shape[1] != layer.weights.shape[1]:
        raise ShapeError(f"input {x.shape} does not match conv weights {layer.weights.shape}")
    z, _ = _conv_pre(x, layer.weights, layer.biases)
    out = np.maximum(z, 0.0)
    return out[0] if single else out


def maxpool_forward(x, layer: PoolLayer = PoolLayer()) -> np.ndarray:
    """2x2 / stride-2 max pooling with floor semantics."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4 or min(x.shape[2:]) < 2:
        raise ShapeError(f"max pooling needs spatial sides >= 2, got {x.shape}")
    out, _ = kernels.maxpool2x2(x)
    return out[0] if single else out


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dropout(a: np.ndarray, rate: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout: zero each unit with probability ``rate``, scale survivors by 1/(1-rate).

    Returns the dropped activations and the scaling mask used for backprop.
    """
    keep = 1.0 - rate
    mask = (rng.random(a.shape) < keep) / keep
    return a * mask, mask


def _as_batch(model: CnnModel, x) -> np.ndarray:
    if hasattr(x, "pixels"):
        x = x.pixels
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    a = model.arch
    expected = (a.in_channels, a.side, a.side)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise ShapeError(f"model expects images of shape {expected}, got {x.shape[1:]}")
    return x


def _forward(model: CnnModel, x, train: bool, rng):
    """Return logits and the cache needed by backprop."""
    p = model.params
    cache = []
    a = x
    for i in range(len(model.arch.filters)):
        z, cols = _conv_pre(a, p[f"conv{i}.w"], p[f"conv{i}.b"])
        r = np.maximum(z, 0.0)
        pooled, arg = kernels.maxpool2x2(r)
        cache.append((a.shape, cols, z, r.shape, arg))
        a = pooled
    flat = a.reshape(a.shape[0], -1)
    h_pre = flat @ p["fc0.w"].T + p["fc0.b"]
    h = np.maximum(h_pre, 0.0)
    mask = None
    if train and model.arch.dropout > 0:
        h, mask = dropout(h, model.arch.dropout, rng)
    logits = h @ p["fc1.w"].T + p["fc1.b"]
    return logits, (cache, a.shape, flat, h_pre, h, mask)


def forward(model: CnnModel, image, train: bool = False, rng=None) -> np.ndarray:
    """Class probabilities, shape (B, n_classes), or (n_classes,) for one image.

    Dropout is active only when ``train`` is true; it uses inverted scaling so
    inference needs no correction.
    """
    single = np.ndim(getattr(image, "pixels", image)) == 3
    x = _as_batch(model, image)
    if train and rng is None:
        rng = np.random.default_rng()
    logits, _ = _forward(model, x, train, rng)
    probs = softmax(logits)
    return probs[0] if single else probs


def predict_proba(model: CnnModel, images, batch_size: int = 32) -> np.ndarray:
    x = _as_batch(model, images)
    out = [softmax(_forward(model, x[i : i + batch_size], False, None)[0]) for i in range(0, len(x), batch_size)]
    return np.concatenate(out) if out else np.zeros((0, model.arch.n_classes))


def predict(model: CnnModel, images, batch_size: int = 32) -> np.ndarray:
    return predict_proba(model, images, batch_size).argmax(axis=1)


def _check_labels(labels, n, n_classes) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise LabelError("labels must be integers")
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise LabelError(f"labels must lie in 0..{n_classes - 1}, got range {y.min()}..{y.max()}")
    return y


def loss_and_gradients(model: CnnModel, images, labels, train: bool = False, rng=None):
    """Mean categorical cross-entropy over the batch and its gradient for every parameter."""
    x = _as_batch(model, images)
    y = _check_labels(labels, x.shape[0], model.arch.n_classes)
    p = model.params
    n = x.shape[0]
    if train and rng is None:
        rng = np.random.default_rng()

    logits, (cache, pooled_shape, flat, h_pre, h, mask) = _forward(model, x, train, rng)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), y].mean())

    grads = {}
    d_logits = np.exp(log_probs)
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    grads["fc1.w"] = d_logits.T @ h
    grads["fc1.b"] = d_logits.sum(axis=0)
    dh = d_logits @ p["fc1.w"]
    if mask is not None:
        dh = dh * mask
    dh = dh * (h_pre > 0)
    grads["fc0.w"] = dh.T @ flat
    grads["fc0.b"] = dh.sum(axis=0)
    da = (dh @ p["fc0.w"]).reshape(pooled_shape)

    for i in reversed(range(len(model.arch.filters))):
        in_shape, cols, z, r_shape, arg = cache[i]
        dr = kernels.maxpool2x2_backward(da, arg, r_shape)
        dz = dr * (z > 0)
        w = p[f"conv{i}.w"]
        f = w.shape[0]
        dz_flat = dz.transpose(0, 2, 3, 1).reshape(-1, f)
        grads[f"conv{i}.w"] = (dz_flat.T @ cols).reshape(w.shape)
        grads[f"conv{i}.b"] = dz_flat.sum(axis=0)
        if i > 0:
            da = kernels.col2im(dz_flat @ w.reshape(f, -1), in_shape, w.shape[2])
    return loss, grads
