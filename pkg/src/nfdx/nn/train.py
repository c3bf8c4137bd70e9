"""Mini-batch SGD with momentum, stratified validation and early stopping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DivergenceError, InsufficientDataError
from .model import CnnModel, _as_batch, _check_labels, loss_and_gradients, predict_proba

__all__ = ["TrainConfig", "EpochStats", "LearningCurve", "stratified_holdout", "train", "evaluate"]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 30
    batch_size: int = 16
    validation_fraction: float = 0.20
    seed: int = 0
    patience: int = 8

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError(f"validation_fraction must be in (0, 1), got {self.validation_fraction}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        for name in ("epochs", "batch_size", "patience"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float


@dataclass
class LearningCurve:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self):
        return len(self.epochs)

    @property
    def best(self) -> EpochStats:
        return self.epochs[self.best_epoch - 1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss", "val_acc"])
            for e in self.epochs:
                writer.writerow([e.epoch, repr(e.train_loss), repr(e.val_loss), repr(e.val_acc)])


def stratified_holdout(labels, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into (train, validation); each class contributes ceil(fraction * n_c).

    Raises InsufficientDataError when a class would be left with no training
    or no validation example.
    """
    labels = np.asarray(labels)
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        n_val = math.ceil(fraction * members.size)
        if n_val < 1 or n_val >= members.size:
            raise InsufficientDataError(
                f"class {cls} has {members.size} examples; cannot hold out a validation subset"
            )
        val_idx.append(members[:n_val])
        train_idx.append(members[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def evaluate(model: CnnModel, x, y, batch_size: int = 32) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) in inference mode."""
    probs = predict_proba(model, x, batch_size)
    y = np.asarray(y)
    picked = np.clip(probs[np.arange(len(y)), y], 1e-300, None)
    return float(-np.log(picked).mean()), float((probs.argmax(axis=1) == y).mean())


def train(model: CnnModel, images, labels, cfg: TrainConfig = TrainConfig(), validation=None, log=None):
    """Fit ``model`` and return (best-validation-loss model, LearningCurve).

    ``validation`` is an optional ``(images, labels)`` pair; without it a
    stratified ``cfg.validation_fraction`` of the data is held out. The input
    model is not modified. Every random draw comes from ``cfg.seed``.
    """
    x = _as_batch(model, images)
    if x.shape[0] == 0:
        raise InsufficientDataError("empty training set")
    y = _check_labels(labels, x.shape[0], model.arch.n_classes)

    split_rng, shuffle_rng, dropout_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    if validation is None:
        tr, va = stratified_holdout(y, cfg.validation_fraction, split_rng)
        x_val, y_val = x[va], y[va]
        x, y = x[tr], y[tr]
    else:
        x_val = _as_batch(model, validation[0])
        y_val = _check_labels(validation[1], x_val.shape[0], model.arch.n_classes)
    missing = set(np.unique(y).tolist()) - set(np.unique(y_val).tolist())
    if missing:
        raise InsufficientDataError(f"classes {sorted(missing)} have no validation example")

    current = model.copy()
    velocity = {k: np.zeros_like(v) for k, v in current.params.items()}
    best = current.copy()
    best_loss = math.inf
    curve = LearningCurve()
    stale = 0

    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(x.shape[0])
        total = 0.0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(current, x[batch], y[batch], train=True, rng=dropout_rng)
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch starting {start}; "
                    f"try a smaller learning_rate (now {cfg.learning_rate})"
                )
            total += loss * batch.size
            for name, g in grads.items():
                v = velocity[name]
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                current.params[name] += v
        val_loss, val_acc = evaluate(current, x_val, y_val, cfg.batch_size)
        if not math.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        curve.epochs.append(EpochStats(epoch, total / order.size, val_loss, val_acc))
        if log is not None:
            log(curve.epochs[-1])
        if val_loss < best_loss:
            best_loss, best, curve.best_epoch, stale = val_loss, current.copy(), epoch, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return best, curve
