"""Cross-validation, confusion matrices, macro metrics and accuracy sweeps."""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dsp import ImageMode
from .errors import ConfigError, DomainError, InsufficientDataError, LabelError
from .synth import Carrier, OperatingCondition

N_CLASSES = len(OperatingCondition)
CLASS_NAMES = tuple(c.label for c in OperatingCondition)

__all__ = [
    "Fold",
    "ConfusionMatrix",
    "MetricsReport",
    "SweepCell",
    "SweepResult",
    "kfold_split",
    "confusion",
    "metrics",
    "run_sweep",
]


@dataclass(frozen=True)
class Fold:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    @property
    def fit(self) -> np.ndarray:
        """Training indices minus the validation subset."""
        return np.setdiff1d(self.train, self.validation)


def kfold_split(labels, k: int = 5, seed: int = 0, validation_fraction: float = 0.2) -> list[Fold]:
    """Stratified k-fold split of example indices.

    Each class is shuffled once and dealt into ``k`` near-equal test chunks.
    From each fold's training part, ``ceil(validation_fraction * n)`` examples
    per class are reserved for validation.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise InsufficientDataError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    chunks = {}
    for cls in classes:
        members = np.flatnonzero(labels == cls)
        if members.size < k:
            raise InsufficientDataError(f"class {cls} has {members.size} examples, fewer than k={k}")
        chunks[cls] = np.array_split(members[rng.permutation(members.size)], k)

    folds = []
    for i in range(k):
        test, train, val = [], [], []
        for cls in classes:
            test.append(chunks[cls][i])
            rest = np.concatenate([c for j, c in enumerate(chunks[cls]) if j != i])
            n_val = math.ceil(validation_fraction * rest.size)
            if n_val < 1 or n_val >= rest.size:
                raise InsufficientDataError(
                    f"fold {i}: class {cls} keeps {rest.size} training examples, "
                    f"too few for a validation subset"
                )
            train.append(rest)
            val.append(rest[:n_val])
        folds.append(Fold(np.sort(np.concatenate(train)), np.sort(np.concatenate(val)), np.sort(np.concatenate(test))))
    return folds


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred", *CLASS_NAMES])
            for name, row in zip(CLASS_NAMES, self.counts):
                w.writerow([name, *row.tolist()])

    def format(self) -> str:
        width = max(len(n) for n in CLASS_NAMES) + 1
        lines = [" " * width + "".join(n.rjust(width) for n in CLASS_NAMES)]
        for name, row in zip(CLASS_NAMES, self.counts):
            lines.append(name.ljust(width) + "".join(str(v).rjust(width) for v in row))
        return "\n".join(lines)


def confusion(pred, truth, n_classes: int = N_CLASSES) -> ConfusionMatrix:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise DomainError(f"prediction and truth shapes differ: {pred.shape} vs {truth.shape}")
    for arr in (pred, truth):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelError(f"labels must lie in 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (truth.astype(np.intp), pred.astype(np.intp)), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class MetricsReport:
    """Percentages; sensitivity/precision/f1 are macro averages of the per-class values."""

    accuracy: float
    sensitivity: float
    precision: float
    f1: float
    per_class_sensitivity: np.ndarray
    per_class_precision: np.ndarray
    per_class_f1: np.ndarray
    empty_classes: tuple = ()

    def rows(self):
        yield ["metric", "value_percent"]
        for name in ("accuracy", "sensitivity", "precision", "f1"):
            yield [name, f"{getattr(self, name):.4f}"]
        for i, name in enumerate(CLASS_NAMES[: len(self.per_class_f1)]):
            yield [f"sensitivity[{name}]", f"{self.per_class_sensitivity[i]:.4f}"]
            yield [f"precision[{name}]", f"{self.per_class_precision[i]:.4f}"]
            yield [f"f1[{name}]", f"{self.per_class_f1[i]:.4f}"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.rows())


def _safe_ratio(num, den):
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    c = cm.counts.astype(np.float64)
    if cm.total <= 0:
        raise DomainError("cannot compute metrics of an empty confusion matrix")
    tp = np.diag(c)
    support = c.sum(axis=1)
    predicted = c.sum(axis=0)
    sens = _safe_ratio(tp, support)
    prec = _safe_ratio(tp, predicted)
    f1 = _safe_ratio(2 * sens * prec, sens + prec)
    empty = tuple(int(i) for i in np.flatnonzero(support == 0))
    return MetricsReport(
        accuracy=100.0 * cm.correct / cm.total,
        sensitivity=100.0 * float(sens.mean()),
        precision=100.0 * float(prec.mean()),
        f1=100.0 * float(f1.mean()),
        per_class_sensitivity=100.0 * sens,
        per_class_precision=100.0 * prec,
        per_class_f1=100.0 * f1,
        empty_classes=empty,
    )


# --------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepCell:
    carrier: Carrier
    position_cm: int
    mode: ImageMode
    window_seconds: float
    fold_accuracies: tuple
    confusion: ConfusionMatrix = field(compare=False, repr=False, default=None)

    @property
    def folds(self) -> int:
        return len(self.fold_accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies))


@dataclass
class SweepResult:
    axes: tuple
    cells: list[SweepCell]

    def lookup(self, **where) -> SweepCell:
        for cell in self.cells:
            if all(getattr(cell, k) == v for k, v in where.items()):
                return cell
        raise KeyError(where)

    def rows(self):
        yield ["carrier_mhz", "position_cm", "mode", "window_s", "folds", "mean_acc", "std_acc"]
        for c in self.cells:
            yield [c.carrier.mhz, c.position_cm, c.mode.value, c.window_seconds, c.folds, f"{c.mean:.6f}", f"{c.std:.6f}"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.rows())

    def format(self) -> str:
        rows = list(self.rows())
        widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(str(v).rjust(w) for v, w in zip(r, widths)) for r in rows)


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1, np.uint64)[0])


def cross_validate(x, y, arch, train_cfg, k: int = 5, log=None):
    """Train one model per fold; return (test accuracies, pooled confusion matrix)."""
    from .nn import init_model, predict, train

    folds = kfold_split(y, k=k, seed=train_cfg.seed, validation_fraction=train_cfg.validation_fraction)
    accs = []
    cm = ConfusionMatrix(np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64))
    for i, fold in enumerate(folds):
        fold_cfg = dataclasses.replace(train_cfg, seed=_fold_seed(train_cfg.seed, i) % (2**63))
        model = init_model(arch, seed=fold_cfg.seed)
        fit = fold.fit
        model, _ = train(model, x[fit], y[fit], fold_cfg, validation=(x[fold.validation], y[fold.validation]))
        pred = predict(model, x[fold.test])
        fold_cm = confusion(pred, y[fold.test])
        cm = cm + fold_cm
        accs.append(fold_cm.correct / fold_cm.total)
        if log is not None:
            log(f"fold {i + 1}/{k}: test accuracy {accs[-1]:.4f}")
    return accs, cm


def run_sweep(
    manifest,
    axes: Sequence[str],
    run_cfg,
    carriers: Sequence[Carrier] | None = None,
    positions: Sequence[int] | None = None,
    modes: Sequence[ImageMode] | None = None,
    windows: Sequence[float] | None = None,
    window_cell: tuple | None = None,
    log=None,
) -> SweepResult:
    """Cross-validated accuracy over a grid of cells.

    ``axes`` is a subset of {"carrier", "position", "mode"} or exactly
    ("window",). Axes not swept are pinned to the first listed value. The window
    sweep truncates every trace to its leading ``d`` seconds and runs on
    ``window_cell`` = (carrier, position), default 5.8 GHz at 0 cm.
    """
    from .nn import ArchConfig
    from .pipeline import image_batch

    axes = tuple(axes)
    sweep = run_cfg.sweep
    carriers = tuple(carriers if carriers is not None else sweep.carriers)
    positions = tuple(positions if positions is not None else sweep.positions)
    modes = tuple(ImageMode.parse(m) for m in (modes if modes is not None else sweep.modes))
    windows = tuple(windows if windows is not None else sweep.windows)

    if axes == ("window",):
        carrier, position = window_cell or (Carrier.GHZ_5_8, 0)
        grid = [(Carrier(carrier), position, modes[0], w) for w in windows]
    else:
        unknown = set(axes) - {"carrier", "position", "mode"}
        if unknown or not axes:
            raise ConfigError(f"unknown sweep axes {sorted(unknown) or axes}")
        grid = [
            (c, p, m, run_cfg.window_seconds)
            for c, p, m in itertools.product(
                carriers if "carrier" in axes else carriers[:1],
                positions if "position" in axes else positions[:1],
                modes if "mode" in axes else modes[:1],
            )
        ]

    # fail fast on missing cells before any training starts
    for carrier, position, _, _ in grid:
        manifest.select(carrier, position)

    arch = ArchConfig(side=run_cfg.image_side)
    traces_cache = {}
    cells = []
    for carrier, position, mode, window in grid:
        key = (carrier, position)
        if key not in traces_cache:
            traces_cache[key] = manifest.load(manifest.select(carrier, position))
        x, y = image_batch(traces_cache[key], run_cfg.image_side, mode, run_cfg.stft, window)
        if log is not None:
            log(f"cell carrier={carrier.mhz}MHz position={position}cm mode={mode.value} window={window}s: {len(y)} traces")
        accs, cm = cross_validate(x, y, arch, run_cfg.train, k=sweep.folds, log=log)
        cells.append(SweepCell(carrier, position, mode, float(window), tuple(accs), cm))
    return SweepResult(axes, cells)
