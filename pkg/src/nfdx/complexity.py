"""Convolutional FLOP and parameter accounting.

    time  ~ sum_i n_{i-1} * m_i**2 * k_i**2 * n_i
    space ~ sum_i n_{i-1} * k_i**2 * n_i

Only convolutional layers are counted (no biases, pooling or dense layers).
``m_i`` is the side of the feature map produced by conv layer i under the
network's shape rule: same-padded convs keep the side, each 2x2 pool floors
it to half.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import ShapeError
from .nn.model import ArchConfig

__all__ = [
    "ConvRecord",
    "ArchDescriptor",
    "derive_arch",
    "parameter_count",
    "flops_count",
    "REFERENCE_FIGURES",
    "report_rows",
    "format_report",
    "report_csv",
]

# input side -> (reference FLOPs, reference parameter count), quoted to 3 significant figures
REFERENCE_FIGURES = {150: (2.99e8, 112_320), 100: (1.56e8, 112_320), 50: (3.98e7, 112_320)}


@dataclass(frozen=True)
class ConvRecord:
    in_channels: int
    out_channels: int
    kernel: int
    side: int

    @property
    def params(self) -> int:
        return self.in_channels * self.kernel**2 * self.out_channels

    @property
    def flops(self) -> int:
        return self.in_channels * self.side**2 * self.kernel**2 * self.out_channels


@dataclass(frozen=True)
class ArchDescriptor:
    input_side: int
    input_channels: int
    layers: tuple[ConvRecord, ...]

    @property
    def sides(self) -> tuple[int, ...]:
        return tuple(r.side for r in self.layers)

    def scaled(self, factor: int) -> "ArchDescriptor":
        """Same stack with every feature-map side multiplied by ``factor``."""
        layers = tuple(ConvRecord(r.in_channels, r.out_channels, r.kernel, r.side * factor) for r in self.layers)
        return ArchDescriptor(self.input_side * factor, self.input_channels, layers)


def derive_arch(input_side: int = 100, input_channels: int = 3, model=None, pooling: str = "floor") -> ArchDescriptor:
    """Per-conv-layer (n_{i-1}, n_i, k_i, m_i) for ``model`` fed ``input_side`` images.

    ``model`` may be a CnnModel, an ArchConfig, or None for the default stack.
    ``pooling="ceil"`` describes a hypothetical ceil-mode pool for comparison;
    the network itself always floors. Raises ShapeError when the input is too
    small to survive every pooling stage.
    """
    if pooling not in ("floor", "ceil"):
        raise ShapeError(f"pooling must be 'floor' or 'ceil', got {pooling!r}")
    arch = getattr(model, "arch", model) or ArchConfig()
    if input_side < 1 or input_channels < 1:
        raise ShapeError(f"invalid input {input_side}x{input_side}x{input_channels}")
    records = []
    side, c_in = input_side, input_channels
    for f in arch.filters:
        if side < 2:
            raise ShapeError(
                f"input side {input_side} shrinks to {side} before conv layer {len(records) + 1}; "
                f"needs at least {2 ** len(arch.filters)}"
            )
        records.append(ConvRecord(c_in, f, arch.kernel, side))
        c_in, side = f, (side // 2 if pooling == "floor" else math.ceil(side / 2))
    if side < 1:
        raise ShapeError(f"input side {input_side} leaves no spatial extent after the last pooling stage")
    return ArchDescriptor(input_side, input_channels, tuple(records))


def parameter_count(arch: ArchDescriptor) -> int:
    return sum(r.params for r in arch.layers)


def flops_count(arch: ArchDescriptor) -> int:
    return sum(r.flops for r in arch.layers)


def report_rows(arch: ArchDescriptor) -> list[dict]:
    rows = [
        {
            "layer": f"conv{i + 1}",
            "n_in": r.in_channels,
            "n_out": r.out_channels,
            "m": r.side,
            "k": r.kernel,
            "params": r.params,
            "flops": r.flops,
        }
        for i, r in enumerate(arch.layers)
    ]
    rows.append(
        {"layer": "total", "n_in": "", "n_out": "", "m": "", "k": "", "params": parameter_count(arch), "flops": flops_count(arch)}
    )
    return rows


def three_figures(value: float) -> float:
    return float(f"{value:.2e}")


def discrepancy_note(arch: ArchDescriptor) -> str | None:
    """Compare against the reference figures; None when the 3-figure values agree."""
    reference = REFERENCE_FIGURES.get(arch.input_side)
    if reference is None or arch.input_channels != 3:
        return None
    flops = flops_count(arch)
    if three_figures(flops) == reference[0]:
        return None
    try:
        ceil_flops = flops_count(derive_arch(arch.input_side, arch.input_channels, pooling="ceil"))
    except ShapeError:
        ceil_flops = None
    note = (
        f"note: reference figure is {reference[0]:.2e} FLOPs for {arch.input_side}x{arch.input_side}x3; "
        f"the conv-layer formula with floor pooling gives {flops:,} ({flops:.2e})"
    )
    if ceil_flops is not None and three_figures(ceil_flops) == reference[0]:
        return note + f"; ceil-mode pooling would give {ceil_flops:,} ({ceil_flops:.2e}), which matches"
    return note + (
        f"; ceil-mode pooling gives {ceil_flops:,} ({ceil_flops:.2e}); neither convention reproduces it"
        if ceil_flops is not None
        else "; no pooling convention reproduces it"
    )


def format_report(arch: ArchDescriptor) -> str:
    rows = report_rows(arch)
    header = ["layer", "n_in", "n_out", "m", "k", "params", "flops"]
    cells = [header] + [
        [str(r[h]) if not isinstance(r[h], int) or h in ("n_in", "n_out", "m", "k") else f"{r[h]:,}" for h in header]
        for r in rows
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    flops = flops_count(arch)
    lines.append("")
    lines.append(f"input {arch.input_side}x{arch.input_side}x{arch.input_channels}")
    lines.append(f"parameters {parameter_count(arch):,}")
    lines.append(f"flops {flops:,} ({flops:.2e})")
    note = discrepancy_note(arch)
    if note:
        lines.append(note)
    return "\n".join(lines)


def report_csv(arch: ArchDescriptor) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["layer", "n_in", "n_out", "m", "k", "params", "flops"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(report_rows(arch))
    return buf.getvalue()
