"""On-disk formats: binary trace files, the dataset manifest and run configs.

Trace file (little-endian)::

    b"S11T" u16 version f64 sample_rate u32 N
    u8 condition u8 carrier_code u8 position_cm u16 trial u64 seed
    N x f64 magnitude, N x f64 phase
"""

from __future__ import annotations

import csv
import dataclasses
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .dsp import IMAGE_SIDES, ImageMode, StftConfig
from .errors import ConfigError, CorruptFileError, DatasetIOError, MissingCellError, VersionMismatchError
from .nn.train import TrainConfig
from .synth import Carrier, OperatingCondition, S11Trace, SynthConfig

__all__ = [
    "TRACE_MAGIC",
    "TRACE_VERSION",
    "encode_trace",
    "decode_trace",
    "write_trace",
    "read_trace",
    "ManifestEntry",
    "Manifest",
    "RunConfig",
    "SweepConfig",
    "load_run_config",
    "parse_run_config",
]

TRACE_MAGIC = b"S11T"
TRACE_VERSION = 1
_TRACE_HEAD = struct.Struct("<4sHdIBBBHQ")


def encode_trace(trace: S11Trace) -> bytes:
    n = len(trace)
    if not (np.all(np.isfinite(trace.magnitude)) and np.all(np.isfinite(trace.phase))):
        raise DatasetIOError("refusing to write non-finite samples")
    head = _TRACE_HEAD.pack(
        TRACE_MAGIC,
        TRACE_VERSION,
        float(trace.sample_rate),
        n,
        int(trace.condition),
        int(trace.carrier),
        int(trace.position_cm),
        int(trace.trial),
        int(trace.seed),
    )
    return head + trace.magnitude.astype("<f8").tobytes() + trace.phase.astype("<f8").tobytes()


def decode_trace(data: bytes, source="<bytes>") -> S11Trace:
    if len(data) < _TRACE_HEAD.size:
        raise CorruptFileError(f"{source}: truncated header ({len(data)} bytes)")
    magic, version, fs, n, cond, carrier, pos, trial, seed = _TRACE_HEAD.unpack_from(data, 0)
    if magic != TRACE_MAGIC:
        raise CorruptFileError(f"{source}: bad magic {magic!r}, not a trace file")
    if version != TRACE_VERSION:
        raise VersionMismatchError(f"{source}: trace format version {version}, this build reads {TRACE_VERSION}")
    payload = len(data) - _TRACE_HEAD.size
    if payload != 16 * n:
        raise CorruptFileError(f"{source}: header declares {n} samples per channel but payload holds {payload} bytes")
    if cond > 3 or carrier > 2:
        raise CorruptFileError(f"{source}: invalid condition {cond} or carrier code {carrier}")
    if not (fs > 0 and math.isfinite(fs)):
        raise CorruptFileError(f"{source}: invalid sample rate {fs}")
    body = np.frombuffer(data, dtype="<f8", count=2 * n, offset=_TRACE_HEAD.size).astype(np.float64)
    return S11Trace(
        magnitude=body[:n].copy(),
        phase=body[n:].copy(),
        sample_rate=fs,
        condition=OperatingCondition(cond),
        carrier=Carrier(carrier),
        position_cm=pos,
        trial=trial,
        seed=seed,
    )


def write_trace(path, trace: S11Trace) -> None:
    data = encode_trace(trace)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise DatasetIOError(f"{path}: {exc.strerror or exc}") from exc


def read_trace(path) -> S11Trace:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DatasetIOError(f"{path}: {exc.strerror or exc}") from exc
    return decode_trace(data, source=str(path))


# ------------------------------------------------------------------ manifest

MANIFEST_FIELDS = ["path", "condition", "carrier_mhz", "position_cm", "trial", "seed"]


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    condition: OperatingCondition
    carrier: Carrier
    position_cm: int
    trial: int
    seed: int

    @property
    def key(self):
        return (int(self.condition), int(self.carrier), self.position_cm, self.trial)


class Manifest:
    """Ordered dataset index; ``root`` resolves relative paths."""

    def __init__(self, entries: Iterable[ManifestEntry], root="."):
        self.entries = list(entries)
        self.root = Path(root)
        seen = set()
        for e in self.entries:
            if e.key in seen:
                raise CorruptFileError(
                    f"duplicate manifest entry for condition={OperatingCondition(e.condition).label} "
                    f"carrier={Carrier(e.carrier).mhz}MHz position={e.position_cm}cm trial={e.trial}"
                )
            seen.add(e.key)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def write(self, path) -> None:
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(MANIFEST_FIELDS)
                for e in self.entries:
                    writer.writerow([e.path, int(e.condition), e.carrier.mhz, e.position_cm, e.trial, e.seed])
        except OSError as exc:
            raise DatasetIOError(f"{path}: {exc.strerror or exc}") from exc

    @classmethod
    def read(cls, path, validate: bool = True) -> "Manifest":
        path = Path(path)
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise DatasetIOError(f"{path}: {exc.strerror or exc}") from exc
        if not rows or rows[0] != MANIFEST_FIELDS:
            raise CorruptFileError(f"{path}:1: manifest header must be {','.join(MANIFEST_FIELDS)}")
        entries = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                rel, cond, mhz, pos, trial, seed = row
                entries.append(
                    ManifestEntry(rel, OperatingCondition(int(cond)), Carrier.from_mhz(int(mhz)), int(pos), int(trial), int(seed))
                )
            except (ValueError, ConfigError) as exc:
                raise CorruptFileError(f"{path}:{lineno}: bad manifest row {row!r} ({exc})") from None
        manifest = cls(entries, root=path.parent)
        if validate:
            for e in manifest.entries:
                t = read_trace(manifest.resolve(e))
                if (int(t.condition), int(t.carrier), t.position_cm, t.trial) != e.key:
                    raise CorruptFileError(f"{manifest.resolve(e)}: header metadata disagrees with the manifest row")
        return manifest

    def select(self, carrier: Carrier, position_cm: int, conditions=tuple(OperatingCondition)) -> list[ManifestEntry]:
        """Entries of one (carrier, position) cell; every condition must be present."""
        chosen = [e for e in self.entries if e.carrier == carrier and e.position_cm == position_cm]
        for cond in conditions:
            if not any(e.condition == cond for e in chosen):
                raise MissingCellError(
                    f"no trials for condition={OperatingCondition(cond).label} carrier={Carrier(carrier).mhz}MHz "
                    f"position={position_cm}cm"
                )
        return chosen

    def load(self, entries: Iterable[ManifestEntry]) -> list[S11Trace]:
        return [read_trace(self.resolve(e)) for e in entries]


# ---------------------------------------------------------------- run config


@dataclass(frozen=True)
class SweepConfig:
    axes: tuple = ("carrier", "position")
    carriers: tuple = tuple(Carrier)
    positions: tuple = (0, 5, 10)
    modes: tuple = (ImageMode.COMBINED,)
    windows: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)
    folds: int = 5


@dataclass(frozen=True)
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    trials: int = 40
    antenna_length: float = 0.05
    image_side: int = 100
    image_mode: ImageMode = ImageMode.COMBINED
    window_seconds: float = 3.0


def _int(v):
    return int(v, 0) if v.strip().lower().startswith("0x") else int(v)


def _positive_float(v):
    x = float(v)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"{v!r} is not a positive number")
    return x


def _list(parse):
    return lambda v: tuple(parse(p) for p in v.replace(";", ",").split(",") if p.strip())


def _axes(v):
    axes = tuple(p.strip().lower() for p in v.replace(";", ",").split(",") if p.strip())
    allowed = {"carrier", "position", "mode"}
    if axes == ("window",):
        return axes
    if not axes or not set(axes) <= allowed:
        raise ValueError("axes must be a subset of carrier,position,mode or exactly window")
    return axes


def _side(v):
    s = int(v)
    if s not in IMAGE_SIDES:
        raise ValueError(f"side must be one of {IMAGE_SIDES}")
    return s


# key -> (section, attribute, parser); section None means a top-level RunConfig field
_SCHEMA = {
    "synth.sample_rate": ("synth", "sample_rate", float),
    "synth.duration": ("synth", "duration", float),
    "synth.baseline_magnitude": ("synth", "baseline_magnitude", float),
    "synth.baseline_phase": ("synth", "baseline_phase", float),
    "synth.modulation_depth_mag": ("synth", "modulation_depth_mag", float),
    "synth.modulation_depth_phase": ("synth", "modulation_depth_phase", float),
    "synth.noise_sigma": ("synth", "noise_sigma", float),
    "synth.n_harmonics": ("synth", "n_harmonics", int),
    "synth.seed": ("synth", "seed", _int),
    "synth.trials": (None, "trials", int),
    "synth.antenna_length": (None, "antenna_length", _positive_float),
    "stft.window": ("stft", "window", lambda v: v.strip().lower()),
    "stft.window_length": ("stft", "window_length", int),
    "stft.hop": ("stft", "hop", int),
    "stft.fft_size": ("stft", "fft_size", int),
    "image.side": (None, "image_side", _side),
    "image.mode": (None, "image_mode", ImageMode.parse),
    "image.window_seconds": (None, "window_seconds", _positive_float),
    "train.learning_rate": ("train", "learning_rate", float),
    "train.momentum": ("train", "momentum", float),
    "train.epochs": ("train", "epochs", int),
    "train.batch_size": ("train", "batch_size", int),
    "train.validation_fraction": ("train", "validation_fraction", float),
    "train.seed": ("train", "seed", _int),
    "train.patience": ("train", "patience", int),
    "sweep.axes": ("sweep", "axes", _axes),
    "sweep.carriers": ("sweep", "carriers", _list(Carrier.parse)),
    "sweep.positions": ("sweep", "positions", _list(int)),
    "sweep.modes": ("sweep", "modes", _list(ImageMode.parse)),
    "sweep.windows": ("sweep", "windows", _list(_positive_float)),
    "sweep.folds": ("sweep", "folds", int),
}

CONFIG_KEYS = tuple(_SCHEMA)


def parse_run_config(text: str, source="<config>", env_seed: str | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors.

    ``env_seed`` (the NFDX_SEED variable) overrides both synth.seed and train.seed.
    """
    sections = {"synth": {}, "stft": {}, "train": {}, "sweep": {}}
    top = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        section, attr, parse = _SCHEMA[key]
        try:
            parsed = parse(value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r} ({exc})") from None
        (sections[section] if section else top)[attr] = parsed

    if env_seed is not None and env_seed.strip():
        try:
            seed = _int(env_seed)
        except ValueError:
            raise ConfigError(f"NFDX_SEED: not an integer: {env_seed!r}") from None
        sections["synth"]["seed"] = seed
        sections["train"]["seed"] = seed

    try:
        return RunConfig(
            synth=SynthConfig(**sections["synth"]),
            stft=StftConfig(**sections["stft"]),
            train=TrainConfig(**sections["train"]),
            sweep=SweepConfig(**sections["sweep"]),
            **top,
        )
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_run_config(path=None, env_seed: str | None = None) -> RunConfig:
    if path is None:
        return parse_run_config("", env_seed=env_seed)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    return parse_run_config(text, source=str(path), env_seed=env_seed)


def replace_config(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
