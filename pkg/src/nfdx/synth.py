"""Synthetic S11 traces carrying fault-specific vibration signatures.

Each trace is a baseline plus a sum of sinusoids at the characteristic
frequencies of the operating condition, scaled by a near-field coupling
factor, plus white Gaussian noise. Magnitude (dB) and phase (degrees)
channels share frequencies but get independent random phases.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DatasetIOError
from .physics import (
    HY6201,
    AntennaSpec,
    BearingGeometry,
    ImbalanceSpec,
    imbalance_force,
    inner_race_frequency,
    outer_race_frequency,
    reactive_near_field_radius,
)

__all__ = [
    "OperatingCondition",
    "Carrier",
    "POSITIONS_CM",
    "MotorConfig",
    "SensingConfig",
    "SynthConfig",
    "S11Trace",
    "vibration_signature",
    "coupling_factor",
    "synthesize_trial",
    "trial_seed",
    "default_plan",
    "generate_dataset",
]

MAX_HARMONIC_FRACTION = 0.45  # of sample_rate; higher harmonics are dropped
MASK64 = (1 << 64) - 1


class OperatingCondition(enum.IntEnum):
    NORMAL = 0
    IMBALANCE = 1
    INNER_RACE = 2
    OUTER_RACE = 3

    @property
    def label(self) -> str:
        return ("Normal", "Imbalance", "InnerRace", "OuterRace")[self]


class Carrier(enum.IntEnum):
    """Carrier frequencies of the measurement grid; the value is the file code."""

    MHZ_433 = 0
    GHZ_2_4 = 1
    GHZ_5_8 = 2

    @property
    def mhz(self) -> int:
        return (433, 2400, 5800)[self]

    @property
    def hz(self) -> float:
        return self.mhz * 1e6

    @classmethod
    def from_mhz(cls, mhz: float) -> "Carrier":
        for c in cls:
            if c.mhz == mhz:
                return c
        raise ConfigError(f"unknown carrier {mhz} MHz (expected 433, 2400 or 5800)")

    @classmethod
    def parse(cls, text: str) -> "Carrier":
        """Accept '433', '433MHz', '2.4GHz', '5800', '5.8 GHz' and similar."""
        t = str(text).strip().lower().replace(" ", "")
        scale = 1.0
        if t.endswith("ghz"):
            t, scale = t[:-3], 1000.0
        elif t.endswith("mhz"):
            t = t[:-3]
        try:
            value = float(t) * scale
        except ValueError:
            raise ConfigError(f"cannot parse carrier {text!r}") from None
        return cls.from_mhz(round(value))


POSITIONS_CM = (0, 5, 10)


def _default_imbalance() -> ImbalanceSpec:
    return ImbalanceSpec(mass=0.01, radius=0.05, angular_speed=2.0 * math.pi * 25.0)


REFERENCE_IMBALANCE_FORCE = imbalance_force(_default_imbalance())


@dataclass(frozen=True)
class MotorConfig:
    condition: OperatingCondition = OperatingCondition.NORMAL
    shaft_frequency: float = 25.0
    geometry: BearingGeometry = HY6201
    imbalance: ImbalanceSpec = field(default_factory=_default_imbalance)

    def __post_init__(self):
        if not self.shaft_frequency > 0:
            raise ConfigError(f"shaft_frequency must be > 0, got {self.shaft_frequency}")
        object.__setattr__(self, "condition", OperatingCondition(self.condition))


@dataclass(frozen=True)
class SensingConfig:
    carrier: Carrier = Carrier.GHZ_5_8
    position_cm: int = 0
    largest_dimension: float = 0.05  # antenna size L in metres (assumed)

    def __post_init__(self):
        object.__setattr__(self, "carrier", Carrier(self.carrier))
        if self.position_cm not in POSITIONS_CM:
            raise ConfigError(f"position_cm must be one of {POSITIONS_CM}, got {self.position_cm}")

    @property
    def antenna(self) -> AntennaSpec:
        return AntennaSpec(largest_dimension=self.largest_dimension, carrier_frequency=self.carrier.hz)


@dataclass(frozen=True)
class SynthConfig:
    sample_rate: float = 1000.0
    duration: float = 5.0
    baseline_magnitude: float = -15.0  # dB
    baseline_phase: float = -45.0  # degrees
    modulation_depth_mag: float = 1.0  # dB
    modulation_depth_phase: float = 0.7  # degrees
    noise_sigma: float = 0.1  # std of additive noise, as a fraction of modulation_depth_mag
    n_harmonics: int = 5
    seed: int = 0

    def __post_init__(self):
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ConfigError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if not self.noise_sigma >= 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.n_harmonics < 1:
            raise ConfigError(f"n_harmonics must be >= 1, got {self.n_harmonics}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def n_samples(self) -> int:
        return int(round(self.sample_rate * self.duration))


@dataclass
class S11Trace:
    """Magnitude (dB) and phase (degrees) series plus acquisition metadata."""

    magnitude: np.ndarray
    phase: np.ndarray
    sample_rate: float
    condition: OperatingCondition = OperatingCondition.NORMAL
    carrier: Carrier = Carrier.GHZ_5_8
    position_cm: int = 0
    trial: int = 0
    seed: int = 0

    def __post_init__(self):
        self.magnitude = np.ascontiguousarray(self.magnitude, dtype=np.float64)
        self.phase = np.ascontiguousarray(self.phase, dtype=np.float64)
        if self.magnitude.ndim != 1 or self.magnitude.shape != self.phase.shape:
            raise ConfigError(
                f"magnitude and phase must be 1-D and equal length, got "
                f"{self.magnitude.shape} and {self.phase.shape}"
            )
        self.condition = OperatingCondition(self.condition)
        self.carrier = Carrier(self.carrier)

    def __len__(self):
        return self.magnitude.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def label(self) -> int:
        return int(self.condition)

    def truncated(self, seconds: float) -> "S11Trace":
        """Leading ``seconds`` of the trace."""
        n = int(round(seconds * self.sample_rate))
        if not 0 < n <= len(self):
            raise ConfigError(f"cannot take {seconds} s from a {self.duration} s trace")
        return dataclasses.replace(self, magnitude=self.magnitude[:n].copy(), phase=self.phase[:n].copy())


def vibration_signature(
    condition: OperatingCondition, motor: MotorConfig, n_harmonics: int
) -> list[tuple[float, float]]:
    """(frequency Hz, relative amplitude) pairs of the vibration for one condition."""
    condition = OperatingCondition(condition)
    f_rpm = motor.shaft_frequency
    if condition is OperatingCondition.NORMAL:
        return [(f_rpm, 0.1)]
    if condition is OperatingCondition.IMBALANCE:
        fundamental, base = f_rpm, imbalance_force(motor.imbalance) / REFERENCE_IMBALANCE_FORCE
    elif condition is OperatingCondition.INNER_RACE:
        fundamental, base = inner_race_frequency(motor.geometry, f_rpm), 0.8
    else:
        fundamental, base = outer_race_frequency(motor.geometry, f_rpm), 0.6
    return [(k * fundamental, base / k) for k in range(1, n_harmonics + 1)]


def coupling_factor(sensing: SensingConfig) -> float:
    """exp(-d / R): decay of vibration coupling with distance d from the source."""
    radius = reactive_near_field_radius(sensing.antenna)
    return math.exp(-(sensing.position_cm / 100.0) / radius)


def _audible_components(signature, sample_rate):
    limit = MAX_HARMONIC_FRACTION * sample_rate
    if signature and signature[0][0] > limit:
        raise ConfigError(
            f"fundamental {signature[0][0]:.3f} Hz exceeds {MAX_HARMONIC_FRACTION} x "
            f"sample_rate ({sample_rate} Hz); raise sample_rate"
        )
    return [(f, a) for f, a in signature if f <= limit]


def synthesize_trial(
    motor: MotorConfig, sensing: SensingConfig, cfg: SynthConfig, trial: int = 0
) -> S11Trace:
    """Generate one deterministic S11 trace; ``cfg.seed`` drives every random draw."""
    components = _audible_components(
        vibration_signature(motor.condition, motor, cfg.n_harmonics), cfg.sample_rate
    )
    freqs = np.array([f for f, _ in components])
    amps = np.array([a for _, a in components])
    n = cfg.n_samples
    t = np.arange(n) / cfg.sample_rate

    rng = np.random.default_rng(cfg.seed)
    phi_mag = rng.uniform(0.0, 2.0 * np.pi, size=freqs.size)
    phi_phase = rng.uniform(0.0, 2.0 * np.pi, size=freqs.size)
    noise_std = cfg.noise_sigma * cfg.modulation_depth_mag
    noise_mag = rng.standard_normal(n) * noise_std
    noise_phase = rng.standard_normal(n) * noise_std

    arg = 2.0 * np.pi * np.outer(t, freqs)
    vib_mag = np.sin(arg + phi_mag) @ amps
    vib_phase = np.sin(arg + phi_phase) @ amps
    c = coupling_factor(sensing)
    magnitude = cfg.baseline_magnitude + c * cfg.modulation_depth_mag * vib_mag + noise_mag
    phase = cfg.baseline_phase + c * cfg.modulation_depth_phase * vib_phase + noise_phase
    return S11Trace(
        magnitude=magnitude,
        phase=phase,
        sample_rate=cfg.sample_rate,
        condition=motor.condition,
        carrier=sensing.carrier,
        position_cm=sensing.position_cm,
        trial=trial,
        seed=cfg.seed,
    )


def trial_seed(master_seed: int, condition: int, carrier: int, position_cm: int, trial: int) -> int:
    """Master seed XOR a stable 64-bit hash of the trial coordinates."""
    key = struct.pack("<BBBH", int(condition), int(carrier), int(position_cm), int(trial))
    digest = hashlib.blake2b(key, digest_size=8, person=b"nfdx-trial").digest()
    return (int(master_seed) ^ int.from_bytes(digest, "little")) & MASK64


def default_plan(
    trials: int = 40,
    conditions: Iterable[OperatingCondition] = tuple(OperatingCondition),
    carriers: Iterable[Carrier] = tuple(Carrier),
    positions: Iterable[int] = POSITIONS_CM,
    largest_dimension: float = 0.05,
) -> list[tuple[MotorConfig, SensingConfig, int]]:
    """The measurement grid: conditions x carriers x positions, ``trials`` each."""
    plan = []
    for cond in conditions:
        for carrier in carriers:
            for pos in positions:
                plan.append(
                    (
                        MotorConfig(condition=cond),
                        SensingConfig(carrier=carrier, position_cm=pos, largest_dimension=largest_dimension),
                        trials,
                    )
                )
    return plan


def trace_filename(condition, carrier, position_cm, trial) -> str:
    return (
        f"{OperatingCondition(condition).label.lower()}_{Carrier(carrier).mhz}mhz_"
        f"{position_cm}cm_t{trial:03d}.s11"
    )


def generate_dataset(
    plan: Sequence[tuple[MotorConfig, SensingConfig, int]],
    cfg: SynthConfig,
    out_dir,
    manifest_name: str = "manifest.csv",
):
    """Synthesize every trial of ``plan`` into ``out_dir`` and write the manifest.

    Returns the :class:`~nfdx.formats.Manifest`, whose paths are relative to
    ``out_dir``.
    """
    from .formats import Manifest, ManifestEntry, write_trace

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"{out}: {exc.strerror or exc}") from exc

    entries = []
    for motor, sensing, n_trials in plan:
        for trial in range(n_trials):
            seed = trial_seed(cfg.seed, motor.condition, sensing.carrier, sensing.position_cm, trial)
            trace = synthesize_trial(motor, sensing, dataclasses.replace(cfg, seed=seed), trial=trial)
            name = trace_filename(motor.condition, sensing.carrier, sensing.position_cm, trial)
            write_trace(out / name, trace)
            entries.append(
                ManifestEntry(
                    path=name,
                    condition=motor.condition,
                    carrier=sensing.carrier,
                    position_cm=sensing.position_cm,
                    trial=trial,
                    seed=seed,
                )
            )
    manifest = Manifest(entries, root=out)
    manifest.write(out / manifest_name)
    return manifest
