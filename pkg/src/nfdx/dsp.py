"""Signal analysis for S11 traces: power, FFT spectrum, fault peaks, STFT, images."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage, signal

from .errors import ConfigError, DomainError

__all__ = [
    "Spectrum",
    "FaultPeak",
    "WindowKind",
    "StftConfig",
    "Spectrogram",
    "ImageMode",
    "SpectroImage",
    "IMAGE_SIDES",
    "average_power",
    "power_change_percent",
    "amplitude_spectrum",
    "detect_fault_peaks",
    "stft",
    "to_image",
]

IMAGE_SIDES = (50, 100, 150)
PEAK_MEDIAN_FACTOR = 3.0
PEAK_RELATIVE_FLOOR = 1e-6  # of the spectrum maximum; keeps FFT round-off from passing as peaks


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DomainError(f"expected a nonempty 1-D signal, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("signal contains non-finite samples")
    return x


def average_power(x) -> float:
    """Mean squared magnitude, (1/N) * sum |x(n)|**2."""
    x = np.asarray(x)
    if x.size == 0:
        raise DomainError("average_power of an empty signal")
    return float(np.mean(np.abs(x) ** 2))


def power_change_percent(p_condition: float, p_normal: float) -> float:
    """Percentage change of ``p_condition`` relative to ``p_normal``."""
    if not p_normal > 0:
        raise DomainError(f"reference power must be > 0, got {p_normal}")
    return 100.0 * (p_condition - p_normal) / p_normal


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    bin_width: float

    def to_csv(self, path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.frequencies, self.amplitudes]),
            delimiter=",",
            header="frequency_hz,amplitude",
            comments="",
            fmt="%.10g",
        )


def amplitude_spectrum(x, sample_rate: float) -> Spectrum:
    """One-sided amplitude spectrum of the mean-removed signal (rectangular window).

    Scaled so that a bin-centred sine of amplitude A shows a peak of height A.
    """
    x = _as_signal(x)
    if not sample_rate > 0:
        raise DomainError(f"sample_rate must be > 0, got {sample_rate}")
    n = x.size
    amps = np.abs(np.fft.rfft(x - x.mean())) / n
    # every bin except DC and (for even n) Nyquist has a mirrored twin
    stop = amps.size - 1 if n % 2 == 0 else amps.size
    amps[1:stop] *= 2.0
    return Spectrum(np.fft.rfftfreq(n, d=1.0 / sample_rate), amps, sample_rate / n)


@dataclass(frozen=True)
class FaultPeak:
    harmonic: int
    frequency: float
    amplitude: float


def detect_fault_peaks(
    spec: Spectrum, expected: float, n_harmonics: int, tolerance: float
) -> list[FaultPeak]:
    """Local maxima near each harmonic of ``expected`` that stand above the noise floor.

    A harmonic k is reported when the largest local maximum inside
    ``[k*expected - tolerance, k*expected + tolerance]`` exceeds three times the
    median spectrum amplitude (and a 1e-6 fraction of the spectrum maximum, which
    only matters for noise-free signals). Missing harmonics are simply absent.
    """
    if tolerance < spec.bin_width:
        raise DomainError(f"tolerance {tolerance} Hz is narrower than one bin ({spec.bin_width} Hz)")
    amps = spec.amplitudes
    freqs = spec.frequencies
    floor = max(PEAK_MEDIAN_FACTOR * float(np.median(amps)), PEAK_RELATIVE_FLOOR * float(amps.max(initial=0.0)))

    padded = np.concatenate(([-np.inf], amps, [-np.inf]))
    is_local_max = (amps >= padded[:-2]) & (amps >= padded[2:])

    found = []
    for k in range(1, n_harmonics + 1):
        centre = k * expected
        window = (freqs >= centre - tolerance) & (freqs <= centre + tolerance) & is_local_max
        idx = np.flatnonzero(window)
        if idx.size == 0:
            continue
        best = idx[np.argmax(amps[idx])]
        if amps[best] > floor:
            found.append(FaultPeak(k, float(freqs[best]), float(amps[best])))
    return found


class WindowKind(str, enum.Enum):
    HANN = "hann"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class StftConfig:
    window: WindowKind = WindowKind.HANN
    window_length: int = 128
    hop: int = 64
    fft_size: int | None = None  # defaults to window_length

    def __post_init__(self):
        object.__setattr__(self, "window", WindowKind(self.window))
        if self.fft_size is None:
            object.__setattr__(self, "fft_size", self.window_length)
        if self.window_length < 1:
            raise ConfigError(f"window_length must be >= 1, got {self.window_length}")
        if not 0 < self.hop <= self.window_length:
            raise ConfigError(f"hop must be in (0, window_length], got {self.hop}")
        if self.fft_size < self.window_length:
            raise ConfigError(f"fft_size {self.fft_size} is shorter than window_length {self.window_length}")

    def taper(self) -> np.ndarray:
        if self.window is WindowKind.RECTANGULAR:
            return np.ones(self.window_length)
        return signal.get_window("hann", self.window_length)


@dataclass(frozen=True)
class Spectrogram:
    """Power |X(m, w)|**2 with frames along axis 0 and frequency bins along axis 1."""

    power: np.ndarray
    frame_times: np.ndarray
    bin_frequencies: np.ndarray

    @property
    def shape(self):
        return self.power.shape


def frame_count(n: int, window_length: int, hop: int) -> int:
    return (n - window_length) // hop + 1


def stft(x, cfg: StftConfig = StftConfig(), sample_rate: float = 1000.0) -> Spectrogram:
    """Power spectrogram; frame m covers samples [m*hop, m*hop + window_length)."""
    x = _as_signal(x)
    w = cfg.window_length
    if x.size < w:
        raise DomainError(f"signal of {x.size} samples is shorter than one window ({w})")
    frames = np.lib.stride_tricks.sliding_window_view(x, w)[:: cfg.hop]
    spectra = np.fft.rfft(frames * cfg.taper(), n=cfg.fft_size, axis=1)
    power = spectra.real**2 + spectra.imag**2
    times = (np.arange(frames.shape[0]) * cfg.hop + 0.5 * w) / sample_rate
    freqs = np.fft.rfftfreq(cfg.fft_size, d=1.0 / sample_rate)
    return Spectrogram(power, times, freqs)


class ImageMode(str, enum.Enum):
    MAGNITUDE = "magnitude"
    PHASE = "phase"
    COMBINED = "combined"

    @classmethod
    def parse(cls, text) -> "ImageMode":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "magnitude": cls.MAGNITUDE,
            "magnitudeonly": cls.MAGNITUDE,
            "mag": cls.MAGNITUDE,
            "phase": cls.PHASE,
            "phaseonly": cls.PHASE,
            "combined": cls.COMBINED,
            "both": cls.COMBINED,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown image mode {text!r} (magnitude, phase or combined)") from None


@dataclass(frozen=True)
class SpectroImage:
    """Channels-first float image, shape (3, side, side), values in [0, 1]."""

    pixels: np.ndarray

    @property
    def side(self) -> int:
        return self.pixels.shape[-1]

    def to_pgm(self, stem) -> list:
        """Write one binary 8-bit PGM per channel as ``<stem>_c<i>.pgm``."""
        stem = Path(stem)
        paths = []
        for i, plane in enumerate(self.pixels):
            data = np.rint(plane * 255.0).astype(np.uint8)
            path = stem.with_name(f"{stem.name}_c{i}.pgm")
            with open(path, "wb") as fh:
                fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
                fh.write(data.tobytes())
            paths.append(path)
        return paths

    def to_csv(self, path) -> None:
        c, h, w = self.pixels.shape
        ch, row, col = np.meshgrid(np.arange(c), np.arange(h), np.arange(w), indexing="ij")
        table = np.column_stack([ch.ravel(), row.ravel(), col.ravel(), self.pixels.ravel()])
        np.savetxt(path, table, delimiter=",", header="channel,row,col,value", comments="", fmt=["%d", "%d", "%d", "%.8f"])


def _plane(sg: Spectrogram, side: int) -> np.ndarray:
    """Log-compressed, bilinearly resized, min-max normalised single plane.

    Rows are frequency bins (low to high), columns are frames.
    """
    if sg.power.size == 0:
        raise DomainError("empty spectrogram")
    logp = np.log10(1.0 + sg.power.T)
    if logp.max() == logp.min():
        # decided before resizing: interpolation round-off would otherwise be stretched to [0, 1]
        return np.zeros((side, side))
    rows, cols = logp.shape
    resized = ndimage.zoom(logp, (side / rows, side / cols), order=1, mode="nearest", grid_mode=True)
    lo, hi = resized.min(), resized.max()
    if not hi > lo:
        return np.zeros((side, side))
    return np.clip((resized - lo) / (hi - lo), 0.0, 1.0)


def to_image(
    sg: Spectrogram,
    side: int = 100,
    mode: ImageMode | str = ImageMode.MAGNITUDE,
    companion: Spectrogram | None = None,
) -> SpectroImage:
    """Render a spectrogram as a 3-channel ``side`` x ``side`` image in [0, 1].

    Single-signal modes replicate one plane three times. ``COMBINED`` takes
    ``sg`` as the magnitude spectrogram and ``companion`` as the phase one and
    stacks [magnitude, phase, their mean]. A constant spectrogram yields an
    all-zero plane.
    """
    mode = ImageMode.parse(mode)
    if side not in IMAGE_SIDES:
        raise DomainError(f"image side must be one of {IMAGE_SIDES}, got {side}")
    if mode is ImageMode.COMBINED:
        if companion is None:
            raise DomainError("combined mode needs the phase spectrogram as companion")
        mag = _plane(sg, side)
        pha = _plane(companion, side)
        pixels = np.stack([mag, pha, 0.5 * (mag + pha)])
    else:
        if companion is not None:
            raise DomainError(f"{mode.value} mode takes no companion spectrogram")
        plane = _plane(sg, side)
        pixels = np.stack([plane, plane, plane])
    return SpectroImage(np.ascontiguousarray(pixels))

