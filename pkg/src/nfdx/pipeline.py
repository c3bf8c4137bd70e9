"""Trace -> spectrogram image -> labelled arrays, shared by the CLI and sweeps."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dsp import ImageMode, SpectroImage, StftConfig, stft, to_image
from .synth import S11Trace


def trace_spectrograms(trace: S11Trace, cfg: StftConfig, window_seconds: float | None = None):
    """(magnitude, phase) spectrograms of the mean-removed, optionally truncated trace."""
    if window_seconds is not None:
        trace = trace.truncated(window_seconds)
    mag = stft(trace.magnitude - trace.magnitude.mean(), cfg, trace.sample_rate)
    pha = stft(trace.phase - trace.phase.mean(), cfg, trace.sample_rate)
    return mag, pha


def trace_image(
    trace: S11Trace,
    side: int = 100,
    mode=ImageMode.COMBINED,
    cfg: StftConfig = StftConfig(),
    window_seconds: float | None = None,
) -> SpectroImage:
    mode = ImageMode.parse(mode)
    mag, pha = trace_spectrograms(trace, cfg, window_seconds)
    if mode is ImageMode.MAGNITUDE:
        return to_image(mag, side, mode)
    if mode is ImageMode.PHASE:
        return to_image(pha, side, mode)
    return to_image(mag, side, mode, companion=pha)


def image_batch(
    traces: Sequence[S11Trace],
    side: int = 100,
    mode=ImageMode.COMBINED,
    cfg: StftConfig = StftConfig(),
    window_seconds: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Stack images as (B, 3, side, side) and labels as (B,)."""
    x = np.empty((len(traces), 3, side, side))
    y = np.empty(len(traces), dtype=np.int64)
    for i, t in enumerate(traces):
        x[i] = trace_image(t, side, mode, cfg, window_seconds).pixels
        y[i] = t.label
    return x, y
