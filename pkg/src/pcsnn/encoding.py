"""Pixel and event-stream encoders producing first-spike times."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class EncodingParams:
    p_max: float = 255
    t_max: int = 256

    def __post_init__(self):
        if not self.p_max > 0:
            raise InputError(f"p_max must be positive, got {self.p_max}")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise InputError(f"t_max must be an integer >= 1, got {self.t_max}")


def encode_image(pixels, params: EncodingParams) -> np.ndarray:
    """Brighter pixels fire earlier: t = round((p_max - p) / p_max * t_max)."""
    p = np.asarray(pixels, dtype=np.float64).ravel()
    if p.size and (np.isnan(p).any() or p.min() < 0 or p.max() > params.p_max):
        raise InputError(f"pixel intensities must lie in [0, {params.p_max}]")
    t = (params.p_max - p) / params.p_max * params.t_max
    # half away from zero; t is non-negative here
    t = np.floor(t + 0.5)
    return np.clip(t, 0, params.t_max).astype(np.int64)


def to_raster(times, t_max) -> np.ndarray:
    """One-hot ``(neurons, t_max + 1)`` uint8 raster of first-spike times."""
    times = np.asarray(times)
    if times.ndim != 1:
        raise InputError("firing times must be a vector")
    if times.size and (times.min() < 0 or times.max() > t_max):
        raise InputError(f"firing times must lie in [0, {t_max}]")
    raster = np.zeros((times.shape[0], t_max + 1), dtype=np.uint8)
    raster[np.arange(times.shape[0]), times.astype(np.int64)] = 1
    return raster


def from_raster(raster) -> np.ndarray:
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise InputError("raster must be 2-D")
    if not np.isin(raster, (0, 1)).all() or not (raster.sum(axis=1) == 1).all():
        raise InputError("raster rows must be one-hot over time")
    return raster.argmax(axis=1).astype(np.int64)


def encode_events(events, width, height, bin_width_us=1000, t_max=256) -> np.ndarray:
    """First event per (polarity, y, x) channel, binned to integer time slots.

    Layout is polarity-blocked: all polarity-0 channels (row-major) come first,
    then all polarity-1 channels. Channels without events report ``t_max``;
    events past the window clamp to ``t_max``.
    """
    n = width * height
    out = np.full(2 * n, t_max, dtype=np.int64)
    if len(events) == 0:
        return out
    x, y, p, ts = _event_columns(events)
    if (x < 0).any() or (x >= width).any() or (y < 0).any() or (y >= height).any():
        bad = np.flatnonzero((x < 0) | (x >= width) | (y < 0) | (y >= height))[0]
        raise InputError(
            f"event {bad} at ({x[bad]}, {y[bad]}) is outside the {width}x{height} sensor"
        )
    if not np.isin(p, (0, 1)).all():
        raise InputError("event polarity must be 0 or 1")
    channel = p * n + y * width + x
    slot = np.minimum(ts // bin_width_us, t_max)
    np.minimum.at(out, channel, slot)
    return out


def _event_columns(events):
    if isinstance(events, np.ndarray) and events.dtype.names:
        cols = [events[k] for k in ("x", "y", "polarity", "timestamp_us")]
    else:
        cols = list(zip(*((e.x, e.y, e.polarity, e.timestamp_us) for e in events)))
    return tuple(np.asarray(c, dtype=np.int64) for c in cols)
