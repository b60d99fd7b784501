"""Brightness-to-pulse front end: optics, pixel cells, rate mapping.

A greyscale image is a 2-D uint8 array in [0, 255].  The optical path
applies Gaussian smoothing (metal-stack blur), then each pixel cell
integrates a photocurrent proportional to its brightness and emits a
pulse whenever a full unit of charge has accumulated.  Emission
consumes exactly one unit and keeps the remainder, so the long-run
pulse count of a steady pixel is the integral of its current to within
a single pulse.  Optional multiplicative Gaussian noise perturbs the
current, never the accumulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_RATE_CEILING",
    "OpticsModel",
    "PixelCell",
    "pixel_step",
    "PixelCellArray",
    "gaussian_profile",
    "smooth_image",
    "brightness_to_rate",
    "validate_image",
]

# brightness 255 maps to this many pulses per unit time by default,
# comfortably under one pulse per tick for every clock used here
DEFAULT_RATE_CEILING = 100.0


def validate_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError(f"image must be 2-D and nonempty, got shape {image.shape}")
    if image.dtype != np.uint8:
        if np.any((image < 0) | (image > 255)):
            raise ValueError("brightness outside [0, 255]")
        image = image.astype(np.uint8)
    return image


@dataclass(frozen=True)
class OpticsModel:
    """Gaussian smoothing width in pixels; 0 disables smoothing."""

    sigma: float = 1.4

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def gaussian_profile(sigma: float) -> np.ndarray:
    """1-D Gaussian taps truncated at +-3 sigma, normalized to unit sum."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.ones(1)
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def smooth_image(image: np.ndarray, optics: OpticsModel) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-border edge handling.

    Returns uint8 with round-half-up quantization; sigma=0 returns the
    input unchanged.
    """
    image = validate_image(image)
    if optics.sigma == 0:
        return image
    taps = gaussian_profile(optics.sigma)
    radius = (taps.size - 1) // 2
    work = image.astype(np.float64)
    padded = np.pad(work, ((0, 0), (radius, radius)), mode="edge")
    cols = np.lib.stride_tricks.sliding_window_view(padded, taps.size, axis=1)
    work = np.tensordot(cols, taps, axes=([2], [0]))
    padded = np.pad(work, ((radius, radius), (0, 0)), mode="edge")
    rows = np.lib.stride_tricks.sliding_window_view(padded, taps.size, axis=0)
    work = np.tensordot(rows, taps, axes=([2], [0]))
    return np.floor(work + 0.5).astype(np.uint8)


def brightness_to_rate(image: np.ndarray, ceiling: float = DEFAULT_RATE_CEILING) -> np.ndarray:
    """Linear brightness-to-pulse-rate map; 255 hits ``ceiling``."""
    image = validate_image(image)
    if ceiling <= 0:
        raise ValueError(f"ceiling must be > 0, got {ceiling}")
    return image.astype(np.float64) * (ceiling / 255.0)


@dataclass
class PixelCell:
    """Single pulsing pixel cell.

    ``rate_gain`` is pulses per unit time per brightness unit;
    ``noise_level`` is the relative standard deviation of the
    multiplicative current noise.
    """

    accumulator: float = 0.0
    rate_gain: float = DEFAULT_RATE_CEILING / 255.0
    noise_level: float = 0.0

    def __post_init__(self) -> None:
        if self.rate_gain <= 0:
            raise ValueError(f"rate_gain must be > 0, got {self.rate_gain}")
        if self.noise_level < 0:
            raise ValueError(f"noise_level must be >= 0, got {self.noise_level}")
        if self.accumulator < 0:
            raise ValueError(f"accumulator must be >= 0, got {self.accumulator}")


def pixel_step(cell: PixelCell, brightness: float, dt: float, rng=None):
    """Advance one pixel cell a single tick; returns ``(cell, fired)``.

    The noiseless path never touches ``rng``, so it stays deterministic
    without one.  Noisy current going negative is clamped to zero.
    """
    if not 0 <= brightness <= 255:
        raise ValueError(f"brightness {brightness} outside [0, 255]")
    current = cell.rate_gain * brightness
    if cell.noise_level > 0:
        if rng is None:
            raise ValueError("noise_level > 0 needs an rng")
        current = max(current * (1.0 + cell.noise_level * rng.standard_normal()), 0.0)
    acc = cell.accumulator + current * dt
    fired = acc >= 1.0
    if fired:
        acc -= 1.0
    out = PixelCell(acc, cell.rate_gain, cell.noise_level)
    return out, fired


class PixelCellArray:
    """All pixel cells of an image stepped in lockstep.

    ``rates`` are noiseless pulse rates per cell (any shape); with
    ``noise_level`` > 0 each tick draws one standard-normal value per
    cell from a counter-based generator keyed on ``seed``, so runs are
    reproducible regardless of platform.
    """

    def __init__(self, rates: np.ndarray, dt: float, noise_level: float = 0.0, seed: int = 0) -> None:
        rates = np.asarray(rates, dtype=np.float64)
        if np.any(rates < 0):
            raise ValueError("rates must be >= 0")
        if dt <= 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if noise_level < 0:
            raise ValueError(f"noise_level must be >= 0, got {noise_level}")
        if rates.size and rates.max() * dt > 1.0:
            raise ValueError("peak rate exceeds one pulse per tick")
        self.shape = rates.shape
        self.rates = rates.reshape(-1)
        self.dt = float(dt)
        self.noise_level = float(noise_level)
        self.acc = np.zeros(self.rates.size)
        self._rng = np.random.Generator(np.random.Philox(key=seed)) if noise_level > 0 else None

    def step(self) -> np.ndarray:
        """One tick for every cell; returns the flat boolean pulse vector."""
        if self._rng is not None:
            draw = self._rng.standard_normal(self.rates.size)
            current = np.maximum(self.rates * (1.0 + self.noise_level * draw), 0.0)
        else:
            current = self.rates
        self.acc = self.acc + current * self.dt
        fired = self.acc >= 1.0
        self.acc = np.where(fired, self.acc - 1.0, self.acc)
        return fired
