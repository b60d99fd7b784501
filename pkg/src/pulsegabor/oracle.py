"""Conventional reference computations for validating the pulsed path.

Nothing in here pulses: plain convolution, an analytic subtraction law,
Gabor kernel synthesis, and similarity metrics.  Convolution is applied
correlation-style (offsets used as written, no kernel flip) so mask
offsets index pixels identically in the pulsed and reference paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SimilarityReport",
    "convolve2d",
    "gabor_kernel",
    "analytic_subtractor",
    "compare",
]


def convolve2d(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-region correlation of ``kernel`` over ``image``.

    Output location (r, c) holds sum over kernel cells (i, j) of
    image[r+i, c+j] * kernel[i, j]; only fully covered locations are
    produced.  Integer inputs stay in integer arithmetic.
    """
    image = np.asarray(image)
    kernel = np.asarray(kernel)
    if image.ndim != 2 or kernel.ndim != 2:
        raise ValueError("image and kernel must be 2-D")
    kh, kw = kernel.shape
    if kh > image.shape[0] or kw > image.shape[1]:
        raise ValueError(
            f"kernel {kernel.shape} larger than image {image.shape}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(image, (kh, kw))
    return np.tensordot(windows, kernel, axes=([2, 3], [0, 1]))


def gabor_kernel(
    wavelength: float,
    orientation: float = 0.0,
    sigma: float = 2.0,
    aspect: float = 1.0,
    phase: float = 0.0,
    size: int = 7,
) -> np.ndarray:
    """Zero-sum Gabor kernel on an odd ``size`` x ``size`` grid.

    g = exp(-(x'^2 + aspect^2 y'^2) / (2 sigma^2)) * cos(2 pi x' / wavelength + phase)
    with (x', y') the pixel coordinates rotated by ``orientation``; the
    mean is subtracted afterwards so the coefficients sum to zero.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"size must be odd and positive, got {size}")
    if wavelength <= 0:
        raise ValueError(f"wavelength must be > 0, got {wavelength}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    half = size // 2
    ys, xs = np.mgrid[-half : half + 1, -half : half + 1]
    xr = xs * math.cos(orientation) + ys * math.sin(orientation)
    yr = -xs * math.sin(orientation) + ys * math.cos(orientation)
    envelope = np.exp(-(xr**2 + (aspect**2) * yr**2) / (2.0 * sigma * sigma))
    carrier = np.cos(2.0 * math.pi * xr / wavelength + phase)
    kernel = envelope * carrier
    return kernel - kernel.mean()


def analytic_subtractor(r1, r2):
    """Ideal positive-domain subtraction: max(r1 - r2, 0) elementwise."""
    r1 = np.asarray(r1, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    if np.any(r1 < 0) or np.any(r2 < 0):
        raise ValueError("rates must be >= 0")
    out = np.maximum(r1 - r2, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SimilarityReport:
    """Agreement metrics between two equally shaped real grids."""

    ncc: float
    mae: float
    max_abs: float


def compare(a: np.ndarray, b: np.ndarray) -> SimilarityReport:
    """Pearson correlation plus absolute-error statistics.

    If either grid is constant the correlation is undefined and
    reported as 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float((da * da).sum()) * float((db * db).sum()))
    ncc = float((da * db).sum()) / denom if denom > 0 else 0.0
    err = np.abs(a - b)
    return SimilarityReport(ncc=ncc, mae=float(err.mean()), max_abs=float(err.max()))
