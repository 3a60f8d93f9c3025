"""Histogram quantization and Canny edge extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagecore import EdgeMap, GrayImage


@dataclass(frozen=True)
class HistogramClusterParams:
    bins: int = 32

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 1:
            raise ValueError("bins must be a positive integer")


@dataclass(frozen=True)
class CannyParams:
    """Canny settings.

    With ``relative=True`` the two thresholds are fractions of the largest
    gradient magnitude in the image; otherwise they are absolute magnitudes
    of the (unnormalized) 3x3 Sobel response.
    """

    gaussian_sigma: float = 1.4
    low_threshold: float = 0.1
    high_threshold: float = 0.3
    relative: bool = True

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be > 0")
        if not 0 <= self.low_threshold <= self.high_threshold:
            raise ValueError("thresholds must satisfy 0 <= low <= high")


def bin_indices(values: np.ndarray, max_value: float, bins: int) -> np.ndarray:
    """Equal-width bin index of each sample over [0, max_value]."""
    idx = np.floor(values * (bins / max_value)).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def histogram_cluster(img: GrayImage, params: HistogramClusterParams = HistogramClusterParams()) -> GrayImage:
    """Replace every sample with the mean of the samples sharing its bin."""
    bins = params.bins
    if bins > img.max_value + 1:
        raise ValueError(f"bins must not exceed max_value + 1 ({img.max_value + 1:g})")
    flat = img.data.ravel()
    idx = bin_indices(flat, img.max_value, bins)
    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=flat, minlength=bins)
    lo = np.full(bins, np.inf)
    hi = np.full(bins, -np.inf)
    np.minimum.at(lo, idx, flat)
    np.maximum.at(hi, idx, flat)
    occupied = counts > 0
    means = np.zeros(bins)
    means[occupied] = sums[occupied] / counts[occupied]
    # keep each mean inside its members' span so a second pass is a no-op
    means[occupied] = np.clip(means[occupied], lo[occupied], hi[occupied])
    means[occupied & (lo == hi)] = lo[occupied & (lo == hi)]
    return img.replace(means[idx].reshape(img.shape))


def gradients(data: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-smoothed 3x3 Sobel gradients (gx along columns, gy along rows).

    Borders are edge-clamped. The minimum is subtracted first so the result
    does not depend on a constant offset of the input.
    """
    shifted = data - data.min()
    smooth = ndimage.gaussian_filter(shifted, sigma, mode="nearest")
    gx = ndimage.sobel(smooth, axis=1, mode="nearest")
    gy = ndimage.sobel(smooth, axis=0, mode="nearest")
    return gx, gy


def non_maximum_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that are ridge maxima along the quantized gradient direction.

    A pixel must be >= its forward neighbour and strictly > its backward
    neighbour, so a plateau two pixels wide keeps only its first pixel.
    """
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="edge")

    def shifted(dy, dx):
        return padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]

    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)  # 0: horizontal gradient
    sector[(angle >= 22.5) & (angle < 67.5)] = 1  # gradient along +x,+y
    sector[(angle >= 67.5) & (angle < 112.5)] = 2  # vertical gradient
    sector[(angle >= 112.5) & (angle < 157.5)] = 3  # gradient along -x,+y

    steps = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dy, dx) in steps.items():
        sel = sector == s
        fwd = shifted(dy, dx)
        bwd = shifted(-dy, -dx)
        keep |= sel & (mag >= fwd) & (mag > bwd)
    return keep & (mag > 0)


def hysteresis(thinned: np.ndarray, low: float, high: float) -> np.ndarray:
    """Weak pixels survive when 8-connected to a strong pixel."""
    weak = thinned >= low
    strong = thinned >= high
    if not strong.any():
        return np.zeros(thinned.shape, dtype=bool)
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[labels[strong & weak]] = True
    seeded[0] = False
    return seeded[labels]


def canny_edges(img: GrayImage, params: CannyParams = CannyParams()) -> EdgeMap:
    gx, gy = gradients(img.data, params.gaussian_sigma)
    mag = np.hypot(gx, gy)
    keep = non_maximum_suppression(mag, gx, gy)
    thinned = np.where(keep, mag, 0.0)
    peak = thinned.max()
    if peak <= 0:
        return EdgeMap(np.zeros(img.shape, dtype=bool))
    low, high = params.low_threshold, params.high_threshold
    if params.relative:
        low, high = low * peak, high * peak
    # a zero threshold must not promote flat pixels
    low = max(low, np.finfo(float).tiny)
    high = max(high, low)
    return EdgeMap(hysteresis(thinned, low, high))
