"""Edge-gated joint bilateral smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .imagecore import EdgeMap, GrayImage, TargetMask, check_same_shape


_STRIP_PIXELS = 16384


@dataclass(frozen=True)
class BilateralParams:
    """Kernel widths and window for the joint bilateral filter.

    ``sigma_r=None`` means 10% of the image's max_value; ``radius=None``
    means ceil(2 * sigma_s).
    """

    sigma_s: float = 3.0
    sigma_r: Optional[float] = None
    radius: Optional[int] = None
    edge_skip_dist: int = 1

    def __post_init__(self):
        if not self.sigma_s > 0:
            raise ValueError("sigma_s must be > 0")
        if self.sigma_r is not None and not self.sigma_r > 0:
            raise ValueError("sigma_r must be > 0")
        if self.radius is not None and (int(self.radius) != self.radius or self.radius < 1):
            raise ValueError("radius must be an integer >= 1")
        if int(self.edge_skip_dist) != self.edge_skip_dist or self.edge_skip_dist < 0:
            raise ValueError("edge_skip_dist must be a non-negative integer")

    def window_radius(self) -> int:
        return int(self.radius) if self.radius is not None else int(math.ceil(2 * self.sigma_s))

    def range_sigma(self, max_value: float) -> float:
        return float(self.sigma_r) if self.sigma_r is not None else 0.1 * max_value


@dataclass
class FilterStats:
    filtered: int = 0
    edge_passthrough: int = 0
    masked: int = 0
    empty_window: int = 0


def edge_neighbourhood(edges: EdgeMap, dist: int) -> np.ndarray:
    """Pixels within Chebyshev distance ``dist`` of any edge pixel."""
    flags = np.asarray(edges.flags, dtype=bool)
    if dist == 0 or not flags.any():
        return flags.copy()
    return ndimage.binary_dilation(flags, structure=np.ones((2 * dist + 1, 2 * dist + 1), dtype=bool))


def joint_bilateral(
    depth: GrayImage,
    guide: GrayImage,
    edges: EdgeMap,
    params: BilateralParams = BilateralParams(),
    mask: Optional[TargetMask] = None,
    stats: Optional[FilterStats] = None,
) -> GrayImage:
    """Smooth ``depth`` with spatial weights and range weights taken from ``guide``.

    Target-mask pixels are excluded from every window and copied through, as
    are pixels near an edge. The window is clipped at the image border and the
    normaliser renormalises over whatever remains. If ``stats`` is given it
    receives per-category pixel counts.
    """
    if mask is None:
        mask = TargetMask.empty(depth.shape)
    check_same_shape(depth, guide, edges, mask)
    r = params.window_radius()
    sigma_s = params.sigma_s
    sigma_r = params.range_sigma(guide.max_value)
    h, w = depth.shape

    known = ~mask.flags
    d = np.pad(np.where(known, depth.data, 0.0), r)
    g = np.pad(guide.data, r)
    valid = np.pad(known.astype(np.float64), r)
    neg_inv_r = -1.0 / (2.0 * sigma_r * sigma_r)
    inv_s = 1.0 / (2.0 * sigma_s * sigma_s)
    spatial = {(dy, dx): math.exp(-(dy * dy + dx * dx) * inv_s)
               for dy in range(-r, r + 1) for dx in range(-r, r + 1)}

    num = np.zeros((h, w))
    den = np.zeros((h, w))
    # horizontal strips keep the working set cache-sized
    rows = max(1, _STRIP_PIXELS // w)
    for top in range(0, h, rows):
        bot = min(top + rows, h)
        n = bot - top
        g0 = guide.data[top:bot]
        d0 = depth.data[top:bot]
        acc_n, acc_d = num[top:bot], den[top:bot]
        wgt = np.empty((n, w))
        tmp = np.empty((n, w))
        for (dy, dx), f in spatial.items():
            ys, xs = slice(r + top + dy, r + bot + dy), slice(r + dx, r + dx + w)
            # wgt = f(|p-q|) * g(|guide_p - guide_q|) * known_q
            np.subtract(g0, g[ys, xs], out=wgt)
            np.square(wgt, out=wgt)
            wgt *= neg_inv_r
            np.exp(wgt, out=wgt)
            wgt *= f
            wgt *= valid[ys, xs]
            acc_d += wgt
            # offsets from the centre, so constants come out exact
            np.subtract(d[ys, xs], d0, out=tmp)
            tmp *= wgt
            acc_n += tmp

    near_edge = edge_neighbourhood(edges, params.edge_skip_dist)
    todo = known & ~near_edge
    empty = todo & (den <= 0)
    todo &= ~empty
    out = depth.data.copy()
    out[todo] += num[todo] / den[todo]
    # guard rounding at the range ends
    np.clip(out, 0.0, depth.max_value, out=out)

    if stats is not None:
        stats.filtered += int(todo.sum())
        stats.edge_passthrough += int((known & near_edge).sum())
        stats.masked += int(mask.flags.sum())
        stats.empty_window += int(empty.sum())
    return depth.replace(out)
