"""Brute-force oracles and generated fixtures shared across the test modules.

Every oracle here is a direct, loop-based evaluation written independently
of the vectorized production code.
"""

import math

import numpy as np

from depthdenoise.imagecore import EdgeMap, GrayImage, TargetMask
from depthdenoise.regions import label_regions


# ---------------------------------------------------------------- fixtures


def two_region_case(n: int, hole: tuple, boundary: int = None):
    """An n x n depth image split by a vertical discontinuity.

    The left side is a mild ramp around 60, the right side a texture around
    180. ``hole`` is (y0, x0, size) of a square hole set to the 0 sentinel.
    Returns (image with hole, ground truth, mask, labels).
    """
    boundary = n // 2 if boundary is None else boundary
    yy, xx = np.mgrid[0:n, 0:n]
    left = 60 + (xx + 2 * yy) % 5 * 3
    right = 170 + (xx * yy) % 4 * 5
    gt = np.where(xx < boundary, left, right).astype(float)
    edges = np.zeros((n, n), dtype=bool)
    edges[:, boundary] = True
    labels = label_regions(EdgeMap(edges))
    y0, x0, s = hole
    flags = np.zeros((n, n), dtype=bool)
    flags[y0:y0 + s, x0:x0 + s] = True
    data = gt.copy()
    data[flags] = 0.0
    return GrayImage(data), GrayImage(gt), TargetMask(flags), labels


# ---------------------------------------------------------------- bilateral


def naive_bilateral(depth, guide, radius, sigma_s, sigma_r, skip=None, masked=None):
    """Literal per-pixel evaluation of the joint bilateral sum."""
    h, w = depth.shape
    skip = np.zeros((h, w), bool) if skip is None else skip
    masked = np.zeros((h, w), bool) if masked is None else masked
    out = depth.astype(float).copy()
    for py in range(h):
        for px in range(w):
            if skip[py, px] or masked[py, px]:
                continue
            num = den = 0.0
            for qy in range(max(0, py - radius), min(h, py + radius + 1)):
                for qx in range(max(0, px - radius), min(w, px + radius + 1)):
                    if masked[qy, qx]:
                        continue
                    d2 = (py - qy) ** 2 + (px - qx) ** 2
                    f = math.exp(-d2 / (2 * sigma_s ** 2))
                    g = math.exp(-((guide[py, px] - guide[qy, qx]) ** 2) / (2 * sigma_r ** 2))
                    num += depth[qy, qx] * f * g
                    den += f * g
            if den > 0:
                out[py, px] = num / den
    return out


# ---------------------------------------------------------------- inpainting


def naive_front(mask):
    h, w = mask.shape
    front = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                qy, qx = y + dy, x + dx
                if 0 <= qy < h and 0 <= qx < w and not mask[qy, qx]:
                    front.append((x, y))
                    break
    return front


def naive_confidence(p, conf, mask, size):
    x, y = p
    h, w = mask.shape
    half = size // 2
    total = 0.0
    for qy in range(y - half, y + half + 1):
        for qx in range(x - half, x + half + 1):
            if 0 <= qy < h and 0 <= qx < w and not mask[qy, qx]:
                total += conf[qy, qx]
    return total / (size * size)


def _known(mask, y, x):
    h, w = mask.shape
    return 0 <= y < h and 0 <= x < w and not mask[y, x]


def _axis_diff(img, mask, y, x, dy, dx):
    fwd = _known(mask, y + dy, x + dx)
    bwd = _known(mask, y - dy, x - dx)
    if fwd and bwd:
        return img[y + dy, x + dx] - img[y - dy, x - dx]
    if fwd:
        return 2.0 * (img[y + dy, x + dx] - img[y, x])
    if bwd:
        return 2.0 * (img[y, x] - img[y - dy, x - dx])
    return 0.0


def naive_data_term(p, img, mask, alpha):
    """Isophote . normal at a front pixel, by the convention the package documents.

    Gradient: undivided central difference at the first known 4-neighbour
    (up, left, right, down), twice the one-sided difference where only one
    side is known. Normal: clamped central difference of the mask.
    """
    x, y = p
    h, w = mask.shape
    if _known(mask, y, x):
        sy, sx = y, x
    else:
        for dy, dx in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            if _known(mask, y + dy, x + dx):
                sy, sx = y + dy, x + dx
                break
        else:
            raise ValueError("not on the front")
    gx = _axis_diff(img, mask, sy, sx, 0, 1)
    gy = _axis_diff(img, mask, sy, sx, 1, 0)
    m = mask.astype(float)
    nx = m[y, min(x + 1, w - 1)] - m[y, max(x - 1, 0)]
    ny = m[min(y + 1, h - 1), x] - m[max(y - 1, 0), x]
    norm = math.hypot(nx, ny)
    if norm == 0:
        nx, ny = 1.0, 0.0
    else:
        nx, ny = nx / norm, ny / norm
    return abs(-gy * nx + gx * ny) / alpha


def naive_priority(p, img, mask, conf, size, alpha, eps=1e-3):
    return naive_confidence(p, conf, mask, size) * (naive_data_term(p, img, mask, alpha) + eps)


def naive_mean_ssd(a, b, img, mask, size):
    ax, ay = a
    bx, by = b
    h, w = mask.shape
    half = size // 2
    total, count = 0.0, 0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            y, x = ay + dy, ax + dx
            if 0 <= y < h and 0 <= x < w and not mask[y, x]:
                diff = img[y, x] - img[by + dy, bx + dx]
                total += diff * diff
                count += 1
    return total / count if count else math.inf


def exhaustive_best(target, img, mask, labels, size, constrained=True):
    """Scan every centre in row-major order; strict < keeps the earliest tie."""
    h, w = mask.shape
    half = size // 2
    tx, ty = target
    best, best_d = None, math.inf
    for y in range(half, h - half):
        for x in range(half, w - half):
            if mask[y - half:y + half + 1, x - half:x + half + 1].any():
                continue
            if constrained and labels[y, x] != labels[ty, tx]:
                continue
            d = naive_mean_ssd(target, (x, y), img, mask, size)
            if best is None or d < best_d:
                best, best_d = (x, y), d
    return best, best_d


# ---------------------------------------------------------------- regions


def flood_components(free):
    """4-connected components of ``free`` by explicit stack flood fill."""
    h, w = free.shape
    comp = -np.ones((h, w), dtype=int)
    n = 0
    for y in range(h):
        for x in range(w):
            if not free[y, x] or comp[y, x] >= 0:
                continue
            stack = [(y, x)]
            comp[y, x] = n
            while stack:
                cy, cx = stack.pop()
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    qy, qx = cy + dy, cx + dx
                    if 0 <= qy < h and 0 <= qx < w and free[qy, qx] and comp[qy, qx] < 0:
                        comp[qy, qx] = n
                        stack.append((qy, qx))
            n += 1
    return comp, n


def partition(labels):
    """Label-independent view of a label map: the set of pixel sets."""
    groups = {}
    for idx, lab in np.ndenumerate(labels):
        groups.setdefault(int(lab), set()).add(idx)
    return {frozenset(g) for g in groups.values()}


def is_4_connected(pixels):
    pixels = set(pixels)
    start = next(iter(pixels))
    seen, stack = {start}, [start]
    while stack:
        y, x = stack.pop()
        for q in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if q in pixels and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen) == len(pixels)
