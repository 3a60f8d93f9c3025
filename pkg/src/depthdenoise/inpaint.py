"""Priority-ordered exemplar inpainting with a same-region source constraint.

The fill loop follows the classic confidence x data-term ordering: the front
pixel with the highest priority is filled first, from the best-matching fully
known patch whose centre lies in the same edge-bounded region.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from .imagecore import GrayImage, PixelCoord, TargetMask, _check_in_bounds, check_same_shape
from .regions import RegionLabelMap

log = logging.getLogger(__name__)

EPSILON_D = 1e-3

# nearest-known-neighbour probe order; row-major among the 4-neighbours
_NEIGHBOURS = ((-1, 0), (0, -1), (0, 1), (1, 0))


class RegionStarvedError(RuntimeError):
    """No fully known source patch exists anywhere in the image."""


@dataclass(frozen=True)
class PatchSpec:
    size: int = 5

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 3:
            raise ValueError("patch size must be an integer >= 3")
        if self.size % 2 == 0:
            raise ValueError("patch size must be odd")

    @property
    def half(self) -> int:
        return self.size // 2

    @property
    def area(self) -> int:
        return self.size * self.size

    @classmethod
    def from_requested(cls, size: int) -> "PatchSpec":
        """Accept even sizes by rounding up to the next odd size, with a warning."""
        size = int(size)
        if size % 2 == 0:
            warnings.warn(f"patch size {size} is even; using {size + 1}", stacklevel=2)
            size += 1
        return cls(size)


@dataclass(frozen=True, eq=False)
class ConfidenceMap:
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("confidence map must be 2D")
        if vals.size and (vals.min() < 0 or vals.max() > 1):
            raise ValueError("confidence values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple:
        return self.values.shape


@dataclass(frozen=True)
class FillFront:
    """Target pixels with at least one known 4-neighbour, in row-major order."""

    pixels: tuple

    def __len__(self) -> int:
        return len(self.pixels)

    def __iter__(self) -> Iterator[PixelCoord]:
        return iter(self.pixels)

    def __contains__(self, p) -> bool:
        return PixelCoord(*p) in set(self.pixels)


@dataclass(frozen=True)
class InpaintAuditRecord:
    target_center: PixelCoord
    source_center: PixelCoord
    priority: float
    distance: float
    region_label: int
    fallback: bool = False


@dataclass
class InpaintDiagnostics:
    iterations: int = 0
    default_normals: int = 0
    fallbacks: int = 0


@dataclass
class IterationSnapshot:
    """State handed to an ``observer`` just before a patch is copied."""

    image: np.ndarray
    mask: np.ndarray
    confidence: np.ndarray
    selected: PixelCoord
    priority: float
    front: list = field(default_factory=list)


# --------------------------------------------------------------------------
# array-level kernels shared by the public helpers and the fill loop


class _Canvas:
    """Working rasters padded by ``pad`` cells; padding counts as unknown.

    ``conf_p`` holds confidence on known pixels only (0 elsewhere), so patch
    sums need no masking. ``target`` is the caller's unpadded mask array.
    """

    def __init__(self, img: np.ndarray, target: np.ndarray, conf: np.ndarray, pad: int):
        h, w = target.shape
        self.pad = pad
        self.shape = (h, w)
        self.target = target
        inner = (slice(pad, pad + h), slice(pad, pad + w))
        self.img_p = np.zeros((h + 2 * pad, w + 2 * pad))
        self.known_p = np.zeros((h + 2 * pad, w + 2 * pad), dtype=bool)
        self.conf_p = np.zeros((h + 2 * pad, w + 2 * pad))
        self.img_p[inner] = img
        self.known_p[inner] = ~target
        self.conf_p[inner] = np.where(target, 0.0, conf)
        self.img = self.img_p[inner]
        self.known = self.known_p[inner]
        self.conf = self.conf_p[inner]


def _front_mask(target: np.ndarray) -> np.ndarray:
    known = ~target
    touch = np.zeros_like(target)
    touch[1:, :] |= known[:-1, :]
    touch[:-1, :] |= known[1:, :]
    touch[:, 1:] |= known[:, :-1]
    touch[:, :-1] |= known[:, 1:]
    return target & touch


def _confidence_terms(cv: _Canvas, ys, xs, half) -> np.ndarray:
    """Known-pixel confidence summed over each patch, over the full patch area."""
    yp, xp = ys + cv.pad, xs + cv.pad
    y0, x0 = int(yp.min()) - half, int(xp.min()) - half
    crop = cv.conf_p[y0:int(yp.max()) + half + 1, x0:int(xp.max()) + half + 1]
    ii = np.zeros((crop.shape[0] + 1, crop.shape[1] + 1))
    np.cumsum(crop, axis=0, out=ii[1:, 1:])
    np.cumsum(ii[1:, 1:], axis=1, out=ii[1:, 1:])
    top, left = yp - half - y0, xp - half - x0
    bot, right = top + 2 * half + 1, left + 2 * half + 1
    total = ii[bot, right] - ii[top, right] - ii[bot, left] + ii[top, left]
    size = 2 * half + 1
    return np.maximum(total, 0.0) / (size * size)


def _one_axis_diff(cv: _Canvas, sy, sx, dy, dx):
    """Difference across a known pixel using only known neighbours.

    Both sides known: I(s+d) - I(s-d). One side known: twice the one-sided
    difference, keeping the same scale. Neither: 0.
    """
    yp, xp = sy + cv.pad, sx + cv.pad
    fok = cv.known_p[yp + dy, xp + dx]
    bok = cv.known_p[yp - dy, xp - dx]
    v = cv.img_p[yp, xp]
    vf = cv.img_p[yp + dy, xp + dx]
    vb = cv.img_p[yp - dy, xp - dx]
    one_sided = np.where(fok, 2.0 * (vf - v), np.where(bok, 2.0 * (v - vb), 0.0))
    return np.where(fok & bok, vf - vb, one_sided)


def _front_normals(target, ys, xs):
    """Unit normals of the target region from its edge-clamped central difference.

    Returns (nx, ny, undefined); where the mask gradient vanishes the
    normal defaults to (1, 0) and ``undefined`` is set.
    """
    h, w = target.shape
    nx = target[ys, np.minimum(xs + 1, w - 1)].astype(np.float64) - target[ys, np.maximum(xs - 1, 0)]
    ny = target[np.minimum(ys + 1, h - 1), xs].astype(np.float64) - target[np.maximum(ys - 1, 0), xs]
    norm = np.hypot(nx, ny)
    undefined = norm == 0
    safe = np.where(undefined, 1.0, norm)
    nx = np.where(undefined, 1.0, nx / safe)
    ny = np.where(undefined, 0.0, ny / safe)
    return nx, ny, undefined


def _nearest_known(cv: _Canvas, ys, xs):
    """The pixel itself if known, else its first known 4-neighbour (row-major)."""
    yp, xp = ys + cv.pad, xs + cv.pad
    sy, sx = ys.copy(), xs.copy()
    found = cv.known_p[yp, xp].copy()
    for dy, dx in _NEIGHBOURS:
        ok = cv.known_p[yp + dy, xp + dx] & ~found
        sy[ok] = ys[ok] + dy
        sx[ok] = xs[ok] + dx
        found |= ok
    return sy, sx, found


def _data_terms(cv: _Canvas, ys, xs, alpha):
    sy, sx, found = _nearest_known(cv, ys, xs)
    if not found.all():
        raise ValueError("data term requested away from the fill front")
    gx = _one_axis_diff(cv, sy, sx, 0, 1)
    gy = _one_axis_diff(cv, sy, sx, 1, 0)
    nx, ny, undefined = _front_normals(cv.target, ys, xs)
    # isophote = gradient rotated by 90 degrees
    return np.abs(-gy * nx + gx * ny) / alpha, undefined


def _patch_bounds(y, x, half, shape):
    h, w = shape
    return max(y - half, 0), min(y + half, h - 1), max(x - half, 0), min(x + half, w - 1)


def _box_is_clear(target: np.ndarray, half: int) -> np.ndarray:
    """For each full (2*half+1)^2 window of ``target``: True when it has no target pixel."""
    ii = np.zeros((target.shape[0] + 1, target.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = target.astype(np.int64).cumsum(0).cumsum(1)
    s = 2 * half + 1
    return (ii[s:, s:] - ii[:-s, s:] - ii[s:, :-s] + ii[:-s, :-s]) == 0


def _candidate_map(target: np.ndarray, half: int) -> np.ndarray:
    """True at centres whose whole patch is in bounds and free of target pixels."""
    h, w = target.shape
    ok = np.zeros((h, w), dtype=bool)
    if h >= 2 * half + 1 and w >= 2 * half + 1:
        ok[half:h - half, half:w - half] = _box_is_clear(target, half)
    return ok


def _refresh_candidates(cand, target, half, y0, y1, x0, x1):
    """Recompute candidate flags for centres whose patch meets rows y0..y1, cols x0..x1."""
    h, w = target.shape
    cy0, cy1 = max(y0 - half, half), min(y1 + half, h - 1 - half)
    cx0, cx1 = max(x0 - half, half), min(x1 + half, w - 1 - half)
    if cy0 > cy1 or cx0 > cx1:
        return
    sub = target[cy0 - half:cy1 + half + 1, cx0 - half:cx1 + half + 1]
    cand[cy0:cy1 + 1, cx0:cx1 + 1] = _box_is_clear(sub, half)


def _scan(cv: _Canvas, cand, lab, label, py, px, half, y0, y1, x0, x1):
    """Mean-SSD argmin over candidate centres in rows y0..y1, cols x0..x1.

    Only centres flagged in ``cand`` (and carrying ``label``, unless it is
    None) compete. Returns (y, x, distance) or None when none qualifies; ties
    go to the first centre in row-major order.
    """
    if y0 > y1 or x0 > x1:
        return None
    ok = cand[y0:y1 + 1, x0:x1 + 1]
    if label is not None:
        ok = ok & (lab[y0:y1 + 1, x0:x1 + 1] == label)
    if not ok.any():
        return None
    img, pad = cv.img, cv.pad
    acc = np.zeros(ok.shape)
    buf = np.empty(ok.shape)
    usable = cv.known_p[py + pad - half:py + pad + half + 1, px + pad - half:px + pad + half + 1]
    # contiguous copy of every pixel any candidate patch can touch
    crop = np.ascontiguousarray(img[y0 - half:y1 + half + 1, x0 - half:x1 + half + 1])
    wh, ww = ok.shape
    count = 0
    for oy, ox in zip(*np.nonzero(usable)):
        oy, ox = int(oy), int(ox)
        np.subtract(crop[oy:oy + wh, ox:ox + ww], img[py + oy - half, px + ox - half], out=buf)
        np.multiply(buf, buf, out=buf)
        acc += buf
        count += 1
    if count == 0:
        k = int(np.argmax(ok))
        return y0 + k // ok.shape[1], x0 + k % ok.shape[1], float("inf")
    acc[~ok] = np.inf
    k = int(np.argmin(acc))
    ky, kx = divmod(k, ok.shape[1])
    return y0 + ky, x0 + kx, float(acc[ky, kx] / count)


def _search(cv: _Canvas, cand, lab, py, px, half, search_radius):
    """Best source centre for the patch at (py, px).

    Tries the same region inside the search window, then the same region over
    the whole image, then any region (flagged as fallback).
    Returns (y, x, distance, fallback).
    """
    h, w = cv.shape
    full = (half, h - 1 - half, half, w - 1 - half)
    label = lab[py, px]
    if search_radius is not None:
        win = (
            max(py - search_radius, half), min(py + search_radius, h - 1 - half),
            max(px - search_radius, half), min(px + search_radius, w - 1 - half),
        )
        hit = _scan(cv, cand, lab, label, py, px, half, *win)
        if hit is not None:
            return (*hit, False)
    hit = _scan(cv, cand, lab, label, py, px, half, *full)
    if hit is not None:
        return (*hit, False)
    hit = _scan(cv, cand, lab, None, py, px, half, *full)
    if hit is not None:
        return (*hit, True)
    raise RegionStarvedError(f"region starved: no fully known source patch for pixel ({px}, {py})")


def _canvas_for(img: GrayImage, mask: TargetMask, conf: Optional[ConfidenceMap] = None, half: int = 1) -> _Canvas:
    values = conf.values if conf is not None else np.where(mask.flags, 0.0, 1.0)
    return _Canvas(img.data, mask.flags, values, pad=half + 2)


# --------------------------------------------------------------------------
# public per-pixel operations


def init_confidence(mask: TargetMask) -> ConfidenceMap:
    return ConfidenceMap(np.where(mask.flags, 0.0, 1.0))


def fill_front(mask: TargetMask) -> FillFront:
    ys, xs = np.nonzero(_front_mask(mask.flags))
    return FillFront(tuple(PixelCoord(int(x), int(y)) for y, x in zip(ys, xs)))


def confidence_term(p: PixelCoord, conf: ConfidenceMap, mask: TargetMask, patch: PatchSpec) -> float:
    """Known-pixel confidence in the patch at ``p`` divided by the full patch area."""
    check_same_shape(conf, mask)
    _check_in_bounds(p, mask.shape)
    cv = _Canvas(np.zeros(mask.shape), mask.flags, conf.values, pad=patch.half + 2)
    return float(_confidence_terms(cv, np.array([p.y]), np.array([p.x]), patch.half)[0])


def data_term(
    p: PixelCoord,
    img: GrayImage,
    mask: TargetMask,
    alpha: float,
    diagnostics: Optional[InpaintDiagnostics] = None,
) -> float:
    """Isophote strength hitting the front at ``p``, divided by ``alpha``.

    The gradient is taken at the known 4-neighbour of ``p`` (first in
    row-major order) from known samples only; the front normal comes from
    the mask gradient and defaults to (1, 0) when that vanishes.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    check_same_shape(img, mask)
    _check_in_bounds(p, mask.shape)
    cv = _canvas_for(img, mask)
    d, undefined = _data_terms(cv, np.array([p.y]), np.array([p.x]), alpha)
    if diagnostics is not None and undefined[0]:
        diagnostics.default_normals += 1
    return float(d[0])


def priority(
    p: PixelCoord,
    conf: ConfidenceMap,
    img: GrayImage,
    mask: TargetMask,
    patch: PatchSpec,
    alpha: float,
    epsilon_d: float = EPSILON_D,
) -> float:
    return confidence_term(p, conf, mask, patch) * (data_term(p, img, mask, alpha) + epsilon_d)


def patch_distance(a: PixelCoord, b: PixelCoord, img: GrayImage, mask: TargetMask, patch: PatchSpec) -> float:
    """Mean squared difference over the known, in-bounds pixels of the patch at ``a``.

    The patch at ``b`` must be fully in bounds and fully known. Returns inf
    when the patch at ``a`` has no usable pixel.
    """
    check_same_shape(img, mask)
    _check_in_bounds(a, mask.shape)
    _check_in_bounds(b, mask.shape)
    half = patch.half
    h, w = mask.shape
    if not (half <= b.y < h - half and half <= b.x < w - half):
        raise ValueError(f"source patch at {tuple(b)} is not fully inside the image")
    if mask.flags[b.y - half:b.y + half + 1, b.x - half:b.x + half + 1].any():
        raise ValueError(f"source patch at {tuple(b)} overlaps the target region")
    cv = _canvas_for(img, mask, half=half)
    allowed = np.ones(mask.shape, dtype=bool)
    return _scan(cv, allowed, None, None, a.y, a.x, half, b.y, b.y, b.x, b.x)[2]


def find_best_patch(
    target: PixelCoord,
    img: GrayImage,
    mask: TargetMask,
    labels: RegionLabelMap,
    patch: PatchSpec,
    search_radius: Optional[int] = None,
) -> PixelCoord:
    """Centre of the closest fully known patch in the same region as ``target``.

    Falls back to the whole image (any region) when the region has no
    candidate; raises RegionStarvedError when there is none at all.
    """
    check_same_shape(img, mask, labels)
    _check_in_bounds(target, mask.shape)
    cv = _canvas_for(img, mask, half=patch.half)
    cand = _candidate_map(mask.flags, patch.half)
    y, x, _, fallback = _search(cv, cand, labels.labels, target.y, target.x, patch.half, search_radius)
    if fallback:
        log.warning("no source patch in region %d; searched all regions", labels[target])
    return PixelCoord(int(x), int(y))


# --------------------------------------------------------------------------
# fill loop


def inpaint(
    img: GrayImage,
    mask: TargetMask,
    labels: RegionLabelMap,
    patch: PatchSpec = PatchSpec(),
    alpha: Optional[float] = None,
    epsilon_d: float = EPSILON_D,
    search_radius: Optional[int] = None,
    observer: Optional[Callable[[IterationSnapshot], None]] = None,
    diagnostics: Optional[InpaintDiagnostics] = None,
) -> tuple[GrayImage, list[InpaintAuditRecord]]:
    """Fill every target pixel and return the image plus one audit record per patch.

    ``mask`` is cleared in place as pixels are filled. ``alpha`` defaults to
    the image's max_value. ``search_radius`` limits the source scan to a
    square window around the target (the whole image is used when the window
    holds no same-region candidate).
    """
    check_same_shape(img, mask, labels)
    if alpha is None:
        alpha = img.max_value
    if not alpha > 0 or not epsilon_d > 0:
        raise ValueError("alpha and epsilon_d must be > 0")
    if diagnostics is None:
        diagnostics = InpaintDiagnostics()

    target = mask.flags
    remaining = int(target.sum())
    if remaining == 0:
        return img, []

    h, w = target.shape
    half = patch.half
    cv = _canvas_for(img, mask, half=half)
    work, known, conf = cv.img, cv.known, cv.conf
    lab = labels.labels
    cand = _candidate_map(target, half)

    prio = np.full((h, w), -np.inf)
    row_best = np.full(h, -np.inf)  # per-row max of prio, keeps selection O(h + w)
    cterm = np.zeros((h, w))

    def rescore(y0, y1, x0, x1):
        prio[y0:y1 + 1, x0:x1 + 1] = -np.inf
        ey0, ey1, ex0, ex1 = max(y0 - 1, 0), min(y1 + 1, h - 1), max(x0 - 1, 0), min(x1 + 1, w - 1)
        front = _front_mask(target[ey0:ey1 + 1, ex0:ex1 + 1])
        front = front[y0 - ey0:y1 - ey0 + 1, x0 - ex0:x1 - ex0 + 1]
        ys, xs = np.nonzero(front)
        if ys.size:
            ys, xs = ys + y0, xs + x0
            c = _confidence_terms(cv, ys, xs, half)
            d, undefined = _data_terms(cv, ys, xs, alpha)
            diagnostics.default_normals += int(undefined.sum())
            cterm[ys, xs] = c
            prio[ys, xs] = c * (d + epsilon_d)
        row_best[y0:y1 + 1] = prio[y0:y1 + 1].max(axis=1)

    rescore(0, h - 1, 0, w - 1)
    records = []
    reach = half + 2
    while remaining > 0:
        # first maximum in row-major order
        py = int(np.argmax(row_best))
        px = int(np.argmax(prio[py]))
        p_prio = float(prio[py, px])
        if p_prio == -np.inf:
            raise RuntimeError("fill front vanished while target pixels remain")
        c_p = float(cterm[py, px])

        if observer is not None:
            fy, fx = np.nonzero(prio > -np.inf)
            observer(IterationSnapshot(
                image=work.copy(), mask=target.copy(), confidence=conf.copy(),
                selected=PixelCoord(px, py), priority=p_prio,
                front=[PixelCoord(int(x), int(y)) for y, x in zip(fy, fx)],
            ))

        sy, sx, dist, fallback = _search(cv, cand, lab, py, px, half, search_radius)
        if fallback:
            diagnostics.fallbacks += 1
            log.warning("no source patch in region %d for (%d, %d); used region %d",
                        lab[py, px], px, py, lab[sy, sx])

        y0, y1, x0, x1 = _patch_bounds(py, px, half, (h, w))
        box = (slice(y0, y1 + 1), slice(x0, x1 + 1))
        fill = target[box].copy()
        src = work[sy - (py - y0):sy + (y1 - py) + 1, sx - (px - x0):sx + (x1 - px) + 1]
        work[box][fill] = src[fill]
        conf[box][fill] = c_p
        target[box][fill] = False
        known[box][fill] = True
        remaining -= int(fill.sum())

        records.append(InpaintAuditRecord(
            target_center=PixelCoord(px, py),
            source_center=PixelCoord(int(sx), int(sy)),
            priority=p_prio,
            distance=dist,
            region_label=int(lab[py, px]),
            fallback=fallback,
        ))
        diagnostics.iterations += 1

        _refresh_candidates(cand, target, half, y0, y1, x0, x1)
        rescore(max(y0 - reach, 0), min(y1 + reach, h - 1), max(x0 - reach, 0), min(x1 + reach, w - 1))

    return img.replace(np.clip(work, 0.0, img.max_value)), records
