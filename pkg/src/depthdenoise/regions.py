"""Edge-bounded region labelling.

Non-edge pixels are grouped into 4-connected components; edge pixels then
join the nearest component. The resulting partition gates both the
bilateral filter's neighbourhood and the inpainting patch search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .imagecore import EdgeMap, GrayImage, PixelCoord, _check_in_bounds

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class RegionLabelMap:
    labels: np.ndarray
    region_count: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64)
        if labels.ndim != 2:
            raise ValueError("labels must be 2D")
        if labels.min() < 0 or labels.max() >= self.region_count:
            raise ValueError("labels must lie in [0, region_count)")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    def __getitem__(self, p: PixelCoord) -> int:
        _check_in_bounds(p, self.shape)
        return int(self.labels[p.y, p.x])


def same_region(labels: RegionLabelMap, p: PixelCoord, q: PixelCoord) -> bool:
    return labels[p] == labels[q]


def _offsets_by_distance(max_sq: int):
    """Integer offsets grouped by squared Euclidean length, shortest first."""
    r = int(np.ceil(np.sqrt(max_sq)))
    rings: dict[int, list] = {}
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            d2 = dy * dy + dx * dx
            if 0 < d2 <= max_sq:
                rings.setdefault(d2, []).append((dy, dx))
    return [rings[k] for k in sorted(rings)]


def _absorb_edges(comp: np.ndarray, edge: np.ndarray) -> np.ndarray:
    """Give each edge pixel the label of its nearest non-edge pixel.

    Distances are Euclidean; among equidistant pixels the smallest label wins.
    """
    out = comp.copy()
    ey, ex = np.nonzero(edge)
    if ey.size == 0:
        return out
    h, w = comp.shape
    dist = ndimage.distance_transform_edt(edge)
    max_sq = int(np.rint(dist[ey, ex].max() ** 2))
    unresolved = np.ones(ey.size, dtype=bool)
    big = np.iinfo(np.int64).max
    for ring in _offsets_by_distance(max_sq):
        idx = np.nonzero(unresolved)[0]
        if idx.size == 0:
            break
        y0, x0 = ey[idx], ex[idx]
        best = np.full(idx.size, big, dtype=np.int64)
        for dy, dx in ring:
            y, x = y0 + dy, x0 + dx
            ok = (y >= 0) & (y < h) & (x >= 0) & (x < w)
            yc, xc = np.where(ok, y, 0), np.where(ok, x, 0)
            ok &= ~edge[yc, xc]
            cand = np.where(ok, comp[yc, xc], big)
            np.minimum(best, cand, out=best)
        hit = best != big
        out[y0[hit], x0[hit]] = best[hit]
        unresolved[idx[hit]] = False
    return out


def _grid_pairs(labels: np.ndarray):
    """Flat indices of horizontally and vertically adjacent pixel pairs."""
    h, w = labels.shape
    ids = np.arange(h * w).reshape(h, w)
    a = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    b = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    return a, b


def _pieces(labels: np.ndarray):
    """4-connected pieces of equal label: (piece id per pixel, piece count)."""
    n = labels.size
    a, b = _grid_pairs(labels)
    flat = labels.ravel()
    same = flat[a] == flat[b]
    graph = coo_matrix((np.ones(int(same.sum()), dtype=np.int8), (a[same], b[same])), shape=(n, n))
    count, piece = connected_components(graph, directed=False)
    return piece.reshape(labels.shape), count


def _merge_detached(labels: np.ndarray, comp_count: int) -> np.ndarray:
    """Fold label fragments that are not 4-connected to their main body.

    Absorption can strand a few edge pixels whose nearest region is only
    diagonally reachable; each such fragment joins the smallest adjacent label.
    """
    labels = labels.copy()
    while True:
        piece, count = _pieces(labels)
        if count == comp_count:
            return labels
        flat_piece = piece.ravel()
        flat = labels.ravel()
        sizes = np.bincount(flat_piece, minlength=count)
        piece_label = np.empty(count, dtype=np.int64)
        piece_label[flat_piece] = flat
        # main body of each label = its largest piece (ties: lowest piece id)
        order = np.lexsort((np.arange(count), -sizes, piece_label))
        main = np.zeros(count, dtype=bool)
        first = np.ones(count, dtype=bool)
        first[1:] = piece_label[order][1:] != piece_label[order][:-1]
        main[order[first]] = True
        stray = np.nonzero(~main)[0]
        a, b = _grid_pairs(labels)
        pa, pb = flat_piece[a], flat_piece[b]
        diff = pa != pb
        pa, pb = pa[diff], pb[diff]
        into_main: dict[int, int] = {}
        into_any: dict[int, int] = {}
        for p, q in zip(np.concatenate([pa, pb]).tolist(), np.concatenate([pb, pa]).tolist()):
            if main[p]:
                continue
            lab = int(piece_label[q])
            if lab == piece_label[p]:
                continue
            if main[q] and lab < into_main.get(p, lab + 1):
                into_main[p] = lab
            if lab < into_any.get(p, lab + 1):
                into_any[p] = lab
        relabel = piece_label.copy()
        if into_main:
            for p, lab in into_main.items():
                relabel[p] = lab
        else:
            p = int(stray[0])
            relabel[p] = into_any[p]
        labels = relabel[piece]


def _merge_small(labels: np.ndarray, count: int, min_px: int) -> np.ndarray:
    """Merge regions smaller than ``min_px`` into their largest 4-neighbour region."""
    sizes = np.bincount(labels.ravel(), minlength=count).astype(np.int64)
    if count <= 1 or sizes.min() >= min_px:
        return labels
    flat = labels.ravel()
    a, b = _grid_pairs(labels)
    diff = flat[a] != flat[b]
    la, lb = flat[a][diff], flat[b][diff]
    adj: dict[int, set] = {i: set() for i in range(count)}
    for u, v in set(zip(la.tolist(), lb.tolist())):
        adj[u].add(v)
        adj[v].add(u)
    parent = np.arange(count)
    alive = set(range(count))
    while True:
        small = [r for r in alive if sizes[r] < min_px and adj[r]]
        if not small:
            break
        r = min(small, key=lambda k: (sizes[k], k))
        into = min(adj[r], key=lambda k: (-sizes[k], k))
        parent[r] = into
        sizes[into] += sizes[r]
        for nb in adj[r]:
            adj[nb].discard(r)
            if nb != into:
                adj[nb].add(into)
                adj[into].add(nb)
        adj[r] = set()
        alive.discard(r)

    def root(k):
        while parent[k] != k:
            k = parent[k]
        return k

    roots = np.array([root(k) for k in range(count)])
    return roots[labels]


def _relabel_in_scan_order(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber labels 0..n-1 by first occurrence in row-major order."""
    _, first_idx, inverse = np.unique(labels.ravel(), return_index=True, return_inverse=True)
    order = np.argsort(first_idx)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse].reshape(labels.shape), int(order.size)


def label_regions(edges: EdgeMap, min_region_px: int = 0) -> RegionLabelMap:
    """Partition the image into regions separated by edge pixels.

    Labels are numbered in row-major order of first appearance. Regions with
    fewer than ``min_region_px`` pixels are merged into their largest
    neighbour; the default of 0 disables merging.
    """
    edge = np.asarray(edges.flags, dtype=bool)
    if edge.all():
        return RegionLabelMap(np.zeros(edge.shape, dtype=np.int64), 1)
    comp, n = ndimage.label(~edge, structure=FOUR_CONNECTED)
    comp = comp.astype(np.int64) - 1
    labels = _absorb_edges(comp, edge)
    labels = _merge_detached(labels, n)
    if min_region_px > 0:
        labels = _merge_small(labels, n, min_region_px)
    labels, count = _relabel_in_scan_order(labels)
    return RegionLabelMap(labels, count)


def render_labels(labels: RegionLabelMap, max_value: float = 255.0) -> GrayImage:
    """Debug view: labels spread evenly over [0, max_value]."""
    scale = max_value / max(labels.region_count - 1, 1)
    return GrayImage(np.rint(labels.labels * scale), max_value)
