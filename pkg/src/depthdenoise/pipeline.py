"""End-to-end denoising: cluster -> Canny -> regions -> joint bilateral -> inpaint."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .bilateral import FilterStats, joint_bilateral
from .config import PipelineConfig
from .imagecore import EdgeMap, GrayImage, TargetMask, check_same_shape, detect_target_mask
from .inpaint import InpaintAuditRecord, InpaintDiagnostics, RegionStarvedError, inpaint
from .preproc import HistogramClusterParams, canny_edges, histogram_cluster
from .regions import RegionLabelMap, label_regions

log = logging.getLogger(__name__)


@dataclass
class DenoiseResult:
    image: GrayImage
    target: TargetMask
    edges: EdgeMap
    labels: RegionLabelMap
    filtered: GrayImage
    audit: list[InpaintAuditRecord] = field(default_factory=list)
    filter_stats: FilterStats = field(default_factory=FilterStats)
    inpaint_stats: InpaintDiagnostics = field(default_factory=InpaintDiagnostics)


def provisional_fill(img: GrayImage, mask: TargetMask) -> GrayImage:
    """Copy each target pixel from its nearest known pixel.

    Used only for structure extraction, so hole borders do not show up as
    edges while real discontinuities extend into the hole.
    """
    if not mask.flags.any():
        return img
    if mask.flags.all():
        return img.replace(np.zeros(img.shape))
    _, (iy, ix) = ndimage.distance_transform_edt(mask.flags, return_indices=True)
    return img.replace(img.data[iy, ix])


def extract_structure(img: GrayImage, mask: TargetMask, config: PipelineConfig) -> tuple[EdgeMap, RegionLabelMap]:
    base = provisional_fill(img, mask)
    clustered = histogram_cluster(base, HistogramClusterParams(config.bins))
    edges = canny_edges(clustered, config.canny)
    labels = label_regions(edges, config.min_region_px)
    return edges, labels


def denoise(
    depth: GrayImage,
    config: PipelineConfig = PipelineConfig(),
    guide: Optional[GrayImage] = None,
    extra_mask: Optional[TargetMask] = None,
) -> DenoiseResult:
    """Run the full pipeline on ``depth``.

    The target region is every sentinel-valued pixel plus ``extra_mask``.
    ``guide`` supplies the bilateral range term when ``config.guide_mode`` is
    ``"rgb-gray"`` and the edge source when ``config.edge_source`` is
    ``"guide"``; otherwise the depth image plays both roles.
    """
    check_same_shape(depth, guide, extra_mask)
    if (config.guide_mode == "rgb-gray" or config.edge_source == "guide") and guide is None:
        raise ValueError("a guide image is required for guide_mode=rgb-gray or edge_source=guide")

    target = detect_target_mask(depth, config.sentinel, extra_mask)
    original_target = target.copy()
    if target.flags.all():
        raise RegionStarvedError("region starved: every pixel is in the target region")

    if config.edge_source == "guide":
        edges, labels = extract_structure(guide, TargetMask.empty(depth.shape), config)
    else:
        edges, labels = extract_structure(depth, target, config)
    log.debug("edges: %d pixels, regions: %d", int(edges.flags.sum()), labels.region_count)

    range_guide = guide if config.guide_mode == "rgb-gray" else depth
    fstats = FilterStats()
    filtered = joint_bilateral(depth, range_guide, edges, config.bilateral, target, stats=fstats)

    istats = InpaintDiagnostics()
    out, audit = inpaint(
        filtered,
        target,
        labels,
        config.patch,
        alpha=config.alpha,
        epsilon_d=config.epsilon_d,
        search_radius=config.search_radius,
        diagnostics=istats,
    )
    return DenoiseResult(
        image=out,
        target=original_target,
        edges=edges,
        labels=labels,
        filtered=filtered,
        audit=audit,
        filter_stats=fstats,
        inpaint_stats=istats,
    )
