"""Edge-guided depth image denoising.

Histogram quantization and Canny edges split the depth map into regions; a
joint bilateral filter smooths inside regions, and exemplar inpainting fills
missing pixels from patches of the same region.
"""

from .bilateral import BilateralParams, joint_bilateral
from .config import PipelineConfig, load_config
from .imagecore import (
    EdgeMap,
    GrayImage,
    PixelCoord,
    TargetMask,
    detect_target_mask,
    load_gray_image,
    save_gray_image,
)
from .inpaint import PatchSpec, RegionStarvedError, inpaint
from .metrics import improvement, psnr
from .pipeline import DenoiseResult, denoise
from .preproc import CannyParams, HistogramClusterParams, canny_edges, histogram_cluster
from .regions import RegionLabelMap, label_regions, same_region

__version__ = "0.1.0"

__all__ = [
    "BilateralParams", "CannyParams", "DenoiseResult", "EdgeMap", "GrayImage", "HistogramClusterParams",
    "PatchSpec", "PipelineConfig", "PixelCoord", "RegionLabelMap", "RegionStarvedError", "TargetMask",
    "canny_edges", "denoise", "detect_target_mask", "histogram_cluster", "improvement", "inpaint",
    "joint_bilateral", "label_regions", "load_config", "load_gray_image", "psnr", "same_region",
    "save_gray_image",
]
