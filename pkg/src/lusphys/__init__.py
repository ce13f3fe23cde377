"""Acoustic-physics feature maps and rule-based severity scoring for lung ultrasound."""

__version__ = "0.1.0"

from .energymaps import ShadowParams, ibs_map, shadow_map, shibs
from .fusion import fuse
from .imagecore import SeverityClass, load_image, normalize, save_image
from .localphase import LogGaborParams, enhance, local_phase_image, log_gabor_spectrum, monogenic
from .pipeline import FeatureConfig, compute_features
from .rectify import EdgeSegment, SectorGeometry, derive_geometry, estimate_apex

__all__ = [
    "EdgeSegment",
    "FeatureConfig",
    "LogGaborParams",
    "SectorGeometry",
    "SeverityClass",
    "ShadowParams",
    "compute_features",
    "derive_geometry",
    "enhance",
    "estimate_apex",
    "fuse",
    "ibs_map",
    "load_image",
    "local_phase_image",
    "log_gabor_spectrum",
    "monogenic",
    "normalize",
    "save_image",
    "shadow_map",
    "shibs",
]
