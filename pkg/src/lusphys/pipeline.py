"""Per-frame feature chain: rectify, features, fuse."""

from dataclasses import dataclass, field

from . import energymaps, localphase
from .fusion import fuse
from .imagecore import normalize
from .rectify import rectify


@dataclass(frozen=True)
class FeatureConfig:
    log_gabor: localphase.LogGaborParams = field(default_factory=localphase.LogGaborParams)
    shadow: energymaps.ShadowParams = field(default_factory=energymaps.ShadowParams)
    literal_shadow: bool = False

    def to_dict(self):
        return {
            "wavelength": self.log_gabor.wavelength0,
            "sigma_ratio": self.log_gabor.sigma_ratio,
            "sigma_divisor": self.shadow.sigma_divisor,
            "literal_shadow": self.literal_shadow,
        }


@dataclass
class FeatureMaps:
    rectified: object
    lpi: object
    ibs: object
    shadow: object
    shibs: object
    fused: object

    def items(self):
        return [
            ("rectified", self.rectified),
            ("lpi", self.lpi),
            ("ibs", self.ibs),
            ("shadow", self.shadow),
            ("shibs", self.shibs),
            ("fused", self.fused),
        ]


def compute_features(img, config=FeatureConfig()):
    """LPI (on the enhanced image), IBS, shadow, SHIBS and fused maps of ``img``.

    ``img`` is normalized first; it is assumed to be rectified already.
    """
    base = normalize(img)
    lpi = localphase.lpi_from_image(base, config.log_gabor)
    ibs = energymaps.ibs_map(base)
    sh = energymaps.shadow_map(base, config.shadow, literal=config.literal_shadow)
    sb = energymaps.shibs(sh, ibs)
    return FeatureMaps(base, lpi, ibs, sh, sb, fuse(base, lpi, sb))


def run_frame(img, geometry=None, out_shape=(None, None), config=FeatureConfig()):
    rect = rectify(img, geometry, *out_shape)
    return compute_features(rect, config)
