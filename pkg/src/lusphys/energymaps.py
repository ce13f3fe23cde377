"""Integrated backscatter, shadow and shadow-IBS maps.

All three work column by column along depth (rows).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imagecore import ImageError, as_image, check_same_shape, scale_to_max


@dataclass(frozen=True)
class ShadowParams:
    """Gaussian weighting for the shadow map; sigma = rows / sigma_divisor."""

    sigma_divisor: float = 4.0

    def __post_init__(self):
        if not self.sigma_divisor > 0:
            raise ValueError(f"sigma_divisor must be positive, got {self.sigma_divisor}")


def ibs_raw(img):
    """Cumulative sum of squared intensity from the top row down to each row."""
    arr = as_image(img)
    return np.cumsum(arr**2, axis=0)


def ibs_map(img):
    return scale_to_max(ibs_raw(img))


@lru_cache(maxsize=8)
def _shadow_weights(rows, sigma):
    # weights[x, k] = G(k - x) for k >= x, else 0
    d = np.arange(rows)[None, :] - np.arange(rows)[:, None]
    w = np.where(d >= 0, np.exp(-(d.astype(float) ** 2) / (2 * sigma**2)), 0.0)
    norm = w.sum(axis=1)
    w.flags.writeable = False
    norm.flags.writeable = False
    return w, norm


def shadow_map(img, params=ShadowParams(), literal=False):
    """Gaussian-weighted mean of each pixel and the pixels below it.

    ``literal=True`` uses a summand that ignores the summation index, so the
    result is the input itself. Kept for auditing that reading.
    """
    arr = as_image(img)
    if literal:
        return arr.copy()
    rows = arr.shape[0]
    w, norm = _shadow_weights(rows, rows / params.sigma_divisor)
    return (w @ arr) / norm[:, None]


def shibs(sh, ibs):
    """Element-wise product of shadow and IBS maps, rescaled to a peak of 1."""
    try:
        check_same_shape(sh, ibs)
    except ImageError as exc:
        raise ImageError(f"shadow and IBS maps differ in shape: {exc}") from None
    return scale_to_max(as_image(sh) * as_image(ibs))
