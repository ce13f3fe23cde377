"""Fused pleura-emphasis image."""

import numpy as np

from .imagecore import as_image, check_same_shape, normalize


def fuse(img, lpi, shibs):
    """Equal-weight sum of the image, its local phase map and SHIBS, min-max normalized.

    Per-pixel terms are added in sorted order, so the result does not depend
    on argument order down to the last bit.
    """
    check_same_shape(img, lpi, shibs)
    stack = np.sort(np.stack([as_image(img), as_image(lpi), as_image(shibs)]), axis=0)
    return normalize(stack[0] + stack[1] + stack[2])
