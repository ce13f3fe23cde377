"""Monogenic signal and local phase image.

A single-scale isotropic log-Gabor band-pass is combined with the two Riesz
multipliers in the frequency domain. ``u`` is the vertical (row) frequency
and ``v`` the lateral (column) frequency, both in cycles per pixel.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft

from .imagecore import as_image, check_same_shape, scale_to_max

LPI_EPS = 1e-12


@dataclass(frozen=True)
class LogGaborParams:
    wavelength0: float = 32.0
    sigma_ratio: float = 0.55

    def __post_init__(self):
        if not self.wavelength0 > 2:
            raise ValueError(f"wavelength0 must exceed 2 pixels, got {self.wavelength0}")
        if not 0 < self.sigma_ratio < 1:
            raise ValueError(f"sigma_ratio must lie in (0, 1), got {self.sigma_ratio}")


@dataclass(frozen=True)
class MonogenicComponents:
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray


def enhance(img):
    """Fourth power of the intensities, rescaled so the brightest pixel is 1."""
    arr = as_image(img)
    return scale_to_max(arr**4)


def frequency_grid(rows, cols):
    u = fft.fftfreq(rows)[:, None]
    v = fft.fftfreq(cols)[None, :]
    return u, v


def log_gabor_spectrum(rows, cols, params=LogGaborParams()):
    """Radial log-Gabor transfer function in FFT (unshifted) bin order.

    The DC bin is exactly zero.
    """
    u, v = frequency_grid(rows, cols)
    radius = np.hypot(u, v)
    radius[0, 0] = 1.0
    f0 = 1.0 / params.wavelength0
    g = np.exp(-(np.log(radius / f0) ** 2) / (2 * np.log(params.sigma_ratio) ** 2))
    g[0, 0] = 0.0
    return g


@lru_cache(maxsize=16)
def _filters(rows, cols, params):
    # Cached per (shape, params); arrays are flagged read-only so concurrent
    # readers cannot corrupt them.
    g = log_gabor_spectrum(rows, cols, params)
    u, v = frequency_grid(rows, cols)
    radius = np.hypot(u, v)
    radius[0, 0] = 1.0
    h2 = -1j * (u / radius) * g
    h3 = -1j * (v / radius) * g
    h2[0, 0] = 0
    h3[0, 0] = 0
    for a in (g, h2, h3):
        a.flags.writeable = False
    return g, h2, h3


def monogenic(img, params=LogGaborParams()):
    arr = as_image(img)
    g, h2, h3 = _filters(arr.shape[0], arr.shape[1], params)
    spec = fft.fft2(arr)
    m1 = fft.ifft2(spec * g).real
    m2 = fft.ifft2(spec * h2).real
    m3 = fft.ifft2(spec * h3).real
    return MonogenicComponents(m1, m2, m3)


def local_phase_image(mono):
    """Even-symmetry measure in [0, 1]: 1 where the even part dominates."""
    check_same_shape(mono.m1, mono.m2, mono.m3)
    odd = np.hypot(mono.m2, mono.m3)
    return 1.0 - (2.0 / np.pi) * np.arctan(odd / (np.abs(mono.m1) + LPI_EPS))


def lpi_from_image(img, params=LogGaborParams(), enhanced=True):
    """Convenience: optional enhancement, monogenic filtering and phase image."""
    src = enhance(img) if enhanced else as_image(img)
    return local_phase_image(monogenic(src, params))
