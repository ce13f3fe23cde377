"""Rule-based five-class severity scoring from feature maps.

This is a deterministic stand-in for a learned classifier. Every detector
works on ratios of image quantities, so a positive rescaling of the input
frame does not change the result.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .imagecore import ImageError, SeverityClass, as_image
from .localphase import enhance
from .pipeline import FeatureConfig, compute_features


@dataclass(frozen=True)
class ScorerConfig:
    """Detector settings and decision thresholds.

    Calibrated once on the noise-free phantom generator and frozen here.
    """

    search_band: tuple = (0.05, 0.6)
    a_line_harmonics: tuple = (2, 3, 4)
    a_line_tolerance: int = 1
    b_line_threshold_frac: float = 0.5
    b_line_min_contrast: float = 5.0
    b_line_min_width: int = 3
    baseline_percentile: float = 5.0
    pleura_half_band: int = 2
    consolidation_weight_deficit: float = 0.5
    consolidation_weight_irregularity: float = 0.5
    irregularity_scale: float = 0.01
    tau_consolidation: float = 0.5
    tau_confluent: float = 0.4
    tau_a_lines: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "search_band", tuple(float(v) for v in self.search_band))
        object.__setattr__(self, "a_line_harmonics", tuple(int(v) for v in self.a_line_harmonics))

    def to_dict(self):
        d = asdict(self)
        d["search_band"] = list(self.search_band)
        d["a_line_harmonics"] = list(self.a_line_harmonics)
        return d

    @classmethod
    def from_dict(cls, d):
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown scorer config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class FeatureSummary:
    pleura_row: int
    a_line_score: float
    b_line_count: int
    confluent_frac: float
    consolidation_score: float

    def __post_init__(self):
        for name in ("a_line_score", "confluent_frac", "consolidation_score"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.b_line_count < 0 or self.pleura_row < 0:
            raise ValueError("pleura_row and b_line_count must be non-negative")

    def to_dict(self):
        return {k: (int(v) if isinstance(v, (int, np.integer)) else float(v))
                for k, v in asdict(self).items()}


def _band_rows(rows, band):
    lo_frac, hi_frac = band
    if not 0 <= lo_frac < hi_frac <= 1:
        raise ImageError(f"empty or invalid search band {band}")
    lo = int(np.floor(lo_frac * rows))
    hi = int(np.ceil(hi_frac * rows))
    if hi <= lo:
        raise ImageError(f"search band {band} selects no rows of a {rows}-row image")
    return lo, hi


def pleura_evidence(lpi, img):
    """Local phase weighted by the enhanced intensity: bright, even-symmetric structure."""
    return as_image(lpi) * enhance(img)


def detect_pleura(lpi, search_band=(0.05, 0.6)):
    """Row in ``search_band`` (depth fractions) with the largest mean of ``lpi``.

    Ties go to the shallowest row.
    """
    arr = as_image(lpi)
    lo, hi = _band_rows(arr.shape[0], search_band)
    return lo + int(np.argmax(arr[lo:hi].mean(axis=1)))


def detect_a_lines(img, pleura_row, harmonics=(2, 3, 4), tolerance=1):
    """Score in [0, 1] for reverberation peaks at multiples of the pleura depth.

    The peak mean at the harmonic rows is compared with the mean of the
    depth profile below the pleura: score = 1 - profile_mean / peak_mean.
    """
    arr = as_image(img)
    rows = arr.shape[0]
    if pleura_row < 2:
        raise ImageError(f"pleura_row must be >= 2, got {pleura_row}")
    profile = arr.mean(axis=1)
    below = profile[pleura_row + 1 :]
    peaks = []
    for k in harmonics:
        centre = k * pleura_row
        lo, hi = centre - tolerance, centre + tolerance + 1
        if lo <= pleura_row or hi > rows:
            continue
        peaks.append(profile[lo:hi].max())
    if not peaks or below.size == 0:
        return 0.0
    peak_mean = float(np.mean(peaks))
    base = float(below.mean())
    if peak_mean <= 0:
        return 0.0
    return float(np.clip(1.0 - base / peak_mean, 0.0, 1.0))


def detect_b_lines(shibs, pleura_row, threshold_frac=0.5, min_contrast=5.0,
                   min_width=3, baseline_percentile=5.0):
    """Count bright vertical runs in the SHIBS column profile below the pleura.

    Columns whose mean rises above ``baseline + threshold_frac * (max - baseline)``
    are lit, where the baseline is a low percentile of the column means. If the
    brightest column is not at least ``min_contrast`` times the baseline, the
    profile is treated as flat and nothing is lit.

    Returns ``(count, confluent_frac)``.
    """
    arr = as_image(shibs)
    if not 0 <= pleura_row < arr.shape[0]:
        raise ImageError(f"pleura_row {pleura_row} outside image")
    below = arr[pleura_row + 1 :]
    if below.size == 0:
        return 0, 0.0
    col_mean = below.mean(axis=0)
    peak = col_mean.max()
    if peak <= 0:
        return 0, 0.0
    base = float(np.percentile(col_mean, baseline_percentile))
    if peak < min_contrast * base:
        return 0, 0.0
    lit = col_mean > base + threshold_frac * (peak - base)
    count = 0
    run = 0
    for v in np.append(lit, False):
        if v:
            run += 1
        else:
            if run >= min_width:
                count += 1
            run = 0
    return count, float(lit.mean())


def consolidation_score(img, pleura_row, search_band=(0.05, 0.6), half_band=2,
                        weight_deficit=0.5, weight_irregularity=0.5, irregularity_scale=0.01):
    """Proxy for subpleural consolidation; not a C-line detector.

    Combines the intensity deficit of the band around the pleura row, relative
    to each column's brightest row in the search band, with the standard
    deviation of those per-column brightest rows (a flat pleura has every
    column peaking on the same row), measured in units of
    ``irregularity_scale * rows``.
    """
    arr = as_image(img)
    rows = arr.shape[0]
    lo, hi = _band_rows(rows, search_band)
    band = arr[lo:hi]
    strongest = band.max(axis=0).mean()
    r0, r1 = max(lo, pleura_row - half_band), min(hi, pleura_row + half_band + 1)
    if strongest <= 0 or r1 <= r0:
        deficit = 0.0
    else:
        local = arr[r0:r1].max(axis=0).mean()
        deficit = float(np.clip(1.0 - local / strongest, 0.0, 1.0))
    col_peak = lo + np.argmax(band, axis=0)
    irregular = float(np.clip(col_peak.std() / (irregularity_scale * rows), 0.0, 1.0))
    score = weight_deficit * deficit + weight_irregularity * irregular
    return float(np.clip(score, 0.0, 1.0))


def classify(fs, config=ScorerConfig()):
    """Fixed precedence: consolidation, confluent B-lines, B-lines, A-lines, else class 2."""
    if fs.consolidation_score > config.tau_consolidation:
        return SeverityClass.CONSOLIDATION
    if fs.confluent_frac > config.tau_confluent:
        return SeverityClass.CONFLUENT_B_LINES
    if fs.b_line_count >= 1:
        return SeverityClass.B_LINES
    if fs.a_line_score > config.tau_a_lines:
        return SeverityClass.A_LINES
    return SeverityClass.NO_A_LINES


def summarize(maps, config=ScorerConfig()):
    """Build a FeatureSummary from the maps of :func:`pipeline.compute_features`."""
    img = maps.rectified
    pleura = detect_pleura(pleura_evidence(maps.lpi, img), config.search_band)
    a_score = detect_a_lines(img, max(pleura, 2), config.a_line_harmonics, config.a_line_tolerance)
    count, conf = detect_b_lines(
        maps.shibs,
        pleura,
        config.b_line_threshold_frac,
        config.b_line_min_contrast,
        config.b_line_min_width,
        config.baseline_percentile,
    )
    cons = consolidation_score(
        img,
        pleura,
        config.search_band,
        config.pleura_half_band,
        config.consolidation_weight_deficit,
        config.consolidation_weight_irregularity,
        config.irregularity_scale,
    )
    return FeatureSummary(pleura, a_score, count, conf, cons)


def score_image(img, config=ScorerConfig(), features=FeatureConfig()):
    """Full chain on an already rectified frame; returns (class, summary, maps)."""
    maps = compute_features(img, features)
    fs = summarize(maps, config)
    return classify(fs, config), fs, maps
