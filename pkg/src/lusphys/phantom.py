"""Synthetic lung ultrasound frames with known ground truth.

Each frame is built additively from a soft-tissue band, a pleural line and
class-specific artifacts, then scaled by multiplicative speckle and
min-max normalized. The artifact geometry (line widths, intensities) is
fixed by this module; nothing here models wave propagation.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .imagecore import SeverityClass, normalize

TISSUE_LEVEL = 0.3
TISSUE_TEXTURE = 0.05
LUNG_LEVEL = 0.1
PLEURA_AMPLITUDE = 1.0
B_LINE_AMPLITUDE = 0.5
B_LINE_DEPTH_FADE = 0.3
CONFLUENT_LIMIT = 0.3  # max B-line coverage for a discrete (class 3) pattern


class PhantomSpecError(ValueError):
    pass


@dataclass(frozen=True)
class PhantomSpec:
    rows: int = 512
    cols: int = 512
    severity: SeverityClass = SeverityClass.A_LINES
    pleura_depth_frac: float = 0.25
    pleura_thickness: float = 8.0
    a_line_count: int = 3
    a_line_decay: float = 0.6
    b_line_columns: tuple = ()
    confluent_frac: float = 0.0
    consolidation: tuple = None  # (top_frac, bottom_frac, intensity)
    speckle_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "severity", SeverityClass(self.severity))
        object.__setattr__(
            self,
            "b_line_columns",
            tuple((float(c), float(w)) for c, w in self.b_line_columns),
        )
        if self.consolidation is not None:
            object.__setattr__(self, "consolidation", tuple(float(v) for v in self.consolidation))
        self._validate()

    def _validate(self):
        if self.rows < 16 or self.cols < 16:
            raise PhantomSpecError(f"phantom must be at least 16x16, got {self.rows}x{self.cols}")
        if not 0.1 < self.pleura_depth_frac < 0.5:
            raise PhantomSpecError(f"pleura_depth_frac must lie in (0.1, 0.5), got {self.pleura_depth_frac}")
        if self.pleura_thickness <= 0:
            raise PhantomSpecError("pleura_thickness must be positive")
        if self.a_line_count < 0:
            raise PhantomSpecError("a_line_count must be >= 0")
        if not 0 < self.a_line_decay < 1:
            raise PhantomSpecError(f"a_line_decay must lie in (0, 1), got {self.a_line_decay}")
        if not 0 <= self.confluent_frac <= 1:
            raise PhantomSpecError(f"confluent_frac must lie in [0, 1], got {self.confluent_frac}")
        if self.speckle_sigma < 0:
            raise PhantomSpecError("speckle_sigma must be >= 0")
        for c, w in self.b_line_columns:
            if not 0 <= c < self.cols:
                raise PhantomSpecError(f"B-line column {c} outside [0, {self.cols})")
            if w <= 0:
                raise PhantomSpecError(f"B-line width must be positive, got {w}")
        if self.consolidation is not None:
            top, bottom, level = self.consolidation
            if not 0 <= top < bottom <= 1 or not 0 < level < 1:
                raise PhantomSpecError(f"bad consolidation {self.consolidation}")

        cls = self.severity
        has_b = bool(self.b_line_columns)
        if cls != SeverityClass.A_LINES and self.a_line_count:
            raise PhantomSpecError(f"class {int(cls)} must not have A-lines")
        if cls == SeverityClass.A_LINES and not self.a_line_count:
            raise PhantomSpecError("class 1 needs at least one A-line")
        if cls in (SeverityClass.A_LINES, SeverityClass.NO_A_LINES) and has_b:
            raise PhantomSpecError(f"class {int(cls)} must not have B-lines")
        if cls in (SeverityClass.B_LINES, SeverityClass.CONFLUENT_B_LINES) and not has_b:
            raise PhantomSpecError(f"class {int(cls)} needs at least one B-line")
        if cls == SeverityClass.B_LINES:
            if self.confluent_frac:
                raise PhantomSpecError("class 3 B-lines are discrete; confluent_frac must be 0")
            if _coverage(self._b_intervals(1.0), self.cols) > CONFLUENT_LIMIT:
                raise PhantomSpecError("class 3 B-lines cover too many columns; use class 4")
        if cls == SeverityClass.CONFLUENT_B_LINES and self.confluent_frac <= CONFLUENT_LIMIT:
            raise PhantomSpecError(f"class 4 needs confluent_frac > {CONFLUENT_LIMIT}")
        if cls != SeverityClass.CONFLUENT_B_LINES and self.confluent_frac:
            raise PhantomSpecError(f"class {int(cls)} must have confluent_frac 0")
        if (cls == SeverityClass.CONSOLIDATION) != (self.consolidation is not None):
            raise PhantomSpecError("a consolidation patch is required for class 5 and only class 5")

    @property
    def pleura_row(self):
        return int(round(self.pleura_depth_frac * self.rows))

    def _b_intervals(self, scale):
        return [(c - scale * w / 2, c + scale * w / 2) for c, w in self.b_line_columns]

    def to_dict(self):
        d = asdict(self)
        d["severity"] = int(self.severity)
        d["b_line_columns"] = [list(b) for b in self.b_line_columns]
        d["consolidation"] = list(self.consolidation) if self.consolidation else None
        return d


@dataclass
class GroundTruth:
    pleura_row: int
    a_line_rows: list = field(default_factory=list)
    b_line_columns: list = field(default_factory=list)
    severity: SeverityClass = SeverityClass.A_LINES

    def to_dict(self):
        return {
            "pleura_row": int(self.pleura_row),
            "a_line_rows": [int(r) for r in self.a_line_rows],
            "b_line_columns": [float(c) for c in self.b_line_columns],
            "severity": int(self.severity),
        }


def _coverage(intervals, cols):
    cidx = np.arange(cols)
    covered = np.zeros(cols, dtype=bool)
    for lo, hi in intervals:
        covered |= (cidx >= lo) & (cidx <= hi)
    return covered.mean()


def _line_profile(rows, center, thickness):
    sigma = thickness / 4.0
    return np.exp(-0.5 * ((rows - center) / sigma) ** 2)


def _band_profile(cols, lo, hi, taper=2.0):
    """Flat-top band on [lo, hi] with raised-cosine shoulders ``taper`` px wide."""
    out = np.zeros_like(cols, dtype=float)
    inside = (cols >= lo) & (cols <= hi)
    out[inside] = 1.0
    dist = np.where(cols < lo, lo - cols, cols - hi)
    edge = (~inside) & (dist < taper)
    out[edge] = 0.5 * (1 + np.cos(np.pi * dist[edge] / taper))
    return out


def _smooth_noise(rng, shape, sigma):
    field_ = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    std = field_.std()
    return field_ / std if std > 0 else field_


def _confluent_scale(spec):
    target = spec.confluent_frac
    scale = 1.0
    while _coverage(spec._b_intervals(scale), spec.cols) < target and scale < 1e4:
        scale *= 1.05
    return scale


def generate(spec):
    """Render ``spec`` into a normalized image and its ground truth."""
    rng = np.random.default_rng(spec.seed)
    R, C = spec.rows, spec.cols
    rows = np.arange(R, dtype=float)[:, None]
    cols = np.arange(C, dtype=float)[None, :]
    p = spec.pleura_row
    cls = spec.severity

    texture = _smooth_noise(rng, (R, C), sigma=max(1.0, R / 128))
    tissue = TISSUE_LEVEL + TISSUE_TEXTURE * texture
    step = 1.0 / (1.0 + np.exp((rows - p) / 1.5))  # 1 above the pleura, 0 below
    img = step * tissue + (1 - step) * LUNG_LEVEL

    a_rows = []
    if cls == SeverityClass.CONSOLIDATION:
        img += _irregular_pleura(spec, rng, rows, cols)
        top, bottom, level = spec.consolidation
        band = _band_profile(rows, top * R, bottom * R, taper=max(2.0, R / 64))
        patch = level * (1 + 0.5 * TISSUE_TEXTURE / TISSUE_LEVEL * texture[::-1])
        img += band * (patch - LUNG_LEVEL) * (1 - step)
    else:
        thickness = spec.pleura_thickness
        img += PLEURA_AMPLITUDE * _line_profile(rows, p, thickness)
        for k in range(2, spec.a_line_count + 2):
            if k * p + thickness / 2 >= R:
                break
            a_rows.append(k * p)
            amp = PLEURA_AMPLITUDE * spec.a_line_decay ** (k - 1)
            img += amp * _line_profile(rows, k * p, thickness)

    centers = []
    if spec.b_line_columns:
        scale = _confluent_scale(spec) if cls == SeverityClass.CONFLUENT_B_LINES else 1.0
        lateral = np.zeros((1, C))
        for lo, hi in spec._b_intervals(scale):
            lateral = np.maximum(lateral, _band_profile(cols, lo, hi))
        depth = (rows - p) / max(1, R - 1 - p)
        vertical = (1 - step) * (1 - B_LINE_DEPTH_FADE * np.clip(depth, 0, 1))
        img += B_LINE_AMPLITUDE * vertical * lateral
        centers = [c for c, _ in spec.b_line_columns]

    if spec.speckle_sigma > 0:
        img *= np.maximum(0.0, 1.0 + rng.normal(0.0, spec.speckle_sigma, size=img.shape))

    truth = GroundTruth(pleura_row=p, a_line_rows=a_rows, b_line_columns=centers, severity=cls)
    return normalize(img), truth


def _irregular_pleura(spec, rng, rows, cols):
    """Wavy, fragmented pleural line used for consolidation frames."""
    R, C = spec.rows, spec.cols
    wander = ndimage.gaussian_filter1d(rng.standard_normal(C), C / 24, mode="wrap")
    wander = wander / (np.abs(wander).max() or 1.0)
    offset = spec.pleura_row + 0.05 * R * wander
    gain = ndimage.gaussian_filter1d(rng.uniform(0, 1, C), C / 48, mode="wrap")
    gain = 0.25 + 0.75 * (gain - gain.min()) / (np.ptp(gain) or 1.0)
    return PLEURA_AMPLITUDE * gain[None, :] * _line_profile(rows, offset[None, :], spec.pleura_thickness)


def default_thickness(rows):
    return max(3.0, rows / 64)


def random_spec(severity, rows=512, cols=512, seed=0, speckle_sigma=0.05):
    """Draw a class-consistent spec; every free parameter comes from ``seed``."""
    cls = SeverityClass(severity)
    rng = np.random.default_rng([int(seed), int(cls)])
    depth = float(rng.uniform(0.18, 0.32))
    thick = default_thickness(rows) * float(rng.uniform(0.8, 1.2))
    kw = dict(
        rows=rows,
        cols=cols,
        severity=cls,
        pleura_depth_frac=depth,
        pleura_thickness=thick,
        a_line_count=0,
        a_line_decay=float(rng.uniform(0.5, 0.7)),
        speckle_sigma=speckle_sigma,
        seed=int(seed),
    )
    unit = cols / 512
    if cls == SeverityClass.A_LINES:
        kw["a_line_count"] = int(rng.integers(2, 5))
    elif cls == SeverityClass.NO_A_LINES:
        kw["pleura_thickness"] = thick * 0.5
    elif cls == SeverityClass.B_LINES:
        n = int(rng.integers(1, 4))
        widths = rng.uniform(6, 16, size=n) * unit
        kw["b_line_columns"] = _spread_columns(rng, n, cols, widths)
    elif cls == SeverityClass.CONFLUENT_B_LINES:
        n = int(rng.integers(2, 5))
        widths = rng.uniform(10, 24, size=n) * unit
        kw["b_line_columns"] = _spread_columns(rng, n, cols, widths)
        kw["confluent_frac"] = float(rng.uniform(0.5, 0.85))
    else:
        top = depth + 0.02
        kw["consolidation"] = (top, top + float(rng.uniform(0.15, 0.3)), float(rng.uniform(0.3, 0.45)))
    return PhantomSpec(**kw)


def _spread_columns(rng, n, cols, widths):
    """Evenly spaced centers with jitter, kept inside the central 80%."""
    lo, hi = 0.1 * cols, 0.9 * cols
    slots = np.linspace(lo, hi, n + 2)[1:-1] if n > 1 else np.array([(lo + hi) / 2])
    spacing = (hi - lo) / (n + 1)
    jitter = rng.uniform(-0.25, 0.25, size=n) * spacing
    centers = np.clip(slots + jitter, lo, hi)
    return tuple((float(c), float(w)) for c, w in zip(centers, widths))


def class_spec(severity, rows=512, cols=512, seed=0, speckle_sigma=0.0):
    """Fixed, non-random spec per class (the CLI default)."""
    cls = SeverityClass(severity)
    thick = default_thickness(rows)
    kw = dict(rows=rows, cols=cols, severity=cls, pleura_thickness=thick, a_line_count=0,
              speckle_sigma=speckle_sigma, seed=seed)
    if cls == SeverityClass.A_LINES:
        kw["a_line_count"] = 3
    elif cls == SeverityClass.NO_A_LINES:
        kw["pleura_thickness"] = thick / 2
    elif cls == SeverityClass.B_LINES:
        kw["b_line_columns"] = ((cols * 0.35, 10 * cols / 512), (cols * 0.65, 10 * cols / 512))
    elif cls == SeverityClass.CONFLUENT_B_LINES:
        kw["b_line_columns"] = tuple((cols * f, 16 * cols / 512) for f in (0.2, 0.4, 0.6, 0.8))
        kw["confluent_frac"] = 0.7
    else:
        kw["consolidation"] = (0.27, 0.5, 0.4)
    return PhantomSpec(**kw)
