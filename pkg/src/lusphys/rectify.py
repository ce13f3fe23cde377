"""Convex/sector to rectangular scan conversion.

Points are ``(row, col)`` pairs in pixel units. The acquisition fan is
described by its apex, an inner and outer radius, and a half-angle measured
from the fan bisector.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagecore import ImageError, as_image


class GeometryError(ImageError):
    """Raised for edge configurations that do not describe a fan."""


class NoApexError(GeometryError):
    def __init__(self, angle):
        self.angle = float(angle)
        super().__init__(
            f"no apex: edge lines are parallel (angle between lines {self.angle:.3g} rad)"
        )


@dataclass(frozen=True)
class EdgeSegment:
    p0: tuple
    p1: tuple

    def __post_init__(self):
        p0 = tuple(float(v) for v in self.p0)
        p1 = tuple(float(v) for v in self.p1)
        if len(p0) != 2 or len(p1) != 2:
            raise GeometryError("edge endpoints must be (row, col) pairs")
        if p0 == p1:
            raise GeometryError(f"degenerate edge: both endpoints are {p0}")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def direction(self):
        d = np.subtract(self.p1, self.p0)
        return d / np.hypot(*d)


@dataclass(frozen=True)
class SectorGeometry:
    apex: tuple
    r0: float
    r1: float
    theta_max: float

    def __post_init__(self):
        object.__setattr__(self, "apex", tuple(float(v) for v in self.apex))
        if not (self.r1 > self.r0 >= 0):
            raise GeometryError(f"need r1 > r0 >= 0, got r0={self.r0}, r1={self.r1}")
        if not (0 < self.theta_max < math.pi / 2):
            raise GeometryError(f"theta_max must lie in (0, pi/2), got {self.theta_max}")

    def radii(self, out_rows):
        return self.r0 + np.arange(out_rows) * (self.r1 - self.r0) / (out_rows - 1)

    def angles(self, out_cols):
        return -self.theta_max + np.arange(out_cols) * 2 * self.theta_max / (out_cols - 1)

    def default_shape(self, in_rows):
        """Keep the input row count; columns follow the arc length at ``r1``."""
        return in_rows, max(2, int(round(2 * self.theta_max * self.r1)))


def estimate_apex(left, right):
    """Intersect the infinite lines through two edge segments."""
    d1, d2 = left.direction, right.direction
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) <= 1e-9:
        raise NoApexError(math.asin(min(1.0, abs(cross))))
    # p0_l + t*d1 == p0_r + s*d2
    a = np.column_stack([d1, -d2])
    b = np.subtract(right.p0, left.p0)
    t, _ = np.linalg.solve(a, b)
    apex = np.add(left.p0, t * d1)
    return float(apex[0]), float(apex[1])


def _outward(edge, apex):
    """Unit direction of ``edge`` pointing away from the apex."""
    d = edge.direction
    mid = np.add(edge.p0, edge.p1) / 2
    if np.dot(mid - np.asarray(apex), d) < 0:
        d = -d
    return d


def derive_geometry(apex, img, edges, threshold=0.0):
    """Recover the sector geometry from an apex, the fan image and its two edges.

    ``r0``/``r1`` are the nearest and farthest content pixels (value above
    ``threshold``) lying on the fan bisector, within half a pixel of it.
    """
    arr = as_image(img)
    left, right = edges
    content = arr > threshold
    if not content.any():
        raise GeometryError("image has no fan content")
    first_row = int(np.argmax(content.any(axis=1)))
    if apex[0] >= first_row:
        raise GeometryError(
            f"invalid geometry: apex row {apex[0]:.2f} is not above the first "
            f"fan content row {first_row}"
        )
    dl, dr = _outward(left, apex), _outward(right, apex)
    half = 0.5 * math.acos(float(np.clip(np.dot(dl, dr), -1.0, 1.0)))
    bis = dl + dr
    bis /= np.hypot(*bis)

    rr, cc = np.nonzero(content)
    rel_r, rel_c = rr - apex[0], cc - apex[1]
    along = rel_r * bis[0] + rel_c * bis[1]
    across = np.abs(rel_r * bis[1] - rel_c * bis[0])
    on_axis = (across <= 0.5) & (along > 0)
    if not on_axis.any():
        raise GeometryError("no fan content along the bisector")
    dist = np.hypot(rel_r[on_axis], rel_c[on_axis])
    return SectorGeometry(apex, float(dist.min()), float(dist.max()), half)


def detect_edges(img, threshold=0.0, band=(0.1, 0.9)):
    """Fit left/right fan edges to the per-row support boundaries.

    Each side is fitted over the rows between the top of the content and the
    row where that side is widest, restricted to the central ``band`` of that
    span so the arcs do not bias the fit. Boundaries sit half a pixel outside
    the outermost content pixel centres.
    """
    arr = as_image(img)
    content = arr > threshold
    rows = np.nonzero(content.any(axis=1))[0]
    if rows.size < 4:
        raise GeometryError("not enough fan content rows to fit edges")
    left_all = np.array([np.argmax(content[r]) for r in rows], dtype=float) - 0.5
    right_all = np.array(
        [content.shape[1] - 1 - np.argmax(content[r, ::-1]) for r in rows], dtype=float
    ) + 0.5
    fits = []
    for cols, widest in ((left_all, np.argmin(left_all)), (right_all, np.argmax(right_all))):
        top, bottom = rows[0], rows[widest]
        lo = top + band[0] * (bottom - top)
        hi = top + band[1] * (bottom - top)
        keep = (rows >= lo) & (rows <= hi)
        if keep.sum() < 2:
            raise GeometryError("not enough rows in the edge fitting band")
        fits.append((rows[keep].astype(float), cols[keep]))
    edges = []
    for use, cols in fits:
        slope, intercept = np.polyfit(use, cols, 1)
        r_a, r_b = float(use[0]), float(use[-1])
        edges.append(EdgeSegment((r_a, slope * r_a + intercept), (r_b, slope * r_b + intercept)))
    return edges[0], edges[1]


def sample_points(geo, out_rows, out_cols):
    """Input-space (row, col) sample coordinates for every output pixel."""
    r = geo.radii(out_rows)[:, None]
    th = geo.angles(out_cols)[None, :]
    rows = geo.apex[0] + r * np.cos(th)
    cols = geo.apex[1] + r * np.sin(th)
    return rows, cols


def rectify(img, geo, out_rows=None, out_cols=None):
    """Resample a fan-shaped image onto a (radius, angle) grid.

    Pass ``geo=None`` for linear-probe data: the input is returned unchanged.
    Samples falling outside the input are zero.
    """
    arr = as_image(img)
    if geo is None:
        return arr.copy()
    default_rows, default_cols = geo.default_shape(arr.shape[0])
    out_rows = default_rows if out_rows is None else int(out_rows)
    out_cols = default_cols if out_cols is None else int(out_cols)
    if out_rows < 2 or out_cols < 2:
        raise GeometryError(f"output dimensions must be >= 2, got {out_rows}x{out_cols}")
    rows, cols = sample_points(geo, out_rows, out_cols)
    return ndimage.map_coordinates(arr, [rows, cols], order=1, mode="constant", cval=0.0)


def render_fan(shape, geo, value=1.0):
    """Binary-valued annular sector, useful for tests and demos."""
    rr, cc = np.mgrid[0 : shape[0], 0 : shape[1]].astype(float)
    dr, dc = rr - geo.apex[0], cc - geo.apex[1]
    dist = np.hypot(dr, dc)
    ang = np.arctan2(dc, dr)
    inside = (dist >= geo.r0) & (dist <= geo.r1) & (np.abs(ang) <= geo.theta_max)
    return np.where(inside, value, 0.0)
