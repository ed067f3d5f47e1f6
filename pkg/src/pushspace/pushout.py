"""The push-out region in the base normal plane.

Two views of the same set: the exact component around the origin as a
radial support function (intersection of the open half-planes
``<x, u_i> < d_i``), and a raster of the whole window with every line
thickened by ``band`` and the free cells split into 4-connected components.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .errors import GridMismatch
from .focal import (
    DEFAULT_N_TRUNCATE,
    DIRECTION_GROUP_TOL,
    matrix_powers,
    direction_groups,
    envelope_lines,
    orbit_powers,
)

DEFAULT_N_THETA = 4096
DEFAULT_RES = 1024
DEFAULT_WINDOW_FACTOR = 2.5
NONCONVEX_DEFECT = 0.05


def worker_count():
    """Thread cap from PUSHOUT_THREADS (default: 1)."""
    try:
        return max(1, int(os.environ.get("PUSHOUT_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# support function of the origin component


@dataclass(frozen=True, eq=False)
class SupportPolygon:
    thetas: np.ndarray
    rho: np.ndarray

    @property
    def vertices(self):
        ok = np.isfinite(self.rho)
        return np.stack([self.rho[ok] * np.cos(self.thetas[ok]), self.rho[ok] * np.sin(self.thetas[ok])], axis=1)

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.rho)))

    def contains(self, pts):
        """Radial membership test for points strictly inside the sampled region."""
        pts = np.atleast_2d(pts)
        r = np.linalg.norm(pts, axis=1)
        th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
        j = np.rint(th / (2 * np.pi) * len(self.thetas)).astype(int) % len(self.thetas)
        return r < self.rho[j]


def _support_chunk(u, d, dirs):
    c = u @ dirs.T
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(c > 0.0, d[:, None] / c, np.inf)
    return val.min(axis=0)


def central_region(lines, n_theta=DEFAULT_N_THETA):
    """Radial function of the component of the complement containing the origin."""
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    rho = np.full(n_theta, np.inf)
    if len(lines) == 0:
        return SupportPolygon(thetas, rho)
    if lines.k != 2:
        raise ValueError("central_region needs a two-dimensional normal space")
    env = envelope_lines(lines)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    chunk = max(1, 2_000_000 // n_theta)
    bounds = [(a, min(a + chunk, len(env))) for a in range(0, len(env), chunk)]
    work = lambda ab: _support_chunk(env.u[ab[0] : ab[1]], env.d[ab[0] : ab[1]], dirs)  # noqa: E731
    if worker_count() > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(ab) for ab in bounds]
    for part in parts:  # fixed order keeps the result deterministic
        rho = np.minimum(rho, part)
    return SupportPolygon(thetas, rho)


def radial_polygon(radius_fn, n_theta=DEFAULT_N_THETA):
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    return SupportPolygon(thetas, np.asarray(radius_fn(thetas), dtype=float))


def square_region(half_side, n_theta=DEFAULT_N_THETA, angle=0.0):
    """Origin-centred square with the given half side, rotated by ``angle``."""
    return radial_polygon(
        lambda t: half_side / np.maximum(np.abs(np.cos(t - angle)), np.abs(np.sin(t - angle))), n_theta
    )


def disk_region(radius, n_theta=DEFAULT_N_THETA):
    return radial_polygon(lambda t: np.full_like(t, radius), n_theta)


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    out = np.full(len(p), np.inf)
    for start in range(0, len(p), 512):
        q = p[start : start + 512]
        t = np.einsum("pij,ij->pi", q[:, None, :] - a[None], ab) / np.where(denom > 0, denom, 1.0)
        t = np.clip(t, 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        out[start : start + 512] = np.linalg.norm(q[:, None, :] - proj, axis=2).min(axis=1)
    return out


def hausdorff_distance(p, q):
    """Hausdorff distance between two closed polylines given by their vertices."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    pa, pb = p, np.roll(p, -1, axis=0)
    qa, qb = q, np.roll(q, -1, axis=0)
    return float(max(_point_segment_distance(p, qa, qb).max(), _point_segment_distance(q, pa, pb).max()))


# ---------------------------------------------------------------------------
# raster


@dataclass
class Component:
    label: int
    cell_count: int
    area: float
    convexity_defect: float
    max_inscribed_radius: float
    touches_window_edge: bool
    contains_origin: bool = False

    def to_dict(self):
        return {
            "label": self.label,
            "cell_count": self.cell_count,
            "area": self.area,
            "convexity_defect": self.convexity_defect,
            "max_inscribed_radius": self.max_inscribed_radius,
            "touches_window_edge": self.touches_window_edge,
            "contains_origin": self.contains_origin,
        }


@dataclass(eq=False)
class PushoutRaster:
    """Rasterized complement of the thickened lines.

    ``excluded[iy, ix]`` covers the cell centred at ``(x_ix, y_iy)`` with
    ``x = -W + (ix + 1/2) * cell``.
    """

    window: float
    resolution: int
    band: float
    excluded: np.ndarray
    labels: np.ndarray = field(repr=False)
    components: list
    origin_label: int
    window_too_small: bool

    @property
    def cell(self):
        return 2.0 * self.window / self.resolution

    @property
    def centers(self):
        return -self.window + (np.arange(self.resolution) + 0.5) * self.cell

    @property
    def origin_index(self):
        return self.resolution // 2, self.resolution // 2

    @property
    def origin_component(self):
        for comp in self.components:
            if comp.label == self.origin_label:
                return comp
        return None


def _mark_intervals(mask_diff, u_rep, lo_t, hi_t, coords, W, h, n, transpose):
    """Mark cells whose centre satisfies ``lo_t <= <c, u> <= hi_t``.

    Iterates over the axis along which ``u`` has the smaller component, so
    every line crosses each column (or row) in a contiguous run of cells.
    """
    if transpose:
        a_comp, b_comp = u_rep[:, 1], u_rep[:, 0]
    else:
        a_comp, b_comp = u_rep[:, 0], u_rep[:, 1]
    # solve for the coordinate along the marked axis: b * y = t - a * x
    base = a_comp[:, None] * coords[None, :]
    y1 = (lo_t[:, None] - base) / b_comp[:, None]
    y2 = (hi_t[:, None] - base) / b_comp[:, None]
    ylo, yhi = np.minimum(y1, y2), np.maximum(y1, y2)
    ilo = np.ceil((ylo + W) / h - 0.5).astype(np.int64)
    ihi = np.floor((yhi + W) / h - 0.5).astype(np.int64)
    ilo = np.clip(ilo, 0, n)
    ihi = np.clip(ihi, -1, n - 1)
    ok = ilo <= ihi
    col = np.broadcast_to(np.arange(n), ilo.shape)
    np.add.at(mask_diff, (ilo[ok], col[ok]), 1)
    np.add.at(mask_diff, (ihi[ok] + 1, col[ok]), -1)


def _sweep_pairs(lines, labels):
    """Index pairs of lines from neighbouring samples (same power, same group).

    Between two neighbouring samples the line moves continuously, so the
    strip between them is part of the excluded set as well.
    """
    order = np.lexsort((lines.source, lines.power))
    a, b = order[:-1], order[1:]
    ok = (lines.power[a] == lines.power[b]) & (lines.source[b] - lines.source[a] == 1) & (labels[a] == labels[b])
    return a[ok], b[ok]


def excluded_intervals(lines, band, reach=np.inf, continuous=True):
    """Thickened lines as merged slabs ``lo <= <x, u> <= hi``, one set per direction.

    Returns ``(u, lo, hi)``.  Slabs entirely beyond ``reach`` from the
    origin are dropped.
    """
    if len(lines) == 0:
        return np.zeros((0, lines.k)), np.zeros(0), np.zeros(0)
    labels, reps = direction_groups(lines, DIRECTION_GROUP_TOL)
    lab_all, lo_all, hi_all = [labels], [lines.d - band], [lines.d + band]
    if continuous:
        a, b = _sweep_pairs(lines, labels)
        lab_all.append(labels[a])
        lo_all.append(np.minimum(lines.d[a], lines.d[b]) - band)
        hi_all.append(np.maximum(lines.d[a], lines.d[b]) + band)
    lab_all, lo_all, hi_all = (np.concatenate(x) for x in (lab_all, lo_all, hi_all))
    near = (hi_all >= -reach) & (lo_all <= reach)
    lab_all, lo_all, hi_all = lab_all[near], lo_all[near], hi_all[near]
    # merged t-intervals per direction group
    rep_u, lo_t, hi_t = [], [], []
    order = np.lexsort((lo_all, lab_all))
    lab_all, lo_all, hi_all = lab_all[order], lo_all[order], hi_all[order]
    splits = np.nonzero(np.diff(lab_all))[0] + 1
    for labs, lo, hi in zip(np.split(lab_all, splits), np.split(lo_all, splits), np.split(hi_all, splits)):
        if labs.size == 0:
            continue
        new = np.ones(len(lo), dtype=bool)
        new[1:] = lo[1:] > np.maximum.accumulate(hi)[:-1]
        starts = np.nonzero(new)[0]
        ends = np.append(starts[1:], len(lo))
        for s0, s1 in zip(starts, ends):
            rep_u.append(reps[labs[0]])
            lo_t.append(lo[s0])
            hi_t.append(hi[s0:s1].max())
    if not rep_u:
        return np.zeros((0, lines.k)), np.zeros(0), np.zeros(0)
    return np.array(rep_u), np.array(lo_t), np.array(hi_t)


def orbit_intervals(intervals, g, order, n_truncate=DEFAULT_N_TRUNCATE):
    """Slabs rotated by every holonomy power, matching ``orbit_lines``."""
    rep_u, lo_t, hi_t = intervals
    powers = orbit_powers(order, n_truncate)
    mats = matrix_powers(g, [-p for p in powers])
    return (
        np.concatenate([rep_u @ gm.T for gm in mats]),
        np.tile(lo_t, len(mats)),
        np.tile(hi_t, len(mats)),
    )


def _rasterize(intervals, W, n):
    rep_u, lo_t, hi_t = intervals
    h = 2.0 * W / n
    coords = -W + (np.arange(n) + 0.5) * h
    if len(rep_u) == 0:
        return np.zeros((n, n), dtype=bool)
    steep = np.abs(rep_u[:, 1]) >= np.abs(rep_u[:, 0])
    col_diff = np.zeros((n + 1, n), dtype=np.int64)
    row_diff = np.zeros((n + 1, n), dtype=np.int64)
    chunk = max(1, 4_000_000 // n)
    for sel, diff, transpose in ((steep, col_diff, False), (~steep, row_diff, True)):
        idx = np.nonzero(sel)[0]
        for start in range(0, len(idx), chunk):
            part = idx[start : start + chunk]
            _mark_intervals(diff, rep_u[part], lo_t[part], hi_t[part], coords, W, h, n, transpose)
    # col_diff runs over rows (y) for each column x; row_diff over columns for each row
    excluded = np.cumsum(col_diff, axis=0)[:n] > 0
    excluded |= (np.cumsum(row_diff, axis=0)[:n] > 0).T
    return excluded


def _component_stats(mask, h):
    cells = np.argwhere(mask)
    count = len(cells)
    area = count * h * h
    # convex hull of the cell squares: corners of boundary cells suffice
    eroded = ndimage.binary_erosion(mask, border_value=0)
    edge_cells = np.argwhere(mask & ~eroded)
    corners = (edge_cells[:, None, :] + np.array([[0, 0], [0, 1], [1, 0], [1, 1]])[None]).reshape(-1, 2)
    corners = np.unique(corners, axis=0)
    try:
        hull_area = ConvexHull(corners.astype(float)).volume * h * h
    except (QhullError, ValueError):
        hull_area = area
    defect = hull_area / area - 1.0
    padded = np.pad(mask, 1, constant_values=False)
    radius = float(ndimage.distance_transform_edt(padded).max()) * h
    return count, area, float(defect), radius


def raster_pushout(lines, window, resolution=DEFAULT_RES, band=None, continuous=True, holonomy=None, n_truncate=DEFAULT_N_TRUNCATE):
    """Rasterize the complement of the thickened lines and label its components.

    With ``continuous`` the strip swept between lines of neighbouring samples
    is excluded too, so the raster shows the critical set of the whole curve
    rather than of its samples.  When a ``holonomy`` result is given the
    lines are taken as unexpanded and the orbit is applied to the merged
    slabs, which is far cheaper than expanding the lines first.
    """
    n = int(resolution)
    if n < 64:
        raise ValueError("resolution must be at least 64")
    W = float(window)
    h = 2.0 * W / n
    band = h if band is None else float(band)
    if band < h / 2.0:
        raise ValueError("band must be at least half a cell")
    intervals = excluded_intervals(lines, band, W * np.sqrt(2.0) + band, continuous)
    if holonomy is not None:
        intervals = orbit_intervals(intervals, holonomy.g, holonomy.orbit_order, n_truncate)
    excluded = _rasterize(intervals, W, n)
    labels, count = ndimage.label(~excluded)
    oy, ox = n // 2, n // 2
    origin_label = int(labels[oy, ox])
    comps = []
    objects = ndimage.find_objects(labels)
    for lab in range(1, count + 1):
        sl = objects[lab - 1]
        sub = labels[sl] == lab
        cnt, area, defect, radius = _component_stats(sub, h)
        touches = bool(sl[0].start == 0 or sl[1].start == 0 or sl[0].stop == n or sl[1].stop == n)
        comps.append(Component(lab, cnt, area, defect, radius, touches, lab == origin_label))
    origin = next((c for c in comps if c.label == origin_label), None)
    too_small = bool(origin is not None and origin.touches_window_edge)
    return PushoutRaster(W, n, band, excluded, labels, comps, origin_label, too_small)


def compare_rasters(a, b):
    """Fraction of cells whose excluded flag differs."""
    if a.resolution != b.resolution or not np.isclose(a.window, b.window) or not np.isclose(a.band, b.band):
        raise GridMismatch("rasters use different window, resolution or band")
    return float(np.mean(a.excluded != b.excluded))


@dataclass(frozen=True)
class ComponentVerdict:
    label: int
    contains_origin: bool
    convexity_defect: float
    convex: bool
    max_inscribed_radius: float
    openness_ratio: float
    touches_window_edge: bool

    def to_dict(self):
        return dict(self.__dict__)


def component_report(raster):
    """Convexity verdict per component and the inscribed radius in band units.

    A thickened line of measure zero cannot be told apart from an open set
    on a raster, so ``openness_ratio`` (inscribed radius over band) is only
    a proxy: components thinner than the band are the suspicious ones.
    """
    return [
        ComponentVerdict(
            label=c.label,
            contains_origin=c.contains_origin,
            convexity_defect=c.convexity_defect,
            convex=c.convexity_defect <= NONCONVEX_DEFECT,
            max_inscribed_radius=c.max_inscribed_radius,
            openness_ratio=c.max_inscribed_radius / raster.band,
            touches_window_edge=c.touches_window_edge,
        )
        for c in raster.components
    ]


def raster_boundary_radius(raster, thetas):
    """Distance from the origin to the edge of the origin component along each ray."""
    n, h, W = raster.resolution, raster.cell, raster.window
    mask = raster.labels == raster.origin_label
    steps = np.arange(0.0, np.sqrt(2.0) * W, h / 4.0)
    out = np.empty(len(thetas))
    for j, th in enumerate(thetas):
        x = steps * np.cos(th)
        y = steps * np.sin(th)
        ix = np.floor((x + W) / h).astype(int)
        iy = np.floor((y + W) / h).astype(int)
        inside = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
        hit = np.ones(len(steps), dtype=bool)
        hit[inside] = ~mask[iy[inside], ix[inside]]
        first = np.argmax(hit[1:]) + 1 if hit[1:].any() else len(steps) - 1
        out[j] = steps[first]
    return out
