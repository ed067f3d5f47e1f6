"""Critical normals of a curve as lines in the base normal space.

At arc length ``s`` the endpoint map ``(s, x) -> f(s) + x`` is singular
exactly on the affine hyperplane ``<x, T'(s)> = 1`` of the normal space.
Written in parallel-frame coordinates this is ``<x, u> = d`` with
``u = kvec / |kvec|`` and ``d = 1 / |kvec|``.  Lines are kept in a
struct-of-arrays container so orbit expansion stays vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve_model import KAPPA_MIN
from .normal_bundle import NotClosed

DEFAULT_N_TRUNCATE = 500
DEDUP_DOT_TOL = 1e-10
DEDUP_D_RTOL = 1e-10
# lines whose directions differ by less than this share one raster/envelope group
DIRECTION_GROUP_TOL = 1e-7


@dataclass(frozen=True)
class FocalLine:
    u: np.ndarray
    d: float
    source_sample: int
    orbit_power: int = 0
    source_s: float = float("nan")


@dataclass(frozen=True, eq=False)
class FocalLines:
    """A set of excluded hyperplanes ``<x, u> = d`` in frame coordinates."""

    u: np.ndarray
    d: np.ndarray
    source: np.ndarray
    power: np.ndarray
    source_s: np.ndarray

    def __len__(self):
        return len(self.d)

    def __getitem__(self, i):
        return FocalLine(self.u[i].copy(), float(self.d[i]), int(self.source[i]), int(self.power[i]), float(self.source_s[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def k(self):
        return self.u.shape[1]

    def take(self, idx):
        return FocalLines(self.u[idx], self.d[idx], self.source[idx], self.power[idx], self.source_s[idx])

    def scaled(self, factor):
        return FocalLines(self.u, self.d * factor, self.source, self.power, self.source_s * factor)

    def rotated(self, g):
        """Lines mapped by the orthogonal matrix ``g`` (``u -> g u``)."""
        return FocalLines(self.u @ np.asarray(g).T, self.d, self.source, self.power, self.source_s)

    @classmethod
    def from_lines(cls, lines):
        lines = list(lines)
        if not lines:
            return cls.empty(2)
        return cls(
            u=np.array([ln.u for ln in lines], dtype=float),
            d=np.array([ln.d for ln in lines], dtype=float),
            source=np.array([ln.source_sample for ln in lines], dtype=int),
            power=np.array([ln.orbit_power for ln in lines], dtype=int),
            source_s=np.array([ln.source_s for ln in lines], dtype=float),
        )

    @classmethod
    def empty(cls, k):
        return cls(np.zeros((0, k)), np.zeros(0), np.zeros(0, dtype=int), np.zeros(0, dtype=int), np.zeros(0))

    @classmethod
    def concatenate(cls, parts):
        parts = list(parts)
        return cls(
            u=np.concatenate([p.u for p in parts]),
            d=np.concatenate([p.d for p in parts]),
            source=np.concatenate([p.source for p in parts]),
            power=np.concatenate([p.power for p in parts]),
            source_s=np.concatenate([p.source_s for p in parts]),
        )


def focal_lines(curve, frames, dedup=True):
    """One line per sample with curvature above KAPPA_MIN (orbit power 0)."""
    n = curve.n_points - 1 if curve.closed else curve.n_points
    kvec = curve.kvec[:n]
    kappa = np.linalg.norm(kvec, axis=1)
    idx = np.nonzero(kappa > KAPPA_MIN)[0]
    if idx.size == 0:
        return FocalLines.empty(curve.k)
    unit = kvec[idx] / kappa[idx, None]
    u = np.einsum("ikd,id->ik", frames.frames[idx], unit)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    lines = FocalLines(u=u, d=1.0 / kappa[idx], source=idx, power=np.zeros(idx.size, dtype=int), source_s=curve.s[idx])
    return dedup_lines(lines) if dedup else lines


def line_angles(lines):
    return np.arctan2(lines.u[:, 1], lines.u[:, 0])


def dedup_lines(lines, dot_tol=DEDUP_DOT_TOL, d_rtol=DEDUP_D_RTOL):
    """Merge lines with ``|<u1,u2> - 1| < dot_tol`` and ``|d1 - d2| < d_rtol * max(d1, d2)``.

    The first line of each merged run is kept.  Only implemented for planar
    normal spaces; other dimensions are returned unchanged.
    """
    if len(lines) < 2 or lines.k != 2:
        return lines
    ang_tol = float(np.sqrt(2.0 * dot_tol))
    order = np.lexsort((lines.d, np.round(line_angles(lines) / ang_tol)))
    keep = [order[0]]
    for j in order[1:]:
        ref = keep[-1]
        d_tol = d_rtol * max(lines.d[j], lines.d[ref])
        if abs(lines.u[j] @ lines.u[ref] - 1.0) < dot_tol and abs(lines.d[j] - lines.d[ref]) < d_tol:
            continue
        keep.append(j)
    return lines.take(np.sort(np.array(keep)))


def matrix_powers(g, powers):
    """``g**m`` for each integer m in ``powers`` (accumulated by multiplication)."""
    g = np.asarray(g, dtype=float)
    out = {}
    lo, hi = min(min(powers), 0), max(max(powers), 0)
    cur = np.eye(len(g))
    out[0] = cur
    for m in range(1, hi + 1):
        cur = cur @ g
        if m % 128 == 0:
            u, _, vt = np.linalg.svd(cur)
            cur = u @ vt
        out[m] = cur
    cur = np.eye(len(g))
    for m in range(-1, lo - 1, -1):
        cur = cur @ g.T
        if m % 128 == 0:
            u, _, vt = np.linalg.svd(cur)
            cur = u @ vt
        out[m] = cur
    return [out[m] for m in powers]


def orbit_powers(order, n_truncate=DEFAULT_N_TRUNCATE):
    if isinstance(order, NotClosed) or order is None:
        return list(range(-n_truncate, n_truncate + 1))
    return list(range(int(order)))


def orbit_lines(lines, g, order, n_truncate=DEFAULT_N_TRUNCATE):
    """Images of ``lines`` under the holonomy group generated by ``g``.

    A normal ``x`` transported ``m`` times around meets line ``(u, d)`` when
    ``<g^m x, u> = d``, i.e. ``<x, g^-m u> = d``.  Powers run over one period
    for a closed orbit, otherwise over ``-n_truncate .. n_truncate``.
    """
    powers = orbit_powers(order, n_truncate)
    if len(powers) == 1:
        return lines
    parts = []
    for m, gm in zip(powers, matrix_powers(g, [-p for p in powers])):
        parts.append(FocalLines(lines.u @ gm.T, lines.d, lines.source, lines.power + m, lines.source_s))
    return FocalLines.concatenate(parts)


def direction_groups(lines, tol=DIRECTION_GROUP_TOL):
    """Label lines whose directions agree within ``tol`` radians (planar case).

    Greedy over sorted angles: a group spans at most ``tol``.  Returns
    ``(labels, representative unit vectors)``.
    """
    ang = line_angles(lines)
    order = np.argsort(ang, kind="stable")
    sorted_ang = ang[order]
    labels_sorted = np.empty(len(ang), dtype=int)
    starts = []
    g = -1
    anchor = -np.inf
    for j, a in enumerate(sorted_ang):
        if a - anchor > tol:
            g += 1
            anchor = a
            starts.append(j)
        labels_sorted[j] = g
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    reps = np.zeros((g + 1, 2))
    np.add.at(reps, labels, lines.u)
    reps /= np.linalg.norm(reps, axis=1, keepdims=True)
    return labels, reps


def envelope_lines(lines, tol=DIRECTION_GROUP_TOL):
    """Keep only the nearest line of every direction group.

    Only the nearest line in a direction can bound the region around the
    origin, so this reduction leaves the central region unchanged.
    """
    if len(lines) == 0:
        return lines
    labels, _ = direction_groups(lines, tol)
    order = np.lexsort((lines.d, labels))
    first = np.ones(len(order), dtype=bool)
    first[1:] = labels[order][1:] != labels[order][:-1]
    return lines.take(np.sort(order[first]))


def thin_lines(lines, band, tol=DIRECTION_GROUP_TOL):
    """Drop lines whose thickened band is already covered by their neighbours.

    Within a direction group the union of ``[d - band, d + band]`` is kept
    intact: a line is dropped only when the kept neighbours on both sides
    are within ``2 * band`` of each other.
    """
    if len(lines) == 0:
        return lines
    labels, _ = direction_groups(lines, tol)
    keep = []
    for lab in np.unique(labels):
        members = np.nonzero(labels == lab)[0]
        members = members[np.argsort(lines.d[members], kind="stable")]
        dd = lines.d[members]
        kept = [0]
        j = 0
        while j < len(dd) - 1:
            # furthest successor still within 2*band of the last kept line
            nxt = int(np.searchsorted(dd, dd[kept[-1]] + 2.0 * band, side="right")) - 1
            nxt = max(nxt, j + 1)
            kept.append(nxt)
            j = nxt
        keep.extend(members[sorted(set(kept))])
    return lines.take(np.sort(np.array(keep, dtype=int)))
