"""Partial tubes: a fixed fiber carried along the curve by the parallel frame.

A fiber is given in coordinates of the base normal frame.  After ``j``
traversals a fiber point ``x`` sits at frame coordinates ``g^j x``, so a
fiber yields a closed surface once some power of the holonomy maps it onto
itself.  The sweep refuses fibers that touch a critical normal, because the
endpoint map stops being an immersion there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon

from .errors import BadSpec, InvalidFiber, NotClosedError
from .focal import DEFAULT_N_TRUNCATE, focal_lines, matrix_powers, orbit_powers
from .normal_bundle import DEFAULT_CLOSURE_TOL, DEFAULT_N_MAX, NotClosed, holonomy

DEFAULT_SAMPLES_AROUND = 64
FIBER_KINDS = ("point", "circle", "polygon")


@dataclass(frozen=True)
class FiberShape:
    kind: str
    point: tuple = (0.0, 0.0)
    radius: float = 0.0
    vertices: tuple = ()
    samples_around: int = DEFAULT_SAMPLES_AROUND

    def __post_init__(self):
        if self.kind not in FIBER_KINDS:
            raise BadSpec(f"unknown fiber kind {self.kind!r}")
        if self.samples_around < 3:
            raise BadSpec("samples_around must be at least 3")
        if self.kind == "circle" and not self.radius > 0:
            raise BadSpec("circle fiber needs a positive radius")
        if self.kind == "polygon":
            if len(self.vertices) < 3:
                raise BadSpec("polygon fiber needs at least three vertices")
            if not Polygon(self.vertices).is_valid:
                raise BadSpec("polygon fiber must be simple")

    @classmethod
    def at_point(cls, x):
        return cls("point", point=tuple(float(v) for v in x))

    @classmethod
    def circle(cls, radius, center=(0.0, 0.0), samples_around=DEFAULT_SAMPLES_AROUND):
        return cls("circle", point=tuple(float(v) for v in center), radius=float(radius), samples_around=samples_around)

    @classmethod
    def polygon(cls, vertices, samples_around=DEFAULT_SAMPLES_AROUND):
        verts = tuple(tuple(float(c) for c in v) for v in vertices)
        return cls("polygon", vertices=verts, samples_around=samples_around)

    @classmethod
    def square(cls, half_side, angle=0.0, samples_around=DEFAULT_SAMPLES_AROUND):
        """Origin-centred square; vertex 0 lies on the direction ``angle + pi/4``."""
        r = half_side * math.sqrt(2.0)
        verts = [(r * math.cos(angle + math.pi / 4 + j * math.pi / 2), r * math.sin(angle + math.pi / 4 + j * math.pi / 2)) for j in range(4)]
        return cls.polygon(verts, samples_around)

    @property
    def center(self):
        return np.array(self.point, dtype=float)

    @property
    def vertex_array(self):
        return np.array(self.vertices, dtype=float).reshape(-1, 2)

    def boundary(self):
        """Boundary samples in frame coordinates, shape ``(M, 2)``.

        Polygon samples are spread over the edges in proportion to their
        length and always include every vertex, starting at vertex 0.
        """
        if self.kind == "point":
            return self.center[None, :]
        if self.kind == "circle":
            phi = 2.0 * np.pi * np.arange(self.samples_around) / self.samples_around
            return self.center + self.radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        v = self.vertex_array
        edges = np.roll(v, -1, axis=0) - v
        lengths = np.linalg.norm(edges, axis=1)
        counts = np.maximum(1, np.rint(self.samples_around * lengths / lengths.sum()).astype(int))
        pts = [v[j] + (np.arange(c) / c)[:, None] * edges[j] for j, c in enumerate(counts)]
        return np.concatenate(pts)

    def to_dict(self):
        out = {"kind": self.kind, "samples_around": self.samples_around}
        if self.kind in ("point", "circle"):
            out["center" if self.kind == "circle" else "point"] = list(self.point)
        if self.kind == "circle":
            out["radius"] = self.radius
        if self.kind == "polygon":
            out["vertices"] = [list(v) for v in self.vertices]
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            kind = data["kind"]
            n = int(data.get("samples_around", DEFAULT_SAMPLES_AROUND))
            if kind == "point":
                return cls("point", point=tuple(map(float, data.get("point", (0.0, 0.0)))), samples_around=n)
            if kind == "circle":
                return cls.circle(data["radius"], data.get("center", (0.0, 0.0)), n)
            if kind == "polygon":
                return cls.polygon(data["vertices"], n)
            if kind == "square":
                return cls.square(data["half_side"], data.get("angle", 0.0), n)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, BadSpec):
                raise
            raise BadSpec(f"bad fiber description: {exc}") from exc
        raise BadSpec(f"unknown fiber kind {kind!r}")


def _signed_offsets(pts, lines):
    # d - <x, u> for every (point, line) pair: positive on the origin side
    return lines.d[None, :] - pts @ lines.u.T


def fiber_margin(fiber, lines):
    """Distance from the fiber to the nearest line; negative when it crosses one.

    For a crossing the value is minus the smaller of the two penetration
    depths.  Circles are handled in closed form; polygons are exact because
    a linear function on a polygon is extremal at the vertices.
    """
    if len(lines) == 0:
        return math.inf
    if fiber.kind == "circle":
        dist = np.abs(_signed_offsets(fiber.center[None, :], lines)[0])
        return float((dist - fiber.radius).min())
    pts = fiber.center[None, :] if fiber.kind == "point" else fiber.vertex_array
    off = _signed_offsets(pts, lines)
    hi, lo = off.max(axis=0), off.min(axis=0)
    per_line = np.where(lo > 0, lo, np.where(hi < 0, -hi, -np.minimum(hi, -lo)))
    return float(per_line.min())


def _same_set(a, b, tol):
    """Max distance of a nearest matching between point sets (inf if sizes differ)."""
    if len(a) != len(b):
        return math.inf
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def _fiber_mismatch(fiber, gm):
    if fiber.kind in ("point", "circle"):
        c = fiber.center
        return float(np.linalg.norm(gm @ c - c))
    v = fiber.vertex_array
    return _same_set(v @ gm.T, v, 0.0)


def holonomy_closure(fiber, g, tol=DEFAULT_CLOSURE_TOL, n_max=DEFAULT_N_MAX):
    """Smallest number of traversals after which the fiber returns onto itself."""
    g = np.asarray(g, dtype=float)
    power = np.eye(len(g))
    for n in range(1, n_max + 1):
        power = power @ g
        if n % 128 == 0:
            u, _, vt = np.linalg.svd(power)
            power = u @ vt
        if _fiber_mismatch(fiber, power) < tol:
            return n
    return NotClosed(n_max)


@dataclass(eq=False)
class TubeMesh:
    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    loops_used: int
    closure_error: float
    min_focal_margin: float
    ring_size: int
    closed: bool
    fiber_points: np.ndarray = field(repr=False, default=None)

    @property
    def valid(self):
        return self.min_focal_margin > 0

    def report(self):
        return {
            "loops_used": self.loops_used,
            "closure_error": self.closure_error,
            "min_focal_margin": self.min_focal_margin,
            "closed": self.closed,
            "vertex_count": int(len(self.vertices)),
            "face_count": int(len(self.faces)),
        }


def orbit_fiber_margin(fiber, lines, g, order, n_truncate=DEFAULT_N_TRUNCATE):
    """``fiber_margin`` against the holonomy orbit of ``lines``, one power at a time."""
    powers = orbit_powers(order, n_truncate)
    margin = math.inf
    for gm in matrix_powers(g, [-p for p in powers]):
        margin = min(margin, fiber_margin(fiber, lines.rotated(gm)))
    return margin


def _best_shift(final, first):
    """Cyclic shift ``s`` minimising ``max_j |final[j] - first[(j + s) % M]|``."""
    m = len(first)
    errs = [float(np.linalg.norm(final - np.roll(first, -s, axis=0), axis=1).max()) for s in range(m)]
    s = int(np.argmin(errs))
    return s, errs[s]


def sweep_tube(
    curve,
    frames,
    fiber,
    loops=None,
    lines=None,
    closure_tol=DEFAULT_CLOSURE_TOL,
    n_max=DEFAULT_N_MAX,
    n_truncate=DEFAULT_N_TRUNCATE,
    force=False,
    step=1,
    margin_threshold=0.0,
):
    """Sweep ``fiber`` along ``curve`` for ``loops`` traversals.

    ``lines`` are the orbit-expanded focal lines used for the margin check
    (computed from the curve when omitted).  ``step`` keeps every step-th
    sample as a ring.  With ``force`` a tube whose ends do not meet is
    returned open instead of raising.
    """
    if step < 1:
        raise BadSpec("step must be positive")
    hol = holonomy(curve, frames, closure_tol, n_max) if curve.closed else None
    if lines is not None:
        margin = fiber_margin(fiber, lines)
    elif hol is None:
        margin = fiber_margin(fiber, focal_lines(curve, frames))
    else:
        margin = orbit_fiber_margin(fiber, focal_lines(curve, frames), hol.g, hol.orbit_order, n_truncate)
    if margin <= margin_threshold:
        raise InvalidFiber(f"fiber meets the critical normals (margin {margin:.3e})")

    g = hol.g if hol is not None else np.eye(frames.frames.shape[1])
    if loops is None:
        loops = holonomy_closure(fiber, g, closure_tol, n_max) if curve.closed else 1
        if isinstance(loops, NotClosed):
            raise NotClosedError(f"fiber does not return onto itself within {loops.n_max} loops")
    loops = int(loops)
    if loops < 1:
        raise BadSpec("loops must be positive")

    x = fiber.boundary()
    m = len(x)
    last = curve.n_points - 1 if curve.closed else curve.n_points
    idx = np.arange(0, last, step)
    if not curve.closed and idx[-1] != curve.n_points - 1:
        idx = np.append(idx, curve.n_points - 1)
    powers = matrix_powers(g, list(range(loops + 1)))

    # rotation about the circle centre spread over the sweep so the last ring
    # lands on a sample of the first (the circle itself is already invariant)
    twist = 0.0
    gl = powers[loops]
    closure_error = 0.0
    shift = 0
    if curve.closed:
        closure_error = _fiber_mismatch(fiber, gl) if fiber.kind != "polygon" else None
        if fiber.kind == "circle" and gl.shape == (2, 2) and np.linalg.det(gl) > 0:
            total = math.atan2(gl[1, 0], gl[0, 0])
            shift = int(round(total * m / (2 * math.pi))) % m
            twist = (2 * math.pi * shift / m) - total
            twist = (twist + math.pi) % (2 * math.pi) - math.pi
        else:
            shift, err = _best_shift(x @ gl.T, x)
            if fiber.kind == "polygon":
                closure_error = err
            shift = shift if m > 1 else 0

    n_rings = loops * len(idx)
    c = fiber.center
    if twist == 0.0:
        base = np.broadcast_to(x, (len(idx), m, 2))
    coords = np.empty((loops, len(idx), m, 2))
    for j in range(loops):
        if twist != 0.0:
            theta = twist * (j * last + idx) / (loops * last)
            cs, sn = np.cos(theta)[:, None], np.sin(theta)[:, None]
            rel = x - c
            base = c + np.stack([cs * rel[:, 0] - sn * rel[:, 1], sn * rel[:, 0] + cs * rel[:, 1]], axis=2)
        coords[j] = base @ powers[j].T
    coords = coords.reshape(n_rings, m, 2)
    frame_idx = np.tile(idx, loops)
    verts = curve.position[frame_idx][:, None, :] + np.einsum("rmk,rkd->rmd", coords, frames.frames[frame_idx])

    closed = curve.closed and closure_error < closure_tol * curve.length
    if curve.closed and not closed and not force:
        raise NotClosedError(f"tube ends differ by {closure_error:.3e} after {loops} loops")
    if not curve.closed:
        closure_error = 0.0

    ring = np.arange(n_rings)
    nxt = ring + 1
    if closed:
        nxt[-1] = 0
    else:
        ring, nxt = ring[:-1], nxt[:-1]
    k = np.arange(m)
    # the final ring is glued onto the first with the matching cyclic shift
    k_next = np.where(nxt[:, None] == 0, (k[None, :] + shift) % m, k[None, :]) if closed else np.broadcast_to(k, (len(ring), m))
    a = ring[:, None] * m + k[None, :]
    b = nxt[:, None] * m + k_next
    if m == 1:
        faces = np.zeros((0, 4), dtype=np.int64)
        edges = np.stack([a.ravel(), b.ravel()], axis=1)
    else:
        a1 = ring[:, None] * m + (k[None, :] + 1) % m
        k_next1 = np.where(nxt[:, None] == 0, (k[None, :] + 1 + shift) % m, (k[None, :] + 1) % m) if closed else np.broadcast_to((k + 1) % m, (len(ring), m))
        b1 = nxt[:, None] * m + k_next1
        if fiber.kind == "polygon" or (fiber.kind == "circle" and m >= 3):
            # outward facing: along-curve x around-fiber points inward when the
            # frame (T, e1, e2) is right handed and the fiber runs counterclockwise
            handed = np.linalg.det(np.vstack([curve.tangent[0], frames.frames[0]])) if curve.dim == 3 else 1.0
            ccw = fiber.kind == "circle" or Polygon(fiber.vertices).exterior.is_ccw
            flip = (handed > 0) == ccw
        else:
            flip = False
        quad = [a, a1, b1, b] if flip else [a, b, b1, a1]
        faces = np.stack([q.ravel() for q in quad], axis=1).astype(np.int64)
        edges = np.zeros((0, 2), dtype=np.int64)
    return TubeMesh(
        vertices=verts.reshape(-1, curve.dim),
        faces=faces,
        edges=edges.astype(np.int64),
        loops_used=loops,
        closure_error=float(closure_error),
        min_focal_margin=float(margin),
        ring_size=m,
        closed=bool(closed),
        fiber_points=coords.reshape(-1, 2),
    )
