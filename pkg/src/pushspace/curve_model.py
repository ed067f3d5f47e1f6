"""Immersed curves: the built-in families, arc-length resampling, curvature.

Every curve ends up as a :class:`SampledCurve` on a uniform arc-length grid.
The built-in families are described by a small parametric map (position and
exact first derivative); the map is integrated for arc length and resampled
with a few Newton steps, so tangents are exact up to round-off and only the
curvature vector is obtained by finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import expit

from .errors import BadSpec, NoFocalData, NonImmersion, ShootingFailed

KAPPA_MIN = 1e-9
DEFAULT_SAMPLES = 4096
MIN_SAMPLES = 16
DEFAULT_SPIKE_SCALE = 0.25

FAMILIES = ("tricorner", "sheared", "cover", "spike", "circle", "helix", "imported")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# smooth steps


def flat_step(t):
    """Smooth monotone step from 0 to 1 whose derivatives all vanish at 0 and 1.

    ``b(t) / (b(t) + b(1 - t))`` with ``b(t) = exp(-1/t)``, written as a
    logistic function of ``1/t - 1/(1-t)`` so that it never overflows.
    Arguments outside ``[0, 1]`` are clamped.
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = 1.0 / t - 1.0 / (1.0 - t)
    out = expit(-q)
    return float(out) if out.ndim == 0 else out


def flat_step_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.where(inside, t, 0.5)
    f = flat_step(tc)
    out = np.where(inside, f * (1.0 - f) * (1.0 / tc**2 + 1.0 / (1.0 - tc) ** 2), 0.0)
    return float(out) if out.ndim == 0 else out


def flat_bump(t):
    """Window equal to 1 at t = 1/2 and flat to all orders at 0 and 1."""
    f = flat_step(t)
    return 4.0 * f * (1.0 - f)


def flat_bump_derivative(t):
    f = flat_step(t)
    return 4.0 * flat_step_derivative(t) * (1.0 - 2.0 * f)


# ---------------------------------------------------------------------------
# planar pieces


def _turning_profile(sigma, m):
    # two flat-ended stages joined at sigma = 1/2; m is the share of the turn
    # spent in the first stage
    return m * flat_step(2.0 * sigma) + (1.0 - m) * flat_step(2.0 * sigma - 1.0)


def _turning_profile_derivative(sigma, m):
    return 2.0 * m * flat_step_derivative(2.0 * sigma) + 2.0 * (1.0 - m) * flat_step_derivative(
        2.0 * sigma - 1.0
    )


_PIECE_TABLE = 2048


def _mean_tangent(psi0, turn, m):
    edges = np.linspace(0.0, 1.0, _PIECE_TABLE + 1)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X
    psi = psi0 + turn * _turning_profile(nodes, m)
    wts = 0.5 * (b - a) * _GL_W
    return np.array([(np.cos(psi) * wts).sum(), (np.sin(psi) * wts).sum()])


def _wrap(angle):
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True, eq=False)
class PlanarPiece:
    """A planar arc with flat (infinitely tangent) contact at both ends.

    The tangent angle runs from ``psi0`` to ``psi0 + turn`` monotonically
    along normalized arc length ``sigma``; ``shape_params = (m, length)``
    are the share of the turn taken before the midpoint and the arc length.
    """

    plane_origin: np.ndarray
    plane_basis: np.ndarray
    start: np.ndarray
    end: np.ndarray
    start_dir: np.ndarray
    end_dir: np.ndarray
    shape_params: tuple
    psi0: float
    turn: float
    start2: np.ndarray = field(repr=False)
    _table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m, length = self.shape_params
        edges = np.linspace(0.0, 1.0, _PIECE_TABLE + 1)
        a, b = edges[:-1, None], edges[1:, None]
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X
        psi = self.psi0 + self.turn * _turning_profile(nodes, m)
        wts = 0.5 * (b - a) * _GL_W
        inc = np.stack([(np.cos(psi) * wts).sum(axis=1), (np.sin(psi) * wts).sum(axis=1)], axis=1)
        table = np.vstack([np.zeros((1, 2)), np.cumsum(inc, axis=0)]) * length + self.start2
        object.__setattr__(self, "_table", table)

    @property
    def length(self):
        return self.shape_params[1]

    def angle(self, sigma):
        return self.psi0 + self.turn * _turning_profile(np.asarray(sigma, dtype=float), self.shape_params[0])

    def signed_curvature(self, sigma):
        m, length = self.shape_params
        return self.turn * _turning_profile_derivative(np.asarray(sigma, dtype=float), m) / length

    def local_point(self, sigma):
        sigma = np.clip(np.asarray(sigma, dtype=float), 0.0, 1.0)
        k = np.clip(np.floor(sigma * _PIECE_TABLE).astype(int), 0, _PIECE_TABLE - 1)
        a = k / _PIECE_TABLE
        half = 0.5 * (sigma - a)
        nodes = (a + half)[..., None] + half[..., None] * _GL_X
        psi = self.angle(nodes)
        wts = half[..., None] * _GL_W
        inc = np.stack([(np.cos(psi) * wts).sum(axis=-1), (np.sin(psi) * wts).sum(axis=-1)], axis=-1)
        return self._table[k] + self.length * inc

    def local_tangent(self, sigma):
        psi = self.angle(sigma)
        return np.stack([np.cos(psi), np.sin(psi)], axis=-1)

    def point(self, sigma):
        return self.plane_origin + self.local_point(sigma) @ self.plane_basis

    def tangent(self, sigma):
        return self.local_tangent(sigma) @ self.plane_basis

    def normal(self, sigma):
        """In-plane unit normal, the tangent turned by +pi/2 in plane coordinates."""
        psi = self.angle(sigma)
        return np.stack([-np.sin(psi), np.cos(psi)], axis=-1) @ self.plane_basis

    def on_plane(self, origin, basis):
        """Same planar shape, carried by another plane."""
        basis = np.asarray(basis, dtype=float)
        origin = np.asarray(origin, dtype=float)
        to3 = lambda v2: v2 @ basis  # noqa: E731
        return replace(
            self,
            plane_origin=origin,
            plane_basis=basis,
            start=origin + to3(self.start2),
            end=origin + to3(self._table[-1]),
            start_dir=to3(np.array([math.cos(self.psi0), math.sin(self.psi0)])),
            end_dir=to3(np.array([math.cos(self.psi0 + self.turn), math.sin(self.psi0 + self.turn)])),
        )


def solve_planar_piece(start, end, start_dir, end_dir, plane=None, origin=None):
    """Shoot a flat-ended planar piece between two pointed tangent lines.

    ``plane`` is a 2 x D array with orthonormal rows; when omitted the inputs
    must be 2-vectors.  The turning direction is searched over the windings
    ``delta + 2 pi j`` (smallest first) and the first shape that reaches the
    end point is returned.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    sd = np.asarray(start_dir, dtype=float)
    ed = np.asarray(end_dir, dtype=float)
    if plane is None:
        if start.shape != (2,):
            raise BadSpec("a plane basis is required for points outside R^2")
        plane = np.eye(2)
    plane = np.asarray(plane, dtype=float)
    if plane.shape[0] != 2 or not np.allclose(plane @ plane.T, np.eye(2), atol=1e-12):
        raise BadSpec("plane basis must be two orthonormal rows")
    origin = np.zeros(plane.shape[1]) if origin is None else np.asarray(origin, dtype=float)

    def to_plane(v, name, affine):
        v = v - origin if affine else v
        c = plane @ v
        if np.linalg.norm(v - c @ plane) > 1e-9:
            raise BadSpec(f"{name} does not lie in the plane")
        return c

    p0, p1 = to_plane(start, "start", True), to_plane(end, "end", True)
    d0, d1 = to_plane(sd, "start_dir", False), to_plane(ed, "end_dir", False)
    if np.linalg.norm(p1 - p0) < 1e-12:
        raise BadSpec("start and end coincide")
    if np.linalg.norm(d0) < 1e-12 or np.linalg.norm(d1) < 1e-12:
        raise BadSpec("zero direction")
    psi0 = math.atan2(d0[1], d0[0])
    delta = float(_wrap(math.atan2(d1[1], d1[0]) - psi0))
    chord = p1 - p0
    target = math.atan2(chord[1], chord[0])
    turns = sorted((delta + 2.0 * np.pi * j for j in (0, -1, 1, -2, 2)), key=lambda t: (abs(t), t))

    last_residual = float("inf")
    for turn in turns:

        def mismatch(m):
            mt = _mean_tangent(psi0, turn, m)
            return float(_wrap(math.atan2(mt[1], mt[0]) - target))

        grid = np.linspace(0.02, 0.98, 49)
        vals = [mismatch(m) for m in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0.0 or fa * fb < 0.0 and abs(fa) + abs(fb) < np.pi:
                try:
                    m = a if fa == 0.0 else brentq(mismatch, a, b, xtol=1e-15, maxiter=200)
                except RuntimeError as exc:
                    raise ShootingFailed(f"root finder did not converge: {exc}") from exc
                mt = _mean_tangent(psi0, turn, m)
                length = float(np.linalg.norm(chord) / np.linalg.norm(mt))
                piece = PlanarPiece(
                    plane_origin=origin,
                    plane_basis=plane,
                    start=start,
                    end=end,
                    start_dir=sd / np.linalg.norm(sd),
                    end_dir=ed / np.linalg.norm(ed),
                    shape_params=(float(m), length),
                    psi0=psi0,
                    turn=float(turn),
                    start2=p0,
                )
                residual = float(np.linalg.norm(piece.local_point(1.0) - p1))
                if residual < 1e-9:
                    return piece
                last_residual = min(last_residual, residual)
    raise ShootingFailed("no monotone flat-ended piece reaches the end point", last_residual)


@lru_cache(maxsize=1)
def tricorner_profile():
    """The planar shape shared by the three pieces of the tri-corner curve."""
    return solve_planar_piece([1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0])


_E = np.eye(3)
# piece j maps plane coordinates (a, b) to xy, yz and zx respectively
TRICORNER_PLANES = (
    np.array([_E[0], _E[1]]),
    np.array([_E[1], _E[2]]),
    np.array([_E[2], _E[0]]),
)


# ---------------------------------------------------------------------------
# parametric maps u -> R^D with exact derivative


class _TriCornerMap:
    closed = True
    domain = (0.0, 3.0)

    def __init__(self):
        prof = tricorner_profile()
        self.pieces = [prof.on_plane(np.zeros(3), B) for B in TRICORNER_PLANES]

    def _split(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.floor(u).astype(int), 0, 2)
        return idx, u - idx

    def _gather(self, u, method):
        idx, sigma = self._split(u)
        out = np.empty(np.shape(u) + (3,))
        for j, piece in enumerate(self.pieces):
            sel = idx == j
            if np.any(sel):
                out[sel] = getattr(piece, method)(sigma[sel])
        return out

    def point(self, u):
        return self._gather(u, "point")

    def deriv(self, u):
        return self._gather(u, "tangent") * self.pieces[0].length


class _LinearImageMap:
    def __init__(self, base, matrix):
        self.base = base
        self.matrix = np.asarray(matrix, dtype=float)
        self.closed = base.closed
        self.domain = base.domain

    def point(self, u):
        return self.base.point(u) @ self.matrix.T

    def deriv(self, u):
        return self.base.deriv(u) @ self.matrix.T


class _SpikeMap:
    """Tri-corner plus a narrow in-plane bump at the middle of every piece."""

    closed = True
    domain = (0.0, 3.0)

    def __init__(self, n, spike_scale):
        self.base = _TriCornerMap()
        self.n = n
        self.height = n * spike_scale
        self.offsets = np.array([p.normal(0.5) for p in self.base.pieces])

    def _window(self, u):
        idx, sigma = self.base._split(u)
        tau = (sigma - 0.5) * self.n + 0.5
        return idx, tau

    def point(self, u):
        idx, tau = self._window(u)
        return self.base.point(u) + (self.height * flat_bump(tau))[..., None] * self.offsets[idx]

    def deriv(self, u):
        idx, tau = self._window(u)
        w1 = self.height * self.n * flat_bump_derivative(tau)
        return self.base.deriv(u) + w1[..., None] * self.offsets[idx]


class _CircleMap:
    closed = True

    def __init__(self, radius, dim):
        self.radius = radius
        self.dim = dim
        self.domain = (0.0, 2.0 * np.pi)

    def point(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape + (self.dim,))
        out[..., 0] = self.radius * np.cos(u)
        out[..., 1] = self.radius * np.sin(u)
        return out

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape + (self.dim,))
        out[..., 0] = -self.radius * np.sin(u)
        out[..., 1] = self.radius * np.cos(u)
        return out


class _HelixMap:
    closed = False

    def __init__(self, radius, pitch, turns, dim):
        self.radius = radius
        self.rise = pitch / (2.0 * np.pi)
        self.dim = dim
        self.domain = (0.0, 2.0 * np.pi * turns)

    def point(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape + (self.dim,))
        out[..., 0] = self.radius * np.cos(u)
        out[..., 1] = self.radius * np.sin(u)
        out[..., 2] = self.rise * u
        return out

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape + (self.dim,))
        out[..., 0] = -self.radius * np.sin(u)
        out[..., 1] = self.radius * np.cos(u)
        out[..., 2] = self.rise
        return out


class _SplineMap:
    """Interpolating cubic spline through imported points, chord-length knots."""

    def __init__(self, points, closed):
        pts = np.asarray(points, dtype=float)
        if closed and np.linalg.norm(pts[-1] - pts[0]) < 1e-12:
            pts = pts[:-1]
        if closed:
            pts = np.vstack([pts, pts[:1]])
        knots = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
        self.spline = CubicSpline(knots, pts, bc_type="periodic" if closed else "not-a-knot")
        self.dspline = self.spline.derivative()
        self.closed = closed
        self.domain = (0.0, float(knots[-1]))

    def point(self, u):
        return self.spline(u)

    def deriv(self, u):
        return self.dspline(u)


# ---------------------------------------------------------------------------
# specs and sampled curves


@dataclass(frozen=True)
class CurveSpec:
    """Description of one curve.  Use the classmethod constructors."""

    family: str
    alpha: float | None = None
    n: int | None = None
    base: CurveSpec | None = None
    spike_scale: float | None = None
    radius: float | None = None
    pitch: float | None = None
    turns: float | None = None
    points: tuple | None = None
    closed: bool = True
    ambient_dim: int = 3
    samples: int = DEFAULT_SAMPLES

    @classmethod
    def tricorner(cls, samples=DEFAULT_SAMPLES):
        return cls("tricorner", samples=samples)

    @classmethod
    def sheared(cls, alpha, samples=DEFAULT_SAMPLES):
        return cls("sheared", alpha=float(alpha), samples=samples)

    @classmethod
    def cover(cls, base, n):
        return cls("cover", base=base, n=int(n), closed=base.closed, ambient_dim=base.ambient_dim, samples=base.samples)

    @classmethod
    def spike(cls, n, spike_scale=DEFAULT_SPIKE_SCALE, samples=DEFAULT_SAMPLES):
        return cls("spike", n=int(n), spike_scale=float(spike_scale), samples=samples)

    @classmethod
    def circle(cls, radius=1.0, samples=DEFAULT_SAMPLES, ambient_dim=3):
        return cls("circle", radius=float(radius), samples=samples, ambient_dim=ambient_dim)

    @classmethod
    def helix(cls, radius=1.0, pitch=2.0 * np.pi, turns=1.0, samples=DEFAULT_SAMPLES, ambient_dim=3):
        return cls(
            "helix",
            radius=float(radius),
            pitch=float(pitch),
            turns=float(turns),
            closed=False,
            samples=samples,
            ambient_dim=ambient_dim,
        )

    @classmethod
    def imported(cls, points, closed=True, samples=DEFAULT_SAMPLES):
        pts = tuple(tuple(float(c) for c in p) for p in points)
        dim = len(pts[0]) if pts else 3
        return cls("imported", points=pts, closed=bool(closed), ambient_dim=dim, samples=samples)

    def with_samples(self, samples):
        if self.family == "cover":
            return replace(self, base=self.base.with_samples(samples), samples=samples)
        return replace(self, samples=int(samples))

    def validate(self):
        if self.family not in FAMILIES:
            raise BadSpec(f"unknown curve family {self.family!r}")
        if self.samples < MIN_SAMPLES:
            raise BadSpec(f"samples must be >= {MIN_SAMPLES}")
        fam = self.family
        if fam in ("tricorner", "sheared", "spike") and self.ambient_dim != 3:
            raise BadSpec(f"{fam} lives in R^3")
        if fam == "sheared" and not (self.alpha is not None and 0.0 < self.alpha < np.pi / 2):
            raise BadSpec("sheared alpha must lie in (0, pi/2)")
        if fam == "cover":
            if self.base is None or self.n is None or self.n < 1:
                raise BadSpec("cover needs a base curve and n >= 1")
            if not self.base.closed:
                raise BadSpec("only closed curves can be covered n times")
            self.base.validate()
        if fam == "spike":
            if self.n is None or self.n < 1:
                raise BadSpec("spike needs n >= 1")
            if self.spike_scale is None or self.spike_scale <= 0:
                raise BadSpec("spike_scale must be positive")
        if fam in ("circle", "helix"):
            if self.radius is None or self.radius <= 0:
                raise BadSpec("radius must be positive")
            if self.ambient_dim < 3:
                raise BadSpec("ambient_dim must be >= 3")
        if fam == "helix" and (self.turns is None or self.turns <= 0 or self.pitch is None):
            raise BadSpec("helix needs pitch and positive turns")
        if fam == "imported":
            pts = np.asarray(self.points if self.points is not None else (), dtype=float)
            if pts.ndim != 2 or len(pts) < 4:
                raise BadSpec("imported curves need at least 4 points")
            if pts.shape[1] < 2:
                raise BadSpec("imported points must be at least 2-dimensional")
            if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) < 1e-12):
                raise BadSpec("consecutive imported points must be distinct")

    def to_dict(self):
        out = {"family": self.family}
        for key in ("alpha", "n", "spike_scale", "radius", "pitch", "turns"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.family == "cover":
            out["base"] = self.base.to_dict()
        if self.family == "imported":
            out["points"] = [list(p) for p in self.points]
            out["closed"] = self.closed
        if self.ambient_dim != 3 and self.family != "imported":
            out["ambient_dim"] = self.ambient_dim
        out["samples"] = self.samples
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        try:
            fam = str(data.pop("family")).lower()
        except KeyError as exc:
            raise BadSpec("curve config needs a 'family' key") from exc
        samples = int(data.get("samples", DEFAULT_SAMPLES))
        dim = int(data.get("ambient_dim", 3))
        try:
            if fam == "tricorner":
                spec = cls.tricorner(samples)
            elif fam == "sheared":
                spec = cls.sheared(data["alpha"], samples)
            elif fam == "cover":
                base = dict(data["base"])
                if "samples" in data:
                    base["samples"] = samples
                spec = cls.cover(cls.from_dict(base), data["n"])
            elif fam == "spike":
                spec = cls.spike(data["n"], data.get("spike_scale", DEFAULT_SPIKE_SCALE), samples)
            elif fam == "circle":
                spec = cls.circle(data.get("radius", 1.0), samples, dim)
            elif fam == "helix":
                spec = cls.helix(
                    data.get("radius", 1.0), data.get("pitch", 2.0 * np.pi), data.get("turns", 1.0), samples, dim
                )
            elif fam == "imported":
                spec = cls.imported(data["points"], data.get("closed", True), samples)
            else:
                raise BadSpec(f"unknown curve family {fam!r}")
        except KeyError as exc:
            raise BadSpec(f"curve family {fam!r} needs key {exc.args[0]!r}") from exc
        spec.validate()
        return spec


def shear_matrix(alpha):
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, math.tan(alpha)], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """A curve sampled on a uniform arc-length grid.

    For closed curves the last row repeats the first, so ``s[-1]`` is the
    total length and there are ``len(s) - 1`` distinct samples.
    """

    s: np.ndarray
    position: np.ndarray
    tangent: np.ndarray
    kvec: np.ndarray
    closed: bool
    length: float
    spec: CurveSpec | None = None

    def __post_init__(self):
        for name in ("s", "position", "tangent", "kvec"):
            getattr(self, name).flags.writeable = False

    @property
    def n_points(self):
        return len(self.s)

    @property
    def dim(self):
        return self.position.shape[1]

    @property
    def k(self):
        """Rank of the normal bundle."""
        return self.dim - 1

    @property
    def h(self):
        return float(self.s[1] - self.s[0])

    @property
    def curvature(self):
        return np.linalg.norm(self.kvec, axis=1)

    def scaled(self, factor):
        """The curve ``factor * f``; lengths scale by factor, curvature by 1/factor."""
        return SampledCurve(
            s=self.s * factor,
            position=self.position * factor,
            tangent=self.tangent.copy(),
            kvec=self.kvec / factor,
            closed=self.closed,
            length=self.length * factor,
            spec=None,
        )


def _fd_derivative(values, h, closed):
    """Fourth-order finite-difference derivative along axis 0 of a uniform grid."""
    if closed:
        v = values[:-1]
        d = (np.roll(v, 2, 0) - 8.0 * np.roll(v, 1, 0) + 8.0 * np.roll(v, -1, 0) - np.roll(v, -2, 0)) / (12.0 * h)
        return np.vstack([d, d[:1]])
    v = values
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h)
    d[-1] = (25.0 * v[-1] - 48.0 * v[-2] + 36.0 * v[-3] - 16.0 * v[-4] + 3.0 * v[-5]) / (12.0 * h)
    d[-2] = (3.0 * v[-1] + 10.0 * v[-2] - 18.0 * v[-3] + 6.0 * v[-4] - v[-5]) / (12.0 * h)
    return d


def _stencil_indices(curve, i):
    n = curve.n_points
    if curve.closed:
        period = n - 1
        i = i % period
        return [(i + j) % period for j in (-2, -1, 1, 2)], "central"
    if 2 <= i <= n - 3:
        return [i - 2, i - 1, i + 1, i + 2], "central"
    return None, "edge"


def curvature_vector(curve, i):
    """dT/ds at sample ``i`` by fourth-order finite differences, normal part."""
    idx, kind = _stencil_indices(curve, i)
    T = curve.tangent
    if kind == "central":
        a, b, c, d = (T[j] for j in idx)
        raw = (a - 8.0 * b + 8.0 * c - d) / (12.0 * curve.h)
    else:
        raw = _fd_derivative(T, curve.h, False)[i]
    return _normal_part(raw[None, :], T[i][None, :])[0]


def _resample(cmap, samples, closed):
    """Uniform arc-length samples of a parametric map."""
    u0, u1 = cmap.domain
    m = max(2 * samples, 2048)
    edges = np.linspace(u0, u1, m + 1)
    du = edges[1] - edges[0]
    nodes = edges[:-1, None] + 0.5 * du * (_GL_X + 1.0)
    speed = np.linalg.norm(cmap.deriv(nodes), axis=-1)
    if speed.min() < 1e-12:
        raise NonImmersion(f"speed {speed.min():.3e} below 1e-12")
    cum = np.concatenate([[0.0], np.cumsum((speed * _GL_W).sum(axis=1) * 0.5 * du)])
    total = float(cum[-1])

    count = samples + 1 if closed else samples
    step = total / (samples if closed else samples - 1)
    targets = np.arange(count) * step
    k = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, m - 1)
    lo = edges[k]
    u = lo + (targets - cum[k]) / (cum[k + 1] - cum[k]) * du
    for _ in range(4):
        half = 0.5 * (u - lo)
        sub = (lo + half)[:, None] + half[:, None] * _GL_X
        arc = cum[k] + (np.linalg.norm(cmap.deriv(sub), axis=-1) * _GL_W).sum(axis=1) * half
        u = np.clip(u - (arc - targets) / np.linalg.norm(cmap.deriv(u), axis=-1), lo, lo + du)
    pos = cmap.point(u)
    d = cmap.deriv(u)
    tan = d / np.linalg.norm(d, axis=-1, keepdims=True)
    if closed:
        pos[-1] = pos[0]
        tan[-1] = tan[0]
    return targets, pos, tan, total


def _map_for(spec):
    fam = spec.family
    if fam == "tricorner":
        return _TriCornerMap()
    if fam == "sheared":
        return _LinearImageMap(_TriCornerMap(), shear_matrix(spec.alpha))
    if fam == "spike":
        return _SpikeMap(spec.n, spec.spike_scale)
    if fam == "circle":
        return _CircleMap(spec.radius, spec.ambient_dim)
    if fam == "helix":
        return _HelixMap(spec.radius, spec.pitch, spec.turns, spec.ambient_dim)
    if fam == "imported":
        return _SplineMap(spec.points, spec.closed)
    raise BadSpec(f"no parametric map for {fam!r}")


def _normal_part(kvec, tan):
    # dT/ds is normal to T for a unit-speed curve; what the stencil leaves
    # along T is truncation and round-off error
    return kvec - np.einsum("ij,ij->i", kvec, tan)[:, None] * tan


def _from_samples(s, pos, tan, closed, total, spec):
    h = s[1] - s[0]
    kvec = _normal_part(_fd_derivative(tan, h, closed), tan)
    return SampledCurve(s=s, position=pos, tangent=tan, kvec=kvec, closed=closed, length=total, spec=spec)


@lru_cache(maxsize=48)
def build_curve(spec):
    """Sample ``spec`` uniformly in arc length.  Results are cached per spec."""
    spec.validate()
    if spec.family == "cover":
        base = build_curve(spec.base)
        reps = spec.n
        nb = base.n_points - 1
        idx = np.concatenate([np.tile(np.arange(nb), reps), [0]])
        s = np.arange(reps * nb + 1) * base.h
        return SampledCurve(
            s=s,
            position=base.position[idx],
            tangent=base.tangent[idx],
            kvec=base.kvec[idx],
            closed=True,
            length=base.length * reps,
            spec=spec,
        )
    cmap = _map_for(spec)
    s, pos, tan, total = _resample(cmap, spec.samples, cmap.closed)
    return _from_samples(s, pos, tan, cmap.closed, total, spec)


def min_curvature_radius(curve):
    """Smallest radius of curvature over samples with curvature above KAPPA_MIN."""
    kappa = curve.curvature
    kappa = kappa[kappa > KAPPA_MIN]
    if kappa.size == 0:
        raise NoFocalData("curvature vanishes everywhere")
    return float(1.0 / kappa.max())
