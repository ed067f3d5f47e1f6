"""Parallel transport in the normal bundle and the holonomy it produces.

A normal vector field is parallel when its derivative along the curve is
purely tangential, ``V' = -<V, T'> T``.  Frames are propagated with the
double-reflection rotation-minimizing scheme, which is exactly isometric and
fourth-order accurate; an RK4 integration of the same ODE is kept as an
independent cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .curve_model import SampledCurve
from .errors import NonUnitTangent, OpenCurve

REORTHO_EVERY = 64
POWER_REORTHO_EVERY = 128
DEFAULT_CLOSURE_TOL = 1e-6
DEFAULT_N_MAX = 10_000


@dataclass(frozen=True)
class NotClosed:
    """No power up to ``n_max`` returned to the identity."""

    n_max: int

    def __bool__(self):
        return False


@dataclass(frozen=True, eq=False)
class FrameField:
    """Parallel orthonormal normal frame along a sampled curve.

    ``frames[i]`` is a ``k x D`` array whose rows are the frame vectors at
    sample ``i``.  Coordinates with respect to this frame are constant for
    parallel sections.
    """

    curve: SampledCurve
    frames: np.ndarray
    base_index: int = 0

    def __post_init__(self):
        self.frames.flags.writeable = False

    def vector(self, coords, i):
        """Ambient vector with frame coordinates ``coords`` at sample ``i``."""
        return np.asarray(coords, dtype=float) @ self.frames[i]

    def coordinates(self, v, i):
        return self.frames[i] @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class HolonomyResult:
    g: np.ndarray
    angle: float | None
    orbit_order: int | NotClosed
    generator_tolerance: float
    trivial_open: bool = False

    @property
    def closed_orbit(self):
        return not isinstance(self.orbit_order, NotClosed)

    def to_dict(self):
        return {
            "matrix": self.g.tolist(),
            "angle": self.angle,
            "orbit_order": self.orbit_order if self.closed_orbit else None,
        }


def _gram_schmidt(rows, tangent=None):
    out = []
    for v in rows:
        w = np.array(v, dtype=float)
        if tangent is not None:
            w = w - (w @ tangent) * tangent
        for u in out:
            w = w - (w @ u) * u
        out.append(w / np.linalg.norm(w))
    return np.array(out)


def initial_frame(curve, base_index=0):
    """Gram-Schmidt of the coordinate axes against the tangent at the base.

    The axis most parallel to the tangent is skipped; the others keep their
    natural order, so a tangent along x yields a frame starting (y, z).
    """
    t = curve.tangent[base_index]
    skip = int(np.argmax(np.abs(t)))
    axes = [e for j, e in enumerate(np.eye(curve.dim)) if j != skip]
    return _gram_schmidt(axes, tangent=t)


def _check_tangents(curve):
    err = np.abs(np.linalg.norm(curve.tangent, axis=1) - 1.0).max()
    if err > 1e-9:
        raise NonUnitTangent(f"tangent norm deviates from 1 by {err:.3e}")


def _reflect_pairs(x, t, forward=True):
    """Per-step orthogonal maps of the double-reflection scheme.

    Step ``i`` carries a normal vector at sample ``i`` to sample ``i + 1``
    (or ``i + 1`` to ``i`` when ``forward`` is False).
    """
    if forward:
        x0, x1, t0, t1 = x[:-1], x[1:], t[:-1], t[1:]
    else:
        x0, x1, t0, t1 = x[1:], x[:-1], t[1:], t[:-1]
    dim = x.shape[1]
    eye = np.eye(dim)
    v1 = x1 - x0
    c1 = np.einsum("ij,ij->i", v1, v1)
    h1 = eye - 2.0 * v1[:, :, None] * v1[:, None, :] / c1[:, None, None]
    tl = t0 - 2.0 * (np.einsum("ij,ij->i", v1, t0) / c1)[:, None] * v1
    v2 = t1 - tl
    c2 = np.einsum("ij,ij->i", v2, v2)
    safe = c2 > 1e-300
    scale = np.where(safe, 2.0 / np.where(safe, c2, 1.0), 0.0)
    h2 = eye - scale[:, None, None] * v2[:, :, None] * v2[:, None, :]
    return np.matmul(h2, h1)


def _reorthonormalize(frame, tangent):
    return _gram_schmidt(frame, tangent=tangent)


def transport_vectors(curve, vectors, start, stop):
    """Carry rows of ``vectors`` (normal at sample ``start``) to every sample up to ``stop``.

    Returns an array of shape ``(|stop - start| + 1, m, D)`` ordered from
    ``start`` to ``stop``.
    """
    _check_tangents(curve)
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    forward = stop >= start
    lo, hi = (start, stop) if forward else (stop, start)
    steps = _reflect_pairs(curve.position[lo : hi + 1], curve.tangent[lo : hi + 1], forward)
    if not forward:
        steps = steps[::-1]
    idx = np.arange(start, stop + (1 if forward else -1), 1 if forward else -1)
    out = np.empty((len(idx),) + vectors.shape)
    cur = vectors
    out[0] = cur
    norms = np.linalg.norm(vectors, axis=1)
    # only an orthogonal family can be re-orthonormalized without changing it
    orthogonal = len(vectors) < curve.dim and np.allclose(vectors @ vectors.T, np.diag(norms**2), atol=1e-12)
    for j in range(1, len(idx)):
        cur = cur @ steps[j - 1].T
        if orthogonal and j % REORTHO_EVERY == 0:
            cur = _reorthonormalize(cur, curve.tangent[idx[j]]) * norms[:, None]
        out[j] = cur
    return out


def transport_frame(curve, frame0=None, base_index=0):
    """Parallel frame along the whole curve, anchored at ``base_index``."""
    if frame0 is None:
        frame0 = initial_frame(curve, base_index)
    frame0 = np.asarray(frame0, dtype=float)
    n = curve.n_points
    frames = np.empty((n,) + frame0.shape)
    frames[base_index:] = transport_vectors(curve, frame0, base_index, n - 1)
    if base_index > 0:
        frames[: base_index + 1] = transport_vectors(curve, frame0, base_index, 0)[::-1]
    return FrameField(curve=curve, frames=frames, base_index=base_index)


def transport_frame_ode(curve, frame0=None):
    """RK4 integration of ``V' = -<V, kvec> T`` from sample 0 (cross-check).

    Uses steps of two samples so the middle stage falls on a grid point; the
    frame is re-orthonormalized against the tangent after every step.
    Returns the frames at the even sample indices.
    """
    if frame0 is None:
        frame0 = initial_frame(curve, 0)
    T, K = curve.tangent, curve.kvec
    h2 = 2.0 * curve.h
    cur = np.asarray(frame0, dtype=float)

    def rhs(V, i):
        return -(V @ K[i])[:, None] * T[i][None, :]

    out = [cur]
    for i in range(0, curve.n_points - 2, 2):
        k1 = rhs(cur, i)
        k2 = rhs(cur + 0.5 * h2 * k1, i + 1)
        k3 = rhs(cur + 0.5 * h2 * k2, i + 1)
        k4 = rhs(cur + h2 * k3, i + 2)
        cur = cur + h2 / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        cur = _reorthonormalize(cur, T[i + 2])
        out.append(cur)
    return np.array(out)


def holonomy_matrix(frames):
    """Once-around matrix in the coordinates of the initial frame."""
    e0, e1 = frames.frames[0], frames.frames[-1]
    return e0 @ e1.T


def _rotation_angle(g):
    return math.atan2(g[1, 0], g[0, 0]) if g.shape == (2, 2) else None


def orbit_order(g, closure_tol=DEFAULT_CLOSURE_TOL, n_max=DEFAULT_N_MAX):
    """Smallest ``n`` in ``[1, n_max]`` with ``|g^n - I|_F < closure_tol``."""
    g = np.asarray(g, dtype=float)
    eye = np.eye(len(g))
    power = eye.copy()
    for n in range(1, n_max + 1):
        power = power @ g
        if n % POWER_REORTHO_EVERY == 0:
            u, _, vt = np.linalg.svd(power)
            power = u @ vt
        if np.linalg.norm(power - eye) < closure_tol:
            return n
    return NotClosed(n_max)


def holonomy(curve, frames=None, closure_tol=DEFAULT_CLOSURE_TOL, n_max=DEFAULT_N_MAX, allow_open=False):
    """Holonomy of a closed curve: generator ``g``, its angle and orbit order."""
    if not curve.closed:
        if not allow_open:
            raise OpenCurve("holonomy needs a closed curve (pass allow_open for trivial holonomy)")
        warnings.warn("open curve: holonomy is trivial", stacklevel=2)
        eye = np.eye(curve.k)
        return HolonomyResult(eye, _rotation_angle(eye), 1, closure_tol, trivial_open=True)
    if frames is None:
        frames = transport_frame(curve)
    g = holonomy_matrix(frames)
    return HolonomyResult(
        g=g,
        angle=_rotation_angle(g),
        orbit_order=orbit_order(g, closure_tol, n_max),
        generator_tolerance=float(np.linalg.norm(g.T @ g - np.eye(len(g)))),
    )


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])
