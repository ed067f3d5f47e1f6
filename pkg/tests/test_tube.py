import math

import numpy as np
import pytest

from pushspace.curve_model import CurveSpec
from pushspace.errors import BadSpec, InvalidFiber, NotClosedError
from pushspace.normal_bundle import NotClosed, rotation
from pushspace.pipeline import analyze
from pushspace.pushout import raster_pushout
from pushspace.tube import FiberShape, fiber_margin, holonomy_closure, orbit_fiber_margin, sweep_tube


def brute_margin(points, lines):
    """Unsigned distance from sampled fiber points to the nearest line."""
    return float(np.abs(points @ lines.u.T - lines.d[None, :]).min())


def ring_frames(mesh, curve, step=1):
    last = curve.n_points - 1 if curve.closed else curve.n_points
    idx = np.arange(0, last, step)
    return np.repeat(np.tile(idx, mesh.loops_used), mesh.ring_size)


@pytest.fixture(scope="module")
def tricorner_orbit(tricorner):
    return tricorner.orbit()


def test_point_margin_is_rho(tricorner, tricorner_orbit):
    assert fiber_margin(FiberShape.at_point((0, 0)), tricorner_orbit) == pytest.approx(tricorner.rho, rel=1e-12)


def test_circle_margin_half_rho(tricorner, tricorner_orbit):
    fiber = FiberShape.circle(tricorner.rho / 2, samples_around=4096)
    margin = fiber_margin(fiber, tricorner_orbit)
    assert abs(margin - tricorner.rho / 2) < 1e-6
    env = tricorner.envelope_orbit()
    assert abs(brute_margin(fiber.boundary(), env) - margin) < 1e-6


def test_circle_crossing_margin_negative(tricorner, tricorner_orbit):
    margin = fiber_margin(FiberShape.circle(1.1 * tricorner.rho), tricorner_orbit)
    assert margin < 0
    assert margin == pytest.approx(-0.1 * tricorner.rho, rel=1e-6)


def test_orbit_margin_matches_expanded(tricorner, tricorner_orbit):
    fiber = FiberShape.square(0.4 * tricorner.rho, angle=0.3)
    direct = fiber_margin(fiber, tricorner_orbit)
    per_power = orbit_fiber_margin(fiber, tricorner.lines, tricorner.holonomy.g, tricorner.holonomy.orbit_order)
    assert per_power == pytest.approx(direct, rel=1e-12)


def test_closure_counts():
    assert holonomy_closure(FiberShape.circle(0.3), rotation(1.234)) == 1
    assert holonomy_closure(FiberShape.square(0.5), rotation(math.pi / 2)) == 1
    assert holonomy_closure(FiberShape.at_point((0.3, 0.0)), rotation(2 * math.pi / 8)) == 8
    assert isinstance(holonomy_closure(FiberShape.at_point((0.3, 0.0)), rotation(2 * math.pi * (math.sqrt(2) - 1)), n_max=1000), NotClosed)


def test_torus(circle):
    r = 0.3
    mesh = sweep_tube(circle.curve, circle.frames, FiberShape.circle(r, samples_around=32))
    assert mesh.closed and mesh.loops_used == 1 and mesh.closure_error < 1e-12
    v = mesh.vertices
    radial = np.hypot(v[:, 0], v[:, 1])
    assert radial.min() >= 1 - r - 1e-9 and radial.max() <= 1 + r + 1e-9
    assert np.abs(v[:, 2]).max() <= r + 1e-9
    n_rings = 4096
    assert len(v) == n_rings * 32 and len(mesh.faces) == n_rings * 32


def test_tricorner_square_closes_in_one_loop(tricorner, tricorner_orbit):
    fiber = FiberShape.square(tricorner.rho / 2)
    mesh = sweep_tube(tricorner.curve, tricorner.frames, fiber, lines=tricorner_orbit, step=16)
    assert mesh.loops_used == 1 and mesh.closed
    assert mesh.closure_error < 1e-6 * tricorner.curve.length
    assert mesh.valid


def test_sheared_point_closes_after_eight_loops(sheared8):
    fiber = FiberShape.at_point((sheared8.rho / 2, 0.0))
    mesh = sweep_tube(sheared8.curve, sheared8.frames, fiber, lines=sheared8.orbit(), step=64)
    assert mesh.loops_used == 8 and mesh.closed
    assert len(mesh.faces) == 0 and len(mesh.edges) == len(mesh.vertices)


def test_transport_is_isometric(sheared8):
    fiber = FiberShape.circle(sheared8.rho / 3, center=(0.01, 0.02), samples_around=12)
    mesh = sweep_tube(sheared8.curve, sheared8.frames, fiber, lines=sheared8.orbit(), step=32, force=True)
    at = ring_frames(mesh, sheared8.curve, 32)
    dist = np.linalg.norm(mesh.vertices - sheared8.curve.position[at], axis=1)
    assert np.abs(dist - np.linalg.norm(mesh.fiber_points, axis=1)).max() < 1e-8


def test_point_at_origin_is_the_curve(tricorner):
    mesh = sweep_tube(tricorner.curve, tricorner.frames, FiberShape.at_point((0, 0)), lines=tricorner.lines)
    assert mesh.closure_error == 0.0
    assert np.abs(mesh.vertices - tricorner.curve.position[:-1]).max() < 1e-12


def test_margin_agrees_with_raster(tricorner, tricorner_orbit):
    ras = raster_pushout(tricorner.lines, 2.5 * tricorner.rho, 1024, holonomy=tricorner.holonomy)
    free = ras.labels == ras.origin_label
    for scale in (0.5, 0.9, 1.2, 1.6):
        fiber = FiberShape.circle(scale * tricorner.rho, samples_around=512)
        pts = fiber.boundary()
        ix = np.floor((pts[:, 0] + ras.window) / ras.cell).astype(int)
        iy = np.floor((pts[:, 1] + ras.window) / ras.cell).astype(int)
        inside_raster = bool(free[iy, ix].all())
        margin = fiber_margin(fiber, tricorner_orbit)
        if abs(margin) > 2 * ras.band:
            assert (margin > 0) == inside_raster


def test_crossing_fiber_rejected(tricorner):
    with pytest.raises(InvalidFiber):
        sweep_tube(tricorner.curve, tricorner.frames, FiberShape.circle(1.1 * tricorner.rho), lines=tricorner.orbit(), step=64)


def test_wrong_loop_count(tricorner):
    fiber = FiberShape.at_point((tricorner.rho / 2, 0.0))
    with pytest.raises(NotClosedError):
        sweep_tube(tricorner.curve, tricorner.frames, fiber, loops=3, lines=tricorner.lines, step=64)
    mesh = sweep_tube(tricorner.curve, tricorner.frames, fiber, loops=3, lines=tricorner.lines, step=64, force=True)
    assert not mesh.closed and mesh.closure_error > 0.1 * tricorner.rho
    good = sweep_tube(tricorner.curve, tricorner.frames, fiber, lines=tricorner.lines, step=64)
    assert good.loops_used == 4 and good.closed


def test_non_closing_fiber():
    a = analyze(CurveSpec.sheared(math.pi - 2 * math.pi * (math.sqrt(2) - 1), 4096))
    with pytest.raises(NotClosedError):
        sweep_tube(a.curve, a.frames, FiberShape.at_point((a.rho / 2, 0.0)), lines=a.lines, n_max=200)


def test_bowtie_rejected():
    with pytest.raises(BadSpec):
        FiberShape.polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


@pytest.mark.parametrize("kwargs", [{"kind": "circle", "radius": 0.0}, {"kind": "blob"}, {"kind": "circle", "radius": 1.0, "samples_around": 2}])
def test_bad_fibers(kwargs):
    with pytest.raises(BadSpec):
        FiberShape(**kwargs)


def test_fiber_dict_round_trip():
    for fiber in (FiberShape.at_point((0.1, 0.2)), FiberShape.circle(0.5, (0.1, 0.0), 16), FiberShape.square(0.3, 0.2)):
        assert FiberShape.from_dict(fiber.to_dict()) == fiber


def test_polygon_boundary_contains_vertices():
    fiber = FiberShape.polygon([(0, 0), (2, 0), (0, 1)], samples_around=20)
    pts = fiber.boundary()
    for v in fiber.vertex_array:
        assert np.min(np.linalg.norm(pts - v, axis=1)) < 1e-15


@pytest.mark.parametrize("which", ["circle", "square"])
def test_faces_point_outward(which, circle, tricorner):
    a = circle if which == "circle" else tricorner
    fiber = FiberShape.circle(0.3, samples_around=16) if which == "circle" else FiberShape.square(a.rho / 2)
    step = 16
    mesh = sweep_tube(a.curve, a.frames, fiber, lines=a.lines if which == "circle" else a.orbit(), step=step)
    at = ring_frames(mesh, a.curve, step)
    p = mesh.vertices[mesh.faces]
    normal = np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 1])
    away = p.mean(axis=1) - a.curve.position[at[mesh.faces[:, 0]]]
    assert np.all(np.einsum("ij,ij->i", normal, away) > 0)


def test_step_validation(circle):
    with pytest.raises(BadSpec):
        sweep_tube(circle.curve, circle.frames, FiberShape.circle(0.2), step=0)


def test_open_curve_tube():
    a = analyze(CurveSpec.helix(samples=512))
    mesh = sweep_tube(a.curve, a.frames, FiberShape.circle(0.2, samples_around=8), lines=a.lines)
    assert not mesh.closed and mesh.loops_used == 1
    assert len(mesh.faces) == (512 - 1) * 8
