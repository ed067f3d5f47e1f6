import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from pushspace.curve_model import CurveSpec, build_curve, min_curvature_radius
from pushspace.focal import (
    FocalLine,
    FocalLines,
    dedup_lines,
    direction_groups,
    envelope_lines,
    focal_lines,
    line_angles,
    orbit_lines,
    thin_lines,
)
from pushspace.normal_bundle import NotClosed, rotation, transport_frame
from pushspace.pipeline import analyze


def single_line(u=(1.0, 0.0), d=1.0):
    return FocalLines.from_lines([FocalLine(np.array(u, float), d, 0)])


def line_key(lines):
    # offsets span many decades near flat stretches, so compare them relatively
    return np.column_stack([lines.u, np.log(lines.d)])


def same_line_sets(a, b, tol):
    if len(a) != len(b):
        return False
    ka, kb = line_key(a), line_key(b)
    return cKDTree(kb).query(ka)[0].max() < tol and cKDTree(ka).query(kb)[0].max() < tol


def test_circle_lines_are_one_line():
    c = build_curve(CurveSpec.circle(2.0, 1024))
    raw = focal_lines(c, transport_frame(c), dedup=False)
    assert len(raw) == 1024
    assert np.abs(raw.d - 2.0).max() < 1e-6
    # the inward normal is -e1 throughout, since e1 starts outward and stays radial
    assert np.abs(raw.u - [-1.0, 0.0]).max() < 1e-6


def test_circle_dedup_keeps_one_line():
    a = analyze(CurveSpec.circle(1.0, 4096))
    assert len(a.lines) == 1
    assert a.lines.d[0] == pytest.approx(1.0, abs=1e-6)


def test_tricorner_three_clusters(tricorner):
    ang = line_angles(tricorner.lines)
    hist, _ = np.histogram(ang, bins=np.linspace(-np.pi, np.pi, 181))
    occupied = hist > 0
    clusters = int(np.sum(occupied & ~np.roll(occupied, 1)))
    assert clusters == 3
    # the three in-plane normals sit a quarter turn apart around the circle
    quarter = np.round(ang / (np.pi / 2))
    centres = np.sort([np.median(ang[quarter == q]) for q in np.unique(quarter)])
    assert len(centres) == 3
    gaps = np.diff(np.append(centres, centres[0] + 2 * np.pi))
    assert np.allclose(np.sort(gaps), [np.pi / 2, np.pi / 2, np.pi], atol=2e-2)


def test_tricorner_clusters_are_tight(tricorner):
    ang = line_angles(tricorner.lines)
    for c in np.unique(np.round(ang / (np.pi / 2))):
        members = ang[np.round(ang / (np.pi / 2)) == c]
        assert np.ptp(members) < 2e-2


def test_straight_segment_emits_nothing():
    c = build_curve(CurveSpec.imported([(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)], closed=False, samples=64))
    assert len(focal_lines(c, transport_frame(c))) == 0


def test_orbit_identity_is_input(tricorner):
    out = orbit_lines(tricorner.lines, np.eye(2), 1)
    assert out is tricorner.lines


def test_orbit_quarter_turn_gives_square():
    out = orbit_lines(single_line(), rotation(math.pi / 2), 4)
    assert len(out) == 4
    got = np.sort(np.mod(line_angles(out), 2 * np.pi))
    assert np.allclose(got, [0, np.pi / 2, np.pi, 3 * np.pi / 2], atol=1e-12)
    assert np.array_equal(out.d, np.ones(4))
    assert sorted(out.power) == [0, 1, 2, 3]


def test_orbit_irrational_all_distinct():
    out = orbit_lines(single_line(), rotation(2 * math.pi * (math.sqrt(2) - 1)), NotClosed(10), 500)
    assert len(out) == 1001
    assert np.all(out.d == 1.0)
    # exact oracle: power m sits at angle -m * 2pi(sqrt2 - 1) mod 2pi, and no two coincide
    frac = np.sort(np.mod(-np.arange(-500, 501) * (math.sqrt(2) - 1), 1.0))
    assert np.diff(frac).min() > 1e-4
    got = np.sort(np.mod(line_angles(out), 2 * np.pi))
    assert np.diff(got).min() > 1e-4
    assert np.abs(got - 2 * np.pi * frac).max() < 1e-9


def test_orbit_direction_convention():
    # a normal x moved m times around meets the line where <g^m x, u> = d
    g = rotation(0.7)
    base = single_line((0.6, 0.8), 2.0)
    out = orbit_lines(base, g, 5)
    for m in range(5):
        line = out.take(out.power == m)
        x = line.u[0] * line.d[0]
        assert np.linalg.matrix_power(g, m) @ x @ base.u[0] == pytest.approx(2.0)


def test_unit_normals_and_offsets(tricorner):
    lines = tricorner.lines
    assert np.abs(np.linalg.norm(lines.u, axis=1) - 1).max() < 1e-10
    assert lines.d.min() >= tricorner.rho - 1e-9


def test_lines_pass_through_curvature_centres(tricorner):
    c, lines, frames = tricorner.curve, tricorner.lines, tricorner.frames.frames
    i = lines.source
    foot = c.position[i] + np.einsum("ik,ikd->id", lines.u * lines.d[:, None], frames[i])
    kv = c.kvec[i]
    centre = c.position[i] + kv / np.einsum("id,id->i", kv, kv)[:, None]
    near = lines.d < 1e3  # nearly flat samples put the centre at round-off distance
    assert np.abs(foot - centre)[near].max() < 1e-6


def test_orbit_preserves_offsets(sheared8):
    out = sheared8.orbit()
    assert np.array_equal(out.d, np.tile(sheared8.lines.d, 8))


@pytest.mark.parametrize("n", [3, 8])
def test_cover_lines_match_base_orbit(n):
    alpha = 0.0 if n == 3 else math.pi / 2 - 2 * math.pi / n
    base_spec = CurveSpec.tricorner(4096) if n == 3 else CurveSpec.sheared(alpha, 4096)
    base = analyze(base_spec)
    cover = analyze(CurveSpec.cover(base_spec, n))
    # traversal j of the cover carries the base lines moved by g^j
    assert np.abs(cover.holonomy.g - np.linalg.matrix_power(base.holonomy.g, n)).max() < 1e-9
    # the tri-corner's symmetry makes some traversals repeat lines, which the cover merges
    expected = dedup_lines(orbit_lines(base.lines, base.holonomy.g, n))
    assert same_line_sets(cover.lines, expected, 1e-6)


def test_higher_codimension():
    c = build_curve(CurveSpec.circle(2.0, 256, ambient_dim=4))
    lines = focal_lines(c, transport_frame(c))
    assert lines.k == 3
    assert np.abs(lines.d - 2.0).max() < 1e-6
    assert np.abs(lines.u - lines.u[0]).max() < 1e-6


def test_dedup_rules():
    u = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    d = np.array([1e9, 1e9 * (1 + 1e-12), 1.0, 1.0])
    lines = FocalLines(u, d, np.arange(4), np.zeros(4, int), np.zeros(4))
    kept = dedup_lines(lines)
    assert sorted(kept.source) == [0, 2, 3]


def test_direction_groups_and_envelope():
    u = np.array([[1.0, 0.0], [math.cos(1e-9), math.sin(1e-9)], [0.0, 1.0]])
    lines = FocalLines(u, np.array([3.0, 2.0, 5.0]), np.arange(3), np.zeros(3, int), np.zeros(3))
    labels, reps = direction_groups(lines)
    assert labels[0] == labels[1] != labels[2]
    assert len(reps) == 2
    env = envelope_lines(lines)
    assert sorted(env.d) == [2.0, 5.0]


def test_thin_lines_keeps_band_union():
    d = np.array([1.0, 1.05, 1.1, 1.15, 2.0])
    lines = FocalLines(np.tile([1.0, 0.0], (5, 1)), d, np.arange(5), np.zeros(5, int), np.zeros(5))
    band = 0.05
    kept = np.sort(thin_lines(lines, band).d)
    assert kept[0] == 1.0 and kept[-1] == 2.0
    assert np.all(np.diff(kept)[:-1] <= 2 * band + 1e-12)
    assert len(kept) < 5


def test_min_radius_matches_nearest_line(sheared8):
    assert sheared8.lines.d.min() == pytest.approx(min_curvature_radius(sheared8.curve), rel=1e-12)
