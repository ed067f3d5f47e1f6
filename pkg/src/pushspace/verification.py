"""The acceptance suite: every worked example checked at its stated tolerance.

Each criterion is a function returning ``(passed, measured, expected,
tolerance, detail)``; the runner times it and collects a report that can be
printed as a table or dumped as JSON.  Failures are reported, never raised.
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .curve_model import CurveSpec, build_curve
from .normal_bundle import (
    DEFAULT_CLOSURE_TOL,
    DEFAULT_N_MAX,
    NotClosed,
    holonomy,
    transport_frame,
    transport_frame_ode,
    transport_vectors,
)
from .pipeline import analyze, analyze_curve, pushout_of
from .pushout import compare_rasters, disk_region, hausdorff_distance, square_region
from .focal import DEFAULT_N_TRUNCATE
from .tube import FiberShape, holonomy_closure, sweep_tube

ACCEPTANCE_SAMPLES = 65536
DETERMINISM_SAMPLES = 4096
SHEAR_ALPHAS = (0.2, 0.5, 1.0)
ORBIT_NS = (5, 8, 12)
SPIKE_NS = (2, 4, 8, 16)
# holonomy angle 2*pi*(sqrt(2) - 5/4): an irrational multiple of 2*pi with alpha inside (0, pi/2)
IRRATIONAL_ALPHA = math.pi - 2.0 * math.pi * (math.sqrt(2.0) - 1.0)


def orbit_alpha(n):
    """Shear angle whose holonomy is a rotation by 2*pi/n."""
    return math.pi / 2.0 - 2.0 * math.pi / n


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: object
    expected: object
    tolerance: object
    runtime: float
    detail: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self):
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "runtime": self.runtime,
            "detail": self.detail,
            "error": self.error,
        }

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.number:>2} {self.name}: measured={_short(self.measured)} expected={_short(self.expected)} tol={_short(self.tolerance)} ({self.runtime:.2f}s)"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_short(x)}" for k, x in v.items()) + "}"
    return str(v)


@dataclass
class VerificationReport:
    results: list
    settings: dict
    runtime: float

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def failed(self):
        return [r.name for r in self.results if not r.passed]

    def text(self):
        lines = [r.line() for r in self.results]
        lines.append(f"{sum(r.passed for r in self.results)}/{len(self.results)} criteria passed in {self.runtime:.1f}s")
        return "\n".join(lines)

    def to_dict(self):
        return {
            "passed": self.passed,
            "settings": self.settings,
            "runtime": self.runtime,
            "criteria": [r.to_dict() for r in self.results],
        }


class Context:
    """Shared settings and cached analyses for one verification run."""

    def __init__(self, samples, closure_tol, n_max, n_truncate, out_dir):
        self.samples = samples
        self.closure_tol = closure_tol
        self.n_max = n_max
        self.n_truncate = n_truncate
        self.out_dir = Path(out_dir)

    def analysis(self, spec):
        return analyze(spec.with_samples(self.samples), self.closure_tol, self.n_max, self.n_truncate)

    def tricorner(self):
        return self.analysis(CurveSpec.tricorner())

    def sheared(self, alpha):
        return self.analysis(CurveSpec.sheared(alpha))

    def spike(self, n):
        return self.analysis(CurveSpec.spike(n))


def _abs_angle_error(angle, target):
    return abs(abs(angle) - target)


def c1_tricorner_angle(ctx):
    a = ctx.tricorner()
    err = _abs_angle_error(a.holonomy.angle, math.pi / 2)
    return err < 1e-6, abs(a.holonomy.angle), math.pi / 2, 1e-6, {"angle": a.holonomy.angle}


def c2_sheared_angles(ctx):
    errs, angles = [], {}
    for alpha in SHEAR_ALPHAS:
        h = ctx.sheared(alpha).holonomy
        errs.append(_abs_angle_error(h.angle, math.pi / 2 - alpha))
        angles[str(alpha)] = h.angle
    worst = max(errs)
    return worst < 1e-5, worst, 0.0, 1e-5, {"angles": angles, "errors": errs}


def _nearest_sample(curve, point):
    return int(np.argmin(np.linalg.norm(curve.position - np.asarray(point, dtype=float), axis=1)))


def c3_waypoints(ctx):
    curve = ctx.tricorner().curve
    v0 = np.array([[0.0, 1.0, 0.0]])
    expected = np.array([-1.0, 0.0, 0.0])
    detail, worst = {}, 0.0
    for name, point in (("at (0,1,0)", (0, 1, 0)), ("at (0,0,1)", (0, 0, 1))):
        i = _nearest_sample(curve, point)
        v = transport_vectors(curve, v0, 0, i)[-1, 0]
        err = float(np.abs(v - expected).max())
        worst = max(worst, err)
        detail[name] = v.tolist()
    return worst < 1e-6, worst, 0.0, 1e-6, detail


def c4_square(ctx):
    a = ctx.tricorner()
    region, _ = pushout_of(a, n_theta=4096)
    target = square_region(a.rho, 4096)
    dist = hausdorff_distance(region.vertices, target.vertices)
    return dist <= 1e-3 * a.rho, dist / a.rho, 0.0, 1e-3, {"rho": a.rho, "hausdorff": dist}


def c5_orbit_orders(ctx):
    orders, residuals = [], []
    for n in ORBIT_NS:
        h = ctx.sheared(orbit_alpha(n)).holonomy
        order = h.orbit_order
        orders.append(order if isinstance(order, int) else None)
        residuals.append(float(np.linalg.norm(np.linalg.matrix_power(h.g, n) - np.eye(2))))
    ok = orders == list(ORBIT_NS) and max(residuals) < 1e-6
    return ok, orders, list(ORBIT_NS), 1e-6, {"residual_g_pow_n": residuals}


def c6_irrational(ctx):
    a = ctx.sheared(IRRATIONAL_ALPHA)
    not_closed = isinstance(a.holonomy.orbit_order, NotClosed)
    region, _ = pushout_of(a, n_theta=4096)
    dist = hausdorff_distance(region.vertices, disk_region(a.rho, 4096).vertices)
    ok = not_closed and dist <= 1e-3 * a.rho
    measured = {"orbit": "NotClosed" if not_closed else a.holonomy.orbit_order, "hausdorff_over_rho": dist / a.rho}
    return ok, measured, {"orbit": "NotClosed", "hausdorff_over_rho": 0.0}, 1e-3, {"alpha": IRRATIONAL_ALPHA, "angle": a.holonomy.angle}


def _matched_rasters(base, cover, window):
    _, ra = pushout_of(base, window=window)
    _, rb = pushout_of(cover, window=window)
    return compare_rasters(ra, rb)


def c7_covers(ctx):
    tri = ctx.tricorner()
    tri3 = ctx.analysis(CurveSpec.cover(CurveSpec.tricorner(), 3))
    m1 = _matched_rasters(tri, tri3, 2.5 * tri.rho)
    sh_spec = CurveSpec.sheared(orbit_alpha(8))
    sh = ctx.analysis(sh_spec)
    sh8 = ctx.analysis(CurveSpec.cover(sh_spec, 8))
    m2 = _matched_rasters(sh, sh8, 2.5 * sh.rho)
    worst = max(m1, m2)
    return worst < 1e-3, worst, 0.0, 1e-3, {"tricorner_x3": m1, "sheared8_x8": m2}


def c8_spikes(ctx):
    rho1 = ctx.spike(1).rho
    radii = []
    for n in SPIKE_NS:
        _, raster = pushout_of(ctx.spike(n))
        radii.append(raster.origin_component.max_inscribed_radius)
    decreasing = all(b < a for a, b in zip(radii, radii[1:]))
    ok = decreasing and radii[-1] < 0.2 * rho1
    return ok, radii, f"strictly decreasing, last < {0.2 * rho1:.6g}", 0.2, {"rho1": rho1, "strictly_decreasing": decreasing}


def c9a_nonconvex(ctx):
    rho1 = ctx.spike(1).rho
    _, raster = pushout_of(ctx.spike(8), window=3.0 * rho1)
    defects = [c.convexity_defect for c in raster.components]
    worst = max(defects) if defects else 0.0
    return worst > 0.05, worst, "> 0.05", 0.05, {"components": len(defects), "window": 3.0 * rho1}


def c9b_not_closed(ctx):
    a = ctx.sheared(IRRATIONAL_ALPHA)
    order = a.holonomy.orbit_order
    flag = isinstance(order, NotClosed)
    return flag, "NotClosed" if flag else order, "NotClosed", None, {"n_max": ctx.n_max}


def _gram_drift(curve, frames):
    basis = np.concatenate([curve.tangent[:, None, :], frames.frames], axis=1)
    gram = np.einsum("nij,nkj->nik", basis, basis)
    return float(np.abs(gram - np.eye(basis.shape[1])).max())


def _helix_angle_error(samples):
    r, pitch, turns = 1.0, 2.0 * math.pi, 2.0
    curve = build_curve(CurveSpec.helix(r, pitch, turns, samples=samples))
    c = pitch / (2.0 * math.pi)
    speed = math.hypot(r, c)
    tau = c / (r * r + c * c)
    t = curve.s / speed
    normal = np.stack([-np.cos(t), -np.sin(t), np.zeros_like(t)], axis=1)
    binormal = np.cross(curve.tangent, normal)
    v = transport_vectors(curve, normal[:1], 0, curve.n_points - 1)[:, 0]
    angle = np.unwrap(np.arctan2(np.einsum("ij,ij->i", v, binormal), np.einsum("ij,ij->i", v, normal)))
    # a parallel vector turns against the torsion: theta' = -tau
    return float(np.abs(angle + tau * curve.s).max())


def c10_invariants(ctx):
    a = ctx.tricorner()
    curve, frames = a.curve, a.frames
    drift = _gram_drift(curve, frames)
    v = np.array([[0.0, 0.3, 1.7]])
    path = transport_vectors(curve, v, 0, curve.n_points - 1)[:, 0]
    norm_err = float(np.abs(np.linalg.norm(path, axis=1) - np.linalg.norm(v)).max())
    i1, i2 = curve.n_points // 3, (2 * curve.n_points) // 3
    via = transport_vectors(curve, transport_vectors(curve, v, 0, i1)[-1], i1, i2)[-1, 0]
    direct = path[i2]
    compose_err = float(np.abs(via - direct).max())
    ode = transport_frame_ode(curve)
    ode_err = float(np.abs(ode - frames.frames[::2][: len(ode)]).max())
    helix_err = _helix_angle_error(ctx.samples)
    circle = build_curve(CurveSpec.circle(1.0, samples=ctx.samples))
    circle_err = float(np.abs(holonomy(circle, transport_frame(circle)).g - np.eye(2)).max())
    measured = {
        "orthonormality": drift,
        "norm": norm_err,
        "composition": compose_err,
        "ode": ode_err,
        "helix": helix_err,
        "circle": circle_err,
    }
    tol = {"orthonormality": 1e-9, "norm": 1e-8, "composition": 1e-8, "ode": 1e-6, "helix": 1e-6, "circle": 1e-8}
    ok = all(measured[k] < tol[k] for k in tol)
    return ok, measured, {k: 0.0 for k in tol}, tol, {}


def c11_tubes(ctx):
    a = ctx.tricorner()
    square = FiberShape.square(a.rho / 2.0)
    mesh = sweep_tube(
        a.curve, a.frames, square, lines=a.orbit(), closure_tol=ctx.closure_tol, n_max=ctx.n_max, step=16, force=True
    )
    sq_ok = mesh.loops_used == 1 and mesh.closure_error < 1e-6 * a.curve.length
    s8 = ctx.sheared(orbit_alpha(8))
    point = FiberShape.at_point((s8.rho / 2.0, 0.0))
    loops = holonomy_closure(point, s8.holonomy.g, ctx.closure_tol, ctx.n_max)
    pt_ok = loops == 8
    if pt_ok:
        pmesh = sweep_tube(s8.curve, s8.frames, point, loops=loops, lines=s8.orbit(), closure_tol=ctx.closure_tol, step=16)
        pt_ok = pmesh.closed
    measured = {
        "square_loops": mesh.loops_used,
        "square_closure_over_L": mesh.closure_error / a.curve.length,
        "point_loops": loops if isinstance(loops, int) else "NotClosed",
    }
    return sq_ok and pt_ok, measured, {"square_loops": 1, "square_closure_over_L": 0.0, "point_loops": 8}, 1e-6, {}


def write_artifacts(spec, out_dir, closure_tol=DEFAULT_CLOSURE_TOL, n_max=DEFAULT_N_MAX, n_truncate=DEFAULT_N_TRUNCATE):
    """Run the whole chain for one curve from scratch and write every artifact."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve = build_curve.__wrapped__(spec)
    a = analyze_curve(curve, closure_tol, n_max, n_truncate)
    formats.write_curve_csv(curve, out / "curve.csv")
    formats.write_frames_csv(a.frames, out / "frames.csv")
    formats.write_holonomy_json(a.holonomy, out / "holonomy.json")
    orbit = a.orbit()
    formats.write_lines_csv(orbit, out / "lines.csv")
    region, raster = pushout_of(a)
    formats.write_raster(raster, out / "raster.pgm", out / "raster.json")
    formats.write_region_svg(region, orbit, raster.window, out / "region.svg")
    formats.write_central_csv(region, out / "central.csv")
    mesh = sweep_tube(a.curve, a.frames, FiberShape.square(a.rho / 2.0), lines=orbit, step=8)
    formats.write_obj(mesh, out / "tube.obj")
    formats.write_json(mesh.report(), out / "tube.json")
    return sorted(p.name for p in out.iterdir())


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def c12_determinism(ctx):
    spec = CurveSpec.tricorner(DETERMINISM_SAMPLES)
    run1, run2 = ctx.out_dir / "run1", ctx.out_dir / "run2"
    names = write_artifacts(spec, run1, ctx.closure_tol, ctx.n_max, ctx.n_truncate)
    previous = os.environ.get("PUSHOUT_THREADS")
    os.environ["PUSHOUT_THREADS"] = "4"  # the second run also exercises the threaded reductions
    try:
        write_artifacts(spec, run2, ctx.closure_tol, ctx.n_max, ctx.n_truncate)
    finally:
        if previous is None:
            os.environ.pop("PUSHOUT_THREADS", None)
        else:
            os.environ["PUSHOUT_THREADS"] = previous
    differing = [n for n in names if _digest(run1 / n) != _digest(run2 / n)]
    return not differing, differing, [], 0, {"files": names}


CRITERIA = (
    (1, "holonomy angle, tri-corner", c1_tricorner_angle),
    (2, "holonomy angle, sheared curves", c2_sheared_angles),
    (3, "transport waypoints", c3_waypoints),
    (4, "central region is the square of side 2 rho", c4_square),
    (5, "orbit orders of rational shears", c5_orbit_orders),
    (6, "irrational shear: NotClosed and disk of radius rho", c6_irrational),
    (7, "covering equivalence of rasters", c7_covers),
    (8, "spike family inscribed radius shrinks", c8_spikes),
    (9, "(a) non-convex component in the spike raster", c9a_nonconvex),
    (9, "(b) irrational central region flagged NotClosed", c9b_not_closed),
    (10, "transport invariant suite", c10_invariants),
    (11, "tube closure", c11_tubes),
    (12, "determinism of artifacts", c12_determinism),
)


def run_verification(
    samples=ACCEPTANCE_SAMPLES,
    closure_tol=DEFAULT_CLOSURE_TOL,
    n_max=DEFAULT_N_MAX,
    n_truncate=DEFAULT_N_TRUNCATE,
    out_dir=None,
    only=None,
):
    """Run the acceptance criteria (all, or the numbers in ``only``)."""
    start = time.perf_counter()
    tmp = None
    if out_dir is None:
        tmp = tempfile.TemporaryDirectory()
        out_dir = tmp.name
    ctx = Context(samples, closure_tol, n_max, n_truncate, out_dir)
    results = []
    try:
        for number, name, fn in CRITERIA:
            if only is not None and number not in only:
                continue
            t0 = time.perf_counter()
            try:
                passed, measured, expected, tol, detail = fn(ctx)
                err = None
            except Exception as exc:  # a crash is a failed criterion, not a crashed report
                passed, measured, expected, tol, detail = False, None, None, None, {}
                err = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
            results.append(
                CriterionResult(number, name, bool(passed), measured, expected, tol, time.perf_counter() - t0, detail, err)
            )
    finally:
        if tmp is not None:
            tmp.cleanup()
    settings = {"samples": samples, "closure_tol": closure_tol, "n_max": n_max, "n_truncate": n_truncate}
    return VerificationReport(results, settings, time.perf_counter() - start)
