"""Command line entry point.

Every subcommand prints exactly one JSON line on standard output.  Exit
status is 0 on success, 1 when a computation fails (the error name is in
the JSON under ``"error"``) and 2 for bad usage.

Settings come from, in increasing priority: the built-in defaults below, a
JSON config passed as ``--curve`` (either a bare curve description or an
object with a ``"curve"`` key plus any of the settings), and flags.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import formats
from .curve_model import DEFAULT_SAMPLES, CurveSpec
from .errors import BadSpec, GeometryError
from .focal import DEFAULT_N_TRUNCATE
from .normal_bundle import DEFAULT_CLOSURE_TOL, DEFAULT_N_MAX
from .pipeline import MAX_EXPANDED_LINES, analyze, pushout_of
from .pushout import DEFAULT_N_THETA, DEFAULT_RES, DEFAULT_WINDOW_FACTOR
from .tube import FiberShape, sweep_tube
from .verification import ACCEPTANCE_SAMPLES, run_verification

COMMANDS = ("curve", "holonomy", "focal", "pushout", "tube", "verify")

# name: (default, meaning).  None means "derived" as described.
DEFAULTS = {
    "samples": (DEFAULT_SAMPLES, f"curve samples ({ACCEPTANCE_SAMPLES} for verify)"),
    "window": (None, f"raster half-width, {DEFAULT_WINDOW_FACTOR} * rho"),
    "resolution": (DEFAULT_RES, "raster cells per side"),
    "band": (None, "line thickening, one raster cell"),
    "n_theta": (DEFAULT_N_THETA, "directions for the central region"),
    "closure_tol": (DEFAULT_CLOSURE_TOL, "|g^n - I| threshold for orbit closure"),
    "n_max": (DEFAULT_N_MAX, "largest power tried for orbit closure"),
    "n_truncate": (DEFAULT_N_TRUNCATE, "powers -N..N used when the orbit does not close"),
    "loops": (None, "tube traversals, from the fiber's holonomy closure"),
    "step": (1, "keep every step-th sample as a tube ring"),
    "fiber": (None, "circle of radius rho / 2 about the origin"),
}


@dataclass(frozen=True)
class RunConfig:
    curve: CurveSpec
    samples: int | None = None
    window: float | None = None
    resolution: int = DEFAULT_RES
    band: float | None = None
    n_theta: int = DEFAULT_N_THETA
    closure_tol: float = DEFAULT_CLOSURE_TOL
    n_max: int = DEFAULT_N_MAX
    n_truncate: int = DEFAULT_N_TRUNCATE
    loops: int | None = None
    step: int = 1
    fiber: FiberShape | None = None
    out: Path | None = None

    def validate(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float)) and not isinstance(value, bool) and not value > 0:
                raise BadSpec(f"{f.name} must be positive")

    @property
    def spec(self):
        return self.curve if self.samples is None else self.curve.with_samples(self.samples)


_SETTING_KEYS = ("samples", "window", "resolution", "band", "n_theta", "closure_tol", "n_max", "n_truncate", "loops", "step")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", help="curve JSON file or a family name (tricorner, circle, ...)")
    common.add_argument("--samples", type=int, help="samples per curve")
    common.add_argument("--alpha", type=float, help="shear angle; selects the sheared tri-corner")
    common.add_argument("--window", type=float, help="raster half-width W")
    common.add_argument("--res", type=int, dest="resolution", help="raster cells per side")
    common.add_argument("--band", type=float, help="line thickening in the raster")
    common.add_argument("--ntheta", type=int, dest="n_theta", help="directions for the central region")
    common.add_argument("--closure-tol", type=float, dest="closure_tol", help="orbit closure tolerance")
    common.add_argument("--nmax", type=int, dest="n_max", help="largest power tried for orbit closure")
    common.add_argument("--ntruncate", type=int, dest="n_truncate", help="powers used for a non-closing orbit")
    common.add_argument("--loops", type=int, help="tube traversals")
    common.add_argument("--step", type=int, help="tube ring decimation")
    common.add_argument("--fiber", help="fiber JSON file")
    common.add_argument("--out", help="directory for written artifacts")
    common.add_argument("--json", action="store_true", help="put full results in the summary line")
    parser = argparse.ArgumentParser(prog="pushspace", description="Normal holonomy and push-out spaces of curves.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _load_config(args, parser):
    data = {}
    if args.curve is None:
        spec = CurveSpec.tricorner()
    elif Path(args.curve).is_file():
        raw = formats.read_json(args.curve)
        if isinstance(raw, dict) and "curve" in raw:
            data = {k: raw[k] for k in _SETTING_KEYS if k in raw}
            if "fiber" in raw:
                data["fiber"] = FiberShape.from_dict(raw["fiber"])
            raw = raw["curve"]
        if not isinstance(raw, dict):
            raise BadSpec("curve config must be a JSON object")
        spec = CurveSpec.from_dict(raw)
    elif args.curve.lower() in ("tricorner", "circle", "helix"):
        spec = CurveSpec.from_dict({"family": args.curve.lower()})
    else:
        parser.error(f"--curve: no such file or builtin curve: {args.curve}")
    if args.alpha is not None:
        if spec.family == "cover" and spec.base.family in ("tricorner", "sheared"):
            spec = replace(spec, base=CurveSpec.sheared(args.alpha, spec.base.samples))
        elif spec.family in ("tricorner", "sheared"):
            spec = CurveSpec.sheared(args.alpha, spec.samples)
        else:
            parser.error("--alpha applies to the tri-corner family only")
        spec.validate()
    for key in _SETTING_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.fiber is not None:
        if not Path(args.fiber).is_file():
            parser.error(f"--fiber: no such file: {args.fiber}")
        data["fiber"] = FiberShape.from_dict(formats.read_json(args.fiber))
    if args.out is not None:
        data["out"] = Path(args.out)
    cfg = RunConfig(curve=spec, **data)
    cfg.validate()
    return cfg


def _out_dir(cfg):
    if cfg.out is None:
        return None
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _analysis(cfg):
    return analyze(cfg.spec, cfg.closure_tol, cfg.n_max, cfg.n_truncate)


def cmd_curve(cfg, full):
    a = _analysis(cfg)
    c = a.curve
    out = _out_dir(cfg)
    if out:
        formats.write_curve_csv(c, out / "curve.csv")
    summary = {"family": cfg.spec.family, "samples": c.n_points - 1 if c.closed else c.n_points, "length": c.length, "closed": c.closed, "rho": a.rho}
    if full:
        summary["spec"] = cfg.spec.to_dict()
    return summary


def cmd_holonomy(cfg, full):
    a = _analysis(cfg)
    h = a.holonomy
    out = _out_dir(cfg)
    if out:
        formats.write_holonomy_json(h, out / "holonomy.json")
        formats.write_frames_csv(a.frames, out / "frames.csv")
    summary = {
        "angle": h.angle,
        "orbit_order": h.orbit_order if h.closed_orbit else None,
        "generator_tolerance": h.generator_tolerance,
        "trivial_open": h.trivial_open,
    }
    if full:
        summary["matrix"] = h.g.tolist()
    return summary


def cmd_focal(cfg, full):
    a = _analysis(cfg)
    reduced = a.orbit_size > MAX_EXPANDED_LINES
    lines = a.envelope_orbit() if reduced else a.orbit()
    out = _out_dir(cfg)
    if out:
        formats.write_lines_csv(lines, out / "lines.csv")
    summary = {"lines": len(a.lines), "orbit_lines": len(lines), "envelope_only": reduced, "rho": a.rho}
    if full:
        summary["orbit_order"] = a.holonomy.orbit_order if a.holonomy.closed_orbit else None
    return summary


def cmd_pushout(cfg, full):
    a = _analysis(cfg)
    region, raster = pushout_of(a, cfg.window, cfg.resolution, cfg.band, cfg.n_theta)
    out = _out_dir(cfg)
    if out:
        formats.write_raster(raster, out / "raster.pgm", out / "raster.json")
        svg_lines = a.envelope_orbit() if a.orbit_size > MAX_EXPANDED_LINES else a.orbit()
        formats.write_region_svg(region, svg_lines, raster.window, out / "region.svg")
        formats.write_central_csv(region, out / "central.csv")
    origin = raster.origin_component
    area = origin.area if origin else 0.0
    summary = {
        "rho": a.rho,
        "window": raster.window,
        "resolution": raster.resolution,
        "band": raster.band,
        "orbit_closed": a.holonomy.closed_orbit,
        "central_bounded": region.bounded,
        "central_min_radius": float(np.min(region.rho)),
        "origin_area": area,
        "square_side_estimate": math.sqrt(area),
        "origin_inscribed_radius": origin.max_inscribed_radius if origin else 0.0,
        "components": len(raster.components),
        "window_too_small": raster.window_too_small,
    }
    if full:
        summary["component_list"] = [c.to_dict() for c in raster.components]
    return summary


def cmd_tube(cfg, full):
    a = _analysis(cfg)
    fiber = cfg.fiber or FiberShape.circle(a.rho / 2.0)
    lines = a.orbit() if a.orbit_size <= MAX_EXPANDED_LINES else None
    mesh = sweep_tube(
        a.curve, a.frames, fiber, loops=cfg.loops, lines=lines, closure_tol=cfg.closure_tol,
        n_max=cfg.n_max, n_truncate=cfg.n_truncate, step=cfg.step,
    )
    out = _out_dir(cfg)
    if out:
        formats.write_obj(mesh, out / "tube.obj")
        formats.write_json(mesh.report(), out / "tube.json")
    summary = mesh.report()
    if full:
        summary["fiber"] = fiber.to_dict()
    return summary


def cmd_verify(cfg, full):
    samples = cfg.samples or ACCEPTANCE_SAMPLES
    out = _out_dir(cfg)
    report = run_verification(samples, cfg.closure_tol, cfg.n_max, cfg.n_truncate, out_dir=out)
    print(report.text(), file=sys.stderr)
    if out:
        (out / "report.txt").write_text(report.text() + "\n")
        formats.write_json(report.to_dict(), out / "report.json")
    summary = {"passed": report.passed, "failed": report.failed(), "runtime": report.runtime}
    if full:
        summary["report"] = report.to_dict()
    return summary


HANDLERS = {
    "curve": cmd_curve,
    "holonomy": cmd_holonomy,
    "focal": cmd_focal,
    "pushout": cmd_pushout,
    "tube": cmd_tube,
    "verify": cmd_verify,
}


def run(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args, parser)
        summary = {"command": args.command, **HANDLERS[args.command](cfg, args.json)}
    except GeometryError as exc:
        print(f"error: {exc.name}: {exc}", file=sys.stderr)
        print(formats.dumps_line({"command": args.command, "error": exc.name, "message": str(exc)}))
        return 1
    print(formats.dumps_line(summary))
    if args.command == "verify" and not summary["passed"]:
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
