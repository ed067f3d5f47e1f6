"""Reading configs and writing artifacts.

Every float goes through one formatter, so output bytes depend only on the
computed values.  CSV uses 17 significant digits and writes infinities as
``inf``; JSON uses the shortest round-trip representation and writes
non-finite values as ``null``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .curve_model import CurveSpec
from .errors import BadSpec
from .focal import thin_lines


def fmt(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps(obj, indent=2):
    return json.dumps(_jsonable(obj), indent=indent, sort_keys=True, allow_nan=False)


def dumps_line(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, allow_nan=False, separators=(", ", ": "))


def write_json(obj, path):
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BadSpec(f"{path}: not valid JSON ({exc})") from exc


def read_curve_spec(path):
    data = read_json(path)
    if isinstance(data, dict) and "curve" in data:
        data = data["curve"]
    return CurveSpec.from_dict(data)


def _write_table(path, header, columns):
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    rows = [",".join(fmt(v) for v in row) for row in zip(*cols)]
    Path(path).write_text(",".join(header) + "\n" + "".join(r + "\n" for r in rows))


def _axis_names(dim):
    return "xyz" if dim == 3 else [f"{j}" for j in range(dim)]


def write_curve_csv(curve, path):
    ax = _axis_names(curve.dim)
    header = ["s"] + [f"{a}" for a in ax] + [f"t{a}" for a in ax] + [f"k{a}" for a in ax]
    cols = [curve.s] + list(curve.position.T) + list(curve.tangent.T) + list(curve.kvec.T)
    _write_table(path, header, cols)


def write_frames_csv(frames, path):
    ax = _axis_names(frames.curve.dim)
    k = frames.frames.shape[1]
    header = ["s"] + [f"e{j + 1}{a}" for j in range(k) for a in ax]
    cols = [frames.curve.s] + [frames.frames[:, j, d] for j in range(k) for d in range(frames.curve.dim)]
    _write_table(path, header, cols)


def write_holonomy_json(result, path):
    write_json(result.to_dict(), path)


def write_lines_csv(lines, path):
    _write_table(path, ["ux", "uy", "d", "source_s", "orbit_power"], [lines.u[:, 0], lines.u[:, 1], lines.d, lines.source_s, lines.power])


def write_pgm(raster, path):
    """Binary greymap, 255 for excluded cells, top row at ``y = +W``."""
    img = np.where(raster.excluded[::-1], 255, 0).astype(np.uint8)
    n = raster.resolution
    Path(path).write_bytes(f"P5\n{n} {n}\n255\n".encode("ascii") + img.tobytes())


def raster_sidecar(raster):
    return {
        "window": raster.window,
        "resolution": raster.resolution,
        "band": raster.band,
        "cell": raster.cell,
        "window_too_small": raster.window_too_small,
        "origin_label": raster.origin_label,
        "components": [c.to_dict() for c in raster.components],
    }


def write_raster(raster, pgm_path, json_path):
    write_pgm(raster, pgm_path)
    write_json(raster_sidecar(raster), json_path)


def write_central_csv(poly, path):
    _write_table(path, ["theta", "rho"], [poly.thetas, poly.rho])


def _svg_num(x):
    return "%.9g" % x


def write_region_svg(poly, lines, window, path, size=800):
    """Central region as a polygon with the excluded lines drawn over it."""
    w = float(window)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_svg_num(-w)} {_svg_num(-w)} {_svg_num(2 * w)} {_svg_num(2 * w)}">',
        '<g transform="scale(1,-1)">',
        f'<rect x="{_svg_num(-w)}" y="{_svg_num(-w)}" width="{_svg_num(2 * w)}" height="{_svg_num(2 * w)}" fill="white"/>',
    ]
    verts = poly.vertices
    if len(verts):
        pts = " ".join(f"{_svg_num(x)},{_svg_num(y)}" for x, y in np.clip(verts, -2 * w, 2 * w))
        parts.append(f'<polygon points="{pts}" fill="#9ecae1" stroke="#08519c" stroke-width="{_svg_num(w / 400)}"/>')
    reach = w * math.sqrt(2.0)
    if len(lines):
        near = lines.take(np.nonzero(lines.d <= reach)[0])
        near = thin_lines(near, w / 200) if len(near) else near
        stroke = _svg_num(w / 800)
        for u, d in zip(near.u, near.d):
            p = d * u
            t = np.array([-u[1], u[0]]) * 2 * reach
            a, b = p - t, p + t
            parts.append(
                f'<line x1="{_svg_num(a[0])}" y1="{_svg_num(a[1])}" x2="{_svg_num(b[0])}" y2="{_svg_num(b[1])}" '
                f'stroke="#a50f15" stroke-width="{stroke}"/>'
            )
    parts.append("</g>")
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_obj(mesh, path):
    """Wavefront OBJ with quads for surfaces and ``l`` records for curves."""
    out = ["# tube mesh"]
    out.extend("v " + " ".join(fmt(c) for c in v) for v in mesh.vertices)
    out.extend("f " + " ".join(str(int(i) + 1) for i in f) for f in mesh.faces)
    out.extend(f"l {int(a) + 1} {int(b) + 1}" for a, b in mesh.edges)
    Path(path).write_text("\n".join(out) + "\n")
