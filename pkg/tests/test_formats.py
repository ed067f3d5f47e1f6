import json
import math

import numpy as np
import pytest

from pushspace import formats
from pushspace.curve_model import CurveSpec
from pushspace.errors import BadSpec
from pushspace.pipeline import analyze, pushout_of
from pushspace.tube import FiberShape, sweep_tube


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, math.pi, 1e-300, -2.5e17):
        assert float(formats.fmt(x)) == x
    assert formats.fmt(math.inf) == "inf" and formats.fmt(-math.inf) == "-inf"
    assert formats.fmt(math.nan) == "nan"


def test_json_non_finite_becomes_null():
    text = formats.dumps({"a": math.inf, "b": [np.float64(1.5), np.int64(2)], "c": np.bool_(True)})
    assert json.loads(text) == {"a": None, "b": [1.5, 2], "c": True}


def test_read_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(BadSpec):
        formats.read_json(bad)


def test_read_curve_spec_wrapped(tmp_path):
    spec = CurveSpec.sheared(0.3, 512)
    path = tmp_path / "c.json"
    formats.write_json({"curve": spec.to_dict(), "window": 2.0}, path)
    assert formats.read_curve_spec(path) == spec


def test_csv_headers(tmp_path, circle):
    formats.write_curve_csv(circle.curve, tmp_path / "curve.csv")
    formats.write_frames_csv(circle.frames, tmp_path / "frames.csv")
    formats.write_lines_csv(circle.lines, tmp_path / "lines.csv")
    head = lambda p: (tmp_path / p).read_text().splitlines()[0]  # noqa: E731
    assert head("curve.csv") == "s,x,y,z,tx,ty,tz,kx,ky,kz"
    assert head("frames.csv") == "s,e1x,e1y,e1z,e2x,e2y,e2z"
    assert head("lines.csv") == "ux,uy,d,source_s,orbit_power"
    rows = np.loadtxt(tmp_path / "curve.csv", delimiter=",", skiprows=1)
    assert np.array_equal(rows[:, 1:4], circle.curve.position)


def test_pgm_layout(tmp_path, tricorner):
    _, ras = pushout_of(tricorner, resolution=128)
    formats.write_raster(ras, tmp_path / "r.pgm", tmp_path / "r.json")
    data = (tmp_path / "r.pgm").read_bytes()
    header = b"P5\n128 128\n255\n"
    assert data.startswith(header)
    img = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(128, 128)
    assert set(np.unique(img)) <= {0, 255}
    assert np.array_equal(img[::-1] == 255, ras.excluded)
    side = json.loads((tmp_path / "r.json").read_text())
    assert side["resolution"] == 128 and len(side["components"]) == len(ras.components)


def test_svg_and_central(tmp_path, tricorner):
    region, ras = pushout_of(tricorner, resolution=128, n_theta=256)
    formats.write_region_svg(region, tricorner.orbit(), ras.window, tmp_path / "r.svg")
    formats.write_central_csv(region, tmp_path / "c.csv")
    svg = (tmp_path / "r.svg").read_text()
    assert svg.startswith("<svg") and "<polygon" in svg and "<line" in svg
    rows = np.loadtxt(tmp_path / "c.csv", delimiter=",", skiprows=1)
    assert rows.shape == (256, 2)


def test_obj_records(tmp_path, circle):
    mesh = sweep_tube(circle.curve, circle.frames, FiberShape.circle(0.2, samples_around=4), step=512)
    formats.write_obj(mesh, tmp_path / "t.obj")
    lines = (tmp_path / "t.obj").read_text().splitlines()
    v = [ln for ln in lines if ln.startswith("v ")]
    f = [ln for ln in lines if ln.startswith("f ")]
    assert len(v) == len(mesh.vertices) and len(f) == len(mesh.faces)
    idx = np.array([[int(t) for t in ln.split()[1:]] for ln in f])
    assert idx.min() == 1 and idx.max() == len(v)


def test_obj_polyline(tmp_path, circle):
    mesh = sweep_tube(circle.curve, circle.frames, FiberShape.at_point((0.1, 0.0)), step=512)
    formats.write_obj(mesh, tmp_path / "p.obj")
    text = (tmp_path / "p.obj").read_text()
    assert "\nl " in text and "\nf " not in text


def test_outputs_are_byte_identical(tmp_path):
    a = analyze(CurveSpec.sheared(0.4, 1024))
    for run in ("one", "two"):
        d = tmp_path / run
        d.mkdir()
        region, ras = pushout_of(a, resolution=128, n_theta=256)
        formats.write_raster(ras, d / "r.pgm", d / "r.json")
        formats.write_central_csv(region, d / "c.csv")
        formats.write_lines_csv(a.orbit(), d / "l.csv")
    for name in ("r.pgm", "r.json", "c.csv", "l.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
