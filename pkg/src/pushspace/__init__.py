"""Normal holonomy, focal lines and push-out regions of curves in Euclidean space."""

from .curve_model import CurveSpec, SampledCurve, build_curve, flat_step, min_curvature_radius, solve_planar_piece
from .errors import GeometryError
from .focal import FocalLine, FocalLines, focal_lines, orbit_lines
from .normal_bundle import FrameField, HolonomyResult, NotClosed, holonomy, orbit_order, transport_frame
from .pipeline import analyze, pushout_of
from .pushout import PushoutRaster, SupportPolygon, central_region, compare_rasters, component_report, raster_pushout
from .tube import FiberShape, TubeMesh, fiber_margin, holonomy_closure, sweep_tube

__all__ = [
    "CurveSpec",
    "SampledCurve",
    "build_curve",
    "flat_step",
    "min_curvature_radius",
    "solve_planar_piece",
    "GeometryError",
    "FocalLine",
    "FocalLines",
    "focal_lines",
    "orbit_lines",
    "FrameField",
    "HolonomyResult",
    "NotClosed",
    "holonomy",
    "orbit_order",
    "transport_frame",
    "analyze",
    "pushout_of",
    "PushoutRaster",
    "SupportPolygon",
    "central_region",
    "compare_rasters",
    "component_report",
    "raster_pushout",
    "FiberShape",
    "TubeMesh",
    "fiber_margin",
    "holonomy_closure",
    "sweep_tube",
]
