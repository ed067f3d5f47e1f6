"""The curve -> frame -> holonomy -> lines -> push-out chain in one place."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

from .curve_model import build_curve, min_curvature_radius
from .focal import DEFAULT_N_TRUNCATE, envelope_lines, focal_lines, orbit_lines, orbit_powers
from .normal_bundle import DEFAULT_CLOSURE_TOL, DEFAULT_N_MAX, holonomy, transport_frame
from .pushout import DEFAULT_N_THETA, DEFAULT_RES, DEFAULT_WINDOW_FACTOR, central_region, raster_pushout


# expanding more lines than this is refused in favour of the envelope orbit
MAX_EXPANDED_LINES = 5_000_000


@dataclass(frozen=True, eq=False)
class Analysis:
    curve: object
    frames: object
    holonomy: object
    rho: float
    lines: object
    n_truncate: int

    @property
    def orbit_size(self):
        return len(self.lines) * len(orbit_powers(self.holonomy.orbit_order, self.n_truncate))

    def orbit(self):
        """All lines under all holonomy powers."""
        return orbit_lines(self.lines, self.holonomy.g, self.holonomy.orbit_order, self.n_truncate)

    def envelope_orbit(self):
        """Orbit of the nearest line per direction: bounds the same central region."""
        return orbit_lines(envelope_lines(self.lines), self.holonomy.g, self.holonomy.orbit_order, self.n_truncate)


@lru_cache(maxsize=32)
def analyze(spec, closure_tol=DEFAULT_CLOSURE_TOL, n_max=DEFAULT_N_MAX, n_truncate=DEFAULT_N_TRUNCATE):
    """Everything up to the focal lines and holonomy for one curve (cached)."""
    return analyze_curve(build_curve(spec), closure_tol, n_max, n_truncate)


def analyze_curve(curve, closure_tol=DEFAULT_CLOSURE_TOL, n_max=DEFAULT_N_MAX, n_truncate=DEFAULT_N_TRUNCATE):
    frames = transport_frame(curve)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hol = holonomy(curve, frames, closure_tol, n_max, allow_open=True)
    lines = focal_lines(curve, frames)
    rho = min_curvature_radius(curve)
    return Analysis(curve, frames, hol, rho, lines, n_truncate)


def default_window(rho):
    return DEFAULT_WINDOW_FACTOR * rho


def pushout_of(analysis, window=None, resolution=DEFAULT_RES, band=None, n_theta=DEFAULT_N_THETA):
    """Central region and raster; the window defaults to 2.5 rho."""
    window = default_window(analysis.rho) if window is None else window
    region = central_region(analysis.envelope_orbit(), n_theta)
    raster = raster_pushout(analysis.lines, window, resolution, band, holonomy=analysis.holonomy, n_truncate=analysis.n_truncate)
    return region, raster
