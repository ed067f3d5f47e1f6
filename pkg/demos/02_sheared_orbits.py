"""
Shearing the tri-corner
=======================

A shear of the tri-corner keeps its pieces planar but tilts the angle at
which they meet.  The holonomy becomes a turn by ``pi/2 - alpha``.  When that
is a rational fraction of a full turn the push-out is a regular polygon;
otherwise the rotated copies of the square fill in a disk.
"""

import math

import numpy as np

from pushspace.curve_model import CurveSpec
from pushspace.pipeline import analyze
from pushspace.pushout import central_region, disk_region, hausdorff_distance
from pushspace.verification import IRRATIONAL_ALPHA, orbit_alpha

SAMPLES = 16384

# %%
# The holonomy angle tracks the shear exactly.
for alpha in (0.2, 0.5, 1.0):
    h = analyze(CurveSpec.sheared(alpha, SAMPLES)).holonomy
    print(f"alpha {alpha:.1f}: |angle| {abs(h.angle):.10f}, expected {math.pi / 2 - alpha:.10f}")

# %%
# Shears that turn the frame by 2 pi / n close after n loops, and the central
# region becomes a regular n-gon: its radius runs from rho to rho / cos(pi/n).
for n in (5, 8, 12):
    a = analyze(CurveSpec.sheared(orbit_alpha(n), SAMPLES))
    g = a.holonomy.g
    closure = np.linalg.norm(np.linalg.matrix_power(g, n) - np.eye(2))
    region = central_region(a.envelope_orbit())
    print(f"n={n:2d}: orbit order {a.holonomy.orbit_order}, |g^n - I| = {closure:.1e}, "
          f"region radius {region.rho.min() / a.rho:.4f}..{region.rho.max() / a.rho:.4f} rho")

# %%
# An irrational turn never returns.  The orbit is cut off at 500 powers each
# way, and the region is already a disk to five digits.
a = analyze(CurveSpec.sheared(IRRATIONAL_ALPHA, SAMPLES))
print(f"irrational shear: orbit {a.holonomy.orbit_order!r}")
region = central_region(a.envelope_orbit())
err = hausdorff_distance(region.vertices, disk_region(a.rho).vertices) / a.rho
print(f"distance to the disk of radius rho: {err:.2e} rho")
