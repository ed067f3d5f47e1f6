"""
Holonomy of the tri-corner curve
================================

Three quarter circles on the coordinate planes, joined through the axis
points, make a closed space curve whose normal holonomy is a quarter turn.
This script follows one normal vector around the loop and then draws the
push-out region that the quarter turn carves out of the normal plane.

Run with an optional output directory: ``python 01_tricorner_holonomy.py out/``.
"""

import math
import sys
from pathlib import Path

import numpy as np

from pushspace import formats
from pushspace.curve_model import CurveSpec
from pushspace.normal_bundle import transport_vectors
from pushspace.pipeline import analyze, pushout_of
from pushspace.pushout import hausdorff_distance, square_region

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output") / "tricorner"
out.mkdir(parents=True, exist_ok=True)

# %%
# Build the curve and everything downstream of it in one call.
a = analyze(CurveSpec.tricorner(samples=65536))
curve = a.curve
print(f"length {curve.length:.6f}, smallest curvature radius {a.rho:.6f}")

# %%
# Carry the normal (0, 1, 0) from (1, 0, 0) to the other two corners.
# Within each planar piece the normal that sticks out of the plane stays put,
# so the vector turns only where the pieces meet.
v = np.array([[0.0, 1.0, 0.0]])
for corner in ((0, 1, 0), (0, 0, 1)):
    i = int(np.argmin(np.linalg.norm(curve.position - corner, axis=1)))
    print(f"at {corner}: {np.round(transport_vectors(curve, v, 0, i)[-1, 0], 9)}")

# %%
# After a full loop the frame comes back rotated.
h = a.holonomy
print(f"holonomy angle {h.angle:.12f} (pi/2 = {math.pi / 2:.12f}), order {h.orbit_order}")

# %%
# Each sample contributes one excluded line in the normal plane; the quarter
# turn copies each line four times.  Near the origin only a square survives.
region, raster = pushout_of(a)
err = hausdorff_distance(region.vertices, square_region(a.rho).vertices)
print(f"{len(a.lines)} lines, {a.orbit_size} after the orbit")
print(f"central region vs square of side 2 rho: Hausdorff {err:.2e}")
origin = raster.origin_component
print(f"raster: {len(raster.components)} free component(s); origin area / (2 rho)^2 = {origin.area / (4 * a.rho**2):.4f}")

formats.write_region_svg(region, a.envelope_orbit(), raster.window, out / "region.svg")
formats.write_raster(raster, out / "raster.pgm", out / "raster.json")
print(f"wrote {out}/region.svg and raster.pgm")
