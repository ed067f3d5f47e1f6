"""
Covers, spikes and the shape of the components
==============================================

Running around a curve several times changes its holonomy but not the set of
normals that avoid the critical lines.  Sharpening a corner, on the other
hand, pulls a critical line towards the origin and squeezes the region.
"""

import math

from pushspace.curve_model import CurveSpec
from pushspace.pipeline import analyze, pushout_of
from pushspace.pushout import compare_rasters, component_report, raster_pushout
from pushspace.verification import orbit_alpha

SAMPLES = 16384

# %%
# Rasterize a curve and its cover on the same grid and count differing cells.
for base, n in ((CurveSpec.tricorner(SAMPLES), 3), (CurveSpec.sheared(orbit_alpha(8), SAMPLES), 8)):
    a = analyze(base)
    b = analyze(CurveSpec.cover(base, n))
    w = 2.5 * a.rho
    ra = raster_pushout(a.lines, w, 512, holonomy=a.holonomy)
    rb = raster_pushout(b.lines, w, 512, holonomy=b.holonomy)
    print(f"{base.family} and its {n}-fold cover: {compare_rasters(ra, rb):.2e} of cells differ")

# %%
# The spike family adds a bump of shrinking width.  Its curvature radius, and
# with it the room around the origin, drops with every step.  Each raster
# uses a window scaled to its own curve: a band wider than rho would cover
# the origin cell itself.
for n in (2, 4, 8, 16):
    a = analyze(CurveSpec.spike(n, samples=65536))
    _, r = pushout_of(a)
    print(f"spike {n:2d}: rho {a.rho:.2e}, inscribed radius of the origin component {r.origin_component.max_inscribed_radius:.2e}")

# %%
# Every free component of a complement of lines is an intersection of
# half-planes, so the convexity check comes out clean for all of them.
window = 3 * analyze(CurveSpec.spike(1, samples=65536)).rho
a = analyze(CurveSpec.spike(8, samples=65536))
r = raster_pushout(a.lines, window, 1024, holonomy=a.holonomy)
worst = max(v.convexity_defect for v in component_report(r))
print(f"spike 8: {len(r.components)} component(s), largest convexity defect {worst:.3f}")
print(f"holonomy angle {a.holonomy.angle:.4f} ({a.holonomy.angle / math.pi:.4f} pi)")
