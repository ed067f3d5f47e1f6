"""
Partial tubes
=============

A fiber drawn in the normal plane at the base point can be carried around the
curve by the parallel frame.  The result is an immersed surface as long as
the fiber stays clear of the critical lines, and it closes up once the
holonomy maps the fiber onto itself.
"""

import sys
from pathlib import Path

from pushspace import formats
from pushspace.curve_model import CurveSpec
from pushspace.errors import InvalidFiber
from pushspace.pipeline import analyze
from pushspace.tube import FiberShape, sweep_tube
from pushspace.verification import orbit_alpha

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output") / "tubes"
out.mkdir(parents=True, exist_ok=True)

# %%
# A round fiber around a planar circle is an ordinary torus.
a = analyze(CurveSpec.circle(1.0, 512))
torus = sweep_tube(a.curve, a.frames, FiberShape.circle(0.3, samples_around=32))
formats.write_obj(torus, out / "torus.obj")
print("torus:", torus.report())

# %%
# On the tri-corner a centred square is invariant under the quarter turn, so
# one loop suffices.
a = analyze(CurveSpec.tricorner(4096))
box = sweep_tube(a.curve, a.frames, FiberShape.square(a.rho / 2), lines=a.orbit(), step=8)
formats.write_obj(box, out / "tricorner_square.obj")
print("square tube:", box.report())

# %%
# A fiber reaching past the smallest curvature radius hits a critical line.
try:
    sweep_tube(a.curve, a.frames, FiberShape.circle(1.2 * a.rho), lines=a.orbit())
except InvalidFiber as exc:
    print("too wide:", exc)

# %%
# A single point off the axis on a curve with an eighth-turn holonomy traces
# a parallel curve that needs eight loops to close.
a = analyze(CurveSpec.sheared(orbit_alpha(8), 4096))
strand = sweep_tube(a.curve, a.frames, FiberShape.at_point((a.rho / 2, 0.0)), lines=a.orbit(), step=4)
formats.write_obj(strand, out / "eight_loops.obj")
print("point fiber:", strand.report())
