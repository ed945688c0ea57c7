"""Estimate steering costs, detect unreachability, and map the loop function.

The shooting estimator searches piecewise-constant control words and
reports upper bounds: the cheapest found way from x to y charging only
the controls, the symmetric variant charging every channel, and the
cost of leaving x and coming back. Loops are free exactly where the
drift vanishes, so the loop function doubles as a drift-zero detector.
"""

import numpy as np

from geoctrl.metrics import estimate_cost, loop_length
from geoctrl.system import load_spec, loads_spec

pure = loads_spec(
    """
    name = pure_drift
    vars = x1, x2
    drift = 1, 0
    control = 0, 1
    window = -2:2, -2:2
    """,
    "pure_drift",
)
fwd = estimate_cost(pure, (0.0, 0.0), (1.0, 0.0))
rev = estimate_cost(pure, (1.0, 0.0), (0.0, 0.0))
print("f = (1,0), g = (0,1): riding the drift is free, fighting it is hopeless")
print("  cost (0,0) -> (1,0):", fwd.value)
print("  cost (1,0) -> (0,0): unreachable =", rev.unreachable,
      "(closest approach %.2f)" % rev.endpoint_error)

uni = load_spec("systems/unicycle.sys")
est = estimate_cost(uni, (0.0, 0.0, 0.0), (0.0, 0.0, np.pi / 2), budget=600)
print("\nunicycle quarter turn in place: best found cost %.3f" % est.value)
print("  control word (duration, coefficients):")
for dur, coeffs in est.best_word:
    print("    %.4f  %s" % (dur, np.round(coeffs, 2).tolist()))

shear = load_spec("systems/planar_shear.sys")
print("\nloop function on f = (x2, 0): zero exactly on the x1 axis")
for x in ((0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (0.0, 1.0)):
    est = loop_length(shear, x)
    print("  l%s = %.3f" % (str(x), est.value))
