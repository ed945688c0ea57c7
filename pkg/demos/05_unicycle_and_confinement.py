"""Codimension two: the unicycle, its drifted cousin, and a confinement proof.

The steering-only unicycle has a one-dimensional control algebra, so
the hull test runs in a two-dimensional quotient. Turning in place is
free, which makes the plain unicycle controllable. Give the drift a
forward offset larger than the wheel speed and x1 becomes monotone:
the test fails everywhere with the forward-speed covector, and a
supporting distribution turns that evidence into a proof.
"""

import numpy as np

from geoctrl.criterion import global_verdict, verify_supporting_distribution
from geoctrl.fields import VectorField
from geoctrl.system import load_spec

uni = load_spec("systems/unicycle.sys")
verdict = global_verdict(uni, grid_per_axis=3)
gaps = [p.witness["max_angular_gap"] for p in verdict.points]
print("unicycle:", verdict.status)
print("  largest empty angular gap over all points: %.2f rad (< pi means"
      " the transported drifts surround zero)" % max(gaps))

# every point fails here, so each one burns its full walk budget; a
# coarse grid and a small budget keep the demo quick
off = load_spec("systems/unicycle_offset.sys")
verdict = global_verdict(off, grid_per_axis=3, leaf_budget=16)
print("\noffset unicycle:", verdict.status)
pv = verdict.points[0]
ambient = np.asarray(pv.quotient_frame).T @ np.asarray(pv.witness["covector"])
print("  witness covector in state coordinates:", np.round(ambient, 3).tolist())

# promote the evidence: S = span{(0,1,0)} is control-invariant, stays
# transverse to the steering direction, and every shifted drift lies on
# one side of it
rep = verify_supporting_distribution(
    off, [VectorField.parse(("0", "1", "0"), off.var_names)], leaf_budget=6
)
print("\nsupporting distribution S = span{(0,1,0)}: accepted =", rep.accepted)
for name, ok in rep.clauses.items():
    print("   ", name, "->", ok)
print("  conclusion:", rep.conclusion)

# a candidate that is not invariant under the steering flow is refused
bad = verify_supporting_distribution(off, [VectorField.parse(("0", "x3", "0"), off.var_names)])
print("\ncandidate span{(0,x3,0)}: accepted =", bad.accepted,
      "(failed clause:", str(bad.failed_clause) + ")")
