"""Certify a controllable planar system, refute an uncontrollable one.

Two systems that differ only in the drift. With f = (x2, 0) the shear
can be steered anywhere; with f = (1 + x2^2, 0) the first coordinate
only ever grows. The hull test certifies the first and produces a
separating covector for the second, and in both cases a Monte-Carlo
reachability run corroborates the verdict.
"""

import numpy as np

from geoctrl.criterion import global_verdict
from geoctrl.reach import cross_validate, monotone_witness_check, simulate_reach
from geoctrl.system import load_spec

shear = load_spec("systems/planar_shear.sys")
verdict = global_verdict(shear, grid_per_axis=5)
print("planar shear:", verdict.status)
print("  condition holds at", sum(p.condition_holds for p in verdict.points),
      "of", len(verdict.points), "grid points")

oracle = cross_validate(verdict, shear, n_traj=400, horizon=15.0)
worst = min(e["coverage"] for e in oracle["entries"])
print("  oracle:", oracle["status"], "(worst coverage %.3f)" % worst)

forward = load_spec("systems/planar_forward.sys")
verdict = global_verdict(forward, grid_per_axis=5)
print("\nforward drift:", verdict.status)
pv = next(p for p in verdict.points if not p.condition_holds)
d = np.asarray(pv.quotient_frame).T @ np.asarray(pv.witness["covector"])
print("  separating covector at", pv.base.tolist(), "->", np.round(d, 3).tolist())

cloud = simulate_reach(forward, np.zeros(2), T=15.0, n_traj=400, seed=0)
ok = monotone_witness_check(cloud, pv.witness["covector"], pv.quotient_frame)
print("  simulated cloud respects the covector:", ok)
print("  min x1 over", len(cloud.points), "stored points:",
      round(float(cloud.points[:, 0].min()), 6), "(started at 0)")
