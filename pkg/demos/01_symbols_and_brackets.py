"""Parse vector fields, take brackets, and audit a control distribution.

Everything downstream rests on this layer: fields come in as plain
strings, derivatives are symbolic, and the rank audit decides whether
the geometry is uniform enough for the rest of the toolkit to apply.
"""

import numpy as np

from geoctrl.fields import VectorField, lie_bracket
from geoctrl.lie import audit_regularity, generate_bracket_basis

N3 = ("x1", "x2", "x3")

# the steering-only unicycle: one control, heading as third state
g = VectorField.parse(("0", "0", "1"), N3)
drive = VectorField.parse(("cos(x3)", "sin(x3)", "0"), N3)

b = lie_bracket(g, drive)
print("fields:")
print("  g     =", g.component_strings())
print("  drive =", drive.component_strings())
print("  [g, drive] =", b.component_strings())

p = np.array([0.0, 0.0, np.pi / 3])
print("at x3 = pi/3:  [g, drive](p) =", np.round(b(p), 6))

# brackets of g alone close immediately: the control algebra is a line
fam = generate_bracket_basis([g])
print("\ncontrol algebra from {g}:", [w for _, _, w in fam.generated])

window = ((-2.0, 2.0), (-2.0, 2.0), (-np.pi, np.pi))
report = audit_regularity(fam, window, grid_per_axis=5)
print("rank over a 5^3 grid:", report.rank, "(constant:", report.constant_rank, ")")
print("codimension:", report.codim)

# add the drive field and the bracket fills the missing directions
fam2 = generate_bracket_basis([g, drive])
report2 = audit_regularity(fam2, window, grid_per_axis=5)
print("\nwith both fields the algebra spans rank", report2.rank, "everywhere")
