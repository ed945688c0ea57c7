"""Drive the toolkit the way a shell user would: spec file in, JSON out.

Reports are deterministic for a fixed spec and seed, which makes them
diffable artifacts: store one next to the spec and any later change in
behavior shows up as a change in bytes. Trajectory clouds can be saved
as CSV alongside.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

SPEC = """
name = shear_quick
vars = x1, x2
drift = x2, 0
control = 0, 1
window = -2:2, -2:2
assume_not_dense = true
grid = 5
leaf_budget = 24
traj = 300
horizon = 15
"""


def run(*args):
    return subprocess.run(
        [sys.executable, "-m", "geoctrl.cli", *args],
        capture_output=True, text=True,
    )


with tempfile.TemporaryDirectory() as tmp:
    spec = Path(tmp) / "shear_quick.sys"
    spec.write_text(SPEC)

    out1, out2 = Path(tmp) / "r1.json", Path(tmp) / "r2.json"
    for out in (out1, out2):
        proc = run("check", str(spec), "--json", str(out))
        assert proc.returncode == 0, proc.stderr
    print("two check runs, byte-identical reports:",
          out1.read_bytes() == out2.read_bytes())

    doc = json.loads(out1.read_text())
    print("verdict:", doc["verdict"]["status"],
          "| oracle:", doc["oracle"]["status"],
          "| hash:", doc["hash"][:18] + "...")

    csv = Path(tmp) / "cloud.csv"
    proc = run("reach", str(spec), "--traj", "50", "--csv", str(csv))
    assert proc.returncode == 0, proc.stderr
    lines = csv.read_text().splitlines()
    print("\nreach cloud ->", csv.name, "(%d rows)" % (len(lines) - 1))
    print("  header:", lines[0])
    print("  first row:", lines[1])

    proc = run("dist", str(spec), "--from", "0,0", "--to", "1,1", "--budget", "200")
    doc = json.loads(proc.stdout)
    est = doc["metrics"]["forward"]
    print("\ndist 0,0 -> 1,1: value %.3f (%s)" % (est["value"], est["label"]))

    # check refuses to run when the spec omits the closedness assumption
    bare = Path(tmp) / "bare.sys"
    bare.write_text(SPEC.replace("assume_not_dense = true\n", ""))
    proc = run("check", str(bare))
    err = json.loads(proc.stderr)
    print("\nwithout the assumption line: exit", proc.returncode,
          "|", err["error"]["code"])
