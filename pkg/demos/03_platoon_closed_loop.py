"""Closed-loop platoon driven by the distributed estimates.

Writes trajectory.csv, report.txt and platoon.svg to ./platoon_out and
prints the check report.  Takes about 15-20 s.
"""

import sys

from geoduio import cases
from geoduio.sim import SimConfig

published = "--paper-gains" in sys.argv
result = cases.run_case_study(cases.PlatoonParams(), SimConfig(), published_gains=published,
                              output_dir="platoon_out")
print(result.report())

errn = result.trajectory.error_norms()
t = result.trajectory.times
for tt in (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0):
    k = min(int(round(tt / (t[1] - t[0]))), len(t) - 1)
    print(f"t = {tt:3.1f} s  |e_i| = " + "  ".join(f"{v:8.4f}" for v in errn[k]))
