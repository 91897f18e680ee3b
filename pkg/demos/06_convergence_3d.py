"""3D convergence at desk scale: m = 2, 4, 8 for both families.

The reduced family carries far fewer stress unknowns (vertex plus face
based instead of moment based) at the price of requiring a strongly
regular grid and a smaller penalty weight; eta = 0.1 is the stable
choice for it here.  Expect a few minutes of runtime for the m = 8
solves.
"""

import time

from stressfem import convergence_study


def progress(rec):
    print(f"  m = {rec.m}: done "
          f"({rec.dim_Sigma} + {rec.dim_V} unknowns)")


for kind, eta in [("s1", 1.0), ("s2", 0.1)]:
    print(f"family {kind}, eta = {eta}:")
    start = time.monotonic()
    report = convergence_study(3, 0, kind=kind, levels=[2, 4, 8], eta=eta,
                               progress=progress)
    print(report.format_table())
    print(f"  {time.monotonic() - start:.0f}s\n")
