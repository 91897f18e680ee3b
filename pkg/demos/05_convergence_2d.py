"""2D convergence study for both stress families, printed as tables.

Lowest order first: displacement and divergence converge at first order,
the stress error at first order for the full family and noticeably
faster for the reduced one on these grids.  Then the k = 1 full family,
where everything is second order.  Runs in well under a minute.
"""

from stressfem import convergence_study

for kind in ("s1", "s2"):
    report = convergence_study(2, 0, kind=kind, levels=[8, 16, 32])
    print(f"k = 0, family {kind}:")
    print(report.format_table())
    print()

report = convergence_study(2, 1, kind="s1", levels=[4, 8, 16])
print("k = 1, family s1:")
print(report.format_table())
