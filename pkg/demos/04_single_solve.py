"""One complete solve on a coarse grid, inspected piece by piece.

Assembles the saddle-point system for the manufactured displacement
field, solves it, and reports the block residuals, the error norms, and
the largest stress jump across an interior face.  The jump does not
vanish (the stress space is nonconforming) but it is small and shrinks
under refinement.
"""

import numpy as np

from stressfem import (
    Material,
    build_saddle_system,
    evaluate_errors,
    generate_uniform_mesh,
    manufactured_case,
    solve_saddle,
)
from stressfem.assembly import face_jump_square_norms

material = Material(mu=0.5, lam=1.0)
case = manufactured_case(2, material)
mesh = generate_uniform_mesh(2, 8)

system = build_saddle_system(mesh, k=0, kind="s1", material=material,
                             eta=1.0, load=case.load)
print(f"system: {system.num_stress_dofs} stress dofs + "
      f"{system.num_displacement_dofs} displacement dofs")

sol = solve_saddle(system)
print(f"solved by {sol.method}, residual {sol.residual:.2e}")

rec = evaluate_errors(system, sol, case, m=8)
print(f"errors: |u - u_h| = {rec.err_u:.5f}, "
      f"|sigma - sigma_h| = {rec.err_sigma:.5f}, "
      f"|div sigma_h - f| = {rec.err_div:.5f}")
print(f"star norm of the error: {rec.err_star:.5f}")

jumps = face_jump_square_norms(system.stress_space, sol.stress)
worst = max(jumps.values())
print(f"stress jumps on {len(jumps)} interior faces, "
      f"largest |[sigma]|_F = {np.sqrt(worst):.5f}, "
      f"total {rec.err_jump:.5f}")
