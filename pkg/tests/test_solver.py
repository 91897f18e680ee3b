"""Direct and iterative solution of the coupled system."""

import numpy as np
import pytest
import scipy.sparse as sp

from stressfem.assembly import SaddlePointSystem, build_saddle_system
from stressfem.mesh import generate_uniform_mesh
from stressfem.solver import SolverError, solve_saddle


def small_system(dim=2, m=2, k=0, kind="s1", eta=1.0):
    mesh = generate_uniform_mesh(dim, m)
    load = lambda pts: np.stack([np.ones(len(pts))] * dim, axis=1) + pts
    return build_saddle_system(mesh, k, kind, eta=eta, load=load)


def block_residuals(system, sol):
    r1 = system.A @ sol.stress + system.B.T @ sol.displacement
    r2 = system.B @ sol.stress - system.rhs
    return np.abs(r1).max(), np.abs(r2).max()


@pytest.mark.parametrize("kind", ["s1", "s2"])
def test_direct_solve_satisfies_block_equations(kind):
    system = small_system(kind=kind)
    sol = solve_saddle(system, method="direct")
    assert sol.method == "direct"
    assert sol.residual < 1e-9
    assert sol.stress.shape == (system.num_stress_dofs,)
    assert sol.displacement.shape == (system.num_displacement_dofs,)
    r1, r2 = block_residuals(system, sol)
    scale = max(1.0, np.abs(system.rhs).max())
    assert r1 < 1e-9 * scale
    assert r2 < 1e-9 * scale


def test_minres_agrees_with_direct():
    system = small_system(m=1)
    direct = solve_saddle(system, method="direct")
    iterative = solve_saddle(system, method="minres", tol=1e-12)
    assert iterative.method == "minres"
    np.testing.assert_allclose(iterative.stress, direct.stress, atol=1e-7)
    np.testing.assert_allclose(iterative.displacement, direct.displacement,
                               atol=1e-7)


def test_auto_prefers_direct():
    system = small_system(m=1)
    sol = solve_saddle(system)
    assert sol.method == "direct"


def test_higher_order_solve():
    system = small_system(m=2, k=1)
    sol = solve_saddle(system)
    r1, r2 = block_residuals(system, sol)
    scale = max(1.0, np.abs(system.rhs).max())
    assert max(r1, r2) < 1e-8 * scale


def test_unknown_method_rejected():
    system = small_system(m=1)
    with pytest.raises(ValueError):
        solve_saddle(system, method="cg")


def broken_system():
    """Coupling block zeroed: the displacement equations are unsolvable."""
    system = small_system(m=1)
    zero = sp.csr_matrix(system.B.shape)
    return SaddlePointSystem(
        system.A, zero, system.rhs, system.stress_space,
        system.displacement_space, system.material, system.eta)


def test_direct_reports_singular_system():
    bad = broken_system()
    assert np.abs(bad.rhs).max() > 0
    with pytest.raises(SolverError):
        solve_saddle(bad, method="direct")


def test_minres_reports_nonconvergence():
    bad = broken_system()
    with pytest.raises(SolverError):
        solve_saddle(bad, method="minres", tol=1e-12, maxiter=50)
