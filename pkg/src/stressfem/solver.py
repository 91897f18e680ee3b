"""Solution of the assembled saddle-point system.

The coupled matrix [[A, B^T], [B, 0]] is symmetric indefinite.  A sparse LU
factorization handles every mesh size used in practice; MINRES with a block
diagonal preconditioner is kept as a fallback for systems too large to
factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from stressfem.assembly import SaddlePointSystem, assemble_displacement_mass

__all__ = ["Solution", "SolverError", "solve_saddle"]


class SolverError(RuntimeError):
    """The linear system could not be solved to the requested accuracy."""


@dataclass
class Solution:
    stress: np.ndarray
    displacement: np.ndarray
    residual: float
    method: str


def _relative_residual(K, x, rhs):
    denom = np.linalg.norm(rhs)
    if denom == 0.0:
        denom = 1.0
    return float(np.linalg.norm(K @ x - rhs) / denom)


def _split(system, x, residual, method):
    ns = system.num_stress_dofs
    return Solution(x[:ns].copy(), x[ns:].copy(), residual, method)


def solve_saddle(system: SaddlePointSystem, method="auto", tol=1e-9,
                 maxiter=None) -> Solution:
    """Solve for the stress and displacement coefficient vectors.

    method is "direct", "minres", or "auto" (direct, with an iterative
    retry if the factorization fails or its residual is poor).
    """
    if method not in ("auto", "direct", "minres"):
        raise ValueError(f"unknown solver method {method!r}")
    K = system.full_matrix()
    rhs = system.full_rhs()

    if method in ("auto", "direct"):
        try:
            lu = spla.splu(K.tocsc())
            x = lu.solve(rhs)
            res = _relative_residual(K, x, rhs)
        except (RuntimeError, ValueError) as exc:
            if method == "direct":
                raise SolverError(f"sparse factorization failed: {exc}") from exc
            res = None
        if res is not None:
            if np.isfinite(res) and res < 1e-6:
                return _split(system, x, res, "direct")
            if method == "direct":
                raise SolverError(
                    f"direct solve residual {res:.3e} exceeds 1e-6; "
                    "the system is singular or severely ill conditioned")

    # Block diagonal preconditioner: diag(A) for the stress block (positive
    # by construction) and the displacement mass diagonal for the rest.
    diag = np.concatenate([
        system.A.diagonal(),
        assemble_displacement_mass(system.displacement_space).diagonal(),
    ])
    if np.any(diag <= 0):
        raise SolverError("preconditioner diagonal is not positive")
    M = spla.LinearOperator(K.shape, matvec=lambda v: v / diag)
    if maxiter is None:
        maxiter = max(2000, 20 * K.shape[0])
    x, info = spla.minres(K, rhs, M=M, rtol=tol, maxiter=maxiter)
    if info != 0:
        raise SolverError(f"minres did not converge (info={info})")
    res = _relative_residual(K, x, rhs)
    if not np.isfinite(res) or res > 100 * max(tol, 1e-12):
        raise SolverError(f"minres residual {res:.3e} exceeds tolerance")
    return _split(system, x, res, "minres")
