"""Structural verification of the stress element construction.

Every check here recomputes a structural fact (a rank, a duality identity,
a dimension count) with scaled double-precision linear algebra and compares
it against the closed-form value.  Rank decisions use a relative singular
value cutoff and are repeated at two neighboring cutoffs; a check passes
only when all three agree, so borderline numerics show up as failures
rather than as silently chosen ranks.

The checks are independent of the assembly path: fields are compared
through their unique coefficient vectors and through exact integrals of
barycentric polynomials, never through quadrature.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from stressfem.global_spaces import (
    build_displacement_space,
    build_space_s1,
    build_space_s2,
    rigid_motion_basis,
    symmetric_unit_tensors,
)
from stressfem.local_spaces import (
    SymTensorField,
    conforming_div_bubbles,
    face_bubble_dual_basis,
    face_moment_dof,
    local_decomposition,
    nonconforming_div_bubbles,
    rank_one_tensor_basis,
    tensor_pairs,
)
from stressfem.mesh import SimplexGeometry, generate_uniform_mesh
from stressfem.polynomial import (
    BarycentricPoly,
    SpaceSpec,
    exponents_up_to,
    monomial_integral,
    orthonormal_face_basis,
    quadrature_rule,
    span_basis,
)

__all__ = [
    "CheckResult",
    "VerificationReport",
    "reference_simplex",
    "perturbed_simplex",
    "check_unisolvency",
    "check_local_decomposition",
    "check_face_bubble_duality",
    "check_nc_moments",
    "check_div_bubble_range",
    "check_trace_dimensions",
    "check_conforming_trace_bound",
    "check_direct_sum_patch",
    "check_space_dimensions",
    "run_all",
]

# relative singular value cutoffs; the middle one decides, the outer two
# must agree with it for a rank to count as stable
RANK_CUTOFFS = (1e-7, 1e-9, 1e-11)

# normal-trace dimensions on one face, by (n, k): first the dual face
# family (n * dim P_k(F)), then the fields vanishing pointwise on the
# other faces (n * dim P_{k+1-n}(F))
NORMAL_TRACE_DIMS = {
    (2, 0): (2, 0), (2, 1): (4, 2), (2, 2): (6, 4),
    (3, 0): (3, 0), (3, 1): (9, 0), (3, 2): (18, 3), (3, 3): (30, 9),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    expected: object
    computed: object
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "expected": self.expected,
            "computed": self.computed,
            "details": self.details,
        }


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, result: CheckResult):
        self.checks.append(result)

    def to_json(self, indent=2):
        payload = {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }
        return json.dumps(payload, indent=indent)

    def to_text(self):
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"[{tag}] {c.name}: computed {c.computed}, "
                         f"expected {c.expected}")
            for key, val in c.details.items():
                lines.append(f"       {key}: {val}")
        npass = sum(c.passed for c in self.checks)
        lines.append(f"{npass}/{len(self.checks)} checks passed")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# geometries and coefficient flattening


def reference_simplex(n) -> SimplexGeometry:
    V = np.vstack([np.zeros(n), np.eye(n)])
    return SimplexGeometry(V)


def perturbed_simplex(n, rng, amplitude=0.25) -> SimplexGeometry:
    """Random perturbation of the reference simplex, bounded away from degeneracy."""
    base = np.vstack([np.zeros(n), np.eye(n)])
    ref_vol = 1.0 / math.factorial(n)
    while True:
        V = base + rng.uniform(-amplitude, amplitude, size=base.shape)
        try:
            geom = SimplexGeometry(V)
        except ValueError:
            continue
        if geom.volume > 0.2 * ref_vol:
            return geom


def _canonical_exponents(nvars, degree):
    return [e for e in exponents_up_to(nvars, degree) if e[0] == 0]


def _flatten_fields(fields, degree) -> np.ndarray:
    """Rows of unique coefficient vectors; faithful linear coordinates."""
    if not fields:
        return np.zeros((0, 1))
    rows = [np.concatenate([q.canonical_coefficients(degree)
                            for q in f.coeffs]) for f in fields]
    return np.array(rows)


def _flatten_vectors(vecs, nvars, degree) -> np.ndarray:
    """Same for lists of scalar polynomial components (traces, divergences)."""
    if not vecs:
        return np.zeros((0, 1))
    basis = _canonical_exponents(nvars, degree)
    rows = []
    for comps in vecs:
        parts = [p.eliminated(0).coefficients(basis) for p in comps]
        rows.append(np.concatenate(parts))
    return np.array(rows)


def _stable_rank(M):
    """(rank, stable, gap) at the three cutoffs; gap is the relative sv at the cut."""
    if M.size == 0 or not M.any():
        return 0, True, 0.0
    sv = np.linalg.svd(M, compute_uv=False)
    top = sv[0]
    ranks = [int(np.sum(sv > cut * top)) for cut in RANK_CUTOFFS]
    rank = ranks[1]
    gap = float(sv[rank - 1] / top) if rank > 0 else 0.0
    return rank, len(set(ranks)) == 1, gap


def _scaled_min_singular(M):
    """Smallest singular value after row and column max-abs equilibration."""
    A = np.abs(M)
    r = A.max(axis=1)
    r[r == 0.0] = 1.0
    S = M / r[:, None]
    c = np.abs(S).max(axis=0)
    c[c == 0.0] = 1.0
    S = S / c[None, :]
    return float(np.linalg.svd(S, compute_uv=False)[-1])


def _symmetric_monomial_fields(geom, degree) -> list:
    """Basis of P_degree(K; S): scalar monomial spans times the unit tensors."""
    n = geom.dim
    tensors = rank_one_tensor_basis(geom)
    flat = tensors.reshape(len(tensors), -1).T
    fields = []
    for E in symmetric_unit_tensors(n):
        coeffs = np.linalg.lstsq(flat, E.reshape(-1), rcond=None)[0]
        for p in span_basis(SpaceSpec.full(degree), n):
            f = SymTensorField(geom)
            for a, c in enumerate(coeffs):
                if abs(c) > 1e-14:
                    f.coeffs[a] = c * p
            fields.append(f)
    return fields


# ---------------------------------------------------------------------------
# local checks


def _dof_matrix(geom, k):
    """All degrees of freedom applied to a full basis of P_{k+1}(K; S).

    Rows: face normal-trace moments (face, then moment, then component),
    then integrals against the conforming and nonconforming bubbles.
    Built from coefficient vectors, so each block is a matrix product
    rather than a field-by-field integration loop.
    """
    n = geom.dim
    fields = _symmetric_monomial_fields(geom, k + 1)
    C = _flatten_fields(fields, k + 1)

    exps = _canonical_exponents(n + 1, k + 1)
    monos = [BarycentricPoly.monomial(n + 1, e) for e in exps]
    phis = orthonormal_face_basis(n - 1, k)
    tensors = rank_one_tensor_basis(geom)
    npairs = len(tensors)

    blocks = []
    for i in range(n + 1):
        nu = geom.face_normals[i]
        area = geom.face_measures[i]
        # R[a, t] = int_F m_a|_F phi_t
        R = np.array([[ (m.restrict(i) * phi).integral(area) for phi in phis]
                      for m in monos])
        tn = np.einsum("pab,b->pa", tensors, nu)  # (pairs, comps)
        # weight for dof (t, m) against coefficient (p, a)
        W = np.einsum("at,pm->tmpa", R, tn).reshape(len(phis) * n, npairs * len(exps))
        blocks.append(C @ W.T)

    interiors = conforming_div_bubbles(geom, k) + nonconforming_div_bubbles(geom, k)
    if interiors:
        dots = np.einsum("aij,bij->ab", tensors, tensors)
        scal = np.array([[float(monomial_integral(tuple(x + y for x, y in zip(ea, eb))))
                          for eb in exps] for ea in exps]) * geom.volume
        G = np.kron(dots, scal)
        B = _flatten_fields(interiors, k + 1)
        blocks.append(C @ G @ B.T)
    M = np.concatenate(blocks, axis=1)
    return M.T  # rows: dofs, columns: basis fields


def check_unisolvency(n, k, trials=10, seed=7) -> CheckResult:
    """The dof set determines every field of P_{k+1}(K; S) uniquely."""
    size = (n * (n + 1) // 2) * math.comb(n + k + 1, n)
    rng = np.random.default_rng(seed)
    geoms = [reference_simplex(n)] + [perturbed_simplex(n, rng)
                                      for _ in range(trials)]
    min_sv = math.inf
    ok = True
    for geom in geoms:
        M = _dof_matrix(geom, k)
        if M.shape != (size, size):
            ok = False
            break
        rank, stable, _ = _stable_rank(M)
        ok = ok and stable and rank == size
        min_sv = min(min_sv, _scaled_min_singular(M))
    return CheckResult(
        name=f"unisolvency n={n} k={k}",
        passed=ok,
        expected=f"rank {size} on {len(geoms)} simplices",
        computed="nonsingular" if ok else "singular or unstable",
        details={"matrix_size": size, "min_scaled_singular_value": min_sv},
    )


def check_local_decomposition(n, k, trials=2, seed=7) -> CheckResult:
    """Face, conforming and nonconforming families together span P_{k+1}(K; S)."""
    dim = (n * (n + 1) // 2) * math.comb(n + k + 1, n)
    rng = np.random.default_rng(seed)
    geoms = [reference_simplex(n)] + [perturbed_simplex(n, rng)
                                      for _ in range(trials)]
    ok = True
    worst_gap = math.inf
    count = None
    for geom in geoms:
        basis = local_decomposition(geom, k)
        count = basis.dim
        M = _flatten_fields(basis.fields, k + 1)
        rank, stable, gap = _stable_rank(M)
        ok = ok and stable and rank == dim and count == dim
        worst_gap = min(worst_gap, gap)
    return CheckResult(
        name=f"local decomposition n={n} k={k}",
        passed=ok,
        expected=dim,
        computed=count,
        details={"rank_gap": worst_gap},
    )


def check_face_bubble_duality(n, k, seed=7) -> CheckResult:
    """Face family moments are the identity on their face and zero elsewhere."""
    rng = np.random.default_rng(seed)
    geoms = [reference_simplex(n), perturbed_simplex(n, rng)]
    nphi = math.comb(n - 1 + k, k)
    worst = 0.0
    for geom in geoms:
        for i in range(n + 1):
            bubbles = face_bubble_dual_basis(geom, i, k)
            for r, tau in enumerate(bubbles):
                for j in range(n + 1):
                    for t in range(nphi):
                        for m in range(n):
                            val = face_moment_dof(tau, j, t, m, k)
                            want = 1.0 if (j == i and t * n + m == r) else 0.0
                            worst = max(worst, abs(val - want))
    return CheckResult(
        name=f"face bubble duality n={n} k={k}",
        passed=worst <= 1e-12,
        expected="identity moments to 1e-12",
        computed=f"max deviation {worst:.3e}",
        details={"max_deviation": worst},
    )


def check_nc_moments(n, k, seed=7) -> CheckResult:
    """Nonconforming bubbles: zero trace moments, nonzero trace."""
    rng = np.random.default_rng(seed)
    geoms = [reference_simplex(n), perturbed_simplex(n, rng)]
    nphi = math.comb(n - 1 + k, k)
    worst = 0.0
    min_trace = math.inf
    for geom in geoms:
        for tau in nonconforming_div_bubbles(geom, k):
            for i in range(n + 1):
                for t in range(nphi):
                    for m in range(n):
                        worst = max(worst, abs(face_moment_dof(tau, i, t, m, k)))
            # pointwise normal trace must not vanish identically
            top = 0.0
            for i in range(n + 1):
                for p in tau.normal_trace(i):
                    if p.terms:
                        top = max(top, max(abs(c) for c in p.terms.values()))
            min_trace = min(min_trace, top)
    return CheckResult(
        name=f"nonconforming bubble moments n={n} k={k}",
        passed=worst <= 1e-12 and min_trace > 1e-8,
        expected="moments below 1e-12, pointwise trace nonzero",
        computed=f"max moment {worst:.3e}, min trace coefficient {min_trace:.3e}",
        details={"max_moment": worst, "min_trace_coefficient": min_trace},
    )


def check_div_bubble_range(n, k, seed=7) -> CheckResult:
    """div over the conforming bubbles fills the complement of the rigid fields.

    Expected rank: dim P_k(K; R^n) minus the rigid dimension (n for k = 0,
    n(n+1)/2 otherwise); each divergence is orthogonal to every rigid field
    because the bubbles carry no boundary term.
    """
    rigid_dim = n if k == 0 else n * (n + 1) // 2
    expected = n * math.comb(n + k, n) - rigid_dim
    rng = np.random.default_rng(seed)
    geoms = [reference_simplex(n), perturbed_simplex(n, rng)]
    ok = True
    rank = 0
    worst = 0.0
    for geom in geoms:
        bubbles = conforming_div_bubbles(geom, k)
        divs = [tau.divergence() for tau in bubbles]
        M = _flatten_vectors(divs, n + 1, max(k, 0))
        rank, stable, _ = _stable_rank(M)
        ok = ok and stable and rank == expected
        rigid = rigid_motion_basis(geom, k)
        for comps in divs:
            dnorm = math.sqrt(sum((d * d).integral(geom.volume) for d in comps))
            for r in rigid:
                rnorm = math.sqrt(sum((p * p).integral(geom.volume) for p in r))
                inner = sum((d * p).integral(geom.volume)
                            for d, p in zip(comps, r))
                scale = max(dnorm * rnorm, 1e-30)
                worst = max(worst, abs(inner) / scale)
    ok = ok and worst <= 1e-12
    return CheckResult(
        name=f"divergence bubble range n={n} k={k}",
        passed=ok,
        expected=expected,
        computed=rank,
        details={"max_rigid_product": worst},
    )


def check_trace_dimensions(n, k, seed=7) -> CheckResult:
    """Normal-trace dimensions on one face match the closed-form table.

    The dual face family gives n * dim P_k(F); fields forced to vanish
    pointwise on the other faces only give n * dim P_{k+1-n}(F).
    """
    want_free, want_vanishing = NORMAL_TRACE_DIMS[(n, k)]
    rng = np.random.default_rng(seed)
    geoms = [reference_simplex(n), perturbed_simplex(n, rng)]
    got_free = got_vanishing = None
    ok = True
    for geom in geoms:
        for i in range(n + 1):
            traces = [tau.normal_trace(i)
                      for tau in face_bubble_dual_basis(geom, i, k)]
            M = _flatten_vectors(traces, n, k + 1)
            got_free, stable, _ = _stable_rank(M)
            ok = ok and stable and got_free == want_free

            vanishing = []
            factor = BarycentricPoly.constant(n + 1, 1.0)
            for j in range(n + 1):
                if j != i:
                    factor = factor * BarycentricPoly.coordinate(n + 1, j)
            if k + 1 - n >= 0:
                tensors = rank_one_tensor_basis(geom)
                flat = tensors.reshape(len(tensors), -1).T
                for E in symmetric_unit_tensors(n):
                    coeffs = np.linalg.lstsq(flat, E.reshape(-1), rcond=None)[0]
                    for p in span_basis(SpaceSpec.full(k + 1 - n), n):
                        f = SymTensorField(geom)
                        for a, c in enumerate(coeffs):
                            if abs(c) > 1e-14:
                                f.coeffs[a] = c * (factor * p)
                        vanishing.append(f)
            traces = [tau.normal_trace(i) for tau in vanishing]
            M = _flatten_vectors(traces, n, k + 1)
            got_vanishing, stable, _ = _stable_rank(M)
            ok = ok and stable and got_vanishing == want_vanishing
    return CheckResult(
        name=f"trace dimensions n={n} k={k}",
        passed=ok,
        expected=(want_free, want_vanishing),
        computed=(got_free, got_vanishing),
    )


def _face_lattice(vertices, order):
    """Principal lattice of the given order on a simplex spanned by `vertices`."""
    nv = len(vertices)
    V = np.asarray(vertices, dtype=float)
    pts = []
    for e in exponents_up_to(nv, order):
        if sum(e) == order:
            pts.append(np.array(e, dtype=float) / order @ V)
    return np.array(pts)


def default_trace_patch(n):
    """Reference simplex and a generic mate across its slanted face."""
    A = np.vstack([np.zeros(n), np.eye(n)])
    apex = np.array([0.9 - 0.1 * a for a in range(n)])
    B = np.vstack([apex, np.eye(n)])
    return SimplexGeometry(A), SimplexGeometry(B)


def check_conforming_trace_bound(n, k, patch=None) -> CheckResult:
    """How much normal trace survives on a shared face under conformity.

    For 1 <= k <= n-1: over all piecewise P_{k+1} symmetric fields on a
    two-element patch with matching normal trace on the shared face and
    zero normal trace on the outer faces, the achievable traces are
    essentially tangential: their component along the face normal spans
    at most one dimension, and their moments against P_1(F; R^n) fall
    short of the n * dim P_k(F) degrees of freedom the face family
    supplies, so no conforming construction could replace it.  For k = n
    the single-element fields that vanish pointwise on the other faces
    already cover more than the rigid traces, and the bound no longer
    applies.
    """
    if patch is None:
        patch = default_trace_patch(n)
    gA, gB = patch
    nu = gA.face_normals[0]
    shared = gA.vertices[1:]
    # both opposite vertices must lie strictly on opposite sides
    sA = float((gA.vertices[0] - shared[0]) @ nu)
    sB = float((gB.vertices[0] - shared[0]) @ nu)
    if not (sA < -1e-12 and sB > 1e-12):
        raise ValueError("patch must straddle the shared face")
    if not np.allclose(gB.vertices[1:], shared):
        raise ValueError("patch elements must share the face opposite vertex 0")

    if k == n:
        # single element: fields vanishing pointwise on the other faces
        factor = BarycentricPoly.constant(n + 1, 1.0)
        for j in range(1, n + 1):
            factor = factor * BarycentricPoly.coordinate(n + 1, j)
        pts = _face_lattice(shared, k + 1)
        lam = gA.barycentric(pts)
        rows = []
        for E in symmetric_unit_tensors(n):
            Enu = E @ nu
            for p in span_basis(SpaceSpec.full(k + 1 - n), n):
                vals = (factor * p).evaluate(lam)
                rows.append(np.outer(vals, Enu).ravel())
        trace_dim, stable, _ = _stable_rank(np.array(rows))
        rigid_vals = []
        for comps in rigid_motion_basis(gA, k):
            rigid_vals.append(np.concatenate(
                [q.evaluate(lam) for q in comps]))
        rigid_dim, rstable, _ = _stable_rank(np.array(rigid_vals))
        ok = stable and rstable and trace_dim >= rigid_dim
        return CheckResult(
            name=f"conforming trace bound n={n} k={k}",
            passed=ok,
            expected=f"bound not applicable, trace dim >= rigid dim {rigid_dim}",
            computed=trace_dim,
            details={"rigid_trace_dim": rigid_dim, "applicable": False},
        )

    if not 1 <= k <= n - 1:
        raise ValueError("bound covers 1 <= k <= n")

    scalars = span_basis(SpaceSpec.full(k + 1), n)
    Es = symmetric_unit_tensors(n)
    ncols = len(scalars) * len(Es)

    def trace_rows(geom, pts, normal):
        """tau @ normal values at pts as rows, columns over the p*E basis."""
        lam = geom.barycentric(pts)
        cols = []
        for E in Es:
            Enu = E @ normal
            for p in scalars:
                vals = p.evaluate(lam)
                cols.append(np.outer(vals, Enu).ravel())
        return np.array(cols).T  # (npts * n, ncols)

    rows = []
    order = k + 1
    for side, geom in enumerate(patch):
        for i in range(1, n + 1):
            pts = _face_lattice(np.delete(geom.vertices, i, axis=0), order)
            block = trace_rows(geom, pts, geom.face_normals[i])
            Z = np.zeros((block.shape[0], 2 * ncols))
            Z[:, side * ncols:(side + 1) * ncols] = block
            rows.append(Z)
    pts = _face_lattice(shared, order)
    # continuity of tau nu across the shared face, nu fixed as gA outward
    blockA = trace_rows(gA, pts, nu)
    blockB = trace_rows(gB, pts, nu)
    rows.append(np.concatenate([blockA, -blockB], axis=1))
    C = np.concatenate(rows, axis=0)

    sv = np.linalg.svd(C, compute_uv=False)
    top = sv[0]
    nullities = [2 * ncols - int(np.sum(sv > cut * top)) for cut in RANK_CUTOFFS]
    stable_null = len(set(nullities)) == 1
    _, _, Vt = np.linalg.svd(C)
    null = Vt[2 * ncols - nullities[1]:]

    # Point values of the achievable traces on the shared face.  The full
    # vector family is genuinely richer than one dimension (its extra
    # members are tangential); the bound concerns the component along nu,
    # so its rank is measured against the magnitude of the whole family.
    traces = null[:, :ncols] @ blockA.T
    vals = traces.reshape(len(null), len(pts), n)
    trace_dim, stable, _ = _stable_rank(traces)
    normal_vals = vals @ nu
    scale = np.linalg.svd(traces, compute_uv=False)[0] if len(null) else 0.0
    nsv = np.linalg.svd(normal_vals, compute_uv=False) if len(null) else np.zeros(0)
    normal_dims = [int(np.sum(nsv > cut * scale)) for cut in RANK_CUTOFFS]
    normal_stable = len(set(normal_dims)) == 1
    normal_dim = normal_dims[1]

    # Moments of the traces against P_1(F; R^n): with fewer independent
    # moments than n * dim P_1(F), no choice of patch-conforming bubbles
    # can supply that many dofs.
    quad = quadrature_rule(n - 1, k + 3)
    qpts = quad.points @ shared
    lamq = gA.barycentric(qpts)
    w = quad.weights * math.factorial(n - 1)
    qvals = np.zeros((len(null), len(qpts), n))
    col = 0
    for E in Es:
        Enu = E @ nu
        for p in scalars:
            pv = p.evaluate(lamq)
            qvals += null[:, None, None, col] * (pv[:, None] * Enu)[None]
            col += 1
    phi = lamq[:, 1:]
    moments = np.einsum("bqc,q,qt->btc", qvals, w, phi).reshape(len(null), -1)
    moment_rank, mstable, _ = _stable_rank(moments)

    moment_dim = n * math.comb(n - 1 + k, k)
    ok = (stable_null and stable and normal_stable and mstable
          and normal_dim <= 1 and moment_rank < n * n)
    return CheckResult(
        name=f"conforming trace bound n={n} k={k}",
        passed=ok,
        expected=f"normal component dim <= 1, linear moment rank < {n * n}",
        computed=normal_dim,
        details={
            "nullspace_dim": nullities[1],
            "trace_family_dim": trace_dim,
            "linear_moment_rank": moment_rank,
            "face_moment_dim": moment_dim,
        },
    )


# ---------------------------------------------------------------------------
# global checks


def _global_coefficient_matrix(space, degree):
    """Columns are global fields, flattened element by element."""
    mesh = space.mesh
    n = mesh.dim
    exps = _canonical_exponents(n + 1, degree)
    npairs = len(tensor_pairs(n))
    per_elem = npairs * len(exps)
    M = np.zeros((mesh.num_elements * per_elem, space.num_dofs))
    for e in range(mesh.num_elements):
        gdofs, signs = space.element_dofs(e)
        fields = space.local_fields(e)
        block = _flatten_fields(fields, degree)
        for a, g in enumerate(gdofs):
            M[e * per_elem:(e + 1) * per_elem, g] += signs[a] * block[a]
    return M


def check_direct_sum_patch(n) -> CheckResult:
    """Bubble and vertex families of the lowest-order second space stay independent.

    On the one-cell uniform mesh (strongly regular by construction) the
    rank of the combined family must equal the sum of the family ranks.
    """
    mesh = generate_uniform_mesh(n, 1)
    space = build_space_s2(mesh)
    M = _global_coefficient_matrix(space, 1)
    nbub = n * int(mesh.face_interior.sum())
    total, stable_t, _ = _stable_rank(M)
    rank_b, stable_b, _ = _stable_rank(M[:, :nbub])
    rank_v, stable_v, _ = _stable_rank(M[:, nbub:])
    ok = (stable_t and stable_b and stable_v
          and total == space.num_dofs
          and rank_b + rank_v == total)
    return CheckResult(
        name=f"second space direct sum n={n}",
        passed=ok,
        expected=space.num_dofs,
        computed=total,
        details={"bubble_rank": rank_b, "vertex_rank": rank_v},
    )


def check_space_dimensions(mesh, k, kind="s1") -> CheckResult:
    """Constructed dof totals against the closed-form counts.

    The first space also exercises the face identity
    faces + interior faces = (n + 1) elements, which converts the
    per-element count minus the interface constraints into the
    constructive face-plus-interior total.
    """
    n = mesh.dim
    T = mesh.num_elements
    Fi = int(mesh.face_interior.sum())
    Ftot = mesh.num_faces
    euler_ok = Ftot + Fi == (n + 1) * T
    npairs = n * (n + 1) // 2
    if kind == "s1":
        space = build_space_s1(mesh, k)
        local_dim = npairs * math.comb(n + k + 1, n)
        constraint = n * math.comb(n - 1 + k, k)
        formula = T * local_dim - Fi * constraint
    else:
        space = build_space_s2(mesh)
        formula = n * Fi + npairs * mesh.num_vertices
    disp = build_displacement_space(mesh, k)
    disp_formula = n * math.comb(n + k, n) * T
    ok = euler_ok and space.num_dofs == formula and disp.num_dofs == disp_formula
    return CheckResult(
        name=f"space dimensions n={n} k={k} {kind} "
             f"({T} elements)",
        passed=ok,
        expected={"stress": formula, "displacement": disp_formula},
        computed={"stress": space.num_dofs, "displacement": disp.num_dofs},
        details={"face_identity": euler_ok, "interior_faces": Fi},
    )


# ---------------------------------------------------------------------------
# the full battery


def run_all(trials=10, seed=7, parallel=True, max_workers=None) -> VerificationReport:
    """Every structural check at its standard configuration.

    Checks are independent; with parallel=True they run on a thread pool
    and the report keeps the deterministic submission order.
    """
    orders = (0, 1, 2)
    jobs = []
    for n in (2, 3):
        for k in orders:
            jobs.append(lambda n=n, k=k: check_unisolvency(n, k, trials, seed))
    for n in (2, 3):
        for k in orders:
            jobs.append(lambda n=n, k=k: check_local_decomposition(n, k, seed=seed))
    for n in (2, 3):
        for k in orders:
            jobs.append(lambda n=n, k=k: check_face_bubble_duality(n, k, seed=seed))
    for n in (2, 3):
        for k in orders:
            jobs.append(lambda n=n, k=k: check_nc_moments(n, k, seed=seed))
    for n in (2, 3):
        for k in orders:
            jobs.append(lambda n=n, k=k: check_div_bubble_range(n, k, seed=seed))
    for n, k in sorted(NORMAL_TRACE_DIMS):
        jobs.append(lambda n=n, k=k: check_trace_dimensions(n, k, seed=seed))
    for n, k in ((2, 1), (3, 1), (3, 2), (2, 2)):
        jobs.append(lambda n=n, k=k: check_conforming_trace_bound(n, k))
    for n in (2, 3):
        jobs.append(lambda n=n: check_direct_sum_patch(n))
    meshes = [(2, 8, 0, "s1"), (2, 8, 0, "s2"), (2, 4, 1, "s1"),
              (2, 4, 2, "s1"), (3, 2, 0, "s1"), (3, 2, 0, "s2")]
    for n, m, k, kind in meshes:
        jobs.append(lambda n=n, m=m, k=k, kind=kind: check_space_dimensions(
            generate_uniform_mesh(n, m), k, kind))

    report = VerificationReport()
    if parallel:
        with ThreadPoolExecutor(max_workers=max_workers or 8) as pool:
            futures = [pool.submit(job) for job in jobs]
            for fut in futures:
                report.add(fut.result())
    else:
        for job in jobs:
            report.add(job())
    return report
