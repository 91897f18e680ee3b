"""Bilinear forms and the saddle-point system.

The discrete problem: find (sigma_h, u_h) with

    a_h(sigma_h, tau) + b_h(tau, u_h) = 0        for all tau,
    b_h(sigma_h, v)                  = (f, v)    for all v,

where a_h(sigma, tau) = (A sigma, tau) + eta * sum over interior faces of
h_F^{-1} int_F [sigma].[tau], b_h(tau, v) = sum over elements of
(div tau, v), and [tau] = tau+ nu+ + tau- nu- is the jump of the normal
trace.  A is the compliance tensor of isotropic elasticity.

Everything except the right-hand side is a polynomial integral and is
assembled exactly from cached per-shape element data: congruent elements
(same vertex offsets and face orientations) share their local matrices, so
uniform meshes assemble at numpy speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from stressfem.global_spaces import (
    DisplacementSpace,
    GlobalStressSpace,
    build_displacement_space,
    build_space_s1,
    build_space_s2,
    canonical_face_permutation,
)
from stressfem.local_spaces import rank_one_tensor_basis
from stressfem.mesh import SimplicialMesh
from stressfem.polynomial import (
    exponents_homogeneous,
    exponents_up_to,
    monomial_product_integrals,
    monomial_values,
    quadrature_rule,
)

__all__ = [
    "Material",
    "CompiledElement",
    "SaddlePointSystem",
    "compile_element",
    "assemble_a",
    "assemble_b",
    "assemble_rhs",
    "assemble_penalty",
    "assemble_stress_l2_gram",
    "assemble_stress_div_gram",
    "assemble_displacement_mass",
    "build_saddle_system",
    "face_jump_square_norms",
]


@dataclass(frozen=True)
class Material:
    """Isotropic linear elasticity, Lame parameters mu and lam.

    The compliance tensor inverts sigma = 2 mu eps + lam tr(eps) I:
    A sigma = sigma / (2 mu) - lam tr(sigma) I / (2 mu (2 mu + n lam)).
    """

    mu: float = 0.5
    lam: float = 1.0

    def compliance_coefficients(self, n):
        c1 = 1.0 / (2.0 * self.mu)
        c2 = self.lam / (2.0 * self.mu * (2.0 * self.mu + n * self.lam))
        return c1, c2

    def compliance_apply(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        n = sigma.shape[-1]
        c1, c2 = self.compliance_coefficients(n)
        tr = np.trace(sigma, axis1=-2, axis2=-1)
        return c1 * sigma - c2 * tr[..., None, None] * np.eye(n)

    def stress_from_strain(self, eps):
        eps = np.asarray(eps, dtype=float)
        n = eps.shape[-1]
        tr = np.trace(eps, axis1=-2, axis2=-1)
        return 2.0 * self.mu * eps + self.lam * tr[..., None, None] * np.eye(n)


@dataclass
class CompiledElement:
    """Per-shape arrays for one element of a stress space.

    C : (nloc, npairs, nmono) coefficients against the rank-one tensors and
        the monomials of degree <= k+1.
    D : (nloc, n, ndiv) divergence components against degree <= k monomials.
    face_touch[i] : local field indices with nonzero trace on face i.
    face_traces[i] : (ntouch, n, nface) normal-trace components on face i in
        canonical face coordinates, element-outward normal.
    """

    volume: float
    face_measures: np.ndarray
    face_diameters: np.ndarray
    tensors: np.ndarray
    pair_gram: np.ndarray
    C: np.ndarray
    D: np.ndarray
    face_touch: list
    face_traces: list


def stress_monomials(n, k):
    return exponents_up_to(n + 1, k + 1)


def div_monomials(n, k):
    return exponents_up_to(n + 1, k)


def face_monomials(n, k):
    return exponents_up_to(n, k + 1)


def _element_signature(space, e):
    mesh = space.mesh
    verts = mesh.vertices[mesh.elements[e]]
    shape = np.round(verts[1:] - verts[0], 12).tobytes()
    perms = tuple(
        tuple(canonical_face_permutation(mesh, e, i)) for i in range(mesh.dim + 1))
    if space.kind == "s2":
        mask = tuple(bool(mesh.face_interior[mesh.element_faces[e, i]])
                     for i in range(mesh.dim + 1))
        return shape, perms, mask
    return shape, perms


def compile_element(space: GlobalStressSpace, e: int) -> CompiledElement:
    cache = space.__dict__.setdefault("_compile_cache", {})
    per_elem = space.__dict__.setdefault(
        "_compiled", [None] * space.mesh.num_elements)
    ce = per_elem[e]
    if ce is not None:
        return ce
    key = _element_signature(space, e)
    ce = cache.get(key)
    if ce is None:
        ce = _build_compiled(space, e)
        cache[key] = ce
    per_elem[e] = ce
    return ce


def _build_compiled(space, e):
    mesh = space.mesh
    n = mesh.dim
    k = space.k
    geom = mesh.geometry(e)
    fields = space.local_fields(e)
    nloc = len(fields)

    exps1 = stress_monomials(n, k)
    idx1 = {ex: a for a, ex in enumerate(exps1)}
    exps0 = div_monomials(n, k)
    idx0 = {ex: a for a, ex in enumerate(exps0)}
    fexps = face_monomials(n, k)
    fidx = {ex: a for a, ex in enumerate(fexps)}

    tensors = rank_one_tensor_basis(geom)
    npairs = len(tensors)
    C = np.zeros((nloc, npairs, len(exps1)))
    D = np.zeros((nloc, n, len(exps0)))
    for p, field in enumerate(fields):
        for a, poly in enumerate(field.coeffs):
            for ex, c in poly.terms.items():
                C[p, a, idx1[ex]] += c
        for a, poly in enumerate(field.divergence()):
            for ex, c in poly.terms.items():
                D[p, a, idx0[ex]] += c

    face_touch = []
    face_traces = []
    for i in range(n + 1):
        perm = canonical_face_permutation(mesh, e, i)
        inv = [0] * n
        for s, c in enumerate(perm):
            inv[c] = s
        rows = []
        touch = []
        for p, field in enumerate(fields):
            trace = field.normal_trace(i)
            arr = np.zeros((n, len(fexps)))
            nonzero = False
            for a, poly in enumerate(trace):
                for ex, c in poly.terms.items():
                    canon = tuple(ex[inv[s]] for s in range(n))
                    arr[a, fidx[canon]] += c
                    nonzero = True
            if nonzero and np.abs(arr).max() > 1e-13:
                rows.append(arr)
                touch.append(p)
        face_touch.append(np.array(touch, dtype=np.int64))
        face_traces.append(
            np.array(rows) if rows else np.zeros((0, n, len(fexps))))

    pair_gram = np.einsum("aij,bij->ab", tensors, tensors)
    return CompiledElement(
        volume=geom.volume,
        face_measures=geom.face_measures.copy(),
        face_diameters=geom.face_diameters.copy(),
        tensors=tensors,
        pair_gram=pair_gram,
        C=C,
        D=D,
        face_touch=face_touch,
        face_traces=face_traces,
    )


# ---------------------------------------------------------------------------
# volume matrices


def _stress_volume_matrices(space):
    """L2 Gram, trace-trace Gram, and div-div Gram of the stress basis."""
    cached = space.__dict__.get("_volume_mats")
    if cached is not None:
        return cached
    mesh = space.mesh
    n, k = mesh.dim, space.k
    W1 = monomial_product_integrals(n + 1, k + 1, k + 1)
    W0 = monomial_product_integrals(n + 1, k, k)
    rows, cols = [], []
    frob_vals, tr_vals, div_vals = [], [], []
    for e in range(mesh.num_elements):
        ce = compile_element(space, e)
        gd, sg = space.element_dofs(e)
        CW = np.einsum("pam,mn->pan", ce.C, W1)
        frob = ce.volume * np.einsum("pan,ab,qbn->pq", CW, ce.pair_gram, ce.C)
        S = ce.C.sum(axis=1)
        tr = ce.volume * (S @ W1 @ S.T)
        DW = np.einsum("pam,mn->pan", ce.D, W0)
        div = ce.volume * np.einsum("pan,qan->pq", DW, ce.D)
        scale = np.outer(sg, sg)
        grid = np.meshgrid(gd, gd, indexing="ij")
        rows.append(grid[0].ravel())
        cols.append(grid[1].ravel())
        frob_vals.append((scale * frob).ravel())
        tr_vals.append((scale * tr).ravel())
        div_vals.append((scale * div).ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    shape = (space.num_dofs, space.num_dofs)
    mats = tuple(
        sp.coo_matrix((np.concatenate(v), (rows, cols)), shape=shape).tocsr()
        for v in (frob_vals, tr_vals, div_vals))
    space.__dict__["_volume_mats"] = mats
    return mats


def assemble_stress_l2_gram(space):
    return _stress_volume_matrices(space)[0]


def assemble_stress_div_gram(space):
    return _stress_volume_matrices(space)[2]


def assemble_penalty(space):
    """Sum over interior faces of h_F^{-1} int_F [tau].[sigma], eta excluded.

    The length scale h_F is the smallest edge among the elements sharing F
    (mesh.face_scales).
    """
    cached = space.__dict__.get("_penalty_mat")
    if cached is not None:
        return cached
    mesh = space.mesh
    n, k = mesh.dim, space.k
    Wf = monomial_product_integrals(n, k + 1, k + 1)
    rows, cols, vals = [], [], []
    for f in range(mesh.num_faces):
        if not mesh.face_interior[f]:
            continue
        blocks = []
        dofs = []
        for e, i in mesh.face_elements[f]:
            ce = compile_element(space, e)
            touch = ce.face_touch[i]
            if len(touch) == 0:
                continue
            gd, sg = space.element_dofs(e)
            blocks.append(ce.face_traces[i] * sg[touch, None, None])
            dofs.append(gd[touch])
        if not blocks:
            continue
        J = np.concatenate(blocks, axis=0)
        gdofs = np.concatenate(dofs)
        area = mesh.face_measures[f]
        h = mesh.face_scales[f]
        JW = J @ Wf
        P = (area / h) * np.tensordot(JW, J, axes=([1, 2], [1, 2]))
        grid = np.meshgrid(gdofs, gdofs, indexing="ij")
        rows.append(grid[0].ravel())
        cols.append(grid[1].ravel())
        vals.append(P.ravel())
    shape = (space.num_dofs, space.num_dofs)
    if rows:
        out = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=shape).tocsr()
    else:
        out = sp.csr_matrix(shape)
    space.__dict__["_penalty_mat"] = out
    return out


def assemble_a(space, material: Material, eta: float):
    """Compliance mass plus the eta-weighted interior-penalty term."""
    frob, tr, _ = _stress_volume_matrices(space)
    c1, c2 = material.compliance_coefficients(space.mesh.dim)
    A = (c1 * frob - c2 * tr).tocsr()
    if eta:
        A = (A + eta * assemble_penalty(space)).tocsr()
    return A


def assemble_b(space, disp: DisplacementSpace):
    """b_h(tau, v) = sum over elements of (div tau, v); shape (nV, nSigma)."""
    mesh = space.mesh
    n, k = mesh.dim, space.k
    if disp.k != k:
        raise ValueError("stress and displacement orders must match")
    W0 = monomial_product_integrals(n + 1, k, k)
    exps0 = div_monomials(n, k)
    hom = exponents_homogeneous(n + 1, k)
    sel = np.array([exps0.index(h) for h in hom])
    Wsel = W0[:, sel]
    rows, cols, vals = [], [], []
    for e in range(mesh.num_elements):
        ce = compile_element(space, e)
        gd, sg = space.element_dofs(e)
        vd = disp.element_dofs(e)
        B = ce.volume * np.einsum("pam,mh->pha", ce.D, Wsel)
        B = B.reshape(len(gd), -1) * sg[:, None]
        grid = np.meshgrid(vd, gd, indexing="ij")
        rows.append(grid[0].ravel())
        cols.append(grid[1].ravel())
        vals.append(B.T.ravel())
    out = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(disp.num_dofs, space.num_dofs)).tocsr()
    return out


def assemble_displacement_mass(disp: DisplacementSpace):
    mesh = disp.mesh
    n, k = mesh.dim, disp.k
    W0 = monomial_product_integrals(n + 1, k, k)
    exps0 = div_monomials(n, k)
    hom = exponents_homogeneous(n + 1, k)
    sel = np.array([exps0.index(h) for h in hom])
    G = W0[np.ix_(sel, sel)]
    nh = len(hom)
    nloc = disp.dofs_per_element
    Mloc = np.zeros((nloc, nloc))
    for h1 in range(nh):
        for h2 in range(nh):
            for a in range(n):
                Mloc[h1 * n + a, h2 * n + a] = G[h1, h2]
    rows, cols, vals = [], [], []
    for e in range(mesh.num_elements):
        vol = mesh.geometry(e).volume
        vd = disp.element_dofs(e)
        grid = np.meshgrid(vd, vd, indexing="ij")
        rows.append(grid[0].ravel())
        cols.append(grid[1].ravel())
        vals.append((vol * Mloc).ravel())
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(disp.num_dofs, disp.num_dofs)).tocsr()


def assemble_rhs(disp: DisplacementSpace, f, degree=None, rule=None):
    """Load vector (f, v) by quadrature; default exactness k + 6.

    Pass an explicit rule to override the default, e.g. to match a
    reference computation that used a specific low-order rule.
    """
    mesh = disp.mesh
    n, k = mesh.dim, disp.k
    if rule is None:
        if degree is None:
            degree = k + 6
        rule = quadrature_rule(n, degree)
    hom = exponents_homogeneous(n + 1, k)
    hv = monomial_values(hom, rule.points)  # (nq, nh), mesh independent
    scale = math.factorial(n)
    out = np.zeros(disp.num_dofs)
    for e in range(mesh.num_elements):
        geom = mesh.geometry(e)
        pts = rule.points @ geom.vertices
        fv = np.asarray(f(pts), dtype=float).reshape(len(pts), n)
        loc = geom.volume * scale * np.einsum(
            "q,qh,qa->ha", rule.weights, hv, fv)
        out[disp.element_dofs(e)] = loc.ravel()
    return out


def face_jump_square_norms(space, coeffs):
    """Per interior face, the squared L2 norm of the jump of the stress field."""
    mesh = space.mesh
    n, k = mesh.dim, space.k
    Wf = monomial_product_integrals(n, k + 1, k + 1)
    out = {}
    for f in range(mesh.num_faces):
        if not mesh.face_interior[f]:
            continue
        jump = None
        for e, i in mesh.face_elements[f]:
            ce = compile_element(space, e)
            touch = ce.face_touch[i]
            if len(touch) == 0:
                continue
            gd, sg = space.element_dofs(e)
            c = sg[touch] * coeffs[gd[touch]]
            contrib = np.einsum("r,rcm->cm", c, ce.face_traces[i])
            jump = contrib if jump is None else jump + contrib
        if jump is None:
            out[f] = 0.0
        else:
            out[f] = float(mesh.face_measures[f]
                           * np.einsum("cm,mn,cn->", jump, Wf, jump))
    return out


# ---------------------------------------------------------------------------
# the coupled system


@dataclass
class SaddlePointSystem:
    """[[A, B^T], [B, 0]] (sigma, u) = (0, F)."""

    A: sp.csr_matrix
    B: sp.csr_matrix
    rhs: np.ndarray
    stress_space: GlobalStressSpace
    displacement_space: DisplacementSpace
    material: Material
    eta: float

    @property
    def num_stress_dofs(self):
        return self.stress_space.num_dofs

    @property
    def num_displacement_dofs(self):
        return self.displacement_space.num_dofs

    def full_matrix(self):
        return sp.bmat([[self.A, self.B.T], [self.B, None]], format="csc")

    def full_rhs(self):
        out = np.zeros(self.num_stress_dofs + self.num_displacement_dofs)
        out[self.num_stress_dofs:] = self.rhs
        return out

    def export_matrix_market(self, prefix):
        from scipy.io import mmwrite

        mmwrite(f"{prefix}_a.mtx", self.A)
        mmwrite(f"{prefix}_b.mtx", self.B)
        mmwrite(f"{prefix}_rhs.mtx", self.rhs.reshape(-1, 1))


def build_saddle_system(mesh: SimplicialMesh, k: int, kind: str,
                        material: Material = None, eta: float = 1.0,
                        load=None, rhs_degree=None,
                        rhs_rule=None) -> SaddlePointSystem:
    """Assemble the full discrete system for one of the two stress spaces."""
    if material is None:
        material = Material()
    if kind == "s1":
        space = build_space_s1(mesh, k)
    elif kind == "s2":
        if k != 0:
            raise ValueError("the bubble plus Lagrange space is lowest order only")
        space = build_space_s2(mesh)
    else:
        raise ValueError(f"unknown stress space kind {kind!r}")
    disp = build_displacement_space(mesh, k)
    A = assemble_a(space, material, eta)
    B = assemble_b(space, disp)
    if load is None:
        rhs = np.zeros(disp.num_dofs)
    else:
        rhs = assemble_rhs(disp, load, rhs_degree, rule=rhs_rule)
    return SaddlePointSystem(A, B, rhs, space, disp, material, eta)
