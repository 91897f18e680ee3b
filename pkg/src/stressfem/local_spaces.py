"""Element-local symmetric-stress polynomial spaces.

The local stress space on an n-simplex K is P_{k+1}(K; S) with S the
symmetric n x n tensors.  It is spanned, in a way that mirrors the degrees
of freedom, by three families built on the rank-one tensors T_ij = t_ij
t_ij^T of the edge directions:

* conforming divergence bubbles  l_i l_j P_{k-1}(K) T_ij   (zero normal
  trace on every face),
* face bubbles, one dual family per face, with normal-trace moments
  biorthogonal to an orthonormal basis of P_k(F)^n on that face,
* nonconforming divergence bubbles  E(q) T_ij with q in the L2 complement
  of P_k inside P_{k+1} on a face (zero normal-trace moments up to degree
  k on every face, nonzero pointwise trace).

All fields are polynomial in barycentric coordinates, so every integral
here is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from stressfem.mesh import SimplexGeometry
from stressfem.polynomial import (
    BarycentricPoly,
    SpaceSpec,
    extend_from_face,
    face_vertex_slots,
    orthonormal_face_basis,
    permute_coordinates,
    perp_complement_basis,
    span_basis,
)

__all__ = [
    "SymTensorField",
    "LocalStressBasis",
    "tensor_pairs",
    "rank_one_tensor_basis",
    "conforming_div_bubbles",
    "nonconforming_div_bubbles",
    "face_bubble_dual_basis",
    "face_moment_dof",
    "local_decomposition",
    "weighted_dual_polynomials",
]


@lru_cache(maxsize=None)
def tensor_pairs(n: int) -> tuple:
    """Vertex pairs (i, j) with i < j, lexicographic; one per edge of the simplex."""
    return tuple((i, j) for i in range(n + 1) for j in range(i + 1, n + 1))


def rank_one_tensor_basis(geom: SimplexGeometry) -> np.ndarray:
    """The n(n+1)/2 rank-one tensors t_ij t_ij^T, ordered like tensor_pairs.

    They span S for any nondegenerate simplex, and T_ij annihilates the
    normal of every face containing the edge (i, j): T_ij nu_F = 0 exactly
    when F is opposite neither i nor j.
    """
    pairs = tensor_pairs(geom.dim)
    out = np.empty((len(pairs), geom.dim, geom.dim))
    for p, (i, j) in enumerate(pairs):
        t = geom.tangents[i, j]
        out[p] = np.outer(t, t)
    return out


class SymTensorField:
    """Symmetric-tensor polynomial field on one element.

    Stored as scalar barycentric polynomials against the rank-one tensor
    basis: tau = sum_p q_p(x) T_p.
    """

    __slots__ = ("geom", "coeffs")

    def __init__(self, geom, coeffs=None):
        self.geom = geom
        npairs = len(tensor_pairs(geom.dim))
        if coeffs is None:
            coeffs = [BarycentricPoly.zero(geom.dim + 1) for _ in range(npairs)]
        self.coeffs = list(coeffs)

    @classmethod
    def from_pair(cls, geom, pair_index, poly):
        out = cls(geom)
        out.coeffs[pair_index] = poly
        return out

    def __add__(self, other):
        return SymTensorField(
            self.geom, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return SymTensorField(
            self.geom, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, scalar):
        return SymTensorField(self.geom, [c * scalar for c in self.coeffs])

    __rmul__ = __mul__

    @property
    def degree(self):
        return max(c.degree for c in self.coeffs)

    def evaluate(self, lams) -> np.ndarray:
        """Tensor values at barycentric points, shape (..., n, n)."""
        tensors = rank_one_tensor_basis(self.geom)
        lams = np.asarray(lams, dtype=float)
        out = np.zeros(lams.shape[:-1] + (self.geom.dim, self.geom.dim))
        for p, q in enumerate(self.coeffs):
            if q.terms:
                out += q.evaluate(lams)[..., None, None] * tensors[p]
        return out

    def divergence(self) -> list:
        """Row-wise divergence as n barycentric polynomials.

        div(q T_ij) = (t_ij . grad q) t_ij because T_ij is constant.
        """
        g = self.geom
        out = [BarycentricPoly.zero(g.dim + 1) for _ in range(g.dim)]
        for p, (i, j) in enumerate(tensor_pairs(g.dim)):
            q = self.coeffs[p]
            if not q.terms:
                continue
            t = g.tangents[i, j]
            slopes = tuple(float(t @ g.grads[l]) for l in range(g.dim + 1))
            dq = q.directional(slopes)
            for a in range(g.dim):
                if t[a]:
                    out[a] = out[a] + dq * float(t[a])
        return out

    def normal_trace(self, i) -> list:
        """Components of tau nu on face i, as polynomials in the face coordinates.

        Face coordinates follow the element-local slot order (increasing
        local vertex index, skipping i); the normal is the element-outward
        one.
        """
        g = self.geom
        nu = g.face_normals[i]
        tensors = rank_one_tensor_basis(g)
        out = [BarycentricPoly.zero(g.dim) for _ in range(g.dim)]
        for p, q in enumerate(self.coeffs):
            if not q.terms:
                continue
            tv = tensors[p] @ nu
            if not tv.any():
                continue
            r = q.restrict(i)
            for a in range(g.dim):
                if tv[a]:
                    out[a] = out[a] + r * float(tv[a])
        return out

    def frobenius(self, other) -> BarycentricPoly:
        """Pointwise tau : sigma as a scalar polynomial."""
        tensors = rank_one_tensor_basis(self.geom)
        dots = np.einsum("aij,bij->ab", tensors, tensors)
        out = BarycentricPoly.zero(self.geom.dim + 1)
        for a, qa in enumerate(self.coeffs):
            if not qa.terms:
                continue
            for b, qb in enumerate(other.coeffs):
                if qb.terms and dots[a, b]:
                    out = out + (qa * qb) * float(dots[a, b])
        return out

    def trace_poly(self) -> BarycentricPoly:
        """Pointwise matrix trace; the rank-one tensors all have unit trace."""
        out = BarycentricPoly.zero(self.geom.dim + 1)
        for q in self.coeffs:
            out = out + q
        return out

    def l2_norm(self) -> float:
        return float(np.sqrt(self.frobenius(self).integral(self.geom.volume)))

    def div_l2_norm(self) -> float:
        div = self.divergence()
        total = sum((d * d).integral(self.geom.volume) for d in div)
        return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# bubble families


def conforming_div_bubbles(geom, k) -> list:
    """l_i l_j P_{k-1}(K) T_ij for every edge; empty for k = 0.

    Zero normal trace on all faces, so they are H(div)-conforming with
    vanishing boundary contribution.
    """
    n = geom.dim
    if k < 1:
        return []
    scalar = span_basis(SpaceSpec.full(k - 1), n)
    fields = []
    for p, (i, j) in enumerate(tensor_pairs(n)):
        li = BarycentricPoly.coordinate(n + 1, i)
        lj = BarycentricPoly.coordinate(n + 1, j)
        for q in scalar:
            fields.append(SymTensorField.from_pair(geom, p, li * lj * q))
    return fields


def nonconforming_div_bubbles(geom, k) -> list:
    """Extensions of L2-complement face polynomials times the edge tensors.

    For each edge (i, j), i < j, and each q in the complement of P_k inside
    P_{k+1} on face j, the field extends q from face j avoiding vertex i and
    multiplies T_ij.  Moments of the normal trace against P_k vanish on
    every face; the pointwise trace does not.
    """
    n = geom.dim
    perp = perp_complement_basis(n - 1, k)
    fields = []
    for p, (i, j) in enumerate(tensor_pairs(n)):
        for q in perp:
            ext = extend_from_face(q, j, i)
            fields.append(SymTensorField.from_pair(geom, p, ext))
    return fields


@lru_cache(maxsize=None)
def weighted_dual_polynomials(face_dim: int, k: int, slot: int) -> tuple:
    """Polynomials p_s on a face with (1/|F|) int c_slot p_s phi_t = delta_st.

    phi_t is the orthonormal basis of P_k(F) and c_slot the barycentric
    coordinate of the face used as a weight.  Shape independent, so cached
    per (face_dim, k, slot).  For k = 0 the dual is the constant face_dim+1.
    """
    phis = orthonormal_face_basis(face_dim, k)
    c = BarycentricPoly.coordinate(face_dim + 1, slot)
    A = np.empty((len(phis), len(phis)))
    for r, pr in enumerate(phis):
        for t, pt in enumerate(phis):
            A[r, t] = (c * pr * pt).integral()
    X = np.linalg.inv(A)  # rows: dual polynomials in the phi basis
    out = []
    for s in range(len(phis)):
        p = BarycentricPoly.zero(face_dim + 1)
        for r in range(len(phis)):
            if X[s, r]:
                p = p + X[s, r] * phis[r]
        out.append(p)
    return tuple(out)


def face_bubble_dual_basis(geom, i, k, canonical_perm=None) -> list:
    """Stress fields on K dual to the normal-trace moments of face i.

    Returns fields ordered s-major, l-minor: entry (s, l) has
    int_F (tau nu) . e_l' phi_t ds = delta_st delta_ll' against the
    orthonormal P_k(F) basis phi_t and the global Cartesian directions,
    with nu the element-outward normal of face i; moments on the other
    faces vanish because each summand has zero trace there.

    canonical_perm[s] names the face-coordinate slot, in whatever order the
    basis phi_t is written, that corresponds to element-local face slot s.
    Two elements sharing a face pass complementary permutations so that the
    moments on both sides are taken against the same polynomials.
    """
    n = geom.dim
    slots = face_vertex_slots(n, i)
    if canonical_perm is None:
        canonical_perm = list(range(n))
    phis = orthonormal_face_basis(n - 1, k)
    nu = geom.face_normals[i]
    area = geom.face_measures[i]
    fields = []
    pair_index = {p: a for a, p in enumerate(tensor_pairs(n))}
    for s in range(len(phis)):
        extended = {}
        for slot, j in enumerate(slots):
            dual = weighted_dual_polynomials(n - 1, k, canonical_perm[slot])[s]
            local = permute_coordinates(dual, canonical_perm)
            extended[j] = extend_from_face(local, i, None)
        for l in range(n):
            field = SymTensorField(geom)
            for slot, j in enumerate(slots):
                alpha = float(geom.grads[j][l]) * geom.edge_lengths[i, j]
                if alpha == 0.0:
                    continue
                t = geom.tangents[i, j]
                denom = float(t @ nu)
                lam_j = BarycentricPoly.coordinate(n + 1, j)
                poly = (alpha / (denom * area)) * (lam_j * extended[j])
                a = pair_index[(min(i, j), max(i, j))]
                field.coeffs[a] = field.coeffs[a] + poly
            fields.append(field)
    return fields


def face_moment_dof(tau: SymTensorField, i: int, t: int, m: int, k: int,
                    canonical_perm=None) -> float:
    """Moment int_F (tau nu).e_m phi_t ds on face i, element-outward normal."""
    phi = orthonormal_face_basis(tau.geom.dim - 1, k)[t]
    if canonical_perm is not None:
        phi = permute_coordinates(phi, canonical_perm)
    trace = tau.normal_trace(i)[m]
    return (trace * phi).integral(tau.geom.face_measures[i])


# ---------------------------------------------------------------------------
# the full local basis


@dataclass
class LocalStressBasis:
    """Basis of P_{k+1}(K; S) grouped by degree-of-freedom type.

    fields = [face bubbles of face 0, ..., face n] + conforming + nonconforming;
    the slices record where each group sits.
    """

    geom: SimplexGeometry
    degree: int
    fields: list
    face_slices: list
    conforming_slice: slice
    nonconforming_slice: slice

    @property
    def dim(self):
        return len(self.fields)


def local_decomposition(geom, k) -> LocalStressBasis:
    """Assemble the three families into a basis of P_{k+1}(K; S).

    The count n(n+1)/2 * dim P_{k+1} is matched exactly; independence of
    the three families is verified numerically by the structural checks.
    """
    n = geom.dim
    fields = []
    face_slices = []
    for i in range(n + 1):
        bubbles = face_bubble_dual_basis(geom, i, k)
        face_slices.append(slice(len(fields), len(fields) + len(bubbles)))
        fields.extend(bubbles)
    conf = conforming_div_bubbles(geom, k)
    conf_slice = slice(len(fields), len(fields) + len(conf))
    fields.extend(conf)
    nc = nonconforming_div_bubbles(geom, k)
    nc_slice = slice(len(fields), len(fields) + len(nc))
    fields.extend(nc)
    return LocalStressBasis(geom, k, fields, face_slices, conf_slice, nc_slice)
