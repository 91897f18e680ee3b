"""Global stress and displacement spaces on a mesh.

Two stress spaces share the element-local machinery:

* kind "s1": the full broken P_{k+1}(S) space whose normal-trace moments up
  to degree k are continuous across interior faces.  Degrees of freedom are
  the shared face moments plus the element-interior bubble coefficients.
  The face-moment dofs come first (face id major, then the P_k(F) basis
  index, then the Cartesian component), then per element the conforming and
  nonconforming bubble coefficients.

* kind "s2" (k = 0 only): interior-face bubbles plus continuous piecewise
  linear symmetric fields.  Interior-face dofs first, then one dof per
  vertex and symmetric unit tensor.  The sum is direct only on strongly
  regular meshes, which the constructor enforces.

Displacement is discontinuous P_k, numbered element major.

For gluing, a shared face is described in canonical coordinates ordered by
global vertex id; each adjacent element passes the permutation between its
local face order and the canonical one, and the element on the minus side
(higher element id) carries sign -1 on the shared face-bubble dofs.
"""

from __future__ import annotations

import math

import numpy as np

from stressfem.local_spaces import (
    SymTensorField,
    conforming_div_bubbles,
    face_bubble_dual_basis,
    nonconforming_div_bubbles,
    rank_one_tensor_basis,
    tensor_pairs,
)
from stressfem.mesh import SimplicialMesh, is_strongly_regular
from stressfem.polynomial import (
    BarycentricPoly,
    SpaceSpec,
    orthonormal_face_basis,
    span_basis,
)

__all__ = [
    "GlobalStressSpace",
    "DisplacementSpace",
    "build_space_s1",
    "build_space_s2",
    "build_displacement_space",
    "canonical_face_permutation",
    "symmetric_unit_tensors",
    "rigid_motion_basis",
]


def canonical_face_permutation(mesh, e, i):
    """perm[s] = canonical slot (sorted global ids) of local face slot s."""
    elem = mesh.elements[e]
    gids = [int(elem[l]) for l in range(mesh.dim + 1) if l != i]
    order = sorted(range(len(gids)), key=lambda s: gids[s])
    perm = [0] * len(gids)
    for canonical, s in enumerate(order):
        perm[s] = canonical
    return perm


def symmetric_unit_tensors(n):
    """Basis E_ab of symmetric n x n matrices, pairs (a, b) with a <= b, lex."""
    out = []
    for a in range(n):
        for b in range(a, n):
            E = np.zeros((n, n))
            E[a, b] = E[b, a] = 1.0
            out.append(E)
    return out


class GlobalStressSpace:
    """Dof map plus lazy element-local field construction."""

    def __init__(self, kind, k, mesh, num_dofs, element_maps):
        self.kind = kind
        self.k = k
        self.mesh = mesh
        self.num_dofs = num_dofs
        self.element_maps = element_maps  # list of (gdofs, signs) arrays

    def element_dofs(self, e):
        return self.element_maps[e]

    def local_fields(self, e):
        """Element-local basis fields aligned with element_dofs(e).

        The sign convention lives in element_dofs; the fields returned here
        are the element's own (unsigned) duals and bubbles.
        """
        mesh = self.mesh
        geom = mesh.geometry(e)
        fields = []
        if self.kind == "s1":
            for i in range(mesh.dim + 1):
                perm = canonical_face_permutation(mesh, e, i)
                fields.extend(face_bubble_dual_basis(geom, i, self.k, perm))
            fields.extend(conforming_div_bubbles(geom, self.k))
            fields.extend(nonconforming_div_bubbles(geom, self.k))
        elif self.kind == "s2":
            for i in range(mesh.dim + 1):
                f = mesh.element_faces[e, i]
                if not mesh.face_interior[f]:
                    continue
                perm = canonical_face_permutation(mesh, e, i)
                fields.extend(face_bubble_dual_basis(geom, i, 0, perm))
            tensors = rank_one_tensor_basis(geom)
            flat = tensors.reshape(len(tensors), -1).T
            for li in range(mesh.dim + 1):
                lam = BarycentricPoly.coordinate(mesh.dim + 1, li)
                for E in symmetric_unit_tensors(mesh.dim):
                    coeffs = np.linalg.lstsq(flat, E.reshape(-1), rcond=None)[0]
                    field = SymTensorField(geom)
                    for p, c in enumerate(coeffs):
                        if abs(c) > 1e-14:
                            field.coeffs[p] = c * lam
                    fields.append(field)
        else:
            raise ValueError(f"unknown stress space kind {self.kind!r}")
        return fields


def build_space_s1(mesh: SimplicialMesh, k: int) -> GlobalStressSpace:
    """Moment-continuous broken P_{k+1}(S) space of order k in {0, 1, 2}."""
    if k not in (0, 1, 2):
        raise ValueError("order k must be 0, 1 or 2")
    n = mesh.dim
    nphi = math.comb(n - 1 + k, k)
    per_face = n * nphi
    nconf = (n * (n + 1) // 2) * (math.comb(n + k - 1, n) if k else 0)
    nnc = (n * (n + 1) // 2) * (1 if n == 2 else k + 2)
    interior_base = mesh.num_faces * per_face
    per_elem_interior = nconf + nnc

    element_maps = []
    for e in range(mesh.num_elements):
        gdofs = []
        signs = []
        for i in range(n + 1):
            f = mesh.element_faces[e, i]
            plus = mesh.face_elements[f][0] == (e, i)
            sign = 1.0 if plus else -1.0
            base = f * per_face
            for t in range(nphi):
                for m in range(n):
                    gdofs.append(base + t * n + m)
                    signs.append(sign)
        base = interior_base + e * per_elem_interior
        for a in range(per_elem_interior):
            gdofs.append(base + a)
            signs.append(1.0)
        element_maps.append((np.array(gdofs, dtype=np.int64), np.array(signs)))

    num_dofs = interior_base + mesh.num_elements * per_elem_interior
    return GlobalStressSpace("s1", k, mesh, num_dofs, element_maps)


def build_space_s2(mesh: SimplicialMesh) -> GlobalStressSpace:
    """Interior-face bubbles plus continuous P_1 symmetric fields (k = 0).

    The sum is direct only on strongly regular meshes; anything else is
    rejected because the assembled system would be singular.
    """
    if not is_strongly_regular(mesh):
        raise ValueError("the bubble plus Lagrange space needs a strongly regular mesh")
    n = mesh.dim
    nsym = n * (n + 1) // 2
    interior_ids = np.flatnonzero(mesh.face_interior)
    face_index = {int(f): a for a, f in enumerate(interior_ids)}
    vertex_base = len(interior_ids) * n

    element_maps = []
    for e in range(mesh.num_elements):
        gdofs = []
        signs = []
        for i in range(n + 1):
            f = mesh.element_faces[e, i]
            if not mesh.face_interior[f]:
                continue
            plus = mesh.face_elements[f][0] == (e, i)
            base = face_index[int(f)] * n
            for m in range(n):
                gdofs.append(base + m)
                signs.append(1.0 if plus else -1.0)
        for li in range(n + 1):
            v = int(mesh.elements[e, li])
            for q in range(nsym):
                gdofs.append(vertex_base + v * nsym + q)
                signs.append(1.0)
        element_maps.append((np.array(gdofs, dtype=np.int64), np.array(signs)))

    num_dofs = vertex_base + mesh.num_vertices * nsym
    return GlobalStressSpace("s2", 0, mesh, num_dofs, element_maps)


class DisplacementSpace:
    """Discontinuous vector P_k, element-major dofs, monomial basis."""

    def __init__(self, mesh, k):
        self.kind = "displacement"
        self.mesh = mesh
        self.k = k
        n = mesh.dim
        self.scalar_basis = span_basis(SpaceSpec.full(k), n)
        self.dofs_per_element = n * len(self.scalar_basis)
        self.num_dofs = mesh.num_elements * self.dofs_per_element

    def element_dofs(self, e):
        base = e * self.dofs_per_element
        return np.arange(base, base + self.dofs_per_element, dtype=np.int64)


def build_displacement_space(mesh: SimplicialMesh, k: int) -> DisplacementSpace:
    if k not in (0, 1, 2):
        raise ValueError("order k must be 0, 1 or 2")
    return DisplacementSpace(mesh, k)


def rigid_motion_basis(geom, k):
    """Basis of the local rigid motions R_k: translations, plus rotations for k >= 1.

    Each entry is a tuple of n barycentric polynomials (the components).
    """
    n = geom.dim
    const = [
        tuple(BarycentricPoly.constant(n + 1, 1.0 if a == b else 0.0) for b in range(n))
        for a in range(n)
    ]
    if k == 0:
        return const
    coords = []
    for a in range(n):
        p = BarycentricPoly.zero(n + 1)
        for l in range(n + 1):
            p = p + float(geom.vertices[l, a]) * BarycentricPoly.coordinate(n + 1, l)
        coords.append(p)
    zero = BarycentricPoly.zero(n + 1)
    if n == 2:
        rots = [(-1.0 * coords[1], coords[0])]
    else:
        rots = [
            (-1.0 * coords[1], coords[0], zero),
            (-1.0 * coords[2], zero, coords[0]),
            (zero, -1.0 * coords[2], coords[1]),
        ]
    return const + [tuple(r) for r in rots]
