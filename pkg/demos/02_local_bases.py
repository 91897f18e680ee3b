"""Inside one element: the three-way split of the local stress space.

The symmetric-tensor polynomials of degree k+1 on a simplex decompose
into conforming div-bubbles (zero normal trace everywhere), nonconforming
div-bubbles (normal trace invisible to all face moments up to degree k),
and one dual family of face bubbles per face.  The face bubbles are built
to be exactly dual to the face moment degrees of freedom, which is what
makes the global assembly a book-keeping exercise.
"""

import math

import numpy as np

from stressfem import SimplexGeometry, local_decomposition
from stressfem.local_spaces import (
    face_bubble_dual_basis,
    face_moment_dof,
    tensor_pairs,
)

rng = np.random.default_rng(3)

for n, k in [(2, 1), (3, 0)]:
    verts = rng.normal(size=(n + 1, n))
    while abs(np.linalg.det(verts[1:] - verts[0])) < 0.3:
        verts = rng.normal(size=(n + 1, n))
    geom = SimplexGeometry(verts)
    basis = local_decomposition(geom, k)

    npairs = len(tensor_pairs(n))
    full = npairs * math.comb(n + k + 1, n)
    nconf = basis.conforming_slice.stop - basis.conforming_slice.start
    nnc = basis.nonconforming_slice.stop - basis.nonconforming_slice.start
    per_face = basis.face_slices[0].stop - basis.face_slices[0].start
    print(f"n = {n}, k = {k}: full space dim {full} (basis dim {basis.dim})")
    print(f"  conforming div-bubbles:    {nconf}")
    print(f"  nonconforming div-bubbles: {nnc}")
    print(f"  face bubbles:              {(n + 1) * per_face} "
          f"({n + 1} faces x {per_face})")

    # Duality: face moment (t, m) applied to face bubble (t', m') is the
    # Kronecker delta.  One face shown; the rest are identical by symmetry.
    bubbles = face_bubble_dual_basis(geom, 0, k)
    D = np.empty((per_face, per_face))
    for a in range(per_face):
        t, direction = divmod(a, n)
        for b, tau in enumerate(bubbles):
            D[a, b] = face_moment_dof(tau, 0, t, direction, k)
    off = np.abs(D - np.eye(per_face)).max()
    print(f"  duality matrix on face 0: max |D - I| = {off:.2e}")

    sample = basis.fields[basis.face_slices[0].start]
    print(f"  sample face bubble: degree {sample.degree}, "
          f"|tau|_L2 = {sample.l2_norm():.3f}, "
          f"|div tau|_L2 = {sample.div_l2_norm():.3f}")
