"""Simplicial meshes: uniform generators, face tables, element geometry.

Meshes are flat arrays: vertex coordinates (nv, dim) and element
connectivity (ne, dim + 1), zero based.  The face table is built once,
deterministically (faces numbered by sorted global vertex tuple), and
records for every face its two adjacent elements in increasing element
order; the first one is the "plus" side whose outward normal is the global
face normal.
"""

from __future__ import annotations

import itertools
import json
import math

import numpy as np

__all__ = [
    "SimplexGeometry",
    "SimplicialMesh",
    "generate_uniform_mesh",
    "is_strongly_regular",
    "mesh_to_json",
    "mesh_from_json",
]


class SimplexGeometry:
    """Affine data of a single n-simplex.

    Attributes
    ----------
    vertices : (n+1, n) array
    volume : positive measure
    grads : (n+1, n) array, grads[l] = gradient of barycentric coordinate l
    tangents : (n+1, n+1, n) array, unit vector from vertex i to vertex j
    edge_lengths : (n+1, n+1) array
    face_normals : (n+1, n) array, outward unit normal of the face opposite
        vertex i (independent of element orientation)
    face_measures, face_diameters : (n+1,) arrays
    min_edge, diameter : smallest and largest edge length
    """

    def __init__(self, vertices):
        V = np.asarray(vertices, dtype=float)
        n = V.shape[1]
        if V.shape != (n + 1, n):
            raise ValueError(f"need {n + 1} vertices in {n} dimensions, got {V.shape}")
        self.vertices = V
        self.dim = n

        E = V[1:] - V[0]
        det = np.linalg.det(E)
        if det == 0.0:
            raise ValueError("degenerate simplex")
        self.volume = abs(det) / math.factorial(n)

        # barycentric coordinates: lambda = M @ (1, x)
        T = np.empty((n + 1, n + 1))
        T[0] = 1.0
        T[1:] = V.T
        M = np.linalg.inv(T)
        self._affine = M
        self.grads = M[:, 1:].copy()

        diffs = V[None, :, :] - V[:, None, :]
        self.edge_lengths = np.linalg.norm(diffs, axis=-1)
        self.diameter = float(self.edge_lengths.max())
        offdiag = self.edge_lengths[~np.eye(n + 1, dtype=bool)]
        self.min_edge = float(offdiag.min())
        lengths = np.where(self.edge_lengths == 0.0, 1.0, self.edge_lengths)
        self.tangents = diffs / lengths[:, :, None]

        gnorm = np.linalg.norm(self.grads, axis=1)
        self.face_normals = -self.grads / gnorm[:, None]
        self.face_measures = np.empty(n + 1)
        self.face_diameters = np.empty(n + 1)
        for i in range(n + 1):
            F = np.delete(V, i, axis=0)
            self.face_measures[i] = _simplex_measure(F)
            fd = np.linalg.norm(F[None, :, :] - F[:, None, :], axis=-1)
            self.face_diameters[i] = float(fd.max())

    def face_vertices(self, i):
        """Local vertex indices of the face opposite vertex i, increasing."""
        return [l for l in range(self.dim + 1) if l != i]

    def barycentric(self, points):
        """Barycentric coordinates of physical points, shape (..., n+1)."""
        pts = np.asarray(points, dtype=float)
        ones = np.ones(pts.shape[:-1] + (1,))
        aug = np.concatenate([ones, pts], axis=-1)
        return aug @ self._affine.T

    def physical(self, lams):
        """Physical coordinates of barycentric points."""
        return np.asarray(lams, dtype=float) @ self.vertices


def _simplex_measure(V):
    """Measure of a (possibly embedded) simplex from its vertex coordinates."""
    V = np.asarray(V, dtype=float)
    k = V.shape[0] - 1
    if k == 0:
        return 1.0
    E = V[1:] - V[0]
    G = E @ E.T
    return math.sqrt(abs(np.linalg.det(G))) / math.factorial(k)


class SimplicialMesh:
    """Conforming simplicial mesh with a precomputed face table."""

    def __init__(self, dim, vertices, elements):
        self.dim = int(dim)
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, self.dim)
        self.elements = np.asarray(elements, dtype=np.int64).reshape(-1, self.dim + 1)
        if self.elements.size and self.elements.max() >= len(self.vertices):
            raise ValueError("element refers to a vertex that does not exist")
        self._geom = [None] * len(self.elements)
        self._build_faces()

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.elements)

    @property
    def num_faces(self):
        return len(self.face_vertices)

    @property
    def num_interior_faces(self):
        return int(self.face_interior.sum())

    def geometry(self, e) -> SimplexGeometry:
        g = self._geom[e]
        if g is None:
            g = SimplexGeometry(self.vertices[self.elements[e]])
            self._geom[e] = g
        return g

    def _build_faces(self):
        n = self.dim
        bucket = {}
        for e, elem in enumerate(self.elements):
            for i in range(n + 1):
                key = tuple(sorted(int(v) for l, v in enumerate(elem) if l != i))
                bucket.setdefault(key, []).append((e, i))
        keys = sorted(bucket)
        for key in keys:
            if len(bucket[key]) > 2:
                raise ValueError(f"face {key} shared by more than two elements")

        nf = len(keys)
        self.face_vertices = np.array(keys, dtype=np.int64).reshape(nf, n)
        self.face_elements = []
        self.face_interior = np.zeros(nf, dtype=bool)
        self.face_normals = np.empty((nf, n))
        self.face_measures = np.empty(nf)
        self.face_diameters = np.empty(nf)
        self.face_scales = np.empty(nf)
        self.element_faces = np.empty((len(self.elements), n + 1), dtype=np.int64)
        for f, key in enumerate(keys):
            sides = sorted(bucket[key])
            self.face_elements.append(tuple(sides))
            self.face_interior[f] = len(sides) == 2
            for e, i in sides:
                self.element_faces[e, i] = f
            e0, i0 = sides[0]
            g = self.geometry(e0)
            self.face_normals[f] = g.face_normals[i0]
            self.face_measures[f] = g.face_measures[i0]
            self.face_diameters[f] = g.face_diameters[i0]
            # penalty length scale: smallest edge among the adjacent elements,
            # so right-simplex grids get one uniform weight per level
            self.face_scales[f] = min(
                self.geometry(e).min_edge for e, i in sides)

        if self.num_faces + self.num_interior_faces != (n + 1) * self.num_elements:
            raise AssertionError("face table inconsistent with element count")


def generate_uniform_mesh(dim, m) -> SimplicialMesh:
    """Uniform simplicial mesh of the unit square or cube, m cells per side.

    2D: each cell is split along the diagonal from (0,0) to (1,1) into two
    triangles.  3D: each cell is split into six tetrahedra sharing the main
    diagonal, one per ordering of the axes, so neighbouring cells match
    face to face.
    """
    if m < 1:
        raise ValueError("need at least one cell per side")
    if dim == 2:
        xs = np.linspace(0.0, 1.0, m + 1)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

        def vid(ix, iy):
            return ix * (m + 1) + iy

        elements = []
        for ix in range(m):
            for iy in range(m):
                v00 = vid(ix, iy)
                v10 = vid(ix + 1, iy)
                v01 = vid(ix, iy + 1)
                v11 = vid(ix + 1, iy + 1)
                elements.append((v00, v10, v11))
                elements.append((v00, v11, v01))
        return SimplicialMesh(2, vertices, elements)

    if dim == 3:
        xs = np.linspace(0.0, 1.0, m + 1)
        X, Y, Z = np.meshgrid(xs, xs, xs, indexing="ij")
        vertices = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

        def vid(ix, iy, iz):
            return (ix * (m + 1) + iy) * (m + 1) + iz

        corners = np.array(list(itertools.product((0, 1), repeat=3)))
        elements = []
        for ix in range(m):
            for iy in range(m):
                for iz in range(m):
                    base = np.array([ix, iy, iz])
                    for perm in itertools.permutations(range(3)):
                        # lattice path 0 -> e_p0 -> e_p0 + e_p1 -> (1,1,1)
                        offs = np.zeros((4, 3), dtype=int)
                        offs[1] = offs[0]
                        offs[1][perm[0]] = 1
                        offs[2] = offs[1].copy()
                        offs[2][perm[1]] = 1
                        offs[3] = (1, 1, 1)
                        tet = [vid(*(base + o)) for o in offs]
                        E = vertices[tet[1:]] - vertices[tet[0]]
                        if np.linalg.det(E) < 0:
                            tet[2], tet[3] = tet[3], tet[2]
                        elements.append(tuple(tet))
        del corners
        return SimplicialMesh(3, vertices, elements)

    raise ValueError(f"dimension {dim} not supported")


def is_strongly_regular(mesh, tol=1e-12) -> bool:
    """Whether every interior face satisfies the non-parallel vertex condition.

    Across a face shared by elements with opposite vertices a and a', the
    mesh is strongly regular when for every shared vertex v the directions
    v - a and v - a' are not parallel.
    """
    for f in range(mesh.num_faces):
        if not mesh.face_interior[f]:
            continue
        (e0, i0), (e1, i1) = mesh.face_elements[f]
        a0 = mesh.vertices[mesh.elements[e0, i0]]
        a1 = mesh.vertices[mesh.elements[e1, i1]]
        for v in mesh.face_vertices[f]:
            u = mesh.vertices[v] - a0
            w = mesh.vertices[v] - a1
            if mesh.dim == 2:
                cross = abs(u[0] * w[1] - u[1] * w[0])
            else:
                cross = np.linalg.norm(np.cross(u, w))
            if cross <= tol * np.linalg.norm(u) * np.linalg.norm(w):
                return False
    return True


def mesh_to_json(mesh, path=None):
    """Serialise a mesh to {dim, vertices, elements}; write to `path` if given."""
    data = {
        "dim": mesh.dim,
        "vertices": mesh.vertices.tolist(),
        "elements": mesh.elements.tolist(),
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(data, fh)
    return data


def mesh_from_json(source) -> SimplicialMesh:
    """Load a mesh from a dict, a JSON string, or a file path."""
    if isinstance(source, dict):
        data = source
    elif isinstance(source, (str, bytes)) and str(source).lstrip().startswith("{"):
        data = json.loads(source)
    else:
        with open(source) as fh:
            data = json.load(fh)
    return SimplicialMesh(data["dim"], data["vertices"], data["elements"])
