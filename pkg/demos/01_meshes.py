"""Uniform simplicial grids: construction, JSON round trip, regularity.

The solver meshes the unit square or cube by slicing an m x m (x m) grid
of cells into triangles or tetrahedra.  Every interior face of these
grids satisfies the strong regularity condition the reduced stress space
needs: across each shared face, matching edges from the two opposite
vertices are never parallel.
"""

import json

from stressfem import (
    SimplicialMesh,
    generate_uniform_mesh,
    is_strongly_regular,
    mesh_from_json,
    mesh_to_json,
)

for dim, m in [(2, 4), (3, 2)]:
    mesh = generate_uniform_mesh(dim, m)
    print(f"dim {dim}, m = {m}:")
    print(f"  {mesh.num_vertices} vertices, {mesh.num_elements} elements, "
          f"{mesh.num_faces} faces ({mesh.num_interior_faces} interior)")
    print(f"  strongly regular: {is_strongly_regular(mesh)}")

    text = json.dumps(mesh_to_json(mesh))
    back = mesh_from_json(text)
    assert back.num_elements == mesh.num_elements
    print(f"  JSON round trip ok ({len(text)} bytes)")

# Hand-built two-triangle mesh with the diagonal flipped the "bad" way:
# still a valid mesh, just not strongly regular, so only the full stress
# family applies on it.
flat = SimplicialMesh(
    2,
    [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]],
    [[0, 1, 3], [1, 2, 3]])
print(f"hand-built pair: strongly regular: {is_strongly_regular(flat)}")
