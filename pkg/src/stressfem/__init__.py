"""Mixed finite elements for linear elasticity with symmetric stresses.

Interior-penalty nonconforming stress elements of orders k = 0, 1, 2 on
triangular and tetrahedral meshes, with the structural verification suite
and the convergence-study driver.
"""

from stressfem.assembly import (
    Material,
    SaddlePointSystem,
    assemble_a,
    assemble_b,
    assemble_displacement_mass,
    assemble_penalty,
    assemble_rhs,
    build_saddle_system,
    compile_element,
)
from stressfem.local_spaces import (
    LocalStressBasis,
    SymTensorField,
    local_decomposition,
)
from stressfem.global_spaces import (
    DisplacementSpace,
    GlobalStressSpace,
    build_displacement_space,
    build_space_s1,
    build_space_s2,
)
from stressfem.mesh import (
    SimplicialMesh,
    SimplexGeometry,
    generate_uniform_mesh,
    is_strongly_regular,
    mesh_from_json,
    mesh_to_json,
)
from stressfem.polynomial import (
    BarycentricPoly,
    SpaceSpec,
    classic_order2_rule,
    quadrature_rule,
    span_basis,
)
from stressfem.solver import Solution, SolverError, solve_saddle
from stressfem.study import (
    ManufacturedCase,
    StudyReport,
    convergence_study,
    evaluate_errors,
    export_report,
    import_report,
    manufactured_case,
)
from stressfem.verify import VerificationReport, run_all

__version__ = "0.1.0"
