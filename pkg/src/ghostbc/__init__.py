"""Fourth-order ghost-point finite differences on unfitted level-set domains."""

from .analysis import (
    ConvergenceSeries,
    ErrorReport,
    StencilDiagnostics,
    compute_errors,
    fit_order,
    reconstruct_gradient,
    stencil_diagnostics,
)
from .assembly import (
    ProblemCoefficients,
    SolveReport,
    SparseSystem,
    assemble,
    build_ghost_rows,
    export_matrix_market,
    ghost_row,
    interior_row,
    solve,
)
from .basis import BasisConfig, RobinData, boundary_action, enumerate_basis, eval_monomial
from .benchmarks import (
    Benchmark,
    annulus_homogeneous,
    annulus_quartic,
    by_name,
    complex_domain,
    convection_diffusion,
    peclet_numbers,
)
from .boundary_ops import (
    BoundaryOperatorRow,
    ConstraintMatrix,
    GhostOperatorSolver,
    assemble_constraints,
    global_ratio,
    local_condition,
    solve_min_norm,
)
from .cli import PAPER13, RunConfig, execute_level, run_single, run_sweep
from .geometry import (
    CollarPoint,
    Grid,
    LevelSet,
    NodeClassification,
    axis_projection,
    classify_nodes,
    collar_for_ghost,
    project_to_boundary,
)
from .stencils import (
    Stencil,
    StencilStrategy,
    build_S1,
    build_S2,
    build_S3,
    build_S4,
    cone_candidates,
    stencil_diameter,
)

__version__ = "0.1.0"
