"""Global sparse system: interior finite-difference rows plus ghost rows.

Interior nodes get the fourth-order centred discretization of
``-k*Laplace(phi) + U . grad(phi)`` (two width-5 crosses sharing the
centre); ghost nodes get the boundary-operator rows built by the stencil
strategies.  Active-node numbering (interior first, ghosts after) indexes
both rows and columns.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import DEFAULT_ORDER, RobinData
from .boundary_ops import BoundaryOperatorRow, GhostOperatorSolver, global_ratio
from .errors import MissingNeighbor, NotAdmissible, SingularMatrix, SolveFailed
from .geometry import CollarPoint, Grid, NodeClassification, collar_for_ghost
from .stencils import (
    CONE_KINDS,
    StencilStrategy,
    build_S1,
    build_S2,
    build_S3,
    build_S4,
)

logger = logging.getLogger(__name__)

#: Fourth-order centred weights for the second derivative (offsets -2..2), * 1/h^2.
LAPLACE_WEIGHTS = np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0])

#: Fourth-order centred weights for the first derivative (offsets -2..2), * 1/h.
DERIVATIVE_WEIGHTS = np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0])

OFFSETS = np.array([-2, -1, 0, 1, 2])

#: Relative residual every solve must reach.
SOLVE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ProblemCoefficients:
    """PDE data: diffusion, velocity field, source, and Robin boundary rule.

    ``velocity`` and ``source`` are vectorized over coordinate arrays;
    ``robin`` maps a collar point to the Robin data enforced there.
    """

    diffusion: float
    velocity: Callable
    source: Callable
    robin: Callable[[CollarPoint], RobinData]

    def __post_init__(self) -> None:
        if not self.diffusion > 0.0:
            raise ValueError(f"diffusion coefficient must be positive, got {self.diffusion}")


@dataclass
class SparseSystem:
    """Assembled N x N system over the active nodes."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_interior: int
    n_ghost: int

    @property
    def n(self) -> int:
        return self.n_interior + self.n_ghost


@dataclass
class SolveReport:
    """Solution vector with the residual actually achieved."""

    solution: np.ndarray
    residual: float
    refinements: int
    factor_seconds: float
    n_interior: int

    @property
    def interior_values(self) -> np.ndarray:
        return self.solution[: self.n_interior]

    @property
    def ghost_values(self) -> np.ndarray:
        return self.solution[self.n_interior:]


def _interior_block(
    interior_ij: np.ndarray,
    coeffs: ProblemCoefficients,
    grid: Grid,
    classification: NodeClassification,
):
    """COO triplets and right-hand side for a batch of interior rows."""
    n_rows = len(interior_ij)
    h = grid.h
    x, y = grid.coords(interior_ij[:, 0], interior_ij[:, 1])
    u, v = coeffs.velocity(x, y)
    u = np.broadcast_to(np.asarray(u, dtype=float), (n_rows,))
    v = np.broadcast_to(np.asarray(v, dtype=float), (n_rows,))
    rhs = np.broadcast_to(np.asarray(coeffs.source(x, y), dtype=float), (n_rows,)).copy()

    rows = np.repeat(classification.active_index[tuple(interior_ij.T)], 9)
    cols = np.empty((n_rows, 9), dtype=np.int64)
    vals = np.empty((n_rows, 9), dtype=float)
    diffusion = -coeffs.diffusion / h**2 * LAPLACE_WEIGHTS

    slot = 0
    for axis, vel in ((0, u), (1, v)):
        for pos, off in enumerate(OFFSETS):
            if off == 0 and axis == 1:
                continue  # centre slot shared between the two crosses
            ii = interior_ij[:, 0] + (off if axis == 0 else 0)
            jj = interior_ij[:, 1] + (off if axis == 1 else 0)
            if ii.min() < 0 or jj.min() < 0 or ii.max() > grid.n or jj.max() > grid.n:
                raise MissingNeighbor("interior row references a node outside the lattice")
            idx = classification.active_index[ii, jj]
            if idx.min() < 0:
                bad = np.argmin(idx)
                raise MissingNeighbor(
                    f"interior row at {tuple(interior_ij[bad])} references inactive node "
                    f"({ii[bad]}, {jj[bad]})"
                )
            cols[:, slot] = idx
            value = diffusion[pos] + vel * (DERIVATIVE_WEIGHTS[pos] / h)
            if off == 0 and axis == 0:
                value = value + diffusion[2]  # y-cross centre weight
            vals[:, slot] = value
            slot += 1
    return rows, cols.ravel(), vals.ravel(), rhs


def interior_row(
    k: int,
    coeffs: ProblemCoefficients,
    grid: Grid,
    classification: NodeClassification,
):
    """Single interior equation: (column indices, values, rhs entry).

    ``k`` is the active index of an interior node.
    """
    if not 0 <= k < classification.n_interior:
        raise ValueError(f"active index {k} is not an interior node")
    ij = classification.interior_ij[k : k + 1]
    _, cols, vals, rhs = _interior_block(ij, coeffs, grid, classification)
    return cols, vals, float(rhs[0])


def ghost_row(row: BoundaryOperatorRow, classification: NodeClassification):
    """Sparse entries of one ghost equation: (column indices, values, rhs)."""
    cols = classification.active_index[tuple(row.member_ij.T)]
    if cols.min() < 0:
        raise MissingNeighbor(f"ghost row {row.ghost_ij} references an inactive node")
    return cols, row.coeffs, row.rhs


def build_ghost_rows(
    classification: NodeClassification,
    strategy: StencilStrategy,
    coeffs: ProblemCoefficients,
    grid: Grid,
    order: int = DEFAULT_ORDER,
) -> list[BoundaryOperatorRow]:
    """Collar, stencil and minimum-norm coefficients for every ghost node."""
    level_set = classification.level_set

    def robin_at(collar: CollarPoint) -> RobinData:
        return coeffs.robin(collar)

    solver = GhostOperatorSolver(grid, robin_at, order=order)
    rows: list[BoundaryOperatorRow] = []
    for g in range(classification.n_ghost):
        ij = tuple(int(v) for v in classification.ghost_ij[g])
        collar = collar_for_ghost(ij, grid, level_set)
        if strategy.kind in CONE_KINDS:
            built = build_S4(ij, collar, strategy, grid, classification, solver)
            stencil, solve, collar = built.stencil, built.solve, built.collar
        else:
            builder = {"S1": build_S1, "S2": build_S2, "S3": build_S3}[strategy.kind]
            stencil = builder(ij, collar, strategy.triangle_size, grid, classification)
            solve = solver.solve_for(stencil.member_ij, collar)
            if not solve.admissible:
                raise NotAdmissible(
                    f"{strategy.kind} stencil of ghost {ij} is rank-deficient"
                )
        ratio = global_ratio(solve.coeffs, stencil.member_ij, classification)
        robin = coeffs.robin(collar)
        rows.append(
            BoundaryOperatorRow(
                ghost_ij=ij,
                member_ij=stencil.member_ij,
                coeffs=solve.coeffs,
                rhs=robin.value,
                collar=collar,
                chi=solve.chi,
                r_ratio=ratio,
            )
        )
    return rows


def assemble(
    classification: NodeClassification,
    strategy: StencilStrategy,
    coeffs: ProblemCoefficients,
    grid: Grid,
    order: int = DEFAULT_ORDER,
    ghost_rows: list[BoundaryOperatorRow] | None = None,
) -> tuple[SparseSystem, list[BoundaryOperatorRow]]:
    """Assemble the global system; returns it with the per-ghost rows.

    Rows 0 .. N_I-1 are the interior discretization, the rest the ghost
    equations, in classification order.  Pass ``ghost_rows`` to reuse rows
    already built (e.g. when assembling several systems over one geometry).
    """
    if ghost_rows is None:
        ghost_rows = build_ghost_rows(classification, strategy, coeffs, grid, order)

    rows_i, cols_i, vals_i, rhs_i = _interior_block(
        classification.interior_ij, coeffs, grid, classification
    )

    rows_g = []
    cols_g = []
    vals_g = []
    rhs_g = np.empty(classification.n_ghost)
    for g, row in enumerate(ghost_rows):
        cols, vals, rhs_val = ghost_row(row, classification)
        rows_g.append(np.full(len(cols), classification.n_interior + g, dtype=np.int64))
        cols_g.append(cols)
        vals_g.append(vals)
        rhs_g[g] = rhs_val

    n = classification.n_active
    matrix = sp.coo_matrix(
        (
            np.concatenate([vals_i] + vals_g),
            (
                np.concatenate([rows_i] + rows_g),
                np.concatenate([cols_i] + cols_g),
            ),
        ),
        shape=(n, n),
    ).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    rhs = np.concatenate([rhs_i, rhs_g])
    system = SparseSystem(matrix, rhs, classification.n_interior, classification.n_ghost)
    return system, ghost_rows


def solve(system: SparseSystem, tol: float = SOLVE_TOLERANCE, max_refinements: int = 3) -> SolveReport:
    """Direct sparse solve with iterative refinement to the residual contract.

    Raises:
        SingularMatrix: LU factorization broke down.
        SolveFailed: refinement could not reach the tolerance.
    """
    a = system.matrix.tocsc()
    t0 = time.perf_counter()
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SingularMatrix(f"sparse factorization failed: {exc}") from exc
    factor_seconds = time.perf_counter() - t0

    rhs = system.rhs
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("factorization produced non-finite solution")
    scale = np.linalg.norm(rhs)
    scale = scale if scale > 0.0 else 1.0
    refinements = 0
    residual = np.linalg.norm(system.matrix @ x - rhs) / scale
    while residual > tol and refinements < max_refinements:
        x = x + lu.solve(rhs - system.matrix @ x)
        refinements += 1
        residual = np.linalg.norm(system.matrix @ x - rhs) / scale
    if residual > tol:
        raise SolveFailed(
            f"relative residual {residual:.3e} above {tol:.0e} after {refinements} refinements"
        )
    return SolveReport(x, float(residual), refinements, factor_seconds, system.n_interior)


def export_matrix_market(system: SparseSystem, path) -> None:
    """Write the assembled matrix in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), system.matrix.tocoo())
