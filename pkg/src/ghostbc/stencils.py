"""Stencil construction strategies for ghost-node boundary rows.

Six strategies are provided.  S1-S3 are right-triangle stencils anchored at
the ghost and oriented toward the domain; S3 additionally shifts inward so
that the ghost is its only ghost member, which makes the ghost block of the
global matrix diagonal.  S4.1-S4.3 grow a compact stencil from a cone of
candidate nodes aimed at the collar point, adding nodes until the
constraint matrix is admissible and locally well conditioned, then swapping
out badly-weighted ghost members (S4.2) and, if necessary, retrying with an
axis-projected collar point (S4.3).
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

import numpy as np

from .boundary_ops import (
    GhostOperatorSolver,
    StencilSolve,
    coefficient_amplification,
    global_ratio,
)
from .errors import CandidatesExhausted, InactiveMember, NoAxisIntersection, NotAdmissible
from .geometry import CollarPoint, Grid, NodeClassification, axis_projection

logger = logging.getLogger(__name__)

TRIANGLE_KINDS = ("S1", "S2", "S3")
CONE_KINDS = ("S4.1", "S4.2", "S4.3")

#: Aperture increment (degrees) when the candidate cone starves.
APERTURE_STEP = 15.0

#: Hard cap on stencil growth; exceeding it means the configuration is hopeless.
MAX_STENCIL_SIZE = 60


@dataclass(frozen=True)
class StencilStrategy:
    """Strategy kind plus the knobs of the construction algorithms."""

    kind: str
    triangle_size: int = 4
    aperture_deg: float = 60.0
    local_tol: float = 1e6
    global_tol: float = 10.0
    max_swaps: int = 3

    def __post_init__(self) -> None:
        if self.kind not in TRIANGLE_KINDS + CONE_KINDS:
            raise ValueError(f"unknown stencil strategy {self.kind!r}")
        if self.triangle_size < 1:
            raise ValueError("triangle size must be >= 1")
        if not 0.0 < self.aperture_deg <= 360.0:
            raise ValueError("cone aperture must be in (0, 360] degrees")
        if self.local_tol <= 0.0 or self.global_tol <= 0.0:
            raise ValueError("conditioning tolerances must be positive")
        if self.max_swaps < 0:
            raise ValueError("max_swaps must be >= 0")


@dataclass
class Stencil:
    """Ordered member set of one ghost row; the ghost node is member 0."""

    ghost_ij: tuple[int, int]
    member_ij: np.ndarray
    collar: CollarPoint
    kind: str
    chi: float | None = None
    r_ratio: float | None = None

    def __post_init__(self) -> None:
        self.member_ij = np.asarray(self.member_ij, dtype=np.int64)
        if tuple(self.member_ij[0]) != tuple(self.ghost_ij):
            raise ValueError("stencil member 0 must be the ghost node itself")

    @property
    def size(self) -> int:
        return len(self.member_ij)


def stencil_diameter(stencil: Stencil) -> float:
    """Maximum pairwise member distance in units of the grid spacing."""
    return pairwise_diameter(stencil.member_ij)


def pairwise_diameter(member_ij: np.ndarray) -> float:
    ij = np.asarray(member_ij)
    if len(ij) < 2:
        return 0.0
    d2 = ((ij[:, None, :] - ij[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


def _check_members(
    members: list[tuple[int, int]],
    ghost_ij: tuple[int, int],
    classification: NodeClassification,
    kind: str,
) -> np.ndarray:
    for i, j in members:
        if (i, j) != tuple(ghost_ij) and not classification.is_active(i, j):
            raise InactiveMember(
                f"{kind} stencil of ghost {tuple(ghost_ij)} references inactive node ({i}, {j})"
            )
    return np.array(members, dtype=np.int64)


def build_S1(
    ghost_ij: tuple[int, int],
    collar: CollarPoint,
    p: int,
    grid: Grid,
    classification: NodeClassification,
) -> Stencil:
    """Right triangle with the right angle at the ghost, opening inward.

    Members are the lattice offsets ``(l*sx, m*sy)`` with ``l + m <= p``
    where ``(sx, sy)`` steps from the ghost toward the boundary.
    """
    members = triangle_members("S1", ghost_ij, collar, p)
    return Stencil(
        tuple(int(v) for v in ghost_ij),
        _check_members(members, ghost_ij, classification, "S1"),
        collar,
        "S1",
    )


def _s2_offsets(p: int, x_branch: bool) -> list[tuple[int, int]]:
    """Unsigned S2 offsets; right angle at the innermost internal point."""
    if x_branch:
        return [(a, b) for a in range(p + 1) for b in range(a + 1)]
    return [(a, b) for b in range(p + 1) for a in range(b + 1)]


def triangle_members(
    kind: str, ghost_ij: tuple[int, int], collar: CollarPoint, p: int
) -> list[tuple[int, int]]:
    """Member nodes of the S1 or S2 triangle, without any activity check."""
    i0, j0 = int(ghost_ij[0]), int(ghost_ij[1])
    sx, sy = collar.inward_signs()
    if kind == "S1":
        return [(i0 + l * sx, j0 + m * sy) for l in range(p + 1) for m in range(p + 1 - l)]
    if kind == "S2":
        d = collar.displacement
        x_branch = abs(d[0]) >= abs(d[1])
        return [(i0 + a * sx, j0 + b * sy) for a, b in _s2_offsets(p, x_branch)]
    raise ValueError(f"no plain triangle for strategy {kind!r}")


def extend_classification(
    classification: NodeClassification,
    strategy: StencilStrategy,
    grid: Grid,
    max_rounds: int = 12,
) -> NodeClassification:
    """Deepen the ghost band until every triangle stencil is closed.

    The finite-difference closure yields two ghost layers, which is enough
    for the interior rows and the cone strategies, but the S1/S2 triangles
    of deep ghosts can reach exterior nodes just beyond the band (their
    along-boundary arm).  Promoting those nodes to ghosts, repeatedly, makes
    the triangle strategies well posed; each new ghost gets its own collar
    and boundary row like any other.
    """
    if strategy.kind not in ("S1", "S2"):
        return classification
    from .geometry import collar_for_ghost  # local import to avoid cycle noise

    collars: dict[tuple[int, int], CollarPoint] = {}
    for _ in range(max_rounds):
        missing: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        for ij in classification.ghost_ij:
            ghost = (int(ij[0]), int(ij[1]))
            collar = collars.get(ghost)
            if collar is None:
                collar = collar_for_ghost(ghost, grid, classification.level_set)
                collars[ghost] = collar
            for node in triangle_members(strategy.kind, ghost, collar, strategy.triangle_size):
                if node in seen:
                    continue
                seen.add(node)
                if not grid.in_bounds(*node):
                    raise InactiveMember(
                        f"{strategy.kind} stencil of ghost {ghost} leaves the lattice at {node}"
                    )
                if not classification.is_active(*node):
                    missing.append(node)
        if not missing:
            return classification
        logger.info(
            "%s closure: promoting %d exterior nodes to ghosts", strategy.kind, len(missing)
        )
        classification = classification.with_extra_ghosts(missing)
    raise InactiveMember(
        f"{strategy.kind} ghost band did not close within {max_rounds} extension rounds"
    )


def build_S2(
    ghost_ij: tuple[int, int],
    collar: CollarPoint,
    p: int,
    grid: Grid,
    classification: NodeClassification,
) -> Stencil:
    """Right triangle whose right-angle vertex is the innermost internal point.

    The branch follows the dominant displacement component (x wins ties);
    the triangle spans from the ghost to the vertex ``p`` nodes inward.
    """
    members = triangle_members("S2", ghost_ij, collar, p)
    return Stencil(
        tuple(int(v) for v in ghost_ij),
        _check_members(members, ghost_ij, classification, "S2"),
        collar,
        "S2",
    )


def build_S3(
    ghost_ij: tuple[int, int],
    collar: CollarPoint,
    p: int,
    grid: Grid,
    classification: NodeClassification,
    max_shift: int = 6,
) -> Stencil:
    """S2 shifted inward until the ghost is its only ghost member.

    Ghosts within one spacing of the boundary keep the plain S2 set when it
    is already ghost-exclusive; otherwise the non-centre members are pushed
    along the dominant axis, one node at a time, replacing ghost lines with
    interior lines.  The resulting row couples to no other ghost unknown.
    """
    i0, j0 = int(ghost_ij[0]), int(ghost_ij[1])
    sx, sy = collar.inward_signs()
    d = collar.displacement
    x_branch = abs(d[0]) >= abs(d[1])
    offsets = _s2_offsets(p, x_branch)

    def signed(members_offsets, shift):
        out = []
        for a, b in members_offsets:
            if (a, b) == (0, 0):
                out.append((i0, j0))
            elif x_branch:
                out.append((i0 + (a + shift) * sx, j0 + b * sy))
            else:
                out.append((i0 + a * sx, j0 + (b + shift) * sy))
        return out

    def foreign_ghosts(members):
        return [
            (i, j)
            for i, j in members
            if (i, j) != (i0, j0) and classification.is_ghost(i, j)
        ]

    near = float(np.linalg.norm(d)) <= grid.h
    start = 0 if near else 1
    last_error: InactiveMember | None = None
    for shift in range(start, max_shift + 1):
        members = signed(offsets, shift)
        try:
            member_arr = _check_members(members, ghost_ij, classification, "S3")
        except InactiveMember as exc:
            last_error = exc
            continue
        if not foreign_ghosts(members):
            return Stencil((i0, j0), member_arr, collar, "S3")
    if last_error is not None:
        raise last_error
    raise InactiveMember(
        f"S3 stencil of ghost {tuple(ghost_ij)} cannot exclude other ghosts within shift {max_shift}"
    )


def _iter_cone(
    ghost_ij: tuple[int, int],
    direction: np.ndarray,
    aperture_deg: float,
    grid: Grid,
    classification: NodeClassification,
):
    """Active nodes inside the cone, by increasing distance from the ghost.

    Yields lattice pairs, nearest first; exact integer distance-squared with
    (i, j)-lexicographic tie breaking makes the order reproducible.  The
    ghost itself is not emitted.
    """
    i0, j0 = int(ghost_ij[0]), int(ghost_ij[1])
    w = np.asarray(direction, dtype=float)
    wnorm = float(np.linalg.norm(w))
    cos_half = np.cos(np.radians(min(aperture_deg, 360.0) / 2.0))
    full = aperture_deg >= 360.0 or wnorm == 0.0
    side = grid.nodes_per_side
    max_ring = 2 * grid.n

    def in_cone(di: int, dj: int) -> bool:
        if full:
            return True
        dot = di * w[0] + dj * w[1]
        return dot >= (cos_half - 1e-12) * np.hypot(di, dj) * wnorm

    buffer: list[tuple[int, int, int]] = []
    for ring in range(1, max_ring + 1):
        for di, dj in _ring_offsets(ring):
            i, j = i0 + di, j0 + dj
            if not (0 <= i < side and 0 <= j < side):
                continue
            if classification.active_index[i, j] < 0:
                continue
            if in_cone(di, dj):
                heapq.heappush(buffer, (di * di + dj * dj, i, j))
        # Everything within |delta| <= ring is final once ring is processed.
        limit = ring * ring
        while buffer and buffer[0][0] <= limit:
            _, i, j = heapq.heappop(buffer)
            yield (i, j)
    while buffer:
        _, i, j = heapq.heappop(buffer)
        yield (i, j)


def _ring_offsets(ring: int):
    for dj in range(-ring, ring + 1):
        yield -ring, dj
        yield ring, dj
    for di in range(-ring + 1, ring):
        yield di, -ring
        yield di, ring


def cone_candidates(
    ghost_ij: tuple[int, int],
    collar: CollarPoint,
    aperture_deg: float,
    grid: Grid,
    classification: NodeClassification,
    limit: int | None = None,
) -> list[tuple[int, int]]:
    """Ordered cone candidates for a ghost, with the ghost itself first."""
    direction = collar.toward_boundary()
    out: list[tuple[int, int]] = [tuple(int(v) for v in ghost_ij)]
    for node in _iter_cone(ghost_ij, direction, aperture_deg, grid, classification):
        if limit is not None and len(out) >= limit:
            break
        out.append(node)
    return out


@dataclass
class ConeBuildResult:
    """Final cone stencil plus every intermediate stage, for diagnostics."""

    stencil: Stencil
    solve: StencilSolve
    collar: CollarPoint
    swaps: list[tuple[tuple[int, int], tuple[int, int]]]
    aperture_used: float
    stage_members: dict[str, np.ndarray] = field(default_factory=dict)
    stage_solves: dict[str, StencilSolve] = field(default_factory=dict)
    stage_ratios: dict[str, float] = field(default_factory=dict)
    stage_collars: dict[str, CollarPoint] = field(default_factory=dict)


class _CandidateStream:
    """Cone candidates with automatic aperture widening on exhaustion."""

    def __init__(self, ghost_ij, collar, strategy, grid, classification):
        self.ghost_ij = ghost_ij
        self.direction = collar.toward_boundary()
        self.aperture = strategy.aperture_deg
        self.grid = grid
        self.classification = classification
        self._gen = _iter_cone(ghost_ij, self.direction, self.aperture, grid, classification)

    def take(self, exclude: set[tuple[int, int]]) -> tuple[int, int]:
        """Next unseen candidate in distance order (the growth frontier)."""
        while True:
            node = next(self._gen, None)
            if node is None:
                if self.aperture >= 360.0:
                    raise CandidatesExhausted(
                        f"cone candidates exhausted for ghost {tuple(self.ghost_ij)}"
                    )
                self.aperture = min(360.0, self.aperture + APERTURE_STEP)
                self._gen = _iter_cone(
                    self.ghost_ij, self.direction, self.aperture, self.grid, self.classification
                )
                continue
            if node not in exclude:
                return node

    def nearest_available(self, exclude: set[tuple[int, int]]) -> tuple[int, int]:
        """Closest cone candidate not excluded, scanning from the ghost again.

        Swap replacements use this rather than the growth frontier so a
        replacement can be nearer than the last grown member.
        """
        for node in _iter_cone(
            self.ghost_ij, self.direction, self.aperture, self.grid, self.classification
        ):
            if node not in exclude:
                return node
        return self.take(exclude)


def _grow_until_conditioned(
    members: list[tuple[int, int]],
    used: set[tuple[int, int]],
    collar: CollarPoint,
    stream: _CandidateStream,
    solver: GhostOperatorSolver,
    strategy: StencilStrategy,
) -> StencilSolve:
    """Append candidates until the stencil is admissible and chi < local_tol.

    ``used`` holds every node already consumed (members plus swap victims)
    so nothing is offered twice.
    """
    while True:
        solve = solver.solve_for(np.array(members, dtype=np.int64), collar)
        if solve.admissible and solve.chi < strategy.local_tol:
            return solve
        if len(members) >= MAX_STENCIL_SIZE:
            raise NotAdmissible(
                f"stencil for ghost {members[0]} grew past {MAX_STENCIL_SIZE} "
                "points without becoming well conditioned"
            )
        try:
            node = stream.take(used)
        except CandidatesExhausted as exc:
            raise NotAdmissible(str(exc)) from exc
        members.append(node)
        used.add(node)


def _run_cone_stages(
    ghost_ij,
    collar: CollarPoint,
    strategy: StencilStrategy,
    grid: Grid,
    classification: NodeClassification,
    solver: GhostOperatorSolver,
):
    """S4.1 growth followed by the S4.2 swap loop, for one collar point.

    The swap loop is driven by the coefficient amplification over all
    members: removing whichever member carries the largest coefficient
    (typically a node shadowing the ghost from right next to the collar
    point) is what restores a usable centre coefficient for ghosts that
    sit deep in the second layer.  A swap that does not strictly improve
    the amplification is reverted and the loop stops; stencils the swaps
    cannot fix are left to the collar modification of S4.3.
    """
    stream = _CandidateStream(ghost_ij, collar, strategy, grid, classification)
    seed = tuple(int(v) for v in ghost_ij)
    members: list[tuple[int, int]] = [seed]
    used = {seed}
    while len(members) < solver.n_constraints:
        node = stream.take(used)
        members.append(node)
        used.add(node)
    solve = _grow_until_conditioned(members, used, collar, stream, solver, strategy)
    stage1 = (list(members), solve)

    ratio = coefficient_amplification(solve.coeffs)
    swaps: list[tuple[tuple[int, int], tuple[int, int]]] = []
    max_swaps = 0 if strategy.kind == "S4.1" else strategy.max_swaps
    while ratio >= strategy.global_tol and len(swaps) < max_swaps:
        victim_pos = 1 + int(np.abs(solve.coeffs[1:]).argmax())
        victim = members.pop(victim_pos)
        try:
            replacement = stream.nearest_available(used)
        except CandidatesExhausted:
            members.insert(victim_pos, victim)
            break
        trial_members = members + [replacement]
        trial_used = used | {replacement}
        try:
            trial_solve = _grow_until_conditioned(
                trial_members, trial_used, collar, stream, solver, strategy
            )
        except NotAdmissible:
            members.insert(victim_pos, victim)
            break
        trial_ratio = coefficient_amplification(trial_solve.coeffs)
        if not trial_ratio < ratio:
            members.insert(victim_pos, victim)
            break
        members = trial_members
        used = trial_used
        solve = trial_solve
        ratio = trial_ratio
        swaps.append((victim, replacement))
    return stage1, (list(members), solve, ratio), swaps, stream.aperture


def build_S4(
    ghost_ij: tuple[int, int],
    collar: CollarPoint,
    strategy: StencilStrategy,
    grid: Grid,
    classification: NodeClassification,
    solver: GhostOperatorSolver,
) -> ConeBuildResult:
    """Cone-based stencil for one ghost under S4.1, S4.2 or S4.3.

    S4.1 grows the candidate set until admissible and locally well
    conditioned; S4.2 additionally swaps out the largest-coefficient member
    while the row's amplification exceeds the global tolerance (at most
    ``max_swaps`` improving swaps); S4.3 retries the whole construction
    with an axis-projected collar point if the amplification still exceeds
    the tolerance.  All intermediate stages are recorded for diagnostics.
    """
    if strategy.kind not in CONE_KINDS:
        raise ValueError(f"build_S4 called with strategy {strategy.kind!r}")

    result = ConeBuildResult(
        stencil=None,  # type: ignore[arg-type]
        solve=None,  # type: ignore[arg-type]
        collar=collar,
        swaps=[],
        aperture_used=strategy.aperture_deg,
    )
    stage1, stage2, swaps, aperture = _run_cone_stages(
        ghost_ij, collar, strategy, grid, classification, solver
    )
    members1, solve1 = stage1
    ratio1 = coefficient_amplification(solve1.coeffs)
    result.stage_members["S4.1"] = np.array(members1, dtype=np.int64)
    result.stage_solves["S4.1"] = solve1
    result.stage_ratios["S4.1"] = ratio1
    result.stage_collars["S4.1"] = collar

    members, solve, ratio = stage2
    result.stage_members["S4.2"] = np.array(members, dtype=np.int64)
    result.stage_solves["S4.2"] = solve
    result.stage_ratios["S4.2"] = ratio
    result.stage_collars["S4.2"] = collar
    result.swaps = swaps
    result.aperture_used = aperture

    chosen_stage = {"S4.1": "S4.1", "S4.2": "S4.2", "S4.3": "S4.2"}[strategy.kind]
    final_members = result.stage_members[chosen_stage]
    final_solve = result.stage_solves[chosen_stage]
    final_ratio = result.stage_ratios[chosen_stage]
    final_collar = collar

    if strategy.kind == "S4.3":
        if ratio >= strategy.global_tol:
            final_members, final_solve, final_ratio, final_collar = _stage3_rebuild(
                ghost_ij, collar, strategy, grid, classification, solver, result,
                fallback=(final_members, final_solve, final_ratio),
            )
        result.stage_members["S4.3"] = np.asarray(final_members, dtype=np.int64)
        result.stage_solves["S4.3"] = final_solve
        result.stage_ratios["S4.3"] = final_ratio
        result.stage_collars["S4.3"] = final_collar

    result.collar = final_collar
    result.solve = final_solve
    member_arr = np.asarray(final_members, dtype=np.int64)
    result.stencil = Stencil(
        tuple(int(v) for v in ghost_ij),
        member_arr,
        final_collar,
        strategy.kind,
        chi=final_solve.chi,
        # the stencil metric is the ghost-member ratio; the amplification
        # that drove the construction stays in stage_ratios
        r_ratio=global_ratio(final_solve.coeffs, member_arr, classification),
    )
    return result


def _stage3_rebuild(ghost_ij, collar, strategy, grid, classification, solver, result, fallback):
    """Re-run the cone construction with an axis-projected collar point."""
    members, solve, ratio = fallback
    try:
        new_collar = axis_projection(
            collar.ghost_xy, classification.level_set, grid.h, ghost_ij=tuple(ghost_ij)
        )
    except NoAxisIntersection:
        logger.info("ghost %s: no axis intersection; keeping closest-point collar", tuple(ghost_ij))
        return members, solve, ratio, collar
    try:
        _, stage2, swaps, aperture = _run_cone_stages(
            ghost_ij, new_collar, strategy, grid, classification, solver
        )
    except NotAdmissible:
        logger.info("ghost %s: rebuild with axis collar failed; keeping S4.2 result", tuple(ghost_ij))
        return members, solve, ratio, collar
    result.swaps = result.swaps + swaps
    result.aperture_used = max(result.aperture_used, aperture)
    new_members, new_solve, new_ratio = stage2
    return new_members, new_solve, new_ratio, new_collar
