"""Error norms, gradient reconstruction, convergence fits and stencil stats."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import DERIVATIVE_WEIGHTS
from .boundary_ops import BoundaryOperatorRow
from .errors import DegenerateFit, MissingNeighbor
from .geometry import Grid, NodeClassification

NORM_NAMES = ("l1", "linf", "grad_l1", "grad_linf")


@dataclass
class ErrorReport:
    """Solution and gradient errors over the interior nodes.

    L1 norms are relative (normalized by the analytic magnitudes), L-infinity
    norms absolute.  ``l1_absolute`` flags a vanishing normalization, in
    which case ``l1`` holds the plain sum instead.
    """

    l1: float
    linf: float
    grad_l1: float
    grad_linf: float
    n: int
    h: float
    l1_absolute: bool = False

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in NORM_NAMES}


def reconstruct_gradient(
    solution: np.ndarray,
    classification: NodeClassification,
    grid: Grid,
) -> np.ndarray:
    """Fourth-order centred gradient of the discrete solution.

    Returns an (n_interior, 2) array.  Ghost values participate through the
    active-node numbering, which is what makes the reconstruction fourth
    order up to the boundary.
    """
    interior = classification.interior_ij
    index = classification.active_index
    out = np.zeros((len(interior), 2))
    h = grid.h
    for axis in (0, 1):
        acc = np.zeros(len(interior))
        for pos, off in enumerate((-2, -1, 1, 2)):
            w = DERIVATIVE_WEIGHTS[(0, 1, 3, 4)[pos]]
            ii = interior[:, 0] + (off if axis == 0 else 0)
            jj = interior[:, 1] + (off if axis == 1 else 0)
            if ii.min() < 0 or jj.min() < 0 or ii.max() > grid.n or jj.max() > grid.n:
                raise MissingNeighbor("gradient stencil leaves the lattice")
            idx = index[ii, jj]
            if idx.min() < 0:
                raise MissingNeighbor("gradient stencil references an inactive node")
            acc += w * solution[idx]
        out[:, axis] = acc / h
    return out


def compute_errors(
    solution: np.ndarray,
    benchmark,
    classification: NodeClassification,
    grid: Grid,
) -> ErrorReport:
    """Error norms of a discrete solution against the benchmark's analytic one."""
    interior = classification.interior_ij
    x, y = grid.coords(interior[:, 0], interior[:, 1])
    exact = np.asarray(benchmark.solution(x, y), dtype=float)
    numeric = solution[: classification.n_interior]
    diff = np.abs(numeric - exact)

    norm = np.abs(exact).sum()
    l1_absolute = bool(norm == 0.0)
    l1 = diff.sum() / (norm if norm > 0.0 else 1.0)

    gx, gy = benchmark.solution_gradient(x, y)
    grad_exact = np.column_stack([np.asarray(gx, dtype=float), np.asarray(gy, dtype=float)])
    grad_numeric = reconstruct_gradient(solution, classification, grid)
    grad_diff = np.linalg.norm(grad_numeric - grad_exact, axis=1)
    grad_norm = np.linalg.norm(grad_exact, axis=1).sum()
    grad_l1 = grad_diff.sum() / (grad_norm if grad_norm > 0.0 else 1.0)

    return ErrorReport(
        l1=float(l1),
        linf=float(diff.max()),
        grad_l1=float(grad_l1),
        grad_linf=float(grad_diff.max()),
        n=grid.n,
        h=grid.h,
        l1_absolute=l1_absolute,
    )


@dataclass
class ConvergenceSeries:
    """Errors across grid levels plus fitted convergence orders."""

    levels: list[tuple[int, float, ErrorReport]] = field(default_factory=list)

    def add(self, n: int, report: ErrorReport) -> None:
        self.levels.append((n, report.h, report))

    def errors(self, norm: str) -> np.ndarray:
        return np.array([getattr(rep, norm) for _, _, rep in self.levels])

    @property
    def spacings(self) -> np.ndarray:
        return np.array([h for _, h, _ in self.levels])

    def fitted_orders(self) -> dict[str, float]:
        return {norm: fit_order(self.spacings, self.errors(norm)) for norm in NORM_NAMES}

    def pairwise_orders(self, norm: str) -> np.ndarray:
        h = self.spacings
        e = self.errors(norm)
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def fit_order(spacings, errors) -> float:
    """Least-squares slope of log(error) against log(h).

    Raises:
        DegenerateFit: fewer than 3 levels, non-positive errors, or
            coincident spacings.
    """
    h = np.asarray(spacings, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) < 3:
        raise DegenerateFit(f"need at least 3 levels for a fit, got {len(h)}")
    if np.any(e <= 0.0):
        raise DegenerateFit("errors must be positive for a log-log fit")
    if len(np.unique(h)) != len(h):
        raise DegenerateFit("grid spacings must be distinct")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


@dataclass
class StencilDiagnostics:
    """Aggregated per-ghost stencil statistics for one run."""

    sizes: np.ndarray
    diameters: np.ndarray
    log10_chi: np.ndarray
    log10_ratio: np.ndarray  # finite entries only; zero ratios counted separately
    n_zero_ratio: int

    @property
    def n_ghosts(self) -> int:
        return len(self.sizes)

    def size_histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.sizes, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    @staticmethod
    def _box(values: np.ndarray) -> dict[str, float]:
        if len(values) == 0:
            return {k: float("nan") for k in ("min", "q1", "median", "q3", "max")}
        q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
        return {
            "min": float(values.min()),
            "q1": float(q1),
            "median": float(med),
            "q3": float(q3),
            "max": float(values.max()),
        }

    def summary(self) -> dict:
        return {
            "n_ghosts": self.n_ghosts,
            "sizes": self.size_histogram(),
            "diameter": self._box(self.diameters),
            "log10_chi": self._box(self.log10_chi),
            "log10_ratio": self._box(self.log10_ratio),
            "n_zero_ratio": self.n_zero_ratio,
        }


def stencil_diagnostics(rows: list[BoundaryOperatorRow]) -> StencilDiagnostics:
    """Collect size, diameter and conditioning statistics from ghost rows."""
    sizes = np.array([row.size for row in rows], dtype=int)
    diameters = np.array([row.diameter() for row in rows])
    chi = np.array([row.chi for row in rows])
    ratios = np.array([row.r_ratio for row in rows])
    positive = ratios > 0.0
    return StencilDiagnostics(
        sizes=sizes,
        diameters=diameters,
        log10_chi=np.log10(chi[np.isfinite(chi) & (chi > 0.0)]),
        log10_ratio=np.log10(ratios[positive & np.isfinite(ratios)]),
        n_zero_ratio=int((~positive).sum()),
    )
