"""Shifted-scaled monomial basis and its boundary action.

The boundary operator is made exact on all bivariate polynomials of total
degree ``order - 1``.  The basis monomials are centred at the ghost node and
scaled by the grid spacing, ``((x - x_k)/h)^ax * ((y - y_k)/h)^ay``: scaling
keeps the constraint Gram matrices well conditioned (raw monomials blow up
like h^(-2(order-1))) while leaving the minimum-norm coefficient vector
unchanged in exact arithmetic, since it only rescales the constraint rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CollarPoint

Alpha = tuple[int, int]

#: Default polynomial order: P^4 gives fourth-order accuracy for the
#: solution and its gradient under mixed boundary conditions.
DEFAULT_ORDER = 5


def space_dimension(order: int) -> int:
    """Number of bivariate monomials of total degree < ``order``."""
    return order * (order + 1) // 2


def enumerate_basis(order: int) -> list[Alpha]:
    """Multi-indices of the polynomial space, in a fixed deterministic order.

    Sorted by total degree, then by x-exponent descending, e.g. for
    ``order=2``: (0,0), (1,0), (0,1).
    """
    if order < 2:
        raise ValueError(f"polynomial order must be >= 2, got {order}")
    alphas: list[Alpha] = []
    for total in range(order):
        for ax in range(total, -1, -1):
            alphas.append((ax, total - ax))
    return alphas


@dataclass(frozen=True)
class BasisConfig:
    """Centre, scaling length and order of the monomial basis."""

    spacing: float
    center: np.ndarray
    order: int = DEFAULT_ORDER

    def __post_init__(self) -> None:
        if self.order < 2:
            raise ValueError(f"polynomial order must be >= 2, got {self.order}")
        if not self.spacing > 0.0:
            raise ValueError(f"basis scaling length must be positive, got {self.spacing}")

    @property
    def size(self) -> int:
        return space_dimension(self.order)


@dataclass(frozen=True)
class RobinData:
    """Robin boundary data at one collar point: a_D*phi + a_N*dphi/dn = g."""

    dirichlet: float
    neumann: float
    normal: np.ndarray
    value: float

    def __post_init__(self) -> None:
        if self.dirichlet == 0.0 and self.neumann == 0.0:
            raise ValueError("Robin coefficients (a_D, a_N) must not both vanish")


def eval_monomial(alpha: Alpha, xy, cfg: BasisConfig) -> float:
    """Scaled monomial ``((x-cx)/h)^ax * ((y-cy)/h)^ay`` at a point."""
    xi = (xy[0] - cfg.center[0]) / cfg.spacing
    eta = (xy[1] - cfg.center[1]) / cfg.spacing
    return float(xi ** alpha[0] * eta ** alpha[1])


def monomial_matrix(alphas: list[Alpha], points: np.ndarray, cfg: BasisConfig) -> np.ndarray:
    """All basis monomials at all points: shape (len(alphas), len(points))."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xi = (pts[:, 0] - cfg.center[0]) / cfg.spacing
    eta = (pts[:, 1] - cfg.center[1]) / cfg.spacing
    ax = np.array([a[0] for a in alphas])[:, None]
    ay = np.array([a[1] for a in alphas])[:, None]
    return np.power(xi[None, :], ax) * np.power(eta[None, :], ay)


def monomial_gradient(alpha: Alpha, xy, cfg: BasisConfig) -> np.ndarray:
    """Gradient of the scaled monomial; exponent-0 terms drop out."""
    ax, ay = alpha
    gx = ax / cfg.spacing * eval_monomial((ax - 1, ay), xy, cfg) if ax > 0 else 0.0
    gy = ay / cfg.spacing * eval_monomial((ax, ay - 1), xy, cfg) if ay > 0 else 0.0
    return np.array([gx, gy])


def boundary_action(alpha: Alpha, collar: CollarPoint, robin: RobinData, cfg: BasisConfig) -> float:
    """Continuous boundary operator applied to one basis monomial at the collar.

    Returns ``a_D * psi(p) + a_N * grad(psi)(p) . n``.
    """
    p = collar.point
    value = robin.dirichlet * eval_monomial(alpha, p, cfg)
    if robin.neumann != 0.0:
        value += robin.neumann * float(monomial_gradient(alpha, p, cfg) @ robin.normal)
    return value


def boundary_action_vector(
    alphas: list[Alpha], collar: CollarPoint, robin: RobinData, cfg: BasisConfig
) -> np.ndarray:
    """Boundary action on every basis monomial (the constraint right-hand side)."""
    return np.array([boundary_action(a, collar, robin, cfg) for a in alphas])
