import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostbc.basis import (
    BasisConfig,
    RobinData,
    boundary_action,
    enumerate_basis,
    eval_monomial,
    monomial_gradient,
    monomial_matrix,
    space_dimension,
)
from ghostbc.geometry import CollarPoint


def make_collar(center, point, normal=(1.0, 0.0)):
    return CollarPoint(
        ghost_xy=np.asarray(center, dtype=float),
        point=np.asarray(point, dtype=float),
        normal=np.asarray(normal, dtype=float),
        mode="closest",
    )


class TestEnumerateBasis:
    def test_order_two(self):
        assert enumerate_basis(2) == [(0, 0), (1, 0), (0, 1)]

    def test_order_five_has_fifteen(self):
        alphas = enumerate_basis(5)
        assert len(alphas) == 15 == space_dimension(5)
        assert len(set(alphas)) == 15
        assert max(a + b for a, b in alphas) == 4

    def test_order_three(self):
        alphas = enumerate_basis(3)
        assert len(alphas) == 6
        assert max(a + b for a, b in alphas) == 2

    def test_degree_then_x_descending(self):
        assert enumerate_basis(3) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_rejects_low_order(self):
        with pytest.raises(ValueError):
            enumerate_basis(1)


class TestEvalMonomial:
    def setup_method(self):
        self.cfg = BasisConfig(spacing=0.1, center=np.array([0.3, -0.2]), order=5)

    def test_constant(self):
        assert eval_monomial((0, 0), (1.7, 2.9), self.cfg) == 1.0

    def test_unit_offset(self):
        x = self.cfg.center + np.array([self.cfg.spacing, 0.0])
        assert eval_monomial((1, 0), x, self.cfg) == pytest.approx(1.0, abs=1e-14)

    def test_mixed(self):
        x = self.cfg.center + np.array([2 * self.cfg.spacing, -self.cfg.spacing])
        assert eval_monomial((2, 1), x, self.cfg) == pytest.approx(-4.0, abs=1e-12)

    def test_matrix_matches_scalar(self, rng):
        alphas = enumerate_basis(4)
        pts = rng.uniform(-1, 1, size=(7, 2))
        m = monomial_matrix(alphas, pts, self.cfg)
        for a, alpha in enumerate(alphas):
            for p, pt in enumerate(pts):
                assert m[a, p] == pytest.approx(eval_monomial(alpha, pt, self.cfg), rel=1e-13)


class TestBoundaryAction:
    def setup_method(self):
        self.h = 0.05
        self.center = np.array([0.1, 0.2])
        self.cfg = BasisConfig(spacing=self.h, center=self.center, order=5)

    def test_dirichlet_on_constant(self):
        collar = make_collar(self.center, self.center + [0.01, 0.02])
        robin = RobinData(1.0, 0.0, np.array([1.0, 0.0]), 0.0)
        assert boundary_action((0, 0), collar, robin, self.cfg) == 1.0

    def test_neumann_on_linear(self):
        collar = make_collar(self.center, self.center + [0.01, 0.0])
        robin = RobinData(0.0, 1.0, np.array([1.0, 0.0]), 0.0)
        assert boundary_action((1, 0), collar, robin, self.cfg) == pytest.approx(1.0 / self.h)

    def test_mixed_on_quadratic(self):
        delta = 0.013
        normal = np.array([0.6, 0.8])
        collar = make_collar(self.center, self.center + [delta, 0.0])
        robin = RobinData(1.0, 1.0, normal, 0.0)
        expected = (delta / self.h) ** 2 + 2.0 * normal[0] * delta / self.h**2
        assert boundary_action((2, 0), collar, robin, self.cfg) == pytest.approx(expected, rel=1e-12)

    def test_robin_coefficients_must_not_vanish(self):
        with pytest.raises(ValueError):
            RobinData(0.0, 0.0, np.array([1.0, 0.0]), 0.0)


class TestProperties:
    def test_gradient_matches_central_differences(self, rng):
        cfg = BasisConfig(spacing=0.07, center=np.array([0.4, -0.1]), order=5)
        eps = 1e-6
        for alpha in enumerate_basis(5):
            for _ in range(3):
                x = cfg.center + rng.uniform(-0.3, 0.3, size=2)
                gx, gy = monomial_gradient(alpha, x, cfg)
                fd_x = (
                    eval_monomial(alpha, x + [eps, 0.0], cfg)
                    - eval_monomial(alpha, x - [eps, 0.0], cfg)
                ) / (2 * eps)
                fd_y = (
                    eval_monomial(alpha, x + [0.0, eps], cfg)
                    - eval_monomial(alpha, x - [0.0, eps], cfg)
                ) / (2 * eps)
                scale = max(1.0, abs(gx), abs(gy))
                assert abs(gx - fd_x) <= 1e-7 * scale
                assert abs(gy - fd_y) <= 1e-7 * scale

    def test_polynomial_reproduction(self, rng):
        # any quartic is reproduced exactly by its expansion in the scaled basis
        cfg = BasisConfig(spacing=0.05, center=np.array([-0.2, 0.3]), order=5)
        alphas = enumerate_basis(5)
        coeffs = rng.standard_normal(len(alphas))

        def poly(x, y):
            return sum(
                c * (x - cfg.center[0]) ** ax * (y - cfg.center[1]) ** ay
                for c, (ax, ay) in zip(coeffs, alphas)
            )

        scaled_coeffs = np.array(
            [c * cfg.spacing ** (ax + ay) for c, (ax, ay) in zip(coeffs, alphas)]
        )
        pts = rng.uniform(-0.5, 0.5, size=(20, 2)) + cfg.center
        m = monomial_matrix(alphas, pts, cfg)
        reproduced = scaled_coeffs @ m
        expected = np.array([poly(x, y) for x, y in pts])
        assert np.allclose(reproduced, expected, rtol=1e-13, atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(
        dx=st.floats(-3.0, 3.0, allow_nan=False),
        dy=st.floats(-3.0, 3.0, allow_nan=False),
        ax=st.integers(0, 4),
        ay=st.integers(0, 4),
    )
    def test_scaling_covariance(self, dx, dy, ax, ay):
        center = np.array([0.05, -0.35])
        h = 0.01
        fine = BasisConfig(spacing=h, center=center)
        coarse = BasisConfig(spacing=2 * h, center=center)
        offset = np.array([dx, dy]) * h
        v1 = eval_monomial((ax, ay), center + offset, fine)
        v2 = eval_monomial((ax, ay), center + 2 * offset, coarse)
        assert v1 == pytest.approx(v2, rel=1e-12, abs=1e-12)
