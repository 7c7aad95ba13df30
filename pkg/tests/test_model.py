import math

import mpmath as mp
import numpy as np
import pytest

from lambdasurf.model import (
    AxisSingularityError,
    ProfileState,
    curvatures,
    derive_constants,
    exact_cylinder,
    exact_sphere,
    rhs,
    theta_second,
)


def quadratic_residual(root, p, q):
    scale = root * root + abs(p * root) + q
    return abs(root * root - p * root - q) / scale


class TestDeriveConstants:
    def test_lambda_zero(self):
        params = derive_constants(2, 0.0)
        assert params.c_lambda == pytest.approx(1.0, abs=1e-15)
        assert params.r_lambda == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_figure_value(self):
        # cylinder radius (3 - sqrt(5)) / 2 at n=2, lam=-sqrt(5)
        params = derive_constants(2, -math.sqrt(5.0))
        assert params.c_lambda == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, abs=1e-15)

    def test_high_precision_oracle(self):
        # independent arbitrary-precision root of C^2 - lam*C - 1 = 0
        mp.mp.dps = 50
        lam = -4 / mp.sqrt(5)
        oracle = (lam + mp.sqrt(lam**2 + 4)) / 2
        params = derive_constants(2, float(-4.0 / math.sqrt(5.0)))
        assert params.c_lambda == pytest.approx(float(oracle), abs=1e-15)
        assert params.c_lambda == pytest.approx(1.0 / math.sqrt(5.0), abs=1e-15)
        assert (params.n - 1) / params.c_lambda**2 == pytest.approx(5.0, rel=1e-13)

    @pytest.mark.parametrize("n", range(2, 11))
    @pytest.mark.parametrize("lam", [-100.0, -25.0, -2.0, -0.3, 0.0, 0.3, 2.0, 25.0, 100.0])
    def test_quadratic_identities(self, n, lam):
        params = derive_constants(n, lam)
        assert quadratic_residual(params.c_lambda, lam, n - 1) < 1e-14
        assert quadratic_residual(params.r_lambda, lam, n) < 1e-14
        assert quadratic_residual(params.c_minus_lambda, -lam, n - 1) < 1e-14
        assert quadratic_residual(params.r_minus_lambda, -lam, n) < 1e-14
        assert params.r_lambda > params.c_lambda > 0.0

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            derive_constants(1, -1.0)
        with pytest.raises(TypeError):
            derive_constants(2.0, -1.0)
        with pytest.raises(ValueError):
            derive_constants(2, math.inf)


class TestRhs:
    def test_cylinder_is_stationary(self):
        for lam in (-1.0, -math.sqrt(5.0), 0.7):
            params = derive_constants(2, lam)
            state = ProfileState(s=0.0, x=0.7, r=params.c_lambda, theta=0.0)
            dx, dr, dtheta = rhs(state, params)
            assert (dx, dr) == (1.0, 0.0)
            assert dtheta == pytest.approx(0.0, abs=1e-13)

    @pytest.mark.parametrize("u", [0.1, 0.7, 1.5, 2.6, 3.0])
    def test_sphere_turns_at_constant_rate(self, u):
        params = derive_constants(2, -1.0)
        radius = params.r_lambda
        state = ProfileState(
            s=radius * u,
            x=-radius * math.cos(u),
            r=radius * math.sin(u),
            theta=0.5 * math.pi - u,
        )
        _, _, dtheta = rhs(state, params)
        assert dtheta == pytest.approx(-1.0 / radius, abs=1e-12)

    def test_launch_height_rate(self):
        params = derive_constants(2, -1.0)
        delta = 0.05
        _, _, dtheta = rhs(ProfileState(0.0, 0.0, delta, 0.0), params)
        assert dtheta == pytest.approx((params.n - 1) / delta - delta + params.lam, rel=1e-15)

    def test_axis_singularity(self):
        params = derive_constants(2, -1.0)
        with pytest.raises(AxisSingularityError):
            rhs(ProfileState(0.0, 0.0, 0.0, 0.0), params)
        with pytest.raises(AxisSingularityError):
            curvatures(ProfileState(0.0, 0.0, -0.1, 0.0), params)


class TestCurvatures:
    def test_cylinder(self):
        params = derive_constants(2, -1.0)
        data = curvatures(ProfileState(0.0, 0.3, params.c_lambda, 0.0), params)
        assert data.kappa_rot == pytest.approx(-1.0 / params.c_lambda, rel=1e-14)
        assert data.kappa_profile == pytest.approx(0.0, abs=1e-13)
        assert data.residual == pytest.approx(0.0, abs=1e-13)

    def test_sphere(self):
        params = derive_constants(2, -math.sqrt(5.0))
        radius = params.r_lambda
        for u in (0.4, 1.2, 2.8):
            data = curvatures(exact_sphere(params, radius * u), params)
            assert data.kappa_rot == pytest.approx(-1.0 / radius, rel=1e-12)
            assert data.kappa_profile == pytest.approx(-1.0 / radius, rel=1e-12)
            assert data.mean == pytest.approx(-params.n / radius, rel=1e-12)
            assert data.support == pytest.approx(radius, rel=1e-12)
            assert data.residual == pytest.approx(0.0, abs=1e-12)

    def test_hand_worked_state(self):
        # direct substitution at x=0, r=1, theta=pi/4, n=2, lam=-1
        params = derive_constants(2, -1.0)
        data = curvatures(ProfileState(0.0, 0.0, 1.0, math.pi / 4.0), params)
        assert data.kappa_rot == pytest.approx(-math.sqrt(2.0) / 2.0, rel=1e-14)
        assert data.kappa_profile == pytest.approx(-1.0, rel=1e-14)

    def test_mean_identity_and_profile_is_rhs(self):
        rng = np.random.default_rng(7)
        params = derive_constants(3, -0.8)
        for _ in range(50):
            state = ProfileState(
                s=0.0,
                x=float(rng.uniform(-2, 2)),
                r=float(rng.uniform(0.05, 3.0)),
                theta=float(rng.uniform(-7, 7)),
            )
            data = curvatures(state, params)
            assert data.mean == data.kappa_profile + (params.n - 1) * data.kappa_rot
            assert data.kappa_profile == rhs(state, params)[2]
            assert abs(data.residual) < 1e-12


class TestExactSolutions:
    def test_cylinder_state(self):
        params = derive_constants(2, -1.0)
        state = exact_cylinder(params, 1.7)
        assert (state.x, state.r, state.theta) == (1.7, params.c_lambda, 0.0)
        assert curvatures(state, params).residual == pytest.approx(0.0, abs=1e-13)

    def test_sphere_midpoint(self):
        params = derive_constants(2, -1.0)
        state = exact_sphere(params, 0.5 * math.pi * params.r_lambda)
        assert state.x == pytest.approx(0.0, abs=1e-15)
        assert state.r == pytest.approx(params.r_lambda, rel=1e-15)
        assert state.theta == pytest.approx(0.0, abs=1e-15)

    def test_sphere_endpoint_limits(self):
        params = derive_constants(2, -1.0)
        eps = 1e-8
        near0 = exact_sphere(params, eps)
        near1 = exact_sphere(params, math.pi * params.r_lambda - eps)
        assert near0.r < 2 * eps and near1.r < 2 * eps
        assert near0.theta == pytest.approx(0.5 * math.pi, abs=1e-7)
        assert near1.theta == pytest.approx(-0.5 * math.pi, abs=1e-7)

    def test_sphere_domain(self):
        params = derive_constants(2, -1.0)
        for bad in (0.0, -0.1, math.pi * params.r_lambda):
            with pytest.raises(ValueError):
                exact_sphere(params, bad)

    def test_sphere_curvature_constant_in_s(self):
        params = derive_constants(2, -1.0)
        radius = params.r_lambda
        ss = np.linspace(1e-3, math.pi - 1e-3, 500) * radius
        vals = [curvatures(exact_sphere(params, s), params) for s in ss]
        for field in ("kappa_rot", "kappa_profile", "mean"):
            col = [getattr(v, field) for v in vals]
            assert max(col) - min(col) < 1e-10


def test_theta_second_matches_finite_difference():
    params = derive_constants(2, -1.0)
    radius = params.r_lambda
    h = 1e-6
    for u in (0.5, 1.3, 2.4):
        s = radius * u
        td = [rhs(exact_sphere(params, s + k * h), params)[2] for k in (-1, 0, 1)]
        fd = (td[2] - td[0]) / (2 * h)
        assert theta_second(exact_sphere(params, s), params) == pytest.approx(fd, abs=1e-6)
