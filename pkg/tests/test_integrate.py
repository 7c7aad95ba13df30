import math

import numpy as np
import pytest
import sympy as sp

from lambdasurf.integrate import (
    EventKind,
    IntegrationControls,
    evaluate,
    integrate,
    singular_start,
    trajectory_from_json,
    trajectory_to_csv,
    trajectory_to_json,
)
from lambdasurf.model import AxisSingularityError, ProfileState, derive_constants
from lambdasurf.verify import (
    event_completeness_check,
    reflection_symmetry_check,
    singular_launch_order,
    transversality_check,
)


@pytest.fixture(scope="module")
def params_neg1():
    return derive_constants(2, -1.0)


@pytest.fixture(scope="module")
def sphere_traj(params_neg1):
    start = singular_start(-params_neg1.r_lambda, "ascending", params_neg1)
    return integrate(start, params_neg1, IntegrationControls(s_max=5.0))


class TestSphere:
    def test_matches_closed_form(self, params_neg1, sphere_traj):
        radius = params_neg1.r_lambda
        ss = np.linspace(0.01, math.pi * radius - 0.01, 400)
        ss = ss[(ss > sphere_traj.s_start) & (ss < sphere_traj.s_end)]
        y = sphere_traj.evaluate_array(ss)
        u = ss / radius
        exact = np.stack([-radius * np.cos(u), radius * np.sin(u), 0.5 * math.pi - u])
        assert np.max(np.abs(y - exact)) < 1e-7

    def test_ends_on_axis_at_positive_foot(self, params_neg1, sphere_traj):
        assert sphere_traj.terminal == "AxisHit"
        end = sphere_traj.final_state
        assert end.r <= sphere_traj.controls.r_min * (1 + 1e-9)
        assert end.x == pytest.approx(params_neg1.r_lambda, abs=1e-6)

    def test_midpoint_state(self, params_neg1, sphere_traj):
        state = evaluate(sphere_traj, 0.5 * math.pi * params_neg1.r_lambda)
        assert state.x == pytest.approx(0.0, abs=1e-7)
        assert state.r == pytest.approx(params_neg1.r_lambda, abs=1e-7)
        assert state.theta == pytest.approx(0.0, abs=1e-7)


class TestCylinder:
    def test_stays_on_constant_radius(self, params_neg1):
        start = ProfileState(0.0, 0.0, params_neg1.c_lambda, 0.0)
        traj = integrate(start, params_neg1,
                         IntegrationControls(rel_tol=1e-11, abs_tol=1e-13, s_max=5.0))
        assert traj.terminal == "Budget"
        assert np.max(np.abs(traj.y_grid[1] - params_neg1.c_lambda)) < 1e-8

    def test_no_turning_events(self, params_neg1):
        start = ProfileState(0.0, 0.0, params_neg1.c_lambda, 0.0)
        traj = integrate(start, params_neg1, IntegrationControls(s_max=5.0))
        assert traj.events_of(EventKind.R_AXIS_TURN) == []
        assert traj.events_of(EventKind.THETA_DOT_ZERO) == []


def test_small_height_event_order(params_neg1):
    # inflection first, then the turning point
    traj = integrate(ProfileState(0.0, 0.0, 0.009, 0.0), params_neg1,
                     IntegrationControls(s_max=20.0))
    structural = [e for e in traj.events
                  if e.kind in (EventKind.THETA_DOT_ZERO, EventKind.R_AXIS_TURN,
                                EventKind.F_PRIME_ZERO)]
    assert structural[0].kind is EventKind.THETA_DOT_ZERO
    assert structural[1].kind is EventKind.R_AXIS_TURN


class TestSingularStart:
    def test_constant_line_launch(self, params_neg1):
        # b = -lam launches on the vertical-line solution
        state = singular_start(-params_neg1.lam, "ascending", params_neg1)
        assert state.x == -params_neg1.lam
        assert state.theta == pytest.approx(0.5 * math.pi, abs=1e-15)
        traj = integrate(state, params_neg1, IntegrationControls(s_max=1.0))
        assert np.max(np.abs(traj.y_grid[0] + params_neg1.lam)) < 1e-9

    def test_curvature_coefficient_against_series_oracle(self):
        # Solve the graph equation near the axis with a symbolic quadratic
        # ansatz: the r -> 0 limit pins f''(0) independently of the
        # implementation.
        r, b, lam, n, a2 = sp.symbols("r b lam n a2", real=True)
        f = b + a2 * r**2
        lhs = sp.diff(f, r, 2) / (1 + sp.diff(f, r) ** 2)
        rhs_ = (r - (n - 1) / r) * sp.diff(f, r) - f - lam * sp.sqrt(1 + sp.diff(f, r) ** 2)
        limit_eq = sp.limit(lhs - rhs_, r, 0, dir="+")
        a2_solved = sp.solve(sp.Eq(limit_eq, 0), a2)[0]
        fpp0_oracle = sp.simplify(2 * a2_solved)

        cases = [(2, -math.sqrt(5.0), 0.0), (2, -1.0, 0.5), (3, -2.0, -0.3)]
        for n_val, lam_val, b_val in cases:
            oracle = float(fpp0_oracle.subs({n: n_val, lam: lam_val, b: b_val}))
            params = derive_constants(n_val, lam_val)
            r0 = 1e-5
            state = singular_start(b_val, "ascending", params, r0=r0)
            fp = math.cos(state.theta) / math.sin(state.theta)
            assert fp / r0 == pytest.approx(oracle, rel=1e-9)
            assert state.x - b_val == pytest.approx(0.5 * oracle * r0**2, rel=1e-9)
        # the specific value sqrt(5)/2 at n=2, lam=-sqrt(5), b=0
        assert float(fpp0_oracle.subs({n: 2, lam: -math.sqrt(5.0), b: 0.0})) == \
            pytest.approx(math.sqrt(5.0) / 2.0, rel=1e-12)

    def test_descending_branch_sign(self, params_neg1):
        state = singular_start(0.3, "descending", params_neg1)
        assert math.sin(state.theta) < 0
        # descending arrivals have f''(0) = (lam - b)/n
        fp = math.cos(state.theta) / math.sin(state.theta)
        assert fp / state.r == pytest.approx(
            (params_neg1.lam - 0.3) / params_neg1.n, rel=1e-7)

    def test_launch_convergence_order(self, params_neg1):
        order = singular_launch_order(params_neg1, b=0.0)
        assert order >= 2.5

    def test_rejects_bad_arguments(self, params_neg1):
        with pytest.raises(ValueError):
            singular_start(0.0, "sideways", params_neg1)
        with pytest.raises(ValueError):
            singular_start(0.0, "ascending", params_neg1, r0=0.0)


class TestEvaluate:
    def test_samples_reproduced(self, sphere_traj):
        for state in sphere_traj.samples[:: max(1, len(sphere_traj.samples) // 7)]:
            val = evaluate(sphere_traj, state.s)
            assert val.x == pytest.approx(state.x, abs=1e-12)
            assert val.r == pytest.approx(state.r, abs=1e-12)

    def test_event_states_reproduced(self, sphere_traj):
        for event in sphere_traj.events:
            val = evaluate(sphere_traj, event.s)
            assert val.r == pytest.approx(event.state.r, abs=1e-9)

    def test_out_of_range(self, sphere_traj):
        with pytest.raises(ValueError):
            evaluate(sphere_traj, sphere_traj.s_end + 1.0)


class TestGuardsAndValidation:
    def test_initial_below_cutoff(self, params_neg1):
        with pytest.raises(AxisSingularityError):
            integrate(ProfileState(0.0, 0.0, 1e-8, 0.0), params_neg1)

    def test_controls_validation(self):
        with pytest.raises(ValueError):
            IntegrationControls(rel_tol=-1.0).validate()
        with pytest.raises(ValueError):
            IntegrationControls(rel_tol=1e-12, event_tol=1e-10).validate()

    def test_blowup_guard(self, params_neg1):
        # a curve fleeing along the cylinder direction trips the |x| guard
        traj = integrate(ProfileState(0.0, 0.0, params_neg1.c_lambda, 0.0),
                         params_neg1,
                         IntegrationControls(s_max=100.0, x_max=8.0))
        assert traj.terminal == "Blowup"
        assert abs(traj.final_state.x) == pytest.approx(8.0, abs=1e-9)


class TestEventQuality:
    def test_completeness_and_transversality(self, params_neg1):
        for delta in (0.009, 0.3):
            traj = integrate(ProfileState(0.0, 0.0, delta, 0.0), params_neg1,
                             IntegrationControls(s_max=20.0))
            assert event_completeness_check("t", traj).passed
            assert transversality_check("t", traj).passed

    def test_reflection_symmetry(self, params_neg1):
        assert reflection_symmetry_check(params_neg1, 0.3).passed


class TestSerialization:
    def test_csv_columns(self, sphere_traj, tmp_path):
        path = tmp_path / "traj.csv"
        trajectory_to_csv(sphere_traj, str(path))
        header = path.read_text().splitlines()[0]
        assert header == "s,x,r,theta,thetadot,H,kappa_rot,kappa_profile,residual"
        rows = path.read_text().splitlines()[1:]
        assert len(rows) == len(sphere_traj.s_grid)

    def test_json_roundtrip_bytes(self, sphere_traj):
        text = trajectory_to_json(sphere_traj)
        rebuilt = trajectory_from_json(text)
        assert trajectory_to_json(rebuilt) == text

    def test_deserialized_interpolation(self, sphere_traj):
        rebuilt = trajectory_from_json(trajectory_to_json(sphere_traj))
        ss = np.linspace(sphere_traj.s_start, sphere_traj.s_end, 257)
        dev = np.max(np.abs(rebuilt.evaluate_array(ss) - sphere_traj.evaluate_array(ss)))
        assert dev < 1e-8
        assert rebuilt.terminal == sphere_traj.terminal
        assert [e.kind for e in rebuilt.events] == [e.kind for e in sphere_traj.events]
