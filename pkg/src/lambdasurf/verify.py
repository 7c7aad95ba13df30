"""Executable property suites for the solver and classifier.

Each suite returns a list of :class:`CheckResult`; the CLI ``verify``
command prints one line per check and exits nonzero on any failure.  The
suites cover:

``exact-solutions``
    Cylinder and sphere reproduction, residual identity, curvature
    constancy on the round solution, quadratic identities of the derived
    constants, tolerance scaling, reflection symmetry of the flow, and the
    convergence order of the singular axis launch.

``invariants``
    Structural properties of every integrated segment in a reference batch
    of trajectories: per-segment zero counts, sign propagation of
    f' * f'' toward larger radius, transversality of events, completeness
    of the event list at ten-fold sample resolution, endpoint bounds, the
    even-segment dichotomy, and class stability under small launch
    perturbations.

``linearization``
    Hermite-polynomial oracles for the cylinder linearization and
    stability of its zeros under tolerance halving.

``shooting``
    The full closing-curve construction (slowest suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classify import CurveClass, classify, fprime_from_theta, fsecond_from_state, segment
from .integrate import (
    EventKind,
    IntegrationControls,
    Trajectory,
    evaluate,
    integrate,
    singular_start,
)
from .linearize import count_positive_zeros
from .model import Params, ProfileState, curvatures, derive_constants, exact_sphere, theta_second

__all__ = [
    "CheckResult",
    "SUITES",
    "run_suite",
    "reference_batch",
    "segment_property_checks",
    "singular_launch_order",
    "sphere_deviation",
    "cylinder_deviation",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        suffix = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}{suffix}"


def _check(name: str, passed: bool, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


# ---------------------------------------------------------------------------
# Closed-form reference runs
# ---------------------------------------------------------------------------

def sphere_deviation(params: Params, rel_tol: float = 1e-10,
                     r0: float = 1e-4) -> float:
    """Max state deviation of the integrated sphere from the closed form."""
    start = singular_start(-params.r_lambda, "ascending", params, r0=r0)
    controls = IntegrationControls(rel_tol=rel_tol, abs_tol=rel_tol * 1e-2,
                                   s_max=math.pi * params.r_lambda + 1.0)
    traj = integrate(start, params, controls)
    radius = params.r_lambda
    ss = np.linspace(max(traj.s_start, 1e-3), min(traj.s_end, math.pi * radius - 1e-3), 800)
    y = traj.evaluate_array(ss)
    u = ss / radius
    exact = np.stack([-radius * np.cos(u), radius * np.sin(u), 0.5 * math.pi - u])
    return float(np.max(np.abs(y - exact)))


def cylinder_deviation(params: Params, s_max: float = 5.0,
                       rel_tol: float = 1e-10) -> float:
    """Max radial drift of the integrated cylinder from its constant value."""
    traj = integrate(
        ProfileState(s=0.0, x=0.0, r=params.c_lambda, theta=0.0),
        params,
        IntegrationControls(rel_tol=rel_tol, abs_tol=rel_tol * 1e-2, s_max=s_max),
    )
    return float(np.max(np.abs(traj.y_grid[1] - params.c_lambda)))


def singular_launch_order(
    params: Params,
    b: float,
    s_probe: float = 0.1,
    radii: tuple[float, ...] = (1e-3, 5e-4, 2.5e-4),
) -> float:
    """Observed convergence order of the Taylor launch in the launch radius.

    States at a fixed arc length are compared across a halving sequence of
    launch radii; the Richardson ratio of successive differences gives the
    order.  The launch truncation is O(r0**3), so values >= 2.5 certify it.
    """
    controls = IntegrationControls(rel_tol=1e-12, abs_tol=1e-14, s_max=s_probe + 0.05)
    states = []
    for r0 in radii:
        start = singular_start(b, "ascending", params, r0=r0)
        traj = integrate(start, params, controls)
        states.append(traj.evaluate_array(s_probe))
    d1 = float(np.max(np.abs(states[0] - states[1])))
    d2 = float(np.max(np.abs(states[1] - states[2])))
    if d2 == 0.0:
        return math.inf
    return math.log2(d1 / d2)


# ---------------------------------------------------------------------------
# Per-trajectory structural checks
# ---------------------------------------------------------------------------

def residual_check(name: str, traj: Trajectory, bound: float = 1e-6) -> CheckResult:
    worst = float(np.max(np.abs(traj.curvature_table()["residual"])))
    return _check(f"residual<{bound:g} [{name}]", worst < bound, f"max {worst:.2e}")


def transversality_check(name: str, traj: Trajectory) -> CheckResult:
    floor = traj.controls.slope_floor
    bad = []
    for e in traj.events:
        if e.kind is EventKind.R_AXIS_TURN:
            td = float(traj.thetadot(e.s))
            if abs(td) <= floor:
                bad.append((e.kind.value, e.s, td))
        elif e.kind is EventKind.THETA_DOT_ZERO:
            tdd = theta_second(e.state, traj.params)
            if abs(tdd) <= floor:
                bad.append((e.kind.value, e.s, tdd))
    return _check(f"transversality [{name}]", not bad, f"violations: {bad}" if bad else "")


def event_completeness_check(name: str, traj: Trajectory) -> CheckResult:
    """Rescan the dense output at 10x sample resolution: every transversal
    sign change of sin(theta), cos(theta), thetadot must match an event."""
    s_grid = traj.s_grid
    if len(s_grid) < 2:
        return _check(f"event completeness [{name}]", True, "trivial")
    frac = np.linspace(0.0, 1.0, 11)[:-1]
    nodes = (s_grid[:-1, None] + np.diff(s_grid)[:, None] * frac[None, :]).ravel()
    nodes = np.append(nodes, s_grid[-1])
    y = traj.evaluate_array(nodes)
    x, r, theta = y
    ct, st = np.cos(theta), np.sin(theta)
    td = traj.thetadot(nodes)

    missing = []
    for kind, vals in ((EventKind.R_AXIS_TURN, st),
                       (EventKind.F_PRIME_ZERO, ct),
                       (EventKind.THETA_DOT_ZERO, td)):
        ev_s = np.array([e.s for e in traj.events_of(kind)])
        prod = vals[:-1] * vals[1:]
        for i in np.flatnonzero(prod < 0.0):
            a, b = nodes[i], nodes[i + 1]
            # Transversality screen at the bracketing nodes.
            rate = abs(vals[i + 1] - vals[i]) / max(b - a, 1e-300)
            if rate <= traj.controls.slope_floor:
                continue
            if ev_s.size == 0 or np.min(np.abs(ev_s - 0.5 * (a + b))) > (b - a):
                missing.append((kind.value, float(0.5 * (a + b))))
    return _check(f"event completeness [{name}]", not missing,
                  f"unmatched: {missing}" if missing else "")


def segment_zero_count_check(name: str, traj: Trajectory) -> CheckResult:
    bad = []
    for seg in segment(traj):
        nfp, nfs = len(seg.fprime_zeros), len(seg.fsecond_zeros)
        if seg.complete and (nfp > 1 or nfs > 1 or (nfp == 1 and nfs == 1)):
            bad.append((seg.index, nfp, nfs))
    return _check(f"zero counts [{name}]", not bad, f"violations: {bad}" if bad else "")


def sign_propagation_check(name: str, traj: Trajectory, probes: int = 100) -> CheckResult:
    """Once f'*f'' > 0 at some radius inside a segment it stays positive
    toward the segment's larger-radius end."""
    bad = []
    for seg in segment(traj):
        span = seg.s_end - seg.s_start
        ss = np.linspace(seg.s_start + 1e-3 * span, seg.s_end - 1e-3 * span, probes)
        y = traj.evaluate_array(ss)
        theta = y[2]
        td = np.asarray(traj.thetadot(ss))
        with np.errstate(divide="ignore", invalid="ignore"):
            fp = fprime_from_theta(theta)
            fs = fsecond_from_state(theta, td)
        ok = (np.abs(np.cos(theta)) > 1e-9) & (np.abs(td) > 1e-9) \
            & (np.abs(np.sin(theta)) > 1e-12)
        order = np.argsort(y[1][ok])
        prod = np.sign(fp[ok] * fs[ok])[order]
        became_positive = False
        for val in prod:
            if val > 0:
                became_positive = True
            elif became_positive and val < 0:
                bad.append(seg.index)
                break
    return _check(f"sign propagation [{name}]", not bad,
                  f"segments: {bad}" if bad else "")


def endpoint_bounds_check(name: str, traj: Trajectory) -> CheckResult:
    """Endpoint bounds per segment kind: strictly convex ascending arcs
    turn above the cylinder radius; descending arcs end below the
    reversed-sign cylinder radius; unbounded arcs grow past twice the
    sphere radius."""
    p = traj.params
    issues = []
    for seg in segment(traj):
        ss = np.linspace(seg.s_start + 1e-6, seg.s_end - 1e-6, 64)
        y = traj.evaluate_array(ss)
        theta = y[2]
        td = np.asarray(traj.thetadot(ss))
        with np.errstate(divide="ignore", invalid="ignore"):
            fp = fprime_from_theta(theta)
            fs = fsecond_from_state(theta, td)
        if seg.complete and seg.orientation == "ascending" and \
                np.all(fp > 0) and np.all(fs > 0):
            if not seg.r_end > p.c_lambda:
                issues.append((seg.index, "ascending convex arc turned below c_lambda"))
        if seg.complete and seg.orientation == "descending":
            if not seg.r_end < p.c_minus_lambda:
                issues.append((seg.index, "descending arc ended above c_minus_lambda"))
        if not seg.complete and seg.ends_at in (EventKind.BUDGET, EventKind.BLOWUP) \
                and np.all(fp * fs < 0) and len(seg.fprime_zeros) + len(seg.fsecond_zeros) == 0:
            if not float(np.max(traj.y_grid[1])) > 2.0 * p.r_lambda:
                issues.append((seg.index, "mixed-sign tail stayed below 2*r_lambda"))
    return _check(f"endpoint bounds [{name}]", not issues,
                  f"{issues}" if issues else "")


def even_dichotomy_check(name: str, traj: Trajectory) -> CheckResult:
    """Even-index segments: complete ones carry exactly one zero (type 1
    or 2); an axis-exhausting final even segment is a perpendicular
    type-3 arc."""
    issues = []
    cls = classify(traj)
    segs = segment(traj)
    for seg in segs:
        if seg.index % 2 != 0:
            continue
        nz = len(seg.fprime_zeros) + len(seg.fsecond_zeros)
        if seg.complete and nz != 1:
            issues.append((seg.index, f"complete even segment with {nz} zeros"))
        if not seg.complete and seg.ends_at is EventKind.AXIS_HIT \
                and len(cls.types) >= seg.index:
            if cls.types[seg.index - 1] != 3:
                issues.append((seg.index, "axis-exhausted even segment not type 3"))
    return _check(f"even dichotomy [{name}]", not issues,
                  f"{issues}" if issues else "")


def segment_property_checks(
    named: list[tuple[str, Trajectory]],
    residual_bound: float = 1e-6,
) -> list[CheckResult]:
    """All structural checks over a batch of named trajectories."""
    out: list[CheckResult] = []
    for name, traj in named:
        out.append(residual_check(name, traj, residual_bound))
        out.append(transversality_check(name, traj))
        out.append(event_completeness_check(name, traj))
        out.append(segment_zero_count_check(name, traj))
        out.append(sign_propagation_check(name, traj))
        out.append(endpoint_bounds_check(name, traj))
        out.append(even_dichotomy_check(name, traj))
    return out


def reflection_symmetry_check(params: Params, delta: float) -> CheckResult:
    """Backward integration equals the (x, theta)-mirrored forward run."""
    controls = IntegrationControls(s_max=3.0, rel_tol=1e-11, abs_tol=1e-13)
    start = ProfileState(s=0.0, x=0.0, r=delta, theta=0.0)
    fwd = integrate(start, params, controls)
    bwd = integrate(start, params, controls, direction=-1)
    s_hi = min(fwd.s_end, -bwd.s_end)
    ss = np.linspace(0.0, 0.98 * s_hi, 200)
    yf = fwd.evaluate_array(ss)
    yb = bwd.evaluate_array(-ss)
    dev = float(np.max(np.abs(yb - np.stack([-yf[0], yf[1], -yf[2]]))))
    return _check(f"reflection symmetry [delta={delta}]", dev < 1e-8, f"max dev {dev:.2e}")


# ---------------------------------------------------------------------------
# Reference batch
# ---------------------------------------------------------------------------

def reference_batch() -> list[tuple[str, Trajectory]]:
    """Standard trajectories exercising both families and the closing run."""
    out: list[tuple[str, Trajectory]] = []
    p1 = derive_constants(2, -1.0)
    p5 = derive_constants(2, -math.sqrt(5.0))

    out.append((
        "cylinder lam=-1",
        integrate(ProfileState(0.0, 0.0, p1.c_lambda, 0.0), p1,
                  IntegrationControls(s_max=5.0)),
    ))
    for p, tag in ((p1, "lam=-1"), (p5, "lam=-sqrt5")):
        out.append((
            f"sphere {tag}",
            integrate(singular_start(-p.r_lambda, "ascending", p), p,
                      IntegrationControls(s_max=math.pi * p.r_lambda + 1.0)),
        ))
    for d in (0.004, 0.009, 0.014, 0.02):
        out.append((
            f"height delta={d} lam=-1",
            integrate(ProfileState(0.0, 0.0, d, 0.0), p1,
                      IntegrationControls(s_max=25.0)),
        ))
    for b in (-0.9, -0.5, 0.0, 0.5, 0.9):
        out.append((
            f"axis b={b} lam=-1",
            integrate(singular_start(b, "ascending", p1), p1,
                      IntegrationControls(s_max=25.0)),
        ))
    out.append((
        "height delta=0.97C lam=-sqrt5",
        integrate(ProfileState(0.0, 0.0, 0.97 * p5.c_lambda, 0.0), p5,
                  IntegrationControls(s_max=25.0)),
    ))
    out.append((
        "near-closing lam=-sqrt5",
        integrate(ProfileState(0.0, 0.0, 0.2508478522356621, 0.0), p5,
                  IntegrationControls(s_max=10.0, r_min=5e-4,
                                      rel_tol=1e-12, abs_tol=1e-14)),
    ))
    return out


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def suite_exact_solutions() -> list[CheckResult]:
    out: list[CheckResult] = []
    for lam in (-1.0, -math.sqrt(5.0)):
        p = derive_constants(2, lam)
        dev_s = sphere_deviation(p)
        out.append(_check(f"sphere reproduction lam={lam:.6g}", dev_s < 1e-7,
                          f"max err {dev_s:.2e}"))
        dev_c = cylinder_deviation(p)
        out.append(_check(f"cylinder reproduction lam={lam:.6g}", dev_c < 1e-8,
                          f"max drift {dev_c:.2e}"))

    p = derive_constants(2, -1.0)
    ss = np.linspace(1e-3 * math.pi, (1 - 1e-3) * math.pi, 400) * p.r_lambda
    kappas = [curvatures(exact_sphere(p, s), p) for s in ss]
    spread = max(
        max(k.kappa_rot for k in kappas) - min(k.kappa_rot for k in kappas),
        max(k.mean for k in kappas) - min(k.mean for k in kappas),
    )
    out.append(_check("sphere curvature constancy", spread < 1e-10,
                      f"spread {spread:.2e}"))

    worst_rel = 0.0
    for n in range(2, 11):
        for lam in np.linspace(-100.0, 100.0, 41):
            q = derive_constants(n, float(lam))
            for root, offset in ((q.c_lambda, n - 1), (q.r_lambda, n),
                                 (q.c_minus_lambda, n - 1), (q.r_minus_lambda, n)):
                lam_eff = lam if root in (q.c_lambda, q.r_lambda) else -lam
                res = root * root - lam_eff * root - offset
                scale = root * root + abs(lam_eff * root) + offset
                worst_rel = max(worst_rel, abs(res) / scale)
    out.append(_check("derived-constant quadratics", worst_rel < 1e-14,
                      f"worst relative residual {worst_rel:.2e}"))

    p5 = derive_constants(2, -math.sqrt(5.0))
    coarse = sphere_deviation(p5, rel_tol=1e-6)
    fine = sphere_deviation(p5, rel_tol=1e-10)
    out.append(_check("tolerance scaling", fine < coarse / 10.0,
                      f"err(1e-6)={coarse:.2e} err(1e-10)={fine:.2e}"))

    out.append(reflection_symmetry_check(p, 0.3))

    order = singular_launch_order(p, b=0.0)
    out.append(_check("singular launch order >= 2.5", order >= 2.5,
                      f"observed {order:.2f}"))
    return out


def suite_invariants() -> list[CheckResult]:
    out = segment_property_checks(reference_batch())
    # Class stability at generic heights.
    p1 = derive_constants(2, -1.0)
    for d in (0.009, 0.02):
        labels = set()
        for eps in (-1e-6, 0.0, 1e-6):
            traj = integrate(ProfileState(0.0, 0.0, d + eps, 0.0), p1,
                             IntegrationControls(s_max=25.0))
            labels.add(classify(traj, max_segments=2).label)
        out.append(_check(f"class stability delta={d}", len(labels) == 1,
                          f"labels {sorted(labels)}"))
    return out


def suite_linearization() -> list[CheckResult]:
    out: list[CheckResult] = []
    import mpmath as mp

    mp.mp.dps = 40
    cases = {2.0: [1.0], 6.0: sorted(float(mp.sqrt(t)) for t in mp.polyroots([1, -15, 45, -15]))}
    for c_target, oracle in cases.items():
        big_c = 1.0 / math.sqrt(c_target - 1.0)
        lam = (big_c * big_c - 1.0) / big_c
        sol = count_positive_zeros(derive_constants(2, lam))
        ok = (sol.count == len(oracle)
              and max(abs(a - b) for a, b in zip(sol.zeros, oracle)) < 1e-8
              and all(abs(s) > 1e-8 for s in sol.zero_slopes))
        out.append(_check(f"polynomial case c={c_target:g}", ok,
                          f"count {sol.count}, zeros {sol.zeros}"))
    sol_a = count_positive_zeros(derive_constants(2, -1.0), rel_tol=1e-12)
    sol_b = count_positive_zeros(derive_constants(2, -1.0), rel_tol=5e-13)
    stable = sol_a.count == sol_b.count and all(
        abs(a - b) < 1e-8 for a, b in zip(sol_a.zeros, sol_b.zeros))
    out.append(_check("zero stability under tolerance halving", stable,
                      f"{sol_a.zeros} vs {sol_b.zeros}"))
    return out


def suite_shooting() -> list[CheckResult]:
    from .shoot import find_delta_s

    out: list[CheckResult] = []
    res = find_delta_s(derive_constants(2, -math.sqrt(5.0)), tol_delta=1e-6)
    out.append(_check("bracket width < 1e-6",
                      res.bracket[1] - res.bracket[0] < 1e-6))
    out.append(_check("closing class C2(2,3)", res.closing_class.label == "C2(2,3)"))
    out.append(_check("bracket classes",
                      res.class_at[1] == "C2(2,2)" and res.class_at[0] != "C2(2,2)",
                      f"{res.class_at}"))
    out.append(_check("closure r_end < 1e-3", res.closure.r_end < 1e-3,
                      f"{res.closure.r_end:.2e}"))
    out.append(_check("closure |cos| < 0.05", res.closure.abs_cos_theta_end < 0.05,
                      f"{res.closure.abs_cos_theta_end:.2e}"))
    out.append(_check("embedded profile", res.embedded))
    out.append(_check("mean convex after flip", res.convexity.min_mean > 0.0,
                      f"min H {res.convexity.min_mean:.6f}"))
    out.append(_check("non-convex after flip",
                      res.convexity.kappa_profile_sign_changes >= 2,
                      f"{res.convexity.kappa_profile_sign_changes} sign changes"))
    return out


SUITES = {
    "exact-solutions": suite_exact_solutions,
    "invariants": suite_invariants,
    "linearization": suite_linearization,
    "shooting": suite_shooting,
}


def run_suite(name: str) -> list[CheckResult]:
    """Run one suite by name, or every suite for ``"all"``."""
    if name == "all":
        out: list[CheckResult] = []
        for key in SUITES:
            out.extend(SUITES[key]())
        return out
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name]()
