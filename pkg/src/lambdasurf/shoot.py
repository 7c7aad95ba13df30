"""Parameter scans and the shooting argument for the closing profile curve.

Two one-parameter families are scanned (both require ``lam < 0``):

* the height family: curves launched from ``(0, delta)`` on the r-axis with
  horizontal tangent, ``0 < delta < c_lambda``;
* the axis family: curves launched from ``(b, 0)`` on the rotation axis
  with vertical tangent via the singular Taylor start.

For ``lam <= -4*sqrt((n-1)/5)`` the height family changes class exactly
once: near ``c_lambda`` the curves oscillate about the cylinder and belong
to C2(2,2); near zero they belong to C2(2,1).  The infimum ``delta_s`` of
the C2(2,2) range produces the curve whose second segment runs into the
axis perpendicularly (class C2(2,3)); mirrored across the r-axis it closes
up into a compact surface of revolution.

:func:`find_delta_s` locates that curve in three stages:

1. a geometric grid scan brackets the class change;
2. bisection on the class predicate tightens the bracket (classification
   uses the default axis cutoff; a curve whose near-axis dip falls below
   the cutoff cannot be distinguished from the closing curve, which biases
   the predicate boundary a few cutoff-widths above the true infimum);
3. the closing height is refined by root-finding the *signed* axis miss:
   at a probe radius ``r_p`` the tangent of a perpendicular arrival
   satisfies ``cos(theta) = (x_end - lam)/n * r_p`` up to O(r_p**3), and
   the deviation from that value changes sign across the closing height.
   The deviation responds smoothly to the launch height (measured slope
   O(1)), so the refinement reaches the limits of double precision and the
   reported curve closes to ``|cos(theta_end)| ~ r_end`` over three decades
   of cutoff radius.

The reported bracket is centered on the refined height with width just
under ``tol_delta`` and its end classes re-certified with a finer cutoff.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .classify import CurveClass, classify
from .integrate import EventKind, IntegrationControls, Trajectory, integrate, singular_start
from .model import Params, ProfileState
from . import surface as surface_mod

__all__ = [
    "ScanPoint",
    "ShootResult",
    "ConvergencePoint",
    "ShootNotFoundError",
    "ShootNonConvergenceError",
    "scan_delta",
    "scan_b",
    "find_delta_s",
    "convergence_to_axis_launch",
    "hypothesis_satisfied",
    "scan_to_csv",
    "scan_to_json",
]


class ShootNotFoundError(RuntimeError):
    """No C2(2,2) curve exists on the scan grid."""


class ShootNonConvergenceError(RuntimeError):
    """The bisection could not be driven below the requested tolerance."""


@dataclass(frozen=True)
class ScanPoint:
    """Classification of one family member."""

    param: float
    curve_class: CurveClass

    @property
    def label(self) -> str:
        return self.curve_class.label


@dataclass(frozen=True)
class ClosureMetrics:
    r_end: float
    abs_cos_theta_end: float
    x_end: float


@dataclass
class ShootResult:
    """Outcome of the shooting argument for the closing curve."""

    delta_s: float
    bracket: tuple[float, float]
    closing_trajectory: Trajectory
    closing_class: CurveClass
    closure: ClosureMetrics
    class_at: tuple[str, str]
    convexity: "surface_mod.ConvexityReport"
    embedded: bool
    hypothesis_ok: bool
    monotone_scan: bool
    iterations: int
    scan: list[ScanPoint]

    def to_json(self) -> str:
        doc = {
            "delta_s": self.delta_s,
            "bracket": list(self.bracket),
            "closure": {
                "r_end": self.closure.r_end,
                "abs_cos_theta_end": self.closure.abs_cos_theta_end,
                "x_end": self.closure.x_end,
            },
            "closing_class": self.closing_class.label,
            "class_at": list(self.class_at),
            "embedded": self.embedded,
            "hypothesis_ok": self.hypothesis_ok,
            "monotone_scan": self.monotone_scan,
            "iterations": self.iterations,
            "convexity": self.convexity.to_dict(),
            "scan": [
                {"param": pt.param, "label": pt.label,
                 "partial": pt.curve_class.partial}
                for pt in self.scan
            ],
        }
        return json.dumps(doc, indent=1)


def hypothesis_satisfied(params: Params) -> bool:
    """True when lam <= -4*sqrt((n-1)/5), the range with a guaranteed
    C2(2,2) window below the cylinder height."""
    return params.lam <= -4.0 * math.sqrt((params.n - 1) / 5.0) + 1e-12


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

def _height_start(delta: float) -> ProfileState:
    return ProfileState(s=0.0, x=0.0, r=float(delta), theta=0.0)


def _classify_height(
    delta: float,
    params: Params,
    controls: IntegrationControls,
    max_segments: int = 2,
) -> tuple[CurveClass, Trajectory]:
    traj = integrate(_height_start(delta), params, controls)
    return classify(traj, max_segments=max_segments), traj


def _scan_one(args) -> ScanPoint:
    family, value, params, controls = args
    if family == "delta":
        cls, _ = _classify_height(value, params, controls)
    else:
        start = singular_start(value, "ascending", params)
        traj = integrate(start, params, controls)
        cls = classify(traj, max_segments=2)
    return ScanPoint(param=value, curve_class=cls)


def _run_scan(family: str, grid, params, controls, workers: int) -> list[ScanPoint]:
    jobs = [(family, float(v), params, controls) for v in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_one, jobs))
    return [_scan_one(j) for j in jobs]


def scan_delta(
    params: Params,
    grid,
    controls: IntegrationControls | None = None,
    workers: int = 1,
) -> list[ScanPoint]:
    """Classify the height family through its first two segments.

    ``grid`` values must lie strictly inside ``(0, c_lambda)``; the
    constant solution at the cylinder height never turns and is rejected.
    """
    if params.lam >= 0.0:
        raise ValueError("height-family scans require lam < 0")
    grid = [float(v) for v in grid]
    for v in grid:
        if not 0.0 < v < params.c_lambda:
            raise ValueError(
                f"launch height {v} outside (0, c_lambda={params.c_lambda})"
            )
    controls = controls or IntegrationControls()
    return _run_scan("delta", grid, params, controls, workers)


def scan_b(
    params: Params,
    grid,
    controls: IntegrationControls | None = None,
    workers: int = 1,
) -> list[ScanPoint]:
    """Classify the axis family through its first two segments.

    ``grid`` values are feet on the rotation axis and must satisfy
    ``b < -lam`` (at ``b = -lam`` the family degenerates to the vertical
    line).
    """
    if params.lam >= 0.0:
        raise ValueError("axis-family scans require lam < 0")
    grid = [float(v) for v in grid]
    for v in grid:
        if v >= -params.lam:
            raise ValueError(f"axis foot {v} must be below -lam = {-params.lam}")
    controls = controls or IntegrationControls()
    return _run_scan("b", grid, params, controls, workers)


def scan_to_csv(points: list[ScanPoint], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("param,label,partial,complete,terminal\n")
        for pt in points:
            c = pt.curve_class
            fh.write(f"{pt.param!r},{c.label},{c.partial},{c.complete},{c.terminal}\n")


def scan_to_json(points: list[ScanPoint]) -> str:
    doc = [
        {"param": pt.param, "label": pt.label, "partial": pt.curve_class.partial,
         "complete": pt.curve_class.complete, "terminal": pt.curve_class.terminal}
        for pt in points
    ]
    return json.dumps(doc, indent=1)


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------

def _is_c22(cls: CurveClass) -> bool:
    return cls.matches(2, 2) and not cls.partial


def _classify_with_retries(
    delta: float,
    params: Params,
    controls: IntegrationControls,
) -> tuple[CurveClass, bool]:
    """Classify a height, refining tolerances when the result is partial.

    Returns the class and whether it is trustworthy (non-partial or partial
    even after three refinement rounds).
    """
    cls, _ = _classify_height(delta, params, controls)
    tries = 0
    while cls.partial and len(cls.types) < 2 and tries < 3:
        controls = replace(
            controls,
            rel_tol=controls.rel_tol / 10.0,
            abs_tol=controls.abs_tol / 10.0,
            r_min=controls.r_min / 10.0,
        )
        cls, _ = _classify_height(delta, params, controls)
        tries += 1
    return cls, not (cls.partial and len(cls.types) < 2)


def _signed_axis_miss(
    delta: float,
    params: Params,
    probe_radius: float,
    controls: IntegrationControls,
) -> float:
    """Signed deviation of the arrival tangent from a perpendicular hit.

    Positive on the C2(2,2) side (the curve would turn back up below the
    probe radius), negative on the C2(2,1) side.  When the curve turns
    before reaching the probe radius the sign is taken from its class.
    """
    probe_controls = replace(
        controls,
        r_min=probe_radius,
        rel_tol=min(controls.rel_tol, 1e-12),
        abs_tol=min(controls.abs_tol, 1e-14),
        s_max=min(controls.s_max, 15.0),
    )
    traj = integrate(_height_start(delta), params, probe_controls)
    if traj.terminal == "AxisHit":
        end = traj.final_state
        c_loc = (end.x - params.lam) / params.n
        return math.cos(end.theta) - c_loc * end.r
    # Turned above the probe radius: fall back to the class for the sign.
    cls, _ = _classify_height(delta, params, controls)
    return 1.0 if _is_c22(cls) else -1.0


def find_delta_s(
    params: Params,
    tol_delta: float = 1e-6,
    controls: IntegrationControls | None = None,
    grid_size: int = 64,
    closure_r_min: float = 5e-4,
    probe_radius: float = 1e-3,
    mesh_check: bool = True,
    workers: int = 1,
) -> ShootResult:
    """Locate the infimum height of the C2(2,2) range and close the curve.

    Parameters
    ----------
    params : Params
        Problem constants with ``lam < 0``; the construction is guaranteed
        for ``lam <= -4*sqrt((n-1)/5)`` (violations are attempted anyway
        and reported through ``hypothesis_ok``).
    tol_delta : float
        Reported bracket width (must exceed 4e-13; the class predicate is
        not resolvable below the double-precision noise of the flow map).
    closure_r_min : float
        Axis cutoff for the reported closing trajectory.
    probe_radius : float
        Radius at which the signed axis miss is measured during refinement.

    Raises
    ------
    ShootNotFoundError
        If no grid point classifies C2(2,2).
    ShootNonConvergenceError
        If classification stays partial while the bracket is above
        ``tol_delta``.
    """
    if params.lam >= 0.0:
        raise ValueError("find_delta_s requires lam < 0")
    if not tol_delta > 4e-13:
        raise ValueError("tol_delta must exceed 4e-13")
    controls = controls or IntegrationControls()
    hyp_ok = hypothesis_satisfied(params)

    c_top = params.c_lambda
    grid = np.geomspace(0.02 * c_top, 0.98 * c_top, grid_size)
    scan = _run_scan("delta", grid, params, controls, workers)
    flags = [_is_c22(pt.curve_class) for pt in scan]
    if not any(flags):
        raise ShootNotFoundError(
            "no launch height on the scan grid classifies C2(2,2); "
            f"lam={params.lam} (hypothesis satisfied: {hyp_ok})"
        )

    # Highest class change; extra changes below it mean the C2(2,2) set is
    # not a clean upper interval on this grid.
    i_top = max(i for i, f in enumerate(flags) if f)
    if not flags[-1] or i_top != len(flags) - 1:
        monotone = False
        i_change = i_top - 1
        while i_change >= 0 and flags[i_change]:
            i_change -= 1
        if i_change < 0:
            raise ShootNotFoundError("every scanned height classifies C2(2,2)")
    else:
        i_change = max(i for i, f in enumerate(flags) if not f)
        monotone = all(not f for f in flags[: i_change + 1])

    lo = float(grid[i_change])
    hi = float(grid[i_change + 1])

    # Stage 2: bisection on the class predicate.
    width_target = max(min(tol_delta, 1e-8), 4e-13)
    iterations = 0
    while hi - lo > width_target:
        mid = 0.5 * (lo + hi)
        cls, trusted = _classify_with_retries(mid, params, controls)
        iterations += 1
        if not trusted:
            if hi - lo <= tol_delta:
                break
            raise ShootNonConvergenceError(
                f"classification stays partial at height {mid} with bracket "
                f"width {hi - lo:.3e} > tol_delta={tol_delta}"
            )
        if _is_c22(cls):
            hi = mid
        else:
            lo = mid

    # Stage 3: refine the closing height on the signed axis miss.
    def miss(d: float) -> float:
        return _signed_axis_miss(d, params, probe_radius, controls)

    m_hi = miss(hi)
    delta_star = hi
    if m_hi > 0.0:
        step = max(width_target, 1e-8)
        lo_ref = hi - step
        lo_bound = hi - 0.01 * c_top
        m_lo = miss(lo_ref)
        while m_lo > 0.0 and lo_ref - step > lo_bound:
            step *= 4.0
            lo_ref -= step
            m_lo = miss(lo_ref)
        if m_lo <= 0.0:
            delta_star = float(brentq(miss, lo_ref, hi, xtol=4e-14))
    # m_hi <= 0 would mean the predicate boundary already sits below the
    # closing height; keep the bisection end in that case.

    # Reported bracket: centered on the refined height, width < tol_delta,
    # end classes certified with a finer cutoff.
    g = 0.499 * tol_delta
    cert_controls = replace(controls, r_min=min(controls.r_min, 1e-8))
    cls_lo, _ = _classify_height(delta_star - g, params, cert_controls)
    cls_hi, _ = _classify_height(delta_star + g, params, cert_controls)

    closure_controls = replace(
        controls,
        r_min=closure_r_min,
        rel_tol=min(controls.rel_tol, 1e-12),
        abs_tol=min(controls.abs_tol, 1e-14),
    )
    closing = integrate(_height_start(delta_star), params, closure_controls)
    closing_class = classify(closing, max_segments=3)
    end = closing.final_state
    closure = ClosureMetrics(
        r_end=end.r,
        abs_cos_theta_end=abs(math.cos(end.theta)),
        x_end=end.x,
    )

    profile = surface_mod.mirror_extend(closing)
    embedded = not surface_mod.self_intersection_check(profile)
    convexity = surface_mod.convexity_report(profile, params)

    return ShootResult(
        delta_s=delta_star,
        bracket=(delta_star - g, delta_star + g),
        closing_trajectory=closing,
        closing_class=closing_class,
        closure=closure,
        class_at=(cls_lo.label, cls_hi.label),
        convexity=convexity,
        embedded=embedded,
        hypothesis_ok=hyp_ok,
        monotone_scan=monotone,
        iterations=iterations,
        scan=scan,
    )


# ---------------------------------------------------------------------------
# Convergence of the height family to the origin-launched curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergencePoint:
    delta: float
    hausdorff_distance: float
    r_at_first_inflection: float


def _two_segment_polyline(traj: Trajectory, n_points: int = 1500) -> np.ndarray:
    turns = traj.events_of(EventKind.R_AXIS_TURN)
    s_hi = turns[1].s if len(turns) >= 2 else traj.s_end
    ss = np.linspace(traj.s_start, s_hi, n_points)
    y = traj.evaluate_array(ss)
    return y[:2].T


def convergence_to_axis_launch(
    params: Params,
    deltas,
    controls: IntegrationControls | None = None,
) -> list[ConvergencePoint]:
    """Distance of each height-family curve to the origin-launched curve.

    The reference is the axis-family member with foot at the origin; the
    symmetric Hausdorff distance is measured between the first two graph
    segments of each curve.  The distance and the radius of the first
    inflection both shrink as the launch height decreases.
    """
    if params.lam >= 0.0:
        raise ValueError("lam < 0 required")
    controls = controls or IntegrationControls()
    ref_traj = integrate(singular_start(0.0, "ascending", params), params, controls)
    ref = _two_segment_polyline(ref_traj)
    ref_tree = cKDTree(ref)

    out: list[ConvergencePoint] = []
    for d in deltas:
        traj = integrate(_height_start(float(d)), params, controls)
        pts = _two_segment_polyline(traj)
        d_ab = float(np.max(ref_tree.query(pts)[0]))
        d_ba = float(np.max(cKDTree(pts).query(ref)[0]))
        inflections = traj.events_of(EventKind.THETA_DOT_ZERO)
        r_star = inflections[0].state.r if inflections else math.nan
        out.append(ConvergencePoint(
            delta=float(d),
            hausdorff_distance=max(d_ab, d_ba),
            r_at_first_inflection=r_star,
        ))
    return out
