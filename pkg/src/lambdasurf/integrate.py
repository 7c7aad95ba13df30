"""Adaptive integration of the profile-curve system with event location.

The integrator wraps a high-order adaptive Runge-Kutta scheme (DOP853 via
scipy) with dense output.  Termination guards (axis cutoff, blow-up limits,
arc-length budget) run as terminal solver events; the structural events that
drive classification are located afterwards by scanning the dense output at
sub-step resolution and refining each sign change with a bracketing root
finder.  This keeps constant solutions quiet: the cylinder holds
``sin(theta)`` at rounding level for its whole arc, and crossings whose
rate of change falls below ``slope_floor`` are discarded as noise (genuine
turning points cross at O(1) rates, see the transversality notes in
:mod:`lambdasurf.model`).

Event kinds
-----------
``RAxisTurn``      sin(theta) = 0: the curve loses its graph representation
                   over the r-axis and a new segment starts.
``ThetaDotZero``   dtheta/ds = 0: an inflection of the graph segment.
``FPrimeZero``     cos(theta) = 0: a critical point of the graph segment.
``AxisHit``        r dropped to the axis cutoff ``r_min`` (terminal).
``Blowup``         |x|, |theta| or |dtheta/ds| exceeded a guard (terminal).
``Budget``         the arc-length budget ``s_max`` was exhausted (terminal).

Singular launches
-----------------
Solutions starting on the rotation axis (r = 0) with vertical tangent are
analytic in r; writing the curve there as a graph ``x = f(r)`` with
``f(0) = b``, ``f'(0) = 0``, the limit of the graph equation at r -> 0
forces

    f''(0) = (-lam - b) / n      (ascending branch, dr/ds > 0)
    f''(0) = ( lam - b) / n      (descending branch, dr/ds < 0)

:func:`singular_start` launches from a small radius ``r0`` with the
second-order Taylor polynomial ``f(r0) = b + f''(0)*r0**2/2``,
``f'(r0) = f''(0)*r0``.  The expansion of ``f`` is even in r, so the state
error is O(r0**4) in position and O(r0**3) in angle; the downstream
convergence order is certified empirically by the test suite rather than by
a higher-order launch term.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import (
    AxisSingularityError,
    Params,
    ProfileState,
    derive_constants,
    theta_second,
)

__all__ = [
    "EventKind",
    "Event",
    "IntegrationControls",
    "Trajectory",
    "integrate",
    "singular_start",
    "evaluate",
    "trajectory_to_csv",
    "trajectory_to_json",
    "trajectory_from_json",
]


class EventKind(str, enum.Enum):
    R_AXIS_TURN = "RAxisTurn"
    THETA_DOT_ZERO = "ThetaDotZero"
    F_PRIME_ZERO = "FPrimeZero"
    AXIS_HIT = "AxisHit"
    BLOWUP = "Blowup"
    BUDGET = "Budget"


@dataclass(frozen=True)
class IntegrationControls:
    """Tolerances, guards and budgets for one integration run.

    ``slope_floor`` is the minimum |d/ds| of a crossing function at its root
    for the crossing to count as an event; it separates genuine transversal
    crossings (O(1) rates) from rounding noise around constant solutions.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_min: float = 1e-6
    s_max: float = 40.0
    x_max: float = 50.0
    theta_max: float = 60.0
    event_tol: float = 1e-12
    slope_floor: float = 1e-8
    scan_points: int = 16

    def validate(self) -> None:
        for name in ("rel_tol", "abs_tol", "r_min", "s_max", "x_max",
                     "theta_max", "event_tol", "slope_floor"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.event_tol > self.rel_tol:
            raise ValueError(
                f"event_tol ({self.event_tol}) must not exceed rel_tol ({self.rel_tol})"
            )
        if self.scan_points < 4:
            raise ValueError("scan_points must be >= 4")


@dataclass(frozen=True)
class Event:
    """A located event: kind, arc length, state, and crossing rate."""

    kind: EventKind
    s: float
    state: ProfileState
    slope: float = 0.0


@dataclass
class Trajectory:
    """Integrated profile curve with dense output and ordered events.

    ``samples`` are the accepted solver steps; between samples the solution
    is evaluated through the stored dense-output interpolant.  ``events``
    are ordered by arc length.  ``terminal`` names the stop reason
    (``"AxisHit"``, ``"Blowup"``, ``"Budget"`` or ``"StepFailure"``).
    """

    params: Params
    controls: IntegrationControls
    s_grid: np.ndarray
    y_grid: np.ndarray            # shape (3, len(s_grid)): rows x, r, theta
    events: list[Event]
    terminal: str
    _dense: object | None = field(default=None, repr=False)

    @property
    def s_start(self) -> float:
        return float(self.s_grid[0])

    @property
    def s_end(self) -> float:
        return float(self.s_grid[-1])

    @property
    def samples(self) -> tuple[ProfileState, ...]:
        return tuple(
            ProfileState(s=float(s), x=float(x), r=float(r), theta=float(t))
            for s, x, r, t in zip(self.s_grid, self.y_grid[0], self.y_grid[1], self.y_grid[2])
        )

    @property
    def initial_state(self) -> ProfileState:
        return self.samples[0]

    @property
    def final_state(self) -> ProfileState:
        return self.samples[-1]

    def events_of(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def thetadot(self, s: np.ndarray | float) -> np.ndarray | float:
        """dtheta/ds along the trajectory at arc length(s) ``s``."""
        y = self.evaluate_array(s)
        return _thetadot_of(y, self.params)

    def evaluate_array(self, s: np.ndarray | float) -> np.ndarray:
        """Raw (x, r, theta) values at arc length(s) ``s``."""
        s_arr = np.asarray(s, dtype=float)
        lo, hi = sorted((self.s_start, self.s_end))
        margin = 1e-9 * (1.0 + abs(hi))
        if np.any(s_arr < lo - margin) or np.any(s_arr > hi + margin):
            raise ValueError(
                f"arc length out of range [{lo}, {hi}]: {s_arr}"
            )
        s_arr = np.clip(s_arr, lo, hi)
        if self._dense is not None:
            return self._dense(s_arr)
        return self._hermite(s_arr)

    def _hermite(self, s_arr: np.ndarray) -> np.ndarray:
        # Quintic Hermite fallback for deserialized trajectories: first and
        # second derivatives of (x, r, theta) are known in closed form from
        # the model equations, so each step interval carries C^2 data.
        grid = self.s_grid
        flip = grid[0] > grid[-1]
        g = grid[::-1] if flip else grid
        y = self.y_grid[:, ::-1] if flip else self.y_grid
        idx = np.clip(np.searchsorted(g, s_arr, side="right") - 1, 0, len(g) - 2)
        s0, s1 = g[idx], g[idx + 1]
        h = s1 - s0
        t = np.where(h > 0, (s_arr - s0) / np.where(h > 0, h, 1.0), 0.0)
        y0, y1 = y[:, idx], y[:, idx + 1]
        d0, dd0 = _derivs_of(y0, self.params), _second_derivs_of(y0, self.params)
        d1, dd1 = _derivs_of(y1, self.params), _second_derivs_of(y1, self.params)
        t2, t3 = t * t, t * t * t
        t4, t5 = t2 * t2, t2 * t3
        b0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
        b1 = t - 6 * t3 + 8 * t4 - 3 * t5
        b2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5
        b3 = 10 * t3 - 15 * t4 + 6 * t5
        b4 = -4 * t3 + 7 * t4 - 3 * t5
        b5 = 0.5 * t3 - t4 + 0.5 * t5
        return (b0 * y0 + b1 * h * d0 + b2 * h * h * dd0
                + b3 * y1 + b4 * h * d1 + b5 * h * h * dd1)

    def curvature_table(self, s: np.ndarray | None = None) -> dict[str, np.ndarray]:
        """Columns (s, x, r, theta, thetadot, H, kappa_rot, kappa_profile,
        residual) at the sample grid or at the given arc lengths."""
        if s is None:
            s_arr = self.s_grid
            y = self.y_grid
        else:
            s_arr = np.asarray(s, dtype=float)
            y = self.evaluate_array(s_arr)
        x, r, theta = y
        ct, st = np.cos(theta), np.sin(theta)
        n1 = self.params.n - 1
        thetadot = (n1 / r - r) * ct + x * st + self.params.lam
        kappa_rot = -ct / r
        mean = thetadot + n1 * kappa_rot
        support = -x * st + r * ct
        residual = mean + support - self.params.lam
        return {
            "s": s_arr, "x": x, "r": r, "theta": theta, "thetadot": thetadot,
            "H": mean, "kappa_rot": kappa_rot, "kappa_profile": thetadot,
            "residual": residual,
        }


def _derivs_of(y: np.ndarray, params: Params) -> np.ndarray:
    x, r, theta = y
    ct, st = np.cos(theta), np.sin(theta)
    rr = np.maximum(r, 1e-300)
    return np.stack([ct, st, ((params.n - 1) / rr - rr) * ct + x * st + params.lam])


def _thetadot_of(y: np.ndarray, params: Params) -> np.ndarray | float:
    x, r, theta = y
    rr = np.maximum(r, 1e-300)
    val = ((params.n - 1) / rr - rr) * np.cos(theta) + x * np.sin(theta) + params.lam
    return val


def evaluate(trajectory: Trajectory, s: float) -> ProfileState:
    """Dense-output state of a trajectory at arc length ``s``."""
    y = trajectory.evaluate_array(float(s))
    return ProfileState(s=float(s), x=float(y[0]), r=float(y[1]), theta=float(y[2]))


def singular_start(
    b: float,
    branch: str,
    params: Params,
    r0: float = 1e-4,
) -> ProfileState:
    """State at radius ``r0`` of the analytic solution through ``(b, 0)``.

    Parameters
    ----------
    b : float
        Foot of the curve on the rotation axis (its x-intercept).
    branch : {"ascending", "descending"}
        Sign of dr/ds near the axis.  An ascending launch leaves the axis as
        arc length increases; a descending state arrives at the axis, so
        integrating it forward terminates immediately at the axis cutoff
        (integrate backward, or mirror, to grow the curve).
    params : Params
        Problem constants.
    r0 : float
        Launch radius; the truncation error of the Taylor launch is
        O(r0**3) in the state.

    Arc length is measured from the axis point:
    ``s(r0) = r0 + f''(0)**2 * r0**3 / 6`` to the same order.
    """
    if branch not in ("ascending", "descending"):
        raise ValueError(f"branch must be 'ascending' or 'descending', got {branch!r}")
    if not (0.0 < r0 < 0.1):
        raise ValueError(f"launch radius r0 must lie in (0, 0.1), got {r0}")
    b = float(b)
    sign = 1.0 if branch == "ascending" else -1.0
    fpp0 = (-sign * params.lam - b) / params.n
    fp = fpp0 * r0
    x0 = b + 0.5 * fpp0 * r0 * r0
    s0 = r0 + fpp0 * fpp0 * r0 ** 3 / 6.0
    # theta with sin(theta) matching the branch sign and cot(theta) = f'.
    theta = math.atan2(sign, sign * fp)
    return ProfileState(s=s0, x=x0, r=r0, theta=theta)


def _scan_roots(
    g_scalar: Callable[[float], float],
    s_nodes: np.ndarray,
    g_nodes: np.ndarray,
    xtol: float,
) -> list[float]:
    """Roots of g on a scanned grid: sign changes refined by brentq, plus
    exact zeros at interior nodes."""
    roots: list[float] = []
    prod = g_nodes[:-1] * g_nodes[1:]
    for i in np.flatnonzero(prod < 0.0):
        a_s, b_s = float(s_nodes[i]), float(s_nodes[i + 1])
        roots.append(float(brentq(g_scalar, a_s, b_s, xtol=xtol)))
    for i in np.flatnonzero(g_nodes == 0.0):
        if 0 < i < len(g_nodes) - 1:
            roots.append(float(s_nodes[i]))
    return roots


def integrate(
    initial: ProfileState,
    params: Params,
    controls: IntegrationControls | None = None,
    direction: int = 1,
) -> Trajectory:
    """Integrate the profile system from ``initial`` until a guard fires.

    Parameters
    ----------
    initial : ProfileState
        Starting state with ``r > controls.r_min``.
    params : Params
        Problem constants.
    controls : IntegrationControls, optional
        Tolerances and guards; defaults are suitable for classification runs.
    direction : {1, -1}
        Sign of the arc-length sweep; -1 integrates toward decreasing s.

    Returns
    -------
    Trajectory
        With dense output, the ordered event list, and the stop reason.
    """
    if controls is None:
        controls = IntegrationControls()
    controls.validate()
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if initial.r <= controls.r_min:
        raise AxisSingularityError(
            f"initial radius {initial.r} is not above the axis cutoff {controls.r_min}"
        )

    n1 = params.n - 1
    lam = params.lam
    thetadot_cap = 1.0 / controls.event_tol

    def f(s: float, y: np.ndarray) -> list[float]:
        x, r, theta = y
        rr = r if r > 1e-300 else 1e-300
        ct = math.cos(theta)
        st = math.sin(theta)
        return [ct, st, (n1 / rr - rr) * ct + x * st + lam]

    def ev_axis(s, y):
        return y[1] - controls.r_min

    def ev_x(s, y):
        return controls.x_max - abs(y[0])

    def ev_theta(s, y):
        return controls.theta_max - abs(y[2])

    def ev_thetadot(s, y):
        return thetadot_cap - abs(f(s, y)[2])

    for ev in (ev_axis, ev_x, ev_theta, ev_thetadot):
        ev.terminal = True
        ev.direction = -1

    s0 = initial.s
    s1 = s0 + direction * controls.s_max
    sol = solve_ivp(
        f,
        (s0, s1),
        [initial.x, initial.r, initial.theta],
        method="DOP853",
        dense_output=True,
        events=[ev_axis, ev_x, ev_theta, ev_thetadot],
        rtol=controls.rel_tol,
        atol=controls.abs_tol,
    )

    if sol.status == -1:
        terminal = "StepFailure"
    elif sol.status == 1:
        terminal = "AxisHit" if len(sol.t_events[0]) else "Blowup"
    else:
        terminal = "Budget"

    s_grid = sol.t
    y_grid = sol.y
    dense = sol.sol

    events = _locate_events(params, controls, dense, s_grid, y_grid)

    final = ProfileState(
        s=float(s_grid[-1]), x=float(y_grid[0, -1]),
        r=float(y_grid[1, -1]), theta=float(y_grid[2, -1]),
    )
    kind = {"AxisHit": EventKind.AXIS_HIT, "Blowup": EventKind.BLOWUP,
            "Budget": EventKind.BUDGET}.get(terminal)
    if kind is not None:
        events.append(Event(kind=kind, s=final.s, state=final, slope=0.0))
    events.sort(key=lambda e: e.s * direction)

    return Trajectory(
        params=params,
        controls=controls,
        s_grid=s_grid,
        y_grid=y_grid,
        events=events,
        terminal=terminal,
        _dense=dense,
    )


def _locate_events(
    params: Params,
    controls: IntegrationControls,
    dense,
    s_grid: np.ndarray,
    y_grid: np.ndarray,
) -> list[Event]:
    """Scan the dense output between solver steps for structural events."""
    if len(s_grid) < 2:
        return []
    m = controls.scan_points
    # Sub-step nodes: m intervals per accepted step, endpoints shared.
    fractions = np.linspace(0.0, 1.0, m + 1)[:-1]
    nodes = (s_grid[:-1, None] + np.diff(s_grid)[:, None] * fractions[None, :]).ravel()
    nodes = np.append(nodes, s_grid[-1])

    y = dense(nodes)
    x, r, theta = y
    ct, st = np.cos(theta), np.sin(theta)
    rr = np.maximum(r, 1e-300)
    thetadot = ((params.n - 1) / rr - rr) * ct + x * st + params.lam

    def y_at(s: float) -> tuple[float, float, float]:
        xs, rs, ts = dense(s)
        return float(xs), float(rs), float(ts)

    def g_sin(s: float) -> float:
        return math.sin(y_at(s)[2])

    def g_cos(s: float) -> float:
        return math.cos(y_at(s)[2])

    def g_td(s: float) -> float:
        xs, rs, ts = y_at(s)
        rs = max(rs, 1e-300)
        return ((params.n - 1) / rs - rs) * math.cos(ts) + xs * math.sin(ts) + params.lam

    found: list[tuple[EventKind, float]] = []
    for kind, grid_vals, scalar in (
        (EventKind.R_AXIS_TURN, st, g_sin),
        (EventKind.F_PRIME_ZERO, ct, g_cos),
        (EventKind.THETA_DOT_ZERO, thetadot, g_td),
    ):
        for root in _scan_roots(scalar, nodes, grid_vals, controls.event_tol):
            found.append((kind, root))

    events: list[Event] = []
    seen: dict[EventKind, list[float]] = {}
    for kind, s_e in sorted(found, key=lambda t: t[1]):
        near = seen.setdefault(kind, [])
        if near and abs(s_e - near[-1]) <= 10.0 * controls.event_tol:
            continue
        xs, rs, ts = y_at(s_e)
        state = ProfileState(s=s_e, x=xs, r=rs, theta=ts)
        slope = _crossing_slope(kind, state, params)
        if slope <= controls.slope_floor:
            continue
        near.append(s_e)
        events.append(Event(kind=kind, s=s_e, state=state, slope=slope))
    return events


def _crossing_slope(kind: EventKind, state: ProfileState, params: Params) -> float:
    """|d/ds| of the crossing function at the event state."""
    ct = math.cos(state.theta)
    st = math.sin(state.theta)
    rr = max(state.r, 1e-300)
    thetadot = ((params.n - 1) / rr - rr) * ct + state.x * st + params.lam
    if kind is EventKind.R_AXIS_TURN:
        return abs(ct * thetadot)
    if kind is EventKind.F_PRIME_ZERO:
        return abs(st * thetadot)
    if kind is EventKind.THETA_DOT_ZERO:
        return abs(theta_second(state, params))
    return 0.0


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_CSV_COLUMNS = ("s", "x", "r", "theta", "thetadot", "H", "kappa_rot",
                "kappa_profile", "residual")


def trajectory_to_csv(trajectory: Trajectory, path: str) -> None:
    """Write the sample table (with curvature columns) as CSV."""
    table = trajectory.curvature_table()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_CSV_COLUMNS) + "\n")
        for i in range(len(table["s"])):
            fh.write(",".join(repr(float(table[c][i])) for c in _CSV_COLUMNS) + "\n")


def trajectory_to_json(trajectory: Trajectory) -> str:
    """Canonical JSON text for a trajectory (samples + events).

    Re-serializing the parsed document reproduces the same bytes; floats are
    emitted with ``repr`` round-trip precision.  Dense-output coefficients
    are not serialized; deserialized trajectories interpolate between
    samples with a cubic Hermite rule instead.
    """
    c = trajectory.controls
    doc = {
        "params": {"n": trajectory.params.n, "lambda": trajectory.params.lam},
        "controls": {
            "rel_tol": c.rel_tol, "abs_tol": c.abs_tol, "r_min": c.r_min,
            "s_max": c.s_max, "x_max": c.x_max, "theta_max": c.theta_max,
            "event_tol": c.event_tol, "slope_floor": c.slope_floor,
            "scan_points": c.scan_points,
        },
        "terminal": trajectory.terminal,
        "samples": [
            [float(s), float(x), float(r), float(t)]
            for s, x, r, t in zip(trajectory.s_grid, trajectory.y_grid[0],
                                  trajectory.y_grid[1], trajectory.y_grid[2])
        ],
        "events": [
            {
                "kind": e.kind.value,
                "s": e.s,
                "state": [e.state.x, e.state.r, e.state.theta],
                "slope": e.slope,
            }
            for e in trajectory.events
        ],
    }
    return json.dumps(doc, indent=1)


def trajectory_from_json(text: str) -> Trajectory:
    """Rebuild a trajectory record from its JSON text."""
    doc = json.loads(text)
    params = derive_constants(doc["params"]["n"], doc["params"]["lambda"])
    controls = IntegrationControls(**doc["controls"])
    samples = np.asarray(doc["samples"], dtype=float)
    events = [
        Event(
            kind=EventKind(e["kind"]),
            s=float(e["s"]),
            state=ProfileState(s=float(e["s"]), x=float(e["state"][0]),
                               r=float(e["state"][1]), theta=float(e["state"][2])),
            slope=float(e["slope"]),
        )
        for e in doc["events"]
    ]
    return Trajectory(
        params=params,
        controls=controls,
        s_grid=samples[:, 0],
        y_grid=samples[:, 1:].T,
        events=events,
        terminal=doc["terminal"],
        _dense=None,
    )
