"""Segment splitting and shape classification of profile curves.

Between consecutive ``sin(theta) = 0`` crossings a profile curve is the
graph ``x = f(r)`` of a function over the r-axis.  All sign information
about ``f`` is recovered from the tangent angle without ever integrating
the graph equations themselves (they degenerate at turning points):

    f'(r)  = cot(theta)                         (chain rule, dx/dr)
    f''(r) = -thetadot / sin(theta)**3          (differentiate f' along s,
                                                 divide by dr/ds)

so ``sign(f'') = -sign(thetadot) * sign(sin theta)``.  Each graph segment
carries at most one zero of ``f'`` and at most one zero of ``f''``, and
never both (a zero of ``f''`` with ``f' = 0`` or ``f''' = 0`` forces the
constant solution); the classifier assigns each segment one of three types:

    CRITICAL (1)    exactly one interior zero of f'   (cos(theta) crossing)
    INFLECTION (2)  exactly one interior zero of f''  (thetadot crossing)
    STRICT (3)      no interior zero of f' * f''

A curve belongs to class ``C_k(N_1, ..., N_k)`` when its first k segments
are complete and carry those types in order; labels serialize as e.g.
``"C2(2,1)"``.  A final segment cut off by a terminal guard is typed only
when the terminal data pins it down:

* axis hit with ``|cos(theta)|`` below ``axis_perp_tol`` and no interior
  zeros: a STRICT segment that runs perpendicularly into the axis (the
  maximal arc length is reached there);
* blow-up or exhausted budget with no interior zeros, radius beyond twice
  the sphere radius, and ``f' * f'' < 0`` at the end: an unbounded STRICT
  segment.

Anything else is reported as a partial classification, never guessed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .integrate import Event, EventKind, Trajectory
from .model import Params

__all__ = [
    "SegmentType",
    "Segment",
    "CurveClass",
    "ClassificationError",
    "segment",
    "classify",
    "fprime_from_theta",
    "fsecond_from_state",
]


class ClassificationError(RuntimeError):
    """Internal inconsistency while splitting or typing segments."""


class SegmentType(enum.IntEnum):
    CRITICAL = 1
    INFLECTION = 2
    STRICT = 3


def fprime_from_theta(theta: float | np.ndarray) -> float | np.ndarray:
    """Graph slope f' = cot(theta) of the segment chart."""
    return np.cos(theta) / np.sin(theta)


def fsecond_from_state(theta, thetadot):
    """Graph curvature f'' = -thetadot / sin(theta)**3 of the segment chart."""
    return -thetadot / np.sin(theta) ** 3


@dataclass(frozen=True)
class Segment:
    """One graphical arc over the r-axis.

    ``index`` counts segments from 1.  ``fprime_zeros`` / ``fsecond_zeros``
    hold arc lengths of interior crossings of cos(theta) and thetadot.
    ``complete`` means the arc ends at a turning point (or runs into the
    axis, exhausting the curve); ``ends_at`` records the closing event kind.
    """

    index: int
    s_start: float
    s_end: float
    orientation: str                  # "ascending" | "descending"
    fprime_zeros: tuple[float, ...]
    fsecond_zeros: tuple[float, ...]
    r_start: float
    r_end: float
    complete: bool
    ends_at: EventKind | None
    starts_at_launch: bool
    low_confidence: bool = False


@dataclass(frozen=True)
class CurveClass:
    """Ordered segment types of a profile curve.

    ``types`` lists the types of the successfully typed leading segments.
    ``complete`` is True when the last typed segment exhausts the curve
    (axis hit or certified unbounded arc), i.e. no further segment exists.
    ``partial`` is True when a trailing segment was seen but could not be
    typed within the available data.
    """

    types: tuple[int, ...]
    complete: bool
    partial: bool
    terminal: str
    low_confidence: bool = False

    @property
    def label(self) -> str:
        return f"C{len(self.types)}({','.join(str(t) for t in self.types)})"

    def matches(self, *types: int) -> bool:
        """True if the leading typed segments equal ``types`` exactly."""
        return len(self.types) >= len(types) and self.types[: len(types)] == tuple(types)


def _boundary_margin(trajectory: Trajectory) -> float:
    return 10.0 * trajectory.controls.event_tol


def segment(trajectory: Trajectory) -> list[Segment]:
    """Split a trajectory into graph segments at its turning points."""
    events = sorted(trajectory.events, key=lambda e: e.s)
    turns = [e for e in events if e.kind is EventKind.R_AXIS_TURN]
    interior = [e for e in events
                if e.kind in (EventKind.F_PRIME_ZERO, EventKind.THETA_DOT_ZERO)]
    terminal_kind = {
        "AxisHit": EventKind.AXIS_HIT,
        "Blowup": EventKind.BLOWUP,
        "Budget": EventKind.BUDGET,
    }.get(trajectory.terminal)

    s0, s1 = trajectory.s_start, trajectory.s_end
    margin = _boundary_margin(trajectory)

    bounds: list[tuple[float, EventKind | None]] = [(s0, None)]
    for e in turns:
        if e.s - bounds[-1][0] > margin and s1 - e.s > margin:
            bounds.append((e.s, EventKind.R_AXIS_TURN))
    bounds.append((s1, terminal_kind))

    theta0 = trajectory.initial_state.theta
    start_is_turn = abs(math.sin(theta0)) < 1e-9

    segments: list[Segment] = []
    for k in range(len(bounds) - 1):
        a, _ = bounds[k]
        b, end_kind = bounds[k + 1]
        if b - a <= margin:
            continue
        mid = trajectory.evaluate_array(0.5 * (a + b))
        orientation = "ascending" if math.sin(float(mid[2])) > 0.0 else "descending"

        fp: list[float] = []
        fs: list[float] = []
        low_conf = False
        for e in interior:
            if e.s <= a + margin or e.s >= b - margin:
                if abs(e.s - a) <= margin or abs(e.s - b) <= margin:
                    low_conf = low_conf or _near_boundary(e, a, b, margin)
                continue
            (fp if e.kind is EventKind.F_PRIME_ZERO else fs).append(e.s)

        ra = float(trajectory.evaluate_array(a)[1])
        rb = float(trajectory.evaluate_array(b)[1])
        segments.append(Segment(
            index=k + 1,
            s_start=a,
            s_end=b,
            orientation=orientation,
            fprime_zeros=tuple(fp),
            fsecond_zeros=tuple(fs),
            r_start=ra,
            r_end=rb,
            complete=end_kind is EventKind.R_AXIS_TURN,
            ends_at=end_kind,
            starts_at_launch=(k == 0 and not start_is_turn),
            low_confidence=low_conf,
        ))

    # Sanity: interior events must fall inside some segment, in order.
    covered = sum(len(s.fprime_zeros) + len(s.fsecond_zeros) for s in segments)
    boundary_adjacent = sum(
        1 for e in interior
        if any(abs(e.s - sb) <= margin for sb, _ in bounds)
    )
    if covered + boundary_adjacent < len(interior):
        raise ClassificationError(
            "interior events fell outside every segment; event ordering is inconsistent"
        )
    return segments


def _near_boundary(e: Event, a: float, b: float, margin: float) -> bool:
    return min(abs(e.s - a), abs(e.s - b)) <= margin


def classify(
    trajectory: Trajectory,
    max_segments: int | None = None,
    axis_perp_tol: float = 0.05,
) -> CurveClass:
    """Assign the ordered type list of a trajectory's graph segments.

    Parameters
    ----------
    trajectory : Trajectory
        Integrated curve with located events.
    max_segments : int, optional
        Stop typing after this many segments (scans only need the first two).
    axis_perp_tol : float
        Bound on ``|cos(theta)|`` at an axis hit for the final segment to
        count as a perpendicular (STRICT) ending.
    """
    segs = segment(trajectory)
    if max_segments is not None:
        segs = segs[:max_segments]

    types: list[int] = []
    partial = False
    complete = False
    low_conf = any(s.low_confidence for s in segs)

    for seg in segs:
        if seg.complete:
            nfp = len(seg.fprime_zeros)
            nfs = len(seg.fsecond_zeros)
            if nfp > 1 or nfs > 1 or (nfp == 1 and nfs == 1):
                raise ClassificationError(
                    f"segment {seg.index} carries {nfp} critical and {nfs} inflection "
                    "zeros; at most one of exactly one kind is possible"
                )
            t = _type_of_complete(seg)
            if t is None:
                partial = True
                low_conf = True
                break
            types.append(int(t))
            continue
        # Final segment cut by a terminal guard.
        t, exhausts = _type_of_terminal(seg, trajectory, axis_perp_tol)
        if t is None:
            partial = True
        else:
            types.append(int(t))
            complete = exhausts
        break

    return CurveClass(
        types=tuple(types),
        complete=complete,
        partial=partial,
        terminal=trajectory.terminal,
        low_confidence=low_conf,
    )


def _type_of_complete(seg: Segment) -> SegmentType | None:
    nfp, nfs = len(seg.fprime_zeros), len(seg.fsecond_zeros)
    if nfp == 1:
        return SegmentType.CRITICAL
    if nfs == 1:
        return SegmentType.INFLECTION
    if seg.starts_at_launch:
        # First arc of an axis-launched curve: monotone from the axis to the
        # first turn, no zeros required.
        return SegmentType.STRICT
    # A turn-to-turn arc must carry a zero (theta returns to a multiple of
    # pi, so either thetadot vanishes or theta sweeps through an odd
    # multiple of pi/2).  Seeing none means a crossing fell below the slope
    # floor: report the tail as partial instead of guessing.
    return None


def _type_of_terminal(
    seg: Segment,
    trajectory: Trajectory,
    axis_perp_tol: float,
) -> tuple[SegmentType | None, bool]:
    """Type of a guard-terminated final segment, and whether it exhausts
    the curve (no further segment can exist)."""
    nfp, nfs = len(seg.fprime_zeros), len(seg.fsecond_zeros)
    end = trajectory.final_state
    if seg.ends_at is EventKind.AXIS_HIT:
        # Crossings inside the axis-approach zone sit below the resolution
        # of the cutoff: a perpendicular ending amplifies state noise like
        # 1/r**(n-1), so zeros found at radii comparable to r_min carry no
        # information about the true curve.  Count only zeros above the zone.
        zone = 50.0 * trajectory.controls.r_min
        nfp = sum(1 for s in seg.fprime_zeros
                  if float(trajectory.evaluate_array(s)[1]) >= zone)
        nfs = sum(1 for s in seg.fsecond_zeros
                  if float(trajectory.evaluate_array(s)[1]) >= zone)
        if nfp == 0 and nfs == 0 and abs(math.cos(end.theta)) < axis_perp_tol:
            return SegmentType.STRICT, True
        return None, False
    if seg.ends_at in (EventKind.BLOWUP, EventKind.BUDGET):
        if nfp == 0 and nfs == 0:
            fp = fprime_from_theta(end.theta)
            td = trajectory.thetadot(end.s)
            fs = fsecond_from_state(end.theta, td)
            unbounded = end.r > 2.0 * trajectory.params.r_lambda
            if unbounded and fp * fs < 0.0:
                return SegmentType.STRICT, True
        return None, False
    return None, False
