"""Closed profiles, revolution meshes, and convexity verification.

The profile system is invariant under ``(s, x, theta) -> (-s, -x, -theta)``,
so a trajectory launched from the r-axis with horizontal tangent extends to
a symmetric closed profile by mirroring.  When the forward half terminates
perpendicularly on the rotation axis, the mirrored curve has two axis
endpoints and revolving it produces a compact surface.

Normal flip
-----------
The solver integrates with the constant ``lam < 0`` and the canonical
normal of :mod:`lambdasurf.model`.  Reversing the unit normal negates every
principal curvature, the mean curvature and the support function, turning a
solution for ``lam`` into a solution for ``-lam > 0``.  All reporting here
(mesh vertex data, convexity report) applies that flip, so the reported
surface satisfies ``H + <X, nu> = -lam`` with ``min H > 0`` for the closing
curve of the shooting argument.

Pole handling
-------------
A perpendicular axis ending keeps all curvatures finite (the surface is
umbilic at the pole: the rotational curvature tends to the profile
curvature), but the raw ratio ``cos(theta)/r`` amplifies the residual axis
miss of a numerically closed profile like ``1/r**n``.  Samples with radius
below ``pole_margin`` are therefore excluded from extremal statistics and
replaced by the umbilic extrapolation from the nearest trusted sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .integrate import Trajectory
from .model import Params

__all__ = [
    "ClosedProfile",
    "Mesh",
    "ConvexityReport",
    "mirror_extend",
    "revolve",
    "self_intersection_check",
    "convexity_report",
    "write_obj",
    "profile_to_csv",
]


@dataclass
class ClosedProfile:
    """Mirror-symmetric profile curve sampled over ``s in [-S, S]``.

    ``x`` is odd and ``r``, and ``theta`` flips sign, under ``s -> -s`` by
    construction.  ``closure_r`` / ``closure_cos`` record the radius and
    ``|cos(theta)|`` at the two axis endpoints.
    """

    params: Params
    s: np.ndarray
    x: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    closure_r: float
    closure_cos: float

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.r])

    def __len__(self) -> int:
        return len(self.s)


def mirror_extend(trajectory: Trajectory, n_samples: int | None = None) -> ClosedProfile:
    """Extend a forward half-profile to a symmetric closed profile.

    Parameters
    ----------
    trajectory : Trajectory
        Must start on the r-axis with horizontal tangent (x = 0, theta = 0)
        and terminate at the axis cutoff (``terminal == "AxisHit"``).
    n_samples : int, optional
        Resample the half-profile at this many uniform arc lengths before
        mirroring (the solver's own steps are used when omitted).
    """
    start = trajectory.initial_state
    if abs(start.x) > 1e-9 or abs(start.theta) > 1e-9:
        raise ValueError(
            "mirror_extend requires a launch from the r-axis with horizontal "
            f"tangent; got x={start.x}, theta={start.theta}"
        )
    if trajectory.terminal != "AxisHit":
        raise ValueError(
            f"mirror_extend requires an axis-terminated trajectory, got "
            f"{trajectory.terminal!r}"
        )
    if n_samples is not None:
        ss = np.linspace(trajectory.s_start, trajectory.s_end, n_samples)
        y = trajectory.evaluate_array(ss)
        s_half, x_half, r_half, th_half = ss, y[0], y[1], y[2]
    else:
        s_half = trajectory.s_grid
        x_half, r_half, th_half = trajectory.y_grid

    end = trajectory.final_state
    s = np.concatenate([-s_half[::-1], s_half[1:]])
    x = np.concatenate([-x_half[::-1], x_half[1:]])
    r = np.concatenate([r_half[::-1], r_half[1:]])
    theta = np.concatenate([-th_half[::-1], th_half[1:]])
    return ClosedProfile(
        params=trajectory.params,
        s=s, x=x, r=r, theta=theta,
        closure_r=end.r,
        closure_cos=abs(math.cos(end.theta)),
    )


# ---------------------------------------------------------------------------
# Flipped curvature data along a profile
# ---------------------------------------------------------------------------

def _flipped_curvatures(
    profile: ClosedProfile,
    pole_margin: float,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Per-sample curvature arrays after the normal flip, with near-pole
    samples replaced by the umbilic extrapolation.  Returns the arrays and
    the trusted-sample mask."""
    p = profile.params
    x, r, theta = profile.x, profile.r, profile.theta
    ct, st = np.cos(theta), np.sin(theta)
    rr = np.maximum(r, 1e-300)
    thetadot = ((p.n - 1) / rr - rr) * ct + x * st + p.lam

    kappa_profile = -thetadot
    kappa_rot = ct / rr
    trusted = r >= pole_margin
    if trusted.any() and not trusted.all():
        # Both curvature ratios amplify the residual axis miss like
        # 1/r**n inside the margin; clamp them to the nearest trusted
        # sample (they meet at the common umbilic value at the pole).
        idx = np.arange(len(r))
        trusted_idx = idx[trusted]
        nearest = trusted_idx[np.clip(
            np.searchsorted(trusted_idx, idx, side="left"),
            0, len(trusted_idx) - 1,
        )]
        kappa_rot = np.where(trusted, kappa_rot, kappa_rot[nearest])
        kappa_profile = np.where(trusted, kappa_profile, kappa_profile[nearest])
    mean = kappa_profile + (p.n - 1) * kappa_rot
    support = x * st - r * ct
    return {
        "kappa_rot": kappa_rot,
        "kappa_profile": kappa_profile,
        "H": mean,
        "support": support,
    }, trusted


@dataclass
class ConvexityReport:
    """Extremal curvature statistics of a closed profile after the flip."""

    min_mean: float
    max_mean: float
    min_kappa_rot: float
    max_kappa_rot: float
    min_kappa_profile: float
    max_kappa_profile: float
    kappa_profile_sign_changes: int
    pole_mean: float
    flip_residual_max: float
    pole_margin: float
    n_trusted: int
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "min_mean": self.min_mean,
            "max_mean": self.max_mean,
            "min_kappa_rot": self.min_kappa_rot,
            "max_kappa_rot": self.max_kappa_rot,
            "min_kappa_profile": self.min_kappa_profile,
            "max_kappa_profile": self.max_kappa_profile,
            "kappa_profile_sign_changes": self.kappa_profile_sign_changes,
            "pole_mean": self.pole_mean,
            "flip_residual_max": self.flip_residual_max,
            "pole_margin": self.pole_margin,
            "n_trusted": self.n_trusted,
            "n_samples": self.n_samples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def convexity_report(
    profile: ClosedProfile,
    params: Params | None = None,
    pole_margin: float = 1e-3,
) -> ConvexityReport:
    """Curvature extrema and profile-curvature sign changes after the flip.

    The flip identity ``H + <X, nu> = -lam`` is re-checked pointwise on the
    trusted samples and its worst violation reported.
    """
    params = params or profile.params
    data, trusted = _flipped_curvatures(profile, pole_margin)
    if not trusted.any():
        raise ValueError("no profile sample lies above the pole margin")
    flip_res = np.max(np.abs(
        data["H"][trusted] + data["support"][trusted] - (-params.lam)
    ))

    kp = data["kappa_profile"][trusted]
    band = 1e-9 * max(1.0, float(np.max(np.abs(kp))))
    signs = np.sign(kp[np.abs(kp) > band])
    sign_changes = int(np.count_nonzero(np.diff(signs) != 0))

    # Pole value via the umbilic limit (all principal curvatures agree).
    pole_mean = float(params.n * data["kappa_profile"][-1])

    def _mm(key):
        vals = data[key][trusted]
        return float(np.min(vals)), float(np.max(vals))

    min_h, max_h = _mm("H")
    min_kr, max_kr = _mm("kappa_rot")
    min_kp, max_kp = _mm("kappa_profile")
    return ConvexityReport(
        min_mean=min(min_h, pole_mean),
        max_mean=max(max_h, pole_mean),
        min_kappa_rot=min_kr,
        max_kappa_rot=max_kr,
        min_kappa_profile=min_kp,
        max_kappa_profile=max_kp,
        kappa_profile_sign_changes=sign_changes,
        pole_mean=pole_mean,
        flip_residual_max=float(flip_res),
        pole_margin=pole_margin,
        n_trusted=int(np.count_nonzero(trusted)),
        n_samples=len(profile),
    )


# ---------------------------------------------------------------------------
# Revolution mesh (n = 2, surfaces in 3-space)
# ---------------------------------------------------------------------------

@dataclass
class Mesh:
    """Triangle mesh of the revolved profile with per-vertex curvature data
    (after the normal flip)."""

    vertices: np.ndarray          # (V, 3)
    faces: np.ndarray             # (F, 3), indices into vertices
    vertex_data: dict[str, np.ndarray]

    def euler_characteristic(self) -> int:
        edges = set()
        for a, b, c in self.faces:
            for u, v in ((a, b), (b, c), (c, a)):
                edges.add((min(u, v), max(u, v)))
        return len(self.vertices) - len(edges) + len(self.faces)


def revolve(
    profile: ClosedProfile,
    meridians: int,
    params: Params | None = None,
    pole_margin: float = 1e-3,
) -> Mesh:
    """Revolve a closed profile into a watertight genus-0 triangle mesh.

    Only ``n = 2`` (surfaces in 3-space) is meshed; higher dimensions get
    curvature reports along the profile instead (the curvature formulas do
    not depend on the mesh).  The profile endpoints are snapped onto the
    axis and become the two pole vertices, so the vertex count is
    ``(len(profile) - 2) * meridians + 2``.
    """
    params = params or profile.params
    if params.n != 2:
        raise ValueError(
            f"meshes are generated only for n=2 (surfaces in 3-space); "
            f"got n={params.n}. Use convexity_report for the profile data."
        )
    if meridians < 8:
        raise ValueError(f"meridians must be >= 8, got {meridians}")
    if len(profile) < 4:
        raise ValueError("profile has too few samples to mesh")

    x, r = profile.x, profile.r
    interior = slice(1, len(profile) - 1)
    xi, ri = x[interior], r[interior]
    k = len(xi)
    phi = np.linspace(0.0, 2.0 * math.pi, meridians, endpoint=False)
    cphi, sphi = np.cos(phi), np.sin(phi)

    verts = np.empty((k * meridians + 2, 3))
    verts[: k * meridians] = np.column_stack([
        np.repeat(xi, meridians),
        np.outer(ri, cphi).ravel(),
        np.outer(ri, sphi).ravel(),
    ])
    pole_start = k * meridians
    pole_end = pole_start + 1
    verts[pole_start] = (x[0], 0.0, 0.0)
    verts[pole_end] = (x[-1], 0.0, 0.0)

    faces: list[tuple[int, int, int]] = []
    for i in range(k - 1):
        base0 = i * meridians
        base1 = (i + 1) * meridians
        for j in range(meridians):
            j1 = (j + 1) % meridians
            faces.append((base0 + j, base1 + j, base1 + j1))
            faces.append((base0 + j, base1 + j1, base0 + j1))
    for j in range(meridians):
        j1 = (j + 1) % meridians
        faces.append((pole_start, j, j1))
        last = (k - 1) * meridians
        faces.append((pole_end, last + j1, last + j))

    data, _ = _flipped_curvatures(profile, pole_margin)
    vertex_data: dict[str, np.ndarray] = {}
    for key in ("H", "kappa_rot", "kappa_profile"):
        ring_vals = np.repeat(data[key][interior], meridians)
        # Endpoint samples carry the umbilic extrapolation already.
        vertex_data[key] = np.concatenate([ring_vals, [data[key][0], data[key][-1]]])

    return Mesh(vertices=verts, faces=np.asarray(faces, dtype=np.int64),
                vertex_data=vertex_data)


def write_obj(mesh: Mesh, path: str) -> None:
    """Write the mesh as a Wavefront OBJ file (9 significant digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def profile_to_csv(profile: ClosedProfile, path: str, pole_margin: float = 1e-3) -> None:
    """Write the closed profile with flipped curvature columns as CSV."""
    data, trusted = _flipped_curvatures(profile, pole_margin)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("s,x,r,theta,H,kappa_rot,kappa_profile,trusted\n")
        for i in range(len(profile)):
            fh.write(
                f"{profile.s[i]!r},{profile.x[i]!r},{profile.r[i]!r},"
                f"{profile.theta[i]!r},{data['H'][i]!r},{data['kappa_rot'][i]!r},"
                f"{data['kappa_profile'][i]!r},{int(trusted[i])}\n"
            )


# ---------------------------------------------------------------------------
# Self-intersection of the profile polyline
# ---------------------------------------------------------------------------

def self_intersection_check(profile: ClosedProfile | np.ndarray) -> bool:
    """True iff any two non-adjacent segments of the polyline intersect.

    Proper crossings are detected with orientation predicates; collinear
    or endpoint contacts between non-adjacent segments also count.  Pairs
    are pruned with bounding boxes and evaluated in vectorized blocks.
    """
    pts = profile.points if isinstance(profile, ClosedProfile) else np.asarray(profile, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (N, 2) polyline")
    n_seg = len(pts) - 1
    if n_seg < 3:
        return False

    a = pts[:-1]
    b = pts[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)

    block = 256
    for i0 in range(0, n_seg, block):
        i1 = min(i0 + block, n_seg)
        # Only pairs (i, j) with j >= i + 2 (upper triangle, skip neighbors).
        j0 = i0 + 2
        if j0 >= n_seg:
            break
        bi = slice(i0, i1)
        bbox = (
            (lo[bi, None, 0] <= hi[None, j0:, 0]) &
            (hi[bi, None, 0] >= lo[None, j0:, 0]) &
            (lo[bi, None, 1] <= hi[None, j0:, 1]) &
            (hi[bi, None, 1] >= lo[None, j0:, 1])
        )
        ii, jj = np.nonzero(bbox)
        if ii.size == 0:
            continue
        gi = ii + i0
        gj = jj + j0
        keep = gj >= gi + 2
        gi, gj = gi[keep], gj[keep]
        if gi.size == 0:
            continue
        if _blocks_intersect(a[gi], b[gi], a[gj], b[gj]):
            return True
    return False


def _cross(o: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return ((p[:, 0] - o[:, 0]) * (q[:, 1] - o[:, 1])
            - (p[:, 1] - o[:, 1]) * (q[:, 0] - o[:, 0]))


def _blocks_intersect(p1, p2, q1, q2) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    proper = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0)) \
        & (d1 != 0) & (d2 != 0) & (d3 != 0) & (d4 != 0)
    if proper.any():
        return True
    for d, o1, o2, s in ((d1, q1, q2, p1), (d2, q1, q2, p2),
                         (d3, p1, p2, q1), (d4, p1, p2, q2)):
        touching = d == 0
        if touching.any() and _on_segment(o1[touching], o2[touching], s[touching]).any():
            return True
    return False


def _on_segment(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    return (
        (np.minimum(a[:, 0], b[:, 0]) <= p[:, 0]) & (p[:, 0] <= np.maximum(a[:, 0], b[:, 0]))
        & (np.minimum(a[:, 1], b[:, 1]) <= p[:, 1]) & (p[:, 1] <= np.maximum(a[:, 1], b[:, 1]))
    )
