"""Core model for rotationally symmetric lambda-hypersurfaces.

A hypersurface of revolution in (n+1)-space is generated by a profile curve
``gamma(s) = (x(s), r(s))`` in the half plane ``r > 0``, parametrized by arc
length.  With ``theta`` the tangent angle against the x-axis, the condition
``H + <X, nu> = lam`` (mean curvature plus support function equal to a
constant, the defining equation of a lambda-hypersurface in Gaussian space)
reduces to the first-order system

    dx/ds     = cos(theta)
    dr/ds     = sin(theta)
    dtheta/ds = ((n-1)/r - r) * cos(theta) + x * sin(theta) + lam

All quantities are dimensionless.  ``theta`` is kept unwrapped (accumulated,
never reduced mod 2*pi) so that crossings of multiples of pi/2 are well
defined along spiralling curves.

Curvature conventions
---------------------
With the unit normal ``nu = (-dr/ds, dx/ds * alpha)`` (``alpha`` the unit
sphere factor of the revolution), the principal curvatures are

    kappa_rot     = -cos(theta) / r        (multiplicity n-1)
    kappa_profile = dx/ds * d2r/ds2 - d2x/ds2 * dr/ds = dtheta/ds

The second identity holds because for a unit-speed curve with derivative
``(cos theta, sin theta)`` the planar curvature is exactly ``dtheta/ds``;
this is used directly everywhere instead of differentiating samples twice.
The support function is ``<X, nu> = -x*sin(theta) + r*cos(theta)``, and

    residual = H + <X, nu> - lam

vanishes identically along solutions of the system.  Reversing the normal
negates every curvature and the support function, which maps a solution for
``lam`` to a solution for ``-lam``; that flip is applied only at reporting
time (see :mod:`lambdasurf.surface`), never inside the ODE.

Two closed-form solutions serve as integration oracles: the cylinder of
radius ``c_lambda`` (the positive root of ``c**2 - lam*c - (n-1) = 0``) and
the sphere of radius ``r_lambda`` (the positive root of
``r**2 - lam*r - n = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "AxisSingularityError",
    "Params",
    "ProfileState",
    "CurvatureData",
    "derive_constants",
    "rhs",
    "theta_second",
    "curvatures",
    "exact_cylinder",
    "exact_sphere",
]


class AxisSingularityError(ValueError):
    """Evaluation requested at r <= 0, where the system is singular."""


def _positive_quadratic_root(p: float, q: float) -> float:
    """Positive root of ``t**2 - p*t - q = 0`` for ``q > 0``.

    Uses the rationalized form when ``p < 0`` to avoid the cancellation
    ``(p + sqrt(p**2 + 4q))/2`` suffers for large negative ``p``; the result
    satisfies the quadratic to a few ulps across ``|p| <= 100``.
    """
    disc = math.sqrt(p * p + 4.0 * q)
    if p >= 0.0:
        return 0.5 * (p + disc)
    return 2.0 * q / (disc - p)


@dataclass(frozen=True)
class Params:
    """Problem constants: dimension, lambda, and the derived radii.

    ``c_lambda`` and ``r_lambda`` are the cylinder and sphere radii for the
    given lambda; ``c_minus_lambda`` / ``r_minus_lambda`` are the same
    quantities with the sign of lambda reversed (they bound the geometry of
    descending graph segments).
    """

    n: int
    lam: float
    c_lambda: float
    r_lambda: float
    c_minus_lambda: float
    r_minus_lambda: float


def derive_constants(n: int, lam: float) -> Params:
    """Build :class:`Params` for dimension ``n >= 2`` and constant ``lam``."""
    if not isinstance(n, (int,)) or isinstance(n, bool):
        raise TypeError(f"dimension n must be an integer, got {n!r}")
    if n < 2:
        raise ValueError(f"dimension n must be >= 2, got {n}")
    lam = float(lam)
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    return Params(
        n=n,
        lam=lam,
        c_lambda=_positive_quadratic_root(lam, float(n - 1)),
        r_lambda=_positive_quadratic_root(lam, float(n)),
        c_minus_lambda=_positive_quadratic_root(-lam, float(n - 1)),
        r_minus_lambda=_positive_quadratic_root(-lam, float(n)),
    )


@dataclass(frozen=True)
class ProfileState:
    """A point on a profile curve: arc length, position, tangent angle.

    The derivative of ``(x, r)`` is ``(cos theta, sin theta)`` by
    construction, so the unit-speed identity holds identically.  ``theta``
    is unwrapped.
    """

    s: float
    x: float
    r: float
    theta: float


@dataclass(frozen=True)
class CurvatureData:
    """Principal curvatures, mean curvature, support function and residual."""

    kappa_rot: float
    kappa_profile: float
    mean: float
    support: float
    residual: float


def rhs(state: ProfileState, params: Params) -> tuple[float, float, float]:
    """Right-hand side ``(dx, dr, dtheta)`` of the profile system at a state.

    Raises
    ------
    AxisSingularityError
        If ``state.r <= 0``.
    """
    if state.r <= 0.0:
        raise AxisSingularityError(f"rhs requested at r={state.r} <= 0")
    ct = math.cos(state.theta)
    st = math.sin(state.theta)
    dtheta = ((params.n - 1) / state.r - state.r) * ct + state.x * st + params.lam
    return ct, st, dtheta


def theta_second(state: ProfileState, params: Params) -> float:
    """Second derivative of theta along the flow.

    Differentiating the dtheta/ds equation along the solution gives

        d2theta/ds2 = -(n-1)*sin(theta)*cos(theta)/r**2
                      + dtheta * (x*cos(theta) - ((n-1)/r - r)*sin(theta))

    At a point where dtheta/ds = 0 only the first term survives, so the
    crossing is transversal whenever sin(theta)*cos(theta) != 0 there.
    """
    if state.r <= 0.0:
        raise AxisSingularityError(f"theta_second requested at r={state.r} <= 0")
    ct = math.cos(state.theta)
    st = math.sin(state.theta)
    n1 = params.n - 1
    dtheta = (n1 / state.r - state.r) * ct + state.x * st + params.lam
    return (-n1 * st * ct / (state.r * state.r)
            + dtheta * (state.x * ct - (n1 / state.r - state.r) * st))


def curvatures(state: ProfileState, params: Params) -> CurvatureData:
    """Curvature data of the generated hypersurface at a profile state."""
    if state.r <= 0.0:
        raise AxisSingularityError(f"curvatures requested at r={state.r} <= 0")
    ct = math.cos(state.theta)
    st = math.sin(state.theta)
    kappa_rot = -ct / state.r
    _, _, kappa_profile = rhs(state, params)
    mean = kappa_profile + (params.n - 1) * kappa_rot
    support = -state.x * st + state.r * ct
    return CurvatureData(
        kappa_rot=kappa_rot,
        kappa_profile=kappa_profile,
        mean=mean,
        support=support,
        residual=mean + support - params.lam,
    )


def exact_cylinder(params: Params, s: float) -> ProfileState:
    """State at arc length ``s`` on the constant solution ``r == c_lambda``."""
    return ProfileState(s=s, x=s, r=params.c_lambda, theta=0.0)


def exact_sphere(params: Params, s: float) -> ProfileState:
    """State at arc length ``s`` on the round solution of radius ``r_lambda``.

    The arc runs from the axis point ``(-r_lambda, 0)`` (``s -> 0``, theta
    near pi/2) to ``(+r_lambda, 0)`` (``s -> pi*r_lambda``, theta near
    -pi/2); ``s`` must lie strictly inside ``(0, pi*r_lambda)``.
    """
    radius = params.r_lambda
    if not 0.0 < s < math.pi * radius:
        raise ValueError(
            f"sphere arc length must lie in (0, {math.pi * radius!r}), got {s!r}"
        )
    u = s / radius
    return ProfileState(
        s=s,
        x=-radius * math.cos(u),
        r=radius * math.sin(u),
        theta=0.5 * math.pi - u,
    )
