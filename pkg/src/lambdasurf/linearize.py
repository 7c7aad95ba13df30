"""Linearization around the cylinder and its oscillation count.

Perturbing the constant graph solution ``u == c_lambda`` of the profile
equation over the x-axis and differentiating with respect to the
perturbation size yields the variational equation

    w'' - x w' + c w = 0,    c = 1 + (n-1)/c_lambda**2,

with ``w(0) = 1``, ``w'(0) = 0``.  The number of positive zeros of ``w``
equals ``ceil(c/2)`` (for even integer ``c`` the solution is, up to scale,
the degree-``c`` probabilists' Hermite polynomial, which makes those cases
exact oracles).  Three or more positive zeros force the near-cylinder
curves of the height family into class C2(2,2), which happens exactly when
``lam <= -4*sqrt((n-1)/5)`` (that bound makes ``c >= 6``).

Zeros are counted by integrating the ODE with dense output and refining
the sign changes of ``w``, not by evaluating confluent hypergeometric
functions: the integration reuses the package's tolerances and the
polynomial cases pin the accuracy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import Params

__all__ = ["LinearizedSolution", "count_positive_zeros"]


@dataclass(frozen=True)
class LinearizedSolution:
    """Zeros of the cylinder linearization on ``(0, x_max]``.

    ``count`` is the located number of positive zeros; ``expected_count``
    is ``ceil(c/2)``.  ``zero_slopes`` holds ``w'`` at each zero (all zeros
    of the non-trivial solution are simple).  ``boundary_flag`` is set when
    a zero was found suspiciously close to ``x_max`` even after widening.
    ``xs`` / ``ws`` sample the solution over the scanned window.
    """

    coefficient: float
    x_max: float
    zeros: tuple[float, ...]
    zero_slopes: tuple[float, ...]
    expected_count: int
    boundary_flag: bool
    xs: np.ndarray = field(repr=False, default=None)
    ws: np.ndarray = field(repr=False, default=None)

    @property
    def count(self) -> int:
        return len(self.zeros)

    @property
    def matches_expected(self) -> bool:
        return self.count == self.expected_count

    def to_json(self) -> str:
        return json.dumps({
            "coefficient": self.coefficient,
            "x_max": self.x_max,
            "count": self.count,
            "expected_count": self.expected_count,
            "zeros": list(self.zeros),
            "zero_slopes": list(self.zero_slopes),
            "boundary_flag": self.boundary_flag,
        }, indent=1)


def _solve_w(c: float, x_max: float, rel_tol: float):
    def f(x, y):
        return [y[1], x * y[1] - c * y[0]]

    return solve_ivp(f, (0.0, x_max), [1.0, 0.0], method="DOP853",
                     dense_output=True, rtol=rel_tol, atol=rel_tol * 1e-2)


def _zeros_of(sol, x_max: float, xtol: float) -> tuple[list[float], list[float]]:
    xs = np.linspace(0.0, x_max, 4001)
    w = sol.sol(xs)[0]
    zeros: list[float] = []
    slopes: list[float] = []
    wsign = w[:-1] * w[1:]
    for i in np.flatnonzero(wsign < 0.0):
        root = brentq(lambda x: float(sol.sol(x)[0]), xs[i], xs[i + 1], xtol=xtol)
        zeros.append(float(root))
        slopes.append(float(sol.sol(root)[1]))
    return zeros, slopes


def count_positive_zeros(
    params: Params,
    x_max: float | None = None,
    rel_tol: float = 1e-12,
    zero_tol: float = 1e-12,
) -> LinearizedSolution:
    """Count the positive zeros of the cylinder linearization.

    Parameters
    ----------
    params : Params
        Problem constants with ``lam <= 0``.
    x_max : float, optional
        Right end of the search window; defaults to ``3*sqrt(c) + 5``,
        beyond the oscillatory region (the equation turns monotone once
        ``x`` dominates the restoring coefficient).  If a zero lands within
        ``100*zero_tol`` of ``x_max`` the window widens once and retries;
        a persistent boundary zero is flagged, never silently kept.
    """
    if params.lam > 0.0:
        raise ValueError("count_positive_zeros requires lam <= 0")
    c = 1.0 + (params.n - 1) / params.c_lambda ** 2
    if x_max is None:
        x_max = 3.0 * math.sqrt(c) + 5.0
    # Nudge below the rounding noise of c so exact-integer cases ceil right.
    expected = math.ceil(c / 2.0 - 1e-9)

    # All zeros lie inside the oscillation window: with w = exp(x**2/4) v
    # the equation becomes v'' = (x**2/4 - c - 1/2) v, which stops
    # oscillating at x = sqrt(4c + 2).  Scanning beyond it only exposes the
    # exponentially growing branch that roundoff seeds even when the true
    # solution is polynomial.
    window = min(x_max, math.sqrt(4.0 * c + 2.0) + 1.0)

    boundary_flag = False
    for attempt in range(2):
        sol = _solve_w(c, window, rel_tol)
        zeros, slopes = _zeros_of(sol, window, zero_tol)
        if zeros and window - zeros[-1] < 100.0 * zero_tol and window < x_max:
            window = min(1.5 * window, x_max)
            boundary_flag = True
            continue
        boundary_flag = False
        break

    # Keep only crossings stable under a much coarser tolerance; a
    # contamination crossing moves with the accumulated roundoff pattern,
    # a true zero does not.
    check_sol = _solve_w(c, window, rel_tol * 1e3)
    check_zeros, _ = _zeros_of(check_sol, window, zero_tol)
    stable = []
    stable_slopes = []
    for z, sl in zip(zeros, slopes):
        if any(abs(z - zc) < 1e-8 for zc in check_zeros):
            stable.append(z)
            stable_slopes.append(sl)
    xs = np.linspace(0.0, window, 800)
    return LinearizedSolution(
        coefficient=c,
        x_max=window,
        zeros=tuple(stable),
        zero_slopes=tuple(stable_slopes),
        expected_count=expected,
        boundary_flag=boundary_flag,
        xs=xs,
        ws=sol.sol(xs)[0],
    )
