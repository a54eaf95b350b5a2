"""Exact interval-map layer: Farey map, Gauss map, continued fractions.

Used for sanity tests and pointwise operator checks; everything here is a
pure function on floats in [0, 1].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import as_parameter

__all__ = [
    "ContinuedFraction",
    "farey_apply",
    "farey_inverse",
    "gauss_apply",
    "return_time",
    "return_time_by_orbit",
    "cf_expand",
    "pointwise_operator_apply",
    "q_series_tail_bound",
]


def _check_unit(x: float, name: str = "x") -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


@dataclass(frozen=True)
class ContinuedFraction:
    """x = a0 + 1/(a1 + 1/(a2 + ...)), digits all >= 1.

    remainder, when present, is the real tail in [0, 1) left after max_digits;
    absent remainder means the represented number is rational.
    """

    a0: int
    digits: tuple = field(default_factory=tuple)
    remainder: float | None = None

    def __post_init__(self):
        if any(d < 1 for d in self.digits):
            raise ValueError("continued fraction digits must be >= 1")
        if self.remainder is not None and not (0.0 <= self.remainder < 1.0):
            raise ValueError("remainder must lie in [0, 1)")

    def value(self) -> float:
        """Re-fold the expansion to a float."""
        x = self.remainder if self.remainder is not None else 0.0
        for d in reversed(self.digits):
            x = 1.0 / (d + x)
        return self.a0 + x


def farey_apply(x: float) -> float:
    """Farey map: x/(1-x) on [0,1/2], (1-x)/x on [1/2,1]; branches agree at 1/2."""
    x = _check_unit(x)
    if x <= 0.5:  # endpoint assigned to branch 0; both give 1 at x = 1/2
        return x / (1.0 - x)
    return (1.0 - x) / x


def farey_inverse(branch: int, x: float) -> float:
    """Local inverses: phi_0(x) = x/(1+x) into [0,1/2], phi_1(x) = 1/(1+x) into [1/2,1]."""
    x = _check_unit(x)
    if branch == 0:
        return x / (1.0 + x)
    if branch == 1:
        return 1.0 / (1.0 + x)
    raise ValueError("branch must be 0 or 1")


def gauss_apply(x: float) -> float:
    """Gauss map frac(1/x), with G(0) = 0."""
    x = _check_unit(x)
    if x == 0.0:
        return 0.0
    inv = 1.0 / x
    return inv - math.floor(inv)


def return_time(x: float):
    """First-entry time of the Farey orbit into (1/2, 1]: n iff x in (1/(n+1), 1/n].

    Computed by the closed-form floor rule (iterating the parabolic branch
    loses precision linearly in n); returns math.inf for x = 0.
    """
    x = _check_unit(x)
    if x == 0.0:
        return math.inf
    return int(math.floor(1.0 / x))


def return_time_by_orbit(x: float, max_steps: int = 10 ** 7):
    """Return time by explicit orbit iteration; cross-check for return_time."""
    x = _check_unit(x)
    if x == 0.0:
        return math.inf
    steps = 1
    while x <= 0.5:
        x = x / (1.0 - x)
        steps += 1
        if steps > max_steps:
            return math.inf
    return steps


def cf_expand(x: float, max_digits: int, tol: float = 1e-12) -> ContinuedFraction:
    """Continued fraction digits of x via the Gauss orbit, a_n = floor(1/G^{n-1}(x)).

    Terminates early (no remainder) once the fractional tail drops below tol,
    so rationals that resolve within max_digits come out exact.
    """
    if max_digits < 0:
        raise ValueError("max_digits must be >= 0")
    a0 = math.floor(x)
    y = x - a0
    digits = []
    for _ in range(max_digits):
        if y < tol:
            return ContinuedFraction(a0, tuple(digits), None)
        inv = 1.0 / y
        d = math.floor(inv)
        frac = inv - d
        # guard against 0.9999... tails produced by float division
        if frac > 1.0 - tol:
            d += 1
            frac = 0.0
        digits.append(int(d))
        y = frac
    if y < tol:
        return ContinuedFraction(a0, tuple(digits), None)
    return ContinuedFraction(a0, tuple(digits), y)


def _branch_weight(q: complex, x: float) -> complex:
    # |phi_i'(x)|^q = (1+x)^{-2q}; base is positive so the principal log is safe
    return cmath.exp(-2.0 * q * math.log1p(x))


def pointwise_operator_apply(which: str, q, f, x: float, series_cutoff: int = 10 ** 4) -> complex:
    """Pointwise action of the signed transfer operators and the Gauss-map sum.

    which is one of "P0", "P1", "Pplus", "Pminus", "Q".  The Q sum is
    truncated at series_cutoff terms; its tail is a Hurwitz-zeta remainder of
    size O(cutoff^{1-2 xi}), see q_series_tail_bound.
    """
    sp = as_parameter(q)
    x = _check_unit(x)
    if which in ("P0", "Pplus", "Pminus") and x == 0.0:
        # phi_0(0) = 0 is a singular evaluation point for chi_{-1}-type f
        raise ValueError("x = 0 is rejected for branch-0 operators")
    qc = sp.q
    if which == "P0":
        return _branch_weight(qc, x) * f(x / (1.0 + x))
    if which == "P1":
        return _branch_weight(qc, x) * f(1.0 / (1.0 + x))
    if which == "Pplus":
        return _branch_weight(qc, x) * (f(x / (1.0 + x)) + f(1.0 / (1.0 + x)))
    if which == "Pminus":
        return _branch_weight(qc, x) * (f(x / (1.0 + x)) - f(1.0 / (1.0 + x)))
    if which == "Q":
        if series_cutoff < 1:
            raise ValueError("series_cutoff must be >= 1")
        n = np.arange(1, series_cutoff + 1, dtype=float)
        w = np.exp(-2.0 * qc * np.log(n + x))
        vals = np.asarray([f(1.0 / (m + x)) for m in n])
        return complex(np.sum(w * vals))
    raise ValueError(f"unknown operator {which!r}")


def q_series_tail_bound(q, series_cutoff: int, f_bound: float = 1.0) -> float:
    """Bound sup|f| * sum_{n > cutoff} (n+x)^{-2 xi} <= f_bound * cutoff^{1-2 xi}/(2 xi - 1).

    Only meaningful in the absolutely convergent regime xi > 1/2.
    """
    sp = as_parameter(q)
    if sp.xi <= 0.5:
        raise ValueError("tail bound requires xi > 1/2")
    return f_bound * series_cutoff ** (1.0 - 2.0 * sp.xi) / (2.0 * sp.xi - 1.0)
