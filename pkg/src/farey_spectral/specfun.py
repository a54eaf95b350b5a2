"""Complex-parameter special functions for the transfer-operator matrices.

All Gamma arithmetic is done in log space (entries downstream involve
Gamma(k+n+2*xi) which overflows double precision near k+n ~ 170), and the
Bessel / incomplete-gamma evaluations use explicit power series because the
orders and parameters are genuinely complex, which rules out the usual
real-order library routines.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma as _loggamma

__all__ = [
    "ConvergenceError",
    "SpectralParameter",
    "LaguerreBasis",
    "as_parameter",
    "log_gamma",
    "gamma_ratio",
    "laguerre_eval",
    "laguerre_eval_complex_alpha",
    "laguerre_table",
    "hyp2f1_terminating",
    "bessel_j_reduced",
    "bessel_j_series",
    "lower_incomplete_gamma",
    "nq_chi_series",
    "nq_chi",
]

# constructor rejects |q - 1/2| below this: Gamma(2q-1) pole
_HALF_EXCLUSION = 1e-12



class ConvergenceError(RuntimeError):
    """A power series did not converge within its term budget."""


@dataclass(frozen=True)
class SpectralParameter:
    """Complex temperature q with the standing hypothesis Re(q) > 0, q != 1/2."""

    q: complex

    def __post_init__(self):
        q = complex(self.q)
        object.__setattr__(self, "q", q)
        if q.real <= 0.0:
            raise ValueError(f"require Re(q) > 0, got q = {q}")
        if abs(q - 0.5) < _HALF_EXCLUSION:
            raise ValueError(f"q too close to 1/2 (Gamma(2q-1) pole), got q = {q}")

    @property
    def xi(self) -> float:
        return self.q.real

    def conjugate(self) -> "SpectralParameter":
        return SpectralParameter(self.q.conjugate())


def as_parameter(q) -> SpectralParameter:
    """Coerce a complex number (or an existing parameter) to SpectralParameter."""
    if isinstance(q, SpectralParameter):
        return q
    return SpectralParameter(complex(q))


@dataclass(frozen=True)
class LaguerreBasis:
    """Order-N family L_n^{2 xi - 1} with squared norms w_n = Gamma(n+2 xi)/n!."""

    alpha: float
    order: int
    weights: np.ndarray = field(repr=False)

    @classmethod
    def from_parameter(cls, q, order: int) -> "LaguerreBasis":
        sp = as_parameter(q)
        if order < 1:
            raise ValueError("basis order must be >= 1")
        n = np.arange(order, dtype=float)
        logw = _loggamma(n + 2 * sp.xi).real - np.array([math.lgamma(i + 1.0) for i in range(order)])
        return cls(alpha=2 * sp.xi - 1, order=order, weights=np.exp(logw))

    def weighted_norm(self, coeffs) -> float:
        """sqrt(sum |c_n|^2 w_n), the L^2(m_xi) norm of sum c_n L_n."""
        c = np.asarray(coeffs)
        return float(np.sqrt(np.sum(np.abs(c) ** 2 * self.weights[: c.size])))


def _is_nonpositive_integer(z: complex, tol: float = 1e-12) -> bool:
    return z.real <= tol and abs(z.imag) < tol and abs(z.real - round(z.real)) < tol


def log_gamma(z) -> complex:
    """Principal branch of log Gamma(z) for complex z off the poles."""
    zc = complex(z)
    if _is_nonpositive_integer(zc):
        raise ValueError(f"log_gamma pole at z = {zc}")
    return complex(_loggamma(zc))


def gamma_ratio(num, den) -> complex:
    """Gamma(num)/Gamma(den) through log space, overflow-free for moderate ratios."""
    return cmath.exp(log_gamma(num) - log_gamma(den))


def laguerre_eval(n: int, alpha: float, t):
    """Generalised Laguerre polynomial L_n^alpha(t) by the three-term recurrence.

    t may be a scalar or an ndarray; alpha must be real and > -1.
    """
    if n < 0:
        raise ValueError("degree must be >= 0")
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    t_arr = np.asarray(t, dtype=float)
    prev = np.ones_like(t_arr)
    if n == 0:
        return prev if t_arr.ndim else float(prev)
    cur = 1.0 + alpha - t_arr
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - t_arr) * cur - (k + alpha) * prev) / (k + 1)
    return cur if t_arr.ndim else float(cur)


def laguerre_eval_complex_alpha(n: int, alpha, t):
    """L_n^alpha(t) by the explicit monomial sum, for complex order parameter.

    Needed for e^{-t} L_l^{2q-1}(t) with complex q; coefficients are built
    from log-space Gamma ratios.
    """
    if n < 0:
        raise ValueError("degree must be >= 0")
    a = complex(alpha)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape, dtype=complex)
    lg_top = log_gamma(n + a + 1)
    for ell in range(n + 1):
        coef = cmath.exp(lg_top - log_gamma(ell + a + 1)
                         - math.lgamma(n - ell + 1) - math.lgamma(ell + 1))
        out += (-1) ** ell * coef * t_arr ** ell
    return out if t_arr.ndim else complex(out)


def laguerre_table(nmax: int, alpha: float, t: np.ndarray) -> np.ndarray:
    """Matrix of L_n^alpha(t_j) for n < nmax at the given nodes, by recurrence."""
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax, t.size), dtype=float)
    out[0] = 1.0
    if nmax > 1:
        out[1] = 1.0 + alpha - t
    for k in range(1, nmax - 1):
        out[k + 1] = ((2 * k + 1 + alpha - t) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def hyp2f1_terminating(m: int, b, c, z) -> complex:
    """2F1(-m, b; c; z) as the exact finite sum of m+1 terms.

    The first parameter is the non-positive integer -m, so the defining
    series terminates; c may not hit 0, -1, ..., -(m-1) inside the sum.
    """
    if m < 0:
        raise ValueError("m must be a non-negative integer")
    b = complex(b)
    c = complex(c)
    z = complex(z)
    for i in range(m):
        if abs(c + i) < 1e-14:
            raise ValueError(f"2F1 denominator pole: c + {i} = {c + i}")
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for i in range(m):
        term *= (-m + i) * (b + i) / ((c + i) * (i + 1)) * z
        total += term
    return total


def bessel_j_reduced(nu, x, max_terms: int = 600) -> complex:
    """The entire function sum_m (-x)^m / (m! Gamma(m+nu+1)).

    Equals J_nu(2 sqrt(x)) / x^{nu/2}; this is the Bessel kernel of the
    integral operator with the algebraic prefactor absorbed, which avoids
    branch issues at x = 0.
    """
    nu = complex(nu)
    x = float(x)
    term = cmath.exp(-log_gamma(nu + 1))
    total = term
    for m in range(1, max_terms):
        term *= -x / (m * (nu + m))
        total += term
        if abs(term) <= 1e-16 * max(abs(total), 1e-300):
            return total
    raise ConvergenceError(f"bessel_j_reduced: no convergence at x = {x} within {max_terms} terms")


def bessel_j_series(nu, t: float, max_terms: int = 600) -> complex:
    """Bessel J_nu(t) by power series, Re(nu) > -1, t >= 0.

    Truncation is adaptive (last term below 1e-16 relative).  Roundoff grows
    like eps * e^t, so the documented validity range is t <= 50; downstream
    integrals always pair the kernel with an e^{-t} weight that compensates.
    """
    nu = complex(nu)
    if nu.real <= -1:
        raise ValueError("require Re(nu) > -1")
    if t < 0:
        raise ValueError("require t >= 0")
    if t == 0.0:
        if nu == 0:
            return 1.0 + 0.0j
        if nu.real > 0:
            return 0.0 + 0.0j
        raise ValueError("J_nu(0) undefined for Re(nu) <= 0, nu != 0")
    half = t / 2.0
    return cmath.exp(nu * math.log(half)) * bessel_j_reduced(nu, half * half, max_terms)


def _kummer_lower_gamma(s, t: float, max_terms: int = 2000) -> complex:
    """gamma(s, t) by the Kummer series t^s e^{-t} sum_k t^k / (s (s+1) ... (s+k)).

    Analytic continuation in s away from the poles 0, -1, -2, ...; the terms
    carry no sign alternation, so the sum is stable for t up to ~700.
    """
    s = complex(s)
    if t == 0.0:
        return 0.0 + 0.0j
    term = 1.0 / s
    total = term
    for k in range(1, max_terms):
        term *= t / (s + k)
        total += term
        if abs(term) <= 1e-17 * max(abs(total), 1e-300):
            break
    else:
        raise ConvergenceError(f"incomplete gamma series: no convergence at t = {t}")
    return cmath.exp(s * math.log(t) - t) * total


def lower_incomplete_gamma(s, t: float, max_terms: int = 2000) -> complex:
    """Lower incomplete gamma gamma(s, t) for Re(s) > 0, t >= 0."""
    s = complex(s)
    if s.real <= 0:
        raise ValueError("require Re(s) > 0")
    if t < 0:
        raise ValueError("require t >= 0")
    return _kummer_lower_gamma(s, t, max_terms)


def nq_chi_series(q, t: float, max_terms: int = 600) -> complex:
    """N_q(chi_{-1})(t) = sum_m (-t)^m / (m! (m + 2q - 1)), adaptively truncated.

    The sum alternates, so double precision keeps full accuracy only for
    moderate t (roundoff ~ eps * e^t); use nq_chi() for an evaluator that
    switches representation automatically.
    """
    sp = as_parameter(q)
    tq = 2 * sp.q
    if t < 0:
        raise ValueError("require t >= 0")
    term = 1.0 + 0.0j
    total = term / (tq - 1)
    comp = 0.0 + 0.0j
    for m in range(1, max_terms):
        term *= -t / m
        add = term / (m + tq - 1)
        y = add - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if abs(term) <= 1e-17 * max(abs(total), 1e-300) and m > t:
            return total
    raise ConvergenceError(f"nq_chi_series: no convergence at t = {t}")


def _kummer_sum_vec(s: complex, t: np.ndarray, max_terms: int = 4000) -> np.ndarray:
    """Vectorised sum_k t^k / (s (s+1) ... (s+k)); terms carry no alternation."""
    term = np.full(t.shape, 1.0 / s, dtype=complex)
    total = term.copy()
    for k in range(1, max_terms):
        term *= t / (s + k)
        total += term
        if np.max(np.abs(term)) <= 1e-17 * max(np.max(np.abs(total)), 1e-300):
            return total
    raise ConvergenceError("incomplete gamma series: term budget exhausted")


def nq_chi(q, t) -> complex | np.ndarray:
    """N_q(chi_{-1})(t) through the representation t^{1-2q} gamma(2q-1, t).

    The Kummer form is stable at every t (unlike the alternating series,
    whose roundoff grows like eps * e^t); accepts scalar or array t >= 0.
    """
    sp = as_parameter(q)
    s = 2 * sp.q - 1
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr).astype(float)
    if np.any(t_flat < 0):
        raise ValueError("require t >= 0")
    out = np.empty(t_flat.shape, dtype=complex)
    zero = t_flat == 0.0
    out[zero] = 1.0 / s  # m = 0 term of the defining series
    pos = ~zero
    if np.any(pos):
        tp = t_flat[pos]
        # t^{1-2q} gamma(2q-1, t) = e^{-t} sum_k t^k / ((2q-1) 2q ... (2q-1+k))
        out[pos] = np.exp(-tp) * _kummer_sum_vec(s, tp)
    return complex(out[0]) if scalar else out
