"""Closed-form assembly of the truncated eigenvalue-1 systems.

The multiplication-operator entries are a single log-space Gamma expression.
The integral-operator entries are defined by an alternating double sum over
(l, j) with a terminating 2F1 in each term; that form is implemented verbatim
in n_entry (with compensated summation and a cancellation flag), but it loses
all double precision beyond k, n ~ 35 for complex q.  The whole-matrix
builder therefore uses an algebraically equivalent single sum obtained by a
Chu-Vandermonde collapse of the inner hypergeometric layer:

    n(k, n) = pre * sum_p 2^{-p} c_p(n) W(p, k),
    pre     = Gamma(n+2 xi) Gamma(k+2 xi) 2^{-(k+2 xi)},
    c_p(n)  = (w)_{n-p} / ((n-p)! (p+2 xi)_{n-p}),      w = 2 xi - 2 q,
    W(p, k) = sum_j (-1)^j / (j! (k-j)! (p-j)! Gamma(j+2 xi)).

W is real and depends on xi only; it equals a Meixner-type hypergeometric
2F1(-k, -p; 2 xi; -1) / (k! p! Gamma(2 xi)) and is tabulated once per xi by
the three-term recurrence in extended precision (the recurrence carries a
2^k-growing companion solution, so working digits scale with the order).
The q-dependent factors are pure products, evaluated in log scale.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.special import loggamma as _loggamma

from .quadrature import composite_legendre, gauss_legendre, geometric_legendre
from .specfun import LaguerreBasis, SpectralParameter, as_parameter, hyp2f1_terminating

__all__ = [
    "CancellationWarning",
    "TruncatedSystem",
    "CoefficientVector",
    "m_entry",
    "n_entry",
    "a_entry",
    "d_entry",
    "d_vector",
    "psi_entry",
    "psi_vector",
    "psi_first_integral_closed",
    "build_system",
]

# flag entries whose largest summand exceeds the result by this factor
CANCELLATION_FLAG_RATIO = 1e12

_LN2 = math.log(2.0)

# grading of the necessarily-singular second Psi integral: analytic head on
# (0, 2^-50), geometric Legendre panels above
_PSI_HEAD_CUT = 2.0 ** -50
_PSI_HEAD_TERMS = 8
_PSI_PANEL_NODES = 24
_PSI_FIRST_NODES = 200


class CancellationWarning(UserWarning):
    """The alternating sum lost more than CANCELLATION_FLAG_RATIO of precision."""


def _lfac(n: int) -> float:
    return math.lgamma(n + 1.0)


# ---------------------------------------------------------------------------
# entries
# ---------------------------------------------------------------------------

def m_entry(q, k: int, n: int) -> float:
    """(M L_n, L_k)_xi = Gamma(k+n+2 xi)/(k! n!) 2^{-(k+n+2 xi)}; real, positive."""
    sp = as_parameter(q)
    if k < 0 or n < 0:
        raise ValueError("indices must be >= 0")
    lg = _loggamma(k + n + 2 * sp.xi).real
    return math.exp(lg - _lfac(k) - _lfac(n) - (k + n + 2 * sp.xi) * _LN2)


def n_entry(q, k: int, n: int, high_precision: bool = False) -> complex:
    """(N_q L_n, L_k)_xi by the defining alternating double sum.

    Each (l, j) term pairs log-space Gamma ratios with a terminating 2F1 at
    z = 1/2; the l sum is accumulated with compensated summation.  Emits
    CancellationWarning (and, with high_precision, re-evaluates in extended
    precision) when the largest l-term exceeds the result by 1e12.
    """
    sp = as_parameter(q)
    if k < 0 or n < 0:
        raise ValueError("indices must be >= 0")
    q_, xi = sp.q, sp.xi
    lpre = _loggamma(n + 2 * xi).real + _loggamma(k + 2 * xi).real - (k + 2 * xi) * _LN2
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    max_term = 0.0
    for ell in range(n + 1):
        lcoef = complex(_loggamma(ell + 2 * q_)) - _lfac(n - ell) - _loggamma(ell + 2 * xi).real
        inner = 0.0 + 0.0j
        for j in range(min(ell, k) + 1):
            lterm = (-j * _LN2 - _lfac(j) - _lfac(ell - j) - _lfac(k - j)
                     - complex(_loggamma(2 * q_ + j)))
            f = hyp2f1_terminating(ell - j, 2 * xi + j, 2 * q_ + j, 0.5)
            inner += cmath.exp(lpre + lcoef + lterm) * f
        term = (-1) ** ell * inner
        max_term = max(max_term, abs(term))
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
    if max_term > CANCELLATION_FLAG_RATIO * max(abs(total), 1e-300):
        if high_precision:
            digits = int(math.log10(max_term / max(abs(total), 1e-300))) + 30
            return _n_entry_collapsed_mp(sp, k, n, dps=digits)
        warnings.warn(
            f"n_entry({sp.q}, {k}, {n}): cancellation ratio "
            f"{max_term / max(abs(total), 1e-300):.1e}",
            CancellationWarning, stacklevel=2)
    return total


def a_entry(sign: str, q, k: int, n: int) -> complex:
    """a^{+-}_{kn} = m_entry +- n_entry."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    s = 1.0 if sign == "+" else -1.0
    return m_entry(q, k, n) + s * n_entry(q, k, n)


def d_entry(q, k: int) -> float:
    """Diagonal weight Gamma(k+2 xi)/k!."""
    sp = as_parameter(q)
    if k < 0:
        raise ValueError("index must be >= 0")
    return math.exp(_loggamma(k + 2 * sp.xi).real - _lfac(k))


def d_vector(q, order: int) -> np.ndarray:
    sp = as_parameter(q)
    k = np.arange(order, dtype=float)
    lf = np.array([_lfac(i) for i in range(order)])
    return np.exp(_loggamma(k + 2 * sp.xi).real - lf)


# ---------------------------------------------------------------------------
# W table (q-independent layer of the collapsed sum)
# ---------------------------------------------------------------------------

class _WTable:
    def __init__(self, xi: float, size: int):
        self.xi = xi
        self.size = size
        # companion solution of the recurrence grows like 2^k
        self.dps = 30 + int(math.ceil(size * math.log10(2.0)))
        with mp.workdps(self.dps):
            two_xi = mp.mpf(xi) * 2
            p = [mp.mpf(i) for i in range(size)]
            rows = [[mp.mpf(1)] * size, [1 - pi / two_xi for pi in p]]
            for k in range(1, size - 1):
                prev, cur = rows[-2], rows[-1]
                rows.append([((3 * k + two_xi - p[i]) * cur[i] - 2 * k * prev[i]) / (k + two_xi)
                             for i in range(size)])
            lgam = [mp.loggamma(i + 1) for i in range(size)]
            lg2xi = mp.loggamma(two_xi)
            logw = np.full((size, size), -np.inf)
            sgn = np.ones((size, size))
            self._mp_logw = [[None] * size for _ in range(size)]
            self._mp_sgn = [[1] * size for _ in range(size)]
            for k in range(size):
                row = rows[k]
                for pp in range(size):
                    v = row[pp]
                    if v == 0:
                        self._mp_logw[pp][k] = mp.mpf("-inf")
                        continue
                    lw = mp.log(abs(v)) - lgam[k] - lgam[pp] - lg2xi
                    logw[pp, k] = float(lw)
                    sgn[pp, k] = 1.0 if v > 0 else -1.0
                    self._mp_logw[pp][k] = lw
                    self._mp_sgn[pp][k] = 1 if v > 0 else -1
        self.logw = logw
        self.sign = sgn


_W_CACHE: dict = {}


def _w_table(xi: float, size: int) -> _WTable:
    key = round(float(xi), 14)
    tab = _W_CACHE.get(key)
    if tab is None or tab.size < size:
        tab = _WTable(float(xi), size)
        _W_CACHE[key] = tab
    return tab


# ---------------------------------------------------------------------------
# collapsed whole-matrix builder
# ---------------------------------------------------------------------------

def _log_c_table(sp: SpectralParameter, order: int) -> np.ndarray:
    """log of c_p(n) = (w)_{n-p} / ((n-p)! (p+2 xi)_{n-p}), complex, [p, n]."""
    xi = sp.xi
    om = 2 * xi - 2 * sp.q
    logc = np.full((order, order), -np.inf, dtype=complex)
    lfr = np.array([_lfac(i) for i in range(order)])
    om_zero = om == 0
    if not om_zero:
        lg_om = complex(_loggamma(om))
    for n in range(order):
        p = np.arange(n + 1)
        r = (n - p).astype(float)
        if om_zero:
            lc = np.where(r == 0, 0.0, -np.inf).astype(complex)
        else:
            lc = (_loggamma(om + r) - lg_om - lfr[n - p]
                  - (_loggamma(p + 2 * xi + r).real - _loggamma(p + 2 * xi).real))
        logc[: n + 1, n] = lc
    return logc


def _n_block(sp: SpectralParameter, order: int):
    """Full (N_q L_n, L_k)_xi matrix and per-entry cancellation amplification."""
    xi = sp.xi
    tab = _w_table(xi, order)
    logw = tab.logw[:order, :order]
    sgn = tab.sign[:order, :order]
    logc = _log_c_table(sp, order)
    lgam = _loggamma(np.arange(order, dtype=float) + 2 * xi).real
    pln2 = np.arange(order, dtype=float) * _LN2
    out = np.empty((order, order), dtype=complex)
    amp = np.empty((order, order))
    for k in range(order):
        lpre = lgam[k] + lgam[None, :] - (k + 2 * xi) * _LN2
        lt = (logw[:, k] - pln2)[:, None] + logc + lpre
        mx = np.max(lt.real, axis=0)
        mx = np.where(np.isfinite(mx), mx, 0.0)
        s = np.sum(np.exp(lt - mx[None, :]) * sgn[:, k][:, None], axis=0)
        out[k, :] = np.exp(mx) * s
        with np.errstate(divide="ignore"):
            amp[k, :] = 1.0 / np.abs(s)
    return out, amp


def _m_block(sp: SpectralParameter, order: int) -> np.ndarray:
    k = np.arange(order, dtype=float)
    lf = np.array([_lfac(i) for i in range(order)])
    lg = _loggamma(k[:, None] + k[None, :] + 2 * sp.xi).real
    return np.exp(lg - lf[:, None] - lf[None, :] - (k[:, None] + k[None, :] + 2 * sp.xi) * _LN2)


def _n_entry_collapsed_mp(sp: SpectralParameter, k: int, n: int, dps: int = 60) -> complex:
    """Extended-precision re-evaluation of one entry via the collapsed sum."""
    size = max(k, n) + 1
    tab = _w_table(sp.xi, size)
    with mp.workdps(max(dps, tab.dps)):
        q_ = mp.mpc(sp.q)
        xi = mp.mpf(sp.xi)
        om = 2 * xi - 2 * q_
        pre = mp.e ** (mp.loggamma(n + 2 * xi) + mp.loggamma(k + 2 * xi)) * mp.mpf(2) ** (-(k + 2 * xi))
        tot = mp.mpc(0)
        for p in range(n + 1):
            r = n - p
            cp = mp.rf(om, r) / (mp.factorial(r) * mp.rf(p + 2 * xi, r))
            lw = tab._mp_logw[p][k]
            if lw == mp.mpf("-inf"):
                continue
            w = tab._mp_sgn[p][k] * mp.e ** lw
            tot += mp.mpf(2) ** (-p) * cp * w
        return complex(pre * tot)


# ---------------------------------------------------------------------------
# inhomogeneous term
# ---------------------------------------------------------------------------

def psi_first_integral_closed(q, n: int) -> float:
    """Binomial closed form of int_{1/2}^1 t^{2 xi - 2}(1-t)^n dt (cross-check only;
    the alternating sum loses precision for large n)."""
    sp = as_parameter(q)
    two_xi = 2 * sp.xi
    total = 0.0
    for ell in range(n + 1):
        total += ((-1) ** ell * math.comb(n, ell)
                  * (1.0 - 2.0 ** (1.0 - two_xi - ell)) / (ell + two_xi - 1.0))
    return total


def _psi_head(sp: SpectralParameter, n: int, eps: float) -> complex:
    """Analytic integral of t^{n+2q-2} C_n(t) over (0, eps) from the Taylor
    expansion of the smooth cofactor C_n."""
    q_, xi = sp.q, sp.xi
    a1 = n + 2 * xi + 1.0
    a2 = n + 2 * xi + 2.0

    def bcoef(a: float, m: int) -> float:
        # coefficient of t^m in (1+t)^{-a}
        if m < 0:
            return 0.0
        out = 1.0
        for i in range(m):
            out *= -(a + i) / (i + 1)
        return out

    total = 0.0 + 0.0j
    ln_eps = math.log(eps)
    for m in range(_PSI_HEAD_TERMS):
        cm = ((2 * xi + 4 * q_) * bcoef(a1, m - 1) - n * bcoef(a1, m)
              + 2 * n * bcoef(a2, m - 1) - 2 * (2 * xi + 1) * bcoef(a2, m - 2))
        expo = n + 2 * q_ - 1 + m
        total += cm * cmath.exp(expo * ln_eps) / expo
    return total


def psi_vector(q, order: int) -> np.ndarray:
    """Psi_n for n < order: the two defining integrals of the inhomogeneous term.

    First integral by Gauss-Legendre on (1/2, 1); second by geometrically
    graded panels on (eps, 1) plus an analytic head below eps, which handles
    the t^{n+2q-2} endpoint singularity for small n and xi < 1/2.
    """
    sp = as_parameter(q)
    q_, xi = sp.q, sp.xi
    ns = np.arange(order, dtype=float)

    rule1 = gauss_legendre(_PSI_FIRST_NODES, 0.5, 1.0)
    t1 = rule1.nodes
    vals1 = np.exp((2 * xi - 2) * np.log(t1))[:, None] * (1.0 - t1)[:, None] ** ns[None, :]
    first = vals1.T @ rule1.weights

    rule2 = geometric_legendre(_PSI_PANEL_NODES, _PSI_HEAD_CUT, 1.0)
    t2 = rule2.nodes
    ln_t = np.log(t2)
    ln_1pt = np.log1p(t2)
    u = t2 / (1.0 + t2)
    # t^{n+2q-2} (1+t)^{-(n+2 xi+1)} ((2 xi+4q) t - n - 2(2 xi+1) t^2/(1+t) + 2 n t/(1+t))
    powers = np.exp(ln_t[:, None] * (ns[None, :] + 2 * q_ - 2)
                    - ln_1pt[:, None] * (ns[None, :] + 2 * xi + 1))
    cof = ((2 * xi + 4 * q_) * t2[:, None]
           - ns[None, :]
           - 2 * (2 * xi + 1) * (t2 * u)[:, None]
           + 2 * ns[None, :] * u[:, None])
    second = (powers * cof).T @ rule2.weights
    heads = np.array([_psi_head(sp, n, _PSI_HEAD_CUT) for n in range(order)])
    return first - (second + heads) / (2 * q_ - 1)


def psi_entry(q, n: int) -> complex:
    """Single inhomogeneous coefficient Psi_n."""
    if n < 0:
        raise ValueError("index must be >= 0")
    return complex(psi_vector(q, n + 1)[n])


# ---------------------------------------------------------------------------
# assembled system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedSystem:
    """Order-N truncation: raw matrices, diagonal, inhomogeneous term, and the
    symmetrized forms A~ = D^{-1/2} A D^{-1/2}, Psi~ = D^{1/2} Psi used by the
    solver (the weighted summability condition becomes the plain l2 norm)."""

    q: SpectralParameter
    order: int
    a_plus: np.ndarray = field(repr=False)
    a_minus: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    symmetrized_plus: np.ndarray = field(repr=False)
    symmetrized_minus: np.ndarray = field(repr=False)
    psi_tilde: np.ndarray = field(repr=False)
    cancellation_flags: np.ndarray = field(repr=False)

    def basis(self) -> LaguerreBasis:
        return LaguerreBasis.from_parameter(self.q, self.order)


@dataclass(frozen=True)
class CoefficientVector:
    """Expansion coefficients against the Laguerre basis, with the weighted norm."""

    coeffs: np.ndarray
    basis: LaguerreBasis

    def weighted_norm(self) -> float:
        return self.basis.weighted_norm(self.coeffs)


def build_system(q, order: int, high_precision: bool = False) -> TruncatedSystem:
    """Assemble the order-N truncated system at q.

    With high_precision=True, entries whose collapsed sum was flagged for
    cancellation (largest summand > 1e12 * result) are re-evaluated in
    extended precision.
    """
    sp = as_parameter(q)
    if order < 1:
        raise ValueError("order must be >= 1")
    mblk = _m_block(sp, order)
    nblk, amp = _n_block(sp, order)
    flags = amp > CANCELLATION_FLAG_RATIO
    if high_precision and np.any(flags):
        for k, n in zip(*np.nonzero(flags)):
            digits = int(math.log10(max(amp[k, n], 1.0))) + 30
            nblk[k, n] = _n_entry_collapsed_mp(sp, int(k), int(n), dps=digits)
    d = d_vector(sp, order)
    psi = psi_vector(sp, order)
    s = 1.0 / np.sqrt(d)
    a_plus = mblk + nblk
    a_minus = mblk - nblk
    return TruncatedSystem(
        q=sp, order=order,
        a_plus=a_plus, a_minus=a_minus, d=d, psi=psi,
        symmetrized_plus=a_plus * s[:, None] * s[None, :],
        symmetrized_minus=a_minus * s[:, None] * s[None, :],
        psi_tilde=np.sqrt(d) * psi,
        cancellation_flags=flags,
    )
