"""Brute-force quadrature recomputation of every closed-form quantity.

The closed forms in `matrices` are trusted only because everything here
reproduces them from the defining inner products: weighted Gauss rules for
the multiplication operator, the Bessel-Laguerre reduction for the integral
operator (with the full double Bessel integral as a secondary spot check),
and direct inner products for the inhomogeneous term.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

from . import dynamics
from .quadrature import (DEFAULT_SEMIINFINITE_NODES, composite_legendre,
                         geometric_legendre, weighted_semiinfinite)
from .specfun import (as_parameter, laguerre_eval_complex_alpha, laguerre_table,
                      log_gamma, nq_chi)

__all__ = [
    "OracleReport",
    "m_entry_quad",
    "n_entry_quad",
    "n_entry_bessel_quad",
    "psi_quad",
    "bq_transform",
    "intertwining_check",
    "format_report",
    "verify_matrices",
    "verify_specfun",
    "verify_dynamics",
    "verify_intertwining",
    "VERIFY_SUITES",
]


@dataclass(frozen=True)
class OracleReport:
    target: str
    closed_form: complex
    oracle_value: complex
    rel_error: float
    node_count: int

    @staticmethod
    def build(target, closed_form, oracle_value, node_count) -> "OracleReport":
        cf = complex(closed_form)
        ov = complex(oracle_value)
        rel = abs(cf - ov) / max(1.0, abs(ov))
        return OracleReport(target, cf, ov, rel, node_count)


def format_report(r: OracleReport) -> str:
    """One line per report, fixed column order."""
    return (f"{r.target},{r.closed_form.real:.17g},{r.closed_form.imag:.17g},"
            f"{r.oracle_value.real:.17g},{r.oracle_value.imag:.17g},"
            f"{r.rel_error:.3e},{r.node_count}")


def _finite_halfline_breakpoints(xi: float, hi: float, step: float = 3.0) -> np.ndarray:
    """Geometric grading toward 0 (deep enough that the t^{2 xi - 1} mass of the
    skipped head is below 1e-17) followed by uniform panels out to hi."""
    depth = int(math.ceil(29.0 / xi))
    lo_edges = [2.0 ** -k for k in range(depth, 0, -1)]
    hi_edges = list(np.arange(1.0 + step, hi, step)) + [hi]
    return np.array(lo_edges + [1.0] + hi_edges)


class _Workspace:
    """Per-q cache of rules, basis tables, and the chi combination values."""

    def __init__(self, q: complex, nodes: int):
        self.sp = as_parameter(q)
        self.nodes = nodes
        xi = self.sp.xi
        self.rule = weighted_semiinfinite(nodes, 2 * xi - 1)
        self._basis = None         # real-alpha Laguerre values at rule nodes
        self._basis_cq = {}        # complex-alpha rows, keyed by degree
        self._psi_rule = None
        self._psi_combo = None
        self._psi_basis = None

    def basis(self, nmax: int) -> np.ndarray:
        if self._basis is None or self._basis.shape[0] < nmax:
            self._basis = laguerre_table(max(nmax, 24), 2 * self.sp.xi - 1, self.rule.nodes)
        return self._basis

    def basis_complex_alpha(self, ell: int) -> np.ndarray:
        row = self._basis_cq.get(ell)
        if row is None:
            row = laguerre_eval_complex_alpha(ell, 2 * self.sp.q - 1, self.rule.nodes)
            self._basis_cq[ell] = row
        return row

    def psi_pieces(self):
        if self._psi_rule is None:
            xi = self.sp.xi
            bp = _finite_halfline_breakpoints(xi, 120.0)
            rule = composite_legendre(24, bp)
            t = rule.nodes
            combo = -np.expm1(-t) / t - nq_chi(self.sp, t)
            weight = np.exp((2 * xi - 1) * np.log(t) - t)
            self._psi_rule = rule
            self._psi_combo = combo * weight
            self._psi_basis = laguerre_table(24, 2 * xi - 1, t)
        return self._psi_rule, self._psi_combo, self._psi_basis


@lru_cache(maxsize=16)
def _workspace(q: complex, nodes: int) -> _Workspace:
    return _Workspace(q, nodes)


def _u_coeff(xi: float, n: int, ell: int) -> float:
    # monomial-layer coefficient of L_n^{2 xi - 1}: (-1)^l Gamma(n+2 xi)/((n-l)! Gamma(l+2 xi))
    lg = log_gamma(n + 2 * xi).real - math.lgamma(n - ell + 1.0) - log_gamma(ell + 2 * xi).real
    return (-1) ** ell * math.exp(lg)


def m_entry_quad(q, k: int, n: int, nodes: int = DEFAULT_SEMIINFINITE_NODES) -> complex:
    """(M L_n, L_k)_xi = int e^{-2t} L_n L_k t^{2 xi - 1} dt by the weighted rule."""
    if not (0 <= k <= 40 and 0 <= n <= 40):
        raise ValueError("degree budget of the default rules is k, n <= 40")
    ws = _workspace(complex(as_parameter(q).q), nodes)
    basis = ws.basis(max(k, n) + 1)
    f = np.exp(-ws.rule.nodes) * basis[n] * basis[k]
    return complex(f @ ws.rule.weights)


def n_entry_quad(q, k: int, n: int, nodes: int = DEFAULT_SEMIINFINITE_NODES) -> complex:
    """(N_q L_n, L_k)_xi via N_q L_n = sum_l u_{nl} e^{-t} L_l^{2q-1}(t) and one
    weighted quadrature; avoids the double Bessel integral."""
    if not (0 <= k <= 20 and 0 <= n <= 20):
        raise ValueError("oracle route is budgeted for k, n <= 20")
    sp = as_parameter(q)
    ws = _workspace(complex(sp.q), nodes)
    t = ws.rule.nodes
    g = np.zeros(t.size, dtype=complex)
    for ell in range(n + 1):
        g += _u_coeff(sp.xi, n, ell) * ws.basis_complex_alpha(ell)
    f = np.exp(-t) * g * ws.basis(k + 1)[k]
    return complex(f @ ws.rule.weights)


def n_entry_bessel_quad(q, k: int, n: int, n_per_panel: int = 12) -> complex:
    """Full double integral with the Bessel kernel, nested quadrature truncated
    at s, t <= 50 (tail under the e^{-s-t} weight is below 1e-17).

    The kernel J_{2q-1}(2 sqrt(st))/(st)^{q-1/2} is evaluated in extended
    precision (series roundoff would otherwise grow like e^{2 sqrt(st)}).
    """
    if not (0 <= k <= 8 and 0 <= n <= 8):
        raise ValueError("double-integral oracle is budgeted for k, n <= 8")
    sp = as_parameter(q)
    xi = sp.xi
    # ratio-1.3 grading above 1 keeps the cos(2 sqrt(st)) phase advance per
    # panel bounded over the whole square
    upper = [1.0]
    while upper[-1] < 50.0:
        upper.append(min(upper[-1] * 1.3, 50.0))
    bp = np.concatenate([2.0 ** -np.arange(20, 0, -1), np.array(upper)])
    rule = composite_legendre(n_per_panel, bp)
    s_nodes, t_nodes = rule.nodes, rule.nodes
    with mp.workdps(30):
        b = mp.mpc(2 * sp.q)
        kern = np.array([[complex(mp.hyp0f1(b, -mp.mpf(si) * mp.mpf(ti)))
                          for ti in t_nodes] for si in s_nodes]) \
            * cmath.exp(-complex(log_gamma(2 * sp.q)))
    l_n = laguerre_table(n + 1, 2 * xi - 1, s_nodes)[n]
    l_k = laguerre_table(k + 1, 2 * xi - 1, t_nodes)[k]
    ws_s = rule.weights * l_n * np.exp((2 * sp.q - 1) * np.log(s_nodes) - s_nodes)
    ws_t = rule.weights * l_k * np.exp((2 * xi - 1) * np.log(t_nodes) - t_nodes)
    return complex(ws_s @ kern @ ws_t)


def psi_quad(q, n: int, nodes: int = DEFAULT_SEMIINFINITE_NODES) -> complex:
    """Psi_n = (n!/Gamma(n+2 xi)) ((I-M-N_q) chi_{-1}, L_n)_xi by direct
    quadrature, independent of the elementary-integral reformulation."""
    if not 0 <= n <= 20:
        raise ValueError("oracle route is budgeted for n <= 20")
    sp = as_parameter(q)
    ws = _workspace(complex(sp.q), nodes)
    rule, combo_w, basis = ws.psi_pieces()
    val = (combo_w * basis[n]) @ rule.weights
    w_n = math.exp(log_gamma(n + 2 * sp.xi).real - math.lgamma(n + 1.0))
    return complex(val / w_n)


# ---------------------------------------------------------------------------
# Borel-type transform and the intertwining identities
# ---------------------------------------------------------------------------

def _bq_rule(xi: float, re_inv_z: float):
    hi = max(4.0, min(2000.0, 110.0 / re_inv_z))
    return composite_legendre(24, _finite_halfline_breakpoints(xi, hi, step=max(hi / 40.0, 2.0)))


def bq_transform(q, phi, z, include_chi: bool = False, nodes_per_panel: int = 24) -> complex:
    """B_q[phi](z) = z^{-2q} int_0^inf e^{-t/z} phi(t) t^{2q-1} dt, plus the
    analytic chi_{-1} extension Gamma(2q-1)/z when include_chi is set.

    phi must be polynomially bounded and vectorised over the node array
    (pass None for phi identically zero).  Requires Re(z) > 0, which makes
    Re(1/z) > 0 and the integral convergent.
    """
    sp = as_parameter(q)
    zc = complex(z)
    if zc.real <= 0:
        raise ValueError("require Re(z) > 0")
    inv = 1.0 / zc
    total = 0.0 + 0.0j
    if phi is not None:
        rule = _bq_rule(sp.xi, inv.real)
        t = rule.nodes
        vals = np.asarray(phi(t), dtype=complex)
        integrand = np.exp(-t * inv + (2 * sp.q - 1) * np.log(t)) * vals
        total = cmath.exp(-2 * sp.q * cmath.log(zc)) * complex(integrand @ rule.weights)
    if include_chi:
        total += cmath.exp(log_gamma(2 * sp.q - 1)) / zc
    return total


def intertwining_check(q, phi_coeffs, z: float):
    """Check both operator identities at the point z in (0, 1]:

        P_{0,q}(B_q[chi_{-1} + phi]) = B_q[M(chi_{-1} + phi)],
        P_{1,q}(B_q[chi_{-1} + phi]) = B_q[N_q(chi_{-1} + phi)],

    for a polynomial phi given by ascending monomial coefficients.  Returns a
    pair of OracleReports (relative error of each identity)."""
    sp = as_parameter(q)
    z = float(z)
    if not 0 < z <= 1:
        raise ValueError("operator identities are checked on z in (0, 1]")
    coeffs = [complex(c) for c in (phi_coeffs if phi_coeffs is not None else [])]

    def phi(t):
        out = np.zeros(np.shape(t), dtype=complex)
        for m, c in enumerate(coeffs):
            out = out + c * np.asarray(t, dtype=float) ** m
        return out

    def bq_chi_phi(w):
        return bq_transform(sp, phi if coeffs else None, w, include_chi=True)

    # M side: M chi_{-1} = e^{-t}/t has the closed transform
    # z^{-2q} Gamma(2q-1) (1 + 1/z)^{1-2q}; M phi integrates directly.
    left0 = dynamics.pointwise_operator_apply("P0", sp, bq_chi_phi, z)
    m_chi = (cmath.exp(-2 * sp.q * cmath.log(complex(z)) + log_gamma(2 * sp.q - 1))
             * (1.0 + 1.0 / z) ** (1.0 - 2 * sp.q))
    right0 = m_chi + (bq_transform(sp, lambda t: np.exp(-t) * phi(t), z) if coeffs else 0.0)
    rep0 = OracleReport.build(f"intertwine.M q={sp.q:g} z={z:g}", left0, right0,
                              _bq_rule(sp.xi, 1.0 / z).nodes.size)

    # N side: N_q chi_{-1} = nq_chi; N_q t^m = m! e^{-t} L_m^{2q-1}(t).
    left1 = dynamics.pointwise_operator_apply("P1", sp, bq_chi_phi, z)

    def n_side(t):
        out = np.asarray(nq_chi(sp, t), dtype=complex)
        for m, c in enumerate(coeffs):
            out = out + (c * math.factorial(m)) * np.exp(-t) \
                * np.asarray(laguerre_eval_complex_alpha(m, 2 * sp.q - 1, t), dtype=complex)
        return out

    right1 = bq_transform(sp, n_side, z)
    rep1 = OracleReport.build(f"intertwine.N q={sp.q:g} z={z:g}", left1, right1,
                              _bq_rule(sp.xi, 1.0 / z).nodes.size)
    return rep0, rep1


# ---------------------------------------------------------------------------
# verification suites (consumed by the CLI and the acceptance tests)
# ---------------------------------------------------------------------------

_GRID_Q = (0.75 + 0j, 1.25 + 0j, 0.6 + 2j, 0.5 + 3j)


def verify_matrices(kmax: int = 12, psi_nmax: int = 20,
                    nodes: int = DEFAULT_SEMIINFINITE_NODES):
    """Entry and Psi oracle equivalence on the standard q grid."""
    from . import matrices

    reports = []
    ok = True
    for q in _GRID_Q:
        for k in range(kmax + 1):
            for n in range(kmax + 1):
                rm = OracleReport.build(f"m_entry q={q:g} k={k} n={n}",
                                        matrices.m_entry(q, k, n),
                                        m_entry_quad(q, k, n, nodes=nodes),
                                        nodes)
                rn = OracleReport.build(f"n_entry q={q:g} k={k} n={n}",
                                        matrices.n_entry(q, k, n),
                                        n_entry_quad(q, k, n, nodes=nodes),
                                        nodes)
                ok = ok and rm.rel_error <= 1e-10 and rn.rel_error <= 1e-8
                reports.extend((rm, rn))
        for n in range(psi_nmax + 1):
            rp = OracleReport.build(f"psi q={q:g} n={n}",
                                    matrices.psi_entry(q, n), psi_quad(q, n),
                                    DEFAULT_SEMIINFINITE_NODES)
            ok = ok and rp.rel_error <= 1e-8
            reports.append(rp)
    for n in range(psi_nmax + 1):
        v = matrices.psi_entry(1.0, n)
        r = OracleReport.build(f"psi-degeneracy q=1 n={n}", v, 0.0, 0)
        ok = ok and abs(v) <= 1e-10
        reports.append(r)
    return reports, ok


def verify_specfun():
    """Laguerre orthogonality and the Bessel-Laguerre integral identity."""
    from .specfun import bessel_j_reduced

    reports = []
    ok = True
    for xi in (0.5, 0.75, 1.2):
        rule = weighted_semiinfinite(DEFAULT_SEMIINFINITE_NODES, 2 * xi - 1)
        tab = laguerre_table(16, 2 * xi - 1, rule.nodes)
        logw = [log_gamma(i + 2 * xi).real - math.lgamma(i + 1.0) for i in range(16)]
        w = np.exp(logw)
        for n_ in range(16):
            for m_ in range(n_, 16):
                got = (tab[n_] * tab[m_]) @ rule.weights
                want = w[n_] if n_ == m_ else 0.0
                rel = abs(got - want) / math.sqrt(w[n_] * w[m_])
                ok = ok and rel <= 1e-10
                reports.append(OracleReport(f"orthogonality xi={xi} n={n_} m={m_}",
                                            complex(want), complex(got), rel,
                                            rule.nodes.size))
    for q in (0.75 + 0j, 0.6 + 2j):
        sp = as_parameter(q)
        bp = np.concatenate([2.0 ** -np.arange(40, 0, -1), np.arange(1.0, 60.1, 2.5)])
        rule = composite_legendre(24, bp)
        s = rule.nodes
        for t in (0.5, 1.0, 2.0):
            kern = np.array([bessel_j_reduced(2 * sp.q - 1, si * t) for si in s])
            for ell in range(9):
                base = np.exp((2 * sp.q - 1) * np.log(s) - s + ell * np.log(s)
                              - math.lgamma(ell + 1.0))
                got = complex((kern * base) @ rule.weights)
                want = math.exp(-t) * laguerre_eval_complex_alpha(ell, 2 * sp.q - 1, t)
                r = OracleReport.build(f"bessel-laguerre q={q:g} l={ell} t={t}", want, got,
                                       rule.nodes.size)
                ok = ok and r.rel_error <= 1e-6
                reports.append(r)
    return reports, ok


def verify_dynamics(samples: int = 1000, seed: int = 20240815):
    """Jump-transformation and inverse-branch identities, plus cf re-folding."""
    rng = np.random.default_rng(seed)
    reports = []
    ok = True
    worst = 0.0
    for x in rng.uniform(1e-6, 1.0, samples):
        tau = dynamics.return_time(x)
        y = x
        for _ in range(int(tau)):
            y = dynamics.farey_apply(y)
        worst = max(worst, abs(y - dynamics.gauss_apply(x)))
    ok = ok and worst <= 1e-9
    reports.append(OracleReport("jump-identity worst |G - F^tau|", 0.0, complex(worst),
                                worst, samples))
    worst = 0.0
    for x in rng.uniform(0.0, 1.0, 50):
        for n_ in range(1, 21):
            y = dynamics.farey_inverse(1, x)
            for _ in range(n_ - 1):
                y = dynamics.farey_inverse(0, y)
            worst = max(worst, abs(y - 1.0 / (n_ + x)))
    ok = ok and worst <= 1e-12
    reports.append(OracleReport("inverse-branch worst |psi_n - phi_0^{n-1} phi_1|",
                                0.0, complex(worst), worst, 50 * 20))
    cf = dynamics.cf_expand(0.7, 10)
    exact = (cf.a0 == 0 and cf.digits == (1, 2, 3) and cf.remainder is None)
    ok = ok and exact
    reports.append(OracleReport("cf_expand(7/10) == [0;1,2,3]", complex(exact), 1.0,
                                0.0 if exact else 1.0, 0))
    return reports, ok


def verify_intertwining():
    """Both operator identities, polynomial phi of degree <= 2."""
    reports = []
    ok = True
    for q in (1.0 + 0j, 0.75 + 0j, 0.6 + 1j):
        for coeffs in (None, [1.0], [0.0, 1.0], [0.0, 0.0, 1.0]):
            for z in (0.3, 0.5, 0.8):
                r0, r1 = intertwining_check(q, coeffs, z)
                ok = ok and r0.rel_error <= 1e-6 and r1.rel_error <= 1e-6
                reports.extend((r0, r1))
    return reports, ok


VERIFY_SUITES = {
    "matrices": verify_matrices,
    "specfun": verify_specfun,
    "dynamics": verify_dynamics,
    "intertwining": verify_intertwining,
}
