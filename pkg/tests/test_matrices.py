"""Closed-form entries against oracle routes, symmetries, and the builder."""

import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from farey_spectral import matrices as mat
from farey_spectral import oracle

# Gamma(9.5)/(5! 3!) 2^{-9.5}
M_ENTRY_075_5_3 = 0.22882082470927335


def test_m_entry_examples():
    q_half = 0.5 + 3j   # xi = 1/2
    assert mat.m_entry(q_half, 0, 0) == pytest.approx(0.5, rel=1e-14)
    assert mat.m_entry(q_half, 1, 0) == pytest.approx(0.25, rel=1e-14)
    assert mat.m_entry(0.75, 5, 3) == pytest.approx(M_ENTRY_075_5_3, rel=1e-13)
    assert mat.m_entry(0.75, 5, 3) == pytest.approx(oracle.m_entry_quad(0.75, 5, 3), rel=1e-10)
    # no overflow at large indices: value stays polynomially bounded
    assert np.isfinite(mat.m_entry(1.25, 200, 200))


def test_d_entry_examples():
    assert all(mat.d_entry(0.5 + 1j, k) == pytest.approx(1.0, rel=1e-14) for k in range(6))
    assert mat.d_entry(1.0, 0) == pytest.approx(1.0, rel=1e-14)
    assert mat.d_entry(1.0, 3) == pytest.approx(4.0, rel=1e-14)
    assert np.allclose(mat.d_vector(1.0, 4), [mat.d_entry(1.0, k) for k in range(4)])


def test_n_entry_corner_value():
    for q in (0.75 + 0j, 1.0 + 0j, 0.6 + 2j, 0.5 + 3j):
        want = math.gamma(2 * q.real) * 2.0 ** (-2 * q.real)
        assert mat.n_entry(q, 0, 0) == pytest.approx(want, rel=1e-13)
    # q = 1 specialisation: Gamma(2)/4
    assert mat.n_entry(1.0, 0, 0) == pytest.approx(0.25, rel=1e-13)


def test_n_entry_against_quadrature():
    got = mat.n_entry(0.75 + 2j, 4, 6)
    ref = oracle.n_entry_quad(0.75 + 2j, 4, 6)
    assert abs(got - ref) <= 1e-8 * abs(ref)


def test_a_entry_examples():
    assert abs(mat.a_entry("-", 0.9 + 1j, 0, 0)) <= 1e-14
    # a+_{00} = 2 Gamma(2 xi) 2^{-2 xi}; equals 1 exactly on the xi = 1/2 line
    got = mat.a_entry("+", 1.0, 0, 0)
    assert got == pytest.approx(2 * math.gamma(2.0) * 2.0 ** -2, rel=1e-13)
    assert mat.a_entry("+", 0.5 + 0.3j, 0, 0) == pytest.approx(1.0, rel=1e-13)
    got = mat.a_entry("+", 0.6 + 3j, 2, 2)
    ref = mat.m_entry(0.6 + 3j, 2, 2) + oracle.n_entry_quad(0.6 + 3j, 2, 2)
    assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))
    with pytest.raises(ValueError):
        mat.a_entry("x", 0.75, 0, 0)


def _n_entry_lemma_mp(q, k, n, dps=60):
    """Independent extended-precision evaluation of the defining double sum."""
    with mp.workdps(dps):
        qm = mp.mpc(q)
        xi = qm.real
        pre = mp.gamma(n + 2 * xi) * mp.gamma(k + 2 * xi) / mp.mpf(2) ** (k + 2 * xi)
        tot = mp.mpc(0)
        for ell in range(n + 1):
            coef = ((-1) ** ell * mp.gamma(ell + 2 * qm)
                    / (mp.factorial(n - ell) * mp.gamma(ell + 2 * xi)))
            inner = mp.mpc(0)
            for j in range(min(ell, k) + 1):
                term = (mp.mpf(2) ** (-j)
                        / (mp.factorial(j) * mp.factorial(ell - j) * mp.factorial(k - j)
                           * mp.gamma(j + 2 * qm)))
                inner += term * mp.hyp2f1(-(ell - j), 2 * xi + j, 2 * qm + j, mp.mpf(1) / 2)
            tot += coef * inner
        return complex(pre * tot)


def test_n_entry_cancellation_flag_and_high_precision():
    q = 0.5 + 9.5j
    ref = _n_entry_lemma_mp(q, 45, 45)
    with warnings.catch_warnings():
        warnings.simplefilter("error", mat.CancellationWarning)
        with pytest.raises(mat.CancellationWarning):
            mat.n_entry(q, 45, 45)
    got = mat.n_entry(q, 45, 45, high_precision=True)
    assert abs(got - ref) <= 1e-8 * abs(ref)


def test_builder_matches_per_entry_route():
    for q in (0.75 + 0j, 0.6 + 2j, 0.5 + 3j):
        system = mat.build_system(q, 16)
        scale = np.abs(system.a_plus).max()
        for k in (0, 3, 9, 15):
            for n in (0, 4, 10, 15):
                ref_p = mat.a_entry("+", q, k, n)
                ref_m = mat.a_entry("-", q, k, n)
                assert abs(system.a_plus[k, n] - ref_p) <= 1e-10 * scale
                assert abs(system.a_minus[k, n] - ref_m) <= 1e-10 * scale


def test_builder_matches_lemma_mp_midrange():
    # the collapsed route must track the defining double sum where the latter
    # is still computable in extended precision
    q = 0.5 + 9.5337j
    system = mat.build_system(q, 41)
    for (k, n) in [(20, 20), (40, 40), (10, 35), (35, 10)]:
        ref = _n_entry_lemma_mp(q, k, n)
        got = system.a_plus[k, n] - mat.m_entry(q, k, n)
        assert abs(got - ref) <= 1e-8 * max(abs(ref), 1e-12 * np.abs(system.a_plus).max())


def test_build_system_scalar_case():
    system = mat.build_system(0.5 + 0.3j, 1)
    assert system.symmetrized_plus[0, 0] == pytest.approx(1.0, rel=1e-13)


def test_real_q_symmetry():
    system = mat.build_system(0.75, 21)
    for a in (system.a_plus, system.a_minus):
        assert np.max(np.abs(a.imag)) <= 1e-14 * np.max(np.abs(a))
        err = np.abs(a - a.T) / np.maximum(1.0, np.abs(a))
        assert np.max(err) <= 1e-11
    s = mat.build_system(0.75, 8)
    assert np.max(np.abs(s.symmetrized_plus - s.symmetrized_plus.T)) <= 1e-12


def test_conjugation_invariant():
    q = 0.6 + 2j
    a = mat.build_system(q, 12)
    b = mat.build_system(np.conj(q), 12)
    for x, y in ((a.a_plus, b.a_plus), (a.a_minus, b.a_minus), (a.psi, b.psi)):
        assert np.max(np.abs(np.conj(x) - y) / np.maximum(1.0, np.abs(x))) <= 1e-14


def test_psi_degeneracy_at_q_one():
    vals = mat.psi_vector(1.0, 21)
    assert np.max(np.abs(vals)) <= 1e-10
    assert abs(mat.psi_entry(1.0, 0)) <= 1e-10


def test_psi_first_integral_closed_form():
    # at xi = 1: int_{1/2}^1 (1-t)^n dt = 2^{-(n+1)}/(n+1)
    for n in (0, 1, 4):
        assert mat.psi_first_integral_closed(1.0, n) \
            == pytest.approx(2.0 ** -(n + 1) / (n + 1), rel=1e-12)
    # against quadrature for a non-smooth weight exponent
    from farey_spectral import quadrature as quad
    for xi, n in ((0.75, 3), (1.2, 7)):
        rule = quad.gauss_legendre(200, 0.5, 1.0)
        ref = quad.integrate(rule, lambda t: t ** (2 * xi - 2) * (1 - t) ** n)
        assert mat.psi_first_integral_closed(complex(xi), n) == pytest.approx(ref, rel=1e-12)


def test_psi_against_oracle_complex_q():
    q = 0.6 + 2j
    for n in (0, 1, 5):
        got = mat.psi_entry(q, n)
        ref = oracle.psi_quad(q, n)
        assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))


def test_psi_summability_proxy():
    # partial sums of |Psi_n|^2 w_n converge by N = 60
    for q in (0.75 + 0j, 0.6 + 2j):
        system = mat.build_system(q, 60)
        w = mat.d_vector(q, 60)
        partial = np.cumsum(np.abs(system.psi) ** 2 * w)
        assert np.all(np.diff(partial) >= -1e-30)
        assert partial[-1] - partial[49] < 1e-8


def test_truncated_system_fields():
    q = 0.25 + 7.0673626j
    system = mat.build_system(q, 30)
    assert system.order == 30
    assert np.all(system.d > 0)
    for arr in (system.a_plus, system.a_minus, system.symmetrized_plus,
                system.symmetrized_minus, system.psi, system.psi_tilde):
        assert np.all(np.isfinite(arr.view(float)))
    assert system.cancellation_flags.shape == (30, 30)
    assert np.allclose(system.psi_tilde, np.sqrt(system.d) * system.psi)


def test_coefficient_vector_norm():
    basis = mat.build_system(0.75, 6).basis()
    vec = mat.CoefficientVector(np.array([1.0, 0.5, 0.0, 0.0, 0.0, 0.0]), basis)
    want = math.sqrt(basis.weights[0] + 0.25 * basis.weights[1])
    assert vec.weighted_norm() == pytest.approx(want, rel=1e-14)
