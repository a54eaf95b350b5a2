"""Interval-map layer: map identities, continued fractions, pointwise operators."""

import math

import numpy as np
import pytest

from farey_spectral import dynamics as dyn

RNG = np.random.default_rng(415926535)


def test_farey_apply_examples():
    assert dyn.farey_apply(0.4) == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert dyn.farey_apply(0.5) == 1.0
    assert dyn.farey_apply(2.0 / 3.0) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(ValueError):
        dyn.farey_apply(1.2)


def test_farey_inverse_examples():
    assert dyn.farey_inverse(0, 1.0) == pytest.approx(0.5)
    assert dyn.farey_inverse(1, 0.0) == pytest.approx(1.0)
    assert dyn.farey_inverse(1, 1.0) == pytest.approx(0.5)
    for x in RNG.uniform(0, 1, 50):
        assert dyn.farey_apply(dyn.farey_inverse(0, x)) == pytest.approx(x, abs=1e-14)
        assert dyn.farey_apply(dyn.farey_inverse(1, x)) == pytest.approx(x, abs=1e-14)


def test_gauss_apply_examples():
    assert dyn.gauss_apply(0.7) == pytest.approx(3.0 / 7.0, rel=1e-14)
    golden = (math.sqrt(5) - 1) / 2
    assert dyn.gauss_apply(golden) == pytest.approx(golden, abs=1e-14)
    assert dyn.gauss_apply(0.0) == 0.0


def test_return_time_examples_and_orbit_agreement():
    assert dyn.return_time(0.7) == 1
    assert dyn.return_time(0.3) == 3
    assert dyn.return_time(0.0) == math.inf
    for x in RNG.uniform(1e-4, 1, 200):
        assert dyn.return_time(x) == dyn.return_time_by_orbit(x)


def test_jump_identity():
    # G(x) = F^{tau(x)}(x) over 10^3 random points
    worst = 0.0
    for x in RNG.uniform(1e-6, 1, 1000):
        tau = dyn.return_time(x)
        y = x
        for _ in range(int(tau)):
            y = dyn.farey_apply(y)
        worst = max(worst, abs(y - dyn.gauss_apply(x)))
    assert worst <= 1e-9


def test_inverse_branch_identity():
    # psi_n = phi_0^{n-1} o phi_1
    for x in RNG.uniform(0, 1, 50):
        for n in range(1, 21):
            y = dyn.farey_inverse(1, x)
            for _ in range(n - 1):
                y = dyn.farey_inverse(0, y)
            assert abs(y - 1.0 / (n + x)) <= 1e-12


def test_cf_expand():
    cf = dyn.cf_expand(0.7, 10)
    assert (cf.a0, cf.digits, cf.remainder) == (0, (1, 2, 3), None)
    assert cf.value() == pytest.approx(0.7, abs=1e-15)
    cf3 = dyn.cf_expand(1.0 / 3.0, 10)
    assert (cf3.a0, cf3.digits) == (0, (3,))
    golden = (math.sqrt(5) - 1) / 2
    cfg = dyn.cf_expand(golden, 12)
    assert cfg.digits == (1,) * 12 and cfg.remainder is not None
    for x in RNG.uniform(0, 1, 30):
        assert dyn.cf_expand(float(x), 40).value() == pytest.approx(x, abs=1e-12)
    with pytest.raises(ValueError):
        dyn.ContinuedFraction(0, (2, 0, 1))


def test_pointwise_operator_examples():
    # invariant density h(x) = 1/x is fixed by the q=1 transfer operator
    got = dyn.pointwise_operator_apply("Pplus", 1.0, lambda y: 1.0 / y, 0.5)
    assert got == pytest.approx(2.0, rel=1e-14)
    for x in (0.2, 0.5, 0.9):
        got = dyn.pointwise_operator_apply("P0", 1.0, lambda y: 1.0, x)
        assert got == pytest.approx(1.0 / (1.0 + x) ** 2, rel=1e-14)
    # Q sum at x = 0 against the zeta value, within the truncation tail
    got = dyn.pointwise_operator_apply("Q", 1.0, lambda y: 1.0, 0.0, series_cutoff=10 ** 4)
    assert abs(got - math.pi ** 2 / 6) <= 2e-4
    with pytest.raises(ValueError):
        dyn.pointwise_operator_apply("P0", 1.0, lambda y: 1.0 / y, 0.0)


def test_formal_operator_relation():
    # (1 -+ Q_q)(1 - P_{0,q}) f = (1 - P^{+-}_q) f pointwise, xi > 1/2
    q = 0.8 + 0.4j
    cutoff = 10 ** 5
    f = lambda z: complex(z)

    def g(z):   # (1 - P_{0,q}) f
        return f(z) - dyn.pointwise_operator_apply("P0", q, f, z)

    sup_g = max(abs(g(z)) for z in np.linspace(1e-3, 1, 64))
    bound = 3.0 * dyn.q_series_tail_bound(q, cutoff, f_bound=sup_g)
    for z in (0.3, 0.6, 0.9):
        qg = dyn.pointwise_operator_apply("Q", q, g, z, series_cutoff=cutoff)
        for sign in (+1.0, -1.0):
            lhs = g(z) - sign * qg
            rhs = f(z) - dyn.pointwise_operator_apply(
                "Pplus" if sign > 0 else "Pminus", q, f, z)
            assert abs(lhs - rhs) <= bound


def test_q_tail_bound_requires_convergent_regime():
    with pytest.raises(ValueError):
        dyn.q_series_tail_bound(0.4 + 1j, 1000)
