"""Detection layer: indicator contracts, scans, refine, inhomogeneous solves."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg as sla

from farey_spectral import matrices as mat
from farey_spectral import solver
from farey_spectral.quadrature import composite_legendre
from farey_spectral.specfun import bessel_j_reduced

ODD_MAASS_R1 = 9.5336952613


def test_indicator_contract_and_determinism():
    system = mat.build_system(0.6 + 2j, 24)
    s1 = solver.indicator(system, "homogeneous-minus")
    s2 = solver.indicator(mat.build_system(0.6 + 2j, 24), "homogeneous-minus")
    assert s1 == s2
    assert s1.indicator >= 0.0
    assert s1.indicator <= abs(1.0 - s1.nearest_eig) + 1e-12
    assert s1.problem == "homogeneous-minus"
    with pytest.raises(ValueError):
        solver.indicator(system, "nonsense")


def test_indicator_eig_bound_across_problems():
    system = mat.build_system(0.5 + 3j, 30)
    for problem in solver.PROBLEMS:
        s = solver.indicator(system, problem)
        assert s.indicator <= abs(1.0 - s.nearest_eig) * (1 + 1e-8) + 1e-13


def test_scan_degenerate_single_point():
    samples = solver.scan_line("homogeneous-minus", 0.5, 9.5, 9.5, 0.02, 20)
    assert len(samples) == 1
    direct = solver.indicator(mat.build_system(0.5 + 9.5j, 20), "homogeneous-minus")
    assert samples[0] == direct


def test_scan_skips_excluded_parameter():
    # the grid point q = 1/2 violates the standing hypothesis and is dropped
    samples = solver.scan_line("homogeneous-plus", 0.5, -0.02, 0.02, 0.02, 8)
    assert len(samples) == 2
    assert all(abs(s.q - 0.5) > 1e-12 for s in samples)


def test_scan_conjugation_mirror():
    up = solver.scan_line("homogeneous-minus", 0.5, 9.50, 9.54, 0.02, 24)
    down = solver.scan_line("homogeneous-minus", 0.5, -9.54, -9.50, 0.02, 24)
    for s_up, s_down in zip(up, reversed(down)):
        assert s_down.q == s_up.q.conjugate()
        assert s_down.indicator == pytest.approx(s_up.indicator, rel=1e-9, abs=1e-14)
        assert s_down.nearest_eig == pytest.approx(s_up.nearest_eig.conjugate(), rel=1e-9)


def test_scan_worker_pool_matches_serial(tmp_path):
    serial = solver.scan_line("homogeneous-minus", 0.5, 9.5, 9.54, 0.02, 16)
    env = dict(os.environ, FAREY_SPECTRAL_THREADS="2")
    code = (
        "import json, sys\n"
        "from farey_spectral import solver\n"
        "s = solver.scan_line('homogeneous-minus', 0.5, 9.5, 9.54, 0.02, 16)\n"
        "print(json.dumps([[x.q.imag, x.indicator] for x in s]))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    import json
    rows = json.loads(out.stdout.strip().splitlines()[-1])
    assert len(rows) == len(serial)
    for (im, ind), s in zip(rows, serial):
        assert im == pytest.approx(s.q.imag, abs=1e-12)
        assert ind == pytest.approx(s.indicator, rel=1e-9, abs=1e-15)


def test_refine_degenerate_tolerance():
    res = solver.refine("homogeneous-minus", 0.5 + 9.5337j, 0.01, 20, 0.02)
    assert res.q == 0.5 + 9.5337j


def test_refine_requires_interior_minimum():
    # indicator is monotone along this stretch (probed), so no strict dip
    with pytest.raises(solver.NoInteriorMinimumError):
        solver.refine("homogeneous-minus", 0.5 + 5.02j, 0.02, 30, 1e-3)


def test_refine_localises_odd_maass_point():
    res = solver.refine("homogeneous-minus", 0.5 + 9.5337j, 0.03, 80, 1e-4)
    assert abs(res.q.imag - ODD_MAASS_R1) <= 5e-3
    assert res.q.real == 0.5


def test_solve_inhomogeneous_q_one_and_determinism():
    diag = solver.solve_inhomogeneous(1.0, [10, 20, 30])
    assert max(diag.solution_norms) <= 1e-12
    rep = solver.solve_inhomogeneous(0.75, [15, 15])
    assert rep.solution_norms[0] == rep.solution_norms[1]
    assert rep.residuals[0] == rep.residuals[1]
    assert all(r == 15 for r in rep.ranks)
    with pytest.raises(ValueError):
        solver.solve_inhomogeneous(0.75, [20, 10])


def test_growth_exponent_fit():
    orders = [10, 20, 40, 80]
    norms = [float(n) ** 2 for n in orders]
    assert solver.growth_exponent_fit(orders, norms) == pytest.approx(2.0, rel=1e-12)
    assert solver.growth_exponent_fit([7], [3.0]) == 0.0


def test_reconstruct_phi_basic():
    system = mat.build_system(0.75, 6)
    e0 = np.zeros(6, dtype=complex)
    e0[0] = 1.0
    t = np.array([0.0, 0.7, 3.0])
    got = solver.reconstruct_phi(system, e0, t)
    want = 1.0 / math.sqrt(system.d[0])
    assert np.allclose(got, want, rtol=1e-13)
    assert np.allclose(solver.reconstruct_phi(system, np.zeros(6), t), 0.0)
    vec = mat.CoefficientVector(e0, system.basis())
    assert np.allclose(solver.reconstruct_phi(system, vec, t), want, rtol=1e-13)


def test_reconstructed_eigenfunction_residual():
    # eigenvector at the first odd Maass point; apply M - N_q by quadrature
    q = complex(0.5, ODD_MAASS_R1)
    order = 100
    system = mat.build_system(q, order)
    eigvals, eigvecs = sla.eig(system.symmetrized_minus)
    idx = int(np.argmin(np.abs(eigvals - 1.0)))
    phi_tilde = eigvecs[:, idx]
    phi_tilde = phi_tilde / np.linalg.norm(phi_tilde)

    bp = np.concatenate([2.0 ** -np.arange(40, 0, -1), np.arange(1.0, 120.1, 2.5)])
    rule = composite_legendre(24, bp)
    s = rule.nodes
    phi_s = solver.reconstruct_phi(system, phi_tilde, s)
    meas = rule.weights * np.exp((2 * q - 1) * np.log(s) - s)
    for t in (0.5, 1.0, 2.0):
        kern = np.array([bessel_j_reduced(2 * q - 1, si * t) for si in s])
        n_phi = np.sum(kern * phi_s * meas)
        phi_t = complex(solver.reconstruct_phi(system, phi_tilde, np.array([t]))[0])
        residual = abs(math.exp(-t) * phi_t - n_phi - phi_t)
        assert residual <= 1e-4
