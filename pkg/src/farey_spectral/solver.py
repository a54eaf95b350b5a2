"""Eigenvalue-1 detection on the truncated systems.

The detection functional is the smallest singular value of I - A~ (A~ the
symmetrized truncation), computed after a diagonal balancing similarity:
balancing leaves the spectrum untouched, so the bound sigma_min <= |1 - mu|
for every eigenvalue mu survives, while taming the growth of the matrix norm
with Im(q) that would otherwise push the SVD to its roundoff floor.  The
eigenvalue of A~ nearest 1 is recorded alongside.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .matrices import TruncatedSystem, build_system, d_vector
from .specfun import as_parameter, laguerre_table

__all__ = [
    "PROBLEMS",
    "IndicatorSample",
    "InhomogeneousDiagnostic",
    "RefineResult",
    "NoInteriorMinimumError",
    "indicator",
    "scan_line",
    "refine",
    "solve_inhomogeneous",
    "reconstruct_phi",
    "growth_exponent_fit",
]

PROBLEMS = ("homogeneous-plus", "homogeneous-minus", "inhomogeneous")

THREADS_ENV = "FAREY_SPECTRAL_THREADS"

MAX_DENSE_ORDER = 300


class NoInteriorMinimumError(RuntimeError):
    """refine() found no strict interior minimum inside its search disc."""


@dataclass(frozen=True)
class IndicatorSample:
    q: complex
    order: int
    indicator: float
    nearest_eig: complex
    problem: str


@dataclass(frozen=True)
class InhomogeneousDiagnostic:
    q: complex
    orders: tuple
    solution_norms: tuple
    residuals: tuple
    ranks: tuple
    growth_exponent: float


@dataclass(frozen=True)
class RefineResult:
    q: complex
    sample: IndicatorSample
    evaluations: int


def _system_matrix(system: TruncatedSystem, problem: str) -> np.ndarray:
    if problem == "homogeneous-minus":
        return system.symmetrized_minus
    if problem in ("homogeneous-plus", "inhomogeneous"):
        return system.symmetrized_plus
    raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")


def indicator(system: TruncatedSystem, problem: str) -> IndicatorSample:
    """sigma_min(I - A~) (after balancing) and the eigenvalue of A~ nearest 1."""
    if system.order > MAX_DENSE_ORDER:
        raise ValueError(f"dense solver capped at order {MAX_DENSE_ORDER}")
    atil = _system_matrix(system, problem)
    shifted = np.eye(system.order) - atil
    balanced, _ = sla.matrix_balance(shifted)
    sigma = float(np.linalg.svd(balanced, compute_uv=False)[-1])
    eigs = np.linalg.eigvals(atil)
    mu = complex(eigs[int(np.argmin(np.abs(eigs - 1.0)))])
    # sigma_min lower-bounds |1 - mu| over the (balance-invariant) spectrum
    assert sigma <= abs(1.0 - mu) * (1.0 + 1e-8) + 1e-13
    return IndicatorSample(q=complex(system.q.q), order=system.order,
                           indicator=sigma, nearest_eig=mu, problem=problem)


def _scan_point(args) -> IndicatorSample:
    problem, q, order = args
    return indicator(build_system(q, order), problem)


def _worker_count(points: int) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = int(env) if env else 1
    return max(1, min(cap, points))


def scan_line(problem, re_q: float, im_from: float, im_to: float, step: float,
              order: int):
    """One IndicatorSample per grid point on the vertical segment.

    Grid points violating the standing hypothesis (xi <= 0 or q = 1/2) are
    skipped; failures at individual points are recorded and the scan
    continues.  Worker count is capped by FAREY_SPECTRAL_THREADS.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(math.floor((im_to - im_from) / step + 1e-9)) + 1
    grid = [im_from + i * step for i in range(max(count, 1))]
    tasks = []
    for im in grid:
        q = complex(re_q, im)
        if q.real <= 0 or abs(q - 0.5) < 1e-12:
            continue   # outside the standing hypothesis
        tasks.append((problem, q, order))
    workers = _worker_count(len(tasks))
    samples = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for s in pool.map(_scan_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))):
                samples.append(s)
    else:
        for t in tasks:
            samples.append(_scan_point(t))
    return samples


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def refine(problem, q0: complex, radius: float, order: int, tol: float,
           axes: str = "im") -> RefineResult:
    """Golden-section descent of the indicator near q0.

    By default only Im(q) moves (the target sets lie on vertical lines);
    axes="both" alternates golden sections over Im and Re.  Requires a strict
    interior minimum in the bracket, checked against the boundary samples.
    """
    if radius <= 0 or tol <= 0:
        raise ValueError("radius and tol must be positive")
    q0 = complex(q0)
    if tol >= radius:
        return RefineResult(q0, indicator(build_system(q0, order), problem), 1)
    evals = 0

    def f(q: complex) -> float:
        nonlocal evals
        evals += 1
        return indicator(build_system(q, order), problem).indicator

    def golden(lo: float, hi: float, point) -> float:
        a, b = lo, hi
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc, fd = f(point(c)), f(point(d))
        while abs(b - a) > tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _INVPHI * (b - a)
                fc = f(point(c))
            else:
                a, c, fc = c, d, fd
                d = a + _INVPHI * (b - a)
                fd = f(point(d))
        return 0.5 * (a + b)

    axes_list = ("im",) if axes == "im" else ("im", "re", "im")
    center = f(q0)
    lo_val = f(complex(q0.real, q0.imag - radius) if axes == "im"
               else q0 - radius)
    hi_val = f(complex(q0.real, q0.imag + radius) if axes == "im"
               else q0 + radius)
    if not (center < lo_val and center < hi_val):
        raise NoInteriorMinimumError(
            f"indicator has no strict interior minimum around {q0} (radius {radius})")
    q = q0
    for ax in axes_list:
        if ax == "im":
            im = golden(q.imag - radius, q.imag + radius,
                        lambda y: complex(q.real, y))
            q = complex(q.real, im)
        else:
            re = golden(q.real - radius, q.real + radius,
                        lambda x: complex(x, q.imag))
            q = complex(re, q.imag)
    return RefineResult(q, indicator(build_system(q, order), problem), evals)


def growth_exponent_fit(orders, norms) -> float:
    """Least-squares slope of log norm against log order over the last half
    of the orders sequence (zero norms clamp to the floating floor)."""
    k = len(orders) // 2
    x = np.log(np.asarray(orders[k:], dtype=float))
    y = np.log(np.maximum(np.asarray(norms[k:], dtype=float), 1e-300))
    if x.size < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def solve_inhomogeneous(q, orders) -> InhomogeneousDiagnostic:
    """Least-squares solves of (A~+ - I) x = Psi~ across truncation orders.

    Records solution norms, residuals, and ranks; the fitted growth exponent
    of the norms is the solvability surrogate (stabilising norms signal a
    norm-convergent solution, divergence signals none).
    """
    orders = tuple(int(n) for n in orders)
    if any(b < a for a, b in zip(orders, orders[1:])):
        raise ValueError("orders must be non-decreasing")
    sp = as_parameter(q)
    norms, residuals, ranks = [], [], []
    for order in orders:
        system = build_system(sp, order)
        mat = system.symmetrized_plus - np.eye(order)
        sol, _, rank, _ = np.linalg.lstsq(mat, system.psi_tilde, rcond=None)
        norms.append(float(np.linalg.norm(sol)))
        residuals.append(float(np.linalg.norm(mat @ sol - system.psi_tilde)))
        ranks.append(int(rank))
    return InhomogeneousDiagnostic(
        q=complex(sp.q), orders=orders, solution_norms=tuple(norms),
        residuals=tuple(residuals), ranks=tuple(ranks),
        growth_exponent=growth_exponent_fit(orders, norms),
    )


def reconstruct_phi(system: TruncatedSystem, phi_tilde, t_samples) -> np.ndarray:
    """Pointwise values of phi(t) = sum_n Phi_n L_n^{2 xi - 1}(t) with
    Phi = D^{-1/2} Phi~ (phi_tilde may be a CoefficientVector or an array)."""
    coeffs = np.asarray(getattr(phi_tilde, "coeffs", phi_tilde), dtype=complex)
    if coeffs.size > system.order:
        raise ValueError("coefficient vector longer than the system order")
    t = np.asarray(t_samples, dtype=float)
    if np.any(t < 0):
        raise ValueError("t samples must be >= 0")
    d = d_vector(system.q, coeffs.size)
    phi = coeffs / np.sqrt(d)
    table = laguerre_table(coeffs.size, 2 * system.q.xi - 1, t)
    return phi @ table
