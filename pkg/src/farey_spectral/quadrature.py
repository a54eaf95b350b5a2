"""Deterministic quadrature rules backing the oracle layer.

Gauss-Legendre on finite intervals, generalised Gauss-Laguerre against the
weight t^alpha e^{-t} on the half-line, and composite Legendre rules on
geometrically graded panels for integrands with an algebraic or oscillatory
endpoint at zero (the t^{2q-1} factors with complex q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_genlaguerre

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "weighted_semiinfinite",
    "composite_legendre",
    "geometric_legendre",
    "integrate",
]

DEFAULT_FINITE_NODES = 200
DEFAULT_SEMIINFINITE_NODES = 250


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on (lo, hi); hi may be inf for the weighted rule.

    weight_kind is "plain" for d t rules and "laguerre" for rules against
    t^alpha e^{-t} dt (alpha recorded separately).
    """

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple
    weight_kind: str = "plain"
    alpha: float | None = None

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if n.size != w.size:
            raise ValueError("node and weight counts differ")
        if np.any(np.diff(n) <= 0):
            raise ValueError("nodes must be strictly increasing")
        lo, hi = self.interval
        if n[0] <= lo or (math.isfinite(hi) and n[-1] >= hi):
            raise ValueError("nodes must lie strictly inside the interval")
        object.__setattr__(self, "nodes", n)
        object.__setattr__(self, "weights", w)


def gauss_legendre(n: int, lo: float, hi: float) -> QuadratureRule:
    """n-node Gauss-Legendre rule mapped affinely to (lo, hi)."""
    if n < 1:
        raise ValueError("need at least one node")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("need finite lo < hi")
    x, w = leggauss(n)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return QuadratureRule(mid + half * x, half * w, (lo, hi), "plain")


def weighted_semiinfinite(n: int, alpha: float) -> QuadratureRule:
    """n-node generalised Gauss-Laguerre rule against t^alpha e^{-t} dt."""
    if n < 1:
        raise ValueError("need at least one node")
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    x, w = roots_genlaguerre(n, alpha)
    return QuadratureRule(x, w, (0.0, math.inf), "laguerre", alpha)


def composite_legendre(n_per_panel: int, breakpoints) -> QuadratureRule:
    """Concatenation of Gauss-Legendre panels over consecutive breakpoints."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.size < 2 or np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must be increasing with at least two entries")
    x, w = leggauss(n_per_panel)
    nodes, weights = [], []
    for a, b in zip(bp[:-1], bp[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights),
                          (float(bp[0]), float(bp[-1])), "plain")


def geometric_legendre(n_per_panel: int, lo: float, hi: float, ratio: float = 2.0) -> QuadratureRule:
    """Composite rule on panels graded geometrically toward lo.

    Panels are [hi/ratio^{k+1}, hi/ratio^k] down to lo; suited to integrable
    algebraic singularities and t^{i y} oscillation at the left endpoint
    (phase advance per panel is y * log(ratio), independent of the panel).
    """
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    if ratio <= 1:
        raise ValueError("ratio must exceed 1")
    edges = [hi]
    while edges[-1] / ratio > lo:
        edges.append(edges[-1] / ratio)
    edges.append(lo)
    return composite_legendre(n_per_panel, edges[::-1])


def integrate(rule: QuadratureRule, f):
    """sum_i w_i f(x_i); f is evaluated on the node array in one call.

    Complex-valued integrands are handled transparently.  Raises if f is not
    finite at some node, naming the offending node.
    """
    vals = np.asarray(f(rule.nodes))
    if vals.shape != rule.nodes.shape:
        vals = np.asarray([f(x) for x in rule.nodes])
    bad = ~np.isfinite(vals) if not np.iscomplexobj(vals) else (
        ~np.isfinite(vals.real) | ~np.isfinite(vals.imag))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"integrand not finite at node x = {rule.nodes[i]!r}")
    return vals @ rule.weights
