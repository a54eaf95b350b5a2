"""Laguerre-basis truncations of the signed Farey-map transfer operators at
complex temperature: oracle-validated matrix entries, inhomogeneous terms,
and eigenvalue-1 scans over the complex parameter plane."""

from .specfun import LaguerreBasis, SpectralParameter
from .matrices import TruncatedSystem, build_system
from .solver import IndicatorSample, indicator, refine, scan_line, solve_inhomogeneous

__all__ = [
    "SpectralParameter",
    "LaguerreBasis",
    "TruncatedSystem",
    "build_system",
    "IndicatorSample",
    "indicator",
    "scan_line",
    "refine",
    "solve_inhomogeneous",
]

__version__ = "0.1.0"
