"""Command-line front door: dump matrices, run scans and refinements, run the
oracle verification suites, and emit machine-readable CSV/JSON.

All numeric output uses 17 significant digits (lossless double round-trip);
files are written atomically (temp file + rename).  Exit codes: 0 success,
1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import matrices, oracle, solver
from .specfun import ConvergenceError

__all__ = ["RunConfig", "parse_args", "run", "main"]

SCAN_HEADER = "re_q,im_q,order,problem,indicator,nearest_eig_re,nearest_eig_im"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    q_re: float = 0.75
    q_im: float = 0.0
    order: int = 20
    operator_sign: str = "both"
    problem: str = "homogeneous-minus"
    im_from: float | None = None
    im_to: float | None = None
    step: float | None = None
    radius: float = 0.05
    tol: float = 1e-4
    axes: str = "im"
    count: int = 10
    orders: tuple = (40, 80, 120)
    suite: str = "all"
    quad_nodes: int | None = None
    high_precision: bool = False
    out_path: str | None = None
    format: str = "csv"
    extra: dict = field(default_factory=dict)


_DEFAULTS = RunConfig(command="")


def _read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"config line without '=': {line!r}")
                key, val = line.split("=", 1)
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    return out


def _coerce(name: str, raw, kind):
    try:
        if kind is bool:
            return raw if isinstance(raw, bool) else raw.lower() in ("1", "true", "yes")
        if kind is tuple:
            if isinstance(raw, tuple):
                return raw
            return tuple(int(p) for p in str(raw).split(",") if p.strip())
        return kind(raw)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for --{name.replace('_', '-')}: {raw!r}")


_FIELD_KINDS = {
    "q_re": float, "q_im": float, "order": int, "operator_sign": str,
    "problem": str, "im_from": float, "im_to": float, "step": float,
    "radius": float, "tol": float, "axes": str, "count": int, "orders": tuple,
    "suite": str, "quad_nodes": int, "high_precision": bool,
    "out_path": str, "format": str,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farey-spectral",
        description="Truncated transfer-operator systems: entries, scans, verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file (flags override it)")
        p.add_argument("--out", dest="out_path", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--high-precision", dest="high_precision", action="store_true",
                       default=None)

    p = sub.add_parser("entries", help="build and dump the truncated system")
    common(p)
    p.add_argument("--re", dest="q_re", type=float)
    p.add_argument("--im", dest="q_im", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--sign", dest="operator_sign", choices=("plus", "minus", "both"))

    p = sub.add_parser("psi", help="inhomogeneous coefficients Psi_n")
    common(p)
    p.add_argument("--re", dest="q_re", type=float)
    p.add_argument("--im", dest="q_im", type=float)
    p.add_argument("--count", type=int)

    p = sub.add_parser("scan", help="indicator scan over a vertical segment")
    common(p)
    p.add_argument("--problem", choices=solver.PROBLEMS)
    p.add_argument("--re", dest="q_re", type=float)
    p.add_argument("--im-from", dest="im_from", type=float)
    p.add_argument("--im-to", dest="im_to", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--order", type=int)

    p = sub.add_parser("refine", help="golden-section descent of the indicator")
    common(p)
    p.add_argument("--problem", choices=solver.PROBLEMS)
    p.add_argument("--re", dest="q_re", type=float)
    p.add_argument("--im", dest="q_im", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--axes", choices=("im", "both"))

    p = sub.add_parser("solve-b", help="inhomogeneous solve diagnostics across orders")
    common(p)
    p.add_argument("--re", dest="q_re", type=float)
    p.add_argument("--im", dest="q_im", type=float)
    p.add_argument("--orders", help="comma-separated increasing truncation orders")

    p = sub.add_parser("verify", help="run an oracle verification suite")
    common(p)
    p.add_argument("--suite", choices=tuple(oracle.VERIFY_SUITES) + ("all",))
    p.add_argument("--quad-nodes", dest="quad_nodes", type=int)
    return parser


def parse_args(argv) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    file_vals = _read_config_file(ns.config) if getattr(ns, "config", None) else {}
    cfg = RunConfig(command=ns.command)
    for name, kind in _FIELD_KINDS.items():
        flag_val = getattr(ns, name, None)
        if flag_val is not None:
            setattr(cfg, name, _coerce(name, flag_val, kind))
        elif name in file_vals:
            setattr(cfg, name, _coerce(name, file_vals[name], kind))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.command in ("entries", "psi", "refine", "solve-b"):
        q = complex(cfg.q_re, cfg.q_im)
        if q.real <= 0:
            raise UsageError(f"--re must be positive (xi > 0), got {cfg.q_re}")
        if abs(q - 0.5) < 1e-12:
            raise UsageError("q = 1/2 violates the standing hypothesis")
    if cfg.command == "scan":
        if cfg.im_from is None or cfg.im_to is None or cfg.step is None:
            raise UsageError("scan requires --im-from, --im-to and --step")
        if cfg.q_re <= 0:
            raise UsageError(f"--re must be positive (xi > 0), got {cfg.q_re}")
        if cfg.step <= 0:
            raise UsageError("--step must be positive")
        if cfg.im_to < cfg.im_from:
            raise UsageError("--im-to must be >= --im-from")
    if cfg.order < 1:
        raise UsageError("--order must be >= 1")
    if cfg.command == "solve-b":
        if len(cfg.orders) < 2 or any(b < a for a, b in zip(cfg.orders, cfg.orders[1:])):
            raise UsageError("--orders must be at least two non-decreasing integers")
    if cfg.format not in ("csv", "json"):
        raise UsageError(f"unknown format {cfg.format!r}")
    return cfg


def _g17(x: float) -> str:
    return f"{float(x):.17g}"


def _write_atomic(out_path: str | None, text: str):
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".farey-spectral-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _complex_pairs(arr) -> list:
    a = np.asarray(arr)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [_complex_pairs(row) for row in a]


def _run_entries(cfg: RunConfig) -> str:
    system = matrices.build_system(complex(cfg.q_re, cfg.q_im), cfg.order,
                                   high_precision=cfg.high_precision)
    doc = {
        "re_q": cfg.q_re, "im_q": cfg.q_im, "order": cfg.order,
        "d": [float(x) for x in system.d],
        "psi": _complex_pairs(system.psi),
        "cancellation_flags": system.cancellation_flags.astype(bool).tolist(),
    }
    if cfg.operator_sign in ("plus", "both"):
        doc["a_plus"] = _complex_pairs(system.a_plus)
        doc["symmetrized_plus"] = _complex_pairs(system.symmetrized_plus)
    if cfg.operator_sign in ("minus", "both"):
        doc["a_minus"] = _complex_pairs(system.a_minus)
        doc["symmetrized_minus"] = _complex_pairs(system.symmetrized_minus)
    return json.dumps(doc) + "\n"


def _run_psi(cfg: RunConfig) -> str:
    vals = matrices.psi_vector(complex(cfg.q_re, cfg.q_im), cfg.count)
    if cfg.format == "json":
        return json.dumps({"re_q": cfg.q_re, "im_q": cfg.q_im,
                           "psi": _complex_pairs(vals)}) + "\n"
    lines = ["n,psi_re,psi_im"]
    lines += [f"{n},{_g17(v.real)},{_g17(v.imag)}" for n, v in enumerate(vals)]
    return "\n".join(lines) + "\n"


def _scan_csv(samples) -> str:
    lines = [SCAN_HEADER]
    for s in samples:
        lines.append(",".join([
            _g17(s.q.real), _g17(s.q.imag), str(s.order), s.problem,
            _g17(s.indicator), _g17(s.nearest_eig.real), _g17(s.nearest_eig.imag)]))
    return "\n".join(lines) + "\n"


def _run_scan(cfg: RunConfig) -> str:
    samples = solver.scan_line(cfg.problem, cfg.q_re, cfg.im_from, cfg.im_to,
                               cfg.step, cfg.order)
    if cfg.format == "json":
        return json.dumps([{
            "re_q": s.q.real, "im_q": s.q.imag, "order": s.order, "problem": s.problem,
            "indicator": s.indicator, "nearest_eig_re": s.nearest_eig.real,
            "nearest_eig_im": s.nearest_eig.imag} for s in samples]) + "\n"
    return _scan_csv(samples)


def _run_refine(cfg: RunConfig) -> str:
    res = solver.refine(cfg.problem, complex(cfg.q_re, cfg.q_im), cfg.radius,
                        cfg.order, cfg.tol, axes=cfg.axes)
    return json.dumps({
        "re_q": res.q.real, "im_q": res.q.imag, "order": cfg.order,
        "problem": cfg.problem, "indicator": res.sample.indicator,
        "nearest_eig_re": res.sample.nearest_eig.real,
        "nearest_eig_im": res.sample.nearest_eig.imag,
        "evaluations": res.evaluations}) + "\n"


def _run_solve_b(cfg: RunConfig) -> str:
    diag = solver.solve_inhomogeneous(complex(cfg.q_re, cfg.q_im), cfg.orders)
    return json.dumps({
        "re_q": diag.q.real, "im_q": diag.q.imag, "orders": list(diag.orders),
        "solution_norms": list(diag.solution_norms),
        "residuals": list(diag.residuals), "ranks": list(diag.ranks),
        "growth_exponent": diag.growth_exponent}) + "\n"


def _run_verify(cfg: RunConfig):
    suites = list(oracle.VERIFY_SUITES) if cfg.suite == "all" else [cfg.suite]
    lines = []
    all_ok = True
    for name in suites:
        fn = oracle.VERIFY_SUITES[name]
        if name == "matrices" and cfg.quad_nodes:
            reports, ok = fn(nodes=cfg.quad_nodes)
        else:
            reports, ok = fn()
        all_ok = all_ok and ok
        lines += [format_line for format_line in map(oracle.format_report, reports)]
        lines.append(f"# suite {name}: {'PASS' if ok else 'FAIL'} ({len(reports)} checks)")
    return "\n".join(lines) + "\n", all_ok


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit code."""
    try:
        if cfg.command == "entries":
            _write_atomic(cfg.out_path, _run_entries(cfg))
        elif cfg.command == "psi":
            _write_atomic(cfg.out_path, _run_psi(cfg))
        elif cfg.command == "scan":
            _write_atomic(cfg.out_path, _run_scan(cfg))
        elif cfg.command == "refine":
            _write_atomic(cfg.out_path, _run_refine(cfg))
        elif cfg.command == "solve-b":
            _write_atomic(cfg.out_path, _run_solve_b(cfg))
        elif cfg.command == "verify":
            text, ok = _run_verify(cfg)
            _write_atomic(cfg.out_path, text)
            return 0 if ok else 1
        else:
            raise UsageError(f"unknown command {cfg.command!r}")
    except (ConvergenceError, solver.NoInteriorMinimumError,
            np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
