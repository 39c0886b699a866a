"""Command-line front end.

Subcommands: forward, inverse, gamma, verify, table.  Every numeric result
carries the method that produced it and an achieved-tolerance estimate.

Exit codes: 0 ok, 2 bad flags or request, 3 unstable input, 4 no
convergence, 5 infeasible data, 6 root bracketing or positive definiteness
failure, 7 a verify check failed.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import scipy.special

from . import __version__, closedform, oracle, quadrature, series, solver, specfun
from .errors import (ArfiltError, DomainError, Infeasible, NoBracket, NonConvergent,
                     NotPositiveDefinite, ResourceLimit, Underdetermined, UnstableInput)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSTABLE = 3
EXIT_NONCONVERGENT = 4
EXIT_INFEASIBLE = 5
EXIT_SOLVER = 6
EXIT_VERIFY = 7

EPS = float(np.finfo(float).eps)


class UsageError(Exception):
    pass


@dataclass
class Entry:
    index: Any
    value: Any
    method: str
    tol_achieved: float | None


@dataclass
class RunReport:
    command: str
    params: dict
    results: list[Entry] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "params": _jsonable(self.params),
            "results": [_jsonable(vars(e)) for e in self.results],
            "diagnostics": _jsonable(self.diagnostics),
            "version": __version__,
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x.imag == 0:
            return _jsonable(x.real)
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _fmt_number(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        if v.imag == 0:
            return repr(float(v.real))
        return f"{v.real!r}{v.imag:+.17g}j"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _fmt_index(idx) -> str:
    if isinstance(idx, (tuple, list)):
        return "c[" + ",".join(str(k) for k in idx) + "]"
    return str(idx)


def render_text(report: RunReport) -> str:
    lines = []
    for e in report.results:
        tol = "" if e.tol_achieved is None else f", tol {e.tol_achieved:.1e}"
        lines.append(f"{_fmt_index(e.index)} = {_fmt_number(e.value)}  ({e.method}{tol})")
    return "\n".join(lines) + "\n"


def render_json(report: RunReport) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=False) + "\n"


def render_csv(report: RunReport, d: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"k{i + 1}" for i in range(d)] + ["value", "method"])
    for e in report.results:
        w.writerow(list(e.index) + [_fmt_number(e.value), e.method])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# forward

def _parse_index(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"index must be comma-separated integers, got {text!r}")


def _slope(args) -> complex:
    if args.r is not None:
        if args.r == 0:
            raise UsageError("--r must be nonzero")
        return complex(1 / args.r)
    return complex(args.s)


def _phase_factor(s: complex, k: Sequence[int]) -> complex:
    # c_k(|s| e^{i theta}) = e^{i theta (K+ - K-)} c_k(|s|)
    if s.imag == 0:
        return 1.0 if s.real >= 0 or sum(k) % 2 == 0 else -1.0
    return cmath.exp(1j * cmath.phase(s) * sum(k))


def _as_value(v: complex):
    v = complex(v)
    return v.real if v.imag == 0 else v


class ForwardEvaluator:
    """Evaluates coefficients for one (d, s), caching the d = 3 tables."""

    def __init__(self, d: int, s: complex, tol: float):
        if not d * abs(s) < 1:
            raise UnstableInput(f"d|s| = {d * abs(s)} >= 1: polynomial is not stable")
        self.d, self.s, self.tol = d, s, tol
        self._table: closedform.CoeffTable3 | None = None
        self._shell = 0

    def table(self, shell: int) -> closedform.CoeffTable3:
        r = 1 / abs(self.s)
        if self._table is None:
            self._table = closedform.coeffs_d3_unitcube(r)
            self._shell = 1
        if shell > self._shell:
            self._table = closedform.recurrence_extend(self._table, r, shell)
            self._shell = shell
        return self._table

    def closed(self, k: tuple[int, ...]) -> Entry:
        d, s = self.d, self.s
        if s == 0 or d not in (2, 3):
            raise Underdetermined(f"no closed form for d={d} at s={s}")
        r = 1 / abs(s)
        ph = _phase_factor(s, k)
        if d == 2:
            return Entry(k, _as_value(ph * closedform.coeff_d2(r, *k, tol=self.tol)),
                         "closedform", self.tol)
        shell = max(abs(x) for x in k)
        table = self.table(max(1, shell))
        value = closedform.lookup_d3(table, k)
        method = table.method(k)
        err = self.tol if method != "recurrence" else max(self.tol, EPS * r ** shell)
        return Entry(k, _as_value(ph * value), method, err)

    def series(self, k: tuple[int, ...]) -> Entry:
        info: dict = {}
        v = series.fourier_coeff_series(series.SeriesParams(self.d, self.s, tol=self.tol), k, info)
        tail, total = info.get("tail", 0.0), info.get("sum", 0.0)
        rel = tail / total if total else tail
        return Entry(k, _as_value(v), "series", max(rel, EPS) if math.isfinite(rel) else None)

    def quadrature(self, k: tuple[int, ...]) -> Entry:
        d, s = self.d, self.s
        ph = _phase_factor(s, k)
        if d >= 3 and not any(k):
            res = quadrature.c0_general_d_adaptive(d, abs(s), tol=self.tol)
            return Entry(k, res.value, "quadrature", res.change)
        if d == 3 and s != 0:
            key = closedform.orbit_key(k)
            forms = {closedform.orbit_key((1, 0, 0)): closedform.c100_integral,
                     closedform.orbit_key((0, 1, 1)): closedform.c011_integral,
                     closedform.orbit_key((-1, 1, 0)): closedform.cm110_integral}
            if key in forms:
                r = 1 / abs(s)
                fine, coarse = forms[key](r, 512), forms[key](r, 256)
                return Entry(k, _as_value(ph * fine), "quadrature", abs(fine - coarse))
        raise Underdetermined(f"no quadrature form for index {k} at d={d}")

    def evaluate(self, k: tuple[int, ...], method: str) -> Entry:
        if len(k) != self.d:
            raise UsageError(f"index {k} does not have {self.d} components")
        if method == "series":
            return self.series(k)
        if method == "closedform":
            return self.closed(k)
        if method == "quadrature":
            return self.quadrature(k)
        try:
            return self.closed(k)
        except Underdetermined:
            return self.series(k)


def cmd_forward(args) -> tuple[RunReport, int]:
    s = _slope(args)
    indices = args.index or [(0,) * args.dim]
    report = RunReport("forward", {"dim": args.dim, "s": s, "method": args.method,
                                   "tol": args.tol, "index": indices})
    ev = ForwardEvaluator(args.dim, s, args.tol)
    for k in indices:
        report.results.append(ev.evaluate(tuple(k), args.method))
    return report, EXIT_OK


# inverse

def cmd_inverse(args) -> tuple[RunReport, int]:
    if args.b < 0:
        raise UsageError("--b is a modulus and must be >= 0; use --b-phase for the argument")
    if not args.a > 0:
        raise UsageError("--a must be positive")
    b = args.b * cmath.exp(1j * args.b_phase) if args.b_phase else complex(args.b)
    data = solver.CovarianceData(args.dim, args.a, b)
    report = RunReport("inverse", {"dim": args.dim, "a": args.a, "b": args.b,
                                   "b_phase": args.b_phase, "tol": args.tol,
                                   "method": args.method})
    res = solver.solve(data, args.tol, args.method)
    method = res.diagnostics.get("method", "exact")
    fwd = max(res.residuals["forward_a"], res.residuals["forward_b"])
    report.results = [
        Entry("c", res.c, method, res.residuals.get("c_equation")),
        Entry("s", _as_value(res.s), method, fwd),
        Entry("p0", res.p0, "inverse-column", res.residuals["moment"]),
        Entry("p1", _as_value(res.p1), "inverse-column", res.residuals["moment"]),
        Entry("pd_min_eigenvalue", res.pd.min_eigenvalue, "eigvalsh", None),
        Entry("stability_margin", res.stability_margin, "inverse-column", None),
    ]
    diag = {k: v for k, v in res.diagnostics.items() if k not in ("brackets", "roots")}
    diag["roots"] = res.diagnostics.get("roots", [res.c])
    diag["residuals"] = res.residuals
    diag["cholesky_ok"] = res.pd.cholesky_ok
    diag["residuals_ok"] = res.residuals_ok(args.tol)
    report.diagnostics = diag
    return report, EXIT_OK if diag["residuals_ok"] else EXIT_NONCONVERGENT


# gamma

def cmd_gamma(args) -> tuple[RunReport, int]:
    report = RunReport("gamma", {"dim": args.dim, "tol": args.tol})
    name = f"gamma_{args.dim}"
    if args.dim <= 3:
        report.results.append(Entry(name, None, "infinite", None))
        report.diagnostics["note"] = "infinite (d <= 3)"
        return report, EXIT_OK
    est = series.gamma_d_estimate(args.dim, args.tol)
    report.results.append(Entry(name, est.value, "series+tail", est.bound))
    report.diagnostics.update(terms=est.n_terms, bound=est.bound,
                              threshold_ratio=1 - 1 / est.value)
    if est.bound > args.tol:
        raise NonConvergent(f"gamma_{args.dim} error bound {est.bound:.2e} above tol {args.tol}")
    return report, EXIT_OK


def render_gamma_text(report: RunReport) -> str:
    e = report.results[0]
    if e.value is None:
        return f"{e.index} = infinite (d <= 3)\n"
    return f"{e.index} = {e.value!r}  (bound {e.tol_achieved:.1e})\n"


# verify

@dataclass
class Check:
    name: str
    residual: float
    threshold: float
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return self.skipped or self.residual <= self.threshold


def _rel(x, y) -> float:
    return abs(x - y) / max(abs(y), 1e-300)


def _r_samples(args) -> np.ndarray:
    if not 3 < args.rmin <= args.rmax:
        raise UsageError("need 3 < rmin <= rmax")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    return np.geomspace(args.rmin, args.rmax, args.samples)


def suite_specfun(args) -> list[Check]:
    out = []
    for r in _r_samples(args):
        m = closedform.elliptic_parameter(r)
        n = 4 / (r - 1) ** 2
        z = closedform.hypergeometric_argument(r)
        out.append(Check(f"ellip_K r={r:.4g}", _rel(specfun.ellip_K(m), scipy.special.ellipk(m)),
                         1e-12))
        out.append(Check(f"ellip_E r={r:.4g}", _rel(specfun.ellip_E(m), scipy.special.ellipe(m)),
                         1e-12))
        ref_pi = (scipy.special.elliprf(0, 1 - m, 1)
                  + n / 3 * scipy.special.elliprj(0, 1 - m, 1, 1 - n))
        out.append(Check(f"ellip_Pi r={r:.4g}", _rel(specfun.ellip_Pi(n, m), ref_pi), 1e-12))
        ref_h = scipy.special.hyp2f1(1 / 3, 2 / 3, 1, z)
        out.append(Check(f"hyp2f1 r={r:.4g}",
                         _rel(specfun.hyp2f1(1 / 3, 2 / 3, 1, z), ref_h), 1e-10))
    return out


def suite_identities(args) -> list[Check]:
    out = []
    for r in _r_samples(args):
        lim = 1e-8 if r < 3.2 else 1e-10
        out.append(Check(f"twin hypergeom r={r:.4g}", abs(closedform.twin_hypergeom_residual(r)), lim))
        out.append(Check(f"c000 elliptic/hypergeom r={r:.4g}",
                         _rel(closedform.c000_elliptic(r), closedform.c000_hypergeom(r)), 1e-9))
        out.append(Check(f"c011 forms r={r:.4g}",
                         abs(closedform.c011_first_form(r) - closedform.c011_second_form(r)),
                         lim))
        table = closedform.coeffs_d3_unitcube(r)
        for key, form in (((1, 0, 0), closedform.c100_integral),
                          ((0, 1, 1), closedform.c011_integral),
                          ((-1, 1, 0), closedform.cm110_integral)):
            out.append(Check(f"integral form c{key} r={r:.4g}",
                             abs(table[key] - form(r, 512)), 1e-9))
    return out


def suite_inverses(args) -> list[Check]:
    rng = np.random.default_rng(args.seed)
    out = []
    for s in (0.1, 0.3):
        for t in rng.uniform(0, 2 * np.pi, args.samples):
            w = complex(np.exp(1j * t))
            ref = oracle.autocorr_slice_coeffs(s, w)
            got = quadrature.slice_coeffs(s, w)
            err4 = max(abs(got[k] - ref[k]) for k in got)
            m3 = quadrature.coeff_matrix_slice_3(s, w)
            exp3 = np.array([[ref[(0, 0)], ref[(0, -1)], ref[(-1, 0)]],
                             [ref[(0, 1)], ref[(0, 0)], ref[(-1, 1)]],
                             [ref[(1, 0)], ref[(1, -1)], ref[(0, 0)]]])
            err3 = float(np.max(np.abs(m3 - exp3)))
            herm = float(np.max(np.abs(m3 - m3.conj().T)))
            lam = float(np.linalg.eigvalsh((m3 + m3.conj().T) / 2)[0])
            corner = abs(quadrature.slice_inverse_4(s, w)[3, 0])
            tag = f"s={s} t={t:.4f}"
            out += [Check(f"slice 4x4 {tag}", err4, 1e-9),
                    Check(f"slice 3x3 {tag}", err3, 1e-9),
                    Check(f"slice 3x3 hermitian pd {tag}", herm if lam > 0 else math.inf, 1e-12),
                    Check(f"slice 4x4 corner zero {tag}", corner, 0.0)]
    return out


def _fft_points(d: int, r: float, target: float = 1e-12) -> int:
    # decay rate of the coefficients along one axis is log(r - d + 1)
    rate = math.log(r - d + 1)
    n = 16
    while math.exp(-rate * n / 2) > target:
        n *= 2
    return n


def suite_oracle(args) -> list[Check]:
    out = []
    for r in _r_samples(args):
        n3 = _fft_points(3, r)
        if n3 > args.grid or n3 ** 3 > oracle.MEMORY_BUDGET:
            out.append(Check(f"fft d=3 r={r:.4g} (needs N={n3})", 0.0, 0.0, skipped=True))
        else:
            grid = oracle.fft_coeffs(3, 1 / r, n3)
            table = closedform.coeffs_d3_unitcube(r)
            err = max(abs(grid.value(J) - table[J])
                      for J in itertools.product((-1, 0, 1), repeat=3))
            out.append(Check(f"fft d=3 r={r:.4g} N={n3}", err, 2e-8))
        n2 = _fft_points(2, r)
        grid2 = oracle.fft_coeffs(2, 1 / r, max(n2, 64))
        err2 = max(abs(grid2.value((k1, k2)) - closedform.coeff_d2(r, k1, k2))
                   for k1 in range(-3, 4) for k2 in range(-3, 4))
        out.append(Check(f"fft d=2 r={r:.4g} N={max(n2, 64)}", err2, 2e-9))
    return out


def suite_roundtrip(args) -> list[Check]:
    out = []
    cases = [(d, s) for d in (2, 3) for s in np.linspace(0.9 / d / args.samples, 0.9 / d,
                                                         args.samples)]
    cases += [(4, 0.05), (4, 0.2)]
    for d, s in cases:
        a, b, _ = series.forward_abc(series.SeriesParams(d, float(s)))
        res = solver.solve(solver.CovarianceData(d, a, b))
        lim = 1e-8 if d <= 3 else 1e-6
        ok = res.pd.positive_definite
        out.append(Check(f"roundtrip d={d} s={s:.4g}",
                         abs(res.s - s) / s if ok else math.inf, lim))
    return out


SUITES: dict[str, Callable] = {
    "specfun": suite_specfun,
    "identities": suite_identities,
    "inverses": suite_inverses,
    "oracle": suite_oracle,
    "roundtrip": suite_roundtrip,
}


def cmd_verify(args) -> tuple[RunReport, int]:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    report = RunReport("verify", {"suite": args.suite, "rmin": args.rmin, "rmax": args.rmax,
                                  "samples": args.samples, "grid": args.grid, "seed": args.seed})
    failed, skipped = [], []
    for name in names:
        for chk in SUITES[name](args):
            label = f"{name}: {chk.name}"
            report.results.append(Entry(label, chk.residual, name, chk.threshold))
            if chk.skipped:
                skipped.append(label)
            elif not chk.passed:
                failed.append(label)
    report.diagnostics.update(checks=len(report.results), failed=failed, skipped=skipped)
    return report, EXIT_VERIFY if failed else EXIT_OK


def render_verify_text(report: RunReport) -> str:
    failed = set(report.diagnostics["failed"])
    skipped = set(report.diagnostics["skipped"])
    lines = []
    for e in report.results:
        status = "SKIP" if e.index in skipped else "FAIL" if e.index in failed else "PASS"
        lines.append(f"{status}  {e.index}  residual={e.value:.3e}  limit={e.tol_achieved:.1e}")
    n_fail = len(failed)
    lines.append(f"{len(report.results) - n_fail - len(skipped)} passed, {n_fail} failed, "
                 f"{len(skipped)} skipped")
    return "\n".join(lines) + "\n"


# table

def cmd_table(args) -> tuple[RunReport, int]:
    if args.dim not in (2, 3):
        raise UsageError("table supports --dim 2 or 3")
    if not args.r > args.dim:
        raise UnstableInput(f"need r > {args.dim}, got r={args.r}")
    if args.kmax < 0:
        raise UsageError("--kmax must be >= 0")
    report = RunReport("table", {"dim": args.dim, "r": args.r, "kmax": args.kmax})
    rng = range(-args.kmax, args.kmax + 1)
    ev = ForwardEvaluator(args.dim, complex(1 / args.r), args.tol)
    unresolved = []
    for k in itertools.product(*([rng] * args.dim)):
        try:
            report.results.append(ev.closed(k))
        except Underdetermined:
            unresolved.append(list(k))
    report.diagnostics["unresolved"] = unresolved
    return report, EXIT_OK


# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the output to this file instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="add wall time to the diagnostics (output no longer repeatable)")

    p = argparse.ArgumentParser(prog="arfilt", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"arfilt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", parents=[common], help="Fourier coefficients of 1/|p|^2")
    f.add_argument("--dim", type=int, required=True)
    g = f.add_mutually_exclusive_group(required=True)
    g.add_argument("--s", type=float)
    g.add_argument("--r", type=float, help="shorthand for --s 1/r")
    f.add_argument("--index", type=_parse_index, action="append",
                   help="comma-separated multi-index, repeatable (default: zero)")
    f.add_argument("--method", choices=("auto", "series", "closedform", "quadrature"),
                   default="auto")
    f.add_argument("--tol", type=float, default=1e-14)
    fmt = f.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")

    i = sub.add_parser("inverse", parents=[common], help="recover p from a = c_0 and b = c_e1")
    i.add_argument("--dim", type=int, required=True)
    i.add_argument("--a", type=float, required=True)
    i.add_argument("--b", type=float, required=True, help="modulus of b")
    i.add_argument("--b-phase", type=float, default=0.0, help="argument of b in radians")
    i.add_argument("--tol", type=float, default=1e-12)
    i.add_argument("--method", choices=("auto", "hypergeom", "quadrature", "series"),
                   default="auto")
    i.add_argument("--json", action="store_true")

    gm = sub.add_parser("gamma", parents=[common], help="sup of c_0 over stable s")
    gm.add_argument("--dim", type=int, required=True)
    gm.add_argument("--tol", type=float, default=1e-10)
    gm.add_argument("--json", action="store_true")

    v = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    v.add_argument("--suite", choices=tuple(SUITES) + ("all",), default="all")
    v.add_argument("--rmin", type=float, default=3.1)
    v.add_argument("--rmax", type=float, default=100.0)
    v.add_argument("--samples", type=int, default=8)
    v.add_argument("--grid", type=int, default=256, help="largest FFT size for the oracle suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--json", action="store_true")

    t = sub.add_parser("table", parents=[common], help="export a box of coefficients")
    t.add_argument("--dim", type=int, required=True)
    t.add_argument("--r", type=float, required=True)
    t.add_argument("--kmax", type=int, default=1)
    t.add_argument("--tol", type=float, default=1e-15)
    t.add_argument("--format", choices=("csv", "json", "text"), default="csv")
    return p


COMMANDS = {"forward": cmd_forward, "inverse": cmd_inverse, "gamma": cmd_gamma,
            "verify": cmd_verify, "table": cmd_table}


def _render(args, report: RunReport) -> str:
    fmt = getattr(args, "format", None) or (
        "json" if getattr(args, "json", False) else "csv" if getattr(args, "csv", False)
        else "text")
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(report, args.dim)
    if args.command == "gamma":
        return render_gamma_text(report)
    if args.command == "verify":
        return render_verify_text(report)
    return render_text(report)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, UnstableInput):
        return EXIT_UNSTABLE
    if isinstance(exc, Infeasible):
        return EXIT_INFEASIBLE
    if isinstance(exc, (NonConvergent, ResourceLimit)):
        return EXIT_NONCONVERGENT
    if isinstance(exc, (NoBracket, NotPositiveDefinite)):
        return EXIT_SOLVER
    if isinstance(exc, (UsageError, DomainError, Underdetermined, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, ArfiltError):
        return EXIT_SOLVER
    raise exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except (ArfiltError, UsageError, ValueError) as exc:
        code = exit_code_for(exc)
        print(f"arfilt {args.command}: error: {exc}", file=sys.stderr)
        return code
    if args.timing:
        report.diagnostics["wall_time"] = time.perf_counter() - start
    _emit(_render(args, report), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
