"""Inverse problem: recover p = p0 + p1 (z_1 + ... + z_d) from a = c_0 and b = c_{e1}.

Pipeline: feasibility test against (1 - 1/gamma_d) a, root of the scalar
equation for the unknown coefficient c = c_{e1 - e2}, positive definiteness
of the (d+1) x (d+1) moment matrix, and read-off of p from the first column
of its inverse.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import closedform, quadrature, series, specfun
from .errors import (ArfiltError, DomainError, Infeasible, NoBracket, NonConvergent,
                     NotPositiveDefinite, SingularSystem)

log = logging.getLogger(__name__)

HYPERGEOM_MAX_ARGUMENT = 0.999
PD_TOL = 1e-12
MOMENT_TOL = 1e-9
SCAN_EXPONENTS = range(-20, 21)
BOUNDARY_EXPONENTS = range(-40, 21)
SCAN_POINTS_CAP = 512  # quadrature cap while scanning for brackets (d >= 4)


@dataclass(frozen=True)
class CovarianceData:
    d: int
    a: float
    b: complex

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"need d >= 2, got d={self.d}")
        if not self.a > 0:
            raise ValueError(f"need a > 0, got a={self.a}")

    @property
    def babs(self) -> float:
        return abs(self.b)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    threshold: float


def feasibility(data: CovarianceData, tol: float = 1e-12) -> Feasibility:
    """Feasible iff |b| < (1 - 1/gamma_d) a, with a safety margin of tol * a."""
    g = series.gamma_d(data.d, tol=min(1e-10, tol)) if data.d >= 4 else math.inf
    threshold = (1 - 1 / g) * data.a
    return Feasibility(data.babs < threshold - tol * data.a, threshold)


def _denominator(data: CovarianceData, c: float) -> float:
    d, a = data.d, data.a
    return a * a + (d - 1) * a * c - d * data.babs ** 2


def c_equation_lhs(data: CovarianceData, c: float) -> float:
    """a (a + (d-1) c) / (a^2 + (d-1) a c - d |b|^2): c_0 of the normalized polynomial."""
    den = _denominator(data, c)
    if den <= 0:
        raise DomainError(f"a^2 + (d-1)ac - d|b|^2 = {den} <= 0 at c={c}")
    return data.a * (data.a + (data.d - 1) * c) / den


def slope_modulus(data: CovarianceData, c: float) -> float:
    """|s| = |b| / (a + (d-1) c) of the normalized polynomial."""
    return data.babs / (data.a + (data.d - 1) * c)


def rhs_hypergeom_argument(data: CovarianceData, c: float) -> float:
    q = (data.a + 2 * c) ** 2
    b2 = data.babs ** 2
    return 27 * b2 * b2 * (q - b2) / (q - 3 * b2) ** 3


def c_equation_rhs(data: CovarianceData, c: float, method: str = "auto", tol: float = 1e-13,
               n_cap: int = quadrature.MAX_POINTS) -> tuple[float, str]:
    """Right-hand side of the equation for c, and the method that produced it.

    ``method`` is one of auto, hypergeom (d = 3 only), quadrature, series.
    auto uses the 2F1 form for d = 3 while its argument is <= 0.999 and the
    torus integral otherwise; for d = 3 the elliptic form of c_0 at r = 1/|s|
    takes over where the torus integral does not converge.
    """
    d, a, babs = data.d, data.a, data.babs
    if c < 0:
        raise DomainError(f"c must be >= 0, got {c}")
    if babs == 0:
        return 1.0, "exact"
    beta = slope_modulus(data, c)
    if not d * beta < 1:
        raise DomainError(f"d|s| = {d * beta} >= 1 at c={c}")
    if d == 2:
        return 1 / math.sqrt(1 - 4 * beta * beta), "exact"
    if method == "series":
        p = series.SeriesParams(d, beta, tol=tol)
        return series.fourier_coeff_series(p, (0,) * d).real, "series"
    if d == 3 and method in ("auto", "hypergeom"):
        z = rhs_hypergeom_argument(data, c)
        if z <= HYPERGEOM_MAX_ARGUMENT or method == "hypergeom":
            q = (a + 2 * c) ** 2
            pref = q / (q - 3 * babs ** 2)
            return pref * specfun.hyp2f1(1 / 3, 2 / 3, 1, z, tol=min(tol, 1e-15)), "hypergeom"
    if method not in ("auto", "quadrature", "hypergeom"):
        raise ValueError(f"unknown method {method!r}")
    try:
        res = quadrature.rhs_c_equation_adaptive(d, a, babs, c, tol=tol, n_cap=n_cap)
    except NonConvergent:
        if d != 3 or method == "quadrature":
            raise
        # near the boundary: the elliptic form has no convergence problem
        return closedform.c000_elliptic(1 / beta), "elliptic"
    return res.value, "quadrature"


def c_equation_residual(data: CovarianceData, c: float, method: str = "auto",
                    tol: float = 1e-13, n_cap: int = quadrature.MAX_POINTS) -> float:
    return c_equation_lhs(data, c) - c_equation_rhs(data, c, method, tol, n_cap)[0]


def _lower_domain_edge(data: CovarianceData) -> float:
    # d|s| < 1  <=>  c > (d|b| - a) / (d - 1)
    return (data.d * data.babs - data.a) / (data.d - 1)


def scan_points(data: CovarianceData) -> list[float]:
    """Geometric scan for c, ascending, inside the domain d|s| < 1."""
    edge = _lower_domain_edge(data)
    if edge < 0:
        return [0.0] + [data.a * 2.0 ** k for k in SCAN_EXPONENTS]
    return [edge + data.a * 2.0 ** k for k in BOUNDARY_EXPONENTS]


def _sign_changes(evaluated: list[tuple[float, float]]) -> list[tuple[float, float]]:
    return [(c0, c1) for (c0, f0), (c1, f1) in zip(evaluated, evaluated[1:])
            if f0 == 0 or f0 * f1 < 0]


def solve_c(data: CovarianceData, tol: float = 1e-12, method: str = "auto",
            diagnostics: dict | None = None) -> float:
    """Find c >= 0 with LHS(c) = RHS(c).

    All sign changes over the scan are located; the first is refined with
    Brent's method.  Extra sign changes are reported in ``diagnostics``
    (key ``sign_changes``) together with all bracketing intervals.
    """
    diag = diagnostics if diagnostics is not None else {}
    if data.babs == 0:
        diag.update(sign_changes=0, brackets=[], method="exact")
        return 0.0
    cap = SCAN_POINTS_CAP if data.d >= 4 else quadrature.MAX_POINTS
    evaluated: list[tuple[float, float]] = []
    skipped: list[float] = []
    for c in scan_points(data):
        try:
            evaluated.append((c, c_equation_residual(data, c, method, tol=tol * 0.1, n_cap=cap)))
        except (NonConvergent, DomainError):
            skipped.append(c)
    brackets = _sign_changes(evaluated)
    if not brackets and skipped and cap < quadrature.MAX_POINTS:
        # the residual is negative next to the boundary; retry the points the
        # cheap scan gave up on, nearest to the evaluated range first
        for c in sorted(skipped, reverse=True):
            try:
                evaluated.append((c, c_equation_residual(data, c, method, tol=tol * 0.1)))
            except (NonConvergent, DomainError):
                break
            skipped.remove(c)
            evaluated.sort()
            brackets = _sign_changes(evaluated)
            if brackets:
                break
    diag.update(sign_changes=len(brackets), brackets=brackets, skipped_points=len(skipped))
    if not brackets:
        raise NoBracket(f"no sign change of the residual over {len(evaluated)} scan points")
    if len(brackets) > 1:
        log.warning("MultipleRoots: %d sign changes in the residual", len(brackets))
    roots = []
    for lo, hi in brackets:
        root = brentq(lambda c: c_equation_residual(data, c, method, tol=tol * 0.1),
                      lo, hi, xtol=1e-15 * data.a, rtol=4 * np.finfo(float).eps,
                      maxiter=200)
        roots.append(root)
    diag["roots"] = roots
    rhs, used = c_equation_rhs(data, roots[0], method, tol=tol * 0.1)
    diag["method"] = used
    diag["residual"] = float(c_equation_lhs(data, roots[0]) - rhs)
    diag["residual_scale"] = float(max(1.0, rhs))
    if abs(diag["residual"]) > tol * diag["residual_scale"]:
        raise NonConvergent(f"residual {diag['residual']} above tol {tol} at the root")
    return roots[0]


@dataclass(frozen=True)
class MomentMatrix:
    d: int
    a: float
    b: complex
    c: float

    @property
    def matrix(self) -> np.ndarray:
        n = self.d + 1
        m = np.full((n, n), self.c, dtype=complex)
        np.fill_diagonal(m, self.a)
        m[0, 1:] = np.conj(self.b)
        m[1:, 0] = self.b
        return m


def assemble_A(data: CovarianceData, c: float) -> MomentMatrix:
    if c < 0:
        raise DomainError(f"c must be >= 0, got {c}")
    return MomentMatrix(data.d, data.a, complex(data.b), float(c))


@dataclass(frozen=True)
class PDCertificate:
    positive_definite: bool
    cholesky_ok: bool
    min_eigenvalue: float


def pd_certificate(A: MomentMatrix, pd_tol: float = PD_TOL) -> PDCertificate:
    m = A.matrix
    try:
        np.linalg.cholesky(m)
        chol = True
    except np.linalg.LinAlgError:
        chol = False
    lam = float(np.linalg.eigvalsh(m)[0])
    return PDCertificate(chol and lam > pd_tol * A.a, chol, lam)


def is_positive_definite(A: MomentMatrix, pd_tol: float = PD_TOL) -> bool:
    return pd_certificate(A, pd_tol).positive_definite


def inverse_first_column(A: MomentMatrix) -> np.ndarray:
    """First column of A^{-1}: (a + (d-1) c, -b, ..., -b) / (a^2 + (d-1) a c - d|b|^2)."""
    den = A.a * A.a + (A.d - 1) * A.a * A.c - A.d * abs(A.b) ** 2
    if den <= 0:
        raise SingularSystem(f"a^2 + (d-1)ac - d|b|^2 = {den} <= 0")
    col = np.full(A.d + 1, -A.b, dtype=complex)
    col[0] = A.a + (A.d - 1) * A.c
    return col / den


def recover_polynomial(A: MomentMatrix) -> tuple[float, complex, complex]:
    """(p0, p1, s) with p0 > 0 real and s = -p1/p0 = b / (a + (d-1) c).

    Also checks A x = e1 for x = (p0^2, p1 p0, ..., p1 p0).
    """
    col = inverse_first_column(A)
    p0sq = col[0].real
    p0 = math.sqrt(p0sq)
    p1 = complex(col[1]) / p0
    s = complex(A.b) / (A.a + (A.d - 1) * A.c)
    resid = np.max(np.abs(A.matrix @ np.concatenate(([p0sq], np.full(A.d, p1 * p0)))
                          - np.eye(A.d + 1)[0]))
    if resid > 1e-10 * max(1.0, A.a):
        raise SingularSystem(f"A x = e1 residual {resid} too large")
    return p0, p1, s


@dataclass
class SolveResult:
    d: int
    a: float
    b: complex
    c: float
    s: complex
    p0: float
    p1: complex
    pd: PDCertificate
    residuals: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def stability_margin(self) -> float:
        return 1 - self.d * abs(self.p1) / self.p0

    def residuals_ok(self, tol: float) -> bool:
        """Relative root residual within tol, forward check within 10 tol, A x = e1 within 1e-9."""
        r = self.residuals
        return (r.get("c_equation", 0.0) <= tol
                and r["forward_a"] <= 10 * tol and r["forward_b"] <= 10 * tol
                and r["moment"] <= MOMENT_TOL)


def moment_residual(A: MomentMatrix, s: complex) -> float:
    """max |(|p0|^2 A) (1, -s, ..., -s) - e1| with |p0|^2 = (a + (d-1)c)/D."""
    col = inverse_first_column(A)
    scaled = col[0].real * A.matrix
    vec = np.concatenate(([1.0], np.full(A.d, -s)))
    return float(np.max(np.abs(scaled @ vec - np.eye(A.d + 1)[0])))


SERIES_CHECK_MAX = 0.9  # use the series for the forward check while d|s| <= this


def forward_a(d: int, s: complex, tol: float) -> tuple[float, str]:
    """c_0 at the recovered slope, by a method that stays fast up to the boundary."""
    q = d * abs(s)
    if q <= SERIES_CHECK_MAX:
        return series.fourier_coeff_series(series.SeriesParams(d, s, tol=tol), (0,) * d).real, "series"
    if d == 2:
        return 1 / math.sqrt(1 - 4 * abs(s) ** 2), "closedform"
    if d == 3:
        return closedform.c000_elliptic(1 / abs(s)), "elliptic"
    return quadrature.c0_general_d_adaptive(d, abs(s), tol=tol).value, "quadrature"


def _forward_check(d: int, s: complex, p0: float, data: CovarianceData, tol: float) -> dict:
    # p = p0 (1 - s(z_1 + ... + z_d)), so c_k(p) = c_k(normalized) / p0^2
    tol = min(tol, 1e-13)
    if d * abs(s) <= SERIES_CHECK_MAX:
        a_n, b_n, _ = series.forward_abc(series.SeriesParams(d, s, tol=tol))
        method = "series"
    else:
        a_n, method = forward_a(d, s, tol)
        # c_0 - d s c_{-e1} = 1 (constant term of 1/conj(p))
        b_n = (a_n - 1) / (d * s.conjugate())
    scale = 1 / p0 ** 2
    return {
        "forward_a": abs(a_n * scale - data.a) / data.a,
        "forward_b": abs(b_n * scale - data.b) / data.a,
        "forward_method": method,
    }


def _finish(data: CovarianceData, c: float, tol: float, diag: dict) -> SolveResult:
    A = assemble_A(data, c)
    cert = pd_certificate(A)
    if not cert.positive_definite:
        raise NotPositiveDefinite(
            f"moment matrix not positive definite at c={c} (min eigenvalue {cert.min_eigenvalue})")
    p0, p1, s = recover_polynomial(A)
    if not data.d * abs(s) < 1:
        raise NotPositiveDefinite(f"recovered polynomial is not stable: d|s| = {data.d * abs(s)}")
    residuals = {"moment": moment_residual(A, s)}
    residuals["c_equation"] = abs(diag.get("residual", 0.0)) / diag.get("residual_scale", 1.0)
    check = _forward_check(data.d, s, p0, data, tol)
    diag["forward_method"] = check.pop("forward_method")
    residuals.update(check)
    return SolveResult(data.d, data.a, complex(data.b), c, s, p0, p1, cert, residuals, diag)


def solve_d2(a: float, b: complex, tol: float = 1e-12) -> SolveResult:
    """Two variables: the unknown coefficient is |b|^2 / a, no root finding."""
    data = CovarianceData(2, a, b)
    if not abs(b) < a:
        raise Infeasible(f"|b| = {abs(b)} must be < a = {a} for d = 2", threshold=a)
    c = abs(b) ** 2 / a
    return _finish(data, c, tol, {"method": "rank-one", "sign_changes": 0})


def solve(data: CovarianceData, tol: float = 1e-12, method: str = "auto") -> SolveResult:
    """Full inverse pipeline; each failing stage raises its own error type."""
    feas = feasibility(data, tol)
    if not feas.feasible:
        rule = f"(1 - 1/gamma_{data.d}) a" if data.d >= 4 else "a"
        raise Infeasible(
            f"|b| = {data.babs} is not below the feasibility threshold "
            f"{rule} = {feas.threshold}", threshold=feas.threshold)
    if data.d == 2:
        result = solve_d2(data.a, data.b, tol)
        result.diagnostics["threshold"] = feas.threshold
        return result
    diag: dict = {"threshold": feas.threshold}
    c = solve_c(data, tol, method, diag)
    candidates = diag.get("roots", [c])
    last_error: ArfiltError | None = None
    for root in candidates:
        try:
            result = _finish(data, root, tol, diag)
        except (NotPositiveDefinite, SingularSystem) as exc:
            last_error = exc
            continue
        result.c = root
        return result
    assert last_error is not None
    raise last_error
