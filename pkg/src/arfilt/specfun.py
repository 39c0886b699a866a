"""Special functions: Pochhammer symbols, truncated hypergeometric series and
complete elliptic integrals (parameter convention, m = k**2).

Everything here works in double precision.  The elliptic integrals go through
Carlson's symmetric forms R_F and R_J, which converge quadratically and keep
full accuracy as m approaches 1.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import DomainError, NonConvergent

MAX_TERMS = 1_000_000
_CONSECUTIVE = 3


def pochhammer(q: float, n: int) -> float:
    """Rising factorial (q)_n = q (q+1) ... (q+n-1), with (q)_0 = 1."""
    if n < 0:
        raise DomainError(f"pochhammer needs n >= 0, got {n}")
    out = 1.0
    for j in range(n):
        out *= q + j
    return out


def _check_lower(lower: Sequence[float]) -> None:
    for b in lower:
        if b <= 0 and float(b).is_integer():
            raise DomainError(f"lower parameter {b} is a nonpositive integer")


def hypergeom_pq(upper: Sequence[float], lower: Sequence[float], z: float,
                 tol: float = 1e-15, max_terms: int = MAX_TERMS,
                 partial_sums: list | None = None) -> float:
    """Sum the generalized hypergeometric series pFq(upper; lower; z).

    Terms are generated by their ratio.  Summation stops once the estimated
    tail, |t_n| * rho / (1 - rho) with rho the larger of the current term ratio
    and |z|, has stayed below ``tol * |sum|`` for three consecutive terms.
    The series must converge, so ``len(upper) == len(lower) + 1`` requires
    ``|z| < 1``.

    If ``partial_sums`` is a list, every partial sum is appended to it.
    """
    _check_lower(lower)
    if len(upper) > len(lower) + 1:
        raise DomainError("divergent series: more than q + 1 upper parameters")
    if len(upper) == len(lower) + 1 and not abs(z) < 1:
        raise DomainError(f"series needs |z| < 1, got z={z}")

    total = 1.0
    term = 1.0
    if partial_sums is not None:
        partial_sums.append(total)
    if z == 0:
        return total
    quiet = 0
    for n in range(max_terms):
        num = z
        for a in upper:
            num *= a + n
        den = float(n + 1)
        for b in lower:
            den *= b + n
        ratio = num / den
        term *= ratio
        total += term
        if partial_sums is not None:
            partial_sums.append(total)
        if term == 0.0:
            return total
        rho = max(abs(ratio), abs(z)) if len(upper) == len(lower) + 1 else abs(ratio)
        if rho < 1:
            tail = abs(term) * rho / (1.0 - rho)
            quiet = quiet + 1 if tail < tol * abs(total) else 0
            if quiet >= _CONSECUTIVE:
                return total
        else:
            quiet = 0
    raise NonConvergent(
        f"{len(upper)}F{len(lower)} series at z={z} did not reach tol={tol} "
        f"within {max_terms} terms"
    )


def hyp2f1(a: float, b: float, c: float, z: float, tol: float = 1e-15) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) by its power series, |z| < 1."""
    return hypergeom_pq((a, b), (c,), z, tol)


def hyp3f2(a1: float, a2: float, a3: float, b1: float, b2: float, z: float,
           tol: float = 1e-15) -> float:
    return hypergeom_pq((a1, a2, a3), (b1, b2), z, tol)


# Carlson symmetric integrals.  The duplication loops follow Carlson (1995),
# Numer. Algorithms 10, with the error bound r = 1e-16 fixing the stop rule.

_CARLSON_R = 1e-16


def carlson_rf(x: float, y: float, z: float) -> float:
    """R_F(x, y, z) for nonnegative arguments, at most one of them zero."""
    if min(x, y, z) < 0 or (x == 0) + (y == 0) + (z == 0) > 1:
        raise DomainError(f"R_F undefined at ({x}, {y}, {z})")
    a0 = (x + y + z) / 3.0
    q = (3.0 * _CARLSON_R) ** (-1.0 / 6.0) * max(abs(a0 - x), abs(a0 - y), abs(a0 - z))
    a = a0
    scale = 1.0
    while q * scale >= abs(a):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z, a = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4, (a + lam) / 4
        scale /= 4
    X = (a - x) / a
    Y = (a - y) / a
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    return (1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / math.sqrt(a)


def _rc_unit(e: float) -> float:
    # R_C(1, 1 + e) for e > -1
    if abs(e) < 1e-3:
        return 1 - e / 3 + e ** 2 / 5 - e ** 3 / 7 + e ** 4 / 9 - e ** 5 / 11
    if e > 0:
        return math.atan(math.sqrt(e)) / math.sqrt(e)
    return math.atanh(math.sqrt(-e)) / math.sqrt(-e)


def carlson_rj(x: float, y: float, z: float, p: float) -> float:
    """R_J(x, y, z, p) for x, y, z >= 0 (at most one zero) and p > 0."""
    if min(x, y, z) < 0 or p <= 0 or (x == 0) + (y == 0) + (z == 0) > 1:
        raise DomainError(f"R_J undefined at ({x}, {y}, {z}, {p})")
    a0 = (x + y + z + 2 * p) / 5.0
    delta = (p - x) * (p - y) * (p - z)
    q = (_CARLSON_R / 4.0) ** (-1.0 / 6.0) * max(
        abs(a0 - x), abs(a0 - y), abs(a0 - z), abs(a0 - p))
    a = a0
    scale = 1.0
    acc = 0.0
    while q * scale >= abs(a):
        sx, sy, sz, sp = math.sqrt(x), math.sqrt(y), math.sqrt(z), math.sqrt(p)
        dm = (sp + sx) * (sp + sy) * (sp + sz)
        em = scale ** 3 * delta / (dm * dm)
        acc += scale / dm * _rc_unit(em)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z, p, a = ((v + lam) / 4 for v in (x, y, z, p, a))
        scale /= 4
    X = (a - x) / a
    Y = (a - y) / a
    Z = (a - z) / a
    P = -(X + Y + Z) / 2
    e2 = X * Y + X * Z + Y * Z - 3 * P * P
    e3 = X * Y * Z + 2 * e2 * P + 4 * P ** 3
    e4 = (2 * X * Y * Z + e2 * P + 3 * P ** 3) * P
    e5 = X * Y * Z * P * P
    series = (1 - 3 * e2 / 14 + e3 / 6 + 9 * e2 * e2 / 88 - 3 * e4 / 22
              - 9 * e2 * e3 / 52 + 3 * e5 / 26)
    return scale * a ** -1.5 * series + 6 * acc


def _check_m(m: float) -> None:
    if not m < 1:
        raise DomainError(f"complete elliptic integrals need m < 1, got m={m}")


def ellip_K(m: float) -> float:
    """Complete elliptic integral of the first kind, K(m) = R_F(0, 1-m, 1)."""
    _check_m(m)
    return carlson_rf(0.0, 1.0 - m, 1.0)


def ellip_E(m: float) -> float:
    """Complete elliptic integral of the second kind."""
    _check_m(m)
    y = 1.0 - m
    return carlson_rf(0.0, y, 1.0) - m / 3.0 * carlson_rj(0.0, y, 1.0, 1.0)


def ellip_Pi(n: float, m: float) -> float:
    """Complete elliptic integral of the third kind,

        Pi(n, m) = int_0^{pi/2} dt / ((1 - n sin^2 t) sqrt(1 - m sin^2 t)),

    for n < 1 and m < 1 (n may be negative).
    """
    _check_m(m)
    if not n < 1:
        raise DomainError(f"ellip_Pi needs n < 1, got n={n}")
    y = 1.0 - m
    rf = carlson_rf(0.0, y, 1.0)
    if n == 0:
        return rf
    return rf + n / 3.0 * carlson_rj(0.0, y, 1.0, 1.0 - n)
