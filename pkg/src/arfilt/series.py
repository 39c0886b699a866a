"""Series machinery for 1/|p|^2 with p(z) = 1 - s(z_1 + ... + z_d).

The Fourier coefficient at k in Z^d is

    c_k = s^{K+} conj(s)^{K-} sum_n G_k(n) |s|^{2n},

where K+ (K-) is the sum of the positive (negative) parts of k and G_k(n) is
an integer: the sum over compositions n_1 + ... + n_d = n of the product of
the two multinomial coefficients (n + K+; n_i + k_i^+) and (n + K-; n_i + k_i^-).
G_k(n) is built exactly, one coordinate at a time, using

    (N; a_1, ..., a_j) = C(N, a_j) (N - a_j; a_1, ..., a_{j-1}).

For k = 0 it reduces to the multinomial square sums that define gamma_d and
the Heun sequence g_n (d = 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln, zeta

from .errors import InternalError, NonConvergent, UnstableInput

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class SeriesParams:
    d: int
    s: complex
    tol: float = 1e-14
    max_n: int = 200_000

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.d * abs(self.s) < 1:
            raise UnstableInput(
                f"d|s| = {self.d * abs(self.s)!r} >= 1: polynomial is not stable")


def _split(k: Sequence[int]) -> tuple[list[int], list[int]]:
    return [max(0, x) for x in k], [max(0, -x) for x in k]


def composition_sums(k: Sequence[int]) -> Iterator[int]:
    """Yield the exact integers G_k(0), G_k(1), ... (see module docstring)."""
    kp, km = _split(k)
    d = len(k)
    pp = np.cumsum(kp).tolist()
    mm = np.cumsum(km).tolist()
    # levels[j][m] = G restricted to the first j + 1 coordinates
    levels: list[list[int]] = [[] for _ in range(d)]
    m = 0
    while True:
        levels[0].append(1)
        for j in range(1, d):
            prev = levels[j - 1]
            top_p, top_m = m + pp[j], m + mm[j]
            acc = 0
            for nj in range(m + 1):
                acc += (math.comb(top_p, nj + kp[j]) * math.comb(top_m, nj + km[j])
                        * prev[m - nj])
            levels[j].append(acc)
        yield levels[d - 1][m]
        m += 1


def multinomial_square_sum(d: int, n: int) -> int:
    """Exact sum of squared multinomial coefficients over compositions of n into d parts."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    for m, value in enumerate(composition_sums((0,) * d)):
        if m == n:
            return value
    raise AssertionError("unreachable")


def fourier_coeff_series(params: SeriesParams, k: Sequence[int],
                         info: dict | None = None) -> complex:
    """Fourier coefficient c_k of 1/|1 - s(z_1+...+z_d)|^2 by the multinomial series.

    The outer sum over n is truncated once a geometric tail estimate with
    ratio max((d|s|)^2, current term ratio) stays below ``tol * |sum|`` for
    three consecutive terms.  ``info``, when given, receives the number of
    terms used and the final tail estimate.
    """
    d, s = params.d, complex(params.s)
    if len(k) != d:
        raise ValueError(f"index {tuple(k)} does not have length d={d}")
    kp, km = _split(k)
    big_p, big_m = sum(kp), sum(km)
    phase = s ** big_p * s.conjugate() ** big_m
    if s == 0:
        value = next(composition_sums(k)) * phase
        if info is not None:
            info.update(terms=1, tail=0.0)
        return complex(value)

    # x_n = G(n) / d^{2n} is O(n^{(1-d)/2}); multiply by rho^n with rho = (d|s|)^2
    rho = (d * abs(s)) ** 2
    scale = d * d
    terms: list[float] = []
    total = 0.0
    quiet = 0
    prev = None
    tail = math.inf
    for n, g in enumerate(composition_sums(k)):
        if n > params.max_n:
            raise NonConvergent(
                f"series for c_{tuple(k)} at d={d}, |s|={abs(s)} needs more than "
                f"{params.max_n} terms")
        t = (g / scale ** n) * rho ** n if n else float(g)
        terms.append(t)
        total += t
        if t == 0 and n:
            # underflow: every later term is smaller still
            tail = 0.0
            quiet += 1
            if quiet >= 3:
                break
        elif prev is not None and prev > 0:
            q = max(rho, t / prev)
            if q < 1:
                tail = t * q / (1 - q)
                quiet = quiet + 1 if tail < params.tol * total else 0
                if quiet >= 3:
                    break
            else:
                quiet = 0
        prev = t
    if info is not None:
        info.update(terms=len(terms), tail=tail, sum=total)
    return math.fsum(terms) * phase


def forward_abc(params: SeriesParams) -> tuple[float, complex, float | None]:
    """Return (a, b, c) = (c_0, c_{e1}, c_{e1 - e2}); c is None when d == 1."""
    d = params.d
    zero = (0,) * d
    e1 = (1,) + (0,) * (d - 1)
    a = fourier_coeff_series(params, zero).real
    b = fourier_coeff_series(params, e1)
    c = None
    if d >= 2:
        c = fourier_coeff_series(params, (1, -1) + (0,) * (d - 2)).real
    return a, b, c


# gamma_d

GAMMA_SAFETY = 4.0
_GAMMA_FIT_ORDER = 5


def normalized_square_sums(d: int, n_max: int) -> np.ndarray:
    """Floating values S_d(n) / d^{2n} for n = 0..n_max.

    Computed from S_d(n) = sum_j C(n, j)^2 S_{d-1}(n - j) with the binomial
    weights formed in log space, so nothing overflows for large n.  All terms
    are positive, so the relative error stays near machine precision.
    """
    t = np.ones(n_max + 1)
    for dd in range(2, d + 1):
        new = np.empty(n_max + 1)
        for m in range(n_max + 1):
            j = np.arange(m + 1)
            logw = (2 * (gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1))
                    + 2 * (m - j) * math.log(dd - 1) - 2 * m * math.log(dd))
            new[m] = math.fsum(np.exp(logw) * t[m - j])
        t = new
    return t


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    n_terms: int
    bound: float


def _gamma_at_depth(d: int, terms: np.ndarray, n: int) -> tuple[float, float]:
    alpha = (d - 1) / 2
    lead = d ** (d / 2) * (4 * math.pi) ** (-alpha)
    nn = np.arange(n // 2, n + 1, dtype=float)
    resid = terms[n // 2:n + 1] / (lead * nn ** -alpha) - 1.0
    tails = []
    for order in (_GAMMA_FIT_ORDER - 1, _GAMMA_FIT_ORDER):
        basis = np.stack([nn ** -j for j in range(1, order + 1)], axis=1)
        coef, *_ = np.linalg.lstsq(basis, resid, rcond=None)
        tail = zeta(alpha, n + 1) + sum(
            coef[j - 1] * zeta(alpha + j, n + 1) for j in range(1, order + 1))
        tails.append(lead * tail)
    partial = math.fsum(terms[:n + 1])
    bound = GAMMA_SAFETY * abs(tails[1] - tails[0]) + 4 * n * np.finfo(float).eps * partial
    return float(partial + tails[1]), float(bound)


def gamma_d_estimate(d: int, tol: float = 1e-10, n_start: int = 256,
                     n_cap: int = 8192) -> GammaEstimate:
    """gamma_d for d >= 4: explicit partial sum plus a fitted asymptotic tail.

    The terms behave like C n^{-a} (1 + c_1/n + c_2/n^2 + ...) with
    a = (d-1)/2 and C = d^{d/2} (4 pi)^{-a}.  The correction coefficients are
    fitted on [N/2, N] and the tail is summed with Hurwitz zeta values.  The
    reported bound is GAMMA_SAFETY times the change between fits of
    consecutive order.  N doubles until the bound is below tol.
    """
    if d < 4:
        return GammaEstimate(math.inf, 0, 0.0)
    n = n_start
    terms = normalized_square_sums(d, n)
    while True:
        value, bound = _gamma_at_depth(d, terms, n)
        if bound < tol or n >= n_cap:
            return GammaEstimate(value, n, bound)
        n *= 2
        terms = normalized_square_sums(d, n)


def gamma_d(d: int, tol: float = 1e-10) -> float:
    """Supremum of c_0 over stable s; +inf for d <= 3."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return gamma_d_estimate(d, tol).value


# Heun sequence, d = 3

@dataclass(frozen=True)
class HeunSequence:
    values: tuple[int, ...]

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self):
        return len(self.values)


def heun_g(n_max: int) -> HeunSequence:
    """g_0..g_{n_max} from n^2 g_n = (10n^2 - 10n + 3) g_{n-1} - 9 (n-1)^2 g_{n-2}."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    g = [1, 3]
    for n in range(2, n_max + 1):
        num = (10 * n * n - 10 * n + 3) * g[-1] - 9 * (n - 1) ** 2 * g[-2]
        q, r = divmod(num, n * n)
        if r:
            raise InternalError(f"recurrence division not exact at n={n}")
        g.append(q)
    return HeunSequence(tuple(g))


def heun_scaled(seq: HeunSequence, n: int) -> float:
    """g_n * n / 9^n as a correctly rounded float."""
    return float(Fraction(seq[n] * n, 9 ** n))


def heun_asymptotic_estimate(n_max: int) -> float:
    """Extrapolate lim g_n n / 9^n from the last two terms.

    With x_n = C (1 + c/n + O(n^-2)), one Richardson step in 1/n gives
    n x_n - (n-1) x_{n-1} = C + O(n^-2).
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    seq = heun_g(n_max)
    n = n_max
    return n * heun_scaled(seq, n) - (n - 1) * heun_scaled(seq, n - 1)
