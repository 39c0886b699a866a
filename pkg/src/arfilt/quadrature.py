"""Torus quadrature and the one-slice coefficient kernels.

Freezing w = z_3 + ... + z_d turns 1/|p|^2 into the two-variable density
1/|(1 - s w) - s(z_1 + z_2)|^2 whose Fourier coefficients c_kl(w) near the
origin follow from explicitly known inverse moment matrices.  Integrating a
slice coefficient over the remaining d - 2 angles recovers the d-variable
coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonConvergent, NonFinite, SingularMatrix

DEFAULT_POINTS = {3: 512, 4: 128}
MAX_POINTS = 4096


@dataclass(frozen=True)
class TorusGrid:
    dims: int
    points_per_dim: int

    def __post_init__(self):
        if self.dims < 0:
            raise ValueError("dims must be >= 0")
        if self.points_per_dim < 8 or self.points_per_dim % 2:
            raise ValueError(
                f"points_per_dim must be even and >= 8, got {self.points_per_dim}")

    def angles(self) -> list[np.ndarray]:
        """Sparse ('ij') angle arrays, one per dimension, broadcastable together."""
        t = 2 * np.pi * np.arange(self.points_per_dim) / self.points_per_dim
        if self.dims == 0:
            return []
        return list(np.meshgrid(*([t] * self.dims), indexing="ij", sparse=True))


def torus_integral(f: Callable[..., np.ndarray], grid: TorusGrid) -> float:
    """Normalized integral (2 pi)^{-m} of f over [0, 2 pi)^m by the trapezoid rule.

    ``f`` receives m broadcastable angle arrays.  The sum uses math.fsum, so
    the result does not depend on evaluation order.
    """
    angles = grid.angles()
    vals = np.asarray(f(*angles))
    shape = np.broadcast_shapes(vals.shape, *(a.shape for a in angles))
    vals = np.broadcast_to(vals, shape)
    if not np.all(np.isfinite(vals)):
        raise NonFinite("integrand is not finite at some grid point")
    count = grid.points_per_dim ** grid.dims
    flat = vals.ravel()
    if np.iscomplexobj(flat):
        return complex(math.fsum(flat.real), math.fsum(flat.imag)) / count
    return math.fsum(flat) / count


@dataclass(frozen=True)
class AdaptiveResult:
    value: float
    points_per_dim: int
    change: float


def torus_integral_adaptive(f: Callable[..., np.ndarray], dims: int, n0: int,
                            tol: float, n_cap: int = MAX_POINTS) -> AdaptiveResult:
    """Double the grid from n0 until successive values differ by at most tol (relative)."""
    n = n0
    prev = torus_integral(f, TorusGrid(dims, n))
    while True:
        if 2 * n > n_cap:
            raise NonConvergent(
                f"torus quadrature not converged at N={n} (cap {n_cap}); "
                f"last change unavailable below tol={tol}")
        n *= 2
        cur = torus_integral(f, TorusGrid(dims, n))
        change = abs(cur - prev)
        if change <= tol * max(1.0, abs(cur)):
            return AdaptiveResult(cur, n, change)
        prev = cur


def default_points(d: int) -> int:
    return DEFAULT_POINTS.get(d, 64)


# slice kernels

def _slice_radicand(s: complex, w):
    x = np.abs(1 - s * w) ** 2
    return x, x - 4 * abs(s) ** 2


def c00_slice(s: complex, w):
    """c_00(w) = 1 / (|1 - s w| sqrt(|1 - s w|^2 - 4 |s|^2)); w may be an array."""
    x, rad = _slice_radicand(s, w)
    if np.any(rad <= 0):
        raise DomainError("slice radicand |1 - s w|^2 - 4|s|^2 is not positive")
    return 1.0 / (np.sqrt(x) * np.sqrt(rad))


def _slice_parts(s: complex, w: complex):
    s = complex(s)
    w = complex(w)
    x, rad = _slice_radicand(s, w)
    if rad <= 0:
        raise DomainError("slice radicand |1 - s w|^2 - 4|s|^2 is not positive")
    v = 0.5 * (x + math.sqrt(x * x - 4 * abs(s) ** 2 * x))
    up = -s.conjugate() * (1 - s * w)  # above-diagonal entry
    return x, v, up, up.conjugate()


def slice_inverse_3(s: complex, w: complex) -> np.ndarray:
    """Closed-form inverse of the 3x3 slice moment matrix."""
    x, v, up, lo = _slice_parts(s, w)
    return np.array([[x, up, up],
                     [lo, v, 0],
                     [lo, 0, v]], dtype=complex)


def slice_inverse_4(s: complex, w: complex) -> np.ndarray:
    """Closed-form inverse of the 4x4 slice moment matrix.

    The two off-diagonal middle entries are |s|^2 (equal to s^2 for real s;
    the matrix must be Hermitian).
    """
    x, v, up, lo = _slice_parts(s, w)
    q = abs(complex(s)) ** 2
    return np.array([[x, up, up, 0],
                     [lo, q + v, q, up],
                     [lo, q, q + v, up],
                     [0, lo, lo, x]], dtype=complex)


def _invert(m: np.ndarray) -> np.ndarray:
    try:
        out = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    if not np.all(np.isfinite(out)) or np.linalg.cond(m) > 1e14:
        raise SingularMatrix("slice inverse matrix is numerically singular")
    return out


def coeff_matrix_slice_3(s: complex, w: complex) -> np.ndarray:
    """Moment matrix [[c00, c0-1, c-10], [c01, c00, c-11], [c10, c1-1, c00]] at w."""
    return _invert(slice_inverse_3(s, w))


def coeff_matrix_slice_4(s: complex, w: complex) -> np.ndarray:
    """4x4 moment matrix on the index set {00, 01, 10, 11}, entry (i, j) = c_{J_i - J_j}."""
    return _invert(slice_inverse_4(s, w))


SLICE_INDEX_4 = ((0, 0), (0, 1), (1, 0), (1, 1))


def slice_coeffs(s: complex, w: complex) -> dict[tuple[int, int], complex]:
    """All c_kl(w) with (k, l) in {-1, 0, 1}^2 read off the inverted 4x4 matrix."""
    m = coeff_matrix_slice_4(s, w)
    out: dict[tuple[int, int], complex] = {}
    for i, ji in enumerate(SLICE_INDEX_4):
        for j, jj in enumerate(SLICE_INDEX_4):
            out.setdefault((ji[0] - jj[0], ji[1] - jj[1]), m[i, j])
    return out


def c01_slice_explicit(r: float, t):
    """c_01(e^{it}) for d = 3 and s = 1/r, in closed form."""
    u = r * r + 1 - 2 * r * np.cos(t)
    v = r * r - 3 - 2 * r * np.cos(t)
    return 2 * r * r / (r - np.exp(1j * t)) / (np.sqrt(u * v) + v)


def _slice_sum(angles) -> np.ndarray:
    w = 0
    for t in angles:
        w = w + np.exp(1j * t)
    return w


def c0_general_d(d: int, s: complex, grid: TorusGrid | None = None) -> float:
    """c_0 for d >= 3 by integrating c_00 over w = e^{i t_3} + ... + e^{i t_d}."""
    if d < 3:
        raise ValueError("c0_general_d needs d >= 3")
    if not d * abs(s) < 1:
        raise DomainError(f"d|s| = {d * abs(s)} >= 1")
    grid = grid or TorusGrid(d - 2, default_points(d))
    if grid.dims != d - 2:
        raise ValueError(f"grid must have {d - 2} dimensions")
    return torus_integral(lambda *ts: c00_slice(s, _slice_sum(ts)), grid)


def c_equation_g(d: int, a: float, babs: float, c: float, angles) -> np.ndarray:
    """The two-factor function g(t_3, ..., t_d) under the square root."""
    beta = babs / (a + (d - 1) * c)
    sum_cos = 0.0
    for t in angles:
        sum_cos = sum_cos + np.cos(t)
    w = _slice_sum(angles)
    # sum_{j,k} cos(t_j - t_k) = |sum_j e^{i t_j}|^2
    first = 1 - 2 * beta * sum_cos + beta * beta * np.abs(w) ** 2
    second = 1 - 2 * beta * sum_cos + beta * beta * (-4 + np.abs(w) ** 2)
    return first * second


def _check_data(a, babs, c):
    if not (a > 0 and c >= 0 and babs >= 0):
        raise DomainError(f"need a > 0, c >= 0, |b| >= 0; got a={a}, |b|={babs}, c={c}")


def rhs_c_equation(d: int, a: float, babs: float, c: float,
               grid: TorusGrid | None = None) -> float:
    """Mean of 1/sqrt(g) over the (d-2)-torus; equals 1 when |b| = 0."""
    _check_data(a, babs, c)
    if babs == 0:
        return 1.0
    grid = grid or TorusGrid(d - 2, default_points(d))

    def integrand(*ts):
        g = c_equation_g(d, a, babs, c, ts)
        if np.any(g <= 0):
            raise DomainError("g <= 0 on the grid: parameters outside the feasible region")
        return 1.0 / np.sqrt(g)

    return torus_integral(integrand, grid)


def rhs_c_equation_slice_form(d: int, a: float, b: complex, c: float,
                          grid: TorusGrid | None = None) -> float:
    """Same right-hand side written as the integral of c_00 with s = b / (a + (d-1) c)."""
    _check_data(a, abs(b), c)
    s = b / (a + (d - 1) * c)
    return c0_general_d(d, s, grid)


def rhs_c_equation_adaptive(d: int, a: float, babs: float, c: float, tol: float = 1e-13,
                        n0: int | None = None, n_cap: int = MAX_POINTS) -> AdaptiveResult:
    _check_data(a, babs, c)
    if babs == 0:
        return AdaptiveResult(1.0, 0, 0.0)

    def integrand(*ts):
        g = c_equation_g(d, a, babs, c, ts)
        if np.any(g <= 0):
            raise DomainError("g <= 0 on the grid: parameters outside the feasible region")
        return 1.0 / np.sqrt(g)

    n0 = n0 or max(8, default_points(d) // 4)
    return torus_integral_adaptive(integrand, d - 2, n0, tol, n_cap)


def c0_general_d_adaptive(d: int, s: complex, tol: float = 1e-13, n0: int | None = None,
                          n_cap: int = MAX_POINTS) -> AdaptiveResult:
    """c0_general_d with grid doubling until two successive values agree to tol."""
    if d < 3:
        raise ValueError("c0_general_d_adaptive needs d >= 3")
    if not d * abs(s) < 1:
        raise DomainError(f"d|s| = {d * abs(s)} >= 1")
    n0 = n0 or max(8, default_points(d) // 4)
    return torus_integral_adaptive(lambda *ts: c00_slice(s, _slice_sum(ts)), d - 2, n0, tol,
                                   n_cap)
