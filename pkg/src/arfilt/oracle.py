"""Brute-force references for the Fourier coefficients of 1/|p|^2.

Two code paths that share nothing with the series or closed-form modules:
a dense FFT of the sampled density, and the autocorrelation of the truncated
power series of 1/p.  Meant for tests and the ``verify`` command.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.special import gammaln

from .errors import ResourceLimit, UnstableInput

MEMORY_BUDGET = 1 << 25  # grid points / array entries
DEFAULT_FFT_POINTS = {2: 1024, 3: 256, 4: 64}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ARFILT_THREADS", "1")))
    except ValueError:
        return 1


def _check_stable(d: int, s: complex) -> None:
    if not d * abs(s) < 1:
        raise UnstableInput(f"d|s| = {d * abs(s)} >= 1")


@dataclass
class CoeffGrid:
    """Fourier coefficients from a real-input FFT, frequencies in (-N/2, N/2]."""

    d: int
    N: int
    values: np.ndarray
    aliasing: float | None = field(default=None)

    def value(self, k) -> complex:
        k = tuple(int(x) for x in k)
        if len(k) != self.d:
            raise ValueError(f"index {k} does not have length {self.d}")
        half = self.N // 2
        if any(not (-half < x <= half) for x in k):
            raise IndexError(f"index {k} outside the resolved band of N={self.N}")
        # real input: only nonnegative last-axis frequencies are stored
        if k[-1] < 0:
            return complex(self.values[tuple(-x % self.N for x in k)]).conjugate()
        return complex(self.values[tuple(x % self.N for x in k)])

    def block(self, kmax: int) -> dict[tuple[int, ...], complex]:
        rng = range(-kmax, kmax + 1)
        return {k: self.value(k) for k in itertools.product(*([rng] * self.d))}


def _sample_density(d: int, s: complex, N: int) -> np.ndarray:
    z = np.exp(2j * np.pi * np.arange(N) / N)
    rest = np.zeros((N,) * (d - 1), dtype=complex)
    for axis in range(d - 1):
        shape = [1] * (d - 1)
        shape[axis] = N
        rest = rest + z.reshape(shape)
    out = np.empty((N,) * d)
    for i in range(N):
        out[i] = 1.0 / np.abs(1 - s * (z[i] + rest)) ** 2
    return out


def fft_coeffs(d: int, s: complex, N: int | None = None, estimate_aliasing: bool = False,
               budget: int = MEMORY_BUDGET) -> CoeffGrid:
    """Sample 1/|1 - s(z_1+...+z_d)|^2 on an N^d grid and FFT it.

    With ``estimate_aliasing`` the same is done at N/2 and the largest change
    over the index box {-2..2}^d is reported; aliasing decays geometrically
    in N, so this overestimates the error of the N-point values.
    """
    _check_stable(d, s)
    N = N or DEFAULT_FFT_POINTS.get(d, 32)
    if N < 8 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 8, got {N}")
    if N ** d > budget:
        raise ResourceLimit(f"{N}^{d} grid points exceed the budget of {budget}")
    vals = scipy.fft.rfftn(_sample_density(d, s, N), workers=_workers())
    vals /= N ** d
    grid = CoeffGrid(d, N, vals)
    if estimate_aliasing:
        coarse = fft_coeffs(d, s, N // 2, budget=budget)
        kmax = min(2, N // 4 - 1)
        rng = range(-kmax, kmax + 1)
        grid.aliasing = max(abs(grid.value(k) - coarse.value(k))
                            for k in itertools.product(*([rng] * d)))
    return grid


def default_degree(d: int, s: complex, target: float = 1e-16) -> int:
    """Smallest truncation degree D with (d|s|)^{2D} below target."""
    q = d * abs(s)
    if q == 0:
        return 0
    return max(8, math.ceil(math.log(target) / (2 * math.log(q))))


def _expansion(d: int, s: complex, degree: int) -> np.ndarray:
    # phi_m = (|m|; m_1..m_d) s^{|m|}, zero where |m| > degree
    idx = np.indices((degree + 1,) * d)
    total = idx.sum(axis=0)
    mask = total <= degree
    logmult = gammaln(total + 1) - gammaln(idx + 1).sum(axis=0)
    phi = np.zeros((degree + 1,) * d, dtype=complex)
    if s == 0:
        phi[(0,) * d] = 1.0
        return phi
    logmag = logmult + total * math.log(abs(s))
    phase = np.exp(1j * np.angle(s) * total)
    phi[mask] = (np.exp(logmag) * phase)[mask]
    return phi


def autocorr_coeffs(d: int, s: complex, degree: int | None = None, kmax: int = 1,
                    budget: int = MEMORY_BUDGET) -> dict[tuple[int, ...], complex]:
    """c_k for |k|_inf <= kmax from 1/p = sum_n s^n (z_1+...+z_d)^n truncated at ``degree``.

    c_k = sum_m phi_{m+k} conj(phi_m): the product of the expansions of 1/p
    and 1/conj(p), read off at z^k.
    """
    _check_stable(d, s)
    degree = default_degree(d, s) if degree is None else degree
    if (degree + 1) ** d > budget:
        raise ResourceLimit(f"expansion with degree {degree} in {d} variables exceeds budget")
    phi = _expansion(d, s, degree)
    size = degree + 1
    out: dict[tuple[int, ...], complex] = {}
    rng = range(-kmax, kmax + 1)
    for k in itertools.product(*([rng] * d)):
        lo = [max(0, -x) for x in k]
        hi = [min(size, size - x) for x in k]
        if any(h <= l for l, h in zip(lo, hi)):
            out[k] = 0j
            continue
        base = tuple(slice(l, h) for l, h in zip(lo, hi))
        shifted = tuple(slice(l + x, h + x) for l, h, x in zip(lo, hi, k))
        prod = (phi[shifted] * phi[base].conj()).ravel()
        out[k] = complex(math.fsum(prod.real), math.fsum(prod.imag))
    return out


def autocorr_slice_coeffs(s: complex, w: complex, degree: int | None = None,
                          kmax: int = 1) -> dict[tuple[int, int], complex]:
    """Two-variable coefficients c_kl(w) of 1/|(1 - s w) - s(z_1 + z_2)|^2.

    Rewrites the slice density as |1 - s w|^{-2} times the density of
    1 - s'(z_1 + z_2) with s' = s / (1 - s w), then autocorrelates.
    """
    p0 = 1 - s * w
    s_eff = s / p0
    if degree is None:
        degree = default_degree(2, s_eff)
    raw = autocorr_coeffs(2, s_eff, degree, kmax)
    return {k: v / abs(p0) ** 2 for k, v in raw.items()}
