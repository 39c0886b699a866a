"""Closed-form Fourier coefficients for p = 1 - (z_1 + ... + z_d)/r with real r > d.

d = 3: c_000 through K and through 2F1(1/3, 2/3; 1; .), the whole {-1,0,1}^3
table through K, E and Pi, one-angle integral forms, and extension beyond
the unit cube by the linear relations c_klm = (c_{k-1,l,m} + c_{k,l-1,m} +
c_{k,l,m-1}) / r, valid whenever (k, l, m) is not in -N_0^3.

d = 2: every coefficient, through a geometric law or a 3F2 value.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable

import numpy as np

from . import specfun
from .errors import DomainError, Underdetermined
from .quadrature import TorusGrid, torus_integral

Index3 = tuple[int, int, int]


def _check_r(r: float, d: int = 3) -> None:
    if not r > d:
        raise DomainError(f"need r > {d}, got r={r}")


def elliptic_parameter(r: float) -> float:
    """m = 16 r / ((r - 1)^3 (r + 3)), in (0, 1) for r > 3."""
    return 16 * r / ((r - 1) ** 3 * (r + 3))


def hypergeometric_argument(r: float) -> float:
    """27 (r^2 - 1) / (r^2 - 3)^3, in (0, 1) for r > 3."""
    return 27 * (r * r - 1) / (r * r - 3) ** 3


def c000_elliptic(r: float) -> float:
    _check_r(r)
    m = elliptic_parameter(r)
    assert m < 1
    return 2 * r * r / (math.pi * (r - 1) ** 1.5 * math.sqrt(r + 3)) * specfun.ellip_K(m)


def c000_hypergeom(r: float, tol: float = 1e-15) -> float:
    _check_r(r)
    return r * r / (r * r - 3) * specfun.hyp2f1(1 / 3, 2 / 3, 1, hypergeometric_argument(r), tol)


def twin_hypergeom_residual(r: float, tol: float = 1e-15) -> float:
    """Difference between the 2F1(1/3, 2/3) side and the 2F1(1/2, 1/2) side."""
    _check_r(r)
    lhs = specfun.hyp2f1(1 / 3, 2 / 3, 1, hypergeometric_argument(r), tol) / (r * r - 3)
    rhs = (specfun.hyp2f1(0.5, 0.5, 1, elliptic_parameter(r), tol)
           / ((r - 1) ** 1.5 * math.sqrt(r + 3)))
    return lhs - rhs


def c000_integrand(r: float):
    def f(t):
        return r * r / (np.sqrt(r * r + 1 - 2 * r * np.cos(t))
                        * np.sqrt(r * r - 3 - 2 * r * np.cos(t)))
    return f


def c000_integral(r: float, n: int = 512) -> float:
    _check_r(r)
    return torus_integral(c000_integrand(r), TorusGrid(1, n))


def _kep(r: float):
    m = elliptic_parameter(r)
    return m, specfun.ellip_K(m), specfun.ellip_E(m)


def c011_first_form(r: float, c000: float | None = None) -> float:
    """c_011 with Pi at characteristic 4r/((r+3)(r-1)); that characteristic tends to 1 as r -> 3."""
    _check_r(r)
    c000 = c000_hypergeom(r) if c000 is None else c000
    m, K, E = _kep(r)
    n = 4 * r / ((r + 3) * (r - 1))
    num = ((r ** 4 - 2 * r * r - 15) * K - (r + 3) * (r - 1) ** 3 * E
           - 4 * (r - 3) * (r + 1) * specfun.ellip_Pi(n, m))
    return (c000 - 1) / 3 + num / (4 * math.pi * (r - 1) * math.sqrt((r + 3) * (r - 1)))


def c011_second_form(r: float, c000: float | None = None) -> float:
    """c_011 with Pi at characteristic 4/(r-1)^2, which stays well below 1 for r > 3."""
    _check_r(r)
    c000 = c000_hypergeom(r) if c000 is None else c000
    m, K, E = _kep(r)
    n = 4 / (r - 1) ** 2
    num = ((r + 3) * (r - 1) ** 3 * (K - E)
           + 4 * (r - 3) * (r + 1) * specfun.ellip_Pi(n, m))
    return ((c000 - 1) / 3 - 0.5
            + num / (4 * math.pi * (r - 1) * math.sqrt((r + 3) * (r - 1))))


def orbit_key(index: Iterable[int]) -> tuple[int, ...]:
    """Canonical representative of an index under permutations and negation."""
    j = tuple(sorted(index))
    neg = tuple(sorted(-x for x in j))
    return min(j, neg)


class CoeffTable3(dict):
    """Coefficients c_J of the d = 3 density, keyed by index tuples.

    Stored per orbit (see orbit_key); lookups accept any member of the orbit.
    """

    def __init__(self, r: float, orbits: dict | None = None, methods: dict | None = None):
        super().__init__({orbit_key(k): v for k, v in (orbits or {}).items()})
        self.r = r
        self.methods = {orbit_key(k): v for k, v in (methods or {}).items()}

    def __getitem__(self, index):
        return super().__getitem__(orbit_key(index))

    def __contains__(self, index):
        return super().__contains__(orbit_key(index))

    def get(self, index, default=None):
        return super().get(orbit_key(index), default)

    def method(self, index) -> str:
        return self.methods.get(orbit_key(index), "closedform")

    def indices(self, shell: int) -> list[Index3]:
        """All known indices with max-norm <= shell, in lexicographic order."""
        rng = range(-shell, shell + 1)
        return [J for J in itertools.product(rng, rng, rng) if J in self]


UNIT_CUBE_ORBITS = {
    (0, 0, 0): "c000",
    (0, 0, 1): "c100",
    (0, 1, 1): "c011",
    (-1, 0, 1): "c01m1",
    (1, 1, 1): "c111",
    (-1, 1, 1): "c11m1",
}


def coeffs_d3_unitcube(r: float) -> CoeffTable3:
    """The full table on {-1, 0, 1}^3 for p = 1 - (z_1 + z_2 + z_3)/r."""
    _check_r(r)
    c000 = c000_hypergeom(r)
    c001 = r / 3 * (c000 - 1)
    c011 = c011_second_form(r, c000)
    values = {
        (0, 0, 0): c000,
        (0, 0, 1): c001,
        (0, 1, 1): c011,
        (1, 1, 1): 3 / r * c011,
        (-1, 0, 1): (r * c001 - c000) / 2,
        (-1, 1, 1): r * c011 - 2 * c001,
    }
    methods = {k: "closedform" for k in values}
    methods[(0, 0, 0)] = "hypergeom"
    return CoeffTable3(r, values, methods)


def _grid_integral(f, n: int) -> float:
    return torus_integral(f, TorusGrid(1, n))


def c100_integral(r: float, n: int = 512) -> float:
    _check_r(r)

    def f(t):
        u = r * r - 2 * r * np.cos(t) + 1
        v = r * r - 2 * r * np.cos(t) - 3
        return r * r / 2 * (r - np.cos(t)) / (np.sqrt(u) * np.sqrt(v))

    return -r / 2 + _grid_integral(f, n)


def cm110_integral(r: float, n: int = 512) -> float:
    _check_r(r)

    def f(t):
        q = (r * r - 2 * r * np.cos(t) - 3) / (r * r - 2 * r * np.cos(t) + 1)
        return r * r / 4 * (np.sqrt(q) - 2 + 1 / np.sqrt(q))

    return _grid_integral(f, n)


def c011_integral(r: float, n: int = 512) -> float:
    _check_r(r)

    def f(t):
        u = r * r + 1 - 2 * r * np.cos(t)
        v = r * r - 3 - 2 * r * np.cos(t)
        return r * r / 2 * (r * np.cos(t) - np.cos(2 * t)) / (np.sqrt(u) * np.sqrt(v))

    return -0.5 + _grid_integral(f, n)


# d = 2

def coeff_d2(r: float, k1: int, k2: int, tol: float = 1e-15) -> float:
    """Fourier coefficient c_{k1,k2} of |1 - (z_1 + z_2)/r|^{-2}, r > 2."""
    _check_r(r, 2)
    a1, a2 = abs(k1), abs(k2)
    total = a1 + a2
    if k1 * k2 <= 0:
        return (r / 2 - math.sqrt(r * r / 4 - 1)) ** total / math.sqrt(1 - 4 / (r * r))
    hyp = specfun.hyp3f2(1, total / 2 + 1, (total + 1) / 2, a1 + 1, a2 + 1, 4 / (r * r), tol)
    return math.comb(total, a1) / r ** total * hyp


# recurrence

def _relation_terms(J: Index3, r: float) -> list[tuple[Index3, float]]:
    k, l, m = J
    return [(J, 1.0), ((k - 1, l, m), -1 / r), ((k, l - 1, m), -1 / r), ((k, l, m - 1), -1 / r)]


def _in_negative_orthant(J: Index3) -> bool:
    return all(x <= 0 for x in J)


def recurrence_extend(table: CoeffTable3, r: float, shell: int) -> CoeffTable3:
    """Extend a complete unit-cube table to every index with max-norm <= shell
    that the linear relations determine.

    Each relation ties four coefficients together.  After grouping its terms
    by orbit, a relation with exactly one unknown orbit (with nonzero net
    weight) determines that orbit.  Relations are swept in increasing
    max-norm order, then lexicographically, until a sweep adds nothing.
    Indices left unresolved are absent from the result; use
    ``lookup_d3`` to get an Underdetermined error for them.
    """
    _check_r(r)
    missing = [J for J in UNIT_CUBE_ORBITS if J not in table]
    if missing:
        raise ValueError(f"seed table lacks {missing}")
    known = dict(dict.items(table))
    methods = dict(table.methods)
    methods.update({key: "closedform" for key in known if key not in methods})
    rng = range(-shell, shell + 1)
    sites = sorted((J for J in itertools.product(rng, rng, rng) if not _in_negative_orthant(J)),
                   key=lambda J: (max(map(abs, J)), J))
    # a relation is usable only if every index it touches lies in the box
    relations = []
    for J in sites:
        terms = _relation_terms(J, r)
        if all(max(map(abs, idx)) <= shell for idx, _ in terms):
            grouped: dict[tuple[int, ...], float] = {}
            for idx, w in terms:
                key = orbit_key(idx)
                grouped[key] = grouped.get(key, 0.0) + w
            relations.append(grouped)

    progress = True
    while progress:
        progress = False
        for grouped in relations:
            unknown = [key for key, w in grouped.items() if key not in known and w != 0.0]
            if len(unknown) != 1:
                continue
            target = unknown[0]
            rest = math.fsum(w * known[key] for key, w in grouped.items()
                             if key != target and w != 0.0)
            known[target] = -rest / grouped[target]
            methods[target] = "recurrence"
            progress = True
    return CoeffTable3(r, known, methods)


def lookup_d3(table: CoeffTable3, index: Index3) -> float:
    if index not in table:
        raise Underdetermined(
            f"c_{tuple(index)} is not determined by the unit-cube table and the recurrence")
    return table[index]
