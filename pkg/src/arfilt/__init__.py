"""Autoregressive filters for degree-one symmetric polynomials in d variables.

Forward map (Fourier coefficients of 1/|1 - s(z_1 + ... + z_d)|^2), the
inverse problem from two autocorrelations, and the special functions needed
for the closed forms.
"""

from .errors import (ArfiltError, DomainError, Infeasible, InternalError, NoBracket,
                     NonConvergent, NonFinite, NotPositiveDefinite, ResourceLimit,
                     SingularMatrix, SingularSystem, Underdetermined, UnstableInput)
from .series import SeriesParams, forward_abc, fourier_coeff_series, gamma_d
from .solver import CovarianceData, SolveResult, solve

__version__ = "0.1.0"

__all__ = [
    "ArfiltError", "CovarianceData", "DomainError", "Infeasible", "InternalError",
    "NoBracket", "NonConvergent", "NonFinite", "NotPositiveDefinite", "ResourceLimit",
    "SeriesParams", "SingularMatrix", "SingularSystem", "SolveResult", "Underdetermined",
    "UnstableInput", "forward_abc", "fourier_coeff_series", "gamma_d", "solve",
]
