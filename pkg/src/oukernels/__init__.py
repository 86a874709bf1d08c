"""Closed-form kernels of L^N e^{tL} for the Ornstein-Uhlenbeck operator.

Modules:

* ``combinatorics``: Stirling numbers, multinomials, compositions.
* ``weyl``: exact normal ordering in the Weyl algebra.
* ``hermite``: Hermite polynomials, Gauss-Hermite rules, identity checks.
* ``kernels``: M_t^N in closed form plus spectral and finite-difference oracles.
* ``operator``: applying L^N e^{tL} to functions by quadrature.
* ``bounds``: kernel bounds for (t^2 L)^N e^{(t^2/alpha) L}.
"""

from .combinatorics import MultiIndex, compositions, multinomial, stirling2
from .hermite import gauss_hermite_rule, hermite_normalized
from .kernels import (
    DomainError,
    KernelQuery,
    OracleControls,
    kernel_K,
    kernel_K_tilde,
    mehler,
    mtn_closed,
    mtn_closed_array,
    mtn_finite_difference,
    mtn_spectral,
)
from .weyl import WeylElement

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "KernelQuery",
    "MultiIndex",
    "OracleControls",
    "WeylElement",
    "compositions",
    "gauss_hermite_rule",
    "hermite_normalized",
    "kernel_K",
    "kernel_K_tilde",
    "mehler",
    "mtn_closed",
    "mtn_closed_array",
    "mtn_finite_difference",
    "mtn_spectral",
    "multinomial",
    "stirling2",
]
