"""Physicists' Hermite polynomials, Gauss-Hermite rules for the Gaussian
probability measure dgamma(x) = pi^(-1/2) exp(-x^2) dx, and numerical
checks of the classical Hermite identities.

Evaluation always uses the three-term recurrence
H_{n+1} = 2x H_n - 2n H_{n-1}; the normalized functions
h_n = H_n / sqrt(2^n n!) use the rescaled recurrence so that neither
H_n nor 2^n n! is formed for large n.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .combinatorics import MultiIndex


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def hermite_all(n_max: int, x, normalized: bool = False) -> np.ndarray:
    """Array of shape (n_max + 1, *shape(x)) holding H_0..H_{n_max} (or h_n)."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max == 0:
        return out
    if normalized:
        out[1] = math.sqrt(2.0) * x
        for n in range(1, n_max):
            out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    else:
        out[1] = 2.0 * x
        for n in range(1, n_max):
            out[n + 1] = 2.0 * x * out[n] - 2.0 * n * out[n - 1]
    return out


def hermite(n: int, x):
    """H_n(x); scalar in, float out, array in, array out."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    arr, scalar = _as_array(x)
    prev = np.ones_like(arr)
    if n == 0:
        return float(prev) if scalar else prev
    cur = 2.0 * arr
    for k in range(1, n):
        prev, cur = cur, 2.0 * arr * cur - 2.0 * k * prev
    return float(cur) if scalar else cur


def hermite_normalized(n: int, x):
    """h_n(x) = H_n(x) / sqrt(2^n n!)."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    arr, scalar = _as_array(x)
    prev = np.ones_like(arr)
    if n == 0:
        return float(prev) if scalar else prev
    cur = math.sqrt(2.0) * arr
    for k in range(1, n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * arr * cur - math.sqrt(k / (k + 1)) * prev
    return float(cur) if scalar else cur


def hermite_derivative(n: int, x):
    """H_n'(x) = 2n H_{n-1}(x)."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    if n == 0:
        arr, scalar = _as_array(x)
        return 0.0 if scalar else np.zeros_like(arr)
    return 2.0 * n * hermite(n - 1, x)


def normalization(n: int) -> float:
    """sqrt(2^n n!) from the exact integer, then rounded."""
    return math.sqrt(2**n * math.factorial(n))


def hermite_multi(alpha: Sequence[int], x: Sequence[float], normalized: bool = False) -> float:
    """Tensor product prod_i H_{alpha_i}(x_i), or prod_i h_{alpha_i}(x_i)."""
    alpha = MultiIndex(alpha)
    x = tuple(float(v) for v in x)
    if len(x) != alpha.d:
        raise ValueError(f"point has dimension {len(x)}, multi-index has {alpha.d}")
    f = hermite_normalized if normalized else hermite
    out = 1.0
    for a, xi in zip(alpha, x):
        out *= f(a, xi)
    return out


@dataclass(frozen=True)
class HermiteBasisSpec:
    max_degree: int
    normalized: bool = True

    def __post_init__(self):
        if self.max_degree < 0:
            raise ValueError("max_degree must be non-negative")

    def constants(self) -> np.ndarray:
        return np.array([normalization(n) for n in range(self.max_degree + 1)])

    def evaluate(self, x) -> np.ndarray:
        return hermite_all(self.max_degree, x, normalized=self.normalized)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Hermite rule normalized to the probability measure dgamma."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))

    def tensor(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Full tensor grid: nodes of shape (order**d, d) and matching weights."""
        if d < 1:
            raise ValueError("d must be at least 1")
        grids = np.meshgrid(*([self.nodes] * d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([self.weights] * d), indexing="ij")
        w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return pts, w


def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Nodes at the roots of H_order, weights summing to one."""
    if order < 1:
        raise ValueError("quadrature order must be at least 1")
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    weights = weights / math.sqrt(math.pi)
    # enforce exact symmetry
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order, nodes, weights)


def check_orthonormality(n_max: int, rule: QuadratureRule) -> float:
    """max_{m,n <= n_max} |int h_m h_n dgamma - delta_mn| under ``rule``.

    Exact up to rounding once rule.order > n_max.
    """
    if rule.order <= n_max:
        raise ValueError(f"rule order {rule.order} cannot integrate degree {2 * n_max}")
    h = hermite_all(n_max, rule.nodes, normalized=True)
    gram = (h * rule.weights) @ h.T
    return float(np.max(np.abs(gram - np.eye(n_max + 1))))


def check_generating_function(x: float, t: float, n_trunc: int) -> float:
    """|sum_{n<=n_trunc} H_n(x) t^n / n! - exp(2tx - t^2)|."""
    if abs(t) > 1:
        raise ValueError("|t| must be at most 1")
    if n_trunc < 1:
        raise ValueError("n_trunc must be at least 1")
    h = hermite_all(n_trunc, x, normalized=False)
    total = 0.0
    coef = 1.0
    for n in range(n_trunc + 1):
        if n:
            coef *= t / n
        total += h[n] * coef
    return abs(total - math.exp(2 * t * x - t * t))


def _hermite_mp(n: int, x) -> list:
    prev, cur = mpmath.mpf(1), 2 * x
    out = [prev, cur]
    for k in range(1, n):
        prev, cur = cur, 2 * x * cur - 2 * k * prev
        out.append(cur)
    return out[: n + 1]


def check_binomial_identity(n: int, x: float, y: float, dps: int = 60) -> float:
    """Residual of H_n(x+y) = sum_k C(n,k) (2y)^(n-k) H_k(x), scaled by max(1, |H_n(x+y)|).

    Both sides are evaluated in ``dps``-digit arithmetic: for x + y near 0
    the right-hand terms reach (2|y|)^n while the sum stays near H_n(0),
    which no double-precision evaluation can resolve.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    with mpmath.workdps(dps):
        xm, ym = mpmath.mpf(x), mpmath.mpf(y)
        lhs = _hermite_mp(n, xm + ym)[n]
        hx = _hermite_mp(n, xm)
        rhs = mpmath.fsum(math.comb(n, k) * (2 * ym) ** (n - k) * hx[k] for k in range(n + 1))
        return float(abs(lhs - rhs) / max(1, abs(lhs)))


def check_integral_representation(n: int, x: float, rule: QuadratureRule) -> float:
    """Deviation of the Fourier-type integral formula from H_n(x), relative to max(1, |H_n(x)|).

    The formula is (-2i)^n e^{x^2} pi^{-1/2} int xi^n e^{2ix xi} e^{-xi^2} dxi.
    The oscillating factor is not polynomial, so the rule order has to be
    generous (it must reach at least n + 5).

    The imaginary part must cancel to 1e-10 of the size of the summed terms,
    2^n e^{x^2} sum_k w_k |xi_k|^n; at odd n and x = 0 the exact value is 0
    while the terms reach 1e11, so no fixed absolute threshold is attainable.
    """
    if rule.order < n + 5:
        raise ValueError(f"rule order {rule.order} too small for n={n}")
    xi = rule.nodes
    vals = xi**n * np.exp(2j * x * xi)
    integral = complex(np.dot(rule.weights, vals))
    value = (-2j) ** n * cmath.exp(x * x) * integral
    scale = 2.0**n * math.exp(x * x) * float(np.dot(rule.weights, np.abs(xi) ** n))
    if abs(value.imag) > 1e-10 * max(scale, abs(value.real)):
        raise ArithmeticError(f"imaginary part {value.imag:.3e} did not cancel")
    ref = hermite(n, x)
    return abs(value.real - ref) / max(1.0, abs(ref))


def central_difference(f: Callable[[float], float], t: float, N: int, h: float, levels: int = 3) -> float:
    """N-th derivative of f at t by central differences, Richardson-extrapolated.

    The base stencil is sum_k (-1)^k C(N,k) f(t + (N/2 - k) h) / h^N, whose
    error expands in even powers of h. Steps h, 2h, 4h, ... are combined,
    so the smallest step (and the round-off floor) is ``h``.
    """
    if N == 0:
        return f(t)
    coeffs = [(-1) ** k * math.comb(N, k) for k in range(N + 1)]

    def delta(step: float) -> float:
        return sum(c * f(t + (N / 2 - k) * step) for k, c in enumerate(coeffs)) / step**N

    table = [delta(h * 2**i) for i in range(levels)]
    # table[i] uses step h * 2^i; eliminate h^2, h^4, ... towards the finest
    for level in range(1, levels):
        r = 4.0**level
        table = [(r * table[i] - table[i + 1]) / (r - 1) for i in range(len(table) - 1)]
    return table[0]


def check_generating_derivative(N: int, x: float, t: float, h: float = 1e-2, levels: int = 3) -> float:
    """Compare d^N/dt^N exp(-(x-t)^2 + x^2) with exp(-(x-t)^2 + x^2) H_N(x - t).

    Returned as |fd - exact| / max(|exact|, g(t)), g being the generating
    function itself; the exact side can vanish (N = 1, x = t).
    """
    if not 1 <= N <= 4:
        raise ValueError("finite differences are only trusted for 1 <= N <= 4")

    def g(s: float) -> float:
        return math.exp(2 * x * s - s * s)

    exact = g(t) * hermite(N, x - t)
    fd = central_difference(g, t, N, h, levels)
    return abs(fd - exact) / max(abs(exact), g(t))


def rodrigues_coefficients(n: int) -> list[int]:
    """Integer coefficients (ascending) of (-1)^n e^{x^2} d^n/dx^n e^{-x^2}.

    Uses d/dx [p e^{-x^2}] = (p' - 2x p) e^{-x^2}.
    """
    p = [1]
    for _ in range(n):
        dp = [k * p[k] for k in range(1, len(p))] + [0, 0]
        shifted = [0] + [2 * c for c in p]
        p = [dp[k] - shifted[k] for k in range(len(p) + 1)]
    sign = -1 if n % 2 else 1
    return [sign * c for c in p]


def recurrence_coefficients(n: int) -> list[int]:
    """Integer coefficients (ascending) of H_n from the three-term recurrence."""
    prev, cur = [1], [0, 2]
    if n == 0:
        return prev
    for k in range(1, n):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= 2 * k * c
        prev, cur = cur, nxt
    return cur


def ou_generator_coefficients(coeffs: Sequence[int]) -> list[Fraction]:
    """Coefficients of (1/2) p'' - x p' for p with ascending ``coeffs``."""
    n = len(coeffs)
    out = [Fraction(0)] * n
    for k, c in enumerate(coeffs):
        if k >= 2:
            out[k - 2] += Fraction(k * (k - 1) * c, 2)
        if k >= 1:
            out[k] -= k * c
    return out
