"""Applying L^N e^{tL} to functions by quadrature against the kernel M_t^N.

With y = e^{-t} x + sqrt(1 - e^{-2t}) z, the measure M_t(x, y) dgamma(y)
becomes dgamma(z) exactly (the e^{|y|^2} factor of the Mehler kernel
cancels the Gaussian weight). So

    L^N e^{tL} u(x) = int B_N(x, e^{-t}x + a z) u(e^{-t}x + a z) dgamma(z),

where B_N = M_t^N / M_t is a polynomial of degree 2N in z per coordinate.
For polynomial u a Gauss-Hermite rule of moderate order is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .combinatorics import MultiIndex, compositions, multinomial
from .hermite import QuadratureRule, hermite_all, hermite_normalized
from .kernels import DomainError, bracket_sum_array, mtn_closed_array, time_constants, _check_time


@dataclass(frozen=True)
class SampledFunction:
    """A deterministic function of d-vectors, evaluated on arrays of shape (n, d).

    Quadrature against dgamma is only meaningful for at most polynomial
    growth; ``growth_note`` records what the caller assumes.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    d: int
    growth_note: str = "polynomial growth"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be at least 1")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(pts), dtype=float)


def hermite_function(alpha: Sequence[int]) -> SampledFunction:
    """h_alpha as a SampledFunction."""
    alpha = MultiIndex(alpha)

    def f(pts: np.ndarray) -> np.ndarray:
        out = np.ones(pts.shape[:-1])
        for i, a in enumerate(alpha):
            out = out * hermite_normalized(a, pts[..., i])
        return out

    return SampledFunction(f, alpha.d, "polynomial")


def constant_function(value: float, d: int) -> SampledFunction:
    return SampledFunction(lambda pts: np.full(pts.shape[:-1], float(value)), d, "polynomial")


def apply_semigroup_derivative(
    u: SampledFunction, t: float, N: int, x: Sequence[float], rule: QuadratureRule
) -> float:
    """Tensor-quadrature value of int M_t^N(x, y) u(y) dgamma(y)."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != u.d:
        raise DomainError(f"point has dimension {x.size}, function has {u.d}")
    s, a2, _ = time_constants(t)
    z, w = rule.tensor(u.d)
    ys = s * x + math.sqrt(a2) * z
    xs = np.broadcast_to(x, ys.shape)
    vals = u(ys)
    if N:
        vals = vals * bracket_sum_array(t, N, xs, ys)
    return float(np.dot(w, vals))


def eigenfunction_check(
    alpha: Sequence[int],
    t: float,
    N: int,
    x_points: Sequence[Sequence[float]],
    rule: QuadratureRule,
) -> float:
    """max_x |L^N e^{tL} h_alpha(x) - (-|alpha|)^N e^{-t|alpha|} h_alpha(x)| / max(1, |h_alpha(x)|)."""
    alpha = MultiIndex(alpha)
    u = hermite_function(alpha)
    k = alpha.order
    eig = (-k) ** N * math.exp(-t * k)
    worst = 0.0
    for x in x_points:
        x = np.asarray(x, dtype=float).reshape(-1)
        got = apply_semigroup_derivative(u, t, N, x, rule)
        h = float(u(x[None, :])[0])
        worst = max(worst, abs(got - eig * h) / max(1.0, abs(h)))
    return worst


def multinomial_reduction_check(alpha: Sequence[int], t: float, N: int, x: Sequence[float]) -> float:
    """Relative gap between |alpha|^N e^{-t|alpha|} prod h and its multinomial expansion."""
    alpha = MultiIndex(alpha)
    x = [float(v) for v in x]
    if len(x) != alpha.d:
        raise ValueError("dimension mismatch")
    hs = [hermite_normalized(a, xi) for a, xi in zip(alpha, x)]
    lhs = alpha.order**N * math.exp(-t * alpha.order) * math.prod(hs)
    rhs = 0.0
    for comp in compositions(N, alpha.d):
        term = float(multinomial(N, comp))
        for a, n, h in zip(alpha, comp, hs):
            term *= a**n * math.exp(-t * a) * h
        rhs += term
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else abs(lhs - rhs) / scale


def semigroup_composition(
    s: float, N: int, t: float, M: int, x: Sequence[float], y: Sequence[float], rule: QuadratureRule
) -> tuple[float, float]:
    """(int M_s^N(x, z) M_t^M(z, y) dgamma(z), M_{s+t}^{N+M}(x, y)).

    The first kernel is absorbed into the measure as in
    :func:`apply_semigroup_derivative`; the second is smooth in z.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    d = x.size
    es, a2s, _ = time_constants(_check_time(s))
    w_nodes, w = rule.tensor(d)
    zs = es * x + math.sqrt(a2s) * w_nodes
    vals = mtn_closed_array(t, M, zs, np.broadcast_to(y, zs.shape))
    if N:
        vals = vals * bracket_sum_array(s, N, np.broadcast_to(x, zs.shape), zs)
    lhs = float(np.dot(w, vals))
    rhs = float(mtn_closed_array(s + t, N + M, x, y))
    return lhs, rhs


def hermite_expansion_apply(coeffs: Sequence[float], t: float, N: int, x: float) -> float:
    """L^N e^{tL} of sum_n c_n h_n at x, straight from the eigenvalues."""
    h = hermite_all(len(coeffs) - 1, x, normalized=True)
    return float(sum(c * (-n) ** N * math.exp(-t * n) * h[n] for n, c in enumerate(coeffs)))
