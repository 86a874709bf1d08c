"""Integral kernels of L^N e^{tL} for the Ornstein-Uhlenbeck operator
L = (1/2) Laplacian - <x, grad>, taken with respect to the Gaussian
measure dgamma.

Closed form in one dimension (s = e^{-t}, a^2 = 1 - e^{-2t},
sigma = s / a, beta = (s x - y) / a):

    M_t^N(x, y) = M_t(x, y) sum_{m=0}^N sum_{l=0}^m (-1)^(N+m) S(N, m) C(m, l)
                  2^(-m) sigma^(2m-l) H_l(x) H_{2m-l}(beta)

and in d dimensions the multinomial sum over compositions n of N of the
products of one-dimensional brackets, times the d-dimensional Mehler
kernel. The sign (-1)^(N+m), the positive sigma and the argument x of
H_l were fixed by matching the spectral series
sum_alpha (-|alpha|)^N e^{-t|alpha|} h_alpha(x) h_alpha(y); see
docs/closed_form.md for the derivation.

Two independent oracles live here as well: the spectral series (double
precision, or mpmath for points where the series cancels heavily) and
Richardson-extrapolated finite differences in t of the Mehler kernel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .combinatorics import compositions, multinomial, stirling2
from .hermite import hermite_all

MIN_TIME = 1e-6
# Cramer's inequality for the dgamma-normalized Hermite functions:
# |h_n(x)| <= CRAMER * exp(x^2 / 2).
CRAMER = 1.086435


class DomainError(ValueError):
    """A kernel query outside the domain where the kernels are defined."""


def _check_time(t: float) -> float:
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    if t < MIN_TIME:
        raise DomainError(f"t must be at least {MIN_TIME:g} (kernels are singular as t -> 0)")
    return t


def _vector(v) -> tuple[float, ...]:
    if np.ndim(v) == 0:
        return (float(v),)
    return tuple(float(c) for c in v)


@dataclass(frozen=True)
class KernelQuery:
    """One evaluation of M_t^N(x, y); scalars are promoted to 1-vectors."""

    t: float
    N: int
    x: tuple[float, ...]
    y: tuple[float, ...]
    d: int | None = None

    def __post_init__(self):
        x, y = _vector(self.x), _vector(self.y)
        if len(x) != len(y):
            raise DomainError(f"x has length {len(x)} but y has length {len(y)}")
        if self.d is not None and self.d != len(x):
            raise DomainError(f"d={self.d} does not match point length {len(x)}")
        if int(self.N) != self.N or self.N < 0:
            raise DomainError("N must be a non-negative integer")
        object.__setattr__(self, "t", _check_time(self.t))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", len(x))


@dataclass(frozen=True)
class OracleControls:
    """Numerical knobs for the two oracles.

    ``trunc=None`` picks the spectral cut-off from the geometric tail;
    ``dps`` switches the spectral oracle to mpmath with that many digits
    (raised automatically if cancellation eats into it).
    ``fd_step=None`` picks the finite-difference step from the local
    time scale of the Mehler kernel.
    """

    trunc: int | None = None
    fd_step: float | None = None
    fd_richardson_levels: int = 5
    dps: int | None = None

    def __post_init__(self):
        if self.trunc is not None and self.trunc < 1:
            raise ValueError("trunc must be positive")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.fd_richardson_levels < 1:
            raise ValueError("fd_richardson_levels must be at least 1")


# ---------------------------------------------------------------------------
# vectorized closed form; points are arrays of shape (..., d)


def _points(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1:] != y.shape[-1:]:
        raise DomainError("x and y must have the same dimension")
    return x, y


def time_constants(t: float) -> tuple[float, float, float]:
    """(e^{-t}, 1 - e^{-2t}, e^{-t} / sqrt(1 - e^{-2t})), the middle one via expm1."""
    s = math.exp(-t)
    a2 = -math.expm1(-2.0 * t)
    return s, a2, s / math.sqrt(a2)


def log_mehler_array(t: float, x, y) -> np.ndarray:
    """log M_t(x, y) for points with trailing axis d."""
    x, y = _points(x, y)
    s, a2, _ = time_constants(t)
    d = x.shape[-1]
    q = np.sum((s * x - y) ** 2, axis=-1)
    return -q / a2 + np.sum(y * y, axis=-1) - 0.5 * d * math.log(a2)


def mehler_array(t: float, x, y) -> np.ndarray:
    return np.exp(log_mehler_array(t, x, y))


@lru_cache(maxsize=None)
def _bracket_coefficients(N: int) -> tuple[tuple[int, int, float], ...]:
    """(m, l, (-1)^(N+m) S(N,m) C(m,l) 2^-m) for the nonzero terms."""
    out = []
    for m in range(N + 1):
        S = stirling2(N, m)
        if not S:
            continue
        for l in range(m + 1):
            c = (-1) ** (N + m) * S * math.comb(m, l) / 2.0**m
            out.append((m, l, c))
    return tuple(out)


def _bracket_terms(t: float, N: int, x: np.ndarray, y: np.ndarray, with_dx: bool):
    s, a2, sigma = time_constants(t)
    beta = (s * x - y) / math.sqrt(a2)
    hx = hermite_all(max(N, 1), x)
    hb = hermite_all(2 * N + 1, beta)
    val = np.zeros(np.broadcast(x, y).shape)
    dval = np.zeros_like(val) if with_dx else None
    for m, l, c in _bracket_coefficients(N):
        k = 2 * m - l
        w = c * sigma**k
        val = val + w * hx[l] * hb[k]
        if with_dx:
            # d/dx H_l(x) = 2l H_{l-1}(x); d/dx H_k(beta) = 2k H_{k-1}(beta) sigma
            term = 0.0
            if l:
                term = term + 2 * l * hx[l - 1] * hb[k]
            if k:
                term = term + hx[l] * 2 * k * hb[k - 1] * sigma
            dval = dval + w * term
    return val, dval


def bracket_1d(t: float, N: int, x, y) -> np.ndarray:
    """M_t^N / M_t in one dimension (arrays broadcast elementwise)."""
    t = _check_time(t)
    val, _ = _bracket_terms(t, N, np.asarray(x, float), np.asarray(y, float), False)
    return val


def bracket_1d_dx(t: float, N: int, x, y) -> np.ndarray:
    """d/dx of :func:`bracket_1d`."""
    t = _check_time(t)
    _, dval = _bracket_terms(t, N, np.asarray(x, float), np.asarray(y, float), True)
    return dval


def _coordinate_brackets(t, N, x, y, with_dx=False):
    d = x.shape[-1]
    vals, dvals = [], []
    for i in range(d):
        vi, di = [], []
        for n in range(N + 1):
            v, dv = _bracket_terms(t, n, x[..., i], y[..., i], with_dx)
            vi.append(v)
            di.append(dv)
        vals.append(vi)
        dvals.append(di)
    return vals, dvals


def bracket_sum_array(t: float, N: int, x, y) -> np.ndarray:
    """M_t^N / M_t in d dimensions: sum over compositions of products of brackets."""
    t = _check_time(t)
    x, y = _points(x, y)
    vals, _ = _coordinate_brackets(t, N, x, y)
    total = np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1])
    for comp in compositions(N, x.shape[-1]):
        prod = float(multinomial(N, comp))
        for i, n in enumerate(comp):
            prod = prod * vals[i][n]
        total = total + prod
    return total


def mtn_closed_array(t: float, N: int, x, y) -> np.ndarray:
    """Vectorized closed-form M_t^N(x, y) over points of shape (..., d)."""
    t = _check_time(t)
    if N == 0:
        return mehler_array(t, x, y)
    return mehler_array(t, x, y) * bracket_sum_array(t, N, x, y)


def mtn_closed_factorized_array(t: float, N: int, x, y) -> np.ndarray:
    """Second assembly: sum_n multinomial prod_i M_t^{n_i}(x_i, y_i) with 1-d kernels."""
    t = _check_time(t)
    x, y = _points(x, y)
    d = x.shape[-1]
    ones = []
    for i in range(d):
        xi, yi = x[..., i : i + 1], y[..., i : i + 1]
        m1 = mehler_array(t, xi, yi)
        ones.append([m1 * bracket_1d(t, n, xi[..., 0], yi[..., 0]) for n in range(N + 1)])
    total = np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1])
    for comp in compositions(N, d):
        prod = float(multinomial(N, comp))
        for i, n in enumerate(comp):
            prod = prod * ones[i][n]
        total = total + prod
    return total


def bracket_sum_dx_array(t: float, N: int, x, y, j: int) -> np.ndarray:
    """(d/dx_j M_t^N) / M_t; ``j`` is 0-based. Finite where M_t underflows."""
    t = _check_time(t)
    x, y = _points(x, y)
    d = x.shape[-1]
    if not 0 <= j < d:
        raise DomainError(f"coordinate index out of range for d={d}")
    s, a2, sigma = time_constants(t)
    vals, dvals = _coordinate_brackets(t, N, x, y, with_dx=True)
    shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
    total = np.zeros(shape)
    dtotal = np.zeros(shape)
    for comp in compositions(N, d):
        prod = float(multinomial(N, comp))
        dprod = prod
        for i, n in enumerate(comp):
            prod = prod * vals[i][n]
            dprod = dprod * (dvals[i][n] if i == j else vals[i][n])
        total = total + prod
        dtotal = dtotal + dprod
    beta_j = (s * x[..., j] - y[..., j]) / math.sqrt(a2)
    # d/dx_j M_t = -2 sigma beta_j M_t
    return dtotal - 2.0 * sigma * beta_j * total


def mtn_closed_dx_array(t: float, N: int, x, y, j: int) -> np.ndarray:
    """d/dx_j M_t^N(x, y); ``j`` is 0-based here."""
    return mehler_array(t, x, y) * bracket_sum_dx_array(t, N, x, y, j)


# ---------------------------------------------------------------------------
# scalar, query-based API


def mehler(q: KernelQuery) -> float:
    """M_t(x, y) = (1 - e^{-2t})^{-d/2} exp(-|e^{-t}x - y|^2 / (1 - e^{-2t})) e^{|y|^2}."""
    return float(mehler_array(q.t, np.array(q.x), np.array(q.y)))


def mtn_closed_1d(t: float, N: int, x: float, y: float) -> float:
    t = _check_time(t)
    val = mehler_array(t, np.array([x], float), np.array([y], float))
    if N == 0:
        return float(val)
    return float(val * bracket_1d(t, N, float(x), float(y)))


def mtn_closed(q: KernelQuery) -> float:
    """Closed-form M_t^N(x, y) in any dimension."""
    return float(mtn_closed_array(q.t, q.N, np.array(q.x), np.array(q.y)))


def mtn_closed_factorized(q: KernelQuery) -> float:
    return float(mtn_closed_factorized_array(q.t, q.N, np.array(q.x), np.array(q.y)))


# ---------------------------------------------------------------------------
# spectral oracle


def default_trunc(t: float, N: int, d: int, eps: float = 1e-18) -> int:
    """Cut-off K with C(k+d-1, d-1) k^N e^{-tk} below ``eps`` and falling for k >= K.

    The bound multiplies exp((|x|^2 + |y|^2)/2) through Cramer's inequality,
    so it is an absolute error relative to that scale.
    """
    k = 1
    k_min = (N + d) / t
    while True:
        term = math.comb(k + d - 1, d - 1) * float(k) ** N * math.exp(-t * k)
        if k > k_min and term * CRAMER ** (2 * d) / (1 - math.exp(-t / 2)) < eps:
            return k
        k += 1
        if k > 1_000_000:
            raise RuntimeError("spectral truncation does not converge")


def _spectral_double(t: float, N: int, x: Sequence[float], y: Sequence[float], trunc: int) -> float:
    graded = None
    for xi, yi in zip(x, y):
        c = hermite_all(trunc, xi, normalized=True) * hermite_all(trunc, yi, normalized=True)
        graded = c if graded is None else np.convolve(graded, c)[: trunc + 1]
    k = np.arange(trunc + 1, dtype=float)
    weights = np.exp(-t * k) * (-k) ** N
    return float(np.dot(weights, graded))


def _tail_bound(t: float, n: int, K: int) -> float:
    """Upper bound for sum_{k>K} k^n e^{-tk}, valid once the ratio test bites."""
    k = K + 1
    ratio = math.exp(-t) * (1 + 1 / k) ** n
    if ratio >= 1:
        return math.inf
    return float(k) ** n * math.exp(-t * k) / (1 - ratio)


@lru_cache(maxsize=4096)
def _spectral_1d_mp(t: float, N: int, x: float, y: float, dps: int) -> tuple:
    """sum_k (-k)^n e^{-tk} h_k(x) h_k(y) for n = 0..N, summed in mpmath.

    Stops when Cramer's tail bound is below 1e-25 of every partial sum; if
    the largest term exceeds the result by more digits than ``dps`` can
    absorb, the sum is redone at higher precision.
    """
    scale = CRAMER**2 * math.exp((x * x + y * y) / 2)
    while True:
        with mpmath.workdps(dps):
            xm, ym = mpmath.mpf(x), mpmath.mpf(y)
            decay = mpmath.exp(-mpmath.mpf(t))
            hx_prev, hx = mpmath.mpf(0), mpmath.mpf(1)
            hy_prev, hy = mpmath.mpf(0), mpmath.mpf(1)
            sums = [mpmath.mpf(0)] * (N + 1)
            biggest = [mpmath.mpf(0)] * (N + 1)
            e = mpmath.mpf(1)
            sqrt2 = mpmath.sqrt(2)
            k = 0
            while True:
                base = e * hx * hy
                for n in range(N + 1):
                    term = base * (-k) ** n if n else base
                    sums[n] += term
                    if abs(term) > biggest[n]:
                        biggest[n] = abs(term)
                if k > (N + 1) / t:
                    done = True
                    for n in range(N + 1):
                        tail = scale * _tail_bound(t, n, k)
                        if not (tail <= 1e-25 * float(abs(sums[n])) or tail < 1e-300):
                            done = False
                            break
                    if done:
                        break
                # advance the normalized recurrences to index k+1
                if k == 0:
                    hx_prev, hx = hx, sqrt2 * xm
                    hy_prev, hy = hy, sqrt2 * ym
                else:
                    c1 = mpmath.sqrt(mpmath.mpf(2) / (k + 1))
                    c0 = mpmath.sqrt(mpmath.mpf(k) / (k + 1))
                    hx_prev, hx = hx, c1 * xm * hx - c0 * hx_prev
                    hy_prev, hy = hy, c1 * ym * hy - c0 * hy_prev
                e *= decay
                k += 1
                if k > 2_000_000:
                    raise RuntimeError("spectral series did not converge")
            lost = 0.0
            for n in range(N + 1):
                if sums[n] != 0:
                    lost = max(lost, float(mpmath.log10(biggest[n] / abs(sums[n]))))
            if dps - lost >= 30:
                return tuple(sums)
        dps = int(lost) + 45


@lru_cache(maxsize=None)
def _composition_table(N: int, d: int) -> tuple:
    return tuple((mpmath.mpf(multinomial(N, c)), tuple(c)) for c in compositions(N, d))


def _spectral_mp(t: float, N: int, x: Sequence[float], y: Sequence[float], dps: int) -> float:
    # every coordinate series is summed up to order 4 at least, so one cache
    # entry serves all the usual derivative orders
    top = max(N, 4)
    per_coord = [_spectral_1d_mp(t, top, float(xi), float(yi), dps) for xi, yi in zip(x, y)]
    if len(per_coord) == 1:
        return float(per_coord[0][N])
    # (-|alpha|)^N = sum_n multinomial(N, n) prod_i (-alpha_i)^{n_i}
    with mpmath.workdps(40):
        total = mpmath.mpf(0)
        for coef, comp in _composition_table(N, len(per_coord)):
            prod = coef
            for i, n in enumerate(comp):
                prod *= per_coord[i][n]
            total += prod
        return float(total)


def mtn_spectral(q: KernelQuery, c: OracleControls = OracleControls()) -> float:
    """sum_{|alpha| <= trunc} (-|alpha|)^N e^{-t|alpha|} h_alpha(x) h_alpha(y).

    Double mode sums by total degree |alpha| (one convolution per extra
    coordinate). With ``c.dps`` set, each coordinate series is summed in
    mpmath to convergence and the coordinates are recombined through the
    multinomial expansion of |alpha|^N; ``c.trunc`` is ignored there.
    """
    if c.dps is not None:
        return _spectral_mp(q.t, q.N, q.x, q.y, c.dps)
    trunc = c.trunc if c.trunc is not None else default_trunc(q.t, q.N, q.d)
    if trunc < q.N + 5:
        raise ValueError("trunc must be at least N + 5")
    return _spectral_double(q.t, q.N, q.x, q.y, trunc)


def mehler_spectral(q: KernelQuery, c: OracleControls = OracleControls()) -> float:
    """The N = 0 spectral series sum_alpha e^{-t|alpha|} h_alpha(x) h_alpha(y)."""
    return mtn_spectral(KernelQuery(q.t, 0, q.x, q.y), c)


# ---------------------------------------------------------------------------
# finite-difference oracle


def _time_scale(t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rough rate of change of log M_s at s = t, plus 1/t for the singularity at 0."""
    dt = t / 20
    lp = log_mehler_array(t + dt, x, y)
    l0 = log_mehler_array(t, x, y)
    lm = log_mehler_array(t - dt, x, y)
    d1 = np.abs(lp - lm) / (2 * dt)
    d2 = np.abs(lp - 2 * l0 + lm) / dt**2
    return d1 + np.sqrt(d2) + 1.0 / t


def _mehler_shifted(t: float, delta: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """M_{t+delta}(x, y) in long double, never forming t + delta.

    A rounded abscissa t + delta is amplified by 1/h^N in the difference
    quotient, so the shift enters only through e^{-delta} and expm1.
    """
    LD = np.longdouble
    delta = np.asarray(delta, LD)
    x = np.asarray(x, LD)
    y = np.asarray(y, LD)
    et = np.exp(-LD(t))
    a2t = -np.expm1(-2 * LD(t))
    s = et * np.exp(-delta)
    a2 = a2t - et * et * np.expm1(-2 * delta)
    d = x.shape[-1]
    q = np.sum((s[..., None] * x - y) ** 2, axis=-1)
    return np.exp(-q / a2 + np.sum(y * y, axis=-1) - LD(0.5) * d * np.log(a2))


def mtn_finite_difference_array(
    t: float, N: int, x, y, step=None, levels: int = 5
) -> np.ndarray:
    """N-th central difference in t of the Mehler kernel, Richardson-extrapolated.

    ``step`` is the finest step (scalar or per point); by default
    0.04 / (local time scale), capped so the widest stencil stays within
    0.3 t of t. Steps are rounded down to powers of two so that every
    stencil offset is exact, and the kernel is evaluated in long double.
    """
    t = _check_time(t)
    x, y = _points(x, y)
    if N == 0:
        return mehler_array(t, x, y)
    reach = N / 2 * 2 ** (levels - 1)
    shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
    if step is None:
        step = np.minimum(0.04 / _time_scale(t, x, y), 0.3 * t / reach)
    step = np.broadcast_to(np.asarray(step, dtype=float), shape)
    if np.any(step <= 0) or np.any(t - reach * step <= 0):
        raise DomainError("finite-difference stencil leaves t > 0")
    step = np.exp2(np.floor(np.log2(step)))
    coeffs = [(-1) ** k * math.comb(N, k) for k in range(N + 1)]
    table = []
    for lev in range(levels):
        h = step * 2**lev
        acc = np.zeros(shape, dtype=np.longdouble)
        for k, ck in enumerate(coeffs):
            acc = acc + ck * _mehler_shifted(t, (N / 2 - k) * h, x, y)
        table.append(acc / np.asarray(h, np.longdouble) ** N)
    for level in range(1, levels):
        r = 4.0**level
        table = [(r * table[i] - table[i + 1]) / (r - 1) for i in range(len(table) - 1)]
    return table[0].astype(float)


def mtn_finite_difference(q: KernelQuery, c: OracleControls = OracleControls()) -> float:
    if q.N > 4:
        raise ValueError("finite differences are only trusted for N <= 4")
    return float(
        mtn_finite_difference_array(
            q.t, q.N, np.array(q.x), np.array(q.y), step=c.fd_step, levels=c.fd_richardson_levels
        )
    )


# ---------------------------------------------------------------------------
# scaled kernels K and K~


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 1:
        raise DomainError("alpha must be greater than 1")
    return alpha


def kernel_K(t: float, N: int, alpha: float, x, y) -> float:
    """Kernel of (t^2 L)^N e^{(t^2/alpha) L}: t^{2N} M_{t^2/alpha}^N(x, y)."""
    t = _check_time(t)
    alpha = _check_alpha(alpha)
    q = KernelQuery(t * t / alpha, N, x, y)
    return t ** (2 * N) * mtn_closed(q)


def kernel_K_tilde(t: float, N: int, alpha: float, j: int, x, y) -> float:
    """t d/dx_j of :func:`kernel_K`; ``j`` counts coordinates from 1."""
    t = _check_time(t)
    alpha = _check_alpha(alpha)
    q = KernelQuery(t * t / alpha, N, x, y)
    if not 1 <= j <= q.d:
        raise DomainError(f"j must lie in 1..{q.d}")
    dx = mtn_closed_dx_array(q.t, N, np.array(q.x), np.array(q.y), j - 1)
    return t ** (2 * N + 1) * float(dx)


# ---------------------------------------------------------------------------
# oracle agreement over a grid


def relative_deviation(value, reference) -> np.ndarray:
    """|value - reference| / |reference|; 0 where both vanish, inf where only the reference does."""
    value = np.asarray(value, dtype=float)
    reference = np.asarray(reference, dtype=float)
    diff = np.abs(value - reference)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = diff / np.abs(reference)
    return np.where(diff == 0, 0.0, out)


@dataclass
class AgreementSummary:
    comparisons: int = 0
    worst_spectral: float = 0.0
    worst_fd: float = 0.0
    worst_spectral_at: tuple = ()
    worst_fd_at: tuple = ()


def oracle_agreement_grid(
    dims: Sequence[int] = (1, 2, 3),
    orders: Sequence[int] = (0, 1, 2, 3, 4),
    times: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
    coords: Sequence[float] = (-3.0, -1.0, 0.0, 0.5, 2.0),
    dps: int = 30,
) -> AgreementSummary:
    """Closed form against both oracles on every (x, y) in coords^d x coords^d.

    Each point counts as one comparison per oracle.
    """
    out = AgreementSummary()
    for d in dims:
        pts = np.array(list(itertools.product(coords, repeat=2 * d)), dtype=float)
        x, y = pts[:, :d], pts[:, d:]
        for t in times:
            for N in orders:
                closed = mtn_closed_array(t, N, x, y)
                fd = mtn_finite_difference_array(t, N, x, y)
                spec = np.array(
                    [_spectral_mp(t, N, tuple(a), tuple(b), dps) for a, b in zip(x, y)]
                )
                ds = relative_deviation(closed, spec)
                df = relative_deviation(closed, fd)
                out.comparisons += 2 * len(x)
                i, k = int(np.argmax(ds)), int(np.argmax(df))
                if ds[i] > out.worst_spectral:
                    out.worst_spectral = float(ds[i])
                    out.worst_spectral_at = (d, t, N, tuple(map(float, x[i])), tuple(map(float, y[i])))
                if df[k] > out.worst_fd:
                    out.worst_fd = float(df[k])
                    out.worst_fd_at = (d, t, N, tuple(map(float, x[k])), tuple(map(float, y[k])))
    return out
