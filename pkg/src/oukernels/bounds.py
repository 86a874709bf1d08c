"""Kernel bounds for the scaled kernels K and K~ of (t^2 L)^N e^{(t^2/alpha) L}.

Three pieces:

* ``lemma62_check`` evaluates the two elementary inequalities comparing
  Gaussian exponents at times t/alpha and t, and reports the slacks.
* ``theorem63_sweep`` measures, over a grid with t|x| <= C, the ratio
  |K| / [alpha e^{alpha C^2/2} M_{t^2}(x, y) exp(-alpha/(8 e^{2T}) q_{t^2}(x, y))]
  with q_s = |e^{-s}x - y|^2 / (1 - e^{-2s}). The implied constant is not
  known in closed form, so the report exhibits it.
* ``calderon_constant`` integrates (t^2 n)^{N+1} e^{-t^2 n / alpha} dt/t,
  which must not depend on the eigenvalue n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import integrate

from .hermite import central_difference
from .kernels import DomainError, bracket_sum_array, bracket_sum_dx_array, mtn_closed_array, mtn_closed_dx_array, time_constants


class HypothesisError(ValueError):
    """Parameters outside the regime where the bound is claimed (alpha too small)."""


class EmptyGridError(ValueError):
    """The constraint t|x| <= C removed every grid point."""


def _one_minus_exp(u):
    return -np.expm1(-2.0 * np.asarray(u, dtype=float))


def exponent_slacks_array(alpha, t, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized slacks; alpha and t broadcast against points of shape (..., d)."""
    alpha = np.asarray(alpha, dtype=float)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(alpha <= 1) or np.any(t <= 0):
        raise DomainError("need alpha > 1 and t > 0")
    s = t / alpha
    a_s = _one_minus_exp(s)
    a_t = _one_minus_exp(t)
    lhs = np.sum((np.exp(-s)[..., None] * x - y) ** 2, axis=-1) / a_s
    q_t = np.sum((np.exp(-t)[..., None] * x - y) ** 2, axis=-1) / a_t
    rmin = np.minimum(np.sum(x * x, axis=-1), np.sum(y * y, axis=-1))
    rhs = 0.5 * alpha * np.exp(-2 * t) * q_t - t * t * rmin / a_s
    ratio = a_t / a_s
    slack2 = np.minimum(ratio - alpha * np.exp(-2 * t), alpha - ratio)
    return lhs - rhs, slack2


def lemma62_check(alpha: float, t: float, x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """(slack of the exponent inequality, smaller slack of the two-sided ratio bound)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DomainError("x and y must have the same dimension")
    s1, s2 = exponent_slacks_array(alpha, t, x, y)
    return float(s1), float(s2)


@dataclass(frozen=True)
class BoundSweepSpec:
    N: int
    alpha: float
    C: float
    T: float
    t_range: tuple[float, float] = (0.05, 0.95)
    t_steps: int = 19
    x_range: tuple[float, float] = (-3.0, 3.0)
    x_steps: int = 121
    y_range: tuple[float, float] = (-3.0, 3.0)
    # the K~ ratio peaks in y with width ~ t / sqrt(alpha); 0.0125 resolves it
    y_steps: int = 481
    d: int = 1
    j: int | None = None
    # ratios above this count as violations; None checks finiteness only
    constant: float | None = 1.0

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if not self.alpha > 1:
            raise ValueError("alpha must be greater than 1")
        if not (self.C > 0 and self.T > 0):
            raise ValueError("C and T must be positive")
        lo, hi = self.t_range
        if not (0 < lo <= hi < self.T):
            raise ValueError("t range must lie inside (0, T)")
        if min(self.t_steps, self.x_steps, self.y_steps) < 1:
            raise ValueError("grid must be non-empty")
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.j is not None and not 1 <= self.j <= self.d:
            raise ValueError(f"j must lie in 1..{self.d}")

    def refined(self, factor: int = 2) -> "BoundSweepSpec":
        """Same ranges, (steps - 1) * factor + 1 points per axis (old points kept)."""
        def r(n):
            return (n - 1) * factor + 1
        return BoundSweepSpec(
            self.N, self.alpha, self.C, self.T, self.t_range, r(self.t_steps),
            self.x_range, r(self.x_steps), self.y_range, r(self.y_steps),
            self.d, self.j, self.constant,
        )

    def t_grid(self) -> np.ndarray:
        return np.linspace(*self.t_range, self.t_steps)


@dataclass
class BoundReport:
    max_ratio: float
    argmax: tuple
    samples: int
    params: dict
    violations: int
    kernel: str = "K"
    skipped: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "argmax": list(self.argmax),
            "samples": self.samples,
            "params": self.params,
            "violations": self.violations,
            "kernel": self.kernel,
            "skipped": self.skipped,
        }


def largeness_violations(alpha: float, T: float, t_values: Sequence[float]) -> list[str]:
    """The two explicit conditions on alpha; an empty list means alpha is large enough."""
    problems = []
    c = alpha / (8 * math.exp(2 * T))
    if 1 - 2 * c > -c:
        problems.append(f"1 - alpha/(4e^(2T)) <= -alpha/(8e^(2T)) fails (needs alpha >= {8 * math.exp(2 * T):.6g})")
    for t in t_values:
        u = t * t / alpha
        if -math.expm1(-2 * u) < u:
            problems.append(f"1 - exp(-2t^2/alpha) >= t^2/alpha fails at t={t:g}")
            break
    return problems


def _axis(rng, steps):
    return np.linspace(rng[0], rng[1], steps)


MAX_SLICE_POINTS = 20_000_000


def _sweep_points(spec: BoundSweepSpec) -> tuple[np.ndarray, np.ndarray]:
    """All (x, y) pairs in lexicographic grid order, as arrays of shape (n, d)."""
    size = (spec.x_steps * spec.y_steps) ** spec.d
    if size > MAX_SLICE_POINTS:
        raise ValueError(f"{size} (x, y) pairs per time slice; reduce the x/y steps")
    xs = _axis(spec.x_range, spec.x_steps)
    ys = _axis(spec.y_range, spec.y_steps)
    xgrid = np.array(list(itertools.product(xs, repeat=spec.d)))
    ygrid = np.array(list(itertools.product(ys, repeat=spec.d)))
    xi = np.repeat(xgrid, len(ygrid), axis=0)
    yi = np.tile(ygrid, (len(xgrid), 1))
    return xi, yi


def log_ratio_array(spec: BoundSweepSpec, which: str, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """log of |kernel| / bound at one t for many points (shape (n, d))."""
    alpha, N = spec.alpha, spec.N
    s = t * t / alpha
    u = t * t
    es, a2s, _ = time_constants(s)
    eu, a2u, _ = time_constants(u)
    q_s = np.sum((es * x - y) ** 2, axis=-1) / a2s
    q_u = np.sum((eu * x - y) ** 2, axis=-1) / a2u
    d = x.shape[-1]
    # log M_s - log M_{t^2}; the e^{|y|^2} factors cancel
    log_mm = -q_s + q_u - 0.5 * d * (math.log(a2s) - math.log(a2u))
    if which == "K":
        core = bracket_sum_array(s, N, x, y) if N else np.ones(len(x))
        log_core = np.log(np.abs(core)) + 2 * N * math.log(t)
    else:
        j = (spec.j or 1) - 1
        core = bracket_sum_dx_array(s, N, x, y, j)
        log_core = np.log(np.abs(core)) + (2 * N + 1) * math.log(t)
    c = alpha / (8 * math.exp(2 * spec.T))
    log_bound = math.log(alpha) + alpha * spec.C**2 / 2 - c * q_u
    return log_core + log_mm - log_bound


def theorem63_sweep(spec: BoundSweepSpec, which: Literal["K", "Ktilde"] = "K") -> BoundReport:
    """Sup of |kernel| / bound over grid points with t|x| <= C.

    Ties go to the first point in lexicographic (t, x, y) order.
    """
    if which not in ("K", "Ktilde"):
        raise ValueError("which must be 'K' or 'Ktilde'")
    t_values = spec.t_grid()
    problems = largeness_violations(spec.alpha, spec.T, t_values)
    if problems:
        raise HypothesisError("alpha below largeness threshold: " + "; ".join(problems))
    x_all, y_all = _sweep_points(spec)
    xnorm = np.sqrt(np.sum(x_all**2, axis=-1))
    best = -math.inf
    arg: tuple = ()
    samples = 0
    violations = 0
    skipped = 0
    log_const = None if spec.constant is None else math.log(spec.constant)
    for t in t_values:
        keep = t * xnorm <= spec.C * (1 + 1e-12)
        skipped += int(np.count_nonzero(~keep))
        if not np.any(keep):
            continue
        x, y = x_all[keep], y_all[keep]
        with np.errstate(divide="ignore"):
            lr = log_ratio_array(spec, which, float(t), x, y)
        samples += len(lr)
        # log(0) = -inf is an exact zero of the kernel, not a failure
        bad = np.isnan(lr) | (lr == math.inf)
        if log_const is not None:
            bad |= lr > log_const
        violations += int(np.count_nonzero(bad))
        finite = np.where(np.isnan(lr), -math.inf, lr)
        i = int(np.argmax(finite))
        if finite[i] > best:
            best = float(finite[i])
            arg = (float(t), tuple(float(v) for v in x[i]), tuple(float(v) for v in y[i]))
    if samples == 0:
        raise EmptyGridError("constraint t|x| <= C excludes every grid point")
    params = asdict(spec)
    params["t_range"] = list(spec.t_range)
    params["x_range"] = list(spec.x_range)
    params["y_range"] = list(spec.y_range)
    return BoundReport(
        max_ratio=math.exp(best) if best > -math.inf else 0.0,
        argmax=arg,
        samples=samples,
        params=params,
        violations=violations,
        kernel=which,
        skipped=skipped,
    )


def recheck_ktilde(spec: BoundSweepSpec, fraction: float = 0.01, seed: int = 0) -> tuple[float, int]:
    """Compare the analytic x_j-derivative with central differences on a random subsample.

    Returns (worst relative gap, points checked). The gap is scaled by
    max(|derivative|, |kernel| / sqrt(1 - e^{-2s})), the natural size of an
    x-derivative of the kernel at time s = t^2 / alpha. Points whose kernel
    value is below 1e-250 are not counted.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    x_all, y_all = _sweep_points(spec)
    xnorm = np.sqrt(np.sum(x_all**2, axis=-1))
    j = (spec.j or 1) - 1
    worst, checked = 0.0, 0
    for t in spec.t_grid():
        idx = np.flatnonzero(t * xnorm <= spec.C * (1 + 1e-12))
        if not idx.size:
            continue
        take = rng.choice(idx, size=max(1, int(round(fraction * idx.size))), replace=False)
        s = t * t / spec.alpha
        es, a2, sigma = time_constants(s)
        a = math.sqrt(a2)
        for i in take:
            x, y = x_all[i], y_all[i]
            # keep the step small against the local log-slope 2 sigma |beta|
            beta = (es * x[j] - y[j]) / a
            h = 0.02 / (1 / a + 2 * sigma * abs(beta))

            def f(v, x=x, y=y):
                xv = x.copy()
                xv[j] = v
                return float(mtn_closed_array(s, spec.N, xv, y))

            k0 = f(x[j])
            # near the subnormal range the differences carry no digits
            if abs(k0) < 1e-250:
                continue
            exact = float(mtn_closed_dx_array(s, spec.N, x, y, j))
            fd = central_difference(f, float(x[j]), 1, h, levels=3)
            scale = max(abs(exact), abs(k0) / a)
            worst = max(worst, abs(fd - exact) / scale)
            checked += 1
    return float(worst), checked


@dataclass(frozen=True)
class CalderonResult:
    N: int
    alpha: float
    integrals: tuple[float, ...]
    constant: float
    deviation: float
    closed_form: float
    relative_error: float


def calderon_integral(N: int, alpha: float, n: int, quad_points: int = 200) -> float:
    """int_0^inf (t^2 n)^{N+1} e^{-t^2 n / alpha} dt/t, with t = e^u.

    In the log variable the integrand is a smooth bump; its centre sits at
    u0 = log(alpha (N+1) / n) / 2 and it decays doubly exponentially to the
    right and exponentially (rate 2(N+1)) to the left. ``quad_points``
    caps the adaptive subintervals per piece.
    """
    if N < 0 or n < 1 or quad_points < 1:
        raise ValueError("need N >= 0, n >= 1 and quad_points >= 1")
    if not alpha > 1:
        raise ValueError("alpha must be greater than 1")
    u0 = 0.5 * math.log(alpha * (N + 1) / n)
    peak = (alpha * (N + 1)) ** (N + 1) * math.exp(-(N + 1))

    def f(u: float) -> float:
        v = n * math.exp(2 * u)
        return v ** (N + 1) * math.exp(-v / alpha)

    lo = u0 - 40.0 / (N + 1)
    hi = u0 + 5.0
    pieces = [(lo, u0 - 2), (u0 - 2, u0), (u0, u0 + 2), (u0 + 2, hi)]
    total = 0.0
    for a, b in pieces:
        val, err = integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=quad_points)
        if err > 1e-11 * max(abs(val), peak * 1e-3):
            raise ArithmeticError(f"quadrature did not converge on [{a:g}, {b:g}]")
        total += val
    return total


def calderon_constant(
    N: int, alpha: float, n_list: Sequence[int] = (1, 5, 40), quad_points: int = 200
) -> CalderonResult:
    """C = 1 / I together with the spread of I over the eigenvalues in ``n_list``.

    I = alpha^{N+1} N! / 2 in closed form. Acting on a Hermite polynomial of
    degree n the operator (t^2 L)^{N+1} carries (-n)^{N+1}, so the constant
    in the reproducing formula is (-1)^{N+1} / I; ``constant`` is the
    unsigned 1 / I.
    """
    if not n_list:
        raise ValueError("n_list must be non-empty")
    values = tuple(calderon_integral(N, alpha, int(n), quad_points) for n in n_list)
    closed = alpha ** (N + 1) * math.factorial(N) / 2
    deviation = max(abs(v - values[0]) for v in values)
    rel = max(abs(v - closed) for v in values) / closed
    return CalderonResult(N, float(alpha), values, 1.0 / values[0], deviation, closed, rel)
