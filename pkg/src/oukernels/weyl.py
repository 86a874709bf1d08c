"""Exact normal-ordered arithmetic in the Weyl algebra F<x, y>, xy - yx = -1.

Elements are stored as ``{(m, n): Fraction}`` meaning ``sum c * x^m y^n``
with every x to the left of every y. Products are reduced with the
single rewrite ``y x -> x y + 1``, which in closed form reads

    y^n x^p = sum_k  C(n, k) (p)_k  x^(p-k) y^(n-k).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .combinatorics import falling_factorial, stirling2

Scalar = Union[int, Fraction]


class WeylElement:
    """Immutable normal-ordered element with exact rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, int], Scalar] | None = None):
        clean: dict[tuple[int, int], Fraction] = {}
        for (m, n), c in (terms or {}).items():
            if m < 0 or n < 0:
                raise ValueError(f"negative exponent in monomial x^{m} y^{n}")
            c = Fraction(c)
            if c:
                clean[(int(m), int(n))] = clean.get((int(m), int(n)), Fraction(0)) + c
        self._terms = {k: v for k, v in clean.items() if v}
        self._hash = None

    @classmethod
    def monomial(cls, m: int, n: int, coeff: Scalar = 1) -> "WeylElement":
        return cls({(m, n): coeff})

    @classmethod
    def scalar(cls, c: Scalar) -> "WeylElement":
        return cls({(0, 0): c})

    @property
    def terms(self) -> dict[tuple[int, int], Fraction]:
        return dict(self._terms)

    def coeff(self, m: int, n: int) -> Fraction:
        return self._terms.get((m, n), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = WeylElement.scalar(other)
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __add__(self, other) -> "WeylElement":
        other = _coerce(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return WeylElement(out)

    __radd__ = __add__

    def __neg__(self) -> "WeylElement":
        return WeylElement({k: -v for k, v in self._terms.items()})

    def __sub__(self, other) -> "WeylElement":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "WeylElement":
        return _coerce(other) - self

    def __mul__(self, other) -> "WeylElement":
        if isinstance(other, (int, Fraction)):
            return WeylElement({k: v * other for k, v in self._terms.items()})
        return multiply(self, other)

    def __rmul__(self, other) -> "WeylElement":
        if isinstance(other, (int, Fraction)):
            return WeylElement({k: v * other for k, v in self._terms.items()})
        return multiply(_coerce(other), self)

    def __pow__(self, k: int) -> "WeylElement":
        return power(self, k)

    def __repr__(self) -> str:
        return f"WeylElement({format_element(self)!r})"

    def __str__(self) -> str:
        return format_element(self)


def _coerce(a) -> WeylElement:
    if isinstance(a, WeylElement):
        return a
    if isinstance(a, (int, Fraction)):
        return WeylElement.scalar(a)
    raise TypeError(f"cannot treat {type(a).__name__} as a Weyl element")


X = WeylElement.monomial(1, 0)
Y = WeylElement.monomial(0, 1)
ONE = WeylElement.scalar(1)
D = WeylElement.monomial(1, 1)  # D = xy


def _reorder(n: int, p: int) -> list[tuple[int, int, int]]:
    """Normal form of y^n x^p as [(coeff, x_exp, y_exp), ...]."""
    return [
        (math.comb(n, k) * falling_factorial(p, k), p - k, n - k)
        for k in range(min(n, p) + 1)
    ]


def multiply(a: WeylElement, b: WeylElement) -> WeylElement:
    """Normal-ordered product a * b."""
    out: dict[tuple[int, int], Fraction] = {}
    for (m1, n1), c1 in a._terms.items():
        for (m2, n2), c2 in b._terms.items():
            c = c1 * c2
            for k, xm, yn in _reorder(n1, m2):
                key = (m1 + xm, yn + n2)
                out[key] = out.get(key, Fraction(0)) + c * k
    return WeylElement(out)


def power(a: WeylElement, k: int) -> WeylElement:
    if k < 0:
        raise ValueError("power must be non-negative")
    out = ONE
    base = a
    while k:
        if k & 1:
            out = multiply(out, base)
        k >>= 1
        if k:
            base = multiply(base, base)
    return out


def poly_in(element: WeylElement, coeffs: Sequence[Scalar]) -> WeylElement:
    """p(element) for p(z) = sum coeffs[i] z^i (Horner)."""
    out = WeylElement()
    for c in reversed(coeffs):
        out = multiply(out, element) + WeylElement.scalar(c)
    return out


def weighted_degree(a: WeylElement) -> int | None:
    """Common value of m - n over all monomials, or None if they differ."""
    if a.is_zero():
        raise ValueError("weighted degree of the zero element is undefined")
    degrees = {m - n for (m, n) in a._terms}
    if len(degrees) != 1:
        return None
    return degrees.pop()


def is_homogeneity_preserving(a: WeylElement) -> bool:
    """True iff every monomial is balanced (x^n y^n)."""
    return all(m == n for (m, n) in a._terms)


def format_element(a: WeylElement) -> str:
    """Normal-form string such as ``x^2 y^2 + x y``.

    Terms are sorted by descending total degree, then descending x power.
    """
    if a.is_zero():
        return "0"
    parts = []
    for (m, n) in sorted(a._terms, key=lambda k: (-(k[0] + k[1]), -k[0])):
        c = a._terms[(m, n)]
        factors = []
        if m:
            factors.append("x" if m == 1 else f"x^{m}")
        if n:
            factors.append("y" if n == 1 else f"y^{n}")
        mono = " ".join(factors)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag} {mono}"
        parts.append(("-" if c < 0 else "+", body))
    sign, body = parts[0]
    text = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def stirling_expansion(m: int) -> WeylElement:
    """sum_i S(m, i) x^i y^i."""
    return WeylElement({(i, i): stirling2(m, i) for i in range(m + 1)})


def normal_order_xy_power_check(m_max: int) -> bool:
    """(xy)^m == sum_i S(m, i) x^i y^i exactly for every 1 <= m <= m_max."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    acc = ONE
    for m in range(1, m_max + 1):
        acc = multiply(acc, D)
        if acc != stirling_expansion(m):
            return False
    return True


# Polynomials in D used by the identity checks; degrees 0..4, mixed signs.
DEFAULT_TEST_POLYS: tuple[tuple[Scalar, ...], ...] = (
    (1,),
    (0, 1),
    (0, 0, 1),
    (2, -3, 1),
    (3, 0, 1, -2),
    (Fraction(1, 2), 0, -1, 0, 3),
    (-1, 4, Fraction(-2, 3), 1, 1),
)


def _shift(coeffs: Sequence[Scalar], s: int) -> WeylElement:
    """p(D + s) as an element."""
    return poly_in(D + WeylElement.scalar(s), coeffs)


def commutation_identities(m: int, coeffs: Sequence[Scalar]) -> dict[str, bool]:
    """Evaluate each commutation identity at power m for the polynomial p."""
    xm = power(X, m)
    ym = power(Y, m)
    p = poly_in(D, coeffs)
    falling = ONE
    for i in range(m):
        falling = multiply(falling, D - i)
    rising = ONE
    for i in range(1, m + 1):
        rising = multiply(rising, D + i)
    return {
        "D x^m = x^m D + m x^m": multiply(D, xm) == multiply(xm, D) + xm * m,
        "D y^m = y^m D - m y^m": multiply(D, ym) == multiply(ym, D) - ym * m,
        "p(D) x^m = x^m p(D+m)": multiply(p, xm) == multiply(xm, _shift(coeffs, m)),
        "p(D) y^m = y^m p(D-m)": multiply(p, ym) == multiply(ym, _shift(coeffs, -m)),
        "x^m y^m = prod_{i<m} (D-i)": multiply(xm, ym) == falling,
        "y^m x^m = prod_{1<=i<=m} (D+i)": multiply(ym, xm) == rising,
    }


def check_section4_identities(
    m_max: int, polys: Iterable[Sequence[Scalar]] = DEFAULT_TEST_POLYS
) -> bool:
    """All commutation identities for D = xy hold for 1 <= m <= m_max."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    polys = list(polys)
    for m in range(1, m_max + 1):
        for coeffs in polys:
            if not all(commutation_identities(m, coeffs).values()):
                return False
    return True


def homogeneity_breaks(a: int, b: int, n: int) -> bool:
    """Whether x^a y^b * x^n y^n has a monomial of weighted degree != 0.

    For a != b this is always true: the leading monomial is x^(a+n) y^(b+n).
    """
    prod = multiply(WeylElement.monomial(a, b), WeylElement.monomial(n, n))
    return any(m - k != 0 for (m, k) in prod.terms)


# Concrete model: x -> multiplication by t, y -> d/dt, acting on polynomials
# in t stored as {power: coeff}.


def act_on_polynomial(a: WeylElement, poly: Mapping[int, Scalar]) -> dict[int, Fraction]:
    """Apply ``a`` to a polynomial in t under x = t*, y = d/dt."""
    out: dict[int, Fraction] = {}
    for (m, n), c in a._terms.items():
        for j, pc in poly.items():
            if n > j:
                continue
            k = j - n + m
            out[k] = out.get(k, Fraction(0)) + c * falling_factorial(j, n) * Fraction(pc)
    return {k: v for k, v in out.items() if v}


def euler_power_on_monomial(N: int, j: int) -> dict[int, Fraction]:
    """(t d/dt)^N applied to t^j by repeated differentiation: j^N t^j."""
    poly: dict[int, Fraction] = {j: Fraction(1)}
    for _ in range(N):
        poly = {k: c * k for k, c in poly.items() if c * k}
    return poly


def constant_term_map(a: WeylElement, j: int) -> Fraction:
    """Substitute x^i y^i -> (j)_i in a balanced element."""
    if not is_homogeneity_preserving(a):
        raise ValueError("constant-term map needs a balanced element")
    return sum(
        (c * falling_factorial(j, m) for (m, _), c in a._terms.items()), Fraction(0)
    )

