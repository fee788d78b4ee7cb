"""Exact rational polynomials, Chebyshev-U basis changes and Sato-Tate moments.

Every integral of a polynomial against the Sato-Tate measure
``(2/pi) sqrt(1 - t^2) dt`` is computed exactly through the moment table;
floating point only appears in :func:`st_measure` (which needs ``arcsin``)
and in display code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

Number = Union[int, Fraction]
RationalLike = Union[int, Fraction, str]


def to_fraction(value: RationalLike | float) -> Fraction:
    """Convert ints, Fractions and decimal strings to an exact Fraction.

    Floats are accepted through their shortest decimal repr, so ``0.4`` means
    ``2/5`` rather than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class Interval:
    """Closed subinterval ``[alpha, beta]`` of ``[-1, 1]`` with rational endpoints."""

    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        a = to_fraction(self.alpha)
        b = to_fraction(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if not (-1 <= a < b <= 1):
            raise ValueError(f"invalid interval [{a}, {b}]: need -1 <= alpha < beta <= 1")

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``"alpha,beta"`` with exact decimal or ``p/q`` endpoints."""
        parts = [s for s in text.split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected 'alpha,beta', got {text!r}")
        return cls(to_fraction(parts[0]), to_fraction(parts[1]))

    def contains(self, other: "Interval") -> bool:
        return self.alpha <= other.alpha and other.beta <= self.beta

    def __str__(self):
        return f"[{self.alpha}, {self.beta}]"


class RationalPolynomial:
    """Immutable univariate polynomial with Fraction coefficients.

    ``coefficients[n]`` is the coefficient of ``x**n``; the zero polynomial has
    an empty coefficient tuple and degree -1.
    """

    __slots__ = ("_c",)

    def __init__(self, coefficients: Iterable[RationalLike | float] = ()):
        c = [to_fraction(v) for v in coefficients]
        while c and c[-1] == 0:
            c.pop()
        self._c = tuple(c)

    @classmethod
    def constant(cls, value: RationalLike) -> "RationalPolynomial":
        return cls([value])

    @classmethod
    def x(cls) -> "RationalPolynomial":
        return cls([0, 1])

    @classmethod
    def from_roots(cls, roots: Iterable[RationalLike], lead: RationalLike = 1) -> "RationalPolynomial":
        p = cls([lead])
        for r in roots:
            p = p * cls([-to_fraction(r), 1])
        return p

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    @property
    def leading(self) -> Fraction:
        return self._c[-1] if self._c else Fraction(0)

    def is_zero(self) -> bool:
        return not self._c

    def __len__(self):
        return len(self._c)

    def __eq__(self, other):
        if isinstance(other, RationalPolynomial):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self._c == RationalPolynomial([other])._c
        return NotImplemented

    def __hash__(self):
        return hash(self._c)

    def __repr__(self):
        return f"RationalPolynomial({[str(c) for c in self._c]})"

    def __str__(self):
        if not self._c:
            return "0"
        terms = []
        for n, c in enumerate(self._c):
            if c == 0:
                continue
            mono = "" if n == 0 else ("x" if n == 1 else f"x^{n}")
            coef = str(c)
            terms.append(coef if not mono else (mono if c == 1 else f"{coef}*{mono}"))
        return " + ".join(reversed(terms))

    def _coerce(self, other) -> "RationalPolynomial":
        if isinstance(other, RationalPolynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return RationalPolynomial([other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(len(self._c), len(other._c))
        a = self._c + (Fraction(0),) * (n - len(self._c))
        b = other._c + (Fraction(0),) * (n - len(other._c))
        return RationalPolynomial(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return RationalPolynomial(-c for c in self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self._c or not other._c:
            return RationalPolynomial()
        out = [Fraction(0)] * (len(self._c) + len(other._c) - 1)
        for i, a in enumerate(self._c):
            if a:
                for j, b in enumerate(other._c):
                    out[i + j] += a * b
        return RationalPolynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        s = to_fraction(scalar)
        if s == 0:
            raise ZeroDivisionError("polynomial divided by zero")
        return RationalPolynomial(c / s for c in self._c)

    def __pow__(self, n: int):
        out = RationalPolynomial([1])
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, x):
        """Horner evaluation; exact for int/Fraction input, float otherwise."""
        if isinstance(x, float):
            acc = 0.0
            for c in reversed(self._c):
                acc = acc * x + float(c)
            return acc
        acc = Fraction(0)
        for c in reversed(self._c):
            acc = acc * x + c
        return acc

    def derivative(self) -> "RationalPolynomial":
        return RationalPolynomial(n * c for n, c in enumerate(self._c) if n > 0)

    def divmod(self, other: "RationalPolynomial") -> tuple["RationalPolynomial", "RationalPolynomial"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self._c)
        dq = other.degree
        lead = other.leading
        quot = [Fraction(0)] * max(len(rem) - dq, 0)
        for k in range(len(rem) - 1, dq - 1, -1):
            coef = rem[k] / lead
            if coef:
                quot[k - dq] = coef
                for j, b in enumerate(other._c):
                    rem[k - dq + j] -= coef * b
        return RationalPolynomial(quot), RationalPolynomial(rem[:dq] if dq > 0 else [])

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def monic(self) -> "RationalPolynomial":
        return self / self.leading if self._c else self

    def taylor_shift(self, m: Fraction) -> "RationalPolynomial":
        """Coefficients of ``t -> p(m + t)``."""
        c = list(self._c)
        n = len(c)
        for i in range(n):
            for j in range(n - 2, i - 1, -1):
                c[j] += m * c[j + 1]
        return RationalPolynomial(c)

    def to_floats(self) -> list[float]:
        return [float(c) for c in self._c]


def poly_gcd(a: RationalPolynomial, b: RationalPolynomial) -> RationalPolynomial:
    """Monic gcd by the Euclidean algorithm (zero if both are zero)."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def squarefree_part(p: RationalPolynomial) -> RationalPolynomial:
    if p.degree <= 0:
        return p.monic()
    g = poly_gcd(p, p.derivative())
    return (p // g).monic()


# -- Chebyshev polynomials of the second kind ---------------------------------

def eval_chebU(ell: int, x: float) -> float:
    """``U_ell(x)`` by the three-term recurrence ``U_{l+1} = 2x U_l - U_{l-1}``."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    prev, cur = 1.0, 2.0 * x
    if ell == 0:
        return prev
    for _ in range(ell - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


@lru_cache(maxsize=None)
def chebU_poly(ell: int) -> RationalPolynomial:
    """Monomial-basis expansion of ``U_ell`` (leading coefficient ``2**ell``)."""
    if ell == 0:
        return RationalPolynomial([1])
    if ell == 1:
        return RationalPolynomial([0, 2])
    two_x = RationalPolynomial([0, 2])
    return two_x * chebU_poly(ell - 1) - chebU_poly(ell - 2)


@dataclass(frozen=True)
class ChebExpansion:
    """Coefficients ``b[l]`` of a polynomial in the ``U_l`` basis."""

    b: tuple[Fraction, ...]

    @property
    def b0(self) -> Fraction:
        return self.b[0] if self.b else Fraction(0)


def to_cheb_basis(p: RationalPolynomial) -> ChebExpansion:
    """Exact change of basis monomial -> Chebyshev-U by peeling leading terms."""
    rest = p
    b = [Fraction(0)] * len(p)
    while not rest.is_zero():
        n = rest.degree
        coef = rest.leading / (2 ** n)
        b[n] = coef
        rest = rest - coef * chebU_poly(n)
    return ChebExpansion(tuple(b))


def from_cheb_basis(e: ChebExpansion | Sequence[RationalLike]) -> RationalPolynomial:
    b = e.b if isinstance(e, ChebExpansion) else [to_fraction(v) for v in e]
    out = RationalPolynomial()
    for ell, coef in enumerate(b):
        if coef:
            out = out + coef * chebU_poly(ell)
    return out


# -- Sato-Tate measure --------------------------------------------------------

@lru_cache(maxsize=None)
def st_moment(n: int) -> Fraction:
    """``(2/pi) * integral_{-1}^{1} t^n sqrt(1 - t^2) dt`` as an exact rational.

    Odd moments vanish; ``st_moment(2j) = Catalan(j) / 4**j``.
    """
    if n < 0:
        raise ValueError("moment index must be nonnegative")
    if n % 2:
        return Fraction(0)
    j = n // 2
    return Fraction(math.comb(2 * j, j) // (j + 1), 4 ** j)


class MomentTable:
    """Sato-Tate moments up to a fixed order, held both exactly and as floats."""

    def __init__(self, max_order: int):
        self.moments = tuple(st_moment(n) for n in range(max_order + 1))
        self.floats = tuple(float(m) for m in self.moments)

    def __getitem__(self, n: int) -> Fraction:
        return self.moments[n]

    def __len__(self):
        return len(self.moments)


def st_integral(p: RationalPolynomial) -> Fraction:
    """Exact Sato-Tate average of ``p`` (its ``U_0`` coefficient)."""
    return sum((c * st_moment(n) for n, c in enumerate(p.coefficients)), Fraction(0))


def _st_cdf_primitive(t: float) -> float:
    t = min(1.0, max(-1.0, t))
    return (math.asin(t) + t * math.sqrt(max(0.0, 1.0 - t * t))) / math.pi


def st_measure(interval: Interval) -> float:
    """Sato-Tate mass of ``[alpha, beta]``: ``(asin t + t sqrt(1-t^2))/pi`` between the endpoints."""
    return _st_cdf_primitive(float(interval.beta)) - _st_cdf_primitive(float(interval.alpha))


def st_mass(alpha, beta) -> float:
    """Like :func:`st_measure` but tolerant of degenerate/empty ranges (returns 0)."""
    a, b = float(alpha), float(beta)
    if b <= a:
        return 0.0
    return _st_cdf_primitive(b) - _st_cdf_primitive(a)


def st_cdf(t: float) -> float:
    """Sato-Tate mass of ``[-1, t]``."""
    return _st_cdf_primitive(t) + 0.5


def st_quantile(u: float) -> float:
    """Inverse of :func:`st_cdf` on ``[0, 1]`` by bisection to double precision."""
    if u <= 0.0:
        return -1.0
    if u >= 1.0:
        return 1.0
    lo, hi = -1.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if st_cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
