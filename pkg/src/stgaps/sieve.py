"""Maynard sieve objects for polynomial ``F`` supported on the unit simplex.

``I_k(F)`` and ``J_k^{(m)}(F)`` are computed exactly in rational arithmetic;
the weights ``lambda_{d_1..d_k}`` are floats because ``F`` is evaluated at
``log r_i / log R``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, Mapping, Sequence, Tuple

from .chebcore import to_fraction

Exponent = Tuple[int, ...]


class ZeroDenominator(ZeroDivisionError):
    """``I_k(F) = 0``, so the variational ratio is undefined."""


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


def simplex_monomial_integral(k: int, a: Sequence[int]) -> Fraction:
    """``prod a_i! / (k + sum a_i)!``: the integral of ``x^a`` over the standard k-simplex."""
    if len(a) != k:
        raise ValueError(f"exponent vector has length {len(a)}, expected {k}")
    num = 1
    for e in a:
        num *= _factorial(e)
    return Fraction(num, _factorial(k + sum(a)))


def dirichlet_integral(a: Sequence[int], n: int) -> Fraction:
    """Integral of ``x^a (1 - sum x)^n`` over the standard ``len(a)``-simplex."""
    num = _factorial(n)
    for e in a:
        num *= _factorial(e)
    return Fraction(num, _factorial(len(a) + sum(a) + n))


class SimplexPolynomial:
    """Sparse polynomial in ``x_1..x_k`` with rational coefficients.

    It stands for a function supported on ``{x in [0,1]^k : sum x <= 1}``;
    nothing evaluates it outside that simplex.
    """

    __slots__ = ("k", "terms")

    def __init__(self, k: int, terms: Mapping[Exponent, object] | None = None):
        if k < 0:
            raise ValueError("k must be nonnegative")
        self.k = k
        clean: Dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != k or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for k={k}")
            c = to_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
        self.terms = {e: c for e, c in sorted(clean.items()) if c}

    @classmethod
    def constant(cls, k: int, c) -> "SimplexPolynomial":
        return cls(k, {(0,) * k: c})

    @classmethod
    def variable(cls, k: int, i: int) -> "SimplexPolynomial":
        """``x_i`` with 1-based ``i``."""
        exp = [0] * k
        exp[i - 1] = 1
        return cls(k, {tuple(exp): 1})

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> "SimplexPolynomial":
        """Read ``"c1 * x1^a1 * x2 + c2 * ..."`` with exact coefficients (``3/2``, ``0.25``)."""
        src = text.replace(" ", "").replace("**", "^")
        if not src:
            raise ValueError("empty polynomial")
        chunks = [c for c in re.split(r"(?=[+-])", src) if c]
        parsed = []
        top = 0
        for chunk in chunks:
            sign = -1 if chunk[0] == "-" else 1
            body = chunk[1:] if chunk[0] in "+-" else chunk
            if not body:
                raise ValueError(f"dangling sign in {text!r}")
            coef = Fraction(sign)
            powers: Dict[int, int] = {}
            for factor in body.split("*"):
                m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", factor)
                if m:
                    idx = int(m.group(1))
                    if idx < 1:
                        raise ValueError("variables are x1, x2, ...")
                    powers[idx] = powers.get(idx, 0) + int(m.group(2) or 1)
                    top = max(top, idx)
                elif re.fullmatch(r"\d+(?:\.\d*)?(?:/\d+)?", factor):
                    coef *= Fraction(factor)
                else:
                    raise ValueError(f"cannot parse factor {factor!r} in {text!r}")
            parsed.append((coef, powers))
        if k is None:
            k = top
        elif top > k:
            raise ValueError(f"x{top} used but k = {k}")
        terms: Dict[Exponent, Fraction] = {}
        for coef, powers in parsed:
            exp = tuple(powers.get(i + 1, 0) for i in range(k))
            terms[exp] = terms.get(exp, Fraction(0)) + coef
        return cls(k, terms)

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp, c in self.terms.items():
            factors = [f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exp) if e]
            mag = abs(c)
            body = "*".join(([str(mag)] if mag != 1 or not factors else []) + factors)
            parts.append(("-" if c < 0 else "+") + body)
        out = "".join(parts)
        return out[1:] if out.startswith("+") else out

    def __repr__(self):
        return f"SimplexPolynomial({self.k}, {self.to_text()!r})"

    def __eq__(self, other):
        return isinstance(other, SimplexPolynomial) and self.k == other.k and self.terms == other.terms

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "SimplexPolynomial") -> "SimplexPolynomial":
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, Fraction(0)) + c
        return SimplexPolynomial(self.k, t)

    def __neg__(self):
        return SimplexPolynomial(self.k, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "SimplexPolynomial":
        if not isinstance(other, SimplexPolynomial):
            c = to_fraction(other)
            return SimplexPolynomial(self.k, {e: c * v for e, v in self.terms.items()})
        self._check(other)
        t: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, Fraction(0)) + c1 * c2
        return SimplexPolynomial(self.k, t)

    __rmul__ = __mul__

    def _check(self, other):
        if self.k != other.k:
            raise ValueError("dimension mismatch")

    def __call__(self, x: Sequence[float]) -> float:
        if len(x) != self.k:
            raise ValueError("point has the wrong dimension")
        return math.fsum(float(c) * math.prod(xi ** e for xi, e in zip(x, exp)) for exp, c in self.terms.items())

    def evaluate_exact(self, x: Sequence) -> Fraction:
        x = [to_fraction(v) for v in x]
        total = Fraction(0)
        for exp, c in self.terms.items():
            term = c
            for xi, e in zip(x, exp):
                term *= xi ** e
            total += term
        return total

    def integrate(self) -> Fraction:
        """Exact integral over the standard k-simplex."""
        return sum((c * simplex_monomial_integral(self.k, e) for e, c in self.terms.items()), Fraction(0))


def Ik(F: SimplexPolynomial) -> Fraction:
    """``integral of F^2`` over the k-simplex."""
    return (F * F).integrate()


def _one_minus_sum_power(k: int, n: int) -> SimplexPolynomial:
    """``(1 - x_1 - ... - x_k)^n`` expanded."""
    base = SimplexPolynomial.constant(k, 1)
    for i in range(1, k + 1):
        base = base - SimplexPolynomial.variable(k, i)
    out = SimplexPolynomial.constant(k, 1)
    for _ in range(n):
        out = out * base
    return out


def _drop(exp: Exponent, m: int) -> Exponent:
    return exp[: m - 1] + exp[m:]


def inner_integral(F: SimplexPolynomial, m: int) -> SimplexPolynomial:
    """``integral_0^{1 - sum_{i != m} x_i} F dx_m`` as a polynomial in the other k-1 variables."""
    k = F.k
    if not 1 <= m <= k:
        raise ValueError(f"m must lie in 1..{k}")
    out = SimplexPolynomial(k - 1)
    powers: Dict[int, SimplexPolynomial] = {}
    for exp, c in F.terms.items():
        n = exp[m - 1] + 1
        if n not in powers:
            powers[n] = _one_minus_sum_power(k - 1, n)
        rest = SimplexPolynomial(k - 1, {_drop(exp, m): c / n})
        out = out + rest * powers[n]
    return out


def Jkm(F: SimplexPolynomial, m: int) -> Fraction:
    """``integral over the (k-1)-simplex of (integral F dx_m)^2``."""
    G = inner_integral(F, m)
    return Ik(G) if F.k > 1 else (G.terms.get((), Fraction(0)) ** 2)


def Jkm_dirichlet(F: SimplexPolynomial, m: int) -> Fraction:
    """Same quantity as :func:`Jkm`, without expanding ``(1 - sum)^n``.

    Squares the antiderivative term by term and integrates each
    ``x^a (1 - sum x)^n`` with the Dirichlet closed form.
    """
    k = F.k
    if not 1 <= m <= k:
        raise ValueError(f"m must lie in 1..{k}")
    pieces = [(_drop(e, m), e[m - 1] + 1, c) for e, c in F.terms.items()]
    total = Fraction(0)
    for a1, n1, c1 in pieces:
        for a2, n2, c2 in pieces:
            a = tuple(x + y for x, y in zip(a1, a2))
            total += c1 * c2 / (n1 * n2) * dirichlet_integral(a, n1 + n2)
    return total


def mk_ratio(F: SimplexPolynomial) -> Fraction:
    """``sum_m J_k^{(m)}(F) / I_k(F)``, a certified lower bound for ``M_k``."""
    denom = Ik(F)
    if denom == 0:
        raise ZeroDenominator("I_k(F) = 0")
    return sum((Jkm(F, m) for m in range(1, F.k + 1)), Fraction(0)) / denom


# -- sieve weights --------------------------------------------------------------

def _factor(n: int) -> Dict[int, int]:
    out: Dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius(n: int) -> int:
    f = _factor(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    out = n
    for p in _factor(n):
        out = out // p * (p - 1)
    return out


def is_squarefree(n: int) -> bool:
    return mobius(n) != 0


@dataclass(frozen=True)
class SieveConfig:
    R: int
    W: int
    F: SimplexPolynomial

    def __post_init__(self):
        if self.R < 2:
            raise ValueError("R must be at least 2")
        if self.W < 1 or not is_squarefree(self.W):
            raise ValueError("W must be a positive squarefree integer")


def _r_vectors(d: Sequence[int], R: int, W: int) -> Iterator[Tuple[int, ...]]:
    """Vectors with ``d_i | r_i``, ``(r_i, W) = 1``, squarefree product ``<= R``, ascending lex."""
    k = len(d)

    def rec(i: int, prod: int, prefix: Tuple[int, ...]):
        if i == k:
            yield prefix
            return
        r = d[i]
        while prod * r <= R:
            if math.gcd(r, W) == 1 and math.gcd(r, prod) == 1 and is_squarefree(r):
                yield from rec(i + 1, prod * r, prefix + (r,))
            r += d[i]

    yield from rec(0, 1, ())


def maynard_lambda(d: Sequence[int], cfg: SieveConfig) -> float:
    """``lambda_{d_1..d_k}`` by direct enumeration of the admissible ``r`` vectors."""
    k = cfg.F.k
    if len(d) != k:
        raise ValueError(f"d has length {len(d)}, F has k = {k}")
    if any(di < 1 for di in d):
        raise ValueError("d entries must be positive")
    pref = 1
    for di in d:
        pref *= mobius(di) * di
    if pref == 0:
        return 0.0
    logR = math.log(cfg.R)
    terms = []
    for r in _r_vectors(d, cfg.R, cfg.W):
        phi = math.prod(euler_phi(ri) for ri in r)
        terms.append(cfg.F([math.log(ri) / logR for ri in r]) / phi)
    total = pref * math.fsum(terms)
    return total + 0.0  # normalise -0.0
