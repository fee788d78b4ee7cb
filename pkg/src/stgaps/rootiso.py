"""Exact real-root isolation and certified maxima for rational polynomials.

Sign questions are settled with Sturm sequences over ``Fraction``; maxima at
irrational critical points are enclosed by a Taylor bound around the midpoint
of a shrinking isolating interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chebcore import RationalPolynomial, poly_gcd, squarefree_part

# absolute width of the enclosure returned for irrational critical values
DEFAULT_TOL = Fraction(1, 2 ** 64)
MAX_REFINE = 400


def sturm_sequence(p: RationalPolynomial) -> list[RationalPolynomial]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        seq.append(-(seq[-2] % seq[-1]))
    return seq[:-1]


def _sign(v: Fraction) -> int:
    return (v > 0) - (v < 0)


def sign_variations(seq: list[RationalPolynomial], x: Fraction) -> int:
    signs = [s for s in (_sign(q(x)) for q in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(seq, a: Fraction, b: Fraction) -> int:
    """Distinct roots in the half-open ``(a, b]`` of the squarefree polynomial behind ``seq``."""
    return sign_variations(seq, a) - sign_variations(seq, b)


def isolate_roots(p: RationalPolynomial, a: Fraction, b: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Disjoint ``(l, r]`` intervals, each holding exactly one root of ``p`` in the open ``(a, b)``.

    A root that happens to be rational and hit by bisection is reported as
    ``(r, r)``.
    """
    if p.is_zero():
        raise ValueError("zero polynomial has no isolated roots")
    if p.degree <= 0 or a >= b:
        return []
    sf = squarefree_part(p)
    seq = sturm_sequence(sf)
    out: list[tuple[Fraction, Fraction]] = []
    # (l, r, right_open): right_open excludes r itself from the count
    stack = [(a, b, True)]
    while stack:
        l, r, right_open = stack.pop()
        r_is_root = sf(r) == 0
        n = count_roots(seq, l, r) - (1 if right_open and r_is_root else 0)
        if n == 0:
            continue
        if n == 1:
            if not r_is_root:
                out.append((l, r))
                continue
            if not right_open:
                out.append((r, r))
                continue
        m = (l + r) / 2
        if sf(m) == 0:
            out.append((m, m))
            stack.append((m, r, right_open))
            stack.append((l, m, True))
        else:
            stack.append((m, r, right_open))
            stack.append((l, m, False))
    out.sort()
    return out


def refine_root(seq, l: Fraction, r: Fraction) -> tuple[Fraction, Fraction]:
    """Halve ``(l, r]`` keeping the single root (returns ``(m, m)`` on an exact hit)."""
    m = (l + r) / 2
    if seq[0](m) == 0:
        return m, m
    if count_roots(seq, l, m) == 1:
        return l, m
    return m, r


def _taylor_enclosure(p: RationalPolynomial, l: Fraction, r: Fraction) -> tuple[Fraction, Fraction]:
    """Rational ``lo <= p(x) <= hi`` valid for every ``x`` in ``[l, r]``."""
    m = (l + r) / 2
    h = (r - l) / 2
    c = p.taylor_shift(m).coefficients
    if not c:
        return Fraction(0), Fraction(0)
    slack = Fraction(0)
    hp = Fraction(1)
    for cj in c[1:]:
        hp *= h
        slack += abs(cj) * hp
    return c[0] - slack, c[0] + slack


@dataclass(frozen=True)
class MaxBound:
    """Enclosure ``lower <= max_{[a,b]} p <= upper`` with an exact sign verdict."""

    lower: Fraction
    upper: Fraction

    @property
    def sign(self) -> int:
        if self.lower > 0:
            return 1
        if self.upper < 0:
            return -1
        if self.lower == self.upper == 0:
            return 0
        raise ArithmeticError("enclosure does not decide the sign")


def certified_max(p: RationalPolynomial, a: Fraction, b: Fraction, tol: Fraction = DEFAULT_TOL) -> MaxBound:
    """Certified enclosure of ``max p`` over the closed interval ``[a, b]``.

    Critical points shared with ``p`` (multiple roots of ``p``) contribute the
    exact value 0; the remaining critical values are nonzero and are refined
    until their enclosure both excludes 0 and is narrower than ``tol``.
    """
    a, b = Fraction(a), Fraction(b)
    if a > b:
        raise ValueError("empty interval")
    lo = hi = max(p(a), p(b))
    if a == b or p.degree <= 1:
        return MaxBound(lo, hi)
    dp = p.derivative()
    multiple = poly_gcd(p, dp)
    crit = squarefree_part(dp)
    if multiple.degree > 0:
        zero_crit = poly_gcd(crit, multiple)
        if zero_crit.degree > 0:
            if isolate_roots(zero_crit, a, b):
                lo, hi = max(lo, Fraction(0)), max(hi, Fraction(0))
            crit = crit // zero_crit
    if crit.degree <= 0:
        return MaxBound(lo, hi)
    seq = sturm_sequence(crit)
    for l, r in isolate_roots(crit, a, b):
        if l == r:
            v = p(l)
            lo, hi = max(lo, v), max(hi, v)
            continue
        for _ in range(MAX_REFINE):
            elo, ehi = _taylor_enclosure(p, l, r)
            if ehi <= lo:
                break  # cannot beat the current maximum
            if ehi - elo <= tol and (elo > 0 or ehi < 0):
                break
            l, r = refine_root(seq, l, r)
            if l == r:
                elo = ehi = p(l)
                break
        else:
            raise ArithmeticError("critical value refinement did not converge")
        lo, hi = max(lo, elo), max(hi, ehi)
    return MaxBound(lo, hi)


def nonpositive_on(p: RationalPolynomial, a: Fraction, b: Fraction) -> bool:
    """Exact test of ``p(x) <= 0`` for every ``x`` in ``[a, b]``."""
    if p.is_zero():
        return True
    bound = certified_max(p, a, b)
    return bound.upper <= 0 or bound.sign <= 0


def lipschitz_max_bound(p: RationalPolynomial, a: Fraction, b: Fraction, steps: int = 1024) -> Fraction:
    """Fallback upper bound on ``max p`` over ``[a, b]`` from a uniform grid.

    Uses ``max p(x_i) + L*h/2`` with ``L = sum n |c_n| max(|a|,|b|,1)^(n-1)``
    bounding ``|p'|`` on the interval.
    """
    a, b = Fraction(a), Fraction(b)
    h = (b - a) / steps
    R = max(abs(a), abs(b), Fraction(1))
    lip = sum((n * abs(c) * R ** (n - 1) for n, c in enumerate(p.coefficients) if n), Fraction(0))
    best = max(p(a + i * h) for i in range(steps + 1))
    return best + lip * h / 2
