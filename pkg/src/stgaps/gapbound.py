"""Explicit bounded-gap bound, carried out in log space, plus admissible tuples.

The tuple size ``k`` in the bound is astronomically large, so only ``ln k``
is ever held (as an mpmath float with a 128-bit mantissa).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence

import mpmath

from .chebcore import to_fraction
from .primes import nth_prime_upper, primes_between, simple_sieve

PREC_BITS = 128
# smallest tuple size for which log k - 2 log log k - 2 bounds M_k
K_FLOOR = 213
LOG_K_RESOLUTION = Fraction(1, 20)


class NonpositiveInput(ValueError):
    pass


class DomainError(ValueError):
    pass


class OutOfRange(ValueError):
    pass


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def theta_tilde(ell_max: int) -> Fraction:
    """``1 / max(2, ell_max - 1)``."""
    if ell_max < 0:
        raise DomainError("ell_max must be nonnegative")
    return Fraction(1, max(2, ell_max - 1))


def required_Mk(m: int, b0, theta) -> mpmath.mpf:
    """``2m / (b0 theta)``: the ``M_k`` beyond which ``b0 M_k theta / 2 > m``."""
    with mpmath.workprec(PREC_BITS):
        b0, theta = _mpf(to_fraction(b0)), _mpf(to_fraction(theta))
        if m < 1 or b0 <= 0 or theta <= 0:
            raise NonpositiveInput("need m >= 1, b0 > 0 and theta > 0")
        return 2 * m / (b0 * theta)


def mk_lower_bound(log_k) -> mpmath.mpf:
    """``log k - 2 log log k - 2``."""
    with mpmath.workprec(PREC_BITS):
        t = _mpf(log_k)
        return t - 2 * mpmath.log(t) - 2


def solve_log_k(Mk_req, resolution: Fraction = LOG_K_RESOLUTION) -> mpmath.mpf:
    """Smallest admissible ``ln k`` with ``ln k - 2 ln ln k - 2 > Mk_req``.

    The exact crossing point is found by bisection and rounded up to the
    ``resolution`` grid; if the floor ``ln 213`` already exceeds the crossing
    it is returned instead.
    """
    with mpmath.workprec(PREC_BITS):
        M = _mpf(Mk_req)
        if M < 0:
            raise NonpositiveInput("Mk_req must be nonnegative")
        floor = mpmath.log(K_FLOOR)
        h = lambda t: t - 2 * mpmath.log(t) - 2  # noqa: E731  increasing for t > 2
        lo, hi = mpmath.mpf(2), M + 2 * mpmath.log(M + 10) + 10
        while h(hi) <= M:
            hi *= 2
        for _ in range(PREC_BITS + 64):
            mid = (lo + hi) / 2
            if h(mid) > M:
                hi = mid
            else:
                lo = mid
        crossing = hi
        if floor > crossing:
            return floor
        step = _mpf(resolution)
        t = mpmath.ceil(crossing / step) * step
        while h(t) <= M:
            t += step
        return t


def prime_count_upper(log_k) -> mpmath.mpf:
    """Denominator ``D = ln k - ln ln k - 1`` of the bound ``pi(k) <= k / D``."""
    with mpmath.workprec(PREC_BITS):
        t = _mpf(log_k)
        if t <= 1:
            raise DomainError("log_k must exceed 1")
        D = t - mpmath.log(t) - 1
        if D <= 0:
            raise DomainError(f"k/(log k - log log k - 1) undefined at log_k = {t}")
        return D


def dusart_log_pn(log_n) -> mpmath.mpf:
    """``ln(n (ln n + ln ln n))``: upper bound on ``ln p_n`` valid for ``n >= 6``."""
    with mpmath.workprec(PREC_BITS):
        t = _mpf(log_n)
        if t < mpmath.log(6) - mpmath.mpf(10) ** -12:
            raise DomainError("Dusart's bound needs n >= 6")
        return t + mpmath.log(t + mpmath.log(t))


def dusart_log_pn_lower(log_n) -> mpmath.mpf:
    """``ln(n (ln n + ln ln n - 1))``: lower bound on ``ln p_n`` for ``n >= 6``."""
    with mpmath.workprec(PREC_BITS):
        t = _mpf(log_n)
        if t < mpmath.log(6) - mpmath.mpf(10) ** -12:
            raise DomainError("Dusart's bound needs n >= 6")
        return t + mpmath.log(t + mpmath.log(t) - 1)


def _s(x) -> str:
    return mpmath.nstr(x, 25)


@dataclass
class GapBoundReport:
    b0: Fraction
    ell_max: int
    m: int
    theta_tilde: Fraction
    required_Mk: float
    log_k: float
    prime_count_denominator: float
    prime_count_floor: int
    prime_count_log_bound: float
    largest_index_log: float
    diameter_log10: float
    final_bound_log10: int
    target_prime_count: int
    exact: Dict[str, str] = field(default_factory=dict)
    caveat: str = (
        "theta is taken equal to theta_tilde and the M_k bound is "
        "log k - 2 log log k - 2 (k >= 213); the delta/epsilon losses of the "
        "asymptotic argument are not computed"
    )

    def to_json(self) -> dict:
        d = asdict(self)
        d["b0"] = f"{self.b0.numerator}/{self.b0.denominator}"
        d["theta_tilde"] = f"{self.theta_tilde.numerator}/{self.theta_tilde.denominator}"
        return {"schema": "v1", **d}

    def table(self) -> str:
        rows = [
            ("b0", f"{float(self.b0):.6g}"),
            ("ell_max", str(self.ell_max)),
            ("m", str(self.m)),
            ("theta_tilde", str(self.theta_tilde)),
            ("required M_k  (2m/(b0 theta))", f"{self.required_Mk:.4f}"),
            ("ln k  (ln k - 2 ln ln k - 2 > M_k)", f"{self.log_k:.4f}"),
            ("pi(k) <= k / D, floor(D)", str(self.prime_count_floor)),
            ("ln of tuple index k(1 + 1/D)", f"{self.largest_index_log:.6f}"),
            ("log10 of largest element", f"{self.diameter_log10:.4f}"),
            ("liminf gap <= 10^", str(self.final_bound_log10)),
        ]
        w = max(len(r[0]) for r in rows)
        return "\n".join(f"{a.ljust(w)}  {b}" for a, b in rows)


def gap_bound_report(b0, ell_max: int, m: int) -> GapBoundReport:
    """Chain theta_tilde -> required M_k -> ln k -> pi(k) bound -> Dusart -> log10 gap."""
    b0 = to_fraction(b0)
    with mpmath.workprec(PREC_BITS):
        theta = theta_tilde(ell_max)
        req = required_Mk(m, b0, theta)
        log_k = solve_log_k(req)
        D = prime_count_upper(log_k)
        D_floor = int(mpmath.floor(D))
        if D_floor < 1:
            raise DomainError("prime count denominator below 1")
        index_log = log_k + mpmath.log(1 + mpmath.mpf(1) / D_floor)
        ln_diam = dusart_log_pn(index_log)
        diam10 = ln_diam / mpmath.log(10)
        final = int(mpmath.ceil(mpmath.ceil(diam10 * 100) / 100))
        exact = {
            "required_Mk": _s(req),
            "log_k": _s(log_k),
            "prime_count_denominator": _s(D),
            "largest_index_log": _s(index_log),
            "diameter_ln": _s(ln_diam),
            "diameter_log10": _s(diam10),
        }
        return GapBoundReport(
            b0=b0,
            ell_max=ell_max,
            m=m,
            theta_tilde=theta,
            required_Mk=float(req),
            log_k=float(log_k),
            prime_count_denominator=float(D),
            prime_count_floor=D_floor,
            prime_count_log_bound=1.0 / D_floor,
            largest_index_log=float(index_log),
            diameter_log10=float(diam10),
            final_bound_log10=final,
            target_prime_count=m + 1,
            exact=exact,
        )


def closed_form_log(b0, ell_max: int, m: int) -> mpmath.mpf:
    """``ln[(m/(b0 theta)) exp(2m/(b0 theta))]`` with ``theta = theta_tilde``."""
    with mpmath.workprec(PREC_BITS):
        x = _mpf(m) / (_mpf(to_fraction(b0)) * _mpf(theta_tilde(ell_max)))
        return mpmath.log(x) + 2 * x


# -- admissible tuples ------------------------------------------------------------

@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    # missed residue per checked prime; None where every class is hit
    witnesses: Dict[int, Optional[int]]

    @property
    def failing_primes(self) -> list[int]:
        return [p for p, r in self.witnesses.items() if r is None]

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "admissible": self.admissible,
            "witnesses": {str(p): r for p, r in self.witnesses.items()},
            "failing_primes": self.failing_primes,
        }


def is_admissible(h: Sequence[int]) -> Admissibility:
    """For every prime ``p <= len(h)`` find a residue class mod ``p`` that ``h`` misses."""
    h = [int(x) for x in h]
    if len(set(h)) != len(h):
        raise ValueError("entries must be distinct")
    witnesses: Dict[int, Optional[int]] = {}
    for p in simple_sieve(len(h)):
        p = int(p)
        hit = {x % p for x in h}
        witnesses[p] = next((r for r in range(p) if r not in hit), None)
    return Admissibility(all(r is not None for r in witnesses.values()), witnesses)


@dataclass(frozen=True)
class AdmissibleTuple:
    h: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.h, self.h[1:])) or any(x < 0 for x in self.h):
            raise ValueError("tuple must be strictly increasing and nonnegative")
        if not is_admissible(self.h).admissible:
            raise ValueError("tuple is not admissible")

    @property
    def k(self) -> int:
        return len(self.h)

    @property
    def diameter(self) -> int:
        return self.h[-1] - self.h[0] if self.h else 0


MAX_MATERIALIZED_K = 10 ** 7


def first_k_primes_above(k: int) -> AdmissibleTuple:
    """The ``k`` smallest primes exceeding ``k``."""
    if not 1 <= k <= MAX_MATERIALIZED_K:
        raise OutOfRange(f"k must lie in 1..{MAX_MATERIALIZED_K}; use gap_bound_report for larger k")
    hi = max(nth_prime_upper(2 * k), 20)
    while True:
        ps = primes_between(k + 1, hi)
        if len(ps) >= k:
            return AdmissibleTuple(tuple(int(p) for p in ps[:k]))
        hi *= 2
