"""Prime enumeration (segmented Eratosthenes) and deterministic primality."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

SEGMENT = 1 << 20

# strong-pseudoprime bases: the first set is exact below 3.4e14, the second below 3.3e24
_SMALL_BASES = (2, 3, 5, 7, 11, 13, 17)
_SMALL_LIMIT = 341_550_071_728_321
_LARGE_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_LARGE_LIMIT = 3_317_044_064_679_887_385_961_981


def simple_sieve(n: int) -> np.ndarray:
    """All primes ``<= n`` as an int64 array."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Primes in ``[lo, hi)`` given every prime up to ``sqrt(hi)``."""
    flags = np.ones(hi - lo, dtype=bool)
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, ((lo + p - 1) // p) * p)
        flags[start - lo :: p] = False
    if lo <= 1:
        flags[: 2 - lo] = False
    return np.flatnonzero(flags).astype(np.int64) + lo


def primes_up_to(n: int, threads: int = 1) -> np.ndarray:
    """Segmented sieve; segments are joined in ascending order whatever ``threads`` is."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    if n <= SEGMENT:
        return simple_sieve(n)
    base = simple_sieve(math.isqrt(n) + 1)
    bounds = [(lo, min(lo + SEGMENT, n + 1)) for lo in range(0, n + 1, SEGMENT)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(lambda b: _segment(b[0], b[1], base), bounds))
    return np.concatenate(parts)


def primes_between(lo: int, hi: int) -> np.ndarray:
    """Primes in the closed range ``[lo, hi]``."""
    if hi < 2 or hi < lo:
        return np.zeros(0, dtype=np.int64)
    lo = max(lo, 0)
    base = simple_sieve(math.isqrt(hi) + 1)
    parts = [_segment(s, min(s + SEGMENT, hi + 1), base) for s in range(lo, hi + 1, SEGMENT)]
    return np.concatenate(parts)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for ``n < 3.3e24``."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if n % p == 0:
            return n == p
    if n < _SMALL_LIMIT:
        bases = _SMALL_BASES
    elif n < _LARGE_LIMIT:
        bases = _LARGE_BASES
    else:
        raise ValueError("primality test is only deterministic below 3.3e24")
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in bases:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_pi(n: int) -> int:
    return int(len(primes_up_to(n)))


def nth_prime_upper(n: int) -> int:
    """Integer upper bound for the ``n``-th prime: ``n (ln n + ln ln n)`` for ``n >= 6``."""
    if n < 6:
        return 13
    ln = math.log(n)
    return int(n * (ln + math.log(ln))) + 1
