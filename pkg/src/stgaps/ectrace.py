"""Frobenius traces of ``y^2 = x^3 + A x + B`` and empirical Sato-Tate statistics.

Traces come from the quadratic-character sum, evaluated in a numba kernel
that walks ``f(x)`` by finite differences and looks residues up in a table of
squares built for each prime.  All reductions over primes run in ascending
prime order, so results do not depend on the thread count.
"""

from __future__ import annotations

import math
import os
import struct
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numba
import numpy as np

from .chebcore import Interval, st_mass, st_quantile
from .gapbound import AdmissibleTuple
from .primes import is_prime, primes_between, primes_up_to

# numba probes TBB on first parallel launch; the fallback layers are fine here
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

X_MAX_LIMIT = 10 ** 8
BOUNDARY_TOL = 1e-12
CM_WARN_LEVEL = 0.05
CACHE_ENV = "STGAPS_CACHE_DIR"
CACHE_MAGIC = b"STTR"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIii")  # magic, version, A, B: 16 bytes
_RECORD = np.dtype([("p", "<u8"), ("a", "<i8")])
_I32 = 2 ** 31


class BadReduction(ValueError):
    pass


class InsufficientPrimes(ValueError):
    pass


@dataclass(frozen=True)
class CurveModel:
    A: int
    B: int

    def __post_init__(self):
        if not (-_I32 <= self.A < _I32 and -_I32 <= self.B < _I32):
            raise ValueError("A and B must fit in 32 bits")
        if self.disc == 0:
            raise ValueError(f"singular curve: A={self.A}, B={self.B} has discriminant 0")

    @property
    def disc(self) -> int:
        return -16 * (4 * self.A ** 3 + 27 * self.B ** 2)

    @classmethod
    def parse(cls, text: str) -> "CurveModel":
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'A,B', got {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def is_bad(self, p: int) -> bool:
        return (6 * self.disc) % p == 0

    def __str__(self):
        return f"y^2 = x^3 + {self.A}x + {self.B}"


@dataclass(frozen=True)
class TracePoint:
    p: int
    a_p: int

    @property
    def cos_theta(self) -> float:
        return self.a_p / (2.0 * math.sqrt(self.p))


# -- kernel -----------------------------------------------------------------------

@numba.njit(cache=True)
def _character_table(p):
    """Legendre symbol mod ``p`` as an int8 table, squares marked via ``y^2 = (y-1)^2 + 2y - 1``."""
    chi = np.full(p, -1, np.int8)
    chi[0] = 0
    s = 0
    for y in range(1, (p - 1) // 2 + 1):
        s += 2 * y - 1
        s -= p * (s >= p)
        s -= p * (s >= p)
        chi[s] = 1
    return chi


@numba.njit(cache=True)
def _trace_one(p, A, B):
    chi = _character_table(p)
    a = A % p
    b = B % p
    # four independent blocks of x, stepped by finite differences of f(x) = x^3 + a x + b:
    # df = 3x^2 + 3x + 1 + a, d2f = 6x + 6, d3f = 6; reductions are branch-free
    n = p // 4
    f = np.empty(4, np.int64)
    e = np.empty(4, np.int64)
    g = np.empty(4, np.int64)
    for j in range(4):
        x = j * n
        x2 = x * x % p
        f[j] = (x2 * x + a * x + b) % p
        e[j] = (3 * x2 + 3 * x + 1 + a) % p
        g[j] = (6 * x + 6) % p
    f0, f1, f2, f3 = f[0], f[1], f[2], f[3]
    e0, e1, e2, e3 = e[0], e[1], e[2], e[3]
    g0, g1, g2, g3 = g[0], g[1], g[2], g[3]
    h = 6 % p
    total = 0
    for _ in range(n):
        total += chi[f0] + chi[f1] + chi[f2] + chi[f3]
        f0 += e0
        f0 -= p * (f0 >= p)
        f1 += e1
        f1 -= p * (f1 >= p)
        f2 += e2
        f2 -= p * (f2 >= p)
        f3 += e3
        f3 -= p * (f3 >= p)
        e0 += g0
        e0 -= p * (e0 >= p)
        e1 += g1
        e1 -= p * (e1 >= p)
        e2 += g2
        e2 -= p * (e2 >= p)
        e3 += g3
        e3 -= p * (e3 >= p)
        g0 += h
        g0 -= p * (g0 >= p)
        g1 += h
        g1 -= p * (g1 >= p)
        g2 += h
        g2 -= p * (g2 >= p)
        g3 += h
        g3 -= p * (g3 >= p)
    for x in range(4 * n, p):
        x2 = x * x % p
        total += chi[(x2 * x + a * x + b) % p]
    return -total


@numba.njit(parallel=True, cache=True)
def _trace_many(ps, A, B):
    out = np.empty(ps.shape[0], np.int64)
    for i in numba.prange(ps.shape[0]):
        out[i] = _trace_one(ps[i], A, B)
    return out


def _set_threads(threads: Optional[int]) -> None:
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(threads or limit, limit)))


def trace_ap(curve: CurveModel, p: int) -> int:
    """``a_p = p + 1 - #E(F_p)`` for a prime of good reduction."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if curve.is_bad(p):
        raise BadReduction(f"p = {p} divides 6*disc = {6 * curve.disc}")
    return int(_trace_one(p, curve.A, curve.B))


def cos_theta(curve: CurveModel, p: int) -> float:
    return trace_ap(curve, p) / (2.0 * math.sqrt(p))


def point_count_bruteforce(curve: CurveModel, p: int) -> int:
    """Projective point count by enumerating every ``(x, y)``; for cross-checks only."""
    xs = np.arange(p, dtype=np.int64)
    rhs = (xs * xs % p * xs + curve.A * xs + curve.B) % p
    lhs = xs * xs % p
    counts = np.bincount(lhs, minlength=p)
    return int(counts[rhs].sum()) + 1


# -- trace tables and cache ----------------------------------------------------------

@dataclass
class TraceTable:
    """Good primes in ascending order with their traces, complete up to ``x_max``."""

    curve: CurveModel
    x_max: int
    primes: np.ndarray
    a_p: np.ndarray

    @property
    def cos_theta(self) -> np.ndarray:
        return self.a_p / (2.0 * np.sqrt(self.primes.astype(np.float64)))

    def upto(self, x: int) -> "TraceTable":
        n = int(np.searchsorted(self.primes, x, side="right"))
        return TraceTable(self.curve, x, self.primes[:n], self.a_p[:n])

    def to_csv(self) -> str:
        lines = ["p,a_p,cos_theta"]
        lines += [f"{p},{a},{c:.17g}" for p, a, c in zip(self.primes.tolist(), self.a_p.tolist(), self.cos_theta.tolist())]
        return "\n".join(lines) + "\n"


def _cache_path(curve: CurveModel, cache_dir: str | os.PathLike) -> Path:
    return Path(cache_dir) / f"traces_{curve.A}_{curve.B}.sttr"


def read_cache(curve: CurveModel, cache_dir) -> tuple[np.ndarray, np.ndarray]:
    """Records stored for ``curve`` (empty arrays when there is no cache file)."""
    path = _cache_path(curve, cache_dir)
    if not path.exists():
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"truncated trace cache {path}")
    magic, version, A, B = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or version != CACHE_VERSION or (A, B) != (curve.A, curve.B):
        raise ValueError(f"trace cache {path} does not belong to curve ({curve.A},{curve.B})")
    body = raw[_HEADER.size :]
    n = len(body) // _RECORD.itemsize  # a torn trailing record is ignored
    rec = np.frombuffer(body[: n * _RECORD.itemsize], dtype=_RECORD)
    return rec["p"].astype(np.int64), rec["a"].astype(np.int64)


def append_cache(curve: CurveModel, cache_dir, ps: np.ndarray, aps: np.ndarray) -> None:
    path = _cache_path(curve, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not path.exists():
        path.write_bytes(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, curve.A, curve.B))
    else:
        # drop a torn trailing record before appending
        size = path.stat().st_size
        whole = _HEADER.size + (size - _HEADER.size) // _RECORD.itemsize * _RECORD.itemsize
        if whole != size:
            os.truncate(path, whole)
    rec = np.empty(len(ps), dtype=_RECORD)
    rec["p"] = ps
    rec["a"] = aps
    with open(path, "ab") as fh:
        fh.write(rec.tobytes())


_MEMO: dict[tuple[int, int], TraceTable] = {}


def _good(curve: CurveModel, ps: np.ndarray) -> np.ndarray:
    bad = 6 * curve.disc
    if abs(bad) < 2 ** 62:
        return ps[(bad % ps) != 0]
    return np.array([p for p in ps.tolist() if bad % p], dtype=np.int64)


def traces(curve: CurveModel, x_max: int, threads: Optional[int] = None, cache_dir=None) -> TraceTable:
    """Traces at every good prime ``<= x_max``, reusing the in-memory table and the on-disk cache.

    ``cache_dir`` defaults to ``$STGAPS_CACHE_DIR``; with neither set nothing touches disk.
    """
    if x_max > X_MAX_LIMIT:
        raise ValueError(f"x_max must be at most {X_MAX_LIMIT}")
    key = (curve.A, curve.B)
    memo = _MEMO.get(key)
    if memo is not None and memo.x_max >= x_max:
        return memo.upto(x_max)
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    ps = aps = np.zeros(0, np.int64)
    covered = 1
    if memo is not None:
        ps, aps, covered = memo.primes, memo.a_p, memo.x_max
    stored_last = 0
    if cache_dir:
        cps, caps = read_cache(curve, cache_dir)
        stored_last = int(cps[-1]) if len(cps) else 0
        if stored_last > covered:
            ps, aps, covered = cps, caps, stored_last
    if covered < x_max:
        new_p = _good(curve, primes_between(covered + 1, x_max))
        _set_threads(threads)
        new_a = _trace_many(new_p, curve.A, curve.B) if len(new_p) else np.zeros(0, np.int64)
        ps = np.concatenate([ps, new_p])
        aps = np.concatenate([aps, new_a])
        covered = x_max
    if cache_dir:
        fresh = ps > stored_last
        if fresh.any():
            append_cache(curve, cache_dir, ps[fresh], aps[fresh])
    table = TraceTable(curve, covered, ps, aps)
    _MEMO[key] = table
    return table.upto(x_max)


# -- interval membership ------------------------------------------------------------

def _cos_ge(a: int, p: int, t: Fraction) -> bool:
    """Exact ``a / (2 sqrt p) >= t``."""
    # compare X = a * den with Y * sqrt(p), Y = 2 * num
    X, Y = a * t.denominator, 2 * t.numerator
    if X >= 0 and Y <= 0:
        return True
    if X < 0 and Y >= 0:
        return False
    if X >= 0:
        return X * X >= Y * Y * p
    return X * X <= Y * Y * p


def _cos_le(a: int, p: int, t: Fraction) -> bool:
    return _cos_ge(-a, p, -t)


def membership(table: TraceTable, interval: Interval) -> tuple[np.ndarray, int]:
    """Mask of primes with ``alpha <= cos theta_p <= beta`` decided exactly, plus the count
    of primes whose ``cos theta_p`` lies within ``1e-12`` of an endpoint."""
    c = table.cos_theta
    a_f, b_f = float(interval.alpha), float(interval.beta)
    mask = (c >= a_f) & (c <= b_f)
    near = (np.abs(c - a_f) <= 1e-9) | (np.abs(c - b_f) <= 1e-9)
    for i in np.flatnonzero(near).tolist():
        p, a = int(table.primes[i]), int(table.a_p[i])
        mask[i] = _cos_ge(a, p, interval.alpha) and _cos_le(a, p, interval.beta)
    hits = int(np.count_nonzero((np.abs(c - a_f) <= BOUNDARY_TOL) | (np.abs(c - b_f) <= BOUNDARY_TOL)))
    return mask, hits


def enumerate_PI(curve: CurveModel, interval: Interval, x_max: int, threads: Optional[int] = None) -> np.ndarray:
    """Good primes ``p <= x_max`` with ``cos theta_p`` in ``interval``, ascending."""
    table = traces(curve, x_max, threads)
    mask, _ = membership(table, interval)
    return table.primes[mask]


# -- statistics ----------------------------------------------------------------------

@dataclass
class DiscrepancyReport:
    curve: CurveModel
    x: int
    bins: int
    n_primes: int
    discrepancy: float
    edges: list[float]
    counts: list[int]
    mu_mass: list[float]
    warning: Optional[str] = None

    @property
    def freqs(self) -> list[float]:
        return [c / self.n_primes if self.n_primes else 0.0 for c in self.counts]

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count,freq,mu_mass"]
        for j in range(self.bins):
            lines.append(f"{self.edges[j]:.17g},{self.edges[j + 1]:.17g},{self.counts[j]},{self.freqs[j]:.17g},{self.mu_mass[j]:.17g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "curve": [self.curve.A, self.curve.B],
            "x": self.x,
            "bins": self.bins,
            "n_primes": self.n_primes,
            "discrepancy": self.discrepancy,
            "table": [
                {"bin_lo": self.edges[j], "bin_hi": self.edges[j + 1], "count": self.counts[j],
                 "freq": self.freqs[j], "mu_mass": self.mu_mass[j]}
                for j in range(self.bins)
            ],
            "warning": self.warning,
        }


def st_bin_edges(bins: int) -> list[float]:
    return [-1.0] + [st_quantile(j / bins) for j in range(1, bins)] + [1.0]


def st_discrepancy(curve: CurveModel, x: int, bins: int = 10, threads: Optional[int] = None) -> DiscrepancyReport:
    """Largest deviation of the empirical bin frequency from ``1/bins`` over equal-mass bins."""
    if bins < 2:
        raise ValueError("bins must be at least 2")
    table = traces(curve, x, threads)
    edges = st_bin_edges(bins)
    idx = np.searchsorted(np.asarray(edges[1:-1]), table.cos_theta, side="right")
    counts = np.bincount(idx, minlength=bins).astype(np.int64)
    n = int(counts.sum())
    mu = [st_mass(edges[j], edges[j + 1]) for j in range(bins)]
    disc = max(abs(int(c) / n - 1 / bins) for c in counts) if n else 0.0
    warning = None
    if x >= 10 ** 6 and disc > CM_WARN_LEVEL:
        warning = (
            f"discrepancy {disc:.4f} > {CM_WARN_LEVEL} at x = {x}: traces do not follow the "
            "Sato-Tate law (CM curve?)"
        )
    return DiscrepancyReport(curve, x, bins, n, disc, edges, [int(c) for c in counts], mu, warning)


def _chebU_values(ell: int, c: np.ndarray) -> np.ndarray:
    prev, cur = np.ones_like(c), 2 * c
    if ell == 0:
        return prev
    for _ in range(ell - 1):
        prev, cur = cur, 2 * c * cur - prev
    return cur


@dataclass(frozen=True)
class ChebSum:
    ell: int
    x: int
    sum: float
    ratio: float
    n_terms: int
    prime_count: int

    def to_json(self) -> dict:
        return {"schema": "v1", **self.__dict__}


def chebyshev_sum(curve: CurveModel, ell: int, x: int, threads: Optional[int] = None) -> ChebSum:
    """``sum U_ell(cos theta_p)`` over good ``p <= x``; ``ratio = |sum| / pi(x)``."""
    if not 0 <= ell <= 8:
        raise ValueError("ell must lie in 0..8")
    table = traces(curve, x, threads)
    vals = _chebU_values(ell, table.cos_theta)
    total = math.fsum(vals.tolist())
    pi_x = int(len(primes_up_to(x)))
    return ChebSum(ell, x, total, abs(total) / pi_x if pi_x else 0.0, len(vals), pi_x)


@dataclass(frozen=True)
class GapScan:
    m: int
    min_gap: int
    attaining_n: int
    p_n: int
    count: int

    def to_json(self) -> dict:
        return {"schema": "v1", **self.__dict__}


def scan_gaps(curve: CurveModel, interval: Interval, m: int, x_max: int, threads: Optional[int] = None) -> GapScan:
    """``min_n (p_{I,n+m} - p_{I,n})`` over the enumerated primes; ``n`` is 1-based."""
    if m < 1:
        raise ValueError("m must be positive")
    ps = enumerate_PI(curve, interval, x_max, threads)
    if len(ps) < m + 1:
        raise InsufficientPrimes(f"only {len(ps)} primes in P_I up to {x_max}, need {m + 1}")
    gaps = ps[m:] - ps[:-m]
    i = int(np.argmin(gaps))
    return GapScan(m, int(gaps[i]), i + 1, int(ps[i]), int(len(ps)))


def scan_constellations(
    curve: CurveModel,
    interval: Interval,
    h: AdmissibleTuple | Sequence[int],
    m: int,
    x_max: int,
    threads: Optional[int] = None,
) -> list[int]:
    """All ``1 <= n <= x_max`` with at least ``m + 1`` of the ``n + h_i`` in ``P_I``."""
    if not isinstance(h, AdmissibleTuple):
        h = AdmissibleTuple(tuple(int(v) for v in h))
    if m < 0:
        raise ValueError("m must be nonnegative")
    if not h.h:
        return []
    top = x_max + h.h[-1]
    ps = enumerate_PI(curve, interval, top, threads)
    inP = np.zeros(top + 1, dtype=np.int32)
    inP[ps] = 1
    hits = np.zeros(x_max + 1, dtype=np.int32)
    for shift in h.h:
        hits += inP[shift : shift + x_max + 1]
    hits[0] = 0
    return np.flatnonzero(hits >= m + 1).tolist()
