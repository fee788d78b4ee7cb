"""Degree-8 polynomial minorants of interval indicators under the Sato-Tate measure.

Candidates come in three shapes, all nonnegative on ``[alpha, beta]`` and
nonpositive on the rest of ``[-1, 1]`` by their sign pattern:

* ``form1``: ``-(x-alpha)(x-beta) [(x-x1)(x-x2)(x-x3)]^2``
* ``form2``: ``-(x-alpha)(x-beta)(1-x^2) [(x-x1)(x-x2)]^2``
* ``edge`` (only when an endpoint is -1 or 1): for ``alpha = -1`` the factor
  ``(x+1)`` of form1 is replaced by ``(1-x)``, i.e. ``(x-1)(x-beta) q^2``;
  for ``beta = 1`` symmetrically ``(x-alpha)(x+1) q^2``.

Screening over the root grid is vectorised: for a fixed cubic ``q`` the
Sato-Tate average of ``w(x) q(x)^2`` is linear in the coefficients of the
weight ``w``, so the five Hankel quadratic forms ``q^T H_s q`` with
``H_s[i, j] = m_{i+j+s}`` are tabulated once per root grid. Every decision
that matters (positivity of ``b0``, certification) is then redone exactly.
"""

from __future__ import annotations

import heapq
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .chebcore import (
    Interval,
    RationalPolynomial,
    st_integral,
    st_mass,
    st_moment,
    to_fraction,
)
from .rootiso import certified_max, nonpositive_on

MAX_DEGREE = 8
# float screening margin; exact arithmetic settles everything above it
SCREEN = 1e-9


class FormKind(str, Enum):
    FORM1 = "form1"
    FORM2 = "form2"
    EDGE = "edge"

    @property
    def n_roots(self) -> int:
        return 2 if self is FormKind.FORM2 else 3

    @property
    def rank(self) -> int:
        return {"form1": 0, "form2": 1, "edge": 2}[self.value]


STANDARD_FORMS = (FormKind.FORM1, FormKind.FORM2)


def edge_applicable(interval: Interval) -> bool:
    return interval.alpha == -1 or interval.beta == 1


def default_forms(interval: Interval) -> tuple[FormKind, ...]:
    if edge_applicable(interval):
        return STANDARD_FORMS + (FormKind.EDGE,)
    return STANDARD_FORMS


@dataclass(frozen=True)
class CandidateForm:
    kind: FormKind
    interval: Interval
    roots: tuple[Fraction, ...]

    def __post_init__(self):
        kind = FormKind(self.kind)
        roots = tuple(to_fraction(r) for r in self.roots)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "roots", roots)
        if len(roots) != kind.n_roots:
            raise ValueError(f"{kind.value} takes {kind.n_roots} roots, got {len(roots)}")
        if any(not (-1 <= r <= 1) for r in roots):
            raise ValueError("roots must lie in [-1, 1]")
        if kind is FormKind.EDGE and not edge_applicable(self.interval):
            raise ValueError("edge form needs alpha = -1 or beta = 1")

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "roots": [exact_str(r) for r in self.roots]}


def weight_polynomial(kind: FormKind, interval: Interval) -> RationalPolynomial:
    """The non-square factor of a candidate (degree 2 or 4)."""
    a, b = interval.alpha, interval.beta
    if kind is FormKind.FORM1:
        return -RationalPolynomial.from_roots([a, b])
    if kind is FormKind.FORM2:
        return -RationalPolynomial.from_roots([a, b]) * RationalPolynomial([1, 0, -1])
    if a == -1:
        return RationalPolynomial.from_roots([1, b])
    if b == 1:
        return RationalPolynomial.from_roots([a, -1])
    raise ValueError("edge form needs alpha = -1 or beta = 1")


def build_candidate(c: CandidateForm) -> RationalPolynomial:
    """Exact monomial expansion of the candidate; always degree 8."""
    q = RationalPolynomial.from_roots(c.roots)
    return weight_polynomial(c.kind, c.interval) * q * q


# -- certificates ---------------------------------------------------------------

class CertifyFailure(Exception):
    """Raised when a polynomial is not a valid minorant with positive average."""

    POSITIVE_OUTSIDE = "PositiveOutside"
    NONPOSITIVE_AVERAGE = "NonpositiveAverage"

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


class NotFound(Exception):
    """The root grid holds no candidate with positive Sato-Tate average."""


def exact_str(q: Fraction) -> str:
    """Finite decimal when the denominator allows it, ``p/q`` otherwise."""
    q = Fraction(q)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(q.numerator)
    scaled = q * 10 ** digits
    sign = "-" if scaled < 0 else ""
    n = abs(scaled.numerator)
    return f"{sign}{n // 10 ** digits}.{n % 10 ** digits:0{digits}d}"


@dataclass(frozen=True)
class MinorantCertificate:
    """A polynomial verified to lie below ``1_[alpha, beta]`` on ``[-1, 1]``.

    ``sup_inside`` is a certified upper bound for the polynomial on the
    interval (``<= 1``); ``scale`` is the positive constant the input was
    divided by (1 when ``rescaled`` is false).
    """

    polynomial: RationalPolynomial
    interval: Interval
    b0: Fraction
    sup_inside: Fraction
    rescaled: bool
    scale: Fraction = Fraction(1)
    form: Optional[CandidateForm] = None

    def to_json(self) -> dict:
        out = {
            "schema": "v1",
            "interval": {"alpha": exact_str(self.interval.alpha), "beta": exact_str(self.interval.beta)},
            "coefficients": [f"{c.numerator}/{c.denominator}" for c in self.polynomial.coefficients],
            "b0": {"exact": f"{self.b0.numerator}/{self.b0.denominator}", "approx": float(self.b0)},
            "rescaled": self.rescaled,
            "sup_inside": float(self.sup_inside),
            "sup_inside_exact": f"{self.sup_inside.numerator}/{self.sup_inside.denominator}",
            "scale": f"{self.scale.numerator}/{self.scale.denominator}",
        }
        if self.form is not None:
            out["form"] = self.form.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MinorantCertificate":
        iv = Interval(to_fraction(data["interval"]["alpha"]), to_fraction(data["interval"]["beta"]))
        form = None
        if "form" in data:
            form = CandidateForm(FormKind(data["form"]["kind"]), iv, tuple(data["form"]["roots"]))
        return cls(
            polynomial=RationalPolynomial(Fraction(c) for c in data["coefficients"]),
            interval=iv,
            b0=Fraction(data["b0"]["exact"]),
            sup_inside=Fraction(data["sup_inside_exact"]),
            rescaled=bool(data["rescaled"]),
            scale=Fraction(data.get("scale", "1")),
            form=form,
        )


def certify_minorant(
    p: RationalPolynomial,
    interval: Interval,
    *,
    normalize: bool = False,
    form: Optional[CandidateForm] = None,
) -> MinorantCertificate:
    """Verify ``p <= 1_[alpha, beta]`` on ``[-1, 1]`` and ``b0 > 0``, all exactly.

    When the certified maximum of ``p`` on the interval exceeds 1 the
    polynomial is divided by that bound.  With ``normalize=True`` it is
    divided by the bound whenever that bound differs from 1, which scales the
    peak inside the interval to 1 and maximises ``b0`` for the shape.
    """
    if p.degree > MAX_DEGREE:
        raise ValueError(f"degree {p.degree} exceeds {MAX_DEGREE}")
    a, b = interval.alpha, interval.beta
    if a > -1 and not nonpositive_on(p, Fraction(-1), a):
        raise CertifyFailure(CertifyFailure.POSITIVE_OUTSIDE, f"p > 0 somewhere in [-1, {a})")
    if b < 1 and not nonpositive_on(p, b, Fraction(1)):
        raise CertifyFailure(CertifyFailure.POSITIVE_OUTSIDE, f"p > 0 somewhere in ({b}, 1]")
    b0 = st_integral(p)
    if b0 <= 0:
        raise CertifyFailure(CertifyFailure.NONPOSITIVE_AVERAGE, f"b0 = {b0}")
    sup = certified_max(p, a, b).upper
    if sup > 1 or (normalize and sup != 1):
        # sup > 0 here: p <= 0 on all of [-1, 1] would force b0 <= 0
        scaled = p / sup
        inner = certified_max(scaled, a, b).upper
        return MinorantCertificate(scaled, interval, st_integral(scaled), inner, True, sup, form)
    return MinorantCertificate(p, interval, b0, sup, False, Fraction(1), form)


def peak_normalized_b0(cert: MinorantCertificate) -> Fraction:
    """``b0`` the certificate's shape reaches once scaled to peak exactly at its bound."""
    return cert.b0 / cert.sup_inside


# -- grids ------------------------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    """Root step ``eta1`` and endpoint step ``eta2``; both must divide 2."""

    eta1: Fraction
    eta2: Fraction

    def __post_init__(self):
        e1, e2 = to_fraction(self.eta1), to_fraction(self.eta2)
        object.__setattr__(self, "eta1", e1)
        object.__setattr__(self, "eta2", e2)
        for name, e in (("eta1", e1), ("eta2", e2)):
            if not (0 < e <= 1):
                raise ValueError(f"{name} must lie in (0, 1]")
            if (2 / e).denominator != 1:
                raise ValueError(f"{name} = {e} does not divide 2")

    @classmethod
    def fine(cls) -> "GridConfig":
        return cls(Fraction(1, 100), Fraction(1, 400))

    @property
    def n_roots(self) -> int:
        return int(2 / self.eta1)

    @property
    def n_endpoints(self) -> int:
        return int(2 / self.eta2)

    def root(self, i: int) -> Fraction:
        return -1 + i * self.eta1

    def endpoint(self, i: int) -> Fraction:
        return -1 + i * self.eta2


def snap_inward(interval: Interval, eta2: Fraction) -> Interval:
    """Shrink ``interval`` to the ``eta2`` grid; raises NotFound if nothing is left."""
    eta2 = to_fraction(eta2)
    lo = math.ceil((interval.alpha + 1) / eta2)
    hi = math.floor((interval.beta + 1) / eta2)
    if lo >= hi:
        raise NotFound(f"{interval} collapses on the {eta2} grid")
    return Interval(-1 + lo * eta2, -1 + hi * eta2)


class RootTable:
    """Float Hankel quadratic forms for every root pair/triple on one grid."""

    def __init__(self, eta1: Fraction):
        self.eta1 = to_fraction(eta1)
        n = int(2 / self.eta1)
        self.nodes = np.array([float(-1 + i * self.eta1) for i in range(n + 1)])
        mom = np.array([float(st_moment(k)) for k in range(12)])

        tri = np.array(list(itertools.combinations_with_replacement(range(n + 1), 3)), dtype=np.int32)
        pairs = np.array(list(itertools.combinations_with_replacement(range(n + 1), 2)), dtype=np.int32)
        self.triples = tri
        self.pairs = pairs
        self.V3 = self._cubic_coeffs(tri)
        self.V2 = self._quadratic_coeffs(pairs)
        self.Q3 = self._hankel_forms(self.V3, mom)
        self.Q2 = self._hankel_forms(self.V2, mom)

    def _cubic_coeffs(self, idx):
        x = self.nodes[idx]
        a, b, c = x[:, 0], x[:, 1], x[:, 2]
        return np.stack([-a * b * c, a * b + a * c + b * c, -(a + b + c), np.ones(len(x))], axis=1)

    def _quadratic_coeffs(self, idx):
        x = self.nodes[idx]
        a, b = x[:, 0], x[:, 1]
        return np.stack([a * b, -(a + b), np.ones(len(x))], axis=1)

    @staticmethod
    def _hankel_forms(V, mom):
        d = V.shape[1]
        out = np.empty((5, len(V)))
        for s in range(5):
            H = np.array([[mom[i + j + s] for j in range(d)] for i in range(d)])
            out[s] = np.einsum("ni,ij,nj->n", V, H, V, optimize=True)
        return out

    def scores(self, kind: FormKind, interval: Interval) -> np.ndarray:
        """Float Sato-Tate averages of every candidate of ``kind``, in lex order."""
        w = [float(c) for c in weight_polynomial(kind, interval).coefficients]
        Q = self.Q2 if kind is FormKind.FORM2 else self.Q3
        out = w[0] * Q[0]
        for s in range(1, len(w)):
            out = out + w[s] * Q[s]
        return out

    def index_key(self, kind: FormKind, i: int) -> tuple[int, int, int]:
        if kind is FormKind.FORM2:
            a, b = self.pairs[i]
            return (int(a), int(b), 0)
        a, b, c = self.triples[i]
        return (int(a), int(b), int(c))

    def candidate(self, kind: FormKind, interval: Interval, i: int) -> CandidateForm:
        key = self.index_key(kind, i)[: kind.n_roots]
        return CandidateForm(kind, interval, tuple(-1 + k * self.eta1 for k in key))

    def coefficient_matrix(self, kind: FormKind, interval: Interval, idx: np.ndarray) -> np.ndarray:
        """Float degree-8 monomial coefficients for the selected candidates."""
        V = (self.V2 if kind is FormKind.FORM2 else self.V3)[idx]
        d = V.shape[1]
        sq = np.zeros((len(V), 2 * d - 1))
        for i in range(d):
            for j in range(d):
                sq[:, i + j] += V[:, i] * V[:, j]
        w = [float(c) for c in weight_polynomial(kind, interval).coefficients]
        out = np.zeros((len(V), MAX_DEGREE + 1))
        for s, ws in enumerate(w):
            out[:, s : s + sq.shape[1]] += ws * sq
        return out


@lru_cache(maxsize=4)
def root_table(eta1: Fraction) -> RootTable:
    return RootTable(to_fraction(eta1))


def _exact_b0(c: CandidateForm) -> Fraction:
    return st_integral(build_candidate(c))


def _first_success(table: RootTable, interval: Interval, forms: Sequence[FormKind]):
    """Lex-first candidate (over all forms) with exactly positive average, as a lazy stream."""
    def stream(kind):
        idx = np.flatnonzero(table.scores(kind, interval) > -SCREEN)
        for i in idx:
            yield table.index_key(kind, int(i)), kind.rank, kind, int(i)

    streams = [stream(kind) for kind in forms]
    for key, _, kind, i in heapq.merge(*streams):
        c = table.candidate(kind, interval, i)
        if _exact_b0(c) > 0:
            yield c


def has_success(table: RootTable, interval: Interval, forms: Sequence[FormKind]) -> bool:
    """Whether some grid candidate has exactly positive average."""
    best = -math.inf
    for kind in forms:
        best = max(best, float(table.scores(kind, interval).max()))
    if best > SCREEN:
        return True
    if best <= -SCREEN:
        return False
    return next(_first_success(table, interval, forms), None) is not None


def _approx_peak(coeffs: np.ndarray, a: float, b: float, samples: int = 129) -> np.ndarray:
    xs = np.linspace(a, b, samples)
    X = np.vander(xs, MAX_DEGREE + 1, increasing=True)
    return (coeffs @ X.T).max(axis=1)


def grid_search(
    interval: Interval,
    grid: GridConfig,
    *,
    exhaustive: bool = False,
    forms: Optional[Iterable[FormKind | str]] = None,
    normalize: Optional[bool] = None,
    threads: int = 1,
    shortlist: int = 16,
    snap: bool = False,
) -> MinorantCertificate:
    """Search the root grid for a certified minorant of ``interval``.

    With ``snap=True`` the interval is first shrunk to the ``eta2`` grid
    (a minorant of a subinterval also minorizes the original). In the default
    first-success mode candidates are visited in lexicographic root order
    (form1 before form2 before edge at equal roots) and the first one with
    exactly positive average is certified. In exhaustive mode every candidate
    is ranked by its peak-normalised average and the best is returned,
    normalised.
    """
    snapped = snap_inward(interval, grid.eta2) if snap else interval
    kinds = tuple(FormKind(f) for f in forms) if forms is not None else default_forms(snapped)
    if FormKind.EDGE in kinds and not edge_applicable(snapped):
        kinds = tuple(k for k in kinds if k is not FormKind.EDGE)
    if normalize is None:
        normalize = exhaustive
    table = root_table(grid.eta1)

    if not exhaustive:
        for cand in _first_success(table, snapped, kinds):
            try:
                return certify_minorant(build_candidate(cand), snapped, normalize=normalize, form=cand)
            except CertifyFailure:
                continue
        raise NotFound(f"no candidate with positive average for {snapped}")

    a, b = float(snapped.alpha), float(snapped.beta)
    ranked = []
    for kind in kinds:
        sc = table.scores(kind, snapped)
        idx = np.flatnonzero(sc > -SCREEN)
        if not len(idx):
            continue
        chunks = [idx[s : s + 100_000] for s in range(0, len(idx), 100_000)]

        def peak(chunk, kind=kind):
            return _approx_peak(table.coefficient_matrix(kind, snapped, chunk), a, b)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            peaks = np.concatenate(list(pool.map(peak, chunks)))
        pos = peaks > 0
        approx = np.where(pos, sc[idx] / np.where(pos, peaks, 1.0), -np.inf)
        order = np.argsort(-approx, kind="stable")[:shortlist]
        ranked.extend((float(approx[o]), kind, int(idx[o])) for o in order if approx[o] > -np.inf)
    if not ranked:
        raise NotFound(f"no candidate with positive average for {snapped}")
    ranked.sort(key=lambda t: -t[0])
    best: Optional[MinorantCertificate] = None
    best_key = None
    for approx, kind, i in ranked[:shortlist]:
        cand = table.candidate(kind, snapped, i)
        if _exact_b0(cand) <= 0:
            continue
        try:
            cert = certify_minorant(build_candidate(cand), snapped, normalize=True, form=cand)
        except CertifyFailure:
            continue
        score = peak_normalized_b0(cert)
        key = (-score, table.index_key(kind, i), kind.rank)
        if best_key is None or key < best_key:
            best, best_key = cert, key
    if best is None:
        raise NotFound(f"no certifiable candidate for {snapped}")
    if not normalize:
        return certify_minorant(build_candidate(best.form), snapped, form=best.form)
    return best


# -- the two sweeps over (alpha, beta) -------------------------------------------

@dataclass(frozen=True)
class Success:
    """Minimal ``beta`` found for one ``alpha`` of the sweep."""

    alpha: Fraction
    beta: Fraction
    contribution: float
    certificate: MinorantCertificate

    def to_json(self) -> dict:
        return {
            "alpha": exact_str(self.alpha),
            "beta": exact_str(self.beta),
            "contribution": self.contribution,
            "b0": float(self.certificate.b0),
            "rescaled": self.certificate.rescaled,
            "form": self.certificate.form.to_json() if self.certificate.form else None,
        }


def minimal_beta(alpha: Fraction, grid: GridConfig, forms: Sequence[FormKind] = STANDARD_FORMS):
    """Sweep ``beta`` upward from ``alpha`` in ``eta2`` steps; first success or None.

    Returns ``(beta, CandidateForm)``.
    """
    alpha = to_fraction(alpha)
    table = root_table(grid.eta1)
    start = int((alpha + 1) / grid.eta2)
    for j in range(start + 1, grid.n_endpoints + 1):
        beta = grid.endpoint(j)
        iv = Interval(alpha, beta)
        kinds = tuple(k for k in forms if k is not FormKind.EDGE or edge_applicable(iv))
        if not has_success(table, iv, kinds):
            continue
        cand = next(_first_success(table, iv, kinds))
        return beta, cand
    return None


def _alpha_grid(grid: GridConfig, alphas: Optional[Iterable] = None) -> list[Fraction]:
    if alphas is None:
        return [grid.endpoint(i) for i in range(grid.n_endpoints)]
    out = []
    for a in alphas:
        a = to_fraction(a)
        if ((a + 1) / grid.eta2).denominator != 1 or not (-1 <= a < 1):
            raise ValueError(f"alpha {a} is not on the eta2 grid")
        out.append(a)
    return out


def sweep(grid: GridConfig, forms: Sequence[FormKind] = STANDARD_FORMS, threads: int = 1, alphas=None):
    """``[(alpha, minimal_beta(alpha))]`` in ascending alpha; shared by both experiments."""
    root_table(grid.eta1)  # build once before fanning out
    work = _alpha_grid(grid, alphas)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        found = list(pool.map(lambda a: minimal_beta(a, grid, forms), work))
    return list(zip(work, found))


@dataclass
class ProportionReport:
    S: float
    two_S: float
    successes: list[Success] = field(default_factory=list)
    grid: Optional[GridConfig] = None

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "eta1": exact_str(self.grid.eta1) if self.grid else None,
            "eta2": exact_str(self.grid.eta2) if self.grid else None,
            "S": self.S,
            "two_S": self.two_S,
            "successes": [s.to_json() for s in self.successes],
        }


def proportion_experiment(
    grid: GridConfig,
    *,
    forms: Sequence[FormKind] = STANDARD_FORMS,
    threads: int = 1,
    alphas: Optional[Iterable] = None,
    swept: Optional[list] = None,
) -> ProportionReport:
    """Lower bound ``2S`` on the Sato-Tate proportion of minorizable intervals.

    For each grid ``alpha`` the smallest grid ``beta`` with a positive
    candidate is found; it adds ``mu([alpha - eta2, alpha]) * mu([beta, 1])``
    to ``S`` unless ``alpha = -1``. Each success is certified exactly.
    """
    successes = []
    for alpha, res in swept if swept is not None else sweep(grid, forms, threads, alphas):
        if res is None:
            continue
        beta, cand = res
        cert = certify_minorant(build_candidate(cand), cand.interval, form=cand)
        contrib = 0.0 if alpha == -1 else st_mass(alpha - grid.eta2, alpha) * st_mass(beta, 1)
        successes.append(Success(alpha, beta, contrib, cert))
    S = math.fsum(s.contribution for s in successes)
    return ProportionReport(S, 2 * S, successes, grid)


@dataclass
class ThresholdReport:
    S: float
    successes: list[Success] = field(default_factory=list)
    unresolved: list[Fraction] = field(default_factory=list)
    unresolved_mass: float = 0.0
    grid: Optional[GridConfig] = None

    @property
    def certified_threshold(self) -> float:
        """Threshold that also covers alphas where no beta succeeded."""
        return max(self.S, self.unresolved_mass)

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "eta1": exact_str(self.grid.eta1) if self.grid else None,
            "eta2": exact_str(self.grid.eta2) if self.grid else None,
            "S": self.S,
            "certified_threshold": self.certified_threshold,
            "unresolved_alphas": [exact_str(a) for a in self.unresolved],
            "unresolved_mass": self.unresolved_mass,
            "successes": [s.to_json() for s in self.successes],
        }


def threshold_experiment(
    grid: GridConfig,
    *,
    forms: Sequence[FormKind] = STANDARD_FORMS,
    threads: int = 1,
    alphas: Optional[Iterable] = None,
    swept: Optional[list] = None,
) -> ThresholdReport:
    """Largest ``mu([alpha - eta2, beta_min(alpha)])`` over the sweep (alpha != -1).

    Alphas with no successful beta are listed in ``unresolved``; the largest
    ``mu([alpha - eta2, 1])`` among them is ``unresolved_mass``.
    """
    successes, unresolved = [], []
    S = 0.0
    worst_unresolved = 0.0
    for alpha, res in swept if swept is not None else sweep(grid, forms, threads, alphas):
        if res is None:
            unresolved.append(alpha)
            if alpha != -1:
                worst_unresolved = max(worst_unresolved, st_mass(alpha - grid.eta2, 1))
            continue
        beta, cand = res
        cert = certify_minorant(build_candidate(cand), cand.interval, form=cand)
        m = 0.0 if alpha == -1 else st_mass(alpha - grid.eta2, beta)
        S = max(S, m)
        successes.append(Success(alpha, beta, m, cert))
    return ThresholdReport(S, successes, unresolved, worst_unresolved, grid)
