import json
import math
import random
from fractions import Fraction as Q

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from stgaps.chebcore import Interval, RationalPolynomial, st_integral, st_mass, st_measure, st_quantile
from stgaps.minorant import (
    STANDARD_FORMS,
    SCREEN,
    CandidateForm,
    CertifyFailure,
    FormKind,
    GridConfig,
    MinorantCertificate,
    NotFound,
    build_candidate,
    certify_minorant,
    exact_str,
    grid_search,
    minimal_beta,
    peak_normalized_b0,
    proportion_experiment,
    root_table,
    snap_inward,
    threshold_experiment,
)
from stgaps.rootiso import certified_max

REF_INTERVAL = Interval(Q(-1), Q(-5, 6))
REF_ROOTS = (Q(-2, 5), Q(4, 25), Q(17, 25))
F_REF = RationalPolynomial.from_roots([1, Q(-5, 6), *REF_ROOTS, *REF_ROOTS])
COARSE = GridConfig(Q(1, 10), Q(1, 20))

grid_q = st.integers(0, 40).map(lambda i: Q(-1) + Q(i, 20))


def sympy_b0(p: RationalPolynomial) -> sympy.Rational:
    """Independent oracle: symbolic (2/pi) * integral of p(x) sqrt(1-x^2)."""
    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x ** n for n, c in enumerate(p.coefficients))
    return sympy.nsimplify(sympy.integrate(expr * sympy.sqrt(1 - x ** 2), (x, -1, 1)) * 2 / sympy.pi)


# -- candidates ------------------------------------------------------------------

def test_form2_full_interval_zero_roots():
    p = build_candidate(CandidateForm(FormKind.FORM2, Interval(-1, 1), (0, 0)))
    want = RationalPolynomial([1, 0, -1]) ** 2 * RationalPolynomial([0, 0, 0, 0, 1])
    assert p == want and p.degree == 8


def test_form1_repeated_zero_root():
    p = build_candidate(CandidateForm(FormKind.FORM1, Interval(-1, 1), (0, 0, 0)))
    assert p == RationalPolynomial([0, 0, 0, 0, 0, 0, 1, 0, -1])


def test_form1_on_right_interval_is_negated_reference():
    # -(x + 5/6)(x - 1) q^2 carries the opposite sign of (x - 1)(x + 5/6) q^2
    p = build_candidate(CandidateForm(FormKind.FORM1, Interval(Q(-5, 6), 1), (-0.4, 0.16, 0.68)))
    assert p == -F_REF


def test_edge_form_reproduces_reference():
    assert build_candidate(CandidateForm(FormKind.EDGE, REF_INTERVAL, REF_ROOTS)) == F_REF


def test_candidate_validation():
    with pytest.raises(ValueError):
        CandidateForm(FormKind.FORM1, Interval(-1, 1), (0, 0))
    with pytest.raises(ValueError):
        CandidateForm(FormKind.FORM2, Interval(-1, 1), (0, 2))
    with pytest.raises(ValueError):
        CandidateForm(FormKind.EDGE, Interval(-0.5, 0.5), (0, 0, 0))


@given(st.sampled_from(list(FormKind)), grid_q, grid_q, st.lists(grid_q, min_size=3, max_size=3))
def test_sign_structure_outside_interval(kind, a, b, roots):
    if a == b:
        return
    iv = Interval(min(a, b), max(a, b))
    if kind is FormKind.EDGE and not (iv.alpha == -1 or iv.beta == 1):
        return
    p = build_candidate(CandidateForm(kind, iv, roots[: kind.n_roots]))
    assert p.degree == 8
    xs = np.linspace(-1, 1, 1000)
    outside = xs[(xs < float(iv.alpha)) | (xs > float(iv.beta))]
    vals = np.polynomial.polynomial.polyval(outside, [float(c) for c in p.coefficients])
    assert (vals <= 1e-12).all()
    if kind is FormKind.FORM2:
        for i in range(201):
            x = Q(-1) + Q(i, 100)
            if not (iv.alpha <= x <= iv.beta):
                assert p(x) <= 0


# -- certification ----------------------------------------------------------------

def test_constant_counterexamples():
    with pytest.raises(CertifyFailure) as e:
        certify_minorant(RationalPolynomial([-1]), Interval(-0.5, 0.5))
    assert e.value.kind == "NonpositiveAverage"
    with pytest.raises(CertifyFailure) as e:
        certify_minorant(RationalPolynomial([Q(1, 2)]), Interval(0, Q(1, 2)))
    assert e.value.kind == "PositiveOutside"


def test_degree_limit():
    with pytest.raises(ValueError):
        certify_minorant(RationalPolynomial([0] * 9 + [1]), Interval(-1, 1))


def test_reference_polynomial_certificate_exact_values():
    cert = certify_minorant(F_REF, REF_INTERVAL)
    assert not cert.rescaled
    oracle = sympy_b0(F_REF)
    assert cert.b0 == Q(int(oracle.p), int(oracle.q)) == Q(217327, 468750000)
    assert cert.sup_inside == F_REF(Q(-1)) == Q(4450572, 9765625)


def test_reference_polynomial_peak_normalised_average():
    cert = certify_minorant(F_REF, REF_INTERVAL, normalize=True)
    assert cert.rescaled and cert.scale == Q(4450572, 9765625)
    assert cert.b0 == Q(217327, 213627456) == peak_normalized_b0(certify_minorant(F_REF, REF_INTERVAL))
    assert abs(float(cert.b0) - 0.001017) < 5e-6


def test_rescaling_contract():
    p = build_candidate(CandidateForm(FormKind.FORM1, Interval(-1, 1), (-1, -1, -1)))
    assert certified_max(p, Q(-1), Q(1)).upper > 1
    cert = certify_minorant(p, Interval(-1, 1))
    assert cert.rescaled
    assert cert.polynomial == p / cert.scale
    assert cert.sup_inside <= 1 and certified_max(cert.polynomial, Q(-1), Q(1)).upper <= 1
    assert cert.b0 == st_integral(cert.polynomial) > 0


def test_monotone_under_supersets():
    rng = random.Random(3)
    cert = certify_minorant(F_REF, REF_INTERVAL)
    for _ in range(20):
        a = Q(-1)
        b = Q(-5, 6) + Q(rng.randint(0, 100), 60)
        b = min(b, Q(1))
        again = certify_minorant(cert.polynomial, Interval(a, b))
        assert again.b0 == cert.b0
    c = grid_search(Interval(-0.6, 0.2), COARSE)
    for _ in range(20):
        lo, hi = Q(rng.randint(-100, -60), 100), Q(rng.randint(20, 100), 100)
        assert certify_minorant(c.polynomial, Interval(lo, hi)).b0 == c.b0


def test_certificate_json_round_trip():
    cert = grid_search(Interval(-0.3, 0.5), COARSE)
    data = json.loads(json.dumps(cert.to_json()))
    assert data["schema"] == "v1" and set(data) >= {"interval", "coefficients", "b0", "rescaled", "sup_inside"}
    back = MinorantCertificate.from_json(data)
    assert back.polynomial == cert.polynomial and back.b0 == cert.b0 and back.form == cert.form


def test_exact_str():
    assert exact_str(Q(-5, 6)) == "-5/6"
    assert exact_str(Q(-833, 1000)) == "-0.833"
    assert exact_str(Q(3)) == "3"


# -- grids and search -------------------------------------------------------------

def test_grid_config_validation():
    assert GridConfig.fine().n_roots == 200 and GridConfig.fine().n_endpoints == 800
    for e1, e2 in [(0, 0.1), (Q(3, 10), 0.1), (0.1, 2)]:
        with pytest.raises(ValueError):
            GridConfig(e1, e2)


def test_snap_inward():
    assert snap_inward(Interval(-1, Q(-5, 6)), Q(1, 400)) == Interval(-1, Q(-167, 200))
    with pytest.raises(NotFound):
        snap_inward(Interval(Q(1, 1000), Q(2, 1000)), Q(1, 400))


def test_full_interval_found():
    cert = grid_search(Interval(-1, 1), GridConfig.fine())
    assert cert.b0 > 0 and cert.form.roots == (-1, -1, -1) and cert.form.kind is FormKind.FORM1
    cert2 = grid_search(Interval(-1, 1), GridConfig.fine(), forms=[FormKind.FORM2])
    assert cert2.form.roots == (-1, -1)


def test_tiny_interval_not_found():
    iv = Interval(-0.01, 0.01)
    table = root_table(Q(1, 100))
    # the float screen is the enumeration oracle: nothing comes near zero
    for kind in STANDARD_FORMS:
        assert table.scores(kind, iv).max() < -SCREEN
    with pytest.raises(NotFound):
        grid_search(iv, GridConfig.fine())


def test_first_success_is_lexicographically_first():
    iv = Interval(-0.3, 0.5)
    cert = grid_search(iv, COARSE)
    table = root_table(COARSE.eta1)
    best = None
    for kind in STANDARD_FORMS:
        for i in range(len(table.pairs if kind is FormKind.FORM2 else table.triples)):
            c = table.candidate(kind, iv, i)
            if st_integral(build_candidate(c)) > 0:
                key = (table.index_key(kind, i), kind.rank)
                best = min(best, (key, c)) if best else (key, c)
                break
    assert cert.form == best[1]


def test_standard_forms_cannot_minorize_reference_interval():
    table = root_table(Q(1, 100))
    for kind in STANDARD_FORMS:
        assert table.scores(kind, REF_INTERVAL).max() < -SCREEN
    with pytest.raises(NotFound):
        grid_search(REF_INTERVAL, GridConfig.fine(), forms=STANDARD_FORMS)


def test_exhaustive_search_determinism_across_threads():
    iv = Interval(-0.2, 0.6)
    outs = {json.dumps(grid_search(iv, COARSE, exhaustive=True, threads=t).to_json()) for t in (1, 4, 8)}
    assert len(outs) == 1


# -- experiments ------------------------------------------------------------------

@pytest.fixture(scope="module")
def coarse_proportion():
    return proportion_experiment(COARSE)


def test_proportion_coarse_validity(coarse_proportion):
    rep = coarse_proportion
    assert 0 < rep.two_S < 1 and rep.two_S == 2 * rep.S
    for s in rep.successes:
        again = certify_minorant(build_candidate(s.certificate.form), s.certificate.interval)
        assert again.b0 == s.certificate.b0 > 0
        if s.alpha == -1:
            assert s.contribution == 0.0


def test_refinement_never_lowers_contribution():
    fine = GridConfig(Q(1, 20), COARSE.eta2)
    for alpha in [Q(-9, 10), Q(-1, 2), Q(-1, 5), Q(0), Q(3, 10), Q(3, 5)]:
        rc, rf = minimal_beta(alpha, COARSE), minimal_beta(alpha, fine)
        if rc is None:
            continue
        assert rf is not None and rf[0] <= rc[0]
        contrib = lambda beta: st_mass(alpha - COARSE.eta2, alpha) * st_mass(beta, 1)  # noqa: E731
        assert contrib(rf[0]) >= contrib(rc[0])


def test_threshold_coarse_dominates_fine_grid():
    coarse = GridConfig(Q(1, 20), Q(1, 100))
    fine = GridConfig.fine()
    for alpha in [Q(-1, 2), Q(0), Q(2, 5)]:
        bc, bp = minimal_beta(alpha, coarse), minimal_beta(alpha, fine)
        assert st_mass(alpha - coarse.eta2, bc[0]) >= st_mass(alpha - fine.eta2, bp[0])


def test_threshold_coarse_is_consistent():
    grid = GridConfig(Q(1, 20), Q(1, 100))
    rep = threshold_experiment(grid)
    S = rep.certified_threshold
    assert rep.S <= S < 1
    rng = random.Random(11)
    for n in range(100):
        u = 0.0 if n % 10 == 0 else rng.uniform(0, 1 - S)
        m = S if n % 2 else rng.uniform(S, 1 - u)
        a = Q(math.floor(st_quantile(u) * 10 ** 5), 10 ** 5) if u > 0 else Q(-1)
        b = min(Q(math.ceil(st_quantile(min(1.0, u + m)) * 10 ** 5), 10 ** 5), Q(1))
        iv = Interval(a, b)
        assert st_measure(iv) >= S - 1e-12
        assert grid_search(iv, grid).b0 > 0
