import math
from fractions import Fraction as Q

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from stgaps.gapbound import (
    DomainError,
    NonpositiveInput,
    OutOfRange,
    AdmissibleTuple,
    dusart_log_pn,
    dusart_log_pn_lower,
    first_k_primes_above,
    gap_bound_report,
    is_admissible,
    mk_lower_bound,
    prime_count_upper,
    required_Mk,
    solve_log_k,
    closed_form_log,
    theta_tilde,
)
from stgaps.primes import prime_pi, primes_up_to


@pytest.mark.parametrize("ell,want", [(8, Q(1, 7)), (1, Q(1, 2)), (3, Q(1, 2)), (0, Q(1, 2)), (4, Q(1, 3))])
def test_theta_tilde(ell, want):
    assert theta_tilde(ell) == want


def test_required_Mk():
    assert abs(float(required_Mk(1, Q(1017, 10 ** 6), Q(1, 7))) - 13766.0) <= 0.5
    assert required_Mk(1, 1, 1) == 2
    assert required_Mk(2, Q(1, 2), Q(1, 2)) == 16
    for args in [(1, 0, 1), (1, -1, Q(1, 2)), (1, 1, 0), (0, 1, 1)]:
        with pytest.raises(NonpositiveInput):
            required_Mk(*args)


def test_solve_log_k():
    assert abs(float(solve_log_k(13766)) - 13787.1) <= 0.1
    assert abs(solve_log_k(0) - mpmath.log(213)) < 1e-15
    t = solve_log_k(13766)
    assert mk_lower_bound(t) > 13766
    assert mk_lower_bound(t - Q(1, 20)) <= 13766  # minimal on the 0.05 grid
    assert (t * 20) == int(t * 20)


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_solve_log_k_monotone(a, b):
    a, b = min(a, b), max(a, b)
    assert solve_log_k(a) <= solve_log_k(b)


def test_prime_count_upper():
    assert math.floor(prime_count_upper(13787.1)) == 13776
    D = float(prime_count_upper(math.log(100)))
    assert D == pytest.approx(2.078, abs=1e-3) and prime_pi(100) <= 100 / D
    assert prime_pi(10 ** 6) <= 10 ** 6 / float(prime_count_upper(math.log(10 ** 6)))
    with pytest.raises(DomainError):
        prime_count_upper(1)


def test_dusart_examples():
    assert math.exp(dusart_log_pn(math.log(6))) >= 13
    assert math.exp(dusart_log_pn(math.log(10 ** 6))) == pytest.approx(1.644e7, rel=1e-3)
    assert math.exp(dusart_log_pn(math.log(10 ** 6))) >= 15485863
    log_n = mpmath.mpf("13787.1") + mpmath.log(1 + mpmath.mpf(1) / 13776)
    assert float(dusart_log_pn(log_n) / mpmath.log(10)) == pytest.approx(5991.8, abs=0.05)
    with pytest.raises(DomainError):
        dusart_log_pn(math.log(5))


def test_dusart_sandwich_up_to_a_million():
    ps = primes_up_to(16_000_000)[: 10 ** 6].astype(np.float64)
    n = np.arange(1, 10 ** 6 + 1, dtype=np.float64)[5:]
    ln = np.log(n)
    lo = n * (ln + np.log(ln) - 1)
    hi = n * (ln + np.log(ln))
    assert (lo <= ps[5:]).all() and (ps[5:] <= hi).all()
    # the mpmath versions agree with the vectorised formulas
    for i in (0, 1000, 999_994):
        assert math.exp(float(dusart_log_pn(math.log(n[i])))) == pytest.approx(hi[i], rel=1e-12)
        assert math.exp(float(dusart_log_pn_lower(math.log(n[i])))) == pytest.approx(lo[i], rel=1e-12)


@given(st.floats(2, 1e5), st.floats(2, 1e5))
def test_log_space_monotone(a, b):
    a, b = min(a, b), max(a, b)
    assert prime_count_upper(a) <= prime_count_upper(b)
    assert dusart_log_pn(a) <= dusart_log_pn(b)


def test_reference_report():
    rep = gap_bound_report(Q(1017, 10 ** 6), 8, 1)
    assert abs(rep.required_Mk - 13766) <= 0.5
    assert abs(rep.log_k - 13787.1) <= 0.1
    assert rep.prime_count_floor == 13776
    assert abs(rep.diameter_log10 - 5991.81) <= 0.05
    assert rep.final_bound_log10 == 5992
    # strictness: b0 (log k - 2 log log k - 2) theta / 2 > m
    assert Q(1017, 10 ** 6) * Q(str(mpmath.nstr(mk_lower_bound(rep.log_k), 30))) * rep.theta_tilde / 2 > 1
    data = rep.to_json()
    assert data["schema"] == "v1" and data["final_bound_log10"] == 5992 and data["target_prime_count"] == 2
    assert all(math.isfinite(v) for v in (rep.required_Mk, rep.log_k, rep.diameter_log10))


def test_small_report():
    rep = gap_bound_report(1, 1, 1)
    assert rep.required_Mk == 4
    # ln 213 - 2 ln ln 213 - 2 is about 0.003, so the floor does not bind at M = 4
    assert rep.log_k == pytest.approx(10.75)
    assert mk_lower_bound(rep.log_k) > 4 >= mk_lower_bound(rep.log_k - 0.05)
    assert 0 < rep.diameter_log10 < 10


def test_floor_binds_only_for_tiny_requirements():
    h213 = mk_lower_bound(mpmath.log(213))
    assert 0 < h213 < 0.004
    assert abs(solve_log_k(h213 / 2) - mpmath.log(213)) < 1e-15
    assert solve_log_k(h213 * 2) > mpmath.log(213)


def _excess(b0, m):
    rep = gap_bound_report(b0, 8, m)
    return rep.diameter_log10 * math.log(10) - float(closed_form_log(b0, 8, m))


def test_report_within_e30_of_closed_form():
    for m in range(1, 11):
        for b0 in np.geomspace(1e-3, 1, 10):
            assert _excess(Q(repr(float(b0))), m) <= 30


def test_excess_over_closed_form_is_logarithmic():
    # the explicit M_k bound costs a factor of about x^2 e^4, x = m / (b0 theta)
    for m in range(1, 11):
        for b0 in np.geomspace(1e-4, 1, 10):
            b0 = Q(repr(float(b0)))
            x = m / (float(b0) / 7)
            assert 0 < _excess(b0, m) - 2 * math.log(x) <= 6


def test_final_rounding():
    rep = gap_bound_report(Q(1017, 10 ** 6), 8, 1)
    assert rep.final_bound_log10 == math.ceil(math.ceil(rep.diameter_log10 * 100) / 100)


@pytest.mark.parametrize("h,ok", [([0, 2], True), ([0, 2, 4], False), ([0, 4, 6], True), ([0, 2, 6, 8, 12], True)])
def test_admissibility_examples(h, ok):
    res = is_admissible(h)
    assert res.admissible is ok
    if not ok:
        assert res.failing_primes == [3] and res.witnesses[3] is None
    for p, r in res.witnesses.items():
        if r is not None:
            assert all((x - r) % p for x in h)


def test_first_k_primes_above():
    assert first_k_primes_above(1).h == (2,)
    assert first_k_primes_above(3).h == (5, 7, 11)
    t = first_k_primes_above(5)
    assert t.h == (7, 11, 13, 17, 19) and is_admissible(t.h).admissible
    for k in (0, 10 ** 7 + 1):
        with pytest.raises(OutOfRange):
            first_k_primes_above(k)


def test_first_k_primes_always_admissible():
    for k in list(range(1, 101)) + [1000, 5000, 10_000]:
        t = first_k_primes_above(k)
        assert t.k == k and min(t.h) > k


def test_admissible_tuple_validation():
    with pytest.raises(ValueError):
        AdmissibleTuple((0, 2, 4))
    with pytest.raises(ValueError):
        AdmissibleTuple((2, 0))
