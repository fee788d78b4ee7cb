import math
import random
from fractions import Fraction as Q

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stgaps import ectrace
from stgaps.chebcore import Interval
from stgaps.ectrace import (
    BadReduction,
    CurveModel,
    InsufficientPrimes,
    TraceTable,
    append_cache,
    chebyshev_sum,
    cos_theta,
    enumerate_PI,
    membership,
    point_count_bruteforce,
    read_cache,
    scan_constellations,
    scan_gaps,
    st_discrepancy,
    trace_ap,
    traces,
)
from stgaps.primes import primes_up_to

E11 = CurveModel(1, 1)


def _random_curves(n, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        A, B = rng.randint(-1000, 1000), rng.randint(-1000, 1000)
        if 4 * A ** 3 + 27 * B ** 2:
            out.append(CurveModel(A, B))
    return out


def test_small_trace_by_hand():
    # x = 0..4 gives rhs 1, 3, 1, 1, 4 mod 5: 8 affine points plus infinity
    assert trace_ap(E11, 5) == -3
    assert cos_theta(E11, 5) == pytest.approx(-0.6708, abs=1e-4)


def test_curve_validation():
    with pytest.raises(ValueError):
        CurveModel(0, 0)
    with pytest.raises(ValueError):
        CurveModel(-3, 2)
    with pytest.raises(ValueError):
        CurveModel(2 ** 31, 1)
    assert CurveModel.parse("-2,3") == CurveModel(-2, 3)
    with pytest.raises(ValueError):
        CurveModel.parse("1")


def test_bad_primes_rejected():
    # disc(1,1) = -16 * 31
    for p in (2, 3, 31):
        with pytest.raises(BadReduction):
            trace_ap(E11, p)
    with pytest.raises(ValueError):
        trace_ap(E11, 9)


@pytest.mark.parametrize("curve", _random_curves(20, 1))
def test_kernel_matches_bruteforce(curve):
    for p in primes_up_to(500).tolist():
        if curve.is_bad(p):
            continue
        assert trace_ap(curve, p) == p + 1 - point_count_bruteforce(curve, p)


@given(st.integers(-50, 50), st.integers(-50, 50), st.sampled_from(primes_up_to(3000).tolist()[2:]))
def test_kernel_matches_bruteforce_random(A, B, p):
    if 4 * A ** 3 + 27 * B ** 2 == 0:
        return
    curve = CurveModel(A, B)
    if curve.is_bad(p):
        return
    assert trace_ap(curve, p) == p + 1 - point_count_bruteforce(curve, p)


def test_table_matches_single_traces_and_hasse():
    ectrace._MEMO.clear()
    for curve in _random_curves(5, 2):
        t = traces(curve, 10 ** 4, threads=1)
        assert np.all(np.diff(t.primes) > 0)
        assert np.all(np.abs(t.a_p) ** 2 <= 4 * t.primes)
        good = [p for p in primes_up_to(10 ** 4).tolist() if not curve.is_bad(p)]
        assert t.primes.tolist() == good
        for i in range(0, len(good), 97):
            assert t.a_p[i] == trace_ap(curve, good[i])


def test_memo_extension_equals_fresh_computation():
    ectrace._MEMO.clear()
    small = traces(E11, 5000)
    big = traces(E11, 20000)
    ectrace._MEMO.clear()
    fresh = traces(E11, 20000)
    assert np.array_equal(big.primes, fresh.primes) and np.array_equal(big.a_p, fresh.a_p)
    assert np.array_equal(small.a_p, fresh.upto(5000).a_p)


def test_thread_counts_agree():
    ectrace._MEMO.clear()
    a = traces(E11, 30000, threads=1)
    ectrace._MEMO.clear()
    b = traces(E11, 30000, threads=4)
    assert np.array_equal(a.a_p, b.a_p)


def test_cache_round_trip(tmp_path):
    ectrace._MEMO.clear()
    t1 = traces(E11, 3000, cache_dir=tmp_path)
    path = tmp_path / "traces_1_1.sttr"
    raw = path.read_bytes()
    assert raw[:4] == b"STTR" and len(raw) == 16 + 16 * len(t1.primes)
    ectrace._MEMO.clear()
    t2 = traces(E11, 6000, cache_dir=tmp_path)
    ps, aps = read_cache(E11, tmp_path)
    assert np.array_equal(ps, t2.primes) and np.array_equal(aps, t2.a_p)
    # torn trailing record is ignored on read and dropped before the next append
    with open(path, "ab") as fh:
        fh.write(b"\x01\x02\x03")
    ps2, _ = read_cache(E11, tmp_path)
    assert np.array_equal(ps2, ps)
    append_cache(E11, tmp_path, np.array([6007]), np.array([0]))
    ps3, _ = read_cache(E11, tmp_path)
    assert ps3.tolist() == ps.tolist() + [6007]


def test_cache_rejects_other_curve(tmp_path):
    ectrace._MEMO.clear()
    traces(E11, 1000, cache_dir=tmp_path)
    (tmp_path / "traces_1_2.sttr").write_bytes((tmp_path / "traces_1_1.sttr").read_bytes())
    with pytest.raises(ValueError):
        read_cache(CurveModel(1, 2), tmp_path)


def test_enumerate_matches_direct_filter():
    ectrace._MEMO.clear()
    I = Interval(Q(-1), Q(-5, 6))
    got = enumerate_PI(E11, I, 1000).tolist()
    want = [
        p for p in primes_up_to(1000).tolist()
        if not E11.is_bad(p) and trace_ap(E11, p) <= -(5 / 3) * math.sqrt(p)
    ]
    assert got == want and got


def test_membership_exact_at_boundary():
    # synthetic rows with cos theta exactly 1/2; the second endpoint rounds to 0.5 in floats
    t = TraceTable(E11, 100, np.array([4, 9, 25], dtype=np.int64), np.array([2, 3, 5], dtype=np.int64))
    mask, hits = membership(t, Interval(Q(1, 2), Q(1)))
    assert mask.tolist() == [True, True, True] and hits == 3
    mask, _ = membership(t, Interval(Q(-1), Q(1, 2) - Q(1, 10 ** 17)))
    assert mask.tolist() == [False, False, False]


def test_histogram_partition():
    ectrace._MEMO.clear()
    rep = st_discrepancy(E11, 10 ** 4, bins=7)
    assert sum(rep.counts) == rep.n_primes == len(traces(E11, 10 ** 4).primes)
    assert sum(rep.mu_mass) == pytest.approx(1)
    assert all(m == pytest.approx(1 / 7, abs=1e-9) for m in rep.mu_mass)
    assert rep.to_csv().splitlines()[0] == "bin_lo,bin_hi,count,freq,mu_mass"


def test_gap_scan_whole_interval():
    ectrace._MEMO.clear()
    # 2 and 3 are bad for every curve here, so consecutive good primes differ by at least 2
    g = scan_gaps(E11, Interval(Q(-1), Q(1)), 1, 1000)
    assert g.min_gap == 2 and g.p_n == 5 and g.attaining_n == 1


def test_gap_scan_nonincreasing_and_small():
    ectrace._MEMO.clear()
    I = Interval(Q(0), Q(1))
    gaps = [scan_gaps(E11, I, 1, x).min_gap for x in (10 ** 3, 10 ** 4, 10 ** 5)]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] <= 10
    with pytest.raises(InsufficientPrimes):
        scan_gaps(E11, Interval(Q(-1), Q(-99, 100)), 50, 1000)


def test_constellations():
    ectrace._MEMO.clear()
    whole = Interval(Q(-1), Q(1))
    twins = scan_constellations(E11, whole, (0, 2), 1, 2000)
    good = set(p for p in primes_up_to(2002).tolist() if not E11.is_bad(p))
    assert twins == [n for n in range(1, 2001) if n in good and n + 2 in good]
    I = Interval(Q(-1, 2), Q(1))
    h = (0, 2, 6)
    m2 = set(scan_constellations(E11, I, h, 2, 5000))
    m1 = set(scan_constellations(E11, I, h, 1, 5000))
    assert m2 and m2 <= m1
    with pytest.raises(ValueError):
        scan_constellations(E11, I, (0, 1, 2), 1, 100)


@pytest.mark.parametrize("ell", range(9))
def test_chebyshev_sum_bounds(ell):
    ectrace._MEMO.clear()
    s = chebyshev_sum(E11, ell, 10 ** 4)
    assert s.ratio <= ell + 1
    assert s.prime_count == len(primes_up_to(10 ** 4))
    if ell == 0:
        assert s.sum == s.n_terms


def test_chebyshev_sum_below_first_good_prime():
    assert chebyshev_sum(E11, 3, 4).sum == 0
