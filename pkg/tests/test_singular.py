import math

import numpy as np
import pytest

from heckeshift import (
    EigenvalueTable,
    InputError,
    SingularSeries,
    dq_coefficient,
    local_factor_w,
    rankin_constant_empirical,
    rankin_constant_euler,
    singular_series_Bh,
)


def _euler_factor(p, lam):
    return 1.0 / (1.0 - 1.0 / p) / (1.0 - (lam * lam - 2.0) / p + 1.0 / p / p)


def _synthetic_table(limit, fill):
    vals = np.full(limit + 1, fill, dtype=np.float64)
    vals[0] = 0.0
    vals[1] = 1.0
    return EigenvalueTable(12, limit, vals)


# ---------------------------------------------------------------------------
# Rankin-Selberg constant
# ---------------------------------------------------------------------------


def test_euler_fixed_angle_algebra():
    # all lambda(p) = 0 means every local factor is (1-1/p)^-1 (1+2/p+1/p^2)^-1
    table = _synthetic_table(5000, 0.0)
    est = rankin_constant_euler(table, 5000)
    primes = [p for p in range(2, 5001) if all(p % d for d in range(2, int(p**0.5) + 1))]
    direct = 6.0 / math.pi**2
    for p in primes:
        direct *= _euler_factor(p, 0.0)
    assert est.value == pytest.approx(direct, rel=1e-12)


def test_euler_product_equals_exp_log(table_200k, sieve_200k):
    # reciprocal check: the product of the factors equals exp(sum of logs)
    est = rankin_constant_euler(table_200k, 100_000)
    direct = 6.0 / math.pi**2
    for p in sieve_200k.primes[sieve_200k.primes <= 100_000]:
        direct *= _euler_factor(int(p), float(table_200k[int(p)]))
    assert est.value == pytest.approx(direct, rel=1e-12)


def test_euler_self_consistency(table_200k):
    small = rankin_constant_euler(table_200k, 20_000)
    large = rankin_constant_euler(table_200k, 200_000)
    assert abs(small.value - large.value) <= 3.0 * (small.uncertainty + large.uncertainty)


def test_euler_refuses_small_cutoff(table_200k):
    with pytest.raises(InputError):
        rankin_constant_euler(table_200k, 999)


def test_empirical_constant_sequence_is_exact():
    table = _synthetic_table(5000, 1.0)  # lambda^2 = 1 everywhere
    est = rankin_constant_empirical(table, [1000, 2000, 3000, 4000, 5000])
    assert est.value == pytest.approx(1.0, rel=1e-15)


def test_empirical_grid_stability(table_200k):
    a = rankin_constant_empirical(table_200k, [20_000 * k for k in range(1, 11)])
    b = rankin_constant_empirical(table_200k, [10_000 * k for k in range(1, 11)])
    assert abs(a.value - b.value) / a.value < 0.02


def test_empirical_needs_three_points(table_200k):
    with pytest.raises(InputError):
        rankin_constant_empirical(table_200k, [1000, 2000])


def test_cross_method_agreement(c1f_200k):
    c1 = c1f_200k
    assert abs(c1.euler_estimate - c1.empirical_estimate) <= 3.0 * c1.uncertainty
    assert c1.chosen == c1.empirical_estimate


# ---------------------------------------------------------------------------
# local factors w(q0, q1)
# ---------------------------------------------------------------------------


def test_w_trivial_empty_products(table_200k, c1f_200k):
    w = local_factor_w(1, 1, c1f_200k.chosen, table_200k)
    assert w.value == c1f_200k.chosen
    assert w.truncation_error == 0.0


def test_w_prime_in_q1_formula(table_200k, c1f_200k):
    # q0 = 1, q1 = p: no series factor at all
    c1f = c1f_200k.chosen
    for p in (2, 3, 5):
        lam = float(table_200k[p])
        expected = c1f * (p - 1) / (p + 1) * (1 - (lam * lam - 2) / p + 1 / p**2)
        w = local_factor_w(1, p, c1f, table_200k)
        assert w.value == pytest.approx(expected, rel=1e-13)


def test_w_overlap_prime_has_no_series(table_200k, c1f_200k):
    # q = p^2 split as q0 = q1 = p: the coprimality constraint forces the
    # local factor lambda(p)^2 with no series
    c1f = c1f_200k.chosen
    p = 3
    lam = float(table_200k[p])
    base = (p - 1) / (p + 1) * (1 - (lam * lam - 2) / p + 1 / p**2)
    w = local_factor_w(p, p, c1f, table_200k)
    assert w.value == pytest.approx(c1f * base * lam * lam, rel=1e-13)
    assert w.truncation_error == 0.0


def test_w_against_direct_average(table_200k, c1f_200k):
    # w(p, 1) is the density of lambda(pn)^2 over n
    c1f = c1f_200k.chosen
    for p in (2, 3, 5):
        x = table_200k.limit // p
        lam = table_200k.values
        emp = float(np.sum(lam[p : p * x + 1 : p] ** 2)) / x
        w = local_factor_w(p, 1, c1f, table_200k)
        assert abs(emp / w.value - 1.0) < 0.05


def test_w_prime_coverage_error(table_200k, c1f_200k):
    big_prime = 2_000_003
    with pytest.raises(InputError):
        local_factor_w(big_prime, 1, c1f_200k.chosen, table_200k)


def test_w_truncation_error_under_tolerance(table_200k, c1f_200k):
    for q0, q1, tol in [(2, 1, 1e-6), (8, 3, 1e-9), (30, 1, 1e-12)]:
        w = local_factor_w(q0, q1, c1f_200k.chosen, table_200k, tol=tol)
        assert w.truncation_error < tol


# ---------------------------------------------------------------------------
# D_q
# ---------------------------------------------------------------------------


def test_dq_unit_is_c1f(table_200k, c1f_200k):
    assert dq_coefficient(1, c1f_200k.chosen, table_200k).value == c1f_200k.chosen


def test_dq_prime_two_terms(table_200k, c1f_200k):
    c1f = c1f_200k.chosen
    for p in (2, 3, 7):
        w_p1 = local_factor_w(p, 1, c1f, table_200k).value
        w_1p = local_factor_w(1, p, c1f, table_200k).value
        expected = w_p1 / p - w_1p / (p - 1)
        assert dq_coefficient(p, c1f, table_200k).value == pytest.approx(
            expected, rel=1e-12
        )


def test_dq_squarefree_term_count(table_200k, c1f_200k):
    # q = 6: the four ordered factorizations with squarefree q1
    c1f = c1f_200k.chosen
    parts = []
    for q1 in (1, 2, 3, 6):
        q0 = 6 // q1
        mu = {1: 1, 2: -1, 3: -1, 6: 1}[q1]
        phi = {1: 1, 2: 1, 3: 2, 6: 2}[q1]
        parts.append(mu / (phi * q0) * local_factor_w(q0, q1, c1f, table_200k).value)
    assert dq_coefficient(6, c1f, table_200k).value == pytest.approx(
        math.fsum(parts), rel=1e-12
    )


def test_dq_depth_doubling_invariance(table_200k, c1f_200k):
    c1f = c1f_200k.chosen
    for q in (2, 12, 90, 128):
        base = dq_coefficient(q, c1f, table_200k).value
        deep = dq_coefficient(q, c1f, table_200k, extra_depth=8).value
        assert deep == pytest.approx(base, rel=1e-10)


def test_dq_envelope_extrapolates(table_200k, c1f_200k, singular_300):
    # constant fitted on q <= 100 should still bound q <= 300
    from heckeshift import DqEnvelope

    env = DqEnvelope.fit(np.abs(singular_300.dq[:101]), singular_300.sieve)
    d2 = singular_300.sieve.divisor_counts
    for q in range(101, 301):
        assert abs(singular_300.dq[q]) <= env.bound(q, int(d2[q]))


# ---------------------------------------------------------------------------
# B_h
# ---------------------------------------------------------------------------


def test_bh_leading_term_is_c1f_squared(singular_300, c1f_200k):
    r = singular_300.bh(7)
    assert r.terms[0] == pytest.approx(c1f_200k.chosen**2, rel=1e-12)


def test_bh_mean_approaches_c1f_squared(singular_300, c1f_200k):
    hs = np.arange(1, 2001)
    mean = float(singular_300.bh_values(hs).mean())
    assert abs(mean / c1f_200k.chosen**2 - 1.0) < 0.02


def test_bh_mean_deviation_shrinks(singular_300, c1f_200k):
    target = c1f_200k.chosen**2
    devs = []
    for H in (100, 1000, 10_000):
        mean = float(singular_300.bh_values(np.arange(1, H + 1)).mean())
        devs.append(abs(mean - target))
    assert devs[2] < devs[0]
    assert devs[1] < devs[0]


def test_bh_doubling_within_tail(table_200k, singular_300):
    grown = singular_300.grown(600)
    for h in (1, 2, 6, 24, 97, 360):
        a = singular_300.bh(h)
        b = grown.bh(h, q_max=600)
        assert abs(b.value - a.value) < a.tail_bound


def test_bh_envelope_in_d2(singular_300, sieve_200k):
    d2 = sieve_200k.divisor_counts
    ratios = [abs(singular_300.bh(h).value) / d2[h] for h in range(1, 500)]
    fitted = max(ratios[:250])
    assert max(ratios) <= 4.0 * fitted


def test_bh_batch_matches_scalar_bitwise(singular_300):
    hs = [1, 2, 3, 17, 121, 1999]
    batch = singular_300.bh_values(hs)
    for h, b in zip(hs, batch):
        assert b == singular_300.bh(h).value


def test_bh_adaptive_mode(table_200k, c1f_200k):
    r = singular_series_Bh(5, c1f_200k.chosen, table_200k, tol=0.05)
    assert r.tail_bound < 0.05
    assert r.q_max >= 256


def test_bh_requires_positive_shift(singular_300):
    with pytest.raises(InputError):
        singular_300.bh(0)


def test_singular_qmax_coverage(table_200k, c1f_200k):
    with pytest.raises(InputError):
        SingularSeries(table_200k, c1f_200k.chosen, q_max=table_200k.limit + 1)
