import cmath
import math

import numpy as np
import pytest

from heckeshift import (
    EigenvalueTable,
    InputError,
    ShiftedSumRecord,
    error_statistics,
    exp_sum_lambda_sq,
    fourth_moment_fit,
    miller_exponent_fit,
    miller_sum,
    shifted_sum,
    shifted_sum_batch,
    shifted_sum_total,
    shiu_envelope_check,
    square_table,
    window_square_sum,
    write_shifted_csv,
)

from oracles import shifted_sum_naive


# ---------------------------------------------------------------------------
# shifted sums
# ---------------------------------------------------------------------------


def test_counting_measure(ones_table):
    # all weights 1: the window X <= n <= 2X has exactly X + 1 integers
    assert shifted_sum(ones_table, 1000, 7) == 1001.0


def test_reindexing_symmetry(table_200k):
    # sum over n in [X, 2X] of w(n) w(n+h) re-indexed by m = n + h
    x, h = 5000, 12
    w = table_200k.squares
    direct = shifted_sum(table_200k, x, h)
    reindexed = math.fsum(
        w[m - h] * w[m] for m in range(x + h, 2 * x + h + 1)
    )
    assert direct == pytest.approx(reindexed, rel=1e-12)


def test_against_naive_loop(table_200k):
    expected = shifted_sum_naive(table_200k.values, 1000, 1)
    assert shifted_sum(table_200k, 1000, 1) == pytest.approx(expected, rel=1e-9)


def test_against_naive_loop_random_instances(table_200k):
    rng = np.random.default_rng(3)
    values = table_200k.values
    for _ in range(100):
        x = int(rng.integers(10, 10_000))
        h = int(rng.integers(1, 100))
        expected = shifted_sum_naive(values, x, h)
        assert shifted_sum(table_200k, x, h) == pytest.approx(expected, rel=1e-9)


def test_shifted_range_error(table_200k):
    with pytest.raises(InputError):
        shifted_sum(table_200k, table_200k.limit // 2, 1)


def test_batch_single_record(table_200k, singular_300):
    records = shifted_sum_batch(table_200k, 2000, 1, singular_300)
    assert len(records) == 1
    assert records[0].h == 1
    assert records[0].sum == shifted_sum(table_200k, 2000, 1)
    assert records[0].norm_error == (records[0].sum - records[0].bh * 2000) / 2000


def test_batch_matches_singles(table_200k, singular_300):
    records = shifted_sum_batch(table_200k, 3000, 40, singular_300)
    assert [r.h for r in records] == list(range(1, 41))
    for r in records[::7]:
        assert r.sum == shifted_sum(table_200k, 3000, r.h)


def test_batch_deterministic_across_threads(table_200k, singular_300):
    base = shifted_sum_batch(table_200k, 4000, 64, singular_300, threads=1)
    for threads in (4, 8):
        other = shifted_sum_batch(table_200k, 4000, 64, singular_300, threads=threads)
        assert other == base


def test_total_equals_batch_sum(table_200k, singular_300):
    x, h_top = 1000, 50
    records = shifted_sum_batch(table_200k, x, h_top, singular_300)
    direct = math.fsum(r.sum for r in records)
    total = shifted_sum_total(table_200k, x, h_top)
    assert total == pytest.approx(direct, rel=1e-9)


# ---------------------------------------------------------------------------
# exponential sums
# ---------------------------------------------------------------------------


def test_exp_sum_zero_phase(table_200k):
    x = 20_000
    s = exp_sum_lambda_sq(table_200k, 0.0, x)
    assert s.value.imag == 0.0
    assert s.value.real == pytest.approx(window_square_sum(table_200k, x), rel=1e-12)


def test_exp_sum_half_phase(table_200k):
    x = 5000
    s = exp_sum_lambda_sq(table_200k, 0.5, x)
    w = table_200k.squares
    expected = math.fsum((-1.0) ** n * w[n] for n in range(x, 2 * x + 1))
    assert s.value.real == pytest.approx(expected, rel=1e-9, abs=1e-9)
    assert abs(s.value.imag) < 1e-7


def test_exp_sum_conjugate_symmetry(table_200k):
    rng = np.random.default_rng(5)
    for alpha in rng.random(6):
        plus = exp_sum_lambda_sq(table_200k, float(alpha), 30_000)
        minus = exp_sum_lambda_sq(table_200k, -float(alpha), 30_000)
        diff = abs(minus.value - plus.value.conjugate())
        assert diff <= 1e-9 * max(1.0, abs(plus.value))


def test_exp_sum_triangle_inequality(table_200k):
    bound = window_square_sum(table_200k, 10_000)
    for alpha in (0.123, 0.5, 0.9171):
        s = exp_sum_lambda_sq(table_200k, alpha, 10_000)
        assert abs(s.value) <= bound * (1 + 1e-12)


def test_major_arc_concentration(table_200k):
    # |S(a/q)| for q <= 3 towers over the median at generic alpha
    x = table_200k.limit // 2
    rational = [abs(exp_sum_lambda_sq(table_200k, a, x).value)
                for a in (0.0, 0.5, 1 / 3, 2 / 3)]
    rng = np.random.default_rng(17)
    generic = sorted(
        abs(exp_sum_lambda_sq(table_200k, float(a), x).value)
        for a in rng.random(21)
    )
    median = generic[10]
    assert min(rational) >= 5.0 * median


def test_miller_trivial(squares_20k):
    s0 = miller_sum(squares_20k, 0.0, 500)
    assert s0.value.imag == 0.0
    assert s0.value.real == pytest.approx(
        float(np.sum(squares_20k.values[1:501])), rel=1e-12
    )
    alpha = 0.37
    s1 = miller_sum(squares_20k, alpha, 1)
    assert s1.value == pytest.approx(cmath.exp(2j * math.pi * alpha), rel=1e-12)


def test_miller_slope_small_ladder(squares_20k):
    fit = miller_exponent_fit(
        squares_20k,
        ladder=(1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14),
        grid_points=128,
        random_points=16,
        seed=99,
    )
    assert fit.slope <= 0.85
    assert len(fit.max_abs) == 5
    assert all(m > 0 for m in fit.max_abs)


def test_miller_fit_deterministic_across_threads(squares_20k):
    kw = dict(ladder=(1024, 2048, 4096), grid_points=32, random_points=8, seed=7)
    base = miller_exponent_fit(squares_20k, threads=1, **kw)
    for threads in (4, 8):
        other = miller_exponent_fit(squares_20k, threads=threads, **kw)
        assert other.slope == base.slope
        assert other.samples == base.samples


# ---------------------------------------------------------------------------
# fourth moment
# ---------------------------------------------------------------------------


def test_fourth_moment_synthetic_linear(ones_table):
    fit = fourth_moment_fit(ones_table, [1000, 2000, 3000, 4000, 5000])
    assert abs(fit.c2) < 1e-9
    assert fit.d == pytest.approx(1.0, abs=1e-9)


def test_fourth_moment_delta(table_200k):
    grid = [20_000 * k for k in range(1, 11)]
    fit = fourth_moment_fit(table_200k, grid)
    assert fit.residual_rel < 0.05
    assert fit.c2 > 0


def test_fourth_moment_grid_stability(table_200k):
    small = fourth_moment_fit(table_200k, [2000 * k for k in range(1, 11)])
    large = fourth_moment_fit(table_200k, [20_000 * k for k in range(1, 11)])
    assert abs(small.c2 - large.c2) / large.c2 < 0.35  # coarse at this scale
    assert fourth_moment_fit(table_200k, large.grid).c2 == large.c2


def test_fourth_moment_degenerate_grid(table_200k):
    with pytest.raises(InputError):
        fourth_moment_fit(table_200k, [5000])


# ---------------------------------------------------------------------------
# envelopes and error statistics
# ---------------------------------------------------------------------------


def test_shiu_single_record():
    rec = ShiftedSumRecord(X=1000, h=5, sum=123.0, bh=0.1, norm_error=0.023)
    rep = shiu_envelope_check([rec])
    assert math.isfinite(rep.max_ratio)
    assert rep.witness_h == 5


def test_shiu_counting_measure_decreases(ones_table):
    records = [
        ShiftedSumRecord(X=1000, h=h, sum=shifted_sum(ones_table, 1000, h),
                         bh=1.0, norm_error=0.0)
        for h in range(1, 30)
    ]
    ratios = [r.sum / (r.X * math.log(math.log(r.h + 16)) ** 16) for r in records]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert shiu_envelope_check(records).witness_h == 1


def test_shiu_two_scale_stability(table_200k, singular_300):
    small = shifted_sum_batch(table_200k, 30_000, 60, singular_300)
    large = shifted_sum_batch(table_200k, 60_000, 60, singular_300)
    r_small = shiu_envelope_check(small).max_ratio
    r_large = shiu_envelope_check(large).max_ratio
    assert r_large < 2.0 * r_small
    assert r_small < 2.0 * r_large


def test_error_statistics_zero_errors():
    records = [
        ShiftedSumRecord(X=1000, h=h, sum=100.0, bh=0.1, norm_error=0.0)
        for h in range(1, 10)
    ]
    rep = error_statistics(records)
    assert all(q == 0.0 for q in rep.quantiles)
    assert rep.l1_average == 0.0


def test_error_statistics_monotone(table_200k, singular_300):
    records = shifted_sum_batch(table_200k, 10_000, 80, singular_300)
    thresholds = (1e-4, 1e-3, 1e-2, 1e-1)
    rep = error_statistics(records, thresholds)
    assert list(rep.counts) == sorted(rep.counts, reverse=True)
    assert list(rep.quantiles) == sorted(rep.quantiles)
    assert rep.exceptional_count(1e-2) == rep.counts[2]


def test_error_statistics_two_scale_decay(table_200k, singular_300):
    small = error_statistics(shifted_sum_batch(table_200k, 3000, 100, singular_300))
    large = error_statistics(shifted_sum_batch(table_200k, 60_000, 100, singular_300))
    assert large.l1_average < small.l1_average


def test_error_statistics_mixed_x_rejected():
    records = [
        ShiftedSumRecord(X=1000, h=1, sum=1.0, bh=0.1, norm_error=0.0),
        ShiftedSumRecord(X=2000, h=2, sum=1.0, bh=0.1, norm_error=0.0),
    ]
    with pytest.raises(InputError):
        error_statistics(records)


def test_shifted_csv_format(tmp_path, table_200k, singular_300):
    records = shifted_sum_batch(table_200k, 1500, 5, singular_300)
    path = tmp_path / "shifted.csv"
    write_shifted_csv(path, records)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "X,h,sum,bh,norm_error"
    assert len(lines) == 6
    x, h, s, bh, err = lines[1].split(",")
    assert int(x) == 1500 and int(h) == 1
    assert float(s) == records[0].sum  # repr round-trips exactly
