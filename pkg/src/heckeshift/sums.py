"""Shifted convolution sums, exponential sums, and their error statistics.

Window convention: every sum over "X <= n <= 2X" includes both endpoints.
Real accumulations run through Neumaier-compensated loops (or math.fsum);
complex sums use numpy's pairwise reduction.  Batch operations parallelize
over independent shifts or phases and are bitwise reproducible for any
thread count.
"""

import json
import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from ._parallel import ordered_map
from .errors import InputError

SHIFTED_CSV_HEADER = "X,h,sum,bh,norm_error"
EXPSUM_CSV_HEADER = "kind,alpha,X,re,im,abs"


@dataclass(frozen=True)
class ShiftedSumRecord:
    """One row of the shifted-sum experiment at window [X, 2X] and shift h."""

    X: int
    h: int
    sum: float
    bh: float
    norm_error: float


@dataclass(frozen=True)
class ExpSumSample:
    """A single exponential-sum evaluation; kind is lambda_sq or miller."""

    kind: str
    alpha: float
    X: int
    value: complex


@nb.njit(cache=True, nogil=True)
def _window_product_sum(w, x, h):
    """Neumaier sum of w[n] * w[n+h] over x <= n <= 2x."""
    s = 0.0
    comp = 0.0
    for n in range(x, 2 * x + 1):
        term = w[n] * w[n + h]
        t = s + term
        if abs(s) >= abs(term):
            comp += (s - t) + term
        else:
            comp += (term - t) + s
        s = t
    return s + comp


@nb.njit(cache=True, nogil=True)
def _window_weighted_sum(w, inner, x):
    """Neumaier sum of w[n] * inner[n] over x <= n <= 2x."""
    s = 0.0
    comp = 0.0
    for n in range(x, 2 * x + 1):
        term = w[n] * inner[n]
        t = s + term
        if abs(s) >= abs(term):
            comp += (s - t) + term
        else:
            comp += (term - t) + s
        s = t
    return s + comp


def _check_window(table, X, h):
    if X < 1 or h < 0:
        raise InputError("need X >= 1 and h >= 0")
    if 2 * X + h > table.limit:
        raise InputError(
            f"window [X, 2X] + shift {h} needs table limit >= {2 * X + h}, "
            f"have {table.limit}"
        )


def shifted_sum(table, X, h):
    """sum over X <= n <= 2X of lambda(n)^2 lambda(n+h)^2, compensated."""
    _check_window(table, X, h)
    return float(_window_product_sum(table.squares, X, h))


def shifted_sum_batch(table, X, H, singular, h_limit=None, threads=1):
    """Records for h = 1..min(H, h_limit), each paired with its B_h.

    Output order is by h and the per-h sums use a fixed-order compensated
    loop, so the batch is deterministic for any thread count.
    """
    if H < 1:
        raise InputError("H must be >= 1")
    h_top = H if h_limit is None else min(H, h_limit)
    _check_window(table, X, h_top)
    w = table.squares
    hs = list(range(1, h_top + 1))
    bh = singular.bh_values(hs)

    def one(h):
        return float(_window_product_sum(w, X, h))

    sums = ordered_map(one, hs, threads)
    records = []
    for i, h in enumerate(hs):
        s = sums[i]
        b = float(bh[i])
        records.append(
            ShiftedSumRecord(X=X, h=h, sum=s, bh=b, norm_error=(s - b * X) / X)
        )
    return records


def shifted_sum_total(table, X, H):
    """sum_{h=1..H} shifted_sum(X, h) in O(X) by interchanging the sums.

    Equals sum over X <= n <= 2X of lambda(n)^2 * (P(n+H) - P(n)) where P is
    the prefix sum of lambda(m)^2; verified against the direct batch in the
    test suite.
    """
    _check_window(table, X, H)
    if H < 1:
        raise InputError("H must be >= 1")
    w = table.squares
    prefix = np.concatenate(([0.0], np.cumsum(w[1:])))
    inner = np.zeros_like(w)
    inner[X : 2 * X + 1] = prefix[X + H : 2 * X + H + 1] - prefix[X : 2 * X + 1]
    return float(_window_weighted_sum(w, inner, X))


def window_square_sum(table, X):
    """sum over X <= n <= 2X of lambda(n)^2 (pairwise reduction)."""
    if 2 * X > table.limit:
        raise InputError("window exceeds table limit")
    return float(np.sum(table.squares[X : 2 * X + 1]))


# ---------------------------------------------------------------------------
# Exponential sums
# ---------------------------------------------------------------------------


def exp_sum_lambda_sq(table, alpha, X):
    """S(alpha) = sum over X <= n <= 2X of lambda(n)^2 e(n alpha).

    Phases come from vectorized complex exponentials evaluated at the raw
    alpha (sign preserved), so S(-alpha) is the exact conjugate of S(alpha).
    """
    if X < 1:
        raise InputError("X must be >= 1")
    if 2 * X > table.limit:
        raise InputError("window exceeds table limit")
    n = np.arange(X, 2 * X + 1, dtype=np.float64)
    w = table.squares[X : 2 * X + 1]
    phases = np.exp((2j * math.pi * alpha) * n)
    value = complex(np.sum(w * phases))
    return ExpSumSample("lambda_sq", float(alpha) % 1.0, int(X), value)


def miller_sum(square_table, alpha, X):
    """sum over 1 <= n <= X of lambda(n^2) e(n alpha)."""
    if X < 1:
        raise InputError("X must be >= 1")
    if X > square_table.limit:
        raise InputError("X exceeds square-table limit")
    n = np.arange(1, X + 1, dtype=np.float64)
    w = square_table.values[1 : X + 1]
    phases = np.exp((2j * math.pi * alpha) * n)
    value = complex(np.sum(w * phases))
    return ExpSumSample("miller", float(alpha) % 1.0, int(X), value)


DEFAULT_MILLER_LADDER = tuple(1 << k for k in range(10, 18))


@dataclass(frozen=True)
class MillerSlopeFit:
    """log-log growth fit of max_alpha |sum_{n<=X} lambda(n^2) e(n alpha)|."""

    ladder: tuple
    max_abs: tuple
    slope: float
    samples: tuple


def miller_exponent_fit(
    square_table,
    ladder=DEFAULT_MILLER_LADDER,
    grid_points=512,
    random_points=64,
    seed=12345,
    threads=1,
):
    """Fit the growth exponent of the twisted square-index sum.

    Each alpha is evaluated once over the largest window with partial sums
    captured at every ladder mark.  alpha set: an even grid j/grid_points
    plus seeded uniform random points.
    """
    ladder = tuple(sorted(int(x) for x in ladder))
    if len(ladder) < 2:
        raise InputError("ladder needs at least 2 sizes")
    x_max = ladder[-1]
    if x_max > square_table.limit:
        raise InputError("ladder exceeds square-table limit")
    alphas = [j / grid_points for j in range(grid_points)]
    rng = np.random.default_rng(seed)
    alphas += [float(a) for a in rng.random(random_points)]
    n = np.arange(1, x_max + 1, dtype=np.float64)
    w = square_table.values[1 : x_max + 1]
    marks = np.array(ladder, dtype=np.int64) - 1

    def one(alpha):
        phases = np.exp((2j * math.pi * alpha) * n)
        partial = np.cumsum(w * phases)
        return partial[marks]

    rows = ordered_map(one, alphas, threads)
    samples = []
    for alpha, row in zip(alphas, rows):
        for X, v in zip(ladder, row):
            samples.append(ExpSumSample("miller", alpha % 1.0, int(X), complex(v)))
    max_abs = []
    for k in range(len(ladder)):
        max_abs.append(max(abs(row[k]) for row in rows))
    slope = float(
        np.polyfit(np.log(np.array(ladder, dtype=np.float64)), np.log(max_abs), 1)[0]
    )
    return MillerSlopeFit(ladder, tuple(max_abs), slope, tuple(samples))


# ---------------------------------------------------------------------------
# Moments and envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourthMomentFit:
    """Least-squares fit of sum_{n<=X} lambda(n)^4 = c2 X log X + d X."""

    c2: float
    d: float
    residual_rel: float
    grid: tuple


def fourth_moment_fit(table, x_grid):
    grid = np.asarray(sorted(int(x) for x in x_grid), dtype=np.int64)
    if grid.shape[0] < 2 or grid[0] < 3:
        raise InputError("fourth-moment grid needs >= 2 points, all >= 3")
    if grid[-1] > table.limit:
        raise InputError("grid outside table range")
    w = table.squares[1:]
    y = np.cumsum(w * w)[grid - 1]
    xs = grid.astype(np.float64)
    design = np.stack([xs * np.log(xs), xs], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise InputError("degenerate fourth-moment grid")
    fitted = design @ coef
    residual = float(np.max(np.abs(y - fitted) / np.abs(fitted)))
    return FourthMomentFit(float(coef[0]), float(coef[1]), residual, tuple(int(x) for x in grid))


@dataclass(frozen=True)
class ShiuReport:
    """max of sum / (X (log log(h+16))^16) over records, with witness."""

    max_ratio: float
    witness_h: int
    count: int


def shiu_envelope_check(records):
    if not records:
        raise InputError("no records")
    best = -math.inf
    witness = records[0].h
    for r in records:
        ratio = r.sum / (r.X * math.log(math.log(r.h + 16.0)) ** 16)
        if ratio > best:
            best = ratio
            witness = r.h
    return ShiuReport(float(best), int(witness), len(records))


# ---------------------------------------------------------------------------
# Error statistics
# ---------------------------------------------------------------------------

QUANTILE_LEVELS = (0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.0)


@dataclass(frozen=True)
class ErrorReport:
    X: int
    H: int
    quantiles: tuple
    thresholds: tuple
    counts: tuple
    l1_average: float

    def exceptional_count(self, threshold):
        for t, c in zip(self.thresholds, self.counts):
            if t == threshold:
                return c
        raise InputError(f"threshold {threshold} was not tabulated")

    def to_dict(self):
        return {
            "X": self.X,
            "H": self.H,
            "quantiles": list(self.quantiles),
            "thresholds": list(self.thresholds),
            "counts": list(self.counts),
            "l1_average": self.l1_average,
        }


def default_thresholds(X):
    return (X**-0.25, math.log(X) ** -2)


def error_statistics(records, thresholds=None):
    """Quantiles and threshold exceedance counts of |norm_error|.

    The L1 statistic is sum_h |sum - B_h X| / (H X), i.e. the mean of
    |norm_error| when the records cover h = 1..H.
    """
    if not records:
        raise InputError("no records")
    X = records[0].X
    if any(r.X != X for r in records):
        raise InputError("records must come from a single X batch")
    errs = np.abs(np.array([r.norm_error for r in records]))
    if thresholds is None:
        thresholds = default_thresholds(X)
    qs = tuple(float(np.quantile(errs, q)) for q in QUANTILE_LEVELS)
    counts = tuple(int(np.sum(errs > t)) for t in thresholds)
    return ErrorReport(
        X=int(X),
        H=max(r.h for r in records),
        quantiles=qs,
        thresholds=tuple(float(t) for t in thresholds),
        counts=counts,
        l1_average=float(math.fsum(errs.tolist()) / len(records)),
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def write_shifted_csv(path, records):
    lines = [SHIFTED_CSV_HEADER]
    for r in records:
        lines.append(f"{r.X},{r.h},{r.sum!r},{r.bh!r},{r.norm_error!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_expsum_csv(path, samples):
    lines = [EXPSUM_CSV_HEADER]
    for s in samples:
        v = s.value
        lines.append(f"{s.kind},{s.alpha!r},{s.X},{v.real!r},{v.imag!r},{abs(v)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_json(path, report):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def write_error_plot_script(path, csv_name="shifted.csv"):
    """gnuplot script rendering |norm_error| against h from the CSV."""
    script = "\n".join(
        [
            "set datafile separator ','",
            "set logscale y",
            "set xlabel 'shift h'",
            "set ylabel '|S(X,h)/X - B_h|'",
            "set grid",
            f"plot '{csv_name}' every ::1 using 2:(abs($5)) with points pt 7 ps 0.4 title 'normalized error'",
        ]
    )
    with open(path, "w") as fh:
        fh.write(script + "\n")
