"""Normalized eigenvalue tables and the identities they must satisfy.

The table holds lambda(n) = c_n / n^((weight-1)/2) in double precision.
Prime powers follow the three-term recurrence
lambda(p^{m+1}) = lambda(p) lambda(p^m) - lambda(p^{m-1}), equivalently the
Chebyshev value sin((m+1) theta_p) / sin(theta_p) with
lambda(p) = 2 cos(theta_p); general indices are multiplicative.
"""

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .arith import FactorSieve
from .errors import DeligneViolationError, InputError, VerificationError

TABLE_CACHE_MAGIC = b"HECKELT1"


@dataclass
class EigenvalueTable:
    """values[n] = lambda(n) for 1 <= n <= limit; values[0] is unused (0)."""

    weight: int
    limit: int
    values: np.ndarray
    source: object = None
    _squares: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.values.shape[0] != self.limit + 1:
            raise InputError("values array must have limit + 1 entries")
        if self.values[1] != 1.0:
            raise InputError("lambda(1) must be exactly 1")

    @property
    def squares(self):
        """lambda(n)^2, cached; index 0 is 0."""
        if self._squares is None:
            self._squares = self.values * self.values
        return self._squares

    def __getitem__(self, n):
        return self.values[n]


def _coeff_to_float(c):
    try:
        return float(c)
    except OverflowError:
        # fall back to sign * exp(log|c|); only reachable far beyond any
        # supported (weight, N) combination but keeps the contract total
        return math.copysign(math.inf, -1.0 if c < 0 else 1.0)


def normalize(expansion):
    """EigenvalueTable from an exact expansion: lambda(n) = c_n / n^{(k-1)/2}.

    Coefficients convert to double first (exact rounding, at most half an
    ulp) and divide by n^{(k-1)/2} computed in double; total relative error
    is a few ulps.  The exp-log route is unnecessary while coefficients stay
    inside double range, which holds for every cacheable table.
    """
    n_limit = expansion.limit
    exponent = (expansion.weight - 1) / 2.0
    vals = np.zeros(n_limit + 1, dtype=np.float64)
    vals[1:] = np.fromiter(
        (_coeff_to_float(c) for c in expansion.series.coeffs[1:]),
        dtype=np.float64,
        count=n_limit,
    )
    if not np.isfinite(vals).all():
        # exp-log path with the sign reattached, element by element
        ns = np.flatnonzero(~np.isfinite(vals))
        for n in ns:
            c = expansion.series.coeffs[n]
            mag = math.exp(math.log(abs(c)) - exponent * math.log(n))
            vals[n] = math.copysign(mag, -1.0 if c < 0 else 1.0)
        scale_mask = np.isfinite(vals)
    else:
        scale_mask = None
    powers = np.arange(n_limit + 1, dtype=np.float64) ** exponent
    if scale_mask is None:
        vals[1:] /= powers[1:]
    else:
        idx = np.flatnonzero(scale_mask)
        idx = idx[idx >= 1]
        vals[idx] /= powers[idx]
    return EigenvalueTable(expansion.weight, n_limit, vals, source=expansion)


def lambda_prime_power(lambda_p, m):
    """lambda(p^m) from lambda(p) by the Hecke three-term recurrence."""
    if m < 0:
        raise InputError(f"prime-power exponent must be >= 0, got {m}")
    if abs(lambda_p) > 2.0 + 1e-9:
        raise InputError(f"|lambda(p)| = {abs(lambda_p)} exceeds the Deligne range")
    lp = min(2.0, max(-2.0, lambda_p))
    if m == 0:
        return 1.0
    prev, cur = 1.0, lp
    for _ in range(m - 1):
        prev, cur = cur, lp * cur - prev
    return cur


@nb.njit(cache=True, nogil=True)
def _sieve_lambda_kernel(spf, lam_p, limit):
    vals = np.zeros(limit + 1, dtype=np.float64)
    ppow = np.zeros(limit + 1, dtype=np.int64)
    vals[1] = 1.0
    for n in range(2, limit + 1):
        p = spf[n]
        m = n // p
        if m % p != 0:
            ppow[n] = p
            vals[n] = vals[m] * lam_p[p]
        else:
            pk = ppow[m] * p
            ppow[n] = pk
            cof = n // pk
            if cof > 1:
                vals[n] = vals[cof] * vals[pk]
            else:
                # n = p^k with k >= 2: three-term recurrence
                vals[n] = lam_p[p] * vals[m] - vals[m // p]
    return vals


def sieve_lambda(prime_values, N, weight=12, sieve=None):
    """Rebuild lambda(n) for n <= N multiplicatively from prime values.

    prime_values maps p -> lambda(p) and must cover every prime <= N.
    """
    if N < 1:
        raise InputError("limit must be >= 1")
    if N == 1:
        return EigenvalueTable(weight, 1, np.array([0.0, 1.0]))
    sieve = sieve or FactorSieve(N)
    lam_p = np.zeros(N + 1, dtype=np.float64)
    for p in sieve.primes:
        p = int(p)
        if p not in prime_values:
            raise InputError(f"missing lambda(p) for prime p={p}")
        lam_p[p] = prime_values[p]
    vals = _sieve_lambda_kernel(sieve.spf, lam_p, N)
    return EigenvalueTable(weight, N, vals)


def prime_values_of(table, sieve=None):
    """Extract the p -> lambda(p) map from a table (sieve_lambda's inverse)."""
    sieve = sieve or FactorSieve(table.limit)
    return {int(p): float(table.values[p]) for p in sieve.primes}


@dataclass(frozen=True)
class SquareTable:
    """values[n] = lambda(n^2) for 1 <= n <= limit."""

    limit: int
    values: np.ndarray


@nb.njit(cache=True, nogil=True)
def _square_table_kernel(spf, lam_p, limit):
    vals = np.zeros(limit + 1, dtype=np.float64)
    odd = np.zeros(limit + 1, dtype=np.float64)  # lambda(p^{2k-1}) at n = p^k
    ppow = np.zeros(limit + 1, dtype=np.int64)
    vals[1] = 1.0
    for n in range(2, limit + 1):
        p = spf[n]
        m = n // p
        lp = lam_p[p]
        if m % p != 0:
            ppow[n] = p
            if m == 1:
                odd[n] = lp
                vals[n] = lp * lp - 1.0
            else:
                vals[n] = vals[m] * (lp * lp - 1.0)
        else:
            pk = ppow[m] * p
            ppow[n] = pk
            cof = n // pk
            if cof > 1:
                vals[n] = vals[cof] * vals[pk]
            else:
                # n = p^k: advance the recurrence two half-steps
                a = odd[m]
                b = vals[m]
                c = lp * b - a
                odd[n] = c
                vals[n] = lp * c - b
    return vals


def square_table(table, N=None, sieve=None):
    """lambda(n^2) for n <= N, built multiplicatively from prime values."""
    N = table.limit if N is None else N
    if N > table.limit:
        raise InputError(
            f"square table limit {N} exceeds prime coverage {table.limit}"
        )
    if N < 1:
        raise InputError("limit must be >= 1")
    if N == 1:
        return SquareTable(1, np.array([0.0, 1.0]))
    sieve = sieve or FactorSieve(N)
    lam_p = np.zeros(N + 1, dtype=np.float64)
    primes = sieve.primes
    lam_p[primes] = table.values[primes]
    return SquareTable(N, _square_table_kernel(sieve.spf, lam_p, N))


@dataclass(frozen=True)
class SatakeAngle:
    """theta_p in [0, pi] with lambda(p) = 2 cos(theta_p)."""

    angle: float
    prime: int = 0

    def __post_init__(self):
        if not 0.0 <= self.angle <= math.pi:
            raise InputError("Satake angle must lie in [0, pi]")


def satake_angle(lambda_p, prime=0):
    """arccos(lambda(p)/2) with clamping for float slack at the endpoints."""
    if abs(lambda_p) > 2.0 + 1e-6:
        raise DeligneViolationError(
            f"|lambda(p)| = {abs(lambda_p)} is beyond Deligne slack; "
            f"upstream table is corrupt"
        )
    x = min(1.0, max(-1.0, lambda_p / 2.0))
    return SatakeAngle(math.acos(x), prime)


@dataclass(frozen=True)
class DeligneReport:
    """max |lambda(n)| / d_2(n) over the table, with its witness index."""

    max_ratio: float
    witness: int
    limit: int

    @property
    def passed(self):
        return self.max_ratio <= 1.0 + 1e-9


def deligne_report(table, sieve=None):
    sieve = sieve or FactorSieve(table.limit)
    if sieve.limit < table.limit:
        raise InputError("sieve does not cover the table")
    d2 = sieve.divisor_counts
    ratios = np.abs(table.values[1:]) / d2[1 : table.limit + 1]
    arg = int(np.argmax(ratios))
    return DeligneReport(float(ratios[arg]), arg + 1, table.limit)


def hecke_relation_check(table, m, n):
    """|lambda(m) lambda(n) - sum over d | (m,n) of lambda(mn/d^2)|."""
    if m < 1 or n < 1 or m * n > table.limit:
        raise InputError(f"need 1 <= m, n with m*n <= {table.limit}")
    g = math.gcd(m, n)
    acc = 0.0
    d = 1
    while d * d <= g:
        if g % d == 0:
            acc += table.values[m * n // (d * d)]
            e = g // d
            if e != d:
                acc += table.values[m * n // (e * e)]
        d += 1
    return abs(table.values[m] * table.values[n] - acc)


@nb.njit(cache=True, nogil=True)
def _divisor_sum_dev_kernel(sq_vals, lam_sq, limit):
    acc = np.zeros(limit + 1, dtype=np.float64)
    for d in range(1, limit + 1):
        v = sq_vals[d]
        for m in range(d, limit + 1, d):
            acc[m] += v
    worst = 0.0
    witness = 1
    for n in range(1, limit + 1):
        dev = abs(acc[n] - lam_sq[n])
        if dev > worst:
            worst = dev
            witness = n
    return worst, witness


def divisor_sum_identity(table, squares, N=None):
    """Max deviation of sum_{d|n} lambda(d^2) from lambda(n)^2 for n <= N."""
    N = squares.limit if N is None else N
    if N > squares.limit or N > table.limit:
        raise InputError("identity range exceeds table coverage")
    worst, witness = _divisor_sum_dev_kernel(
        squares.values, table.squares[: N + 1], N
    )
    return float(worst), int(witness)


def prime_square_sum_drift(table, cutoffs, sieve=None):
    """|sum_{p<=X} (lambda(p)^2 - 1)/p| for each cutoff X (stays O(1))."""
    sieve = sieve or FactorSieve(table.limit)
    primes = sieve.primes
    terms = (table.squares[primes] - 1.0) / primes
    csum = np.cumsum(terms)
    out = []
    for x in cutoffs:
        if x > table.limit:
            raise InputError(f"cutoff {x} exceeds table limit {table.limit}")
        k = int(np.searchsorted(primes, x, side="right"))
        out.append(abs(float(csum[k - 1])) if k else 0.0)
    return out


# ---------------------------------------------------------------------------
# Table cache: magic, u32 weight, u64 N, N doubles (lambda(1)..lambda(N)).
# ---------------------------------------------------------------------------


def write_table_cache(path, table):
    with open(path, "wb") as fh:
        fh.write(TABLE_CACHE_MAGIC)
        fh.write(int(table.weight).to_bytes(4, "little"))
        fh.write(int(table.limit).to_bytes(8, "little"))
        fh.write(table.values[1:].astype("<f8").tobytes())


def _validate_table(weight, vals, path):
    if vals[1] != 1.0:
        raise VerificationError(f"table cache {path}: lambda(1) != 1")
    n_limit = vals.shape[0] - 1
    tol = 1e-9
    if n_limit >= 4 and abs(vals[2] ** 2 - (vals[4] + 1.0)) > tol:
        raise VerificationError(f"table cache {path}: p=2 recurrence failed")
    if n_limit >= 8 and abs(vals[2] * vals[4] - (vals[8] + vals[2])) > tol:
        raise VerificationError(f"table cache {path}: p=2 depth-2 recurrence failed")
    if n_limit >= 9 and abs(vals[3] ** 2 - (vals[9] + 1.0)) > tol:
        raise VerificationError(f"table cache {path}: p=3 recurrence failed")


def read_table_cache(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != TABLE_CACHE_MAGIC:
            raise VerificationError(f"table cache {path}: bad magic {magic!r}")
        weight = int.from_bytes(fh.read(4), "little")
        n_limit = int.from_bytes(fh.read(8), "little")
        raw = fh.read(8 * n_limit)
    if len(raw) != 8 * n_limit:
        raise VerificationError(f"table cache {path}: truncated body")
    vals = np.zeros(n_limit + 1, dtype=np.float64)
    vals[1:] = np.frombuffer(raw, dtype="<f8")
    _validate_table(weight, vals, path)
    return EigenvalueTable(weight, n_limit, vals)
