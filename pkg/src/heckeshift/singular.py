"""Singular-series constants: c_{1,f}, local factors w, D_q, and B_h.

The mean of lambda(n)^2 is estimated two independent ways: a partial Euler
product (6/pi^2) * prod_p (1 - 1/p)^{-1} (1 - (lambda(p)^2 - 2)/p + 1/p^2)^{-1}
and a through-origin regression of the partial sums.  The regression value
is the one used downstream; the Euler product cross-checks it.

Local data for a factorization q = q0 * q1:

    w(q0, q1) = c_{1,f} * prod_{p | q} ((p-1)/(p+1)) (1 - (lambda(p)^2-2)/p + 1/p^2)
                        * prod_{p^l || q0} F_p

where F_p = sum_{j>=0} lambda(p^{l+j})^2 p^{-j} when p does not divide q1,
and F_p = lambda(p^l)^2 (no series) when p divides both q0 and q1, which is
what the defining Dirichlet series sum_{(n,q1)=1} lambda(q0 n)^2 n^{-s}
forces for non-squarefree q.  Then

    D_q = sum_{q = q0 q1} mu(q1) / (phi(q1) q0) * w(q0, q1)
    B_h = sum_{q <= q_max} c_q(h) * D_q^2

with a truncation tail bounded through an empirically certified envelope
|D_q| <= C * d_2(q) * log(q+2)^7 / q (constant fitted on the computed range
times a safety factor; the shape is rigorous, the constant is not).
"""

import math
from dataclasses import dataclass

import numpy as np

from .arith import FactorSieve, factorize
from .errors import InputError, InternalConsistencyError
from .eigenvalues import lambda_prime_power

_BH_CSV_HEADER = "h,bh,qmax,tail"
_DQ_CSV_HEADER = "q,dq"


# ---------------------------------------------------------------------------
# Rankin-Selberg constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerEstimate:
    """Partial Euler product with a last-decade oscillation proxy."""

    value: float
    uncertainty: float
    cutoff: int


@dataclass(frozen=True)
class EmpiricalEstimate:
    """Through-origin regression of sum_{n<=X} lambda(n)^2 on X."""

    value: float
    spread: float
    grid: tuple


@dataclass(frozen=True)
class RankinConstant:
    euler_estimate: float
    empirical_estimate: float
    chosen: float
    uncertainty: float

    def __post_init__(self):
        if abs(self.euler_estimate - self.empirical_estimate) > 3.0 * self.uncertainty:
            raise InternalConsistencyError(
                "Euler-product and regression estimates of the mean of "
                f"lambda(n)^2 disagree: {self.euler_estimate} vs "
                f"{self.empirical_estimate} with uncertainty {self.uncertainty}"
            )


def _euler_log_factors(table, primes):
    p = primes.astype(np.float64)
    lam = table.values[primes]
    return -np.log1p(-1.0 / p) - np.log(1.0 - (lam * lam - 2.0) / p + 1.0 / (p * p))


def rankin_constant_euler(table, prime_cutoff, sieve=None):
    """Euler-product estimate of the density of lambda(n)^2.

    The product converges slowly and conditionally, so the estimate carries
    an uncertainty proxy: the largest swing of the partial product over the
    last decade of the cutoff range.
    """
    if prime_cutoff < 1000:
        raise InputError(
            f"prime cutoff {prime_cutoff} below 1000; the partial product "
            f"is meaningless that early"
        )
    if prime_cutoff > table.limit:
        raise InputError("prime cutoff exceeds table limit")
    sieve = sieve or FactorSieve(prime_cutoff)
    primes = sieve.primes
    primes = primes[primes <= prime_cutoff]
    logs = _euler_log_factors(table, primes)
    csum = np.cumsum(logs)
    base = math.log(6.0 / math.pi**2)
    value = math.exp(base + float(csum[-1]))
    checkpoints = np.unique(
        (prime_cutoff * np.power(10.0, np.linspace(-1.0, 0.0, 9))).astype(np.int64)
    )
    osc = 0.0
    for ck in checkpoints:
        k = int(np.searchsorted(primes, ck, side="right"))
        if k == 0:
            continue
        osc = max(osc, abs(math.exp(base + float(csum[k - 1])) - value))
    return EulerEstimate(value, osc, int(prime_cutoff))


def rankin_constant_empirical(table, x_grid):
    """Least-squares slope of the partial sums sum_{n<=X} lambda(n)^2 = c X."""
    grid = np.asarray(sorted(int(x) for x in x_grid), dtype=np.int64)
    if grid.shape[0] < 3:
        raise InputError("regression grid needs at least 3 points")
    if grid[0] < 1 or grid[-1] > table.limit:
        raise InputError("grid outside table range")
    csum = np.cumsum(table.squares[1:])
    partials = csum[grid - 1]
    xs = grid.astype(np.float64)
    c = float(np.dot(partials, xs) / np.dot(xs, xs))
    spread = float(np.abs(partials / xs - c).max())
    return EmpiricalEstimate(c, spread, tuple(int(x) for x in grid))


def default_x_grid(limit, points=10):
    lo = max(limit // 10, 1)
    return [lo + (limit - lo) * k // (points - 1) for k in range(points)]


def rankin_constant(table, prime_cutoff=None, x_grid=None, sieve=None):
    """Both estimates combined; the regression value is the chosen one."""
    if prime_cutoff is None:
        prime_cutoff = min(table.limit, 1_000_000)
    if x_grid is None:
        x_grid = default_x_grid(table.limit)
    euler = rankin_constant_euler(table, prime_cutoff, sieve=sieve)
    empirical = rankin_constant_empirical(table, x_grid)
    return RankinConstant(
        euler_estimate=euler.value,
        empirical_estimate=empirical.value,
        chosen=empirical.value,
        uncertainty=euler.uncertainty + empirical.spread,
    )


# ---------------------------------------------------------------------------
# Local factors and D_q
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalFactorW:
    q0: int
    q1: int
    value: float
    truncation_error: float


@dataclass(frozen=True)
class DqCoefficient:
    q: int
    value: float


def _series_factor(lam_p, p, exponent, tol, extra_depth=0):
    """F_p = sum_{j>=0} lambda(p^{l+j})^2 p^{-j}, truncated by Deligne tail.

    Returns (value, tail_bound).  The tail after depth J is bounded by
    sum_{j>J} (l+j+1)^2 p^{-j}, evaluated in closed form.
    """
    x = 1.0 / p
    total = 0.0
    j = 0
    while True:
        total += lambda_prime_power(lam_p, exponent + j) ** 2 * x**j
        a = exponent + j + 2
        tail = x ** (j + 1) * (
            a * a / (1 - x) + 2 * a * x / (1 - x) ** 2 + x * (1 + x) / (1 - x) ** 3
        )
        if tail < tol:
            break
        j += 1
        if j > 400:
            raise InternalConsistencyError("local series failed to converge")
    for extra in range(extra_depth):
        j += 1
        total += lambda_prime_power(lam_p, exponent + j) ** 2 * x**j
        a = exponent + j + 2
        tail = x ** (j + 1) * (
            a * a / (1 - x) + 2 * a * x / (1 - x) ** 2 + x * (1 + x) / (1 - x) ** 3
        )
    return total, tail


def local_factor_w(q0, q1, c1f, table, tol=1e-12, extra_depth=0):
    """Residue-at-1 local factor w(q0, q1); see the module docstring.

    When a prime divides both q0 and q1 the coprimality constraint kills the
    series and the exact local factor is lambda(p^l)^2 alone.
    """
    if q0 < 1 or q1 < 1:
        raise InputError("q0 and q1 must be positive")
    if tol <= 0:
        raise InputError("tolerance must be positive")
    q = q0 * q1
    if q == 1:
        return LocalFactorW(1, 1, c1f, 0.0)
    q_factors = factorize(q)
    for p, _ in q_factors:
        if p > table.limit:
            raise InputError(f"prime {p} exceeds table coverage {table.limit}")
    base = 1.0
    for p, _ in q_factors:
        lam = table.values[p]
        base *= (p - 1) / (p + 1) * (1.0 - (lam * lam - 2.0) / p + 1.0 / (p * p))
    q0_factors = factorize(q0) if q0 > 1 else []
    series_tol = tol / max(1, len(q0_factors))
    while True:
        f_values = []
        f_tails = []
        for p, l in q0_factors:
            lam = float(table.values[p])
            if q1 % p == 0:
                f_values.append(lambda_prime_power(lam, l) ** 2)
                f_tails.append(0.0)
            else:
                val, tail = _series_factor(lam, p, l, series_tol, extra_depth)
                f_values.append(val)
                f_tails.append(tail)
        prod = 1.0
        prod_hi = 1.0
        for v, t in zip(f_values, f_tails):
            prod *= v
            prod_hi *= v + t
        err = abs(c1f) * abs(base) * (prod_hi - prod)
        if err < tol or all(t == 0.0 for t in f_tails):
            return LocalFactorW(q0, q1, c1f * base * prod, err)
        series_tol /= 10.0


def _squarefree_divisors(factors):
    divs = [1]
    for p, _ in factors:
        divs += [d * p for d in divs]
    return divs


def dq_coefficient(q, c1f, table, tol=1e-12, extra_depth=0):
    """D_q = sum over q = q0 q1 of mu(q1) w(q0, q1) / (phi(q1) q0).

    Only squarefree q1 contribute; for squarefree q the sum has exactly
    d_2(q) terms.
    """
    if q < 1:
        raise InputError("q must be positive")
    factors = factorize(q)
    q1_list = _squarefree_divisors(factors)
    total = 0.0
    term_tol = tol / len(q1_list)
    for q1 in q1_list:
        q0 = q // q1
        mu, phi = 1, 1
        for p, _ in factors:
            if q1 % p == 0:
                mu = -mu
                phi *= p - 1
        weight = 1.0 / (phi * q0)
        w = local_factor_w(q0, q1, c1f, table, tol=term_tol / weight,
                           extra_depth=extra_depth)
        total += mu * weight * w.value
    return DqCoefficient(q, total)


# ---------------------------------------------------------------------------
# Envelope for |D_q| and the B_h truncation tail
# ---------------------------------------------------------------------------


def _zeta_real(s, terms=100_000):
    """zeta(s) for real s > 1: direct sum plus an integral tail bound."""
    acc = math.fsum(m ** -s for m in range(1, terms + 1))
    return acc + terms ** (1.0 - s) / (s - 1.0)


@dataclass(frozen=True)
class DqEnvelope:
    """Empirically certified majorants for |D_q|.

    Two fitted constants, both the largest observed ratio on the computed
    range times a safety factor, so they are certified by data rather than
    proved:

      * constant      for the shape d_2(q) log(q+2)^7 / q (the bound the
                      coefficients are known to satisfy asymptotically);
      * tail_constant for the power shape q^{-(1-delta)}, which is what the
        truncation tail of B_h uses.  A power envelope keeps the summed
        tail in closed form and mirrors the per-divisor Q^{-1+eps} decay of
        the underlying estimate; the log-power shape would inflate the
        summed tail by many orders of magnitude.
    """

    constant: float
    tail_constant: float
    delta: float
    fit_limit: int

    _ENV_LOG_POW = 7
    _SAFETY = 4.0

    @classmethod
    def fit(cls, dq_abs, sieve, delta=0.125):
        """Fit both constants on |D_q| for q = 1..len(dq_abs)-1."""
        q_fit = dq_abs.shape[0] - 1
        qs = np.arange(1, q_fit + 1, dtype=np.float64)
        d2 = sieve.divisor_counts[1 : q_fit + 1].astype(np.float64)
        log_shape = d2 * np.log(qs + 2.0) ** cls._ENV_LOG_POW / qs
        constant = float((dq_abs[1:] / log_shape).max()) * cls._SAFETY
        power_shape = qs ** (delta - 1.0)
        tail_constant = float((dq_abs[1:] / power_shape).max()) * cls._SAFETY
        return cls(
            constant=constant,
            tail_constant=tail_constant,
            delta=delta,
            fit_limit=q_fit,
        )

    def bound(self, q, d2_q):
        return self.constant * d2_q * math.log(q + 2.0) ** self._ENV_LOG_POW / q

    def bh_tail(self, h, q_max):
        """Bound on |sum_{q > q_max} c_q(h) D_q^2| via |c_q(h)| <= (q, h).

        With |D_q| <= C q^{-(1-delta)} and s = 2 - 2 delta,

            sum_{d | h} d * sum_{m > q_max/d} (dm)^{-s}
                <= sum_{d | h} d^{1-s} * tail_s(q_max // d),

        each divisor contributing ~ q_max^{-(s-1)} as in the underlying
        truncation estimate.
        """
        s = 2.0 - 2.0 * self.delta
        zeta_s = _ZETA_CACHE.setdefault(s, _zeta_real(s))
        total = 0.0
        for d in _divisors(h):
            t_cut = q_max // d
            inner = zeta_s if t_cut < 1 else t_cut ** (1.0 - s) / (s - 1.0)
            total += d ** (1.0 - s) * inner
        return self.tail_constant**2 * total


_ZETA_CACHE = {}


def _divisors(h):
    out = [1]
    for p, e in factorize(h):
        out = [d * p**k for d in out for k in range(e + 1)]
    return out


# ---------------------------------------------------------------------------
# B_h
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularSeriesResult:
    h: int
    value: float
    q_max: int
    tail_bound: float
    terms: np.ndarray


class SingularSeries:
    """D_q cache plus B_h evaluation with certified truncation tails.

    The D_q values are computed once (immutable afterwards); every B_h is a
    Ramanujan-sum weighted dot product against them.  All accumulation goes
    through math.fsum, so results do not depend on evaluation order or
    thread count.
    """

    def __init__(self, table, c1f, q_max=1000, tol=1e-12, sieve=None):
        if q_max < 1:
            raise InputError("q_max must be >= 1")
        if q_max > table.limit:
            raise InputError(
                f"q_max {q_max} exceeds prime coverage of the table "
                f"({table.limit})"
            )
        self.table = table
        self.c1f = float(c1f)
        self.tol = float(tol)
        self.q_max = int(q_max)
        self.sieve = sieve if sieve is not None and sieve.limit >= q_max else FactorSieve(max(q_max, 2))
        self.dq = np.zeros(self.q_max + 1, dtype=np.float64)
        for q in range(1, self.q_max + 1):
            self.dq[q] = dq_coefficient(q, self.c1f, table, tol=tol).value
        self.envelope = DqEnvelope.fit(np.abs(self.dq), self.sieve)

    def grown(self, q_max):
        """A new instance with a larger D_q cache (existing values reused)."""
        if q_max <= self.q_max:
            return self
        other = SingularSeries.__new__(SingularSeries)
        other.table = self.table
        other.c1f = self.c1f
        other.tol = self.tol
        other.q_max = int(q_max)
        other.sieve = self.sieve if self.sieve.limit >= q_max else FactorSieve(q_max)
        other.dq = np.zeros(q_max + 1, dtype=np.float64)
        other.dq[: self.q_max + 1] = self.dq
        for q in range(self.q_max + 1, q_max + 1):
            other.dq[q] = dq_coefficient(q, self.c1f, self.table, tol=self.tol).value
        other.envelope = DqEnvelope.fit(np.abs(other.dq), other.sieve)
        return other

    def _cq_row(self, h, q_max):
        qs = np.arange(1, q_max + 1, dtype=np.int64)
        g = np.gcd(qs, np.int64(h))
        m = qs // g
        mu = self.sieve.mobius_table
        phi = self.sieve.totient_table
        return mu[m] * (phi[qs] // phi[m])

    def bh(self, h, q_max=None):
        """B_h = sum_{q <= q_max} c_q(h) D_q^2 with per-q terms for audit."""
        if h < 1:
            raise InputError("shift h must be >= 1")
        q_max = self.q_max if q_max is None else q_max
        if q_max > self.q_max:
            raise InputError("q_max beyond cached D_q range; use grown()")
        terms = self._cq_row(h, q_max) * self.dq[1 : q_max + 1] ** 2
        value = math.fsum(terms.tolist())
        return SingularSeriesResult(
            h=h,
            value=value,
            q_max=q_max,
            tail_bound=self.envelope.bh_tail(h, q_max),
            terms=terms,
        )

    def bh_values(self, h_array):
        """B_h for many shifts, identical bits to per-h bh() values."""
        hs = np.asarray(h_array, dtype=np.int64)
        if hs.size and hs.min() < 1:
            raise InputError("shifts must be >= 1")
        qs = np.arange(1, self.q_max + 1, dtype=np.int64)
        dq2 = self.dq[1:] ** 2
        mu = self.sieve.mobius_table
        phi_q = self.sieve.totient_table[qs]
        out = np.empty(hs.shape[0], dtype=np.float64)
        chunk = max(1, 4_000_000 // self.q_max)
        for lo in range(0, hs.shape[0], chunk):
            part = hs[lo : lo + chunk]
            g = np.gcd.outer(part, qs)
            m = qs[None, :] // g
            cq = mu[m] * (phi_q[None, :] // self.sieve.totient_table[m])
            rows = cq * dq2[None, :]
            for i, row in enumerate(rows.tolist()):
                out[lo + i] = math.fsum(row)
        return out


def singular_series_Bh(h, c1f, table, q_max=None, tol=None, sieve=None):
    """One-shot B_h; adaptive q_max growth when only a tolerance is given."""
    if q_max is None and tol is None:
        raise InputError("provide q_max or tol")
    if q_max is not None:
        cache = SingularSeries(table, c1f, q_max=q_max, sieve=sieve)
        return cache.bh(h)
    q_max = 256
    while True:
        if q_max > table.limit:
            raise InputError(
                f"adaptive q_max exceeded prime coverage {table.limit} before "
                f"reaching tail tolerance {tol}"
            )
        cache = SingularSeries(table, c1f, q_max=q_max, sieve=sieve)
        result = cache.bh(h)
        if result.tail_bound < tol:
            return result
        q_max *= 2


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def write_dq_csv(path, singular):
    lines = [_DQ_CSV_HEADER]
    for q in range(1, singular.q_max + 1):
        lines.append(f"{q},{float(singular.dq[q])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_bh_csv(path, results):
    lines = [_BH_CSV_HEADER]
    for r in results:
        lines.append(f"{r.h},{r.value!r},{r.q_max},{r.tail_bound!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
