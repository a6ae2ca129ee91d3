"""Elementary arithmetic functions over a smallest-prime-factor sieve.

Provides mu, phi, d_2 and Ramanujan sums c_q(h).  The closed form
c_q(h) = mu(q/g) * phi(q) / phi(q/g) with g = gcd(q, h) is integer-exact;
a trigonometric brute-force oracle is kept alongside for verification.
"""

import math

import numba as nb
import numpy as np

from .errors import InputError


@nb.njit(cache=True, nogil=True)
def _spf_kernel(limit):
    spf = np.arange(limit + 1).astype(np.int32)
    p = 2
    while p * p <= limit:
        if spf[p] == p:
            for m in range(p * p, limit + 1, p):
                if spf[m] == m:
                    spf[m] = p
        p += 1
    return spf


@nb.njit(cache=True, nogil=True)
def _divisor_count_kernel(spf):
    n = spf.shape[0] - 1
    d = np.ones(n + 1, dtype=np.int32)
    e = np.zeros(n + 1, dtype=np.int32)
    for m in range(2, n + 1):
        p = spf[m]
        q = m // p
        if q % p == 0:
            e[m] = e[q] + 1
            d[m] = d[q] // (e[q] + 1) * (e[m] + 1)
        else:
            e[m] = 1
            d[m] = d[q] * 2
    return d


@nb.njit(cache=True, nogil=True)
def _mobius_phi_kernel(spf):
    n = spf.shape[0] - 1
    mu = np.zeros(n + 1, dtype=np.int64)
    phi = np.zeros(n + 1, dtype=np.int64)
    mu[1] = 1
    phi[1] = 1
    for m in range(2, n + 1):
        p = spf[m]
        q = m // p
        if q % p == 0:
            mu[m] = 0
            phi[m] = phi[q] * p
        else:
            mu[m] = -mu[q]
            phi[m] = phi[q] * (p - 1)
    return mu, phi


class FactorSieve:
    """Smallest-prime-factor table for n <= limit with derived tables.

    The spf array is built once; mobius/totient/divisor-count tables are
    materialized lazily and cached.  Everything is immutable after build,
    so instances are safe to share across threads.
    """

    def __init__(self, limit):
        if limit < 2:
            raise InputError(f"sieve limit must be >= 2, got {limit}")
        self.limit = int(limit)
        self.spf = _spf_kernel(self.limit)
        self._d2 = None
        self._mu = None
        self._phi = None
        self._primes = None

    def _check(self, n):
        if not 1 <= n <= self.limit:
            raise InputError(f"n={n} outside sieve range [1, {self.limit}]")

    @property
    def divisor_counts(self):
        if self._d2 is None:
            self._d2 = _divisor_count_kernel(self.spf)
        return self._d2

    @property
    def mobius_table(self):
        if self._mu is None:
            self._mu, self._phi = _mobius_phi_kernel(self.spf)
        return self._mu

    @property
    def totient_table(self):
        if self._phi is None:
            self._mu, self._phi = _mobius_phi_kernel(self.spf)
        return self._phi

    @property
    def primes(self):
        if self._primes is None:
            idx = np.arange(self.limit + 1, dtype=np.int32)
            mask = self.spf == idx
            mask[:2] = False
            self._primes = np.flatnonzero(mask).astype(np.int64)
        return self._primes

    def factorize(self, n):
        """Prime factorization [(p, e), ...] with p ascending."""
        self._check(n)
        out = []
        while n > 1:
            p = int(self.spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def mobius(self, n):
        self._check(n)
        return int(self.mobius_table[n])

    def euler_phi(self, n):
        self._check(n)
        return int(self.totient_table[n])

    def divisor_count(self, n):
        self._check(n)
        return int(self.divisor_counts[n])

    def divisors(self, n):
        """All divisors of n, ascending."""
        divs = [1]
        for p, e in self.factorize(n):
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)


def factorize(n):
    """Trial-division factorization, no sieve needed."""
    if n < 1:
        raise InputError(f"cannot factor n={n}")
    out = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if m > 1:
        out.append((m, 1))
    return out


def _mu_phi_of(n):
    mu, phi = 1, 1
    for p, e in factorize(n):
        if e > 1:
            return 0, None
        mu = -mu
        phi *= p - 1
    return mu, phi


def euler_phi(n):
    phi = n
    for p, _ in factorize(n):
        phi -= phi // p
    return phi


def ramanujan_sum(q, h):
    """Ramanujan sum c_q(h) = sum over a coprime to q of e(ah/q), exactly.

    Uses mu(q/g) * phi(q) / phi(q/g) with g = gcd(q, h); the division is
    exact since phi(m) | phi(q) for m | q.  h = 0 yields phi(q) because
    gcd(q, 0) = q.
    """
    if q < 1 or h < 0:
        raise InputError(f"need q >= 1 and h >= 0, got q={q}, h={h}")
    g = math.gcd(q, h)
    m = q // g
    mu, _ = _mu_phi_of(m)
    if mu == 0:
        return 0
    num = mu * euler_phi(q)
    den = euler_phi(m)
    assert num % den == 0
    return num // den


def ramanujan_sum_bruteforce(q, h):
    """Direct sum of cos(2 pi a h / q) over a coprime to q (oracle, q <= 1e4)."""
    if q > 10_000:
        raise InputError(f"brute-force oracle limited to q <= 1e4, got {q}")
    terms = [
        math.cos(2.0 * math.pi * a * h / q)
        for a in range(1, q + 1)
        if math.gcd(a, q) == 1
    ]
    return math.fsum(terms)
