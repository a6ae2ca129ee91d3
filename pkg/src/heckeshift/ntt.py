"""Exact integer polynomial multiplication: NTT over word-size primes + CRT.

Residue channels use primes p = c * 2^e + 1 below 2^31 so that u64 products
never overflow; a polynomial product is computed independently modulo each
basis prime and reconstructed by the Chinese remainder theorem with signed
lifting into (-M/2, M/2].  Capacity is checked against an a-priori
coefficient bound before any work starts, because a CRT overflow is silent.
"""

import threading
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from ._parallel import ordered_map
from .errors import CapacityError, ConfigurationError, InputError

# Primes c * 2^e + 1 < 2^31 with e >= 23, largest first.  2^e is the largest
# power-of-two transform length each prime supports.  Verified by the test
# suite with an independent Miller-Rabin check.
NTT_PRIME_POOL = (
    (2130706433, 24),
    (2113929217, 25),
    (2088763393, 23),
    (2013265921, 27),
    (1811939329, 26),
    (1711276033, 25),
    (1484783617, 23),
    (1300234241, 23),
    (1224736769, 24),
    (1107296257, 25),
    (998244353, 23),
    (897581057, 23),
    (880803841, 23),
    (754974721, 24),
    (645922817, 23),
    (595591169, 23),
    (469762049, 26),
    (377487361, 23),
    (167772161, 25),
)


def _primitive_root(p):
    """Smallest generator of (Z/p)^*; p - 1 is factored by trial division."""
    fac = []
    m = p - 1
    d = 2
    while d * d <= m:
        if m % d == 0:
            fac.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        fac.append(m)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in fac):
            return g
    raise ConfigurationError(f"no primitive root found for {p}")


@nb.njit(cache=True, nogil=True)
def _fill_powers(out, w, p):
    x = np.uint64(1)
    wp = np.uint64(w)
    pp = np.uint64(p)
    for i in range(out.shape[0]):
        out[i] = x
        x = (x * wp) % pp


@nb.njit(cache=True, nogil=True)
def _ntt_forward(a, p, tw):
    """Gentleman-Sande DIF, natural order in, bit-reversed out, in place."""
    n = a.shape[0]
    half = n >> 1
    stride = 1
    while half >= 1:
        for start in range(0, n, half << 1):
            k = 0
            for j in range(start, start + half):
                x = a[j]
                y = a[j + half]
                s = x + y
                if s >= p:
                    s -= p
                a[j] = s
                d = x + p - y
                if d >= p:
                    d -= p
                a[j + half] = (d * tw[k]) % p
                k += stride
        half >>= 1
        stride <<= 1


@nb.njit(cache=True, nogil=True)
def _ntt_inverse(a, p, itw, ninv):
    """Cooley-Tukey DIT, bit-reversed in, natural order out, in place."""
    n = a.shape[0]
    half = 1
    stride = n >> 1
    while half < n:
        for start in range(0, n, half << 1):
            k = 0
            for j in range(start, start + half):
                x = a[j]
                y = (a[j + half] * itw[k]) % p
                s = x + y
                if s >= p:
                    s -= p
                a[j] = s
                d = x + p - y
                if d >= p:
                    d -= p
                a[j + half] = d
                k += stride
        half <<= 1
        stride >>= 1
    for i in range(n):
        a[i] = (a[i] * ninv) % p


_TWIDDLE_CACHE = {}
_TWIDDLE_LOCK = threading.Lock()


def _twiddles(p, size):
    """(forward, inverse, n^-1) tables for transform length `size` mod p."""
    key = (p, size)
    with _TWIDDLE_LOCK:
        hit = _TWIDDLE_CACHE.get(key)
    if hit is not None:
        return hit
    if (p - 1) % size != 0:
        raise ConfigurationError(
            f"modulus {p} is not NTT-friendly for transform size {size}"
        )
    w = pow(_primitive_root(p), (p - 1) // size, p)
    tw = np.empty(size // 2, dtype=np.uint64)
    itw = np.empty(size // 2, dtype=np.uint64)
    _fill_powers(tw, w, p)
    _fill_powers(itw, pow(w, p - 2, p), p)
    entry = (tw, itw, np.uint64(pow(size, p - 2, p)))
    with _TWIDDLE_LOCK:
        _TWIDDLE_CACHE[key] = entry
    return entry


def _transform_size(n_out):
    size = 1
    while size < n_out:
        size <<= 1
    return size


@dataclass(frozen=True)
class ModSeries:
    """Dense residue vector modulo one NTT-friendly prime."""

    modulus: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.dtype != np.uint64:
            raise InputError("ModSeries coefficients must be uint64")
        if c.shape[0] >= 1 and int(c.max(initial=0)) >= self.modulus:
            raise InputError("residue out of range [0, modulus)")

    @classmethod
    def reduce(cls, ints, modulus):
        p = int(modulus)
        arr = np.array([c % p for c in ints], dtype=np.uint64)
        return cls(p, arr)

    def __len__(self):
        return self.coeffs.shape[0]


def _convolve_mod(a, b, p, out_len):
    """Truncated product of residue vectors a * b mod p (cyclic-free)."""
    la = min(a.shape[0], out_len)
    lb = min(b.shape[0], out_len)
    size = _transform_size(la + lb - 1)
    tw, itw, ninv = _twiddles(p, size)
    pa = np.zeros(size, dtype=np.uint64)
    pa[:la] = a[:la]
    _ntt_forward(pa, np.uint64(p), tw)
    if a is b and la == lb:
        pa = (pa * pa) % np.uint64(p)
    else:
        pb = np.zeros(size, dtype=np.uint64)
        pb[:lb] = b[:lb]
        _ntt_forward(pb, np.uint64(p), tw)
        pa = (pa * pb) % np.uint64(p)
    _ntt_inverse(pa, np.uint64(p), itw, ninv)
    out = np.zeros(out_len, dtype=np.uint64)
    keep = min(out_len, la + lb - 1)
    out[:keep] = pa[:keep]
    return out


def ntt_multiply(a, b, out_len):
    """Product of two ModSeries truncated to out_len coefficients.

    Equals the schoolbook convolution mod the modulus; requires both inputs
    to share a modulus that supports the padded transform size.
    """
    if a.modulus != b.modulus:
        raise InputError(f"moduli differ: {a.modulus} != {b.modulus}")
    if out_len < 1:
        raise InputError("out_len must be >= 1")
    if len(a) == 0 or len(b) == 0:
        return ModSeries(a.modulus, np.zeros(out_len, dtype=np.uint64))
    return ModSeries(a.modulus, _convolve_mod(a.coeffs, b.coeffs, a.modulus, out_len))


@dataclass(frozen=True)
class IntSeries:
    """Dense power series with arbitrary-precision integer coefficients."""

    coeffs: list

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise InputError("IntSeries needs at least one coefficient")

    @property
    def length(self):
        return len(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def max_abs(self):
        return max(abs(c) for c in self.coeffs)


@dataclass(frozen=True)
class PrimeBasis:
    """CRT basis of distinct NTT-friendly primes.

    capacity is the bit length of the product of the primes; signed
    reconstruction is valid while 2 * max|coefficient| < product.
    """

    primes: tuple
    capacity: int = field(init=False)

    def __post_init__(self):
        prod = 1
        for p in self.primes:
            prod *= p
        object.__setattr__(self, "capacity", prod.bit_length())

    @property
    def modulus(self):
        prod = 1
        for p in self.primes:
            prod *= p
        return prod

    @classmethod
    def for_bound(cls, max_abs_bound, transform_log2):
        """Smallest pool prefix whose capacity covers 2*max_abs_bound."""
        needed = (2 * max_abs_bound).bit_length() + 1
        chosen = []
        bits = 0
        for p, e in NTT_PRIME_POOL:
            if e < transform_log2:
                continue
            chosen.append(p)
            bits += p.bit_length() - 1
            if bits >= needed:
                return cls(tuple(chosen))
        raise CapacityError(
            f"prime pool exhausted: need {needed} capacity bits at transform "
            f"size 2^{transform_log2}; use a larger basis"
        )


def crt_combine_signed(rows, primes):
    """Reconstruct signed integers from residue rows, one row per prime.

    Residues are lifted to (-M/2, M/2] where M is the basis modulus.
    """
    m_total = 1
    for p in primes:
        m_total *= p
    half = m_total >> 1
    weights = [m_total // p for p in primes]
    # fold (M/p)^-1 mod p into each residue row while still vectorized
    folded = [
        ((rows[i] * np.uint64(pow(weights[i], -1, p))) % np.uint64(p)).tolist()
        for i, p in enumerate(primes)
    ]
    length = len(folded[0])
    out = [0] * length
    for k in range(length):
        v = 0
        for i in range(len(primes)):
            v += folded[i][k] * weights[i]
        v %= m_total
        if v > half:
            v -= m_total
        out[k] = v
    return out


def multiply_exact(a, b, out_len, basis=None, max_abs_bound=None, threads=1):
    """Exact integer product of two IntSeries truncated to out_len.

    The coefficient-magnitude bound defaults to the sharp a-priori value
    min(len_a, len_b, out_len) * max|a| * max|b|; a CapacityError prompts
    for a larger basis before any transform runs.
    """
    if out_len < 1:
        raise InputError("out_len must be >= 1")
    if max_abs_bound is None:
        max_abs_bound = min(len(a), len(b), out_len) * a.max_abs() * b.max_abs()
    la = min(len(a), out_len)
    lb = min(len(b), out_len)
    log2size = _transform_size(la + lb - 1).bit_length() - 1
    if basis is None:
        basis = PrimeBasis.for_bound(max_abs_bound, log2size)
    elif basis.capacity < (2 * max_abs_bound).bit_length() + 1:
        raise CapacityError(
            f"basis capacity {basis.capacity} bits cannot hold coefficients "
            f"up to 2*{max_abs_bound}; use a larger basis"
        )
    square = a is b or a.coeffs is b.coeffs

    def channel(p):
        ra = ModSeries.reduce(a.coeffs[:la], p).coeffs
        rb = ra if square else ModSeries.reduce(b.coeffs[:lb], p).coeffs
        return _convolve_mod(ra, rb, p, out_len)

    for p in basis.primes:  # warm twiddle cache outside the pool
        _twiddles(p, _transform_size(la + lb - 1))
    rows = ordered_map(channel, basis.primes, threads)
    return IntSeries(crt_combine_signed(rows, basis.primes))
