"""Integer q-expansions of the level-one holomorphic eigenforms.

The weight-12 form is built from the cube of Dedekind's eta product: the
cube is O(sqrt N)-sparse (coefficient (-1)^k (2k+1) at index k(k+1)/2), and
its eighth power, shifted by one q-power, gives the weight-12 coefficients.
Three exact squarings do the work: the first on the sparse data directly in
int64, the last two through NTT residue channels with a single CRT
reconstruction at the end.  Every build is cross-checked against the
independent Eisenstein construction (E4^3 - E6^2)/1728 on the low range.

Higher one-dimensional weights come from multiplying by E4^a * E6^b with
4a + 6b = weight - 12.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .errors import CapacityError, InputError, InternalConsistencyError, VerificationError
from .ntt import (
    IntSeries,
    ModSeries,
    PrimeBasis,
    _convolve_mod,
    _transform_size,
    _twiddles,
    crt_combine_signed,
    multiply_exact,
)

SUPPORTED_WEIGHTS = (12, 16, 18, 20, 22, 26)

# E4^a * E6^b factors that lift weight 12 to each higher one-dimensional space
_EISENSTEIN_LIFT = {16: (1, 0), 18: (0, 1), 20: (2, 0), 22: (1, 1), 26: (2, 1)}

CACHE_MAGIC = b"HECKEQX1"


@dataclass(frozen=True)
class FourierExpansion:
    """Exact integer coefficients c_n of a normalized eigenform, c_1 = 1."""

    weight: int
    series: IntSeries
    level: int = 1

    def __post_init__(self):
        if self.weight not in SUPPORTED_WEIGHTS:
            raise InputError(
                f"weight {self.weight} not in one-dimensional set {SUPPORTED_WEIGHTS}"
            )
        if self.level != 1:
            raise InputError("only level 1 is supported")
        if len(self.series) < 2:
            raise InputError("expansion needs coefficients up to q^1 at least")
        if self.series[0] != 0 or self.series[1] != 1:
            raise InputError("cusp-form normalization requires c_0 = 0, c_1 = 1")

    @property
    def limit(self):
        return len(self.series) - 1

    def __getitem__(self, n):
        return self.series[n]


def eta_cube_sparse(N):
    """Cube of the eta product to degree N: (-1)^k (2k+1) at q^{k(k+1)/2}."""
    if N < 1:
        raise InputError("degree must be >= 1")
    coeffs = [0] * (N + 1)
    k = 0
    while k * (k + 1) // 2 <= N:
        coeffs[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return IntSeries(coeffs)


def _divisor_power_sums(power, N):
    """sigma_power(n) for n <= N via the divisor sieve, exact integers."""
    sig = [0] * (N + 1)
    for d in range(1, N + 1):
        dp = d**power
        for m in range(d, N + 1, d):
            sig[m] += dp
    return sig


def eisenstein(weight, N):
    """E4 or E6 to degree N: 1 + 240 sigma_3 q^n resp. 1 - 504 sigma_5 q^n."""
    if weight not in (4, 6):
        raise InputError(f"eisenstein weight must be 4 or 6, got {weight}")
    if N < 0:
        raise InputError("degree must be >= 0")
    if weight == 4:
        sig = _divisor_power_sums(3, N)
        coeffs = [240 * s for s in sig]
    else:
        sig = _divisor_power_sums(5, N)
        coeffs = [-504 * s for s in sig]
    coeffs[0] = 1
    return IntSeries(coeffs)


def _sparse_square_int64(series, out_len):
    """Exact square of a sparse int series; products must stay below 2^62."""
    idx = np.flatnonzero(np.array([c != 0 for c in series.coeffs]))
    val = np.array([series.coeffs[i] for i in idx], dtype=np.int64)
    idx = idx.astype(np.int64)
    pair_bound = len(idx) * int(np.abs(val).max()) ** 2
    if pair_bound >= 1 << 62:
        raise CapacityError("sparse square would overflow int64")
    out = np.zeros(out_len, dtype=np.int64)
    iv = (idx[:, None] + idx[None, :]).ravel()
    vv = (val[:, None] * val[None, :]).ravel()
    keep = iv < out_len
    np.add.at(out, iv[keep], vv[keep])
    return out


def _log2_divisor_bound(N):
    """log2 of the Nicolas-Robin bound d(n) <= n^{1.5379 ln2 / ln ln n}."""
    if N < 16:
        return 4.0
    return 1.5379 * math.log(2.0) / math.log(math.log(N)) * math.log2(N)


def _delta_basis(N):
    """CRT basis sized for the weight-12 coefficients to degree N.

    Takes the larger of the declared sizing rule 2 * N^{5.8} and the
    divisor-bound worst case 2 * d_2(N) * N^{5.5}, so reconstruction has
    provable headroom either way.
    """
    rule_bits = math.ceil(5.8 * math.log2(max(N, 2))) + 1
    deligne_bits = math.ceil(5.5 * math.log2(max(N, 2)) + _log2_divisor_bound(N)) + 2
    bits = max(rule_bits, deligne_bits)
    log2size = _transform_size(2 * N + 1).bit_length() - 1
    return PrimeBasis.for_bound(1 << bits, log2size)


def delta_eisenstein_route(N):
    """Weight-12 coefficients c_1..c_N via (E4^3 - E6^2)/1728, exact."""
    e4 = eisenstein(4, N)
    e6 = eisenstein(6, N)
    e4sq = multiply_exact(e4, e4, N + 1)
    e4cu = multiply_exact(e4sq, e4, N + 1)
    e6sq = multiply_exact(e6, e6, N + 1)
    out = [0] * (N + 1)
    for n in range(1, N + 1):
        num = e4cu[n] - e6sq[n]
        if num % 1728 != 0:
            raise InternalConsistencyError(
                f"Eisenstein route: q^{n} numerator not divisible by 1728"
            )
        out[n] = num // 1728
    return IntSeries(out)


_CROSSCHECK_LIMIT = 10_000


def delta_expansion(N, threads=1, crosscheck=True):
    """Weight-12 expansion to degree N via three exact squarings of eta^3.

    Residues stay in per-prime channels through both dense squarings; only
    the final coefficients are CRT-reconstructed.  The low range is verified
    against the independent Eisenstein route; a mismatch is fatal since it
    can only come from a transform or reconstruction defect.
    """
    if N < 1:
        raise InputError("degree must be >= 1")
    eta3 = eta_cube_sparse(max(N - 1, 0))
    e6 = _sparse_square_int64(eta3, N)
    basis = _delta_basis(N)
    size = _transform_size(2 * N - 1)
    for p in basis.primes:
        _twiddles(p, size)

    def channel(p):
        row = (e6 % p).astype(np.uint64)
        row = _convolve_mod(row, row, p, N)
        row = _convolve_mod(row, row, p, N)
        return row

    rows = ordered_map(channel, basis.primes, threads)
    coeffs = crt_combine_signed(rows, basis.primes)
    series = IntSeries([0] + coeffs)
    expansion = FourierExpansion(12, series)
    if crosscheck:
        m = min(N, _CROSSCHECK_LIMIT)
        reference = delta_eisenstein_route(m)
        for n in range(1, m + 1):
            if series[n] != reference[n]:
                raise InternalConsistencyError(
                    f"eta route disagrees with Eisenstein route at n={n}: "
                    f"{series[n]} != {reference[n]}"
                )
    return expansion


def eigenform_expansion(weight, N, threads=1):
    """Exact eigenform expansion for any supported one-dimensional weight."""
    if weight not in SUPPORTED_WEIGHTS:
        raise InputError(
            f"weight {weight} unsupported; choose from {SUPPORTED_WEIGHTS}"
        )
    if weight == 12:
        return delta_expansion(N, threads=threads)
    a, b = _EISENSTEIN_LIFT[weight]
    series = delta_expansion(N, threads=threads).series
    factors = []
    if a:
        e4 = eisenstein(4, N - 1) if N > 1 else IntSeries([1])
        factors.extend([e4] * a)
    if b:
        e6 = eisenstein(6, N - 1) if N > 1 else IntSeries([1])
        factors.extend([e6] * b)
    for f in factors:
        shifted = IntSeries(series.coeffs[1:])  # strip the q^1 offset
        product = multiply_exact(shifted, f, N, threads=threads)
        series = IntSeries([0] + product.coeffs)
    return FourierExpansion(weight, series)


# ---------------------------------------------------------------------------
# Coefficient cache: magic, u32 weight, u64 N, (N+1) signed 128-bit LE coeffs.
# ---------------------------------------------------------------------------

_INT128_MIN = -(1 << 127)
_INT128_MAX = (1 << 127) - 1


def write_expansion_cache(path, expansion):
    series = expansion.series
    n_limit = expansion.limit
    lo = np.empty(n_limit + 1, dtype=np.uint64)
    hi = np.empty(n_limit + 1, dtype=np.int64)
    mask = (1 << 64) - 1
    for n, c in enumerate(series.coeffs):
        if not _INT128_MIN <= c <= _INT128_MAX:
            raise CapacityError(
                f"coefficient at n={n} does not fit the signed 128-bit cache "
                f"format; this (weight, N) combination cannot be cached"
            )
        lo[n] = c & mask
        hi[n] = c >> 64
    body = np.empty((n_limit + 1, 2), dtype="<u8")
    body[:, 0] = lo
    body[:, 1] = hi.astype(np.uint64)
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(int(expansion.weight).to_bytes(4, "little"))
        fh.write(int(n_limit).to_bytes(8, "little"))
        fh.write(body.tobytes())


def _validate_hecke_exact(weight, coeffs, path):
    """Exact p = 2, 3 Hecke checks on whatever indices the range allows."""
    n_limit = len(coeffs) - 1
    if coeffs[1] != 1:
        raise VerificationError(f"cache {path}: c_1 != 1")
    checks = []
    if n_limit >= 4:
        checks.append((coeffs[2] ** 2, coeffs[4] + 2 ** (weight - 1), "c_2^2 = c_4 + 2^(k-1)"))
    if n_limit >= 8:
        checks.append(
            (coeffs[2] * coeffs[4], coeffs[8] + 2 ** (weight - 1) * coeffs[2],
             "c_2 c_4 = c_8 + 2^(k-1) c_2")
        )
    if n_limit >= 9:
        checks.append((coeffs[3] ** 2, coeffs[9] + 3 ** (weight - 1), "c_3^2 = c_9 + 3^(k-1)"))
    if n_limit >= 6:
        checks.append((coeffs[2] * coeffs[3], coeffs[6], "c_2 c_3 = c_6"))
    for left, right, name in checks:
        if left != right:
            raise VerificationError(f"cache {path}: Hecke check failed ({name})")


def read_expansion_cache(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != CACHE_MAGIC:
            raise VerificationError(f"cache {path}: bad magic {magic!r}")
        weight = int.from_bytes(fh.read(4), "little")
        n_limit = int.from_bytes(fh.read(8), "little")
        raw = fh.read(16 * (n_limit + 1))
    if len(raw) != 16 * (n_limit + 1):
        raise VerificationError(f"cache {path}: truncated body")
    body = np.frombuffer(raw, dtype="<u8").reshape(n_limit + 1, 2)
    lo = body[:, 0].tolist()
    hi = body[:, 1].astype(np.int64).tolist()
    # hi is the signed high limb, lo the unsigned low limb of two's complement
    coeffs = [(h << 64) + l for h, l in zip(hi, lo)]
    _validate_hecke_exact(weight, coeffs, path)
    return FourierExpansion(weight, IntSeries(coeffs))
