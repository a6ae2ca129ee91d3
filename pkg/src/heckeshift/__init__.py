"""Exact Hecke eigenvalues of level-one cusp forms, singular-series
constants from explicit local Euler factors, and desk-scale experiments on
shifted convolution sums, moments, and twisted exponential sums."""

from .arith import FactorSieve, ramanujan_sum, ramanujan_sum_bruteforce
from .eigenvalues import (
    DeligneReport,
    EigenvalueTable,
    SatakeAngle,
    SquareTable,
    deligne_report,
    divisor_sum_identity,
    hecke_relation_check,
    lambda_prime_power,
    normalize,
    prime_square_sum_drift,
    prime_values_of,
    read_table_cache,
    satake_angle,
    sieve_lambda,
    square_table,
    write_table_cache,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    DeligneViolationError,
    InputError,
    InternalConsistencyError,
    VerificationError,
)
from .ntt import (
    IntSeries,
    ModSeries,
    NTT_PRIME_POOL,
    PrimeBasis,
    crt_combine_signed,
    multiply_exact,
    ntt_multiply,
)
from .qexp import (
    FourierExpansion,
    SUPPORTED_WEIGHTS,
    delta_eisenstein_route,
    delta_expansion,
    eigenform_expansion,
    eisenstein,
    eta_cube_sparse,
    read_expansion_cache,
    write_expansion_cache,
)
from .singular import (
    DqCoefficient,
    DqEnvelope,
    LocalFactorW,
    RankinConstant,
    SingularSeries,
    SingularSeriesResult,
    dq_coefficient,
    local_factor_w,
    rankin_constant,
    rankin_constant_empirical,
    rankin_constant_euler,
    singular_series_Bh,
    write_bh_csv,
    write_dq_csv,
)
from .sums import (
    ErrorReport,
    ExpSumSample,
    FourthMomentFit,
    MillerSlopeFit,
    ShiftedSumRecord,
    ShiuReport,
    error_statistics,
    exp_sum_lambda_sq,
    fourth_moment_fit,
    miller_exponent_fit,
    miller_sum,
    shifted_sum,
    shifted_sum_batch,
    shifted_sum_total,
    shiu_envelope_check,
    window_square_sum,
    write_expsum_csv,
    write_report_json,
    write_shifted_csv,
)

__version__ = "0.1.0"
