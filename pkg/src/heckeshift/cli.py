"""Command-line front end: expand, verify, singular, shifted, expsum, report.

Exit codes: 0 success, 1 usage/input error, 2 verification failure,
3 internal-consistency failure.  Every command is deterministic given the
same configuration and caches.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arith import FactorSieve, ramanujan_sum, ramanujan_sum_bruteforce
from .eigenvalues import (
    deligne_report,
    divisor_sum_identity,
    hecke_relation_check,
    normalize,
    read_table_cache,
    square_table,
    write_table_cache,
)
from .errors import InputError, InternalConsistencyError, VerificationError
from .qexp import (
    SUPPORTED_WEIGHTS,
    eigenform_expansion,
    read_expansion_cache,
    write_expansion_cache,
)
from .singular import SingularSeries, rankin_constant, write_bh_csv, write_dq_csv
from .sums import (
    DEFAULT_MILLER_LADDER,
    ShiftedSumRecord,
    error_statistics,
    exp_sum_lambda_sq,
    miller_exponent_fit,
    miller_sum,
    shifted_sum_batch,
    shifted_sum_total,
    write_error_plot_script,
    write_expsum_csv,
    write_report_json,
    write_shifted_csv,
)

CACHE_ENV_VAR = "HECKE_CACHE_DIR"


@dataclass
class RunConfig:
    weight: int = 12
    n: int | None = None
    x: int = 10_000
    h_max: int | None = None
    q_max: int = 1000
    tol: float | None = None
    out: str = "out"
    cache: str | None = None
    threads: int = 1
    seed: int = 12345

    def __post_init__(self):
        if self.weight not in SUPPORTED_WEIGHTS:
            raise InputError(
                f"weight {self.weight} unsupported; choose from {SUPPORTED_WEIGHTS}"
            )
        if self.threads < 1:
            raise InputError("threads must be >= 1")

    @property
    def cache_dir(self):
        return Path(self.cache or os.environ.get(CACHE_ENV_VAR) or "cache")

    @property
    def out_dir(self):
        return Path(self.out)

    def default_h(self, x):
        return self.h_max if self.h_max is not None else int(x**0.75)


def _expansion_path(cfg, n):
    return cfg.cache_dir / f"qexp_w{cfg.weight}_n{n}.bin"


def _table_path(cfg, n):
    return cfg.cache_dir / f"table_w{cfg.weight}_n{n}.bin"


def _find_cached_n(cfg, minimum):
    """Smallest cached table limit >= minimum for this weight."""
    hits = []
    prefix = f"table_w{cfg.weight}_n"
    if cfg.cache_dir.is_dir():
        for p in cfg.cache_dir.iterdir():
            name = p.name
            if name.startswith(prefix) and name.endswith(".bin"):
                try:
                    hits.append(int(name[len(prefix) : -4]))
                except ValueError:
                    continue
    hits = sorted(n for n in hits if n >= minimum)
    return hits[0] if hits else None


def _load_table(cfg, min_n):
    """Load a cached eigenvalue table covering min_n or fail with advice."""
    n = cfg.n if cfg.n is not None else _find_cached_n(cfg, min_n)
    if n is None or n < min_n:
        raise InputError(
            f"no eigenvalue cache covering N >= {min_n} for weight "
            f"{cfg.weight} in {cfg.cache_dir}; run "
            f"'heckeshift expand --weight {cfg.weight} --n {min_n}' first"
        )
    path = _table_path(cfg, n)
    if not path.is_file():
        raise InputError(
            f"missing table cache {path}; run 'heckeshift expand' first"
        )
    return read_table_cache(path)


def cmd_expand(cfg):
    """Build and cache the q-expansion plus eigenvalue table; idempotent."""
    if cfg.n is None or cfg.n < 1:
        raise InputError("expand requires --n >= 1")
    cfg.cache_dir.mkdir(parents=True, exist_ok=True)
    qpath = _expansion_path(cfg, cfg.n)
    tpath = _table_path(cfg, cfg.n)
    expansion = None
    if qpath.is_file():
        try:
            expansion = read_expansion_cache(qpath)
            print(f"cache hit: {qpath}")
        except VerificationError as exc:
            print(f"warning: {exc}; rebuilding", file=sys.stderr)
            expansion = None
    if expansion is None:
        expansion = eigenform_expansion(cfg.weight, cfg.n, threads=cfg.threads)
        write_expansion_cache(qpath, expansion)
        print(f"wrote {qpath}")
    table = None
    if tpath.is_file():
        try:
            table = read_table_cache(tpath)
            print(f"cache hit: {tpath}")
        except VerificationError as exc:
            print(f"warning: {exc}; rebuilding", file=sys.stderr)
            table = None
    if table is None:
        table = normalize(expansion)
        write_table_cache(tpath, table)
        print(f"wrote {tpath}")
    return 0


def _verify_suites(table, seed, report_lines):
    sieve = FactorSieve(table.limit)
    rng = np.random.default_rng(seed)

    rep = deligne_report(table, sieve=sieve)
    report_lines.append(
        f"deligne: max |lambda(n)|/d2(n) = {rep.max_ratio:.12f} at n={rep.witness}"
    )
    if not rep.passed:
        raise VerificationError(
            f"Deligne bound violated at n={rep.witness}: ratio {rep.max_ratio}"
        )

    n_pairs = 10_000 if table.limit >= 100 else 100
    d2 = sieve.divisor_counts
    worst = (0.0, 1, 1)
    for _ in range(n_pairs):
        m = int(rng.integers(1, max(2, math.isqrt(table.limit))))
        n = int(rng.integers(1, max(2, table.limit // m)))
        resid = hecke_relation_check(table, m, n)
        bound = 1e-8 * d2[m] * d2[n]
        if resid >= bound:
            raise VerificationError(
                f"Hecke relation failed at (m, n) = ({m}, {n}): "
                f"residual {resid} >= {bound}"
            )
        if resid > worst[0]:
            worst = (resid, m, n)
    report_lines.append(
        f"hecke: {n_pairs} random pairs pass; worst residual {worst[0]:.3e} "
        f"at (m, n) = ({worst[1]}, {worst[2]})"
    )

    sq_limit = min(table.limit, 100_000)
    squares = square_table(table, sq_limit, sieve=sieve)
    dev, witness = divisor_sum_identity(table, squares, sq_limit)
    report_lines.append(
        f"square divisor-sum: max deviation {dev:.3e} at n={witness} "
        f"(n <= {sq_limit})"
    )
    if dev >= 1e-8:
        raise VerificationError(
            f"lambda(n^2) divisor-sum identity failed at n={witness}: {dev}"
        )

    for q in range(1, 101):
        for h in range(0, 101):
            closed = ramanujan_sum(q, h)
            brute = ramanujan_sum_bruteforce(q, h)
            if abs(closed - brute) >= 1e-6:
                raise VerificationError(
                    f"Ramanujan sum mismatch at (q, h) = ({q}, {h})"
                )
    for q in range(1, 301):
        for h in range(1, 301):
            if abs(ramanujan_sum(q, h)) > math.gcd(q, h):
                raise VerificationError(
                    f"|c_q(h)| > gcd(q, h) at (q, h) = ({q}, {h})"
                )
    report_lines.append("ramanujan: closed form matches brute force; bound holds")


def cmd_verify(cfg):
    """Run the identity suites; exit 2 with a witness on any violation."""
    if cfg.n is not None and not _table_path(cfg, cfg.n).is_file():
        # small ad-hoc runs may verify without a cache
        expansion = eigenform_expansion(cfg.weight, cfg.n, threads=cfg.threads)
        table = normalize(expansion)
    else:
        table = _load_table(cfg, cfg.n or 2)
    lines = []
    _verify_suites(table, cfg.seed, lines)
    for line in lines:
        print(f"pass {line}")
    print(f"verify: all suites pass (weight {table.weight}, N = {table.limit})")
    return 0


def _build_singular(cfg, table):
    c1 = rankin_constant(table)
    singular = SingularSeries(table, c1.chosen, q_max=cfg.q_max)
    return c1, singular


def cmd_singular(cfg):
    """Emit D_q and B_h tables with truncation tails."""
    table = _load_table(cfg, max(cfg.q_max, 1000))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    c1, singular = _build_singular(cfg, table)
    h_top = cfg.h_max if cfg.h_max is not None else 1000
    results = [singular.bh(h) for h in range(1, h_top + 1)]
    write_dq_csv(cfg.out_dir / "dq.csv", singular)
    write_bh_csv(cfg.out_dir / "bh.csv", results)
    mean_bh = math.fsum(r.value for r in results) / len(results)
    print(
        f"c1f = {c1.chosen:.9f} (euler {c1.euler_estimate:.9f}, "
        f"uncertainty {c1.uncertainty:.2e})"
    )
    print(
        f"mean B_h over h <= {h_top} = {mean_bh:.9f}; c1f^2 = {c1.chosen**2:.9f} "
        f"(ratio {mean_bh / c1.chosen**2:.4f})"
    )
    print(f"wrote {cfg.out_dir / 'dq.csv'} and {cfg.out_dir / 'bh.csv'}")
    return 0


def cmd_shifted(cfg):
    """Shifted-sum batch, error statistics, and a gnuplot script."""
    if cfg.x < 1000:
        raise InputError("shifted experiments need --x >= 1000")
    h_total = cfg.default_h(cfg.x)
    h_report = min(h_total, 10_000)
    table = _load_table(cfg, 2 * cfg.x + h_total)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    c1, singular = _build_singular(cfg, table)
    records = shifted_sum_batch(
        table, cfg.x, h_total, singular, h_limit=h_report, threads=cfg.threads
    )
    report = error_statistics(records)
    write_shifted_csv(cfg.out_dir / "shifted.csv", records)
    write_report_json(cfg.out_dir / "report.json", report)
    write_error_plot_script(cfg.out_dir / "error_plot.plt")
    total = shifted_sum_total(table, cfg.x, h_total)
    expect = c1.chosen**2 * h_total * cfg.x
    print(
        f"X = {cfg.x}, H = {h_total}: sum_h S(X,h) = {total:.6e}, "
        f"c1f^2 H X = {expect:.6e} (ratio {total / expect:.4f})"
    )
    print(
        f"median |S/X - B_h| over h <= {h_report}: {report.quantiles[2]:.3e}; "
        f"L1 average {report.l1_average:.3e}"
    )
    print(f"wrote shifted.csv, report.json, error_plot.plt in {cfg.out_dir}")
    return 0


def cmd_expsum(cfg):
    """Exponential sums at rational and random phases plus the Miller fit."""
    if cfg.x < 1000:
        raise InputError("exponential sums need --x >= 1000")
    table = _load_table(cfg, 2 * cfg.x)
    ladder = tuple(x for x in DEFAULT_MILLER_LADDER if x <= table.limit)
    if len(ladder) < 2:
        raise InputError(
            f"Miller ladder needs a table limit of at least "
            f"{DEFAULT_MILLER_LADDER[1]}; have {table.limit}"
        )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    squares = square_table(table, min(table.limit, max(ladder[-1], cfg.x)))
    rng = np.random.default_rng(cfg.seed)
    alphas = [0.0, 0.5, 1.0 / 3.0, 2.0 / 3.0] + [float(a) for a in rng.random(8)]
    samples = [exp_sum_lambda_sq(table, a, cfg.x) for a in alphas]
    samples += [miller_sum(squares, a, min(cfg.x, squares.limit)) for a in alphas]
    fit = miller_exponent_fit(squares, ladder=ladder, seed=cfg.seed, threads=cfg.threads)
    write_expsum_csv(cfg.out_dir / "expsum.csv", samples + list(fit.samples))
    with open(cfg.out_dir / "slope.txt", "w") as fh:
        fh.write(f"{fit.slope!r}\n")
    print(f"S(0) = {samples[0].value.real:.6e} over [X, 2X] at X = {cfg.x}")
    print(
        f"miller exponent fit over X in {fit.ladder}: slope = {fit.slope:.4f} "
        f"(predicted <= 0.75 + eps)"
    )
    print(f"wrote expsum.csv and slope.txt in {cfg.out_dir}")
    return 0


def _read_shifted_csv(path):
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "X,h,sum,bh,norm_error":
            raise InputError(f"{path} is not a shifted.csv file")
        for line in fh:
            x, h, s, bh, err = line.strip().split(",")
            records.append(
                ShiftedSumRecord(int(x), int(h), float(s), float(bh), float(err))
            )
    if not records:
        raise InputError(f"{path} has no rows")
    return records


def cmd_report(cfg):
    """Re-summarize an existing shifted.csv into report.json and a plot."""
    csv_path = cfg.out_dir / "shifted.csv"
    if not csv_path.is_file():
        raise InputError(f"missing {csv_path}; run 'heckeshift shifted' first")
    records = _read_shifted_csv(csv_path)
    report = error_statistics(records)
    write_report_json(cfg.out_dir / "report.json", report)
    write_error_plot_script(cfg.out_dir / "error_plot.plt")
    print(
        f"X = {report.X}, H = {report.H}: median |S/X - B_h| = "
        f"{report.quantiles[2]:.3e}, L1 average = {report.l1_average:.3e}"
    )
    counts = ", ".join(
        f"{c} above {t:.3e}" for t, c in zip(report.thresholds, report.counts)
    )
    print(f"exceedance counts: {counts}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _build_parser():
    parser = _Parser(
        prog="heckeshift",
        description=(
            "Exact Hecke eigenvalues, singular-series constants, and "
            "shifted-convolution experiments for level-one eigenforms"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "expand": (cmd_expand, "build and cache the expansion and table"),
        "verify": (cmd_verify, "run the identity verification suites"),
        "singular": (cmd_singular, "compute D_q and B_h tables"),
        "shifted": (cmd_shifted, "run the shifted-sum experiment"),
        "expsum": (cmd_expsum, "evaluate exponential sums and the Miller fit"),
        "report": (cmd_report, "summarize an existing shifted.csv"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=fn)
        p.add_argument("--weight", type=int, default=12)
        p.add_argument("--n", type=int, default=None, help="table limit N")
        p.add_argument("--x", type=int, default=10_000, help="window start X")
        p.add_argument("--h-max", type=int, default=None, dest="h_max")
        p.add_argument("--q-max", type=int, default=1000, dest="q_max")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", type=str, default="out")
        p.add_argument("--cache", type=str, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=12345)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig(
            weight=args.weight,
            n=args.n,
            x=args.x,
            h_max=args.h_max,
            q_max=args.q_max,
            tol=args.tol,
            out=args.out,
            cache=args.cache,
            threads=args.threads,
            seed=args.seed,
        )
        return args.func(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except InternalConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
