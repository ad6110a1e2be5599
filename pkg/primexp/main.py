import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Dict, Optional

import click
from loguru import logger
from pydantic import ValidationError

from primexp import settings
from primexp.errors import ConfigError, DomainError, EmitError, PrimexpError
from primexp.exponents import exponent_report
from primexp.expsums import SumPath, SumRequest, f_k_sum, weyl_short
from primexp.harness import (
    dichotomy_experiment,
    gauss_audit,
    hb_case_rows,
    hb_verify,
    lemma1_audit,
    lemma3_audit,
    max_ratio_by_x,
    scan_major,
    scan_minor,
)
from primexp.local_factors import complete_sum, wk_value
from primexp.models import ScanConfig, load_scan_config
from primexp.phase import as_alpha, check_precision
from primexp.rational import classify_arc, convergents, dirichlet_approx
from primexp.records import FORMATS, emit
from primexp.utils import configure_logging, floor_power, parse_fraction, xpow

HB_CASE_FIELDS = ("j", "ranges", "case", "S", "M", "r", "M1", "M2", "window_ok")


DEFAULT_SEED = 1


@dataclass
class Options:
    precision_bits: int
    threads: int
    seed: int
    out: Optional[str]
    fmt: str
    # global flags given on the command line; these override a --config file
    explicit: Dict[str, int] = field(default_factory=dict)


class PrimexpGroup(click.Group):
    """Maps library errors to one-line messages and exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PrimexpError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except ValidationError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(ConfigError.exit_code)


def _write(opts: Options, text: str):
    if opts.out is None:
        click.echo(text, nl=not text.endswith("\n"))
        return
    try:
        with open(opts.out, "w", encoding="utf-8", newline="") as f:
            f.write(text if text.endswith("\n") else text + "\n")
    except OSError as e:
        raise EmitError(f"cannot write {opts.out}: {e}", path=opts.out) from e


def _write_json(opts: Options, payload):
    _write(opts, json.dumps(payload, indent=2, sort_keys=False))


def _interval(x: int, y: Optional[int], theta: Optional[str]) -> int:
    if y is not None:
        return y
    if theta is None:
        raise DomainError("give --y or --theta")
    return floor_power(x, parse_fraction(theta))


@click.group(cls=PrimexpGroup)
@click.option("--precision-bits", default=None, type=int, help=f"Fixed-point bits for alpha  [default: {settings.PRECISION_BITS}]")
@click.option("--threads", default=None, type=click.IntRange(min=1), help=f"Worker threads  [default: {settings.THREADS}]")
@click.option("--seed", default=None, type=click.IntRange(0, 2 ** 64 - 1), help=f"Seed for sampled experiments  [default: {DEFAULT_SEED}]")
@click.option("--out", "-o", default=None, help="Output path, stdout when omitted")
@click.option("--format", "fmt", default="csv", show_default=True, type=click.Choice(FORMATS), help="Record format")
@click.option("--log-level", default=settings.LOG_LEVEL, show_default=True, help="loguru level for stderr")
@click.pass_context
def main(ctx, precision_bits, threads, seed, out, fmt, log_level):
    """Exponential sums over primes in short intervals: evaluation and audits."""
    configure_logging(log_level)
    given = dict(precision_bits=precision_bits, threads=threads, seed=seed)
    ctx.obj = Options(
        precision_bits=settings.PRECISION_BITS if precision_bits is None else precision_bits,
        threads=settings.THREADS if threads is None else threads,
        seed=DEFAULT_SEED if seed is None else seed,
        out=out,
        fmt=fmt,
        explicit={key: value for key, value in given.items() if value is not None},
    )


@main.command("sum")
@click.option("--alpha", required=True, help="a/q, a decimal, or pi, e, phi, sqrt2")
@click.option("--k", required=True, type=int)
@click.option("--x", required=True, type=int)
@click.option("--y", default=None, type=int, help="Interval length; defaults to floor(x^theta)")
@click.option("--theta", default=None)
@click.option("--path", default="auto", show_default=True, type=click.Choice([p.value for p in SumPath]))
@click.pass_obj
def sum_command(opts: Options, alpha, k, x, y, theta, path):
    """f_k(alpha; x, y) = sum over x < n <= x + y of Lambda(n) e(alpha n^k)."""
    y = _interval(x, y, theta)
    value = as_alpha(alpha, opts.precision_bits)
    check_precision(value, x + y, k)
    result = f_k_sum(SumRequest(alpha=value, x=x, y=y, k=k, path=SumPath(path)), threads=opts.threads)
    _write_json(opts, result.to_dict())


@main.command("weyl")
@click.option("--alpha", required=True)
@click.option("--k", required=True, type=int)
@click.option("--x", required=True, type=int)
@click.option("--y", default=None, type=int)
@click.option("--theta", default=None)
@click.option("--path", default="auto", show_default=True, type=click.Choice([p.value for p in SumPath]))
@click.pass_obj
def weyl_command(opts: Options, alpha, k, x, y, theta, path):
    """Unweighted short Weyl sum over x < n <= x + y."""
    y = _interval(x, y, theta)
    value = as_alpha(alpha, opts.precision_bits)
    check_precision(value, x + y, k)
    _write_json(opts, weyl_short(value, x, y, k, SumPath(path), threads=opts.threads).to_dict())


@main.command("gauss")
@click.option("--k", required=True, type=int)
@click.option("--q", default=None, type=int, help="Single modulus")
@click.option("--a", default=1, show_default=True, type=int)
@click.option("--q-max", default=None, type=int, help="Audit every q <= q-max with a in {1, q-1}")
@click.pass_obj
def gauss_command(opts: Options, k, q, a, q_max):
    """Complete sums S(q, a, k) and their ratio to q w_k(q)."""
    if q_max is not None:
        records, summary = gauss_audit(q_max, k)
        logger.info(f"gauss audit summary: {summary}")
        emit(records, opts.fmt, opts.out)
        return
    if q is None:
        raise DomainError("give --q or --q-max")
    payload = complete_sum(q, a, k).to_dict()
    payload.update({"q": q, "a": a, "k": k})
    if k >= 3:
        scale = q * float(wk_value(q, k))
        payload.update({"q_wk": scale, "ratio": payload["abs"] / scale})
    _write_json(opts, payload)


@main.command("wk")
@click.option("--q", required=True, type=int)
@click.option("--k", required=True, type=int)
@click.pass_obj
def wk_command(opts: Options, q, k):
    """w_k(q) as rat * sqrt(rad)."""
    value = wk_value(q, k)
    _write_json(opts, {"q": q, "k": k, "rat": str(value.rat), "rad": value.rad, "exact": str(value), "value": float(value)})


@main.command("approx")
@click.option("--alpha", required=True)
@click.option("--Q", "Q", required=True, help="Dirichlet parameter Q >= 1")
@click.option("--list", "list_all", is_flag=True, default=False, help="Also list every convergent with q <= Q")
@click.pass_obj
def approx_command(opts: Options, alpha, Q, list_all):
    """Dirichlet approximation a/q with q <= Q and |q alpha - a| < 1/Q."""
    value = as_alpha(alpha, opts.precision_bits)
    best = dirichlet_approx(value, parse_fraction(Q))
    payload = {"a": best.a, "q": best.q, "err": best.error}
    if list_all:
        payload["convergents"] = [{"a": c.a, "q": c.q, "err": c.error} for c in convergents(value, int(float(Q)))]
    _write_json(opts, payload)


@main.command("classify")
@click.option("--alpha", required=True)
@click.option("--k", required=True, type=int)
@click.option("--theta", required=True)
@click.option("--x", required=True, type=float)
@click.option("--P", "P", default=None, type=float, help="Major-arc parameter P")
@click.option("--P-exp", "P_exp", default=None, help="P = x^P-exp, instead of --P")
@click.pass_obj
def classify_command(opts: Options, alpha, k, theta, x, P, P_exp):
    """Major or minor arc of P for alpha."""
    if (P is None) == (P_exp is None):
        raise DomainError("give exactly one of --P and --P-exp")
    if P is None:
        P = xpow(x, parse_fraction(P_exp))
    decision = classify_arc(as_alpha(alpha, opts.precision_bits), k, parse_fraction(theta), x, P)
    _write_json(opts, decision.to_dict())


@main.command("exponents")
@click.option("--k", required=True, type=int)
@click.option("--theta", required=True)
@click.option("--rho", default=None, help="Defaults to rho_max(k, theta)")
@click.option("--x", default=10 ** 6, show_default=True, type=float, help="Scale for the numeric head-length check")
@click.pass_obj
def exponents_command(opts: Options, k, theta, rho, x):
    """sigma_k, rho_k(theta), Q, beta and J."""
    _write_json(opts, exponent_report(k, theta, rho, x))


@main.command("hb-verify")
@click.option("--nmax", required=True, type=int)
@click.option("--J", "J", required=True, type=int)
@click.option("--X", "X", default=None, type=int, help="Defaults to nmax")
@click.pass_obj
def hb_verify_command(opts: Options, nmax, J, X):
    """Check the identity against Lambda(n) for 2 <= n <= nmax."""
    summary = hb_verify(nmax, J, X)
    _write_json(opts, summary)
    if not summary["ok"]:
        sys.exit(1)


@main.command("hb-cases")
@click.option("--x", required=True, type=int)
@click.option("--theta", required=True)
@click.option("--k", required=True, type=int)
@click.option("--rho", default=None, help="Defaults to rho_max(k, theta), or rho_full where rho_max has no plan")
@click.pass_obj
def hb_cases_command(opts: Options, x, theta, k, rho):
    """One CSV row per dyadic vector with its case label."""
    rows = hb_case_rows(x, theta, k, rho)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=HB_CASE_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({name: "" if row[name] is None else row[name] for name in HB_CASE_FIELDS})
    _write(opts, buffer.getvalue())
    failures = sum(row["case"] == "failure" for row in rows)
    if failures:
        click.echo(f"error: {failures} vectors could not be classified", err=True)
        sys.exit(1)


@main.command("lemma1-audit")
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--e-min", default=5, show_default=True, type=int)
@click.option("--e-max", default=14, show_default=True, type=int)
@click.pass_obj
def lemma1_audit_command(opts: Options, k, e_min, e_max):
    """Normalized dyadic moments of w_k over Q = 2^e."""
    records, summary = lemma1_audit(k, e_min, e_max)
    logger.info(f"lemma1 audit summary: {summary}")
    emit(records, opts.fmt, opts.out)


@main.command("lemma3-audit")
@click.option("--cases", default=500, show_default=True, type=int)
@click.option("--q-max", default=1000, show_default=True, type=int)
@click.option("--n-max", default=10 ** 4, show_default=True, type=int)
@click.pass_obj
def lemma3_audit_command(opts: Options, cases, q_max, n_max):
    """Seeded counts of ||a n^k / q|| < delta against delta (q + N)."""
    records, summary = lemma3_audit(cases, opts.seed, q_max, n_max)
    logger.info(f"lemma3 audit summary: {summary}")
    emit(records, opts.fmt, opts.out)


@main.command("dichotomy")
@click.option("--alpha", required=True)
@click.option("--x", required=True, type=int)
@click.option("--y", required=True, type=int)
@click.option("--k", required=True, type=int)
@click.option("--rho", required=True)
@click.pass_obj
def dichotomy_command(opts: Options, alpha, x, y, k, rho):
    """Which branch of the short-sum dichotomy covers the observed sum."""
    value = as_alpha(alpha, opts.precision_bits)
    check_precision(value, x + y, k)
    emit([dichotomy_experiment(value, x, y, k, rho)], opts.fmt, opts.out)


def _scan_config(opts: Options, config: Optional[str], **overrides) -> ScanConfig:
    overrides.update(opts.explicit)
    if config is not None:
        return load_scan_config(config, **overrides)
    try:
        return ScanConfig(**{key: value for key, value in overrides.items() if value is not None})
    except ValidationError as e:
        raise ConfigError(f"invalid scan options: {e}") from e


def _scan_options(fn):
    options = [
        click.option("--config", default=None, type=click.Path(exists=True, dir_okay=False), help="ScanConfig JSON"),
        click.option("--k", default=None, type=int),
        click.option("--theta", default=None),
        click.option("--rho", default=None),
        click.option("--x", "xs", multiple=True, type=int, help="Repeat for several x"),
        click.option("--P-exp", "P_exp", default=None),
        click.option("--samples", default=None, type=int),
        click.option("--alpha", "alphas", multiple=True, help="Extra alpha evaluated before the sampled ones"),
        click.option("--timing/--no-timing", default=None),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _scan_overrides(k, theta, rho, xs, P_exp, samples, alphas, timing) -> dict:
    return dict(
        k=k,
        theta=theta,
        rho=rho,
        x=list(xs) or None,
        P_exp=P_exp,
        samples=samples,
        extra_alphas=list(alphas) or None,
        timing=timing,
    )


@main.command("scan-minor")
@_scan_options
@click.option("--near-fraction", default=None, type=float, help="Share of near-rational samples")
@click.pass_obj
def scan_minor_command(opts: Options, config, k, theta, rho, xs, P_exp, samples, alphas, timing, near_fraction):
    """Sampled minor-arc alpha against x^(theta-rho) + x^theta P^(-1/2)."""
    overrides = _scan_overrides(k, theta, rho, xs, P_exp, samples, alphas, timing)
    cfg = _scan_config(opts, config, near_rational_fraction=near_fraction, **overrides)
    records = scan_minor(cfg)
    for x, value in max_ratio_by_x(records).items():
        click.echo(f"x={x}: max ratio over sampled alpha {value:.6g}", err=True)
    emit(records, opts.fmt, opts.out)


@main.command("scan-major")
@_scan_options
@click.option("--q-max", default=None, type=int, help="Largest q of the a/q grid")
@click.pass_obj
def scan_major_command(opts: Options, config, k, theta, rho, xs, P_exp, samples, alphas, timing, q_max):
    """Major-arc alpha against x^(theta-rho) + x^theta Xi(alpha)^(-1/2)."""
    overrides = _scan_overrides(k, theta, rho, xs, P_exp, samples, alphas, timing)
    cfg = _scan_config(opts, config, q_max=q_max, **overrides)
    emit(scan_major(cfg), opts.fmt, opts.out)


if __name__ == "__main__":
    main()
