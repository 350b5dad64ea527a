"""``lpball`` command line: constants, ks-exact, simulate, convergence, validate.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical or
validation failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Sequence, TextIO

from . import analytic, kernels
from .bounds import K_BE
from .config import SimulateConfig, load_json, parse_convergence, parse_seed, parse_simulate
from .errors import ConfigError, DomainError, HypothesisError, NumericalError
from .experiments import fit_summary, rows_to_csv, rows_to_json, run_convergence, write_plot_data
from .ks import gaussian_crossing, ks_gaussian_bound_lipschitz, ks_gaussian_bound_quarter, ks_gaussian_exact, tv_gaussian
from .rng import RngStream, derive_stream_id
from .samplers import sample_yn
from .validation import run_suite

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2
SEED_ENV = "LPBALL_SEED"
CONSTANTS_NOTE = "user-supplied (default 1)"

log = logging.getLogger("lpball")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    return "0" if abs(x) < 5e-13 else f"{x:.12g}"


# --- pure report builders ----------------------------------------------------


def cmd_constants(p: float, q: float = 2.0, lam: float = 0.0, experimental: bool = False) -> str:
    """Moments, limit variances and variance floors at ``(p, q, lambda)``."""
    p = analytic.validate_p(p, experimental)
    if not q > 0.0:
        raise DomainError(f"q must be > 0, got {q}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    lines = [f"p = {p:g}, q = {q:g}, lambda = {lam:g}"]
    labels = {}
    for r, role in ((1.0, "1"), (2.0, "2"), (q, "q"), (p, "p"), (2 * p, "2p"), (2 * q, "2q"), (p + q, "p+q")):
        labels.setdefault(r, []).append(role)
    for r, roles in labels.items():
        value = analytic.moment_Mp(p, r, experimental)
        lines.append(f"M_{p:g}({r:g}) = {_num(value)}    [r = {', '.join(roles)}]")
    lines += [
        f"sigma2(p, q) = {_num(analytic.sigma2(p, q, experimental))}",
        f"sigma2(p, 2) = {_num(analytic.sigma2(p, 2.0, experimental))}",
        f"v(lambda) = {_num(analytic.variance_v(lam, p, experimental))}",
        f"w(lambda) = {_num(analytic.variance_w(lam, p, experimental))}",
        f"J_p (fixed dimension) = {_num(analytic.j_floor(p, 'grassmann', experimental))}",
        f"J_p (random dimension) = {_num(analytic.j_floor(p, 'random_dim', experimental))}",
        f"theorem constants c, C: {CONSTANTS_NOTE}",
        f"K_BE = {K_BE:g}",
    ]
    return "\n".join(lines) + "\n"


def cmd_ks_exact(sigma: float, tau: float) -> str:
    """KS distance between N(0, sigma^2) and N(0, tau^2) with both upper bounds."""
    exact = ks_gaussian_exact(sigma, tau)
    lines = [f"sigma = {sigma:g}, tau = {tau:g}", f"d_KS exact = {exact:.12g}"]
    if sigma == tau:
        lines += ["quarter bound = 0", "lipschitz bound = 0", "crossing point = n/a", "total variation = 0"]
        return "\n".join(lines) + "\n"
    lo, hi = min(sigma, tau), max(sigma, tau)
    lines.append(f"quarter bound = {ks_gaussian_bound_quarter(lo, hi):.12g}")
    try:
        lines.append(f"lipschitz bound = {ks_gaussian_bound_lipschitz(sigma, tau):.12g}")
    except HypothesisError:
        lines.append("lipschitz bound = n/a (requires tau/sigma > 1/2)")
    lines.append(f"crossing point = {gaussian_crossing(sigma, tau):.12g}")
    lines.append(f"total variation = {tv_gaussian(sigma, tau):.12g}")
    return "\n".join(lines) + "\n"


def simulate_output(config: SimulateConfig, seed: int, fmt: str, workers: int = 1) -> str:
    rng = RngStream(seed, derive_stream_id(config.experiment_id))
    batch = sample_yn(config.model, config.replicates, rng, config.block_size, workers)
    meta = {"config": config.to_dict(seed), "master_seed": seed, **batch.metadata(), "backend": batch.backend}
    if fmt == "json":
        return json.dumps({**meta, "values": batch.values.tolist()}, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    buf.write(f"# master_seed: {seed}\n# stream_id: {rng.stream_id}\n")
    buf.write("replicate,y\n")
    for i, y in enumerate(batch.values.tolist()):
        buf.write(f"{i},{y!r}\n")
    return buf.getvalue()


# --- argument handling -------------------------------------------------------


def _resolve_seed(cli_seed: str | None, config_seed: int | None) -> int:
    """``--seed`` beats the config file, which beats ``LPBALL_SEED``; default 0."""
    if cli_seed is not None:
        return parse_seed(cli_seed, "--seed")
    if config_seed is not None:
        return config_seed
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        return parse_seed(env, SEED_ENV)
    return 0


def _emit(text: str, out: str | None, stdout: TextIO) -> None:
    if out is None:
        stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpball", description="Projections of random points in l_p balls: CLT diagnostics.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="print moments, limit variances and variance floors")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--q", type=float, default=2.0)
    c.add_argument("--lambda", dest="lam", type=float, default=0.0)
    c.add_argument("--experimental", action="store_true", help="allow 0 < p < 1")

    k = sub.add_parser("ks-exact", help="KS distance between two centred Gaussians with bounds")
    k.add_argument("--sigma", type=float, required=True)
    k.add_argument("--tau", type=float, required=True)

    run_common = _Parser(add_help=False)
    run_common.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
    run_common.add_argument("--seed", metavar="U64", help=f"master seed (overrides config and {SEED_ENV})")
    run_common.add_argument("--replicates", type=_positive_int, metavar="N")
    run_common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    run_common.add_argument("--format", choices=("csv", "json"), default="csv")
    run_common.add_argument("--workers", type=_positive_int, default=1, metavar="N")

    sub.add_parser("simulate", parents=[run_common], help="draw Y_n replicates for one model")
    conv = sub.add_parser("convergence", parents=[run_common], help="KS of Y_n against its Gaussian limit over n")
    conv.add_argument("--plot-data", metavar="PATH", help="also write (ln n, ln ks) columns")
    conv.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-stable output")

    val = sub.add_parser("validate", help="run the invariant suite")
    val.add_argument("--quick", action="store_true", help="sub-minute subset")
    val.add_argument("--corrupt-constant", action="store_true", help=argparse.SUPPRESS)
    return parser


def _run_simulate(args, stdout: TextIO) -> int:
    config = parse_simulate(load_json(args.config))
    if args.replicates is not None:
        config = SimulateConfig(config.model, args.replicates, config.master_seed, config.experiment_id, config.block_size)
    seed = _resolve_seed(args.seed, config.master_seed)
    _emit(simulate_output(config, seed, args.format, args.workers), args.out, stdout)
    return EXIT_OK


def _run_convergence(args, stdout: TextIO, stderr: TextIO) -> int:
    config, seeded = parse_convergence(load_json(args.config))
    seed = _resolve_seed(args.seed, config.master_seed if seeded else None)
    changes = {"master_seed": seed}
    if args.replicates is not None:
        changes["replicates"] = args.replicates
    try:
        config = replace(config, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = run_convergence(config, workers=args.workers)
    summary = fit_summary(rows, config.constants)
    timing = not args.no_timing
    if args.format == "json":
        text = rows_to_json(rows, config, timing, extra=summary)
    else:
        text = rows_to_csv(rows, config, timing)
    _emit(text, args.out, stdout)
    if args.plot_data:
        with open(args.plot_data, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# experiment: {config.experiment_id}\n# master_seed: {seed}\n")
            write_plot_data(rows, fh)
    report = stderr if args.out is None else stdout
    report.write(f"constants: {config.constants.describe()}\n")
    fit = summary["rate_fit"]
    if "error" in fit:
        report.write(f"rate fit: {fit['error']}\n")
    else:
        report.write(f"rate fit: slope {fit['slope']:.4f}, r^2 {fit['r_squared']:.4f}, used {fit['used']} rows\n")
    env = summary["envelope"]
    report.write(f"envelope: fitted C {env['fitted_C']}, upper-half spread {env['upper_spread']}, passes {env['passes']}\n")
    failed = [r for r in rows if r.error]
    for r in failed:
        stderr.write(f"row n={r.n} failed: {r.error}\n")
    return EXIT_FAILURE if failed else EXIT_OK


def _run_validate(args, stdout: TextIO) -> int:
    results = run_suite(quick=args.quick, corrupt=args.corrupt_constant)
    stdout.write(f"backend: {kernels.BACKEND}\n")
    for r in results:
        stdout.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} ({r.seconds:.2f} s)\n")
    failures = sum(not r.passed for r in results)
    stdout.write(f"{len(results) - failures}/{len(results)} checks passed\n")
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s", stream=stderr
    )
    try:
        if args.command == "constants":
            stdout.write(cmd_constants(args.p, args.q, args.lam, args.experimental))
        elif args.command == "ks-exact":
            stdout.write(cmd_ks_exact(args.sigma, args.tau))
        elif args.command == "simulate":
            return _run_simulate(args, stdout)
        elif args.command == "convergence":
            return _run_convergence(args, stdout, stderr)
        else:
            return _run_validate(args, stdout)
    except (ConfigError, DomainError, HypothesisError) as exc:
        stderr.write(f"lpball: error: {exc}\n")
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        stderr.write(f"lpball: numerical failure: {exc}\n")
        return EXIT_FAILURE
    except OSError as exc:
        stderr.write(f"lpball: error: {exc}\n")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
