"""Acceptance criteria, each at its stated tolerance, one PASS/FAIL line apiece.

Seeds are fixed up front (master seed 12345 plus a label per criterion) and
never tuned.  Run directly with ``python tests/test_acceptance.py`` or as
part of ``pytest``; the lines also appear in the terminal summary.
"""

import csv
import io
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from lpball.analytic import moment_Mp, sigma2, variance_v, variance_w
from lpball.bounds import CENTERED_EXPONENTIAL, CENTERED_GAUSSIAN, gaussish_check, gaussish_tail_bound
from lpball.cli import main
from lpball.experiments import ConvergenceRow, envelope_check, fit_rate
from lpball.ks import (
    EmpiricalCDF,
    gaussian_l1,
    ks_gaussian_bound_lipschitz,
    ks_gaussian_bound_quarter,
    ks_gaussian_exact,
    ks_two_sample,
    std_normal_cdf,
)
from lpball.models import ModelSpec, WSpec
from lpball.rng import RngStream
from lpball.samplers import sample_p_gaussian, sample_projnorm_direct, sample_projnorm_identity_fixed, sample_yn

SEED = 12345
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def stream(*label):
    return RngStream(SEED).substream(*label)


# --- 1. analytic identities ---------------------------------------------------


def test_c1_analytic_identities(record):
    started = time.perf_counter()
    worst = 0.0
    for p in (1.0, 1.5, 2.0, 2.5, 3.0, 4.0):
        worst = max(worst, abs(moment_Mp(p, p) - 1.0), abs(float(sigma2(p, p))))
    gauss = max(abs(moment_Mp(2.0, 2.0) - 1.0), abs(moment_Mp(2.0, 4.0) - 3.0))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-10 and gauss <= 1e-12 and elapsed < 1.0
    record("C1 analytic identities", ok, f"max err {worst:.1e} (tol 1e-10), M_2 err {gauss:.1e} (tol 1e-12), {elapsed:.3f} s")


# --- 2. sampler moments -------------------------------------------------------


def test_c2_sampler_moments(record):
    started = time.perf_counter()
    worst, where = 0.0, None
    for p in (1.0, 2.0, 3.0):
        z = np.abs(sample_p_gaussian(p, 1_000_000, stream("c2", p)))
        for r in sorted({1.0, 2.0, p, 2 * p}):
            v = z**r
            gap = abs(v.mean() - moment_Mp(p, r)) / (v.std(ddof=1) / math.sqrt(v.size))
            if gap > worst:
                worst, where = gap, (p, r)
    elapsed = time.perf_counter() - started
    ok = worst <= 5.0 and elapsed < 30.0
    record("C2 sampler moments", ok, f"worst gap {worst:.2f} SE at (p, r) = {where} (tol 5), {elapsed:.1f} s")


# --- 3. projection representation ---------------------------------------------


def test_c3_projection_representation(record):
    m = 100_000
    threshold = 1.63 * math.sqrt(2.0 / m)
    results = []
    for n, k in ((32, 8), (64, 16), (128, 32)):
        for p in (1.0, 3.0):
            for w_name in ("cone", "uniform"):
                w = WSpec.cone() if w_name == "cone" else WSpec.uniform(p)
                spec = ModelSpec(p=p, n=n, mode="grassmann_fixed", k=k, w=w)
                a = sample_projnorm_identity_fixed(spec, stream("c3", n, k, p, w_name, "identity"), size=m)
                b = sample_projnorm_direct(spec, stream("c3", n, k, p, w_name, "direct"), size=m)
                results.append(((n, k, p, w_name), ks_two_sample(EmpiricalCDF.build(a), EmpiricalCDF.build(b))))
    worst_case, worst = max(results, key=lambda item: item[1])
    record(
        "C3 projection representation",
        worst < threshold,
        f"worst two-sample KS {worst:.5f} at {worst_case} over {len(results)} cases (threshold {threshold:.5f})",
    )


# --- 4. Gaussian KS geometry ----------------------------------------------------


def test_c4_gaussian_ks_geometry(record):
    started = time.perf_counter()
    grid = np.linspace(0.0, 8.0, 8_000_001)
    oracle = float(np.max(std_normal_cdf(grid) - std_normal_cdf(grid / 2.0)))
    exact = ks_gaussian_exact(1.0, 2.0)
    grid_err = abs(exact - oracle)
    ratios = np.linspace(1.001, 4.0, 600)
    margins = [
        min(ks_gaussian_bound_quarter(1.0, t), ks_gaussian_bound_lipschitz(1.0, t)) - ks_gaussian_exact(1.0, t)
        for t in ratios
    ]
    l1_err = max(abs(ks_gaussian_exact(1.0, t) - 0.25 * gaussian_l1(1.0, t)) for t in ratios[::20])
    elapsed = time.perf_counter() - started
    ok = grid_err <= 1e-8 and min(margins) >= 0.0 and l1_err <= 1e-8 and elapsed < 10.0
    record(
        "C4 gaussian KS geometry",
        ok,
        f"|exact - grid| {grid_err:.1e} (tol 1e-8), min bound margin {min(margins):.2e}, "
        f"quarter-L1 err {l1_err:.1e} (tol 1e-8), {elapsed:.1f} s",
    )


# --- 5. limit variances -------------------------------------------------------


def _var_se(y):
    var = float(np.var(y, ddof=1))
    return var, math.sqrt(max(float(np.mean((y - y.mean()) ** 4)) - var**2, 0.0) / y.size)


def test_c5_limit_variances(record):
    n, m, p = 4096, 100_000, 1.0
    w = WSpec.uniform(p)
    cases = {
        "fixed 0.25": (ModelSpec(p=p, n=n, mode="grassmann_fixed", k=math.ceil(0.25 * n), w=w), variance_v(0.25, p)),
        "fixed 0.5": (ModelSpec(p=p, n=n, mode="grassmann_fixed", k=math.ceil(0.5 * n), w=w), variance_v(0.5, p)),
        "fixed 1": (ModelSpec(p=p, n=n, mode="grassmann_fixed", k=n, w=w), variance_v(1.0, p)),
        "random 0.25": (ModelSpec(p=p, n=n, mode="grassmann_random", lam=0.25, w=w), variance_w(0.25, p)),
        "random 0.5": (ModelSpec(p=p, n=n, mode="grassmann_random", lam=0.5, w=w), variance_w(0.5, p)),
        "q_norm 1,2": (ModelSpec(p=p, n=n, mode="q_norm", q=2.0, w=w), sigma2(1.0, 2.0)),
    }
    stats = {}
    parts = []
    ok = True
    for label, (spec, target) in cases.items():
        var, se = _var_se(sample_yn(spec, m, stream("c5", label)).values)
        stats[label] = (var, se)
        z = (var - target) / se
        ok &= abs(z) <= 5.0
        parts.append(f"{label}: {var:.4f} vs {float(target):.4f} ({z:+.2f} SE)")
    (vb, sb), (va, sa) = stats["random 0.5"], stats["fixed 0.5"]
    gap_z = (vb - va - 0.125) / math.hypot(sa, sb)
    ok &= abs(gap_z) <= 5.0
    parts.append(f"gap at 0.5: {vb - va:.4f} vs 0.125 ({gap_z:+.2f} SE)")
    record("C5 limit variances", ok, "; ".join(parts))


# --- 6 and 8. convergence runs --------------------------------------------------


def _run_cli(config: str, workers: int) -> str:
    out = io.StringIO()
    code = main(["convergence", "--config", str(CONFIGS / config), "--no-timing", "--workers", str(workers)], out, io.StringIO())
    assert code == 0
    return out.getvalue()


def _rows(text: str) -> list[ConvergenceRow]:
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = []
    for rec in csv.DictReader(body):
        k = float(rec["k_or_lambda"]) if rec["k_or_lambda"] else None
        rows.append(
            ConvergenceRow(
                int(rec["n"]), k, int(rec["m"]), float(rec["ks"]), float(rec["dkw"]),
                float(rec["target_var"]), float(rec["bound_shape"]), float(rec["wall_ms"]) / 1e3,
            )
        )
    return rows


@pytest.fixture(scope="module")
def q_norm_runs():
    return _run_cli("thm_c_q_norm.json", 1), _run_cli("thm_c_q_norm.json", 8)


def _ks_line(rows):
    return ", ".join(f"{r.n}:{r.ks_statistic:.4f}" for r in rows)


def test_c6i_q_norm_rate(q_norm_runs, record):
    rows = _rows(q_norm_runs[0])
    fit = fit_rate(rows)
    ok = fit.slope <= -0.35 and fit.r_squared >= 0.9
    record(
        "C6(i) q_norm rate",
        ok,
        f"slope {fit.slope:.3f} (need <= -0.35), r^2 {fit.r_squared:.3f} (need >= 0.9), "
        f"{fit.used} rows used; ks {_ks_line(rows)}",
    )


def _envelope_criterion(label, config, record):
    rows = _rows(_run_cli(config, 1))
    env = envelope_check(rows)
    fit = fit_rate(rows)
    decreasing = rows[-1].ks_statistic < rows[0].ks_statistic and fit.slope < 0.0
    ok = decreasing and env.passes and math.isfinite(env.fitted_C)
    record(
        label,
        ok,
        f"ks {_ks_line(rows)}; dkw {rows[0].dkw_radius:.4f}; slope {fit.slope:.3f}; "
        f"fitted C {env.fitted_C:.4f}, upper-half spread {env.upper_spread:.3f} (need <= 2)",
    )


def test_c6ii_fixed_sqrt_k_envelope(record):
    _envelope_criterion("C6(ii) fixed k = ceil(sqrt n) envelope", "thm_a_sqrt_k.json", record)


def test_c6iii_random_half_envelope(record):
    _envelope_criterion("C6(iii) random lambda_n = 0.5 envelope", "thm_b_random_half.json", record)


# --- 7. tails of normalised sums ------------------------------------------------


def test_c7_gaussish_tail(record):
    bound_const = gaussish_tail_bound()
    results = []
    for summand in (CENTERED_EXPONENTIAL, CENTERED_GAUSSIAN):
        for m in (1_000, 10_000):
            results.append(gaussish_check(summand, m, 100_000, stream("c7", summand.name, m)))
    ok = abs(bound_const - 3.1166) < 1e-12 and all(r.passes for r in results)
    detail = "; ".join(f"{r.summand} m={r.m}: {r.empirical:.5f} <= {r.bound:.5f}" for r in results)
    record("C7 gaussish tail bound", ok, f"C* = {bound_const:.4f}; {detail}")


# --- 8. determinism -------------------------------------------------------------


def test_c8_determinism(q_norm_runs, record):
    one, eight = q_norm_runs
    header = one.splitlines()[0]
    ok = one.encode() == eight.encode() and json.loads(header.removeprefix("# config: "))["seed"] == SEED
    record("C8 determinism", ok, f"1 vs 8 workers: {len(one.encode())} bytes, identical={one == eight}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
