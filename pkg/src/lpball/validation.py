"""Self-checks run by ``lpball validate``: oracle equivalences and bound dominations."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import analytic, kernels
from .experiments import ExperimentConfig, KRule
from .ks import (
    EmpiricalCDF,
    gaussian_l1,
    ks_gaussian_bound_lipschitz,
    ks_gaussian_bound_quarter,
    ks_gaussian_exact,
    ks_two_sample,
    std_normal_cdf,
    two_sample_threshold,
)
from .models import ModelSpec, WSpec
from .rng import RngStream
from .samplers import (
    sample_p_gaussian,
    sample_projnorm_direct,
    sample_projnorm_identity_fixed,
    sample_yn,
)

MomentFn = Callable[[float, float], float]
SUITE_SEED = 20240917


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _moment_quadrature(p: float, r: float) -> float:
    def density(s: float, power: float) -> float:
        return s**power * math.exp(-(s**p) / p)

    num, _ = integrate.quad(density, 0.0, np.inf, args=(r,), epsabs=0.0, epsrel=1e-13, limit=200)
    den, _ = integrate.quad(density, 0.0, np.inf, args=(0.0,), epsabs=0.0, epsrel=1e-13, limit=200)
    return num / den


def _sigma2_from(moment: MomentFn, p: float, q: float) -> float:
    mq = moment(p, q)
    return (
        (moment(p, 2 * q) / (mq * mq) - 1.0) / (q * q)
        - 2.0 / (p * q) * (moment(p, p + q) / mq - 1.0)
        + (moment(p, 2 * p) - 1.0) / (p * p)
    )


def check_identities(moment: MomentFn) -> tuple[bool, str]:
    worst = 0.0
    for p in (1.0, 1.5, 2.0, 2.5, 3.0, 4.0):
        worst = max(worst, abs(moment(p, p) - 1.0), abs(_sigma2_from(moment, p, p)))
    worst2 = max(abs(moment(2.0, 2.0) - 1.0), abs(moment(2.0, 4.0) - 3.0))
    ok = worst <= 1e-10 and worst2 <= 1e-12
    return ok, f"M_p(p) and sigma2(p,p) error {worst:.2e}; Gaussian moments error {worst2:.2e}"


def check_moment_quadrature(moment: MomentFn) -> tuple[bool, str]:
    worst = 0.0
    for p in (1.0, 1.5, 2.0, 3.0, 4.0):
        for r in (0.5, 1.0, 2.0, p, 2 * p, 3.0):
            exact = _moment_quadrature(p, r)
            worst = max(worst, abs(moment(p, r) - exact) / exact)
    return worst <= 1e-9, f"max relative gap to quadrature {worst:.2e}"


def check_limit_variances() -> tuple[bool, str]:
    bad = []
    for p in (1.0, 1.5, 2.0, 3.0, 4.0):
        for q in (0.5, 1.0, 2.0, 3.0, 5.0):
            cross = analytic.covariance_abs_powers(p, p, q)
            var_p = analytic.covariance_abs_powers(p, p, p)
            var_q = analytic.covariance_abs_powers(p, q, q)
            if abs(cross) > math.sqrt(var_p * var_q) * (1 + 1e-12):
                bad.append(("cauchy-schwarz", p, q))
            if analytic.sigma2(p, q) < 0.0:
                bad.append(("sigma2 >= 0", p, q))
        for s in (0.0, 0.25, 0.5, 1.0):
            if analytic.variance_w(s, p) < analytic.variance_v(s, p):
                bad.append(("w >= v", p, s))
    return not bad, "ok" if not bad else f"violations: {bad[:3]}"


def check_gaussian_ks() -> tuple[bool, str]:
    grid = np.linspace(0.0, 6.0, 2_000_001)
    oracle = float(np.max(std_normal_cdf(grid) - std_normal_cdf(grid / 2.0)))
    exact = ks_gaussian_exact(1.0, 2.0)
    problems = []
    if abs(exact - oracle) > 1e-8:
        problems.append(f"exact {exact} vs grid {oracle}")
    for ratio in np.linspace(1.001, 4.0, 400):
        value = ks_gaussian_exact(1.0, ratio)
        if ks_gaussian_bound_quarter(1.0, ratio) < value or ks_gaussian_bound_lipschitz(1.0, ratio) < value:
            problems.append(f"bound below exact at ratio {ratio:.4f}")
            break
        if ratio < 1.2 or abs(ratio - round(ratio)) < 1e-3:
            if abs(value - 0.25 * gaussian_l1(1.0, ratio)) > 1e-8:
                problems.append(f"quarter-L1 identity off at ratio {ratio:.4f}")
                break
    return not problems, "; ".join(problems) or f"d_KS(1,2) = {exact:.10f}"


def check_backends() -> tuple[bool, str]:
    backends = kernels.available_backends()
    if len(backends) < 2:
        return True, f"only {', '.join(backends)} backend available; nothing to compare"
    gen = np.random.default_rng(7)
    g = gen.standard_gamma(0.5, size=(64, 300))
    x = np.sort(gen.standard_normal(5000))
    y = np.sort(gen.standard_normal(3000) * 1.1)
    (a, b) = backends.values()
    gaps = [
        float(np.max(np.abs(a.power_sums(g, 2.0, 3.0) - b.power_sums(g, 2.0, 3.0)) / 300.0)),
        abs(a.ks_sorted_gaussian(x, 1.3) - b.ks_sorted_gaussian(x, 1.3)),
        abs(a.ks_two_sorted(x, y) - b.ks_two_sorted(x, y)),
    ]
    return max(gaps) <= 1e-12, f"max backend gap {max(gaps):.2e}"


def check_sampler_moments(draws: int) -> tuple[bool, str]:
    worst = 0.0
    for p in (1.0, 2.0, 3.0):
        z = np.abs(sample_p_gaussian(p, draws, RngStream(SUITE_SEED, int(p))))
        for r in (1.0, 2.0, p, 2 * p):
            v = z**r
            worst = max(worst, abs(v.mean() - analytic.moment_Mp(p, r)) / (v.std() / math.sqrt(draws)))
    return worst <= 5.0, f"worst standardised gap {worst:.2f} SE over {draws} draws"


def check_representation(cases: list[tuple[int, int, float, str]], m: int) -> tuple[bool, str]:
    worst = 0.0
    threshold = two_sample_threshold(m, m)
    for n, k, p, w in cases:
        spec = ModelSpec(p=p, n=n, mode="grassmann_fixed", k=k, w=WSpec.cone() if w == "cone" else WSpec.uniform(p))
        a = sample_projnorm_identity_fixed(spec, RngStream(SUITE_SEED).substream(n, k, p, w, "identity"), size=m)
        b = sample_projnorm_direct(spec, RngStream(SUITE_SEED).substream(n, k, p, w, "direct"), size=m)
        worst = max(worst, ks_two_sample(EmpiricalCDF.build(a), EmpiricalCDF.build(b)))
    return worst < threshold, f"worst two-sample KS {worst:.5f} vs threshold {threshold:.5f}"


def check_yn_variance(n: int, m: int) -> tuple[bool, str]:
    cases = [
        (ModelSpec(p=1.0, n=n, mode="grassmann_fixed", k=n // 4, w=WSpec.uniform(1.0)), analytic.variance_v(0.25, 1.0)),
        (ModelSpec(p=1.0, n=n, mode="grassmann_random", lam=0.5, w=WSpec.uniform(1.0)), analytic.variance_w(0.5, 1.0)),
        (ModelSpec(p=1.0, n=n, mode="q_norm", q=2.0, w=WSpec.uniform(1.0)), analytic.sigma2(1.0, 2.0)),
    ]
    worst = 0.0
    for i, (spec, target) in enumerate(cases):
        y = sample_yn(spec, m, RngStream(SUITE_SEED).substream("variance", i)).values
        var = float(np.var(y, ddof=1))
        fourth = float(np.mean((y - y.mean()) ** 4))
        se = math.sqrt(max(fourth - var**2, 0.0) / m)
        worst = max(worst, abs(var - target) / se)
    return worst <= 5.0, f"worst variance gap {worst:.2f} SE at n={n}, m={m}"


def check_determinism() -> tuple[bool, str]:
    spec = ModelSpec(p=1.5, n=200, mode="grassmann_random", lam=0.3, w=WSpec.uniform(1.5))
    one = sample_yn(spec, 5000, RngStream(SUITE_SEED, 3), block_size=256, workers=1).values
    many = sample_yn(spec, 5000, RngStream(SUITE_SEED, 3), block_size=256, workers=4).values
    return bool(np.array_equal(one, many)), "1 vs 4 workers bit-identical" if np.array_equal(one, many) else "outputs differ"


def check_target_column() -> tuple[bool, str]:
    cfg = ExperimentConfig(
        "validate", "grassmann_fixed", 1.5, (64, 128), WSpec.cone(), k_rule=KRule("fixed_ratio", lam=0.25), replicates=1000
    )
    got = cfg.target_variance()
    want = float(analytic.variance_v(0.25, 1.5))
    return got == want, f"target {got} vs analytic {want}"


def check_sigma2_closed_form(moment: MomentFn) -> tuple[bool, str]:
    # at p = 1 the moments are factorials and sigma^2(1, 2) = 1/4 exactly
    value = _sigma2_from(moment, 1.0, 2.0)
    return abs(value - 0.25) <= 1e-12, f"sigma2(1,2) from moments = {value:.15f}"


def run_suite(quick: bool = False, corrupt: bool = False) -> list[CheckResult]:
    """Run every check; ``corrupt`` perturbs M_p by one part in 10^6 to prove the suite can fail."""

    def moment(p: float, r: float) -> float:
        value = analytic.moment_Mp(p, r)
        return value * (1.0 + 1e-6) if corrupt else value

    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("analytic identities", lambda: check_identities(moment)),
        ("moments vs quadrature", lambda: check_moment_quadrature(moment)),
        ("limit variance closed form", lambda: check_sigma2_closed_form(moment)),
        ("covariance and variance inequalities", check_limit_variances),
        ("gaussian KS geometry", check_gaussian_ks),
        ("backend agreement", check_backends),
        ("target variance column", check_target_column),
        ("parallel determinism", check_determinism),
        ("sampler moments", lambda: check_sampler_moments(200_000 if quick else 1_000_000)),
    ]
    if quick:
        checks += [
            ("projection representation", lambda: check_representation([(32, 8, 1.0, "cone")], 20_000)),
            ("Y_n limit variance", lambda: check_yn_variance(256, 20_000)),
        ]
    else:
        cases = [(n, k, p, w) for (n, k) in ((32, 8), (64, 16)) for p in (1.0, 3.0) for w in ("cone", "uniform")]
        checks += [
            ("projection representation", lambda: check_representation(cases, 50_000)),
            ("Y_n limit variance", lambda: check_yn_variance(1024, 50_000)),
        ]
    results = []
    for name, fn in checks:
        started = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - started))
    return results
