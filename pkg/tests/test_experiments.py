import io
import math

import numpy as np
import pytest

from lpball import experiments
from lpball.analytic import sigma2, variance_v, variance_w
from lpball.bounds import BoundConstants
from lpball.errors import ConfigError
from lpball.experiments import (
    CSV_HEADER,
    ConvergenceRow,
    ExperimentConfig,
    InsufficientSignalError,
    KRule,
    envelope_check,
    fit_rate,
    rows_to_csv,
    rows_to_json,
    run_convergence,
    write_plot_data,
)
from lpball.ks import EmpiricalCDF, ks_two_sample, two_sample_threshold
from lpball.models import WSpec
from lpball.samplers import sample_yn

GRID = [100, 178, 316, 562, 1000, 1778, 3162, 5623, 10000]


def synthetic(values, ns=GRID, dkw=0.0, shapes=None):
    shapes = shapes or [1.0] * len(ns)
    return [ConvergenceRow(n, None, 1000, v, dkw, 1.0, s, 0.0) for n, v, s in zip(ns, values, shapes)]


def test_fit_exact_power_law():
    fit = fit_rate(synthetic([n**-0.5 for n in GRID]))
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.used == 9 and fit.excluded == 0


def test_fit_log_correction():
    # least squares of ln(log n / sqrt n) on this grid, evaluated with mpmath
    fit = fit_rate(synthetic([math.log(n) / math.sqrt(n) for n in GRID]))
    assert fit.slope == pytest.approx(-0.35103885995645614723, abs=1e-12)
    assert fit.r_squared == pytest.approx(0.9982689962360987203, abs=1e-12)
    assert -0.5 < fit.slope < -0.3


def test_fit_constant_rows():
    fit = fit_rate(synthetic([0.2] * 9))
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= fit.r_squared <= 1.0


def test_fit_excludes_noise_floor():
    rows = synthetic([n**-0.5 for n in GRID], dkw=0.02)
    fit = fit_rate(rows)
    assert fit.excluded == sum(n**-0.5 <= 0.02 for n in GRID)
    assert fit.slope == pytest.approx(-0.5)
    with pytest.raises(InsufficientSignalError):
        fit_rate(synthetic([n**-0.5 for n in GRID], dkw=0.07))


def test_fit_against_k_axis():
    rows = [ConvergenceRow(n, k, 1000, k**-0.5, 0.0, 0.5, 1.0, 0.0) for n, k in [(100, 10), (400, 20), (1600, 40)]]
    assert fit_rate(rows, "k_n").slope == pytest.approx(-0.5)
    assert fit_rate(rows, "n").slope == pytest.approx(-0.25)


def test_envelope_examples():
    shapes = [math.log(n) / math.sqrt(n) for n in GRID]
    exact = envelope_check(synthetic(shapes, shapes=shapes))
    assert exact.passes and exact.fitted_C == pytest.approx(1.0)
    double = envelope_check(synthetic([2 * s for s in shapes], shapes=shapes))
    assert double.passes and double.fitted_C == pytest.approx(2.0)
    scaled = envelope_check(synthetic(shapes, shapes=shapes), BoundConstants(C=3.0))
    assert scaled.fitted_C == pytest.approx(3.0)


def test_envelope_fails_when_ratio_drifts():
    shapes = [n**-0.5 for n in GRID]
    drifting = envelope_check(synthetic([n**-0.1 for n in GRID], shapes=shapes))
    assert not drifting.passes
    floor = envelope_check(synthetic([0.01] * 9, dkw=0.01, shapes=shapes))
    assert not floor.passes


def test_envelope_fails_on_errored_row():
    rows = synthetic([0.1] * 9)
    rows[3] = ConvergenceRow(562, None, 1000, math.nan, math.nan, 1.0, math.nan, 0.0, error="boom")
    assert not envelope_check(rows).passes


def test_k_rules():
    assert KRule("fixed_ratio", lam=0.25).k_for(4096, 0) == 1024
    assert KRule("fixed_ratio", lam=0.3).k_for(10, 0) == 3
    assert KRule("power", a=0.5).k_for(128, 0) == 12
    assert KRule("power", a=0.5).k_for(4096, 0) == 64
    assert KRule("explicit", ks=(3, 5)).k_for(100, 1) == 5
    assert KRule("power", a=0.5).limit() == 0.0
    assert KRule("power", a=1.0).limit() == 1.0
    for bad in (dict(kind="power", a=1.5), dict(kind="power", a=0.0), dict(kind="fixed_ratio", lam=0.0), dict(kind="zzz")):
        with pytest.raises(ConfigError):
            KRule(**bad)


def _config(**changes):
    base = dict(
        experiment_id="unit",
        mode="grassmann_fixed",
        p=1.0,
        n_grid=(64, 128, 256),
        w=WSpec.cone(),
        k_rule=KRule("fixed_ratio", lam=0.25),
        replicates=1000,
        master_seed=99,
    )
    base.update(changes)
    return ExperimentConfig(**base)


def test_config_invariants():
    with pytest.raises(ConfigError):
        _config(n_grid=(128, 64))
    with pytest.raises(ConfigError):
        _config(replicates=999)
    with pytest.raises(ConfigError):
        _config(k_rule=None)
    with pytest.raises(ConfigError):
        _config(mode="grassmann_random", k_rule=None)
    with pytest.raises(ConfigError):
        _config(k_rule=KRule("explicit", ks=(1, 2, 3)))
    with pytest.raises(ConfigError):
        _config(mode="q_norm", q=1.0, k_rule=None)


def test_target_variance_per_mode():
    assert _config().target_variance() == variance_v(0.25, 1.0)
    rnd = _config(mode="grassmann_random", k_rule=None, lambda_n=0.5)
    assert rnd.target_variance() == variance_w(0.5, 1.0)
    qn = _config(mode="q_norm", k_rule=None, q=2.0, p=1.5)
    assert qn.target_variance() == sigma2(1.5, 2.0)
    sub = _config(k_rule=KRule("power", a=0.5))
    assert sub.target_variance() == 0.5


def test_run_convergence_rows_and_determinism():
    cfg = _config()
    rows = run_convergence(cfg)
    again = run_convergence(cfg, workers=3)
    assert [r.n for r in rows] == [64, 128, 256]
    assert [r.k_or_lambda for r in rows] == [16, 32, 64]
    for a, b in zip(rows, again):
        assert (a.ks_statistic, a.dkw_radius, a.bound_shape_value) == (b.ks_statistic, b.dkw_radius, b.bound_shape_value)
        assert 0.0 <= a.ks_statistic <= 1.0
        assert a.target_variance == variance_v(0.25, 1.0)
    assert rows_to_csv(rows, cfg, timing=False) == rows_to_csv(again, cfg, timing=False)


def test_rows_use_independent_streams():
    cfg = _config(n_grid=(64, 65))
    a = sample_yn(cfg.model_at(0, 64), 1000, cfg.stream_for(64)).values
    b = sample_yn(cfg.model_at(1, 65), 1000, cfg.stream_for(65)).values
    assert cfg.stream_for(64) != cfg.stream_for(65)
    assert not np.array_equal(a, b)


def test_failed_row_is_recorded(monkeypatch):
    real = experiments.sample_yn

    def flaky(spec, *args, **kwargs):
        if spec.n == 128:
            raise FloatingPointError("injected")
        return real(spec, *args, **kwargs)

    monkeypatch.setattr(experiments, "sample_yn", flaky)
    rows = run_convergence(_config())
    assert [r.ok for r in rows] == [True, False, True]
    assert "injected" in rows[1].error
    assert math.isnan(rows[1].ks_statistic)


def test_csv_layout():
    cfg = _config()
    rows = run_convergence(cfg)
    text = rows_to_csv(rows, cfg, timing=False)
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "# master_seed: 99"
    assert lines[2] == ",".join(CSV_HEADER) == "n,k_or_lambda,m,ks,dkw,target_var,bound_shape,wall_ms"
    assert all(line.endswith(",0") for line in lines[3:])
    fields = lines[3].split(",")
    assert fields[:3] == ["64", "16", "1000"]
    assert float(fields[3]) == rows[0].ks_statistic


def test_json_and_plot_data():
    import json

    cfg = _config()
    rows = run_convergence(cfg)
    doc = json.loads(rows_to_json(rows, cfg, timing=False))
    assert doc["master_seed"] == 99
    assert doc["config"]["k_rule"] == {"kind": "fixed_ratio", "lambda": 0.25}
    assert [r["n"] for r in doc["rows"]] == [64, 128, 256]
    assert set(doc["rows"][0]) == set(CSV_HEADER)
    buf = io.StringIO()
    write_plot_data(rows, buf)
    data = np.loadtxt(io.StringIO(buf.getvalue()))
    np.testing.assert_allclose(data[:, 0], np.log([64, 128, 256]))
    np.testing.assert_allclose(data[:, 1], np.log([r.ks_statistic for r in rows]))


def test_full_dimension_fixed_matches_q_norm_two():
    # with k = n and uniform W both statistics reduce to the same function of the point
    m = 20_000
    fixed = _config(k_rule=KRule("fixed_ratio", lam=1.0), w=WSpec.uniform(1.0), replicates=m, n_grid=(256,))
    qn = _config(mode="q_norm", q=2.0, k_rule=None, w=WSpec.uniform(1.0), replicates=m, n_grid=(256,), experiment_id="q")
    a = sample_yn(fixed.model_at(0, 256), m, fixed.stream_for(256)).values
    b = sample_yn(qn.model_at(0, 256), m, qn.stream_for(256)).values
    assert ks_two_sample(EmpiricalCDF.build(a), EmpiricalCDF.build(b)) < two_sample_threshold(m, m)
    assert fixed.target_variance() == pytest.approx(qn.target_variance())
