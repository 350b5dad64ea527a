"""Convergence studies: sweep n, measure d_KS(Y_n, G), compare with the theorem shapes."""

from __future__ import annotations

import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from .analytic import sigma2, variance_v, variance_w
from .bounds import BoundConstants, thm_a_bound_shape, thm_b_bound_shape, thm_c_bound_shape
from .errors import ConfigError
from .ks import DEFAULT_ALPHA, EmpiricalCDF, ks_one_sample_gaussian
from .models import MODES, ModelSpec, WSpec
from .rng import RngStream, derive_stream_id
from .samplers import DEFAULT_BLOCK, sample_yn

log = logging.getLogger(__name__)

CSV_HEADER = ("n", "k_or_lambda", "m", "ks", "dkw", "target_var", "bound_shape", "wall_ms")
MIN_REPLICATES = 1000


@dataclass(frozen=True)
class KRule:
    """How the subspace dimension k_n follows n in ``grassmann_fixed`` runs."""

    kind: str
    lam: float | None = None
    a: float | None = None
    ks: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed_ratio":
            if self.lam is None or not 0.0 < self.lam <= 1.0:
                raise ConfigError(f"fixed_ratio needs 0 < lambda <= 1, got {self.lam!r}")
        elif self.kind == "power":
            if self.a is None or not 0.0 < self.a <= 1.0:
                raise ConfigError(f"power rule exponent must lie in (0, 1], got {self.a!r}")
        elif self.kind == "explicit":
            if not self.ks:
                raise ConfigError("explicit k rule needs a nonempty list")
        else:
            raise ConfigError(f"unknown k rule {self.kind!r}")

    def k_for(self, n: int, index: int) -> int:
        if self.kind == "fixed_ratio":
            k = math.ceil(self.lam * n - 1e-9)
        elif self.kind == "power":
            k = math.ceil(n**self.a - 1e-9)
        else:
            k = self.ks[index]
        return min(max(int(k), 1), n)

    def limit(self) -> float | None:
        """Limit of k_n / n implied by the rule, if it has one."""
        if self.kind == "fixed_ratio":
            return self.lam
        if self.kind == "power":
            return 1.0 if self.a == 1.0 else 0.0
        return None

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "fixed_ratio":
            return {"kind": self.kind, "lambda": self.lam}
        if self.kind == "power":
            return {"kind": self.kind, "a": self.a}
        return {"kind": self.kind, "k": list(self.ks)}


@dataclass(frozen=True)
class ExperimentConfig:
    """A sweep over ``n_grid`` of one model family.

    ``lambda_n`` is the inclusion probability of ``grassmann_random`` runs;
    ``limit_lambda`` is the limit of k_n/n (or of lambda_n) that fixes the
    target Gaussian and defaults to what the rule implies.
    """

    experiment_id: str
    mode: str
    p: float
    n_grid: tuple[int, ...]
    w: WSpec
    q: float | None = None
    k_rule: KRule | None = None
    lambda_n: float | None = None
    limit_lambda: float | None = None
    replicates: int = 100_000
    master_seed: int = 0
    constants: BoundConstants = field(default_factory=BoundConstants)
    alpha: float = DEFAULT_ALPHA
    block_size: int = DEFAULT_BLOCK
    experimental: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n_grid must be strictly ascending positive integers, got {self.n_grid!r}")
        object.__setattr__(self, "n_grid", grid)
        if self.replicates < MIN_REPLICATES:
            raise ConfigError(f"replicates must be >= {MIN_REPLICATES}, got {self.replicates}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        if self.mode == "grassmann_fixed":
            if self.k_rule is None:
                raise ConfigError("grassmann_fixed needs a k_rule")
            if self.k_rule.kind == "explicit" and len(self.k_rule.ks) != len(grid):
                raise ConfigError("explicit k list must match n_grid in length")
            if self.limit_lambda is None and self.k_rule.limit() is None:
                raise ConfigError("explicit k rule needs limit_lambda")
        elif self.mode == "grassmann_random":
            if self.lambda_n is None or not 0.0 < self.lambda_n <= 1.0:
                raise ConfigError(f"grassmann_random needs 0 < lambda_n <= 1, got {self.lambda_n!r}")
        if self.limit_lambda is not None and not 0.0 <= self.limit_lambda <= 1.0:
            raise ConfigError("limit_lambda must lie in [0, 1]")
        # every cell must be a valid model
        for i, n in enumerate(grid):
            self.model_at(i, n)

    @property
    def lam(self) -> float | None:
        if self.mode == "q_norm":
            return None
        if self.limit_lambda is not None:
            return self.limit_lambda
        if self.mode == "grassmann_fixed":
            return self.k_rule.limit()
        return self.lambda_n

    def model_at(self, index: int, n: int) -> ModelSpec:
        common = dict(p=self.p, n=n, mode=self.mode, w=self.w, experimental=self.experimental)
        if self.mode == "grassmann_fixed":
            return ModelSpec(k=self.k_rule.k_for(n, index), **common)
        if self.mode == "grassmann_random":
            return ModelSpec(lam=self.lambda_n, **common)
        return ModelSpec(q=self.q, **common)

    def target_variance(self) -> float:
        if self.mode == "grassmann_fixed":
            return float(variance_v(self.lam, self.p, self.experimental))
        if self.mode == "grassmann_random":
            return float(variance_w(self.lam, self.p, self.experimental))
        return float(sigma2(self.p, self.q, self.experimental))

    def bound_shape(self, spec: ModelSpec) -> float:
        if self.mode == "grassmann_fixed":
            return thm_a_bound_shape(spec.n, spec.k, self.lam, self.w, self.constants)
        if self.mode == "grassmann_random":
            return thm_b_bound_shape(spec.n, spec.lam, self.lam, self.w, self.constants)
        return thm_c_bound_shape(spec.n, self.w, self.constants)

    def stream_for(self, n: int) -> RngStream:
        return RngStream(self.master_seed, derive_stream_id(self.experiment_id, int(n)))

    def to_dict(self) -> dict[str, Any]:
        model: dict[str, Any] = {"mode": self.mode, "p": self.p, "w": self.w.to_dict()}
        if self.q is not None:
            model["q"] = self.q
        if self.lambda_n is not None:
            model["lambda_n"] = self.lambda_n
        if self.experimental:
            model["experimental"] = True
        out: dict[str, Any] = {
            "experiment_id": self.experiment_id,
            "model": model,
            "n_grid": list(self.n_grid),
        }
        if self.k_rule is not None:
            out["k_rule"] = self.k_rule.to_dict()
        if self.limit_lambda is not None:
            out["limit_lambda"] = self.limit_lambda
        out.update(
            replicates=self.replicates,
            seed=int(self.master_seed),
            constants={"c": self.constants.c, "C": self.constants.C, "kbe": self.constants.kbe},
            alpha=self.alpha,
            block_size=self.block_size,
        )
        return out


@dataclass
class ConvergenceRow:
    n: int
    k_or_lambda: float | None
    m: int
    ks_statistic: float
    dkw_radius: float
    target_variance: float
    bound_shape_value: float
    wall_time: float  # seconds
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.ks_statistic)


def run_convergence(config: ExperimentConfig, workers: int = 1) -> list[ConvergenceRow]:
    """One row per n in the grid; deterministic given ``config.master_seed``.

    A failing row is recorded with NaN statistics and its error message; the
    sweep continues.
    """
    target = config.target_variance()
    rows = []
    for index, n in enumerate(config.n_grid):
        spec = config.model_at(index, n)
        k_or_lambda = spec.k if spec.mode == "grassmann_fixed" else spec.lam
        started = time.perf_counter()
        try:
            batch = sample_yn(spec, config.replicates, config.stream_for(n), config.block_size, workers)
            report = ks_one_sample_gaussian(EmpiricalCDF.build(batch.values), target, config.alpha)
            row = ConvergenceRow(
                n, k_or_lambda, config.replicates, report.statistic, report.dkw_radius, target,
                config.bound_shape(spec), time.perf_counter() - started,
            )
        except Exception as exc:  # noqa: BLE001 - recorded per row, sweep continues
            log.warning("row n=%d failed: %s", n, exc)
            row = ConvergenceRow(
                n, k_or_lambda, config.replicates, math.nan, math.nan, target, math.nan,
                time.perf_counter() - started, error=f"{type(exc).__name__}: {exc}",
            )
        log.info("n=%d ks=%.5f dkw=%.5f", n, row.ks_statistic, row.dkw_radius)
        rows.append(row)
    return rows


# --- rate fitting and envelopes ---------------------------------------------


class InsufficientSignalError(ValueError):
    """Fewer than three rows lie above the Monte Carlo noise floor."""


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    used: int
    excluded: int


def fit_rate(rows: Sequence[ConvergenceRow], x_axis: str = "n") -> RateFit:
    """Least squares of ``ln ks`` on ``ln n`` (or ``ln k_n``) above the noise floor."""
    if x_axis not in ("n", "k_n"):
        raise ValueError("x_axis must be 'n' or 'k_n'")
    usable = [r for r in rows if r.ok and r.ks_statistic > r.dkw_radius]
    if len(usable) < 3:
        raise InsufficientSignalError(
            f"only {len(usable)} of {len(rows)} rows have ks above the DKW radius"
        )
    xs = [r.n if x_axis == "n" else r.k_or_lambda for r in usable]
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray([r.ks_statistic for r in usable]))
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-300 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RateFit(float(slope), float(intercept), r2, len(usable), len(rows) - len(usable))


@dataclass(frozen=True)
class EnvelopeResult:
    passes: bool
    fitted_C: float
    row_constants: tuple[float, ...]
    upper_spread: float


def envelope_check(rows: Sequence[ConvergenceRow], consts: BoundConstants | None = None) -> EnvelopeResult:
    """Smallest C with ``ks <= C * shape + dkw`` on every row, and its stability.

    ``shape`` is each row's bound shape (already scaled by the run's
    constants); passing ``consts`` reports C in absolute terms instead of as
    a multiplier.  The check passes when C is finite and the per-row
    constants ``(ks - dkw)_+ / shape`` over the upper half of the grid are
    positive and within a factor 2 of each other.
    """
    good = [r for r in rows if r.ok and r.bound_shape_value > 0.0]
    if not good:
        return EnvelopeResult(False, math.inf, (), math.inf)
    per_row = tuple(max(r.ks_statistic - r.dkw_radius, 0.0) / r.bound_shape_value for r in good)
    fitted = max(per_row) * (consts.C if consts is not None else 1.0)
    upper = per_row[len(per_row) // 2 :]
    lo, hi = min(upper), max(upper)
    spread = hi / lo if lo > 0.0 else math.inf
    passes = math.isfinite(fitted) and len(good) == len(rows) and spread <= 2.0
    return EnvelopeResult(passes, fitted, per_row, spread)


# --- output -----------------------------------------------------------------


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def rows_to_csv(
    rows: Iterable[ConvergenceRow], config: ExperimentConfig | None = None, timing: bool = True
) -> str:
    """CSV text with ``#`` comment lines echoing config and seed ahead of the fixed header."""
    buf = io.StringIO()
    if config is not None:
        buf.write(f"# config: {json.dumps(config.to_dict(), sort_keys=True)}\n")
        buf.write(f"# master_seed: {int(config.master_seed)}\n")
    buf.write(",".join(CSV_HEADER) + "\n")
    for r in rows:
        wall = f"{r.wall_time * 1e3:.3f}" if timing else "0"
        fields = (r.n, r.k_or_lambda, r.m, r.ks_statistic, r.dkw_radius, r.target_variance, r.bound_shape_value)
        buf.write(",".join(_fmt(v) for v in fields) + f",{wall}\n")
    return buf.getvalue()


def rows_to_json(
    rows: Sequence[ConvergenceRow],
    config: ExperimentConfig | None = None,
    timing: bool = True,
    extra: dict[str, Any] | None = None,
) -> str:
    out: dict[str, Any] = {}
    if config is not None:
        out["config"] = config.to_dict()
        out["master_seed"] = int(config.master_seed)
        out["constants_note"] = config.constants.describe()
    records = []
    for r in rows:
        rec = {
            "n": r.n,
            "k_or_lambda": r.k_or_lambda,
            "m": r.m,
            "ks": _json_float(r.ks_statistic),
            "dkw": _json_float(r.dkw_radius),
            "target_var": r.target_variance,
            "bound_shape": _json_float(r.bound_shape_value),
            "wall_ms": round(r.wall_time * 1e3, 3) if timing else 0,
        }
        if r.error:
            rec["error"] = r.error
        records.append(rec)
    out["rows"] = records
    if extra:
        out.update(extra)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def _json_float(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def write_plot_data(rows: Iterable[ConvergenceRow], stream: TextIO) -> None:
    """Two whitespace-separated columns ``ln n  ln ks`` for rows with a finite positive ks."""
    stream.write("# ln_n ln_ks\n")
    for r in rows:
        if r.ok and r.ks_statistic > 0.0:
            stream.write(f"{math.log(r.n)!r} {math.log(r.ks_statistic)!r}\n")


def fit_summary(rows: Sequence[ConvergenceRow], consts: BoundConstants | None = None) -> dict[str, Any]:
    """Rate fit and envelope results as a plain dict (fit is None without enough signal)."""
    try:
        fit: dict[str, Any] | None = asdict(fit_rate(rows))
    except InsufficientSignalError as exc:
        fit = {"error": str(exc)}
    env = envelope_check(rows, consts)
    return {
        "rate_fit": fit,
        "envelope": {
            "passes": env.passes,
            "fitted_C": _json_float(env.fitted_C),
            "upper_spread": _json_float(env.upper_spread),
        },
    }
