"""Berry-Esseen bound, theorem bound shapes, the Gaussian-ish tail lemma and the
separating inequality.

The theorems only assert that some constants ``c, C`` exist; here they are
user parameters defaulting to 1, and every evaluator returns the *shape* of
the bound at those constants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, HypothesisError
from .ks import EmpiricalCDF, dkw_radius, ks_one_sample_gaussian
from .models import WSpec
from .rng import RngStream, as_generator

K_BE = 0.5583  # sharpest published i.i.d. constant
K_BE_BERRY = 1.88  # the original, looser constant


class SmallDimensionWarning(UserWarning):
    """A bound shape is evaluated where its log term is degenerate (k < 3)."""


@dataclass(frozen=True)
class MomentTriple:
    """Variance and third absolute moment of one centred summand."""

    sigma2: float
    rho: float

    def __post_init__(self) -> None:
        if self.sigma2 < 0.0 or self.rho < 0.0:
            raise DomainError("moments must be nonnegative")
        # Lyapunov: E|X|^3 >= (E X^2)^(3/2)
        if self.rho < self.sigma2**1.5 * (1.0 - 1e-12):
            raise DomainError(f"rho={self.rho} < sigma2^(3/2)={self.sigma2**1.5}")


@dataclass(frozen=True)
class BoundConstants:
    c: float = 1.0
    C: float = 1.0
    kbe: float = K_BE

    def __post_init__(self) -> None:
        for name in ("c", "C", "kbe"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")

    def describe(self) -> str:
        return f"c={self.c:g}, C={self.C:g} (user-supplied, default 1); K_BE={self.kbe:g}"


def berry_esseen_bound(triples: Sequence[MomentTriple], kbe: float = K_BE) -> float:
    """``K_BE * max_i(rho_i / sigma_i^2) / sqrt(sum_i sigma_i^2)``."""
    if len(triples) == 0:
        raise ValueError("need at least one summand")
    if any(t.sigma2 <= 0.0 for t in triples):
        raise DomainError("every summand needs a positive variance")
    first = triples[0]
    if all(t == first for t in triples):
        return kbe * first.rho / (first.sigma2**1.5 * math.sqrt(len(triples)))
    worst = max(t.rho / t.sigma2 for t in triples)
    return kbe * worst / math.sqrt(math.fsum(t.sigma2 for t in triples))


# --- theorem shapes ----------------------------------------------------------


def thm_a_bound_shape(
    n: int, k_n: int, lam: float, w: WSpec, consts: BoundConstants = BoundConstants()
) -> float:
    """``C max{log(k)/sqrt(k), |k/n - lam|, P[W > c n log(k) / k]}``."""
    if not 1 <= k_n <= n:
        raise DomainError(f"requires 1 <= k_n <= n, got k_n={k_n}, n={n}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lam must lie in [0, 1], got {lam}")
    if k_n < 3:
        warnings.warn(f"k_n={k_n} < 3: log term is degenerate", SmallDimensionWarning, stacklevel=2)
    log_term = math.log(k_n) / math.sqrt(k_n)
    tail = w.tail(consts.c * n * math.log(k_n) / k_n)
    return consts.C * max(log_term, abs(k_n / n - lam), tail)


def thm_b_bound_shape(
    n: int, lambda_n: float, lam: float, w: WSpec, consts: BoundConstants = BoundConstants()
) -> float:
    """``C max{log(n)/sqrt(lambda_n n), |lambda_n - lam|, P[W > c log(n) / lambda_n]}``."""
    if not 0.0 < lambda_n <= 1.0:
        raise DomainError(f"lambda_n must lie in (0, 1], got {lambda_n}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lam must lie in [0, 1], got {lam}")
    if n < 1:
        raise DomainError("n must be >= 1")
    log_term = math.log(n) / math.sqrt(lambda_n * n)
    tail = w.tail(consts.c * math.log(n) / lambda_n)
    return consts.C * max(log_term, abs(lambda_n - lam), tail)


def thm_c_bound_shape(n: int, w: WSpec, consts: BoundConstants = BoundConstants()) -> float:
    """``C log(n)/sqrt(n) + P[W > c sqrt(n log n)]``."""
    if n < 2:
        raise DomainError("requires n >= 2")
    return consts.C * math.log(n) / math.sqrt(n) + w.tail(consts.c * math.sqrt(n * math.log(n)))


# --- Gaussian-ish tails of normalised sums ----------------------------------


def gaussish_tail_bound(kbe: float = K_BE) -> float:
    """The constant ``C* = 2 (K_BE + 1)``."""
    return 2.0 * (kbe + 1.0)


@dataclass(frozen=True)
class Summand:
    """A centred summand law with known second and third absolute moments."""

    name: str
    sigma2: float
    rho: float
    draw: Callable[[np.random.Generator, tuple[int, ...]], np.ndarray]

    @property
    def gamma(self) -> float:
        return self.rho / self.sigma2**1.5


CENTERED_EXPONENTIAL = Summand(
    "centered_exponential", 1.0, 12.0 / math.e - 2.0, lambda g, s: g.standard_exponential(s) - 1.0
)
CENTERED_GAUSSIAN = Summand(
    "centered_gaussian", 1.0, 2.0 * math.sqrt(2.0 / math.pi), lambda g, s: g.standard_normal(s)
)
CENTERED_UNIFORM = Summand("centered_uniform", 1.0 / 3.0, 0.25, lambda g, s: g.uniform(-1.0, 1.0, s))
SUMMANDS = {s.name: s for s in (CENTERED_EXPONENTIAL, CENTERED_GAUSSIAN, CENTERED_UNIFORM)}


@dataclass(frozen=True)
class GaussishResult:
    summand: str
    m: int
    beta: float
    alpha: float
    runs: int
    empirical: float
    bound: float

    @property
    def passes(self) -> bool:
        return self.empirical <= self.bound


def gaussish_check(
    summand: Summand,
    m: int,
    runs: int,
    rng: RngStream | np.random.Generator,
    beta: float | None = None,
    alpha: float | None = None,
    sigma_max: float | None = None,
    gamma: float | None = None,
    kbe: float = K_BE,
) -> GaussishResult:
    """Estimate ``P[|S_m| > alpha]`` for ``S_m = m^(-1/2) sum X_i`` and compare with ``C*/sqrt(beta)``.

    Defaults: ``gamma = rho / sigma^3``, ``beta = m / gamma^2``,
    ``alpha = sigma_max sqrt(log beta)_+``.  Inputs outside the lemma's
    range raise ``HypothesisError``.
    """
    sigma_max = math.sqrt(summand.sigma2) if sigma_max is None else float(sigma_max)
    gamma = summand.gamma if gamma is None else float(gamma)
    beta = m / gamma**2 if beta is None else float(beta)
    root_log = math.sqrt(math.log(beta)) if beta > 1.0 else 0.0
    alpha = sigma_max * root_log if alpha is None else float(alpha)
    if sigma_max < math.sqrt(summand.sigma2) * (1 - 1e-12):
        raise HypothesisError(f"sigma_max={sigma_max} is below the summand's sigma")
    if gamma < summand.gamma * (1 - 1e-12):
        raise HypothesisError(f"gamma={gamma} is below rho/sigma^3={summand.gamma}")
    if not 0.0 < beta <= m / gamma**2 * (1 + 1e-12):
        raise HypothesisError(f"beta={beta} must lie in (0, m/gamma^2={m / gamma**2}]")
    if not alpha > 0.0 or alpha < sigma_max * root_log * (1 - 1e-12):
        raise HypothesisError(f"alpha={alpha} must be positive and >= sigma_max sqrt(log beta)_+")

    gen = as_generator(rng)
    rows = max(1, (1 << 21) // m)
    exceed = 0
    for start in range(0, runs, rows):
        size = min(rows, runs - start)
        s = summand.draw(gen, (size, m)).sum(axis=1) / math.sqrt(m)
        exceed += int(np.count_nonzero(np.abs(s) > alpha))
    return GaussishResult(
        summand.name, m, beta, alpha, runs, exceed / runs, gaussish_tail_bound(kbe) / math.sqrt(beta)
    )


# --- separating inequality ---------------------------------------------------


@dataclass(frozen=True)
class SeparatingResult:
    lhs: float
    rhs: float
    allowance: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.allowance

    def __bool__(self) -> bool:
        return self.holds


def separating_check(x1, x2, x3, variance: float, epsilon: float, alpha: float = 0.01) -> SeparatingResult:
    """Both sides of the separating inequality on jointly drawn samples.

    LHS is the KS distance of ``x1 + x2 + x3`` to N(0, variance); RHS adds
    to the KS distance of ``x1`` the tail frequencies of ``|x2|`` and
    ``|x3|`` beyond ``epsilon / 2`` and ``epsilon / sqrt(2 pi variance)``.
    The comparison allows two DKW radii of sampling slack.
    """
    x1, x2, x3 = (np.asarray(x, dtype=float).ravel() for x in (x1, x2, x3))
    if not x1.shape == x2.shape == x3.shape:
        raise ValueError(f"batch sizes differ: {x1.shape[0]}, {x2.shape[0]}, {x3.shape[0]}")
    if not epsilon > 0.0:
        raise DomainError("epsilon must be > 0")
    lhs = ks_one_sample_gaussian(EmpiricalCDF.build(x1 + x2 + x3), variance, alpha).statistic
    rhs = (
        ks_one_sample_gaussian(EmpiricalCDF.build(x1), variance, alpha).statistic
        + float(np.mean(np.abs(x2) > epsilon / 2))
        + float(np.mean(np.abs(x3) > epsilon / 2))
        + epsilon / math.sqrt(2.0 * math.pi * variance)
    )
    return SeparatingResult(lhs, rhs, 2.0 * dkw_radius(x1.shape[0], alpha))
