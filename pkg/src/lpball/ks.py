"""Empirical CDFs, Kolmogorov-Smirnov statistics and distances between centred Gaussians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import kernels
from .errors import DomainError, HypothesisError

DEFAULT_ALPHA = 0.01


def std_normal_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def _upper_tail(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def dkw_radius(m: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Half-width of the DKW band: ``sqrt(ln(2/alpha) / (2m))``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * m))


def two_sample_threshold(m_a: int, m_b: int, coef: float = 1.63) -> float:
    """Asymptotic level-0.01 critical value ``coef * sqrt((m_a + m_b) / (m_a m_b))``."""
    return coef * math.sqrt((m_a + m_b) / (m_a * m_b))


@dataclass(frozen=True)
class EmpiricalCDF:
    sorted_samples: np.ndarray

    @classmethod
    def build(cls, samples) -> "EmpiricalCDF":
        x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if x.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.flags.writeable = False
        return cls(x)

    @property
    def m(self) -> int:
        return self.sorted_samples.shape[0]

    def __call__(self, t):
        """Right-continuous value ``F_m(t) = #{x <= t} / m``."""
        return np.searchsorted(self.sorted_samples, t, side="right") / self.m

    def left(self, t):
        """Left limit ``F_m(t-) = #{x < t} / m``."""
        return np.searchsorted(self.sorted_samples, t, side="left") / self.m

    def limits(self, t):
        return self.left(t), self(t)


def ecdf_build(samples) -> EmpiricalCDF:
    return EmpiricalCDF.build(samples)


@dataclass(frozen=True)
class KSReport:
    statistic: float
    dkw_radius: float
    m: int
    variance: float
    alpha: float = DEFAULT_ALPHA

    @property
    def target(self) -> tuple[float, float]:
        return (0.0, self.variance)


def ks_one_sample_gaussian(ecdf: EmpiricalCDF, variance: float, alpha: float = DEFAULT_ALPHA) -> KSReport:
    """Exact ``sup_t |F_m(t) - Phi(t / sigma)|`` against a centred Gaussian.

    Both one-sided limits of the step function are compared at every jump.
    """
    variance = float(variance)
    if not (variance > 0.0 and math.isfinite(variance)):
        raise DomainError(f"variance must be > 0, got {variance!r}")
    stat = kernels.ks_sorted_gaussian(ecdf.sorted_samples, math.sqrt(variance))
    return KSReport(float(min(stat, 1.0)), dkw_radius(ecdf.m, alpha), ecdf.m, variance, alpha)


def ks_two_sample(a: EmpiricalCDF, b: EmpiricalCDF) -> float:
    """Sup-distance between two empirical CDFs."""
    return float(kernels.ks_two_sorted(a.sorted_samples, b.sorted_samples))


# --- centred Gaussians ------------------------------------------------------


def _check_scales(sigma: float, tau: float) -> tuple[float, float]:
    sigma, tau = float(sigma), float(tau)
    if not (sigma > 0.0 and tau > 0.0 and math.isfinite(sigma) and math.isfinite(tau)):
        raise DomainError(f"standard deviations must be finite and > 0, got {sigma!r}, {tau!r}")
    return sigma, tau


def gaussian_crossing(sigma: float, tau: float) -> float:
    """Positive point where the densities of N(0, sigma^2) and N(0, tau^2) cross."""
    sigma, tau = _check_scales(sigma, tau)
    if sigma == tau:
        raise DomainError("densities coincide; no isolated crossing")
    lo, hi = min(sigma, tau), max(sigma, tau)
    r = hi / lo
    # s0 / lo = r * sqrt(2 ln r / (r^2 - 1)), written to stay accurate as r -> 1
    return lo * r * math.sqrt(2.0 * math.log1p(r - 1.0) / ((r - 1.0) * (r + 1.0)))


def ks_gaussian_exact(sigma: float, tau: float) -> float:
    """KS distance between N(0, sigma^2) and N(0, tau^2); depends only on tau / sigma."""
    sigma, tau = _check_scales(sigma, tau)
    if sigma == tau:
        return 0.0
    lo, hi = min(sigma, tau), max(sigma, tau)
    s0 = gaussian_crossing(lo, hi)
    # Phi(s0/lo) - Phi(s0/hi), as a difference of upper tails
    return _upper_tail(s0 / hi) - _upper_tail(s0 / lo)


def ks_gaussian_bound_quarter(sigma: float, tau: float) -> float:
    """``(1 - sigma/tau) / 4 + (tau^2 / sigma^2 - 1) / 8`` for ``sigma < tau``."""
    sigma, tau = _check_scales(sigma, tau)
    if not sigma < tau:
        raise HypothesisError(f"requires sigma < tau, got sigma={sigma}, tau={tau}")
    return 0.25 * (1.0 - sigma / tau) + 0.125 * (tau * tau / (sigma * sigma) - 1.0)


def ks_gaussian_bound_lipschitz(alpha: float, beta: float) -> float:
    """``3/8 |alpha^2 - beta^2| / alpha^2``, valid when ``beta / alpha > 1/2``."""
    alpha, beta = _check_scales(alpha, beta)
    if not beta / alpha > 0.5:
        raise HypothesisError(f"requires beta/alpha > 1/2, got {beta / alpha}")
    return 0.375 * abs(alpha * alpha - beta * beta) / (alpha * alpha)


def gaussian_l1(sigma: float, tau: float) -> float:
    """``int |f_sigma - f_tau|`` by adaptive quadrature split at the crossings."""
    sigma, tau = _check_scales(sigma, tau)
    if sigma == tau:
        return 0.0
    s0 = gaussian_crossing(sigma, tau)

    def gap(s: float) -> float:
        return abs(
            math.exp(-0.5 * (s / sigma) ** 2) / sigma - math.exp(-0.5 * (s / tau) ** 2) / tau
        ) / math.sqrt(2.0 * math.pi)

    inner, _ = integrate.quad(gap, 0.0, s0, epsabs=1e-13, epsrel=1e-12, limit=200)
    outer, _ = integrate.quad(gap, s0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2.0 * (inner + outer)


def tv_gaussian(sigma: float, tau: float) -> float:
    """Total variation distance ``(1/2) int |f_sigma - f_tau|``."""
    return 0.5 * gaussian_l1(sigma, tau)
