"""Closed-form moments, limit variances and tail bounds.

Everything here is a pure function of its arguments.  Moments of the
p-Gaussian law are evaluated through ``lgamma`` so that large ratios
``r/p`` do not overflow.
"""

from __future__ import annotations

import math

from .errors import DomainError

__all__ = [
    "LimitVariance",
    "validate_p",
    "log_gamma",
    "moment_Mp",
    "covariance_abs_powers",
    "sigma2",
    "variance_v",
    "variance_w",
    "j_floor",
    "gaussian_tail_upper",
]

# Rounding slack below zero that is still reported as a zero variance.
_NEG_SLACK = 1e-12


class LimitVariance(float):
    """A nonnegative variance tagged with the formula it came from.

    Behaves as a plain ``float``; ``kind`` is one of ``"sigma2"``, ``"v"``
    or ``"w"``.
    """

    kind: str

    def __new__(cls, value: float, kind: str) -> "LimitVariance":
        if kind not in ("sigma2", "v", "w"):
            raise ValueError(f"unknown variance kind {kind!r}")
        if not math.isfinite(value) or value < -_NEG_SLACK:
            raise DomainError(f"variance must be finite and >= 0, got {value!r}")
        obj = super().__new__(cls, max(value, 0.0))
        obj.kind = kind
        return obj

    def __repr__(self) -> str:
        return f"LimitVariance({float(self)!r}, kind={self.kind!r})"


def validate_p(p: float, experimental: bool = False) -> float:
    """Return ``p`` as a float, raising ``DomainError`` if it is not allowed.

    The validated range is ``1 <= p < inf``.  With ``experimental=True`` the
    range widens to ``0 < p < inf``.
    """
    p = float(p)
    if not math.isfinite(p):
        raise DomainError(f"p must be finite, got {p!r}")
    lo_ok = p > 0.0 if experimental else p >= 1.0
    if not lo_ok:
        hint = "" if experimental else " (pass experimental=True for 0 < p < 1)"
        raise DomainError(f"p={p!r} is outside the supported range{hint}")
    return p


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def _check_r(r: float, name: str = "r") -> float:
    r = float(r)
    if not (r >= 0.0 and math.isfinite(r)):
        raise DomainError(f"{name} must be finite and >= 0, got {r!r}")
    return r


def moment_Mp(p: float, r: float, experimental: bool = False) -> float:
    """Absolute moment ``E|Z|^r`` of a p-Gaussian variable.

    ``M_p(r) = p^(r/p) / (r+1) * Gamma(1 + (r+1)/p) / Gamma(1 + 1/p)``.
    """
    p = validate_p(p, experimental)
    r = _check_r(r)
    log_m = (
        (r / p) * math.log(p)
        - math.log1p(r)
        + log_gamma(1.0 + (r + 1.0) / p)
        - log_gamma(1.0 + 1.0 / p)
    )
    return math.exp(log_m)


def covariance_abs_powers(p: float, q: float, r: float, experimental: bool = False) -> float:
    """``Cov(|Z|^q, |Z|^r) = M_p(q + r) - M_p(q) M_p(r)``."""
    q = _check_r(q, "q")
    r = _check_r(r)
    return moment_Mp(p, q + r, experimental) - moment_Mp(p, q, experimental) * moment_Mp(
        p, r, experimental
    )


def sigma2(p: float, q: float, experimental: bool = False) -> LimitVariance:
    """Variance of ``(|Z|^q - M_p(q)) / (q M_p(q)) - (|Z|^p - 1) / p``.

    Not symmetric in ``p`` and ``q``; vanishes at ``p == q``.
    """
    p = validate_p(p, experimental)
    q = float(q)
    if not (q > 0.0 and math.isfinite(q)):
        raise DomainError(f"q must be finite and > 0, got {q!r}")
    mq = moment_Mp(p, q, experimental)
    value = (
        (moment_Mp(p, 2.0 * q, experimental) / (mq * mq) - 1.0) / (q * q)
        - 2.0 / (p * q) * (moment_Mp(p, p + q, experimental) / mq - 1.0)
        + (moment_Mp(p, 2.0 * p, experimental) - 1.0) / (p * p)
    )
    return LimitVariance(value, "sigma2")


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    return s


def variance_v(s: float, p: float, experimental: bool = False) -> LimitVariance:
    """Limit variance for projections onto subspaces of fixed dimension.

    ``v(s) = s sigma2(p, 2) + (1 - s) / 2``.
    """
    s = _check_s(s)
    return LimitVariance(s * sigma2(p, 2.0, experimental) + 0.5 * (1.0 - s), "v")


def variance_w(s: float, p: float, experimental: bool = False) -> LimitVariance:
    """Limit variance for subspaces of binomial random dimension.

    ``w(s) = s sigma2(p, 2) + 3 (1 - s) / 4``.
    """
    s = _check_s(s)
    return LimitVariance(s * sigma2(p, 2.0, experimental) + 0.75 * (1.0 - s), "w")


def j_floor(p: float, variant: str = "grassmann", experimental: bool = False) -> float:
    """Infimum over ``s`` in [0, 1] of ``v(s)`` (``grassmann``) or ``w(s)`` (``random_dim``)."""
    s2 = float(sigma2(p, 2.0, experimental))
    if variant == "grassmann":
        return min(s2, 0.5)
    if variant == "random_dim":
        return min(s2, 0.75)
    raise DomainError(f"unknown variant {variant!r}; expected 'grassmann' or 'random_dim'")


def gaussian_tail_upper(t: float) -> float:
    """Mills-ratio upper bound ``phi(t) / t`` on the standard normal tail, ``t > 0``."""
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got {t!r}")
    return math.exp(-0.5 * t * t) / (t * math.sqrt(2.0 * math.pi))
