"""Model descriptions: the radial mixing law W and one experiment cell."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy import special

from .analytic import validate_p
from .errors import ConfigError

W_KINDS = ("dirac_zero", "exponential", "gamma", "point_mass")
MODES = ("grassmann_fixed", "grassmann_random", "q_norm")


@dataclass(frozen=True)
class WSpec:
    """Law of the nonnegative variable W mixed into the ball distribution.

    ``dirac_zero`` gives the cone measure on the sphere; ``exponential`` with
    ``rate = 1/p`` (density ``p^-1 e^{-s/p}``) gives the uniform measure on
    the ball.
    """

    kind: str
    rate: float | None = None
    shape: float | None = None
    scale: float | None = None
    w0: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in W_KINDS:
            raise ConfigError(f"unknown W kind {self.kind!r}; expected one of {W_KINDS}")
        if self.kind == "exponential":
            _require_positive(self.rate, "rate")
        elif self.kind == "gamma":
            _require_positive(self.shape, "shape")
            _require_positive(self.scale, "scale")
        elif self.kind == "point_mass":
            if self.w0 is None or not (self.w0 >= 0.0 and math.isfinite(self.w0)):
                raise ConfigError(f"point_mass needs finite w0 >= 0, got {self.w0!r}")

    @classmethod
    def cone(cls) -> "WSpec":
        return cls("dirac_zero")

    @classmethod
    def uniform(cls, p: float) -> "WSpec":
        return cls("exponential", rate=1.0 / float(p))

    @classmethod
    def exponential(cls, rate: float) -> "WSpec":
        return cls("exponential", rate=float(rate))

    @classmethod
    def gamma(cls, shape: float, scale: float = 1.0) -> "WSpec":
        return cls("gamma", shape=float(shape), scale=float(scale))

    @classmethod
    def point_mass(cls, w0: float) -> "WSpec":
        return cls("point_mass", w0=float(w0))

    @property
    def is_cone(self) -> bool:
        return self.kind == "dirac_zero" or (self.kind == "point_mass" and self.w0 == 0.0)

    def sample(self, count: int, gen: np.random.Generator) -> np.ndarray:
        if self.kind == "dirac_zero":
            return np.zeros(count)
        if self.kind == "point_mass":
            return np.full(count, float(self.w0))
        if self.kind == "exponential":
            return gen.standard_exponential(count) / self.rate
        return gen.standard_gamma(self.shape, count) * self.scale

    def tail(self, t: float) -> float:
        """``P[W > t]`` in closed form."""
        t = float(t)
        if t < 0.0:
            return 1.0
        if self.kind == "dirac_zero":
            return 0.0
        if self.kind == "point_mass":
            return 1.0 if self.w0 > t else 0.0
        if self.kind == "exponential":
            return math.exp(-self.rate * t)
        return float(special.gammaincc(self.shape, t / self.scale))

    def mean(self) -> float:
        if self.kind == "dirac_zero":
            return 0.0
        if self.kind == "point_mass":
            return float(self.w0)
        if self.kind == "exponential":
            return 1.0 / self.rate
        return self.shape * self.scale

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for name in ("rate", "shape", "scale", "w0"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


def _require_positive(value: float | None, name: str) -> None:
    if value is None or not (value > 0.0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    """One experiment cell.

    ``k`` is the subspace dimension for ``grassmann_fixed``, ``lam`` the
    inclusion probability for ``grassmann_random`` and ``q`` the norm index
    for ``q_norm``.
    """

    p: float
    n: int
    mode: str
    w: WSpec = field(default_factory=WSpec.cone)
    k: int | None = None
    lam: float | None = None
    q: float | None = None
    experimental: bool = False

    def __post_init__(self) -> None:
        try:
            validate_p(self.p, self.experimental)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"n must be an integer >= 1, got {self.n!r}")
        if self.mode == "grassmann_fixed":
            if self.k is None or not 1 <= self.k <= self.n:
                raise ConfigError(f"grassmann_fixed needs 1 <= k <= n={self.n}, got k={self.k!r}")
        elif self.mode == "grassmann_random":
            if self.lam is None or not 0.0 < self.lam <= 1.0:
                raise ConfigError(f"grassmann_random needs 0 < lam <= 1, got {self.lam!r}")
        else:
            if self.q is None or not (self.q > 0.0 and math.isfinite(self.q)):
                raise ConfigError(f"q_norm needs finite q > 0, got {self.q!r}")
            if self.q == self.p:
                raise ConfigError("q_norm requires p != q")

    def with_n(self, n: int, **changes: Any) -> "ModelSpec":
        return replace(self, n=n, **changes)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"mode": self.mode, "p": self.p, "n": int(self.n), "w": self.w.to_dict()}
        if self.k is not None:
            out["k"] = int(self.k)
        if self.lam is not None:
            out["lam"] = self.lam
        if self.q is not None:
            out["q"] = self.q
        if self.experimental:
            out["experimental"] = True
        return out
