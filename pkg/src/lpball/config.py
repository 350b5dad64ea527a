"""Strict JSON configuration for the ``simulate`` and ``convergence`` commands.

Every mapping is checked against its allowed keys; anything unknown or
mistyped raises ``ConfigError`` naming the offending path, e.g.
``config.model.w.rte``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .bounds import BoundConstants
from .errors import ConfigError
from .experiments import ExperimentConfig, KRule
from .ks import DEFAULT_ALPHA
from .models import ModelSpec, WSpec
from .samplers import DEFAULT_BLOCK

DEFAULT_N_GRID = tuple(2**e for e in range(7, 14))
DEFAULT_REPLICATES = 100_000
_U64 = 2**64


class _Node:
    """A JSON object being consumed key by key, remembering where it sits."""

    def __init__(self, data: Any, path: str, allowed: set[str], required: set[str] = frozenset()):
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f"{path}.{unknown[0]}: unknown key (allowed: {', '.join(sorted(allowed))})")
        missing = sorted(required - set(data))
        if missing:
            raise ConfigError(f"{path}.{missing[0]}: required key missing")
        self.data = data
        self.path = path

    def has(self, key: str) -> bool:
        return key in self.data

    def at(self, key: str) -> str:
        return f"{self.path}.{key}"

    def number(self, key: str, default: float | None = None) -> float | None:
        if key not in self.data:
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{self.at(key)}: expected a finite number, got {value!r}")
        return float(value)

    def integer(self, key: str, default: int | None = None) -> int | None:
        if key not in self.data:
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self.at(key)}: expected an integer, got {value!r}")
        return value

    def string(self, key: str, default: str | None = None) -> str | None:
        if key not in self.data:
            return default
        value = self.data[key]
        if not isinstance(value, str):
            raise ConfigError(f"{self.at(key)}: expected a string, got {value!r}")
        return value

    def boolean(self, key: str, default: bool = False) -> bool:
        if key not in self.data:
            return default
        value = self.data[key]
        if not isinstance(value, bool):
            raise ConfigError(f"{self.at(key)}: expected true or false, got {value!r}")
        return value


def _wrap(path: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_seed(value: Any, path: str = "seed") -> int:
    if isinstance(value, str):
        try:
            value = int(value, 0)
        except ValueError:
            raise ConfigError(f"{path}: expected an unsigned 64-bit integer, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < _U64:
        raise ConfigError(f"{path}: expected an unsigned 64-bit integer, got {value!r}")
    return value


def parse_w(data: Any, p: float, path: str) -> WSpec:
    """``{"kind": "cone" | "uniform" | "dirac_zero" | "exponential" | "gamma" | "point_mass", ...}``."""
    if isinstance(data, str):
        data = {"kind": data}
    node = _Node(data, path, {"kind", "rate", "shape", "scale", "w0"}, {"kind"})
    kind = node.string("kind")
    params = {
        "cone": set(),
        "dirac_zero": set(),
        "uniform": set(),
        "exponential": {"rate"},
        "gamma": {"shape", "scale"},
        "point_mass": {"w0"},
    }
    if kind not in params:
        raise ConfigError(f"{node.at('kind')}: unknown W kind {kind!r} (allowed: {', '.join(params)})")
    extra = sorted(set(data) - {"kind"} - params[kind])
    if extra:
        raise ConfigError(f"{node.at(extra[0])}: not a parameter of W kind {kind!r}")
    if kind in ("cone", "dirac_zero"):
        return WSpec.cone()
    if kind == "uniform":
        return WSpec.uniform(p)
    if kind == "exponential":
        return _wrap(path, WSpec.exponential, node.number("rate"))
    if kind == "gamma":
        return _wrap(path, WSpec.gamma, node.number("shape"), node.number("scale", 1.0))
    return _wrap(path, WSpec.point_mass, node.number("w0"))


# --- simulate ---------------------------------------------------------------


@dataclass(frozen=True)
class SimulateConfig:
    model: ModelSpec
    replicates: int
    master_seed: int | None
    experiment_id: str
    block_size: int

    def to_dict(self, seed: int) -> dict[str, Any]:
        return {
            "experiment_id": self.experiment_id,
            "model": self.model.to_dict(),
            "replicates": self.replicates,
            "seed": seed,
            "block_size": self.block_size,
        }


def parse_model(data: Any, path: str) -> ModelSpec:
    node = _Node(data, path, {"mode", "p", "n", "k", "lam", "q", "w", "experimental"}, {"mode", "p", "n"})
    p = node.number("p")
    w = parse_w(node.data["w"], p, node.at("w")) if node.has("w") else WSpec.cone()
    return _wrap(
        path,
        ModelSpec,
        p=p,
        n=node.integer("n"),
        mode=node.string("mode"),
        w=w,
        k=node.integer("k"),
        lam=node.number("lam"),
        q=node.number("q"),
        experimental=node.boolean("experimental"),
    )


def parse_simulate(data: Any, path: str = "config") -> SimulateConfig:
    node = _Node(data, path, {"experiment_id", "model", "replicates", "seed", "block_size"}, {"model"})
    replicates = node.integer("replicates", DEFAULT_REPLICATES)
    if replicates < 1:
        raise ConfigError(f"{node.at('replicates')}: must be >= 1")
    block = node.integer("block_size", DEFAULT_BLOCK)
    if block < 1:
        raise ConfigError(f"{node.at('block_size')}: must be >= 1")
    return SimulateConfig(
        model=parse_model(node.data["model"], node.at("model")),
        replicates=replicates,
        master_seed=parse_seed(node.data["seed"], node.at("seed")) if node.has("seed") else None,
        experiment_id=node.string("experiment_id", "simulate"),
        block_size=block,
    )


# --- convergence ------------------------------------------------------------


def parse_k_rule(data: Any, path: str) -> KRule:
    node = _Node(data, path, {"kind", "lambda", "a", "k"}, {"kind"})
    kind = node.string("kind")
    if kind == "explicit":
        ks = node.data.get("k")
        if not isinstance(ks, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in ks):
            raise ConfigError(f"{node.at('k')}: expected a list of integers")
        return _wrap(path, KRule, kind, ks=tuple(ks))
    return _wrap(path, KRule, kind, lam=node.number("lambda"), a=node.number("a"))


def parse_constants(data: Any, path: str) -> BoundConstants:
    node = _Node(data, path, {"c", "C", "kbe"})
    return _wrap(path, BoundConstants, node.number("c", 1.0), node.number("C", 1.0), node.number("kbe", 0.5583))


def parse_convergence(data: Any, path: str = "config") -> tuple[ExperimentConfig, bool]:
    """Returns the experiment and whether the file fixed its own seed."""
    node = _Node(
        data,
        path,
        {
            "experiment_id", "model", "n_grid", "k_rule", "limit_lambda", "replicates",
            "seed", "constants", "alpha", "block_size",
        },
        {"model"},
    )
    model = _Node(node.data["model"], node.at("model"), {"mode", "p", "q", "lambda_n", "w", "experimental"}, {"mode", "p"})
    p = model.number("p")
    w = parse_w(model.data["w"], p, model.at("w")) if model.has("w") else WSpec.cone()
    grid = node.data.get("n_grid", list(DEFAULT_N_GRID))
    if not isinstance(grid, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in grid):
        raise ConfigError(f"{node.at('n_grid')}: expected a list of integers")
    k_rule = parse_k_rule(node.data["k_rule"], node.at("k_rule")) if node.has("k_rule") else None
    consts = parse_constants(node.data["constants"], node.at("constants")) if node.has("constants") else BoundConstants()
    seeded = node.has("seed")
    config = _wrap(
        path,
        ExperimentConfig,
        experiment_id=node.string("experiment_id", "convergence"),
        mode=model.string("mode"),
        p=p,
        n_grid=tuple(grid),
        w=w,
        q=model.number("q"),
        k_rule=k_rule,
        lambda_n=model.number("lambda_n"),
        limit_lambda=node.number("limit_lambda"),
        replicates=node.integer("replicates", DEFAULT_REPLICATES),
        master_seed=parse_seed(node.data["seed"], node.at("seed")) if seeded else 0,
        constants=consts,
        alpha=node.number("alpha", DEFAULT_ALPHA),
        block_size=node.integer("block_size", DEFAULT_BLOCK),
        experimental=model.boolean("experimental"),
    )
    return config, seeded


def load_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
