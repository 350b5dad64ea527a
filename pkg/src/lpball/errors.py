"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigError(ValueError):
    """A model or experiment configuration is malformed or inconsistent."""


class HypothesisError(ValueError):
    """The inputs violate the hypothesis under which a bound holds."""


class NumericalError(ArithmeticError):
    """A numerical routine failed (degenerate draw, non-finite result)."""
