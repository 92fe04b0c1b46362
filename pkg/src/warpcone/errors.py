"""Exception hierarchy shared by all warpcone modules."""

from __future__ import annotations


class WarpconeError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(WarpconeError):
    """A value (word, net, map) is malformed for its declared kind."""


class ValidationError(WarpconeError):
    """Inputs are well-formed but violate a documented precondition."""


class CapacityError(WarpconeError):
    """An enumeration would exceed the configured cap."""

    def __init__(self, message: str, cap: int):
        super().__init__(f"{message} (cap={cap})")
        self.cap = cap


class ClosureError(WarpconeError):
    """A computation left the closed point domain or needs a larger closure radius."""

    def __init__(self, message: str, prefix=None, required_radius=None):
        super().__init__(message)
        self.prefix = prefix
        self.required_radius = required_radius


class DegenerateActionError(WarpconeError):
    """A generator map collapses distinct points, so no Lipschitz constant exists."""


class UnsupportedConfigurationError(WarpconeError):
    """The requested computation is defined only for a narrower configuration."""


class DomainMismatchError(WarpconeError):
    """Two structures that must share a point set or scale do not."""


class UndecidableAtDepthError(WarpconeError):
    """An interval-certified comparison cannot be decided at the current depth."""


class BudgetExceededError(WarpconeError):
    """An integer or search budget was exhausted before completion."""


class InfeasibilityError(WarpconeError):
    """A constructive hypothesis fails; carries the level at which it failed."""

    def __init__(self, message: str, level: int | None = None):
        super().__init__(message)
        self.level = level


class OrbitPreservationError(WarpconeError):
    """A map does not send orbits into orbits; carries the witnessing pair."""

    def __init__(self, message: str, gamma=None, point=None):
        super().__init__(message)
        self.gamma = gamma
        self.point = point


class NonFreeTargetError(WarpconeError):
    """Several group elements solve the same transport equation."""


class DistortionBudgetError(WarpconeError):
    """No finite multiplicative constant exists within the additive budget."""

    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


class ConfigError(WarpconeError):
    """Bad experiment configuration (CLI exit code 2)."""
