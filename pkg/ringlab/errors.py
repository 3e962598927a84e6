"""
Exception hierarchy for ringlab.

Each error also derives from the builtin it specializes so callers that only
know about ValueError / RuntimeError keep working.
"""

from typing import Any, List, Optional


class RingLabError(Exception):
    """Base class for all ringlab errors."""


class ConfigParseError(RingLabError, ValueError):
    """Scenario file could not be parsed (bad JSON, unknown key, wrong type)."""

    def __init__(self, message: str, key: Optional[str] = None, suggestion: Optional[str] = None):
        super().__init__(message)
        self.key = key
        self.suggestion = suggestion


class ConfigValidationError(RingLabError, ValueError):
    """validate_config reported at least one error."""

    def __init__(self, issues: List[Any]):
        self.issues = list(issues)
        errors = [i for i in self.issues if getattr(i, "severity", None) == "error"]
        summary = "; ".join(f"{i.path}: {i.message}" for i in errors) or "invalid configuration"
        super().__init__(summary)


class GeometryError(RingLabError, ValueError):
    """Degenerate annulus, bad radial grid or point outside the valid domain."""


class DensityError(RingLabError, ValueError):
    """Negative or badly ordered density knots."""


class SingularityError(RingLabError, ZeroDivisionError):
    """Force evaluated on a point mass or on an attracting wire."""


class QuadratureError(RingLabError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error_estimate: float, radius: Optional[float] = None):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate
        self.radius = radius

    def at_radius(self, radius: float) -> "QuadratureError":
        return QuadratureError(f"{self} (R={radius!r})", self.estimate, self.error_estimate, radius)


class InsufficientDataError(RingLabError, ValueError):
    """Not enough samples for a fit or a ratio estimate."""


class DomainError(RingLabError, ValueError):
    """Argument outside the mathematical domain (e.g. negative temperature)."""


class CollisionConfigError(RingLabError, ValueError):
    """Collision cells too small for the particle cross-section."""


class ShapeError(RingLabError, ValueError):
    """Moment snapshots on mismatched grids or too few of them."""


class CoverageError(RingLabError, ValueError):
    """Requested radius is not covered by the moment cells."""


class CalibrationError(RingLabError, RuntimeError):
    """Fuller switching constant could not be calibrated."""


class SwitchingError(RingLabError, RuntimeError):
    """Closed-loop Fuller arc has no switch ahead of the current state."""


class RunAbortedError(RingLabError, RuntimeError):
    """Model A run lost more than half of its particles."""

    def __init__(self, message: str, diagnostics: Any = None):
        super().__init__(message)
        self.diagnostics = diagnostics


class UsageError(RingLabError, ValueError):
    """Unknown subcommand or bad command line."""
