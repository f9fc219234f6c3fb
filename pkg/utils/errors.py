from __future__ import annotations

from typing import Any, Dict, Optional


class FlagellaError(Exception):
    """Root of every error raised by the simulator.

    ``context`` carries diagnostics (step index, Newton iteration, pair keys)
    so that callers higher up can report where a failure happened.
    """

    exit_code: int = 3

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def with_context(self, **extra: Any) -> "FlagellaError":
        self.context.update(extra)
        return self

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
        return f"{self.message} ({details})"


# -----------------------------------------------------------------------------
# Geometry
# -----------------------------------------------------------------------------
class DegenerateEdge(FlagellaError):
    pass


class AntiparallelEdges(FlagellaError):
    pass


class ParallelEdges(FlagellaError):
    pass


# -----------------------------------------------------------------------------
# Contact / friction
# -----------------------------------------------------------------------------
class NonPositiveDistance(FlagellaError):
    pass


class ZeroNormalForce(FlagellaError):
    pass


# -----------------------------------------------------------------------------
# Hydrodynamics
# -----------------------------------------------------------------------------
class LogSingularity(FlagellaError):
    pass


class SingularMobility(FlagellaError):
    pass


# -----------------------------------------------------------------------------
# Solver
# -----------------------------------------------------------------------------
class SingularJacobian(FlagellaError):
    pass


class NonConvergence(FlagellaError):
    """Newton hit its iteration cap; ``partial`` holds the last iterate and its stats."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None, partial: Any = None):
        super().__init__(message, context)
        self.partial = partial


# -----------------------------------------------------------------------------
# Config, analysis and I/O
# -----------------------------------------------------------------------------
class ConfigError(FlagellaError):
    exit_code = 2


class ShapeMismatch(FlagellaError):
    exit_code = 4


class MissingForceLog(FlagellaError):
    exit_code = 4


class TrajectoryFormatError(FlagellaError):
    exit_code = 4
