from __future__ import annotations

from typing import Any, Optional


class TwjsccError(Exception):
    """Base class for every error raised by the toolbox."""


class ValidationError(TwjsccError, ValueError):
    """A pmf, table or shape failed construction-time validation."""


class UndefinedRowError(TwjsccError, LookupError):
    """A conditional row with zero conditioning mass (or an unreachable decoder cell) was read."""


class ConvergenceError(TwjsccError, RuntimeError):
    """An iterative solver ran out of iterations. `last` holds the final iterate."""

    def __init__(self, message: str, last: Any = None, residual: Optional[float] = None) -> None:
        super().__init__(message)
        self.last = last
        self.residual = residual

    def diagnostic(self) -> dict:
        return {"error": "convergence", "message": str(self), "residual": self.residual}


class InfeasibleDistortionError(TwjsccError, ValueError):
    """Target distortion is negative or below the smallest achievable distortion."""


class GridGuardError(TwjsccError, ValueError):
    """Brute-force grid exceeds the evaluation guard."""


class ModelFileError(TwjsccError):
    """A model, scheme or config file could not be parsed."""
