"""Typed errors raised by the trajectory library.

Solvers distinguish recoverable evaluation failures (a trial point that
left the feasible region) from hard convergence failures, so every
failure mode gets its own class.
"""
from __future__ import annotations


class UpstageError(Exception):
    """Base class for all library errors."""


class EscapeTrajectory(UpstageError):
    """State is parabolic or hyperbolic; osculating apsides undefined."""


class NoPitchSolution(UpstageError):
    """Flight path angle outside the range reachable by the pitch law."""


class ConsistencyError(UpstageError):
    """Pitch/flight-path pair violates the angular-rate identity."""


class MassDepleted(UpstageError):
    """Vehicle mass reached zero during propagation."""


class SingularCostate(UpstageError):
    """Velocity costate vanished; thrust direction undefined."""


class PropagationError(UpstageError):
    """Integration aborted mid-flight.

    Attributes:
        time: trajectory time (s) at which the failure occurred.
        cause: the underlying typed error, when known.
    """

    def __init__(self, message: str, time: float, cause: Exception | None = None):
        super().__init__(message)
        self.time = time
        self.cause = cause


class ConvergenceError(UpstageError):
    """Iterative solver failed to converge.

    Attributes:
        best: best iterate found (solver-specific payload), may be None.
        residual_norm: residual norm at the best iterate.
    """

    def __init__(self, message: str, best=None, residual_norm: float = float("nan")):
        super().__init__(message)
        self.best = best
        self.residual_norm = residual_norm


class ConfigError(UpstageError):
    """Invalid or unreadable mission configuration."""
