"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "ParameterDomainError",
    "GridDomainError",
    "SolverConvergenceError",
    "EnergyIncreaseError",
    "ContactOscillationError",
]


class ParameterDomainError(ValueError):
    """A problem constant or precondition is outside its admissible range."""


class GridDomainError(ValueError):
    """A requested evaluation/rescaling leaves the grid or sample window."""


class SolverConvergenceError(RuntimeError):
    """An iterative solve (CG, shooting, adaptive quadrature) did not converge.

    Carries optional diagnostics in ``info`` (residual history, bracket, ...).
    """

    def __init__(self, message: str, info: dict | None = None):
        super().__init__(message)
        self.info = info or {}


class EnergyIncreaseError(SolverConvergenceError):
    """The outer minimization loop observed an energy increase (aborted)."""


class ContactOscillationError(SolverConvergenceError):
    """The contact set alternated between two states past the iteration cap."""
