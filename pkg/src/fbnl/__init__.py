"""Numerical laboratory for a nonlocal one-phase free boundary problem.

Subpackages cover: problem constants and exponent algebra (params), the
angular half-plane profile (profile), singular-integral kernel constants
(quadrature), the degenerate-elliptic extension solver (grid, solver),
energy minimization and free boundary measurement (minimizer), Weiss/Monneau
radius sweeps (functionals), comparison subsolutions and the linearized
degenerate equation (comparison), and a manifest-writing CLI (cli).
"""

from .params import Params, derive_exponents, rescale_field
from .errors import (
    ContactOscillationError,
    EnergyIncreaseError,
    GridDomainError,
    ParameterDomainError,
    SolverConvergenceError,
)

__version__ = "0.1.0"

__all__ = [
    "Params",
    "derive_exponents",
    "rescale_field",
    "ParameterDomainError",
    "GridDomainError",
    "SolverConvergenceError",
    "EnergyIncreaseError",
    "ContactOscillationError",
    "__version__",
]
