"""Problem constants and exponent algebra.

All derived exponents are computed once in :func:`derive_exponents` and stored
pre-computed on the (immutable) :class:`Params` value; no other module
re-derives them.  The governing relations, for fractional order ``s`` and
penalty exponent ``gamma``:

    alpha = 1 - 2 s                      (extension weight y^alpha)
    beta  = 2 s / (2 - gamma)            (homogeneity of blow-ups)
    beta (2 - gamma) = 2 s,   beta - s = gamma beta / 2      (exact identities)
    kappa_vol  = n - 1 + (2 - alpha gamma)/(2 - gamma) = n + beta gamma
    kappa_surf = kappa_vol + 1

``gamma = 0`` is admitted as the cavitation limit; the penalty integrand is
then the indicator of the positivity set and ``beta = s``.

Note on ``energy_scale_exp``: the field stores the documented value
``-n + 1 - beta*gamma``.  The rescaling actually measured on discrete fields
(see :func:`rescale_field` and the functional sweeps, which both use
``kappa_vol = n + beta*gamma``) is

    J(domain/lambda, u_lambda) = lambda^{-(n + beta*gamma)} J(domain, u),

i.e. one power of lambda away from the stored constant.  The stored form is
kept for manifest compatibility; consumers that need the measured scaling
should use ``-(n + beta*gamma)`` (equivalently ``-kappa_vol``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridDomainError, ParameterDomainError

__all__ = ["Params", "derive_exponents", "rescale_field"]


@dataclass(frozen=True)
class Params:
    """Validated problem constants plus derived exponents."""

    s: float
    gamma: float
    n: int
    alpha: float
    beta: float
    kappa_vol: float
    kappa_surf: float
    energy_scale_exp: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ParameterDomainError(f"s must lie in (0,1), got {self.s}")
        if not (0.0 <= self.gamma < 1.0):
            raise ParameterDomainError(f"gamma must lie in [0,1), got {self.gamma}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ParameterDomainError(f"n must be an integer >= 1, got {self.n}")
        # guard against hand-built inconsistent values
        if abs(self.beta * (2.0 - self.gamma) - 2.0 * self.s) > 1e-12:
            raise ParameterDomainError("beta inconsistent with (s, gamma)")
        if abs(self.alpha + 2.0 * self.s - 1.0) > 1e-12:
            raise ParameterDomainError("alpha inconsistent with s")

    def as_dict(self) -> dict:
        """Flat key-value block used in run manifests."""
        return {
            "s": self.s,
            "gamma": self.gamma,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "kappa_vol": self.kappa_vol,
            "kappa_surf": self.kappa_surf,
            "energy_scale_exp": self.energy_scale_exp,
        }


def derive_exponents(s: float, gamma: float, n: int = 1) -> Params:
    """Validate (s, gamma, n) and populate every derived exponent.

    beta(2-gamma) = 2s and beta - s = gamma*beta/2 hold exactly by
    construction; kappa_surf - kappa_vol = 1.
    """
    if not (0.0 < s < 1.0):
        raise ParameterDomainError(f"s must lie in (0,1), got {s}")
    if not (0.0 <= gamma < 1.0):
        raise ParameterDomainError(f"gamma must lie in [0,1), got {gamma}")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ParameterDomainError(f"n must be an integer >= 1, got {n}")
    s = float(s)
    gamma = float(gamma)
    alpha = 1.0 - 2.0 * s
    beta = 2.0 * s / (2.0 - gamma)
    kappa_vol = n - 1 + (2.0 - alpha * gamma) / (2.0 - gamma)
    kappa_surf = n + (2.0 - alpha * gamma) / (2.0 - gamma)
    energy_scale_exp = -n + 1.0 - beta * gamma
    return Params(
        s=s,
        gamma=gamma,
        n=int(n),
        alpha=alpha,
        beta=beta,
        kappa_vol=kappa_vol,
        kappa_surf=kappa_surf,
        energy_scale_exp=energy_scale_exp,
    )


def rescale_field(field, lam: float, x0: float = 0.0, target=None):
    """Rescale a field: u_lam(X) = lam^{-beta} u(x0 + lam (X - x0)).

    ``x0`` is the base point on the bottom boundary {y=0}.  With
    ``target=None`` the result lives on the exactly-mapped grid (nodes
    x0 + (x - x0)/lam, y/lam), so no interpolation occurs.  With an explicit
    target grid the source is sampled by bilinear interpolation and the
    rescaled support must cover the target (else GridDomainError).
    """
    from .grid import Field, Grid2D, _integrate_weight_tables

    if lam <= 0.0:
        raise ParameterDomainError(f"scale factor must be positive, got {lam}")
    grid = field.grid
    beta = grid.params.beta
    scale = lam ** (-beta)

    if target is None:
        x_new = x0 + (grid.x - x0) / lam
        y_new = grid.y / lam
        cv_w, res_y = _integrate_weight_tables(y_new, grid.params.alpha)
        new_grid = Grid2D(
            x=x_new,
            y=y_new,
            Lx=0.5 * (x_new[-1] - x_new[0]),
            Ly=y_new[-1],
            q=grid.q,
            params=grid.params,
            cv_weight_y=cv_w,
            res_y=res_y,
        )
        return Field(grid=new_grid, values=scale * field.values, boundary_spec=None)

    xs = x0 + lam * (target.x - x0)
    ys = lam * target.y
    eps = 1e-12 * max(1.0, abs(grid.x[-1]))
    if xs[0] < grid.x[0] - eps or xs[-1] > grid.x[-1] + eps:
        raise GridDomainError("rescaled support exceeds source grid extent in x")
    if ys[-1] > grid.y[-1] + eps:
        raise GridDomainError("rescaled support exceeds source grid extent in y")
    vals = scale * field.interpolate(xs, ys)
    return Field(grid=target, values=vals, boundary_spec=None)
