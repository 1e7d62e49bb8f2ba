"""Graded tensor mesh on the extension half-rectangle and fields on it.

The mesh is uniform in x on [-Lx, Lx] and graded in y on [0, Ly] with
y_j = Ly (j/ny)^q, so the y^{2s} boundary layer at the bottom is resolved.
Two exactly-integrated weight tables are precomputed per grid:

* ``cv_weight_y[j]``: integral of y^alpha over the control-volume span of
  node row j (drives horizontal conductances),
* ``res_y[j]``: integral of y^{-alpha} over [y_j, y_{j+1}] (inverse of the
  vertical transmissibility; finite down to y=0 since -alpha > -1).

With these choices the five-point flux-form operator is exact on constants,
on x, and on the monomial y^{2s}, and no face weight is ever evaluated at
y = 0: the bottom boundary couples through flux transfer only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridDomainError, ParameterDomainError
from .params import Params

__all__ = ["Grid2D", "Field", "BoundarySpec", "build_grid"]


def _integrate_weight_tables(y: np.ndarray, alpha: float):
    """Exact weight integrals for a node vector y (y[0] = 0)."""
    ny = len(y) - 1
    # control-volume edges in y: 0, midpoints, Ly
    edges = np.empty(ny + 2)
    edges[0] = y[0]
    edges[1:-1] = 0.5 * (y[:-1] + y[1:])
    edges[-1] = y[-1]
    ap1 = 1.0 + alpha
    prim = edges ** ap1 / ap1  # primitive of y^alpha, fine since alpha > -1
    cv_weight_y = prim[1:] - prim[:-1]  # (ny+1,)
    am1 = 1.0 - alpha  # = 2s > 0
    prim2 = y ** am1 / am1  # primitive of y^{-alpha}
    res_y = prim2[1:] - prim2[:-1]  # (ny,)
    return cv_weight_y, res_y


@dataclass(frozen=True)
class Grid2D:
    """Tensor mesh with precomputed y^alpha face-weight tables."""

    x: np.ndarray
    y: np.ndarray
    Lx: float
    Ly: float
    q: float
    params: Params
    cv_weight_y: np.ndarray
    res_y: np.ndarray

    @property
    def nx(self) -> int:
        return len(self.x) - 1

    @property
    def ny(self) -> int:
        return len(self.y) - 1

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def shape(self) -> tuple:
        return (self.nx + 1, self.ny + 1)

    def cv_width_x(self) -> np.ndarray:
        """Control-volume widths in x (half cells at the lateral boundaries)."""
        w = np.full(self.nx + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


@dataclass(frozen=True)
class BoundarySpec:
    """Per-side boundary conditions for the mixed solver.

    left/right/top are Dirichlet value arrays (indexed along the side).
    The bottom is one of
      kind='dirichlet': values (nx+1,)
      kind='flux':      weighted Neumann data g(x) = lim y^alpha d_y u (nx+1,)
      kind='mixed':     flux where mask is True, Dirichlet value elsewhere
    """

    left: np.ndarray
    right: np.ndarray
    top: np.ndarray
    bottom_kind: str
    bottom_values: np.ndarray
    bottom_mask: Optional[np.ndarray] = None
    bottom_dirichlet: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Field:
    """Node values on a Grid2D, immutable once returned by a solver."""

    grid: Grid2D
    values: np.ndarray  # shape (nx+1, ny+1), index [i, j] = (x_i, y_j)
    boundary_spec: Optional[BoundarySpec] = None

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise GridDomainError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def trace(self) -> np.ndarray:
        """Values on the bottom boundary {y=0}."""
        return self.values[:, 0]

    def interpolate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Bilinear tensor interpolation at the outer product xs x ys."""
        from scipy.interpolate import RegularGridInterpolator

        itp = RegularGridInterpolator(
            (self.grid.x, self.grid.y), self.values, method="linear",
            bounds_error=True,
        )
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        return itp(pts).reshape(len(xs), len(ys))

    def interpolate_points(self, px: np.ndarray, py: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at scattered points (px[k], py[k])."""
        from scipy.interpolate import RegularGridInterpolator

        itp = RegularGridInterpolator(
            (self.grid.x, self.grid.y), self.values, method="linear",
            bounds_error=True,
        )
        return itp(np.stack([np.asarray(px), np.asarray(py)], axis=-1))


def build_grid(
    nx: int,
    ny: int,
    Lx: float,
    Ly: float,
    q: Optional[float] = None,
    params: Params = None,
) -> Grid2D:
    """Graded tensor mesh with exactly integrated face-weight tables.

    q defaults to max(1, 1/(2s)) so that the y^{2s} bottom layer is resolved
    with second-order interpolation error.
    """
    if params is None:
        raise ParameterDomainError("build_grid requires a Params value")
    if nx < 8 or ny < 8:
        raise GridDomainError(f"nx, ny must be >= 8, got ({nx}, {ny})")
    if Lx <= 0 or Ly <= 0:
        raise GridDomainError(f"degenerate extents ({Lx}, {Ly})")
    if q is None:
        q = max(1.0, 1.0 / (2.0 * params.s))
    if q < 1.0:
        raise GridDomainError(f"grading exponent must be >= 1, got {q}")
    x = np.linspace(-Lx, Lx, nx + 1)
    j = np.arange(ny + 1, dtype=float)
    y = Ly * (j / ny) ** q
    cv_w, res_y = _integrate_weight_tables(y, params.alpha)
    if not (np.all(cv_w > 0) and np.all(np.isfinite(cv_w))):
        raise GridDomainError("non-positive or non-finite horizontal face weight")
    if not (np.all(res_y > 0) and np.all(np.isfinite(res_y))):
        raise GridDomainError("non-positive or non-finite vertical face resistance")
    return Grid2D(x=x, y=y, Lx=Lx, Ly=Ly, q=q, params=params,
                  cv_weight_y=cv_w, res_y=res_y)
