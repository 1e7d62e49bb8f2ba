"""Weiss and Monneau boundary-adjusted functionals and radius sweeps.

For a field u on the extension half-rectangle, a base point x0 on {y=0} and
a radius R with the half-ball inside the grid,

    W(R,u) = R^{-kv} [ int_{B_R^+} y^a |grad u|^2 + 2 int_{-R}^{R} u^g ]
             - beta R^{-ks} int_{(dB_R)^+} y^a u^2 dsigma,

with kv = kappa_vol, ks = kappa_surf = kv + 1.  The volume integral uses
cell quadrature with exact circular clipping of boundary cells, the surface
integral Gauss-Jacobi nodes in t = cos(theta) absorbing the (sin theta)^a
endpoint weight, and the trace integral composite Gauss panels on the
interpolated trace.

The Monneau functional is evaluated in its weighted form

    M(R,u,p) = R^{-ks} int_{(dB_R)^+} y^a (u - p)^2 dsigma;

the weight keeps M consistent with the Weiss comparison it is paired with
(its derivative computation carries y^a).

For a beta-homogeneous candidate A r^beta g(theta) at n=1 the exact value is
W = (2 A^g - lambda* A^2) / (1 + beta*gamma), which reduces to the
homogeneous-solution form (2-gamma) A^g / (1+beta*gamma) exactly when
A^{2-gamma} = gamma/lambda* (the flux-consistent amplitude).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import roots_jacobi, roots_legendre

from .errors import GridDomainError
from .grid import Field, Grid2D
from .params import rescale_field

__all__ = [
    "FunctionalSweep",
    "weiss",
    "weiss_sweep",
    "homogeneity_defect",
    "monneau",
    "blowup_sequence",
    "circle_rect_overlap",
    "weiss_target_halfplane",
]


def weiss_target_halfplane(params, measured_slope: float, amplitude: float = 1.0) -> float:
    """Exact W of the homogeneous candidate A r^beta g (n=1, any radius)."""
    g_, b = params.gamma, params.beta
    return (2.0 * amplitude ** g_ - measured_slope * amplitude ** 2) / (1.0 + b * g_)


def _quadrant_area(x: float, y: float, R: float) -> float:
    """Area of {u^2+v^2 <= R^2, 0 <= u <= x, 0 <= v <= y} for x, y >= 0."""
    xc = min(x, R)
    yc = min(y, R)
    if xc <= 0.0 or yc <= 0.0:
        return 0.0
    if xc * xc + yc * yc <= R * R:
        return xc * yc
    vstar = np.sqrt(max(R * R - xc * xc, 0.0))

    def F(v):
        v = min(v, R)
        return 0.5 * (v * np.sqrt(max(R * R - v * v, 0.0)) + R * R * np.arcsin(v / R))

    return xc * min(yc, vstar) + (F(yc) - F(vstar))


def _quadrant_signed(x: float, y: float, R: float) -> float:
    return np.sign(x) * np.sign(y) * _quadrant_area(abs(x), abs(y), R)


def circle_rect_overlap(x1, x2, y1, y2, cx, cy, R) -> float:
    """Exact area of the disc of radius R about (cx,cy) inside the rectangle."""
    a1, a2 = x1 - cx, x2 - cx
    b1, b2 = y1 - cy, y2 - cy
    return (_quadrant_signed(a2, b2, R) - _quadrant_signed(a1, b2, R)
            - _quadrant_signed(a2, b1, R) + _quadrant_signed(a1, b1, R))


def _cell_tables(field: Field):
    """Per-cell gradient components and exact per-cell y^alpha measures."""
    g = field.grid
    u = field.values
    dx = g.dx
    dy = np.diff(g.y)
    ux = 0.5 * ((u[1:, :-1] - u[:-1, :-1]) + (u[1:, 1:] - u[:-1, 1:])) / dx
    uy = 0.5 * ((u[:-1, 1:] - u[:-1, :-1]) + (u[1:, 1:] - u[1:, :-1])) / dy[None, :]
    alpha = g.params.alpha
    ap1 = 1.0 + alpha
    wy = (g.y[1:] ** ap1 - g.y[:-1] ** ap1) / ap1  # per y-layer integral of y^a
    return ux, uy, wy


def _dirichlet_ball(field: Field, x0: float, R: float) -> float:
    """int_{B_R^+(x0)} y^alpha |grad u|^2 with exact circular clipping."""
    g = field.grid
    ux, uy, wy = _cell_tables(field)
    dx = g.dx
    xs = g.x
    ys = g.y
    # bounding box of affected cells
    i_lo = max(0, int(np.floor((x0 - R - xs[0]) / dx)))
    i_hi = min(g.nx - 1, int(np.ceil((x0 + R - xs[0]) / dx)))
    j_hi = int(np.searchsorted(ys, R) + 1)
    total = 0.0
    for j in range(min(j_hi, g.ny)):
        y1, y2 = ys[j], ys[j + 1]
        # nearest/farthest distance of the y-layer row of cells
        for i in range(i_lo, i_hi + 1):
            x1, x2 = xs[i], xs[i + 1]
            nearx = max(x1 - x0, x0 - x2, 0.0)
            neary = y1
            farx = max(abs(x1 - x0), abs(x2 - x0))
            if nearx * nearx + neary * neary >= R * R:
                continue
            grad2 = ux[i, j] ** 2 + uy[i, j] ** 2
            if farx * farx + y2 * y2 <= R * R:
                total += grad2 * wy[j] * dx
            else:
                frac = circle_rect_overlap(x1, x2, y1, y2, x0, 0.0, R)
                frac /= (x2 - x1) * (y2 - y1)
                total += grad2 * wy[j] * dx * frac
    return total


def _trace_integral(field: Field, x0: float, R: float) -> float:
    """int_{x0-R}^{x0+R} u(x,0)^gamma dx on the linearly interpolated trace."""
    g = field.grid
    p = g.params
    xs = g.x
    tr = np.maximum(field.values[:, 0], 0.0)
    lo, hi = x0 - R, x0 + R
    if lo < xs[0] - 1e-12 or hi > xs[-1] + 1e-12:
        raise GridDomainError("trace ball exceeds grid extent")
    tq, wq = roots_legendre(6)
    cuts = np.unique(np.clip(np.concatenate([xs, [lo, hi]]), lo, hi))
    a, b = cuts[:-1], cuts[1:]
    keep = b > a + 1e-15
    a, b = a[keep], b[keep]
    pts = 0.5 * (a[:, None] * (1 - tq) + b[:, None] * (1 + tq))
    vals = np.interp(pts.ravel(), xs, tr).reshape(pts.shape)
    if p.gamma > 0.0:
        integ = vals ** p.gamma
    else:
        integ = (vals > 0.0).astype(float)
    return float(np.sum(0.5 * (b - a) * (integ @ wq)))


def _surface_nodes(field_grid: Grid2D, x0: float, R: float, n_nodes: int):
    alpha = field_grid.params.alpha
    t, w = roots_jacobi(n_nodes, 0.5 * (alpha - 1.0), 0.5 * (alpha - 1.0))
    theta = np.arccos(t)
    px = x0 + R * t
    py = R * np.sin(theta)
    return theta, px, py, w


def _check_ball(grid: Grid2D, x0: float, R: float):
    if R <= 0:
        raise GridDomainError("radius must be positive")
    if x0 - R < grid.x[0] - 1e-12 or x0 + R > grid.x[-1] + 1e-12 or R > grid.y[-1] + 1e-12:
        raise GridDomainError(
            f"half-ball of radius {R} about x0={x0} exceeds the grid"
        )


def surface_integral_sq(field: Field, x0: float, R: float,
                        other=None, n_nodes: int = 64) -> float:
    """int_{(dB_R)^+} y^alpha q^2 dsigma with q = u or u - p (p callable)."""
    g = field.grid
    _check_ball(g, x0, R)
    theta, px, py, w = _surface_nodes(g, x0, R, n_nodes)
    vals = field.interpolate_points(px, np.minimum(py, g.y[-1]))
    if other is not None:
        vals = vals - other(px, py)
    alpha = g.params.alpha
    return float(R ** (1.0 + alpha) * np.dot(w, vals ** 2))


def weiss(field: Field, x0: float, R: float, n_surface: int = 64) -> float:
    """Boundary adjusted energy W(R, u) at base point (x0, 0)."""
    g = field.grid
    p = g.params
    _check_ball(g, x0, R)
    vol = _dirichlet_ball(field, x0, R)
    tr = _trace_integral(field, x0, R)
    surf = surface_integral_sq(field, x0, R, n_nodes=n_surface)
    return (R ** (-p.kappa_vol) * (vol + 2.0 * tr)
            - p.beta * R ** (-p.kappa_surf) * surf)


def homogeneity_defect(field: Field, x0: float, R: float,
                       n_surface: int = 64) -> float:
    """int_{(dB_R)^+} y^alpha (u_nu - beta u / R)^2 dsigma.

    u_nu is assembled from bilinear interpolation of cell-face gradient
    components.  Scaled by 2 R^{-kappa_vol} this is the Weiss slope dW/dR.
    """
    g = field.grid
    p = g.params
    _check_ball(g, x0, R)
    u = field.values
    dx = g.dx
    # face-centered gradient grids
    xf = 0.5 * (g.x[:-1] + g.x[1:])
    yf = 0.5 * (g.y[:-1] + g.y[1:])
    ux_face = (u[1:, :] - u[:-1, :]) / dx                 # (nx, ny+1) at (xf, y)
    uy_face = (u[:, 1:] - u[:, :-1]) / np.diff(g.y)[None, :]  # (nx+1, ny) at (x, yf)
    itp_ux = RegularGridInterpolator((xf, g.y), ux_face, bounds_error=False,
                                     fill_value=None)
    itp_uy = RegularGridInterpolator((g.x, yf), uy_face, bounds_error=False,
                                     fill_value=None)
    theta, px, py, w = _surface_nodes(g, x0, R, 64 if n_surface is None else n_surface)
    pts = np.stack([px, py], axis=-1)
    gx = itp_ux(pts)
    gy = itp_uy(pts)
    uval = field.interpolate_points(px, np.minimum(py, g.y[-1]))
    unu = np.cos(theta) * gx + np.sin(theta) * gy
    q = unu - p.beta * uval / R
    return float(R ** (1.0 + p.alpha) * np.dot(w, q ** 2))


@dataclass(frozen=True)
class FunctionalSweep:
    """Radius-indexed record of W or M values with monotonicity diagnostics."""

    radii: np.ndarray
    values: np.ndarray
    forward_differences: np.ndarray
    violation_count: int
    tol_mono: np.ndarray

    def summary(self) -> dict:
        return {
            "n_radii": len(self.radii),
            "violation_count": int(self.violation_count),
            "min_value": float(np.min(self.values)),
            "max_value": float(np.max(self.values)),
            "min_forward_difference": float(np.min(self.forward_differences))
            if len(self.forward_differences) else 0.0,
        }


def _sweep(radii, values, tols) -> FunctionalSweep:
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    fd = np.diff(values)
    viol = int(np.sum(fd < -tols))
    return FunctionalSweep(radii=radii, values=values, forward_differences=fd,
                           violation_count=viol, tol_mono=tols)


def weiss_sweep(field: Field, x0: float, radii: Sequence[float],
                tol_coeff: float = 1.0) -> FunctionalSweep:
    """W over a radius list with grid-scaled monotonicity tolerance.

    The per-interval slack is tol_coeff * (h / R) * max(1, dirichlet part of
    W at R): the dominant discretization error of W scales with the cell
    size relative to the ball.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    g = field.grid
    p = g.params
    vals, scales = [], []
    for R in radii:
        vol = _dirichlet_ball(field, x0, R)
        tr = _trace_integral(field, x0, R)
        surf = surface_integral_sq(field, x0, R)
        vals.append(R ** (-p.kappa_vol) * (vol + 2.0 * tr)
                    - p.beta * R ** (-p.kappa_surf) * surf)
        scales.append(max(1.0, R ** (-p.kappa_vol) * vol))
    h = max(g.dx, float(np.max(np.diff(g.y))))
    tols = tol_coeff * h / radii[1:] * np.asarray(scales)[1:]
    return _sweep(radii, vals, tols)


def monneau(field: Field, p_eval, x0: float, R: float,
            n_surface: int = 64) -> float:
    """Weighted Monneau distance M(R, u, p) for a homogeneous candidate p.

    p_eval is either a Field on the same grid or a callable (x_array,
    y_array) -> values; the canonical candidate is the half-plane solution
    with its flux-consistent amplitude.
    """
    g = field.grid
    if isinstance(p_eval, Field):
        other = lambda px, py: p_eval.interpolate_points(px, np.minimum(py, g.y[-1]))
    else:
        other = p_eval
    surf = surface_integral_sq(field, x0, R, other=other, n_nodes=n_surface)
    return float(R ** (-g.params.kappa_surf) * surf)


def monneau_sweep(field: Field, p_eval, x0: float, radii: Sequence[float],
                  tol_coeff: float = 1.0) -> FunctionalSweep:
    radii = np.sort(np.asarray(radii, dtype=float))
    vals = [monneau(field, p_eval, x0, R) for R in radii]
    g = field.grid
    h = max(g.dx, float(np.max(np.diff(g.y))))
    scale = np.maximum(np.asarray(vals)[1:], 1e-12)
    tols = tol_coeff * h / radii[1:] * np.maximum(scale, 1e-3 * np.max(vals))
    return _sweep(radii, vals, tols)


def blowup_sequence(field: Field, x0: float, r_list: Sequence[float],
                    ref_grid: Grid2D = None, profile=None) -> dict:
    """Rescalings u_r = r^{-beta} u(x0 + r X) on a common reference grid.

    Returns the rescaled fields, successive weighted surface L2 distances at
    R = 1/2 (decreasing for a converging blow-up), and the best fit of the
    final iterate against the half-plane candidate A U(+-(x - b)) when a
    profile is supplied.
    """
    from .grid import build_grid

    g = field.grid
    p = g.params
    r_list = sorted([float(r) for r in r_list], reverse=True)
    usable, flagged = [], []
    h_min = max(g.dx, float(g.y[1]))
    for r in r_list:
        if r < 8.0 * h_min:
            flagged.append(r)
            continue
        if x0 - r < g.x[0] or x0 + r > g.x[-1] or r > g.y[-1]:
            flagged.append(r)
            continue
        usable.append(r)
    if ref_grid is None:
        ref_grid = build_grid(128, 128, 1.0, 1.0, None, p)
    fields = []
    for r in usable:
        fr = rescale_field(field, r, x0=x0, target=_shifted(ref_grid, x0))
        fields.append(Field(grid=ref_grid, values=fr.values, boundary_spec=None))
    dists = []
    for k in range(len(fields) - 1):
        diff = lambda px, py: fields[k].interpolate_points(px, np.minimum(py, ref_grid.y[-1]))
        d2 = surface_integral_sq(fields[k + 1], 0.0, 0.5, other=diff)
        dists.append(float(np.sqrt(max(d2, 0.0))))
    fit = None
    if profile is not None and fields:
        from .profile import eval_halfplane

        last = fields[-1]
        best = None
        for orient in (+1.0, -1.0):
            pu = lambda px, py: np.asarray(
                eval_halfplane(profile, orient * px, py))
            theta, px, py, w = _surface_nodes(ref_grid, 0.0, 0.5, 64)
            uv = last.interpolate_points(px, np.minimum(py, ref_grid.y[-1]))
            Uv = pu(px, py)
            alpha = p.alpha
            num = float(np.dot(w, uv * Uv))
            den = float(np.dot(w, Uv * Uv))
            A = num / den if den > 0 else 0.0
            resid = float(np.dot(w, (uv - A * Uv) ** 2))
            cand = {"orientation": orient, "amplitude": A, "residual": resid}
            if best is None or resid < best["residual"]:
                best = cand
        fit = best
    return {
        "radii": usable,
        "flagged_radii": flagged,
        "fields": fields,
        "surface_distances": dists,
        "halfplane_fit": fit,
    }


def _shifted(ref_grid: Grid2D, x0: float) -> Grid2D:
    """Reference grid translated so its x-interval is centered at x0."""
    from dataclasses import replace

    return replace(ref_grid, x=ref_grid.x + x0)
