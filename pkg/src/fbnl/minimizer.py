"""Energy minimization over nonnegative fields and free boundary measurement.

The discrete energy is J(v) = 1/2 sum c (dv)^2 + sum_i w_i (v_i + delta)^gamma
over the trace, minimized subject to Dirichlet data on the lateral/top sides
and v >= 0 on the bottom.  Each outer iteration linearizes the concave
penalty at the current iterate, so the inner problem is a quadratic with
bottom flux data gamma (u_i + delta)^{gamma-1}; since the linearization
majorizes the penalty, exact inner solves make the outer energy
non-increasing (an energy increase therefore aborts the run).  The inner
quadratic is solved exactly over {v >= 0 on the bottom} by pin/release
active-set cycles, and the regularization delta is driven down a strictly
decreasing continuation schedule.

At gamma = 0 the flux term is dropped on the positivity set (cavitation
convention) and the energy comparison uses the indicator term; contact is
then grown by accept/revert trial pinning.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ContactOscillationError,
    EnergyIncreaseError,
    GridDomainError,
    ParameterDomainError,
)
from .grid import BoundarySpec, Field, Grid2D
from .solver import assemble, _cg_solve, discrete_energy

__all__ = [
    "MinimizeConfig",
    "MinimizeResult",
    "FreeBoundaryReport",
    "minimize_energy",
    "extract_free_boundary",
    "measure_nondegeneracy",
    "measure_density",
    "measure_flatness",
]


@dataclass(frozen=True)
class MinimizeConfig:
    """Continuation schedule and thresholds for a minimization run."""

    delta_schedule: tuple = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    max_outer: int = 120
    descent_tol: float = 1e-10
    fb_threshold: Optional[float] = None  # default 10 * delta floor
    cg_rtol: float = 1e-10

    def __post_init__(self):
        ds = tuple(self.delta_schedule)
        if len(ds) == 0 or any(d <= 0 for d in ds):
            raise ParameterDomainError("delta schedule must be positive")
        if any(b >= a for a, b in zip(ds, ds[1:])):
            raise ParameterDomainError("delta schedule must be strictly decreasing")
        if self.threshold <= 0:
            raise ParameterDomainError("fb_threshold must be positive")

    @property
    def threshold(self) -> float:
        if self.fb_threshold is not None:
            return self.fb_threshold
        return 10.0 * self.delta_schedule[-1]


@dataclass(frozen=True)
class MinimizeResult:
    field: Field
    energy_log: list
    converged: bool
    outer_iterations: int
    final_delta: float


@dataclass(frozen=True)
class FreeBoundaryReport:
    """Free boundary locations and contact-set measurements on the trace."""

    fb_points: np.ndarray          # sub-cell crossings of the threshold
    contact_measure: float         # total length of {u <= threshold}
    contact_intervals: list        # [(a, b)] intervals of the contact set
    threshold: float
    density_ratios: dict = dfield(default_factory=dict)
    growth_fit: dict = dfield(default_factory=dict)


def _solve_inner(A_full, b_full, bottom_ids, x_prev, cg_rtol):
    """Exact minimizer of 1/2 v'Av - b'v subject to v >= 0 on bottom nodes.

    Pin/release active set: pinned nodes are fixed at zero; a pinned node is
    released when its KKT residual (Av - b)_i turns negative.
    """
    n = A_full.shape[0]
    pinned = np.zeros(n, dtype=bool)
    is_bottom = np.zeros(n, dtype=bool)
    is_bottom[bottom_ids] = True
    x = np.zeros(n) if x_prev is None else x_prev.copy()
    pinned[is_bottom & (x <= 0.0)] = False  # start all free; pins accrue below
    for _ in range(60):
        free = ~pinned
        idx_free = np.where(free)[0]
        A_ff = A_full[idx_free][:, idx_free]
        b_f = b_full[idx_free]
        xf = _cg_solve(A_ff, b_f, x0=x[idx_free], rtol=cg_rtol)
        x = np.zeros(n)
        x[idx_free] = xf
        # pin violated bottom nodes
        viol = is_bottom & (x < 0.0)
        # release pinned nodes with negative multiplier
        resid = A_full @ x - b_full
        rel = pinned & (resid < -1e-12)
        if not viol.any() and not rel.any():
            return x, pinned
        pinned = (pinned | viol) & ~rel
    raise ContactOscillationError(
        "active-set pin/release cycle did not stabilize",
        info={"pinned_count": int(pinned.sum())},
    )


def minimize_energy(grid: Grid2D, bc: BoundarySpec, cfg: MinimizeConfig = None):
    """Minimize the discrete penalized energy with free bottom boundary.

    ``bc`` provides the Dirichlet data on left/right/top (its bottom entries
    are ignored); the bottom condition emerges variationally.  Returns a
    MinimizeResult with the final iterate and the energy log, where each log
    row is (delta, outer_index, J_delta, J_raw).
    """
    cfg = cfg or MinimizeConfig()
    p = grid.params
    if np.min(bc.left) < 0 or np.min(bc.right) < 0 or np.min(bc.top) < 0:
        raise ParameterDomainError("boundary data must be nonnegative")
    nxn = grid.nx + 1
    thr = cfg.threshold
    trace = np.zeros(nxn)
    energy_log = []
    x_prev = None
    field = None
    outer_total = 0
    w = grid.cv_width_x()
    last_masks = []
    for delta in cfg.delta_schedule:
        J_prev = None
        for it in range(cfg.max_outer):
            outer_total += 1
            if p.gamma > 0.0:
                flux = p.gamma * (np.maximum(trace, 0.0) + delta) ** (p.gamma - 1.0)
            else:
                flux = np.zeros(nxn)
            bc_it = BoundarySpec(left=bc.left, right=bc.right, top=bc.top,
                                 bottom_kind="flux", bottom_values=flux)
            A_full, b_full, index, unknown, dval = assemble(grid, bc_it)
            bottom_ids = index[1:-1, 0]
            x, pinned = _solve_inner(A_full, b_full, bottom_ids, x_prev, cfg.cg_rtol)
            vals = dval.copy()
            vals[unknown] = x
            vals = np.maximum(vals, 0.0)
            field = Field(grid=grid, values=vals, boundary_spec=bc_it)
            trace_new = vals[:, 0]
            e = discrete_energy(field, delta=delta, fb_threshold=thr)
            e_raw = discrete_energy(field, delta=0.0, fb_threshold=thr)
            J = e["total"]
            energy_log.append((delta, it, J, e_raw["total"]))
            if J_prev is not None and J > J_prev + 1e-11 * (1.0 + abs(J_prev)):
                raise EnergyIncreaseError(
                    f"energy increased within a continuation stage "
                    f"({J_prev} -> {J} at delta={delta})",
                    info={"previous": J_prev, "current": J, "delta": delta,
                          "outer": it},
                )
            mask = trace_new > thr
            mask_key = mask.tobytes()
            oscillating = (len(last_masks) >= 3
                           and mask_key == last_masks[-2]
                           and mask_key != last_masks[-1])
            last_masks.append(mask_key)
            x_prev = x
            stable = (J_prev is not None
                      and abs(J_prev - J) <= cfg.descent_tol * (1.0 + abs(J))
                      and len(last_masks) >= 2
                      and mask_key == last_masks[-2])
            trace = trace_new
            if stable:
                break
            if it == cfg.max_outer - 1 and oscillating:
                raise ContactOscillationError(
                    "contact set alternated past the iteration cap",
                    info={"delta": delta},
                )
            J_prev = J
    if p.gamma == 0.0:
        field, energy_log = _cavitation_polish(grid, bc, cfg, field, energy_log)
    return MinimizeResult(field=field, energy_log=energy_log, converged=True,
                          outer_iterations=outer_total,
                          final_delta=cfg.delta_schedule[-1])


def _cavitation_polish(grid, bc, cfg, field, energy_log):
    """gamma = 0: grow contact by trial pinning while the indicator energy drops."""
    thr = cfg.threshold
    for _ in range(cfg.max_outer):
        trace = field.values[:, 0]
        candidates = (trace <= max(thr, float(np.max(trace)) * 1e-3)) & (trace > 0.0)
        candidates[0] = candidates[-1] = False
        if not candidates.any():
            break
        mask = (trace > 0.0) & ~candidates
        bc_try = BoundarySpec(left=bc.left, right=bc.right, top=bc.top,
                              bottom_kind="mixed",
                              bottom_values=np.zeros(grid.nx + 1),
                              bottom_mask=mask,
                              bottom_dirichlet=np.zeros(grid.nx + 1))
        from .solver import solve_mixed

        trial = solve_mixed(grid, bc_try, rtol=cfg.cg_rtol)
        vals = np.maximum(trial.values, 0.0)
        trial = Field(grid=grid, values=vals, boundary_spec=bc_try)
        e_old = discrete_energy(field, delta=0.0, fb_threshold=thr)["total"]
        e_new = discrete_energy(trial, delta=0.0, fb_threshold=thr)["total"]
        if e_new < e_old - 1e-14:
            field = trial
            energy_log.append((0.0, len(energy_log), e_new, e_new))
        else:
            break
    return field, energy_log


def extract_free_boundary(field: Field, cfg: MinimizeConfig = None) -> FreeBoundaryReport:
    """Sub-cell free boundary points and contact measure from the trace."""
    cfg = cfg or MinimizeConfig()
    thr = cfg.threshold
    xs = field.grid.x
    tr = field.values[:, 0]
    above = tr > thr
    crossings = []
    for i in range(len(xs) - 1):
        if above[i] != above[i + 1]:
            t = (thr - tr[i]) / (tr[i + 1] - tr[i])
            crossings.append(float(xs[i] + t * (xs[i + 1] - xs[i])))
    # contact intervals with partial-cell correction
    intervals = []
    start = None
    for i in range(len(xs)):
        if not above[i] and start is None:
            if i == 0:
                start = xs[0]
            else:
                t = (thr - tr[i - 1]) / (tr[i] - tr[i - 1])
                start = xs[i - 1] + t * (xs[i] - xs[i - 1])
        if above[i] and start is not None:
            t = (thr - tr[i - 1]) / (tr[i] - tr[i - 1])
            intervals.append((float(start), float(xs[i - 1] + t * (xs[i] - xs[i - 1]))))
            start = None
    if start is not None:
        intervals.append((float(start), float(xs[-1])))
    measure = float(sum(b - a for a, b in intervals))
    return FreeBoundaryReport(
        fb_points=np.asarray(crossings),
        contact_measure=measure,
        contact_intervals=intervals,
        threshold=thr,
    )


def _sup_in_ball(field: Field, x0: float, r: float) -> float:
    xs = field.grid.x
    tr = field.values[:, 0]
    lo, hi = x0 - r, x0 + r
    if lo < xs[0] - 1e-12 or hi > xs[-1] + 1e-12:
        raise GridDomainError("radius exceeds the trace window")
    sel = (xs >= lo) & (xs <= hi)
    cand = [np.interp(lo, xs, tr), np.interp(hi, xs, tr)]
    if sel.any():
        cand.append(float(np.max(tr[sel])))
    return float(max(cand))


def measure_nondegeneracy(field: Field, report: FreeBoundaryReport,
                          radii: Sequence[float]) -> dict:
    """Least-squares fit of log sup_{B_r} u(.,0) vs log r at each FB point.

    The slope is the measured growth exponent (beta for the exact half-plane
    trace); the intercept exponential is the constant surrogate.
    """
    radii = np.asarray(sorted(radii), dtype=float)
    if len(radii) < 4:
        raise ParameterDomainError("need at least 4 usable radii")
    if len(report.fb_points) == 0:
        raise GridDomainError("free boundary is empty")
    fits = {}
    for x0 in report.fb_points:
        sups = np.array([_sup_in_ball(field, x0, r) for r in radii])
        ok = sups > 0
        if ok.sum() < 4:
            raise GridDomainError("fewer than 4 radii with positive sup")
        slope, intercept = np.polyfit(np.log(radii[ok]), np.log(sups[ok]), 1)
        fits[float(x0)] = {"slope": float(slope),
                           "constant": float(np.exp(intercept)),
                           "radii": radii[ok]}
    return fits


def measure_density(field: Field, report: FreeBoundaryReport,
                    radii: Sequence[float]) -> dict:
    """Contact length within B_r(x0) over |B_r| = 2r, per FB point and radius."""
    xs = field.grid.x
    radii = np.asarray(sorted(radii), dtype=float)
    out = {}
    for x0 in report.fb_points:
        ratios = []
        for r in radii:
            lo, hi = x0 - r, x0 + r
            if lo < xs[0] - 1e-12 or hi > xs[-1] + 1e-12:
                raise GridDomainError("radius exceeds the trace window")
            length = 0.0
            for (a, b) in report.contact_intervals:
                length += max(0.0, min(b, hi) - max(a, lo))
            ratios.append(length / (2.0 * r))
        out[float(x0)] = {"radii": radii, "ratios": np.asarray(ratios),
                          "inf_ratio": float(np.min(ratios))}
    return out


def measure_flatness(field: Field, x0: float, scales: Sequence[float],
                     threshold: float = None) -> dict:
    """Smallest flatness width per scale: the trace sandwich
    {x <= x0 - eps*rho} subset {u=0} subset {x <= x0 + eps*rho}."""
    scales = sorted([float(s) for s in scales], reverse=True)
    if len(scales) < 4:
        raise GridDomainError("need a window of at least 4 scales")
    thr = threshold if threshold is not None else MinimizeConfig().threshold
    xs = field.grid.x
    tr = field.values[:, 0]
    eps = []
    for rho in scales:
        lo, hi = x0 - rho, x0 + rho
        if lo < xs[0] - 1e-12 or hi > xs[-1] + 1e-12:
            raise GridDomainError("scale window exceeds the trace")
        sel = (xs >= lo) & (xs <= hi)
        xw = xs[sel]
        tw = tr[sel]
        contact = tw <= thr
        positive = ~contact
        x_cmax = np.max(xw[contact]) if contact.any() else lo
        x_pmin = np.min(xw[positive]) if positive.any() else hi
        e = max((x_cmax - x0) / rho, (x0 - x_pmin) / rho, 0.0)
        eps.append(min(e, 1.0))
    return {"scales": scales, "eps": eps}
