"""Angular profile of the half-plane solution and appendix quantities.

The half-plane solution is U(t,z) = A r^beta g(theta) in polar coordinates
t = r cos(theta), z = r sin(theta), where the angular part solves the
singular ODE

    g'' + alpha cot(theta) g' + beta (alpha + beta) g = 0,
    g(0) = 1,  g(pi) = 0.

Near both endpoints the ODE has Frobenius exponents {0, 2s}; the profile is
the combination (analytic branch) + c (singular branch) at 0 whose analytic
branch at pi vanishes.  The solver shoots on c, initializing with local
series inside the endpoint offsets and integrating with DOP853 in between.
The branch split at pi is recovered from a high-order two-branch local model,
which pins the coefficient of the (pi - theta)^{2s} branch.

Two normalization conventions coexist (they differ unless the weighted slope
lambda* = lim g'(theta) sin(theta)^alpha happens to equal gamma):

* Dirichlet mode (primary): g(0) = 1, g(pi) = 0; lambda* is *measured* and
  recorded, never imposed.
* Flux mode: the amplitude A_N = (gamma/lambda*)^{1/(2-gamma)} makes
  A_N r^beta g satisfy the nonlinear flux condition
  lim y^alpha d_y u = gamma u^{gamma-1}; see :func:`amplitude_neumann`.

Both the leading singular-branch coefficient c (so g ~ 1 + c theta^{2s}) and
lambda* = 2s c are reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import GridDomainError, ParameterDomainError, SolverConvergenceError
from .params import Params

__all__ = [
    "Profile",
    "solve_profile",
    "eval_halfplane",
    "halfplane_field",
    "amplitude_neumann",
    "compute_f",
    "compute_F",
    "check_ratio_bound",
]

# cot(theta) = sum t_m theta^{2m-1}: 1/theta - theta/3 - theta^3/45 - ...
_COT_SERIES = (1.0, -1.0 / 3.0, -1.0 / 45.0, -2.0 / 945.0, -1.0 / 4725.0)


def _branch_coeffs(rho: float, alpha: float, mu: float, nterms: int = 8) -> np.ndarray:
    """Series coefficients c_k of the Frobenius branch theta^rho sum c_k theta^{2k}."""
    c = np.zeros(nterms)
    c[0] = 1.0
    for K in range(1, nterms):
        rhs = -mu * c[K - 1]
        for m in range(1, min(K, len(_COT_SERIES) - 1) + 1):
            rhs -= alpha * _COT_SERIES[m] * c[K - m] * (rho + 2 * (K - m))
        denom = (rho + 2 * K) * (rho + 2 * K - 1.0 + alpha)
        c[K] = rhs / denom
    return c


def _eval_branch(rho: float, coeffs: np.ndarray, th: np.ndarray):
    """Value and derivative of theta^rho sum c_k theta^{2k}.

    The derivative of the singular branch diverges as theta -> 0 when
    2s < 1; the infinity is propagated silently (it is the true limit).
    """
    th = np.asarray(th, dtype=float)
    val = np.zeros_like(th)
    der = np.zeros_like(th)
    with np.errstate(divide="ignore"):
        for k, ck in enumerate(coeffs):
            p = rho + 2 * k
            val += ck * th ** p
            if p != 0.0:
                der += ck * p * th ** (p - 1)
    return val, der


@dataclass(frozen=True)
class Profile:
    """Solved angular profile with series data for endpoint evaluation."""

    params: Params
    theta_nodes: np.ndarray
    g_values: np.ndarray
    g_prime: np.ndarray
    amplitude: float
    measured_slope: float          # lambda* = lim_{theta->0} g'(theta) sin(theta)^alpha
    singular_coeff: float          # c in g ~ 1 + c theta^{2s} at 0
    singular_coeff_pi: float       # b in g ~ b (pi-theta)^{2s} at pi
    analytic_coeff_pi: float       # residual analytic-branch coefficient at pi
    residual_max: float
    eps_left: float                # series panel [0, eps_left]
    eps_right: float               # series panel [pi - eps_right, pi]
    _coef_analytic: np.ndarray = field(repr=False, default=None)
    _coef_singular: np.ndarray = field(repr=False, default=None)
    _spline: CubicHermiteSpline = field(repr=False, default=None, compare=False)

    @property
    def g_at_pi(self) -> float:
        """Limit value at pi (the analytic-branch coefficient, ~0 after solve)."""
        return float(self._eval_g(np.array([np.pi]))[0])

    def _eval_g(self, th: np.ndarray):
        th = np.atleast_1d(np.asarray(th, dtype=float))
        if np.any(th < -1e-12) or np.any(th > np.pi + 1e-12):
            raise GridDomainError("theta outside [0, pi]")
        th = np.clip(th, 0.0, np.pi)
        g = np.empty_like(th)
        gp = np.empty_like(th)
        sig = 2.0 * self.params.s
        left = th <= self.eps_left
        right = th >= np.pi - self.eps_right
        mid = ~(left | right)
        if np.any(left):
            va, da = _eval_branch(0.0, self._coef_analytic, th[left])
            vs, ds = _eval_branch(sig, self._coef_singular, th[left])
            g[left] = va + self.singular_coeff * vs
            gp[left] = da + self.singular_coeff * ds
        if np.any(right):
            psi = np.pi - th[right]
            va, da = _eval_branch(0.0, self._coef_analytic, psi)
            vs, ds = _eval_branch(sig, self._coef_singular, psi)
            g[right] = self.analytic_coeff_pi * va + self.singular_coeff_pi * vs
            gp[right] = -(self.analytic_coeff_pi * da + self.singular_coeff_pi * ds)
        if np.any(mid):
            g[mid] = self._spline(th[mid])
            gp[mid] = self._spline(th[mid], 1)
        return g, gp

    def g(self, th) -> np.ndarray:
        return self._eval_g(th)[0]

    def g_deriv(self, th) -> np.ndarray:
        return self._eval_g(th)[1]

    def first_integral_residual(self) -> float:
        """Max defect of g'(th) sin(th)^a = lambda* - mu * int_0^th sin^a g.

        This is the integrated (first-integral) form of the ODE; unlike a
        difference quotient it stays well conditioned through both singular
        endpoints, so it certifies the endpoint panels too.
        """
        from scipy.special import roots_jacobi, roots_legendre

        p = self.params
        mu = p.beta * (p.alpha + p.beta)
        th = self.theta_nodes
        # first panel [0, th_0]: weight phi^alpha Gauss-Jacobi (sin^a g ~ phi^a near 0)
        tj, wj = roots_jacobi(8, 0.0, p.alpha)
        u = 0.5 * (tj + 1.0)
        wj = wj * 0.5 ** (p.alpha + 1.0)
        t0 = th[0]
        phi = t0 * u
        fsmooth = (np.sinc(phi / np.pi)) ** p.alpha * self.g(phi)
        acc = t0 ** (1.0 + p.alpha) * float(np.dot(wj, fsmooth))
        # interior panels: composite Gauss-Legendre (integrand smooth, ~psi at pi)
        tg, wg = roots_legendre(6)
        a, b = th[:-1], th[1:]
        mids = 0.5 * (a[:, None] * (1 - tg) + b[:, None] * (1 + tg))
        vals = (np.sin(mids) ** p.alpha) * self.g(mids.ravel()).reshape(mids.shape)
        panel = 0.5 * (b - a) * (vals @ wg)
        cum = acc + np.concatenate([[0.0], np.cumsum(panel)])
        lhs = self.weighted_slope_curve(th)
        rhs = self.measured_slope - mu * cum
        return float(np.max(np.abs(lhs - rhs)))

    def weighted_slope_curve(self, th) -> np.ndarray:
        """g'(theta) sin(theta)^alpha, stable through both endpoints."""
        th = np.atleast_1d(np.asarray(th, dtype=float))
        out = np.empty_like(th)
        sig = 2.0 * self.params.s
        alpha = self.params.alpha
        left = th <= self.eps_left
        right = th >= np.pi - self.eps_right
        mid = ~(left | right)
        # series forms keep the theta^{2s-1} * theta^{1-2s} product exact
        if np.any(left):
            t = th[left]
            _, da = _eval_branch(0.0, self._coef_analytic, t)
            # singular branch derivative times sin^alpha: sum over terms
            val = np.zeros_like(t)
            for k, ck in enumerate(self._coef_singular):
                p = sig + 2 * k
                val += self.singular_coeff * ck * p * t ** (p - 1 + alpha) * (
                    np.sinc(t / np.pi) ** alpha
                )
            out[left] = val + da * np.sin(t) ** alpha
        if np.any(right):
            psi = np.pi - th[right]
            val = np.zeros_like(psi)
            for k, ck in enumerate(self._coef_singular):
                p = sig + 2 * k
                val += -self.singular_coeff_pi * ck * p * psi ** (p - 1 + alpha) * (
                    np.sinc(psi / np.pi) ** alpha
                )
            out[right] = val
        if np.any(mid):
            out[mid] = self._spline(th[mid], 1) * np.sin(th[mid]) ** alpha
        return out


def _shoot_once(params: Params, c: float, eps0: float, eps1: float, rtol: float):
    alpha, beta = params.alpha, params.beta
    mu = beta * (alpha + beta)
    sig = 2.0 * params.s
    ca = _branch_coeffs(0.0, alpha, mu)
    cs = _branch_coeffs(sig, alpha, mu)
    va, da = _eval_branch(0.0, ca, np.array([eps0]))
    vs, ds = _eval_branch(sig, cs, np.array([eps0]))
    y0 = [va[0] + c * vs[0], da[0] + c * ds[0]]

    def rhs(th, y):
        return (y[1], -alpha * y[1] / np.tan(th) - mu * y[0])

    sol = solve_ivp(rhs, (eps0, np.pi - eps1), y0, method="DOP853",
                    rtol=rtol, atol=1e-14, dense_output=True)
    if not sol.success:
        raise SolverConvergenceError(
            f"adaptive integrator failed: {sol.message}",
            info={"c": c},
        )
    # two-branch split at psi = eps1
    psi = np.array([eps1])
    va_p, da_p = _eval_branch(0.0, ca, psi)
    vs_p, ds_p = _eval_branch(sig, cs, psi)
    g_end = sol.y[0, -1]
    gp_end_psi = -sol.y[1, -1]
    M = np.array([[va_p[0], vs_p[0]], [da_p[0], ds_p[0]]])
    A_pi, b_pi = np.linalg.solve(M, np.array([g_end, gp_end_psi]))
    return A_pi, b_pi, sol, ca, cs


def solve_profile(
    params: Params,
    n_nodes: int = 2000,
    eps0: float = 1e-6,
    eps_series: float = 0.05,
    rtol: float = 1e-12,
) -> Profile:
    """Dirichlet-normalized profile by shooting on the singular-branch coefficient.

    The shooting unknown is c in the local model g ~ 1 + c theta^{2s} near 0;
    the target is a vanishing analytic-branch coefficient at pi.  Since the
    ODE is linear the root is bracketed from two trial integrations and
    polished with a bracketing root solver.
    """
    shoot = lambda c: _shoot_once(params, c, eps0, eps_series, rtol)[0]
    A0 = shoot(0.0)
    A1 = shoot(1.0)
    if A1 == A0:
        raise SolverConvergenceError("shooting is insensitive to the branch coefficient")
    c_lin = -A0 / (A1 - A0)
    # expansion-based initial bracket around the linear estimate
    width = 1e-6 * max(1.0, abs(c_lin))
    lo, hi = c_lin - width, c_lin + width
    for _ in range(60):
        if shoot(lo) * shoot(hi) < 0.0:
            break
        width *= 4.0
        lo, hi = c_lin - width, c_lin + width
    else:
        raise SolverConvergenceError(
            "shooting bracket failure",
            info={"bracket": (lo, hi), "A_lo": shoot(lo), "A_hi": shoot(hi)},
        )
    c_star = brentq(shoot, lo, hi, xtol=1e-15, rtol=8.9e-16)
    A_pi, b_pi, sol, ca, cs = _shoot_once(params, c_star, eps0, eps_series, rtol)

    # endpoint-refined interior node grid (cosine clustering at both ends)
    u = np.arange(1, n_nodes) / n_nodes
    theta = np.pi * 0.5 * (1.0 - np.cos(np.pi * u))
    sig = 2.0 * params.s
    g = np.empty_like(theta)
    gp = np.empty_like(theta)
    left = theta < eps0 * 1.5
    right = theta > np.pi - eps_series
    mid = ~(left | right)
    if np.any(left):
        va, da = _eval_branch(0.0, ca, theta[left])
        vs, ds = _eval_branch(sig, cs, theta[left])
        g[left] = va + c_star * vs
        gp[left] = da + c_star * ds
    if np.any(right):
        psi = np.pi - theta[right]
        vs, ds = _eval_branch(sig, cs, psi)
        g[right] = b_pi * vs
        gp[right] = -b_pi * ds
    if np.any(mid):
        vals = sol.sol(theta[mid])
        g[mid] = vals[0]
        gp[mid] = vals[1]

    spline = CubicHermiteSpline(theta, g, gp)

    # pointwise ODE residual from a centered difference of the dense g' at
    # Chebyshev-clustered points of the smooth core; near the endpoints g is
    # only C^{2s} and a difference quotient has no headroom there, so the
    # endpoint panels are certified by the first-integral residual instead
    # (see Profile.first_integral_residual)
    mu = params.beta * (params.alpha + params.beta)
    k = np.arange(1, 64)
    a_chk, b_chk = 0.3, np.pi - 0.3
    chk = a_chk + 0.5 * (b_chk - a_chk) * (1.0 - np.cos(np.pi * k / 64))
    h = 1e-4
    gpp = (sol.sol(chk + h)[1] - sol.sol(chk - h)[1]) / (2 * h)
    resid = gpp + params.alpha / np.tan(chk) * sol.sol(chk)[1] + mu * sol.sol(chk)[0]
    residual_max = float(np.max(np.abs(resid))) if len(chk) else 0.0

    return Profile(
        params=params,
        theta_nodes=theta,
        g_values=g,
        g_prime=gp,
        amplitude=1.0,
        measured_slope=sig * c_star,
        singular_coeff=c_star,
        singular_coeff_pi=float(b_pi),
        analytic_coeff_pi=float(A_pi),
        residual_max=residual_max,
        eps_left=eps0,
        eps_right=eps_series,
        _coef_analytic=ca,
        _coef_singular=cs,
        _spline=spline,
    )


def amplitude_neumann(profile: Profile) -> float:
    """Amplitude making A r^beta g satisfy the nonlinear flux condition.

    lim y^alpha d_y (A r^beta g) = A lambda* x^{beta-2s} on x > 0 must equal
    gamma (A x^beta)^{gamma-1}, i.e. A^{2-gamma} = gamma / lambda*.
    """
    p = profile.params
    if p.gamma <= 0.0:
        raise ParameterDomainError("flux-normalized amplitude needs gamma > 0")
    lam = profile.measured_slope
    if lam <= 0.0:
        raise SolverConvergenceError(f"measured weighted slope {lam} <= 0")
    return (p.gamma / lam) ** (1.0 / (2.0 - p.gamma))


def eval_halfplane(profile: Profile, t, z, order: int = 0):
    """U(t,z) (order 0) or the t-derivative of U (order 1).

    U = A r^beta g(theta); d_t U = A r^{beta-1} (beta g cos - g' sin)
    = A r^{beta-1} f(theta) g(theta), continuous up to z=0 for t>0 and
    vanishing on the contact half-line.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    t, z = np.broadcast_arrays(t, z)
    if np.any(z < 0):
        raise GridDomainError("half-plane evaluation requires z >= 0")
    if order not in (0, 1):
        raise ParameterDomainError("order must be 0 or 1")
    beta = profile.params.beta
    A = profile.amplitude
    r = np.hypot(t, z)
    theta = np.arctan2(z, t)
    out = np.zeros_like(r)
    pos = r > 0.0
    g, gp = profile._eval_g(theta[pos])
    if order == 0:
        out[pos] = A * r[pos] ** beta * g
    else:
        # f*g form: both factors stay finite through theta = pi
        fg = beta * g * np.cos(theta[pos]) - gp * np.sin(theta[pos])
        out[pos] = A * r[pos] ** (beta - 1.0) * fg
    return out if out.shape != () and out.size > 1 else float(out.ravel()[0])


def halfplane_field(profile: Profile, grid, amplitude: float = None,
                    x0: float = 0.0, orientation: float = 1.0):
    """Sample U(orientation*(x-x0), y) * amplitude on a tensor grid."""
    from .grid import Field

    A = profile.amplitude if amplitude is None else amplitude
    T, Z = np.meshgrid(orientation * (grid.x - x0), grid.y, indexing="ij")
    vals = np.asarray(eval_halfplane(profile, T.ravel(), Z.ravel(), order=0))
    vals = (A / profile.amplitude) * vals.reshape(T.shape)
    return Field(grid=grid, values=vals, boundary_spec=None)


def compute_f(profile: Profile, theta=None):
    """f(theta) = beta cos(theta) - g'(theta) sin(theta) / g(theta).

    Returns (theta, f) arrays on the node grid with the endpoint limit
    values f(0) = beta and f(pi) = 2s - beta attached; raises if g vanishes
    at an interior node.
    """
    p = profile.params
    if theta is None:
        theta = profile.theta_nodes
    theta = np.asarray(theta, dtype=float)
    g, gp = profile._eval_g(theta)
    if np.any(g <= 0.0):
        raise SolverConvergenceError("g vanished at an interior node (defective profile)")
    f = p.beta * np.cos(theta) - gp * np.sin(theta) / g
    th_out = np.concatenate([[0.0], theta, [np.pi]])
    f_out = np.concatenate([[p.beta], f, [2.0 * p.s - p.beta]])
    return th_out, f_out


def compute_F(profile: Profile, theta=None):
    """F(theta) = r^2 U_tt / U in its cot-substituted form.

    F = (b^2-b) cos^2 + b(1-a-b) sin^2 + (2-2b-a) sin cos g'/g with endpoint
    limits F(0) = b^2 - b and F(pi) = (2s-b)(2s-b+1).
    """
    p = profile.params
    a, b = p.alpha, p.beta
    if theta is None:
        theta = profile.theta_nodes
    theta = np.asarray(theta, dtype=float)
    g, gp = profile._eval_g(theta)
    if np.any(g <= 0.0):
        raise SolverConvergenceError("g vanished at an interior node (defective profile)")
    F = ((b * b - b) * np.cos(theta) ** 2
         + b * (1.0 - a - b) * np.sin(theta) ** 2
         + (2.0 - 2.0 * b - a) * np.sin(theta) * np.cos(theta) * gp / g)
    th_out = np.concatenate([[0.0], theta, [np.pi]])
    F_out = np.concatenate([[b * b - b], F, [(2 * p.s - b) * (2 * p.s - b + 1.0)]])
    return th_out, F_out


def check_ratio_bound(profile: Profile, samples: Sequence):
    """Empirical constant K with U(tau/r, z/r) <= K U(t/r, z/r) over samples.

    Each sample is (t, tau, z) with tau <= t and the shifted scaled point in
    the annulus 1/2 <= |(tau, z)|/r <= 3/2, r^2 = t^2 + z^2.  Also checks the
    monotone ordering g(theta_1) <= g(theta_2) near theta = pi.
    """
    ratios = []
    ordering_violations = 0
    near_pi = 0
    for (t, tau, z) in samples:
        r = float(np.hypot(t, z))
        if r == 0.0 or z < 0.0:
            raise GridDomainError("sample requires z >= 0 and (t,z) != 0")
        if tau > t + 1e-15:
            raise GridDomainError("sample must have tau <= t")
        rho = float(np.hypot(tau, z)) / r
        if not (0.5 - 1e-12 <= rho <= 1.5 + 1e-12):
            raise GridDomainError(
                f"sample outside the admissible annulus (|X|/r = {rho:.4f})"
            )
        u_num = eval_halfplane(profile, tau / r, z / r)
        u_den = eval_halfplane(profile, t / r, z / r)
        if u_den <= 0.0:
            raise GridDomainError("denominator point lies on the contact set")
        ratios.append(u_num / u_den)
        th1 = np.arctan2(z / r, tau / r)
        th2 = np.arctan2(z / r, t / r)
        if th2 > 0.75 * np.pi:
            near_pi += 1
            g1 = profile.g(np.array([th1]))[0]
            g2 = profile.g(np.array([th2]))[0]
            if g1 > g2 * (1.0 + 1e-10):
                ordering_violations += 1
    return {
        "max_ratio": max(ratios) if ratios else np.nan,
        "n_samples": len(samples),
        "near_pi_samples": near_pi,
        "ordering_violations": ordering_violations,
    }
