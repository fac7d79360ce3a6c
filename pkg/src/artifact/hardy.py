"""Supercritical inverse-square well and Hardy weights of rotationally symmetric spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .ode import WarpingSolution, eval_warping, solve_warping
from .profiles import CurvatureProfile, ProfileKind

RTOL = 1e-12
ATOL = 1e-13


@dataclass(frozen=True)
class HardyProblem:
    """-phi'' - (1 + delta)/(4 x^2) phi = lam phi on [R, 2kR], phi = 0 at both ends."""

    R: float
    k: float
    delta: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not self.k > 2:
            raise ValueError(f"k must exceed 2, got {self.k}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def coupling(self) -> float:
        return (1.0 + self.delta) / 4.0

    @property
    def right(self) -> float:
        return 2.0 * self.k * self.R


def minimal_stretch(delta: float) -> float:
    """Smallest k making 3 - (delta/4) log(k/2) negative."""
    return 2.0 * math.exp(12.0 / delta)


def test_bound(delta: float, k: float) -> float:
    return 3.0 - delta / 4.0 * math.log(k / 2.0)


# --------------------------------------------------------------- test function

def _cutoff(p: HardyProblem, x):
    R, k = p.R, p.k
    x = np.asarray(x, dtype=float)
    chi = np.where(x < 2 * R, (x - R) / R, np.where(x <= k * R, 1.0, -(x - 2 * k * R) / (k * R)))
    dchi = np.where(x < 2 * R, 1.0 / R, np.where(x <= k * R, 0.0, -1.0 / (k * R)))
    return chi, dchi


def test_function(p: HardyProblem, x):
    """phi = chi(x) sqrt(x) and its derivative."""
    chi, dchi = _cutoff(p, x)
    sx = np.sqrt(x)
    return chi * sx, dchi * sx + chi / (2.0 * sx)


def _log_quad(f, a: float, b: float) -> float:
    # integrate in s = log x; the integrands live on scales from R to kR
    val, _ = quad(lambda s: f(math.exp(s)) * math.exp(s), math.log(a), math.log(b),
                  epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def _pieces(p: HardyProblem):
    return [(p.R, 2 * p.R), (2 * p.R, p.k * p.R), (p.k * p.R, p.right)]


def hardy_test_quotient(p: HardyProblem) -> tuple[float, float]:
    """(quadratic form of the explicit test function, the bound 3 - (delta/4) log(k/2))."""
    c = p.coupling

    def integrand(x):
        phi, dphi = test_function(p, x)
        return float(dphi * dphi - c / (x * x) * phi * phi)

    numerator = sum(_log_quad(integrand, a, b) for a, b in _pieces(p))
    return numerator, test_bound(p.delta, p.k)


def test_function_norm(p: HardyProblem) -> float:
    """int phi^2 over [R, 2kR]."""
    return sum(_log_quad(lambda x: float(test_function(p, x)[0] ** 2), a, b) for a, b in _pieces(p))


# --------------------------------------------------------------- eigenvalue

def _phase_rhs(c: float, lam: float):
    # Prufer pair phi = rho sin(theta), x phi' = rho cos(theta), in s = log x
    def rhs(s, y):
        q = c + lam * math.exp(2.0 * s)
        sn, cs = math.sin(y[0]), math.cos(y[0])
        return [cs * cs - sn * cs + q * sn * sn, sn * cs * (1.0 - q) + cs * cs]
    return rhs


def _nodes_below(p: HardyProblem, lam: float) -> int:
    """floor(theta(2kR)/pi): number of eigenvalues below lam.

    Integration stops once the phase is trapped in a forbidden tail, where it can
    no longer cross a multiple of pi.
    """
    c = p.coupling
    rhs = _phase_rhs(c, lam)
    s, s_end = math.log(p.R), math.log(p.right)
    y = np.array([0.0, 0.0])
    while s < s_end:
        s_next = min(s + 0.25, s_end)
        sol = solve_ivp(rhs, (s, s_next), y, method="DOP853", rtol=RTOL, atol=ATOL)
        if sol.status != 0:
            raise RuntimeError(f"phase integration failed: {sol.message}")
        y, s = sol.y[:, -1], s_next
        q = c + lam * math.exp(2.0 * s)
        if q < -25.0:
            # the decaying direction tan(theta) = -t_u is an unstable equilibrium
            # moving towards the next multiple of pi; below it theta is trapped
            t_u = (1.0 + math.sqrt(1.0 - 4.0 * q)) / (-2.0 * q)
            if y[0] % math.pi < math.pi - math.atan(t_u) - 1e-3:
                break
    return int(math.floor(y[0] / math.pi))


def _bisect_eigenvalue(p: HardyProblem, index: int, rtol: float) -> float:
    lo = -p.coupling / p.R ** 2          # min of the potential
    hi = 0.0
    if _nodes_below(p, hi) <= index:
        hi = 1.0 / p.R ** 2
        while _nodes_below(p, hi) <= index:
            lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if _nodes_below(p, mid) > index:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def hardy_first_eigenvalue(p: HardyProblem, tol: float = 1e-12) -> float:
    """Signed ground-state Dirichlet eigenvalue; ``tol`` is relative."""
    return _bisect_eigenvalue(p, 0, tol)


@dataclass(frozen=True, eq=False)
class HardyEigenpair:
    problem: HardyProblem
    eigenvalue: float
    _forward: object
    _backward: object
    _x_match: float
    _shift: float

    def evaluate(self, x):
        """(phi, phi') with phi(R) = 0, phi'(R) = 1/R scaled so both halves agree."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = np.log(x)
        out_phi = np.empty_like(x)
        out_dphi = np.empty_like(x)
        left = x <= self._x_match
        for sel, sol, shift in ((left, self._forward, 0.0), (~left, self._backward, self._shift)):
            if np.any(sel):
                theta, log_rho = sol(s[sel])
                rho = np.exp(log_rho + shift)
                out_phi[sel] = rho * np.sin(theta)
                out_dphi[sel] = rho * np.cos(theta) / x[sel]
        return out_phi, out_dphi


def hardy_eigenpair(p: HardyProblem, tol: float = 1e-12) -> HardyEigenpair:
    """Ground state, with the eigenfunction matched at the turning point."""
    lam = hardy_first_eigenvalue(p, tol)
    c = p.coupling
    x_m = math.sqrt(p.R * p.right)
    if lam < 0:
        x_m = min(max(math.sqrt(c / -lam), p.R * 1.01), p.right / 1.01)
    rhs = _phase_rhs(c, lam)
    s0, s1, sm = math.log(p.R), math.log(p.right), math.log(x_m)
    fwd = solve_ivp(rhs, (s0, sm), [0.0, 0.0], method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True)
    bwd = solve_ivp(rhs, (s1, sm), [math.pi, 0.0], method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True)
    sign = 1.0 if math.sin(fwd.y[0, -1]) * math.sin(bwd.y[0, -1]) >= 0 else -1.0
    if sign < 0:
        raise RuntimeError("eigenfunction halves disagree in sign; eigenvalue not converged")
    shift = fwd.y[1, -1] - bwd.y[1, -1]
    return HardyEigenpair(p, lam, fwd.sol, bwd.sol, x_m, shift)


# --------------------------------------------------------------- Hardy weight

@dataclass(frozen=True, eq=False)
class RotSymManifold:
    """(R^n, dr^2 + h(r)^2 g_sphere) with radial curvature K = -h''/h."""

    n: int
    curvature: CurvatureProfile
    warping_h: WarpingSolution

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if self.warping_h.profile is not self.curvature:
            raise ValueError("warping was not generated by this curvature")

    def a_ratio(self, r):
        """A = h'/h."""
        return self.warping_h.s_at(r)

    def log_h(self, r):
        return self.warping_h.log_j_at(r)


def make_manifold(n: int, curvature: CurvatureProfile, r_max: float, tol: float = 1e-10) -> RotSymManifold:
    if curvature.kind != ProfileKind.RADIAL_CURVATURE and curvature.has_tail:
        curvature = CurvatureProfile(curvature.kappa, curvature.beta, curvature.r_join,
                                     curvature.inner_value, ProfileKind.RADIAL_CURVATURE)
    return RotSymManifold(n, curvature, solve_warping(curvature, r_max, tol))


def weight_from(n: int, r, a, k):
    return 1.0 / (4.0 * r * r) + (n - 1) * (n - 3) / 4.0 * a * a - (n - 1) / 2.0 * k


def hardy_weight(man: RotSymManifold, r: float) -> float:
    if not man.warping_h.t_series <= r <= man.warping_h.r_max:
        raise ValueError(f"r={r} outside the warping range")
    _, a = eval_warping(man.warping_h, r)
    return float(weight_from(man.n, r, a, man.curvature(r)))


def hardy_weight_values(man: RotSymManifold, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return weight_from(man.n, r, man.a_ratio(r), man.curvature.values(r))


@dataclass(frozen=True)
class Bump:
    """Radial C^2 bump amp * (1 - ((r - center)/width)^2)^3 on |r - center| < width."""

    center: float
    width: float
    amplitude: float = 1.0

    def __call__(self, r):
        z = (np.asarray(r, dtype=float) - self.center) / self.width
        inside = np.abs(z) < 1
        base = np.where(inside, 1.0 - z * z, 0.0)
        u = self.amplitude * base ** 3
        du = self.amplitude * (-6.0 * z / self.width) * base ** 2
        return u, du

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.width, self.center + self.width


@dataclass(frozen=True)
class HardyCheck:
    lhs: float
    rhs_interior: float
    rhs_boundary: float

    def holds(self, slack: float = 1e-8) -> bool:
        return (self.lhs - self.rhs_interior - self.rhs_boundary >= -slack
                and self.lhs - self.rhs_interior >= -slack)


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _radial_integral(man: RotSymManifold, f, a: float, b: float) -> float:
    """sphere_area * int_a^b f(r) h(r)^{n-1} dr, f vectorized.

    The warping interpolant is piecewise cubic, so panels follow its knots and
    each gets a 10-point Gauss rule.
    """
    grid = man.warping_h.grid
    edges = np.union1d(grid[(grid > a) & (grid < b)], [a, b])
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    r = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    log_d = (man.n - 1) * man.log_h(r)
    ref = float(np.max(log_d))
    vals = f(r) * np.exp(log_d - ref)
    total = float(np.sum((vals.reshape(mid.size, -1) * _GL_W).sum(axis=1) * half))
    return sphere_area(man.n) * total * math.exp(ref)


def verify_hardy_inequality(man: RotSymManifold, R: float, u: Bump) -> HardyCheck:
    """Energy, interior Hardy-weight term and boundary term outside the ball B(R)."""
    w = man.warping_h
    lo, hi = u.support
    if hi > w.r_max or lo < 0:
        raise ValueError(f"bump support {u.support} not inside [0, {w.r_max}]")
    if not R >= w.t_series:
        raise ValueError(f"R={R} below the series radius")
    a_R = float(man.a_ratio(R))
    if a_R < 1.0 / R * (1 - 1e-12):
        raise ValueError(f"mean-curvature hypothesis fails: A(R)={a_R} < 1/R={1.0 / R}")
    a = max(lo, R)
    if a >= hi:
        return HardyCheck(0.0, 0.0, 0.0)
    lhs = _radial_integral(man, lambda r: u(r)[1] ** 2, a, hi)
    interior = _radial_integral(
        man, lambda r: hardy_weight_values(man, r) * u(r)[0] ** 2, a, hi)
    u_R = float(u(R)[0])
    n = man.n
    boundary = 0.5 * ((n - 1) * a_R - 1.0 / R) * u_R * u_R * math.exp((n - 1) * float(man.log_h(R))) \
        * sphere_area(n)
    return HardyCheck(lhs, interior, boundary)
