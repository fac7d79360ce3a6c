"""Jacobi field J'' + R J = 0 integrated as the pair (log J, S = J'/J).

J grows like exp(sqrt(kappa) t), so J itself overflows near t ~ 700; the
log/Riccati pair stays O(t) and O(1).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .profiles import CurvatureProfile

MAX_NFEV = 5_000_000


class IntegrationError(RuntimeError):
    """Conjugate point, step budget exhausted, or requested range invalid."""


def series_radius(p: CurvatureProfile, tol: float) -> float:
    """Handoff radius from the origin series to the integrator."""
    t = 1e-3 if p.r_join is None else min(1e-3, p.r_join / 10.0)
    r0 = abs(p(0.0))
    # first dropped term of log J relative to log t is ~ R0**2 t**4 / 180
    while r0 * r0 * t ** 4 / 180.0 > tol and t > 1e-8:
        t *= 0.5
    return t


def origin_seed(p: CurvatureProfile, t: float) -> tuple[float, float]:
    """(log J, S) at small t from J = t - R0 t^3/6, S = 1/t - R0 t/3."""
    r0 = p(0.0)
    return math.log(t) + math.log1p(-r0 * t * t / 6.0), 1.0 / t - r0 * t / 3.0


def riccati_rhs(p: CurvatureProfile):
    def rhs(t, y):
        s = y[1]
        return [s, -s * s - p(t)]
    return rhs


def _breakpoints(p: CurvatureProfile, lo: float, hi: float) -> list[float]:
    pts = [p.r_join] if p.r_join is not None else list(p.table[0])
    return sorted({x for x in pts if lo < x < hi})


def _output_grid(p: CurvatureProfile, t0: float, r_max: float, tol: float) -> np.ndarray:
    # Hermite error ~ h^4 f''''/384; curvature sets the length scale.
    scale = math.sqrt(max(1.0, abs(p(0.0)), abs(p(r_max)), abs(p(1.0))))
    h_lin = min(0.01, 0.5 * (38.4 * tol) ** 0.25) / scale
    q = min(0.005, 0.5 * (16.0 * tol) ** 0.25)
    r_lin = max(10.0, 2.0 * (p.r_join or 0.0))
    parts = []
    a = min(1.0, r_max)
    if t0 < a:
        parts.append(np.geomspace(t0, a, int(math.ceil(math.log(a / t0) / q)) + 1))
    b = min(r_lin, r_max)
    if a < b:
        parts.append(np.linspace(a, b, int(math.ceil((b - a) / h_lin)) + 1))
    if b < r_max:
        parts.append(np.geomspace(b, r_max, int(math.ceil(math.log(r_max / b) / q)) + 1))
    parts.append(np.array(_breakpoints(p, t0, r_max) + [t0, r_max]))
    grid = np.unique(np.concatenate(parts))
    return grid[(grid >= t0) & (grid <= r_max)]


@dataclass(frozen=True, eq=False)
class WarpingSolution:
    grid: np.ndarray
    log_j: np.ndarray
    s: np.ndarray
    t_series: float
    profile: CurvatureProfile
    tol: float
    _log_j_spline: CubicHermiteSpline = field(repr=False, default=None)
    _s_spline: CubicHermiteSpline = field(repr=False, default=None)

    @property
    def r_max(self) -> float:
        return float(self.grid[-1])

    def log_j_at(self, t):
        """log J anywhere in [0, r_max]; the origin series covers t < t_series."""
        t = np.asarray(t, dtype=float)
        inner = t < self.t_series
        tt = np.where(inner, self.t_series, t)
        out = self._log_j_spline(tt)
        if np.any(inner):
            ti = np.where(inner, np.maximum(t, 1e-300), 1.0)
            series = np.log(ti) + np.log1p(-self.profile(0.0) * ti * ti / 6.0)
            out = np.where(inner, series, out)
        return out

    def s_at(self, t):
        return self._s_spline(np.asarray(t, dtype=float))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "log_j", "s"])
            for row in zip(self.grid, self.log_j, self.s):
                w.writerow([repr(float(v)) for v in row])


def solve_warping(p: CurvatureProfile, r_max: float, tol: float = 1e-10) -> WarpingSolution:
    """Integrate (log J, S) from the origin series out to ``r_max``."""
    if not 1e-14 < tol < 1e-4:
        raise ValueError(f"tol must lie in (1e-14, 1e-4), got {tol}")
    t0 = series_radius(p, tol)
    if not r_max > t0:
        raise ValueError(f"r_max={r_max} must exceed the series radius {t0}")
    grid = _output_grid(p, t0, r_max, tol)
    rhs = riccati_rhs(p)

    def conjugate(t, y):
        return y[1]
    conjugate.terminal = True
    conjugate.direction = -1

    y = np.array(origin_seed(p, t0))
    edges = [t0] + _breakpoints(p, t0, r_max) + [r_max]
    log_j = np.empty_like(grid)
    s = np.empty_like(grid)
    nfev = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (grid >= lo) & (grid <= hi)
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=0.1 * tol, atol=1e-3 * tol,
                        t_eval=grid[mask], events=conjugate)
        nfev += sol.nfev
        if sol.t_events[0].size:
            raise IntegrationError(f"S vanished at t={sol.t_events[0][0]:.6g} (conjugate point)")
        if sol.status != 0 or nfev > MAX_NFEV:
            raise IntegrationError(f"integration failed on [{lo}, {hi}]: {sol.message}")
        log_j[mask] = sol.y[0]
        s[mask] = sol.y[1]
        y = sol.y[:, -1]
    if np.any(s <= 0):
        raise IntegrationError("S became nonpositive")
    ds = -s * s - p.values(grid)
    return WarpingSolution(
        grid, log_j, s, t0, p, tol,
        CubicHermiteSpline(grid, log_j, s),
        CubicHermiteSpline(grid, s, ds),
    )


def eval_warping(w: WarpingSolution, t: float) -> tuple[float, float]:
    if not w.t_series <= t <= w.r_max:
        raise ValueError(f"t={t} outside [{w.t_series}, {w.r_max}]")
    i = np.searchsorted(w.grid, t)
    if i < w.grid.size and w.grid[i] == t:
        return float(w.log_j[i]), float(w.s[i])
    return float(w._log_j_spline(t)), float(w._s_spline(t))


def riccati_residual(w: WarpingSolution) -> np.ndarray:
    """Per-interval |S(b) - S(a) + int_a^b (S^2 + R) dt| relative to int_a^b (S^2 + |R|) dt.

    Quadrature is 3-point Gauss on the interpolant.
    """
    a, b = w.grid[:-1], w.grid[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    weights = np.array([5.0, 8.0, 5.0]) / 9.0
    integral = np.zeros_like(a)
    scale = np.zeros_like(a)
    for x, wt in zip(nodes, weights):
        t = mid + half * x
        s2, r = w.s_at(t) ** 2, w.profile.values(t)
        integral += wt * (s2 + r)
        scale += wt * (s2 + np.abs(r))
    return np.abs(np.diff(w.s) + half * integral) / (half * scale)


class TailFitError(RuntimeError):
    pass


def riccati_tail_fit(w: WarpingSolution, t_lo: float, t_hi: float) -> tuple[float, float]:
    """Least-squares fit S ~ a - b/t^2 on [t_lo, t_hi]; returns (a^2, 2ab)."""
    w.profile.require_tail()
    if not (w.t_series <= t_lo < t_hi <= w.r_max):
        raise ValueError(f"fit window [{t_lo}, {t_hi}] outside the solution range")
    # uniform samples: the discrete version of the L^2(dt) fit on the window
    t = np.linspace(t_lo, t_hi, 2001)
    s = w.s_at(t)
    design = np.column_stack([np.ones_like(t), -1.0 / t ** 2])
    (a, b), *_ = np.linalg.lstsq(design, s, rcond=None)
    resid = np.max(np.abs(design @ np.array([a, b]) - s))
    # the next term of the expansion is -(b/a)/t^3: relative size 1/(a t_lo)
    allowed = abs(b) / t_lo ** 2 * min(0.1, 2.0 / (abs(a) * t_lo)) + 100.0 * w.tol
    if resid > allowed:
        raise TailFitError(
            f"residual {resid:.3g} exceeds {allowed:.3g}: asymptote not reached on [{t_lo}, {t_hi}]"
        )
    return float(a * a), float(2.0 * a * b)
