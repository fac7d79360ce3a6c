"""Radial Dirichlet spectrum of model spaces.

The weighted radial operator -h'' - (n-1) S h' is unitarily equivalent,
via u = J^{(n-1)/2} h, to the Schrodinger operator -u'' + V u with

    V = (n-1)(n-3)/4 * S^2 - (n-1)/2 * R.

Everything here works with the Prufer phase of u (u = rho sin(theta),
u' = rho cos(theta)), which never overflows no matter how large J gets.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .ode import IntegrationError, WarpingSolution, _breakpoints, eval_warping

PHASE_RTOL = 1e-11
PHASE_ATOL = 1e-12


class EigenError(RuntimeError):
    """Bracket failure or non-convergence of a spectral solve."""


@dataclass(frozen=True, eq=False)
class ModelSpace:
    n: int
    warping: WarpingSolution

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")

    @property
    def profile(self):
        return self.warping.profile

    @property
    def essential_bottom(self) -> float:
        self.profile.require_tail()
        return (self.n - 1) ** 2 * self.profile.kappa / 4.0

    def log_density(self, r):
        """log of J^{n-1}, the radial volume density (without the sphere area)."""
        return (self.n - 1) * self.warping.log_j_at(r)


def potential_from(n: int, s, r_min):
    return (n - 1) * (n - 3) / 4.0 * s * s - (n - 1) / 2.0 * r_min


def effective_potential(m: ModelSpace, x: float) -> float:
    if x < m.warping.t_series:
        raise ValueError(f"x={x} below the series radius {m.warping.t_series}")
    _, s = eval_warping(m.warping, x)
    return float(potential_from(m.n, s, m.profile(x)))


def potential_values(m: ModelSpace, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return potential_from(m.n, m.warping.s_at(x), m.profile.values(x))


def _max_step(energy: float) -> float:
    # a fraction of the oscillation wavelength pi / sqrt(E - V); V >= 0 off the
    # origin for n >= 3, and the error control takes over near a singular origin
    return 0.5 * math.pi / math.sqrt(max(energy, 1.0))


def _phase_system(n: int, profile, energy: float, with_amplitude: bool) -> Callable:
    a = (n - 1) * (n - 3) / 4.0
    b = (n - 1) / 2.0

    def rhs(t, y):
        s, theta = y[0], y[1]
        rr = profile(t)
        v = a * s * s - b * rr
        sn, cs = math.sin(theta), math.cos(theta)
        out = [-s * s - rr, cs * cs + (energy - v) * sn * sn]
        if with_amplitude:
            out.append(s)                                   # log J
            out.append((1.0 + v - energy) * sn * cs)        # log rho
        return out
    return rhs


def _integrate_phase(m: ModelSpace, energy: float, t0: float, y0, t_stop: float,
                     t_eval=None, dense: bool = False, with_amplitude: bool = False):
    """Integrate (S, theta[, log J, log rho]) from t0 to t_stop, splitting at curvature kinks.

    Returns the end state, the dense pieces (lo, hi, sol) if requested, and the
    states at ``t_eval`` (columns in increasing t) if given.
    """
    rhs = _phase_system(m.n, m.profile, energy, with_amplitude)
    edges = [t0] + _breakpoints(m.profile, t0, t_stop) + [t_stop]
    want = None if t_eval is None else np.unique(np.asarray(t_eval, dtype=float))
    y = np.asarray(y0, dtype=float)
    pieces, values = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        te = np.array([hi])
        if want is not None:
            inside = want[(want > lo) & (want < hi)]
            te = np.concatenate([inside, [hi]])
            if lo == t0 and want.size and want[0] == t0:
                values.append(y[:, None])
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=PHASE_RTOL, atol=PHASE_ATOL,
                        max_step=_max_step(energy), t_eval=te, dense_output=dense)
        if sol.status != 0:
            raise IntegrationError(f"phase integration failed on [{lo}, {hi}]: {sol.message}")
        if dense:
            pieces.append((lo, hi, sol.sol))
        if want is not None:
            keep = np.isin(sol.t, want)
            values.append(sol.y[:, keep])
        y = sol.y[:, -1]
    return y, pieces, (np.concatenate(values, axis=1) if values else None)


# ---------------------------------------------------------------- eigenpairs

@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalue: float
    radius: float
    h_samples: np.ndarray          # shape (N, 2): columns r, h1
    node_count: int
    eps_origin: float
    tol: float
    n: int
    boundary_residual: float       # |h(L)| / max|h|
    _evaluate: Callable = field(repr=False, default=None)

    def evaluate(self, r):
        """(h, h') at radii in [0, L], from the dense phase solution."""
        return self._evaluate(np.asarray(r, dtype=float))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "h1"])
            for r, h in self.h_samples:
                w.writerow([repr(float(r)), repr(float(h))])


def _center_data(m: ModelSpace, lam: float):
    """Phase-state seed at the series radius for h(0)=1, h'(0)=0, h''(0) = -lam/n."""
    w = m.warping
    t = w.t_series
    log_j, s = w.log_j[0], w.s[0]
    h = 1.0 - lam * t * t / (2 * m.n)
    dh = -lam * t / m.n
    a = (m.n - 1) / 2.0
    du_scaled = dh + a * s * h          # u' / J^a
    theta = math.atan2(h, du_scaled)
    log_rho = a * log_j + math.log(math.hypot(h, du_scaled))
    return t, [s, theta, log_j, log_rho]


def _final_phase(m: ModelSpace, lam: float, L: float) -> float:
    t0, y0 = _center_data(m, lam)
    y, _, _ = _integrate_phase(m, lam, t0, y0[:2], L)
    return float(y[1])


def dirichlet_eigen(m: ModelSpace, L: float, tol: float = 1e-9, index: int = 0) -> EigenResult:
    """Dirichlet eigenpair number ``index`` (0 = ground state) of the ball of radius L."""
    w = m.warping
    if not w.t_series < L <= w.r_max:
        raise EigenError(f"L={L} outside the warping range ({w.t_series}, {w.r_max}]")
    target = (index + 1) * math.pi

    def g(lam):
        return _final_phase(m, lam, L) - target

    lo, hi = 0.0, max(1.0, 2.0 * potential_values(m, [L])[0])
    if g(lo) >= 0:
        raise EigenError("phase at lambda=0 already past the target (bracket failure)")
    for _ in range(80):
        if g(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise EigenError(f"could not bracket eigenvalue {index} on B({L})")
    try:
        lam = brentq(g, lo, hi, xtol=0.25 * tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    except RuntimeError as exc:
        raise EigenError(f"eigenvalue iteration did not converge: {exc}") from exc
    return _eigenfunction(m, lam, L, tol, index)


def first_dirichlet_eigen(m: ModelSpace, L: float, tol: float = 1e-9) -> EigenResult:
    return dirichlet_eigen(m, L, tol, index=0)


def _matching_point(m: ModelSpace, lam: float, t0: float, L: float) -> float:
    """Start of the last classically forbidden stretch before L (or L/2 if L is allowed)."""
    xs = m.warping.grid[(m.warping.grid > t0) & (m.warping.grid < L)]
    xs = np.append(xs, L)
    allowed = lam - potential_values(m, xs) >= 0
    if allowed[-1] or not np.any(allowed):
        return 0.5 * L
    return float(xs[np.nonzero(allowed)[0][-1]])


def _backward_phase(m: ModelSpace, lam: float, L: float, x_m: float, theta_end: float):
    """Dense (theta, log rho) from u(L)=0, u'(L)=-1 back to x_m, potential from the spline."""
    w, n = m.warping, m.n

    def rhs(t, y):
        v = potential_from(n, float(w.s_at(t)), m.profile(t))
        sn, cs = math.sin(y[0]), math.cos(y[0])
        return [cs * cs + (lam - v) * sn * sn, (1.0 + v - lam) * sn * cs]

    edges = [L] + _breakpoints(m.profile, x_m, L)[::-1] + [x_m]
    y = np.array([theta_end, 0.0])
    pieces = []
    for hi, lo in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (hi, lo), y, method="DOP853", rtol=PHASE_RTOL, atol=PHASE_ATOL,
                        max_step=_max_step(lam), dense_output=True)
        if sol.status != 0:
            raise IntegrationError(f"backward phase integration failed: {sol.message}")
        pieces.append((lo, hi, sol.sol))
        y = sol.y[:, -1]
    return y, pieces


def _eigenfunction(m: ModelSpace, lam: float, L: float, tol: float, index: int = 0) -> EigenResult:
    """Eigenfunction by forward/backward integration matched at a turning point.

    Forward shooting alone picks up the growing mode across a forbidden tail.
    """
    t0, y0 = _center_data(m, lam)
    x_m = _matching_point(m, lam, t0, L)
    y_f, fwd, _ = _integrate_phase(m, lam, t0, y0, x_m, dense=True, with_amplitude=True)
    y_b, bwd = _backward_phase(m, lam, L, x_m, (index + 1) * math.pi)
    u_f = math.sin(y_f[1])
    u_b = math.sin(y_b[0])
    sign = 1.0 if u_f * u_b >= 0 else -1.0
    shift = y_f[3] - y_b[1]
    w = m.warping
    a = (m.n - 1) / 2.0
    n = m.n

    def evaluate(r):
        r = np.atleast_1d(r)
        h = np.empty_like(r)
        dh = np.empty_like(r)
        inner = r < t0
        h[inner] = 1.0 - lam * r[inner] ** 2 / (2 * n)
        dh[inner] = -lam * r[inner] / n
        for lo, hi, sol in fwd:
            sel = (r >= lo) & (r <= hi) & ~inner
            if np.any(sel):
                s, theta, log_j, log_rho = sol(r[sel])
                amp = np.exp(log_rho - a * log_j)
                h[sel] = amp * np.sin(theta)
                dh[sel] = amp * (np.cos(theta) - a * s * np.sin(theta))
        for lo, hi, sol in bwd:
            sel = (r > max(lo, x_m)) & (r <= hi)
            if np.any(sel):
                theta, log_rho = sol(r[sel])
                amp = sign * np.exp(log_rho + shift - a * w.log_j_at(r[sel]))
                h[sel] = amp * np.sin(theta)
                dh[sel] = amp * (np.cos(theta) - a * w.s_at(r[sel]) * np.sin(theta))
        return h, dh

    r = np.unique(np.concatenate([[0.0], np.geomspace(t0, L, 400), np.linspace(0.0, L, 2001)]))
    h, _ = evaluate(r)
    hmax = np.max(np.abs(h))
    interior = h[:-1]
    nodes = int(np.count_nonzero(np.diff(np.sign(interior[np.abs(interior) > tol * hmax]))))
    return EigenResult(float(lam), float(L), np.column_stack([r, h]), nodes, t0, tol, m.n,
                       float(abs(h[-1]) / hmax), evaluate)


@dataclass
class Lemma21Report:
    passed: bool
    violations: list = field(default_factory=list)


def check_lemma21(res: EigenResult) -> Lemma21Report:
    """h1 > 0 on [0, L) and strictly decreasing on (eps_origin, L]."""
    r, h = res.h_samples[:, 0], res.h_samples[:, 1]
    hmax = np.max(np.abs(h))
    violations = []
    if res.node_count != 0:
        violations.append(f"node_count={res.node_count}, expected 0")
    neg = np.nonzero(h[:-1] <= 0)[0]
    if neg.size:
        violations.append(f"h1 <= 0 at r={r[neg[0]]:.6g} ({neg.size} samples)")
    dq = np.diff(h) / np.diff(r)
    band = res.tol * hmax / np.diff(r)
    sel = r[1:] > res.eps_origin
    # near the origin h' ~ -lam r / n is tiny; allow the roundoff band there
    near = r[1:] < 10 * res.eps_origin
    bad = sel & ((dq >= 0) & ~(near & (dq < band)))
    if np.any(bad):
        i = np.nonzero(bad)[0]
        violations.append(f"nonnegative difference quotient at r={r[i[0] + 1]:.6g} ({i.size} intervals)")
    return Lemma21Report(not violations, violations)


# ---------------------------------------------------------------- counting

def _count_phases(m: ModelSpace, L_list, energy: float, eps_origin: float) -> np.ndarray:
    w = m.warping
    L_arr = np.asarray(L_list, dtype=float)
    if eps_origin < w.t_series:
        raise ValueError(f"eps_origin={eps_origin} below the series radius {w.t_series}")
    if np.any(L_arr <= eps_origin) or np.any(L_arr > w.r_max):
        raise ValueError(f"L values must lie in ({eps_origin}, {w.r_max}]")
    _, s0 = eval_warping(w, eps_origin)
    stops = np.unique(L_arr)
    _, _, vals = _integrate_phase(m, energy, eps_origin, [s0, 0.0], float(stops[-1]), t_eval=stops)
    thetas = dict(zip(stops.tolist(), vals[1].tolist()))
    return np.array([thetas[float(L)] for L in L_arr])


def count_eigenvalues_below(m: ModelSpace, L: float, E: float, eps_origin: float = 0.01) -> int:
    """Number of Dirichlet eigenvalues < E of -u'' + V u on [eps_origin, L]."""
    theta = _count_phases(m, [L], E, eps_origin)[0]
    return int(math.floor(theta / math.pi))


def count_many(m: ModelSpace, L_list, E: float, eps_origin: float = 0.01) -> list[int]:
    """Counts at several truncation radii from a single phase integration."""
    return [int(math.floor(t / math.pi)) for t in _count_phases(m, L_list, E, eps_origin)]


class Growth(str, Enum):
    GROWING = "growing"
    SATURATED = "saturated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CountCurve:
    n: int
    kappa: float
    beta: float
    threshold_energy: float
    points: tuple                   # ((L, N), ...)
    classification: Growth
    eps_origin: float
    refined_counts: tuple           # counts at eps_origin / 4, same L order

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.points]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "count"])
            for L, c in self.points:
                w.writerow([repr(float(L)), c])


def _decade_indices(L_list) -> tuple[int, int, int] | None:
    L = np.asarray(L_list, dtype=float)
    last = len(L) - 1
    i10 = int(np.argmin(np.abs(np.log10(L) - (np.log10(L[last]) - 1))))
    i100 = int(np.argmin(np.abs(np.log10(L) - (np.log10(L[last]) - 2))))
    if abs(np.log10(L[last] / L[i100]) - 2) > 0.25 or abs(np.log10(L[last] / L[i10]) - 1) > 0.25:
        return None
    return i100, i10, last


def classify_growth(counts, L_list, coupling: float) -> Growth:
    """Classify over the last two decades; ``coupling`` is beta (n-1)^2."""
    idx = _decade_indices(L_list)
    if idx is None:
        return Growth.INCONCLUSIVE
    a, b, c = (counts[i] for i in idx)
    if a == b == c:
        return Growth.SATURATED
    if coupling >= 4:
        grows = b - a >= 1 and c - b >= 1
    else:
        grows = c - a >= 1 and b >= a and c >= b
    return Growth.GROWING if grows else Growth.INCONCLUSIVE


def count_curve(m: ModelSpace, E: float, L_list, eps_origin: float = 0.01) -> CountCurve:
    L_list = [float(L) for L in L_list]
    if any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise ValueError("L_list must be increasing")
    p = m.profile
    p.require_tail()
    counts = count_many(m, L_list, E, eps_origin)
    fine = count_many(m, L_list, E, max(eps_origin / 4.0, m.warping.t_series))
    cls = classify_growth(counts, L_list, p.beta * (m.n - 1) ** 2)
    if counts != fine:
        cls = Growth.INCONCLUSIVE
    return CountCurve(m.n, p.kappa, p.beta, E, tuple(zip(L_list, counts)), cls,
                      eps_origin, tuple(fine))
