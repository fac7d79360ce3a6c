"""End-to-end checks built from the other modules.

* verify_prop22: Hardy ground state transplanted onto the model annulus
  [R, 2kR] beats the essential bottom by the Hardy gap.
* transplant_check: the model ground state pulled back along the distance to a
  ball W in a rotationally symmetric target.
* threshold_sweep: eigenvalue counts below the essential bottom as the
  truncation radius grows, across the beta (n-1)^2 = 1 borderline.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import CountCurve, Growth, ModelSpace, count_curve, first_dirichlet_eigen
from .hardy import (HardyProblem, RotSymManifold, hardy_eigenpair, make_manifold,
                    minimal_stretch, sphere_area)
from .ode import solve_warping
from .profiles import CurvatureProfile, make_profile

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


class ExperimentError(RuntimeError):
    """Numerically inconsistent outcome (e.g. non-monotone passes in R)."""


class HypothesisError(ValueError):
    """A standing assumption of the experiment does not hold."""


def _panel_gauss(f, edges: np.ndarray) -> float:
    """Sum of 10-point Gauss rules on consecutive panels; f is vectorized."""
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    vals = f(x).reshape(mid.size, -1)
    return float(np.sum((vals * _GL_W).sum(axis=1) * half))


# ------------------------------------------------ small balls below the Hardy gap

@dataclass(frozen=True)
class Prop22Row:
    R: float
    lambda1: float          # minus the signed Hardy eigenvalue on [R, 2kR]
    lambda_d: float         # ground state of the model ball B(2kR)
    gap_target: float
    margin: float           # gap_target - lambda_d
    passed: bool
    energy: float           # int (phi' - (n-1)/2 S phi)^2 = int |f'|^2 J^{n-1}
    energy_chain: float     # int phi'^2 + (n-1)/2 ((n-3)/2 S^2 - R_min) phi^2
    norm: float             # int phi^2 = int f^2 J^{n-1}

    @property
    def energy_below_gap(self) -> bool:
        return self.energy < self.gap_target * self.norm


@dataclass(frozen=True)
class Prop22Report:
    n: int
    kappa: float
    beta: float
    delta: float
    k: float
    tol: float
    rows: tuple
    r_star: float | None

    @property
    def verified_at(self) -> list[tuple[float, bool]]:
        return [(r.R, r.passed) for r in self.rows]

    def to_text(self) -> str:
        lines = [f"prop22 n={self.n} kappa={self.kappa!r} beta={self.beta!r} "
                 f"delta={self.delta!r} k={self.k!r} r_star={self.r_star!r}"]
        for r in self.rows:
            lines.append(f"  R={r.R!r} lambda1={r.lambda1!r} lambda_d={r.lambda_d!r} "
                         f"gap={r.gap_target!r} pass={r.passed} energy_ok={r.energy_below_gap}")
        return "\n".join(lines) + "\n"


PROP22_HEADER = ["n", "kappa", "beta", "delta", "k", "R", "lambda1", "lambda_d",
                 "gap_target", "margin", "passed", "energy", "gap_times_norm"]


def prop22_rows(rep: Prop22Report) -> list[list]:
    return [[rep.n, rep.kappa, rep.beta, rep.delta, rep.k, r.R, r.lambda1, r.lambda_d,
             r.gap_target, r.margin, int(r.passed), r.energy, r.gap_target * r.norm]
            for r in rep.rows]


def _energy_integrals(model: ModelSpace, pair, R: float, right: float) -> tuple[float, float, float]:
    a = (model.n - 1) / 2.0
    prof = model.profile
    w = model.warping
    # log-spaced panels: phi varies on the scale x near the left end
    edges = np.geomspace(R, right, 3001)

    def parts(x):
        phi, dphi = pair.evaluate(x)
        return phi, dphi, w.s_at(x), prof.values(x)

    def energy(x):
        phi, dphi, s, _ = parts(x)
        return (dphi - a * s * phi) ** 2

    def chain(x):
        phi, dphi, s, rm = parts(x)
        return dphi ** 2 + a * ((model.n - 3) / 2.0 * s * s - rm) * phi ** 2

    return (_panel_gauss(energy, edges), _panel_gauss(chain, edges),
            _panel_gauss(lambda x: pair.evaluate(x)[0] ** 2, edges))


def verify_prop22(n: int, profile: CurvatureProfile, delta: float, k: float, R_list,
                  tol: float = 1e-9) -> Prop22Report:
    profile.require_tail()
    if n < 2:
        raise HypothesisError(f"n must be >= 2, got {n}")
    coupling = profile.beta * (n - 1) ** 2
    if not coupling > 1.0 + delta:
        raise HypothesisError(f"beta (n-1)^2 = {coupling} must exceed 1 + delta = {1 + delta}")
    if not k > minimal_stretch(delta):
        raise HypothesisError(f"k={k} must exceed 2 exp(12/delta) = {minimal_stretch(delta)}")
    R_list = [float(R) for R in R_list]
    if not R_list or R_list[0] <= 0 or any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be positive and strictly increasing")

    model = ModelSpace(n, solve_warping(profile, 2.0 * k * R_list[-1], min(1e-10, tol)))
    bottom = model.essential_bottom
    rows = []
    for R in R_list:
        hp = HardyProblem(R, k, delta)
        pair = hardy_eigenpair(hp)
        lam1 = -pair.eigenvalue
        gap = bottom - lam1
        lam_d = first_dirichlet_eigen(model, hp.right, tol).eigenvalue
        e, chain, norm = _energy_integrals(model, pair, R, hp.right)
        margin = gap - lam_d
        rows.append(Prop22Row(R, lam1, lam_d, gap, margin, margin > 10 * tol, e, chain, norm))

    passes = [r.passed for r in rows]
    first = passes.index(True) if True in passes else None
    if first is not None and not all(passes[first:]):
        raise ExperimentError(f"passes not monotone in R: {list(zip(R_list, passes))}")
    r_star = R_list[first] if first is not None else None
    return Prop22Report(n, profile.kappa, profile.beta, delta, k, tol, tuple(rows), r_star)


# ------------------------------------------------------------ transplantation

@dataclass(frozen=True)
class TransplantReport:
    n: int
    r_w: float
    R: float
    quotient: float
    lambda_d_model: float
    margin: float
    correction: float           # lambda_d * h1(0)^2 Vol(W) / int F^2
    vol_w: float
    h1_0: float
    shifted_domination: float   # min over (0, R] of K_t(r_w + r) - R_min(r)
    comparison_excess: float    # max over (0, R] of A_t(r_w + r) - S(r)
    target: RotSymManifold = field(repr=False, default=None)
    model: ModelSpace = field(repr=False, default=None)

    def passed(self, slack: float = 1e-6) -> bool:
        return self.margin > 0 and self.margin >= self.correction - slack

    def to_text(self) -> str:
        return (f"transplant n={self.n} r_w={self.r_w!r} R={self.R!r}\n"
                f"  quotient={self.quotient!r} lambda_d={self.lambda_d_model!r}\n"
                f"  margin={self.margin!r} correction={self.correction!r} vol_w={self.vol_w!r}\n"
                f"  shifted_domination={self.shifted_domination!r} "
                f"comparison_excess={self.comparison_excess!r}\n")


TRANSPLANT_HEADER = ["n", "r_w", "R", "quotient", "lambda_d", "margin", "correction",
                     "vol_w", "passed"]


def transplant_row(rep: TransplantReport) -> list:
    return [rep.n, rep.r_w, rep.R, rep.quotient, rep.lambda_d_model, rep.margin,
            rep.correction, rep.vol_w, int(rep.passed())]


def check_domination(model_profile: CurvatureProfile, target_curvature: CurvatureProfile,
                     r: np.ndarray) -> None:
    """K_target(r) >= R_min(r) on the sample radii, else HypothesisError."""
    excess = target_curvature.values(r) - model_profile.values(r)
    scale = np.maximum(1.0, np.abs(model_profile.values(r)))
    bad = np.nonzero(excess < -1e-12 * scale)[0]
    if bad.size:
        i = bad[0]
        raise HypothesisError(
            f"curvature domination fails at r={r[i]:.6g}: "
            f"K_target={target_curvature(r[i]):.6g} < R_min={model_profile(r[i]):.6g}")


def transplant_check(n: int, model_profile: CurvatureProfile, target_curvature: CurvatureProfile,
                     r_w: float, R: float, tol: float = 1e-9) -> TransplantReport:
    """Rayleigh quotient of F_R on the target against lambda_D(B(R)) of the model."""
    if n < 2:
        raise HypothesisError(f"n must be >= 2, got {n}")
    if not (r_w > 0 and R > 0):
        raise ValueError("r_w and R must be positive")
    wm = solve_warping(model_profile, R, min(1e-10, tol))
    model = ModelSpace(n, wm)
    r_chk = np.union1d(wm.grid, np.linspace(0.0, R, 4001))
    check_domination(model_profile, target_curvature, r_chk)
    target = make_manifold(n, target_curvature, r_w + R, min(1e-10, tol))

    r_in = r_chk[r_chk >= wm.t_series]
    shifted = float(np.min(target.curvature.values(r_w + r_in) - model_profile.values(r_in)))
    excess = float(np.max(target.a_ratio(r_w + r_in) - wm.s_at(r_in)))

    eig = first_dirichlet_eigen(model, R, tol)
    lam = eig.eigenvalue
    h0 = float(np.asarray(eig.evaluate(np.array([0.0]))[0])[0])

    a = n - 1
    ref = a * float(target.log_h(r_w + R))
    tg = target.warping_h.grid
    knots = tg[(tg > r_w) & (tg < r_w + R)] - r_w
    edges = np.union1d(np.union1d(knots, wm.grid[wm.grid < R]), [0.0, R])

    def dens(r):
        return np.exp(a * target.log_h(r_w + r) - ref)

    num = _panel_gauss(lambda r: eig.evaluate(r)[1] ** 2 * dens(r), edges)
    ann = _panel_gauss(lambda r: eig.evaluate(r)[0] ** 2 * dens(r), edges)
    w_edges = np.union1d(tg[tg < r_w], [0.0, r_w])
    vol_scaled = _panel_gauss(lambda r: np.exp(a * target.log_h(r) - ref), w_edges)
    total = ann + h0 * h0 * vol_scaled
    quotient = num / total
    corr = h0 * h0 * vol_scaled / total
    vol_w = sphere_area(n) * vol_scaled * math.exp(ref)
    return TransplantReport(n, r_w, R, quotient, lam, lam - quotient, lam * corr, vol_w, h0,
                            shifted, excess, target, model)


# ------------------------------------------------------------------- sweep

def sweep_r_join(kappa: float, beta: float) -> float:
    return max(1.0, math.sqrt(beta / kappa) * 1.01)


def predicted_side(beta: float, n: int) -> Growth:
    c = beta * (n - 1) ** 2
    if c > 1:
        return Growth.GROWING
    if c < 1:
        return Growth.SATURATED
    return Growth.INCONCLUSIVE


@dataclass(frozen=True)
class SweepEntry:
    curve: CountCurve
    predicted: Growth

    @property
    def matches(self) -> bool:
        if self.predicted is Growth.INCONCLUSIVE:
            return True
        return self.curve.classification is self.predicted


SWEEP_HEADER = ["n", "kappa", "beta", "L", "count", "classification", "predicted"]


def sweep_rows(entries) -> list[list]:
    rows = []
    for e in entries:
        c = e.curve
        for L, cnt in c.points:
            rows.append([c.n, c.kappa, c.beta, L, cnt, c.classification.value, e.predicted.value])
    return rows


def threshold_sweep(n: int, kappa: float, beta_list, L_list, eps_origin: float = 0.01,
                    tol: float = 1e-10) -> list[SweepEntry]:
    L_list = [float(L) for L in L_list]
    if len(L_list) < 2 or L_list[-1] / L_list[0] < 100 * (1 - 1e-12):
        raise ValueError("L_list must span at least two decades")
    out = []
    for beta in beta_list:
        beta = float(beta)
        prof = make_profile(kappa, beta, sweep_r_join(kappa, beta))
        m = ModelSpace(n, solve_warping(prof, L_list[-1], tol))
        curve = count_curve(m, m.essential_bottom - 1e-9, L_list, eps_origin)
        out.append(SweepEntry(curve, predicted_side(beta, n)))
    return out


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v
