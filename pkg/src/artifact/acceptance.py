"""The acceptance suite: nine numerical criteria, each a plain function.

Every criterion returns a ``CriterionResult`` with a deterministic detail
string and an optional table; ``cli verify`` writes both to CSV.  The tenth
criterion (byte-identical reruns) is a property of the CLI and is checked by
running it twice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hardy
from .eigen import (Growth, ModelSpace, check_lemma21, count_eigenvalues_below,
                    first_dirichlet_eigen)
from .experiments import (SWEEP_HEADER, TRANSPLANT_HEADER, PROP22_HEADER, prop22_rows,
                          sweep_rows, threshold_sweep, transplant_check, transplant_row,
                          verify_prop22)
from .ode import eval_warping, riccati_tail_fit, solve_warping
from .oracles import bessel_j0_first_zero, fd_eigenvalues
from .profiles import make_profile, zero_profile


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def _g(x: float) -> str:
    return f"{x:.6g}"


def criterion_1(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    p = make_profile(1.0, 0.0, 1.0)
    w = solve_warping(p, 700.0, 1e-10)
    rows, worst = [], 0.0
    for t in (1.0, 5.0, 20.0, 100.0, 700.0):
        log_j, s = eval_warping(w, t)
        ref_log = t + math.log1p(-math.exp(-2 * t)) - math.log(2.0)     # log sinh t
        ref_s = 1.0 / math.tanh(t)
        e1 = abs(log_j - ref_log) / abs(ref_log)
        e2 = abs(s - ref_s) / ref_s
        worst = max(worst, e1, e2)
        rows.append([t, log_j, ref_log, s, ref_s, max(e1, e2)])
    ok = worst < 1e-8 and all(math.isfinite(r[1]) for r in rows)
    return CriterionResult(1, "closed-form warping K=-1", ok, f"max rel err {_g(worst)}",
                           ["t", "log_j", "log_sinh", "s", "coth", "rel_err"], rows)


def criterion_2(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    rows, ok = [], True
    for kappa, beta in ((1.0, 0.5), (1.0, 2.0), (4.0, 1.0)):
        r_join = max(1.0, math.sqrt(beta / kappa) * 1.01)
        w = solve_warping(make_profile(kappa, beta, r_join), 200.0, 1e-12)
        k_fit, b_fit = riccati_tail_fit(w, 50.0, 200.0)
        ek, eb = abs(k_fit / kappa - 1), abs(b_fit / beta - 1)
        ok &= ek < 0.01 and eb < 0.02
        rows.append([kappa, beta, k_fit, b_fit, ek, eb])
    detail = "; ".join(f"({r[0]:g},{r[1]:g}) dk={_g(r[4])} db={_g(r[5])}" for r in rows)
    return CriterionResult(2, "Riccati tail asymptotics", ok, detail,
                           ["kappa", "beta", "kappa_fit", "beta_fit", "rel_err_kappa",
                            "rel_err_beta"], rows)


def criterion_3(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    rows, ok, worst_scale = [], True, 0.0
    for delta in (1.0, 2.0, 4.0, 8.0, 12.0):
        k = math.ceil(hardy.minimal_stretch(delta)) + 1
        base = None
        for R in (1.0, 10.0, 100.0):
            p = hardy.HardyProblem(R, k, delta)
            num, bound = hardy.hardy_test_quotient(p)
            lam = hardy.hardy_first_eigenvalue(p)
            if base is None:
                base = lam
            scale_err = abs(lam * R * R / base - 1)
            worst_scale = max(worst_scale, scale_err)
            ok &= num <= bound + 1e-9 and num < 0 and lam < 0 and scale_err < 1e-6
            rows.append([delta, k, R, num, bound, lam])
    return CriterionResult(3, "Hardy test quotient and eigenvalue sign", ok,
                           f"15 cells, max scale-law err {_g(worst_scale)}",
                           ["delta", "k", "R", "numerator", "bound", "lambda1"], rows)


def criterion_4(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    rows, ok = [], True
    for n in (2, 3, 5):
        for beta in (0.0, 2.0):
            p = make_profile(1.0, beta, 2.0 if beta else 1.0)
            m = ModelSpace(n, solve_warping(p, 50.0, 1e-10))
            for L in (10.0, 50.0):
                res = first_dirichlet_eigen(m, L, tol)
                rep = check_lemma21(res)
                ok &= rep.passed
                rows.append([n, beta, L, res.eigenvalue, int(rep.passed)])
    flat3 = first_dirichlet_eigen(ModelSpace(3, solve_warping(zero_profile(), math.pi, 1e-12)),
                                  math.pi, 1e-12).eigenvalue
    j0 = bessel_j0_first_zero()
    flat2 = first_dirichlet_eigen(ModelSpace(2, solve_warping(zero_profile(), 1.0, 1e-12)),
                                  1.0, 1e-12).eigenvalue
    e3, e2 = abs(flat3 - 1.0), abs(flat2 - j0 * j0)
    ok &= e3 < 1e-6 and e2 < 1e-4
    rows.append([3, 0.0, math.pi, flat3, int(e3 < 1e-6)])
    rows.append([2, 0.0, 1.0, flat2, int(e2 < 1e-4)])
    return CriterionResult(4, "ground state positive and decreasing", ok,
                           f"12 cells; flat n=3 err {_g(e3)}; flat n=2 err {_g(e2)}",
                           ["n", "beta", "L", "eigenvalue", "passed"], rows)


def criterion_5(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    rep = verify_prop22(3, make_profile(1.0, 2.0, 2.0), 6.0, 15.0, [5.0, 10.0, 20.0, 40.0], tol)
    passing = [r for r in rep.rows if r.passed]
    ok = rep.r_star is not None and all(r.margin > 10 * tol and r.energy_below_gap for r in passing)
    detail = f"r_star={rep.r_star}; min margin {_g(min((r.margin for r in passing), default=float('nan')))}"
    return CriterionResult(5, "model ball below the Hardy gap", ok, detail,
                           PROP22_HEADER, prop22_rows(rep))


def draw_oracle_case(rng: np.random.Generator):
    n = int(rng.integers(2, 6))
    kappa = float(rng.uniform(0.25, 4.0))
    beta = float(rng.uniform(0.0, 10.0))
    r_join = max(0.5, math.sqrt(beta / kappa) * float(rng.uniform(1.0, 2.0)))
    L = float(rng.uniform(5.0, 50.0))
    return n, kappa, beta, r_join, L


def criterion_6(seed: int = 0, tol: float = 1e-9, cases: int = 20) -> CriterionResult:
    rng = np.random.default_rng(seed)
    rows, ok, eps = [], True, 0.01
    while len(rows) < cases:
        n, kappa, beta, r_join, L = draw_oracle_case(rng)
        m = ModelSpace(n, solve_warping(make_profile(kappa, beta, r_join), L, 1e-10))
        bottom = m.essential_bottom
        E = float(rng.uniform(0.3, 1.2)) * max(bottom, 0.25)
        ev = fd_eigenvalues(m, L, eps, N=6000, upper=E + 1e-3)
        if np.any(np.abs(ev - E) < 1e-3):
            continue            # too close to an eigenvalue for an integer comparison
        fd = int(np.count_nonzero(ev < E))
        pr = count_eigenvalues_below(m, L, E, eps)
        ok &= fd == pr
        rows.append([n, kappa, beta, r_join, L, E, pr, fd])
    bad = sum(r[6] != r[7] for r in rows)
    return CriterionResult(6, "phase counts equal matrix counts", ok,
                           f"{len(rows)} cases, {bad} mismatches",
                           ["n", "kappa", "beta", "r_join", "L", "E", "count", "matrix_count"], rows)


def criterion_7(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    L_list = [1e2, 1e3, 1e4]
    entries = (threshold_sweep(2, 1.0, [0.5, 30.0], L_list)
               + threshold_sweep(3, 1.0, [0.1, 10.0], L_list))
    ok = True
    for e in entries:
        c = e.curve
        ok &= e.matches and list(c.refined_counts) == c.counts
        if e.predicted is Growth.GROWING:
            ok &= c.counts[1] - c.counts[0] >= 1 and c.counts[2] - c.counts[1] >= 1
        else:
            ok &= c.counts[1] == c.counts[2]
    detail = "; ".join(f"n={e.curve.n} beta={e.curve.beta:g} {e.curve.counts} "
                       f"{e.curve.classification.value}" for e in entries)
    return CriterionResult(7, "finite/infinite dichotomy", ok, detail,
                           SWEEP_HEADER, sweep_rows(entries))


def draw_bump(rng: np.random.Generator, lo: float = 2.0, hi: float = 50.0) -> hardy.Bump:
    center = float(rng.uniform(lo + 0.5, hi - 0.5))
    width = float(rng.uniform(0.25, min(center - lo, hi - center, 10.0)))
    return hardy.Bump(center, width, float(rng.uniform(0.5, 2.0)))


def criterion_8(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    rng = np.random.default_rng(seed)
    rows, ok, worst = [], True, math.inf
    for n in (2, 3):
        for beta in (0.0, 0.5):
            man = hardy.make_manifold(n, make_profile(1.0, beta, 1.0, "radial_curvature"), 50.0)
            for _ in range(20):
                u = draw_bump(rng)
                c = hardy.verify_hardy_inequality(man, 1.0, u)
                slack = min(c.lhs - c.rhs_interior - c.rhs_boundary, c.lhs - c.rhs_interior)
                worst = min(worst, slack)
                ok &= c.holds(1e-8)
                rows.append([n, beta, u.center, u.width, u.amplitude, c.lhs, c.rhs_interior,
                             c.rhs_boundary])
    flat = hardy.make_manifold(2, zero_profile("radial_curvature"), 20.0)
    w_flat = max(abs(hardy.hardy_weight(flat, r)) for r in (1.0, 10.0))
    ok &= w_flat < 1e-12
    return CriterionResult(8, "Hardy-weight inequality", ok,
                           f"80 bumps, min slack {_g(worst)}; flat |W| {_g(w_flat)}",
                           ["n", "beta", "center", "width", "amplitude", "lhs", "rhs_interior",
                            "rhs_boundary"], rows)


def criterion_9(seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    rep = transplant_check(3, make_profile(1.0, 2.0, 2.0),
                           make_profile(1.0, 3.0, 2.0, "radial_curvature"), 1.0, 50.0, tol)
    ok = rep.passed(1e-6)
    return CriterionResult(9, "transplanted quotient below the model eigenvalue", ok,
                           f"margin {_g(rep.margin)} >= correction {_g(rep.correction)}",
                           TRANSPLANT_HEADER, [transplant_row(rep)])


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def run_criterion(number: int, seed: int = 0, tol: float = 1e-9) -> CriterionResult:
    try:
        return CRITERIA[number](seed, tol)
    except Exception as exc:            # a crash is a failed criterion, not a crashed suite
        return CriterionResult(number, CRITERIA[number].__name__, False,
                               f"error: {type(exc).__name__}: {exc}")
