import math

import numpy as np
import pytest

from artifact.ode import (IntegrationError, TailFitError, eval_warping, riccati_residual,
                          riccati_tail_fit, series_radius, solve_warping)
from artifact.profiles import make_custom_profile, make_profile, zero_profile


def log_sinh(t):
    return t + math.log1p(-math.exp(-2 * t)) - math.log(2.0)


@pytest.fixture(scope="module")
def hyperbolic():
    return solve_warping(make_profile(1, 0, 1), 700.0, 1e-10)


@pytest.fixture(scope="module")
def beta2():
    return solve_warping(make_profile(1, 2, 2), 200.0, 1e-12)


def test_flat_solution():
    w = solve_warping(zero_profile(), 10.0, 1e-10)
    for t in (w.t_series, 0.1, 2.5, 10.0):
        lj, s = eval_warping(w, t)
        assert abs(lj - math.log(t)) <= 10 * w.tol * max(1, abs(math.log(t)))
        assert abs(s * t - 1) < 1e-9


@pytest.mark.parametrize("t", [1.0, 5.0, 20.0, 100.0, 700.0])
def test_hyperbolic_closed_form(hyperbolic, t):
    lj, s = eval_warping(hyperbolic, t)
    assert math.isfinite(lj)
    assert abs(lj / log_sinh(t) - 1) < 1e-8
    assert abs(s * math.tanh(t) - 1) < 1e-8


def test_hyperbolic_between_grid_points(hyperbolic):
    t = 1.00012345
    lj, s = eval_warping(hyperbolic, t)
    assert lj == pytest.approx(log_sinh(t), rel=1e-9)
    assert s == pytest.approx(1 / math.tanh(t), rel=1e-9)
    assert eval_warping(hyperbolic, 1.0)[0] == pytest.approx(0.16143936157, abs=1e-10)


def test_grid_points_exact(beta2):
    i = beta2.grid.size // 3
    assert eval_warping(beta2, float(beta2.grid[i])) == (beta2.log_j[i], beta2.s[i])


def test_out_of_range(beta2):
    with pytest.raises(ValueError):
        eval_warping(beta2, 201.0)
    with pytest.raises(ValueError):
        eval_warping(beta2, beta2.t_series / 2)


def test_tail_value_at_100(beta2):
    _, s = eval_warping(beta2, 100.0)
    assert abs(s - 0.9999) < 1e-5


def test_grid_invariants(beta2):
    w = beta2
    assert np.all(np.diff(w.grid) > 0)
    assert np.all(np.exp(w.log_j) >= w.grid * (1 - 1e-12))
    assert np.all(w.s > 0)
    assert abs(w.s[0] * w.grid[0] - 1) < 10 * w.grid[0] ** 2


def test_log_derivative_is_s(beta2):
    w = beta2
    dlog = np.diff(w.log_j)
    mid = 0.5 * (w.s[:-1] + w.s[1:]) * np.diff(w.grid)
    # trapezoid error is O(h^3 S''), not integrator tolerance
    assert np.max(np.abs(dlog - mid)) < 1e-6


def test_riccati_residual_small(beta2):
    assert np.max(riccati_residual(beta2)) < 100 * beta2.tol


def test_tail_rises_to_sqrt_kappa(beta2):
    # S = sqrt(kappa) - beta/(2 sqrt(kappa) t^2) + ...: increasing, bounded above
    w = beta2
    tail = w.s[w.grid >= 4.0]
    assert np.all(np.diff(tail) > 0)
    assert np.all(tail < 1.0)


def test_tolerance_refinement():
    p = make_profile(1, 2, 2)
    a = solve_warping(p, 100.0, 1e-8)
    b = solve_warping(p, 100.0, 5e-9)
    assert abs(a.s[-1] - b.s[-1]) < 1e-8


@pytest.mark.parametrize("kappa,beta,k_tol,b_tol", [(1, 2, 0.01, 0.04), (4, 1, 0.04, 0.02)])
def test_tail_fit(kappa, beta, k_tol, b_tol):
    p = make_profile(kappa, beta, max(1.0, math.sqrt(beta / kappa) * 1.01))
    w = solve_warping(p, 200.0, 1e-12)
    k_hat, b_hat = riccati_tail_fit(w, 50.0, 200.0)
    assert abs(k_hat - kappa) < k_tol
    assert abs(b_hat - beta) < b_tol


def test_tail_fit_beta_zero(hyperbolic):
    k_hat, b_hat = riccati_tail_fit(hyperbolic, 50.0, 200.0)
    assert abs(b_hat) < 1e-6
    assert abs(k_hat - 1) < 1e-8


def test_tail_fit_rejects_early_window(beta2):
    with pytest.raises(TailFitError):
        riccati_tail_fit(beta2, 1.0, 5.0)
    with pytest.raises(ValueError):
        riccati_tail_fit(beta2, 50.0, 500.0)


def test_bad_tolerance_and_range():
    p = make_profile(1, 0, 1)
    with pytest.raises(ValueError):
        solve_warping(p, 10.0, 1e-3)
    with pytest.raises(ValueError):
        solve_warping(p, 10.0, 1e-15)
    with pytest.raises(ValueError):
        solve_warping(p, 1e-9, 1e-10)


def test_conjugate_point_detected():
    # not a valid curvature profile: positive curvature focuses geodesics at t = pi
    p = make_custom_profile([0, 1], [0, 0])
    object.__setattr__(p, "table", ((0.0, 1.0), (1.0, 1.0)))
    object.__setattr__(p, "inner_value", 1.0)
    with pytest.raises(IntegrationError, match="conjugate"):
        solve_warping(p, 4.0, 1e-8)


def test_series_radius_shrinks_for_large_curvature():
    assert series_radius(make_profile(1e6, 0, 1), 1e-12) < 1e-3
    assert series_radius(make_profile(1, 0, 1), 1e-10) == 1e-3
    assert series_radius(make_profile(1, 0, 0.005), 1e-10) == 5e-4


def test_csv(tmp_path, beta2):
    path = tmp_path / "w.csv"
    beta2.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,log_j,s"
    assert len(lines) == beta2.grid.size + 1
