import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid
from scipy.linalg import eigvalsh_tridiagonal

from artifact import hardy
from artifact.hardy import Bump, HardyProblem
from artifact.oracles import schrodinger_matrix
from artifact.profiles import make_custom_profile, make_profile, zero_profile

GRID = [(d, math.ceil(2 * math.exp(12 / d)) + 1) for d in (1.0, 2.0, 4.0, 8.0, 12.0)]


def closed_form_numerator(delta, k):
    # ramps contribute 3 + (delta/4)(3 - 5 log 2), the plateau -(delta/4) log(k/2)
    return 3 - delta / 4 * (math.log(k / 2) + 5 * math.log(2) - 3)


def matrix_eigenvalue(p: HardyProblem, N=20000):
    x = np.geomspace(p.R, p.right, N + 2)
    v = -p.coupling / x ** 2
    d, e = schrodinger_matrix(x, v)
    return eigvalsh_tridiagonal(d, e, select="i", select_range=(0, 0))[0]


def test_problem_validation():
    for args in ((0, 3, 1), (1, 2, 1), (1, 3, 0)):
        with pytest.raises(ValueError):
            HardyProblem(*args)


def test_bound_formula():
    assert hardy.test_bound(4, 41) == pytest.approx(3 - math.log(20.5))
    assert hardy.test_bound(4, 41) == pytest.approx(-0.0204, abs=1e-4)
    assert hardy.test_bound(1.7, 2) == 3.0
    assert hardy.minimal_stretch(6) == pytest.approx(2 * math.e ** 2)


@pytest.mark.parametrize("delta,k", GRID + [(4.0, 41.0), (0.3, 7.5)])
def test_numerator_matches_closed_form(delta, k):
    num, bound = hardy.hardy_test_quotient(HardyProblem(1.0, k, delta))
    assert num == pytest.approx(closed_form_numerator(delta, k), abs=1e-10)
    assert num <= bound + 1e-9


def test_numerator_scale_invariant():
    a, _ = hardy.hardy_test_quotient(HardyProblem(1.0, 41, 4))
    b, _ = hardy.hardy_test_quotient(HardyProblem(100.0, 41, 4))
    assert abs(a - b) < 1e-9


@pytest.mark.parametrize("delta,k", GRID)
def test_negative_first_eigenvalue(delta, k):
    base = None
    for R in (1.0, 10.0, 100.0):
        p = HardyProblem(R, k, delta)
        num, bound = hardy.hardy_test_quotient(p)
        lam = hardy.hardy_first_eigenvalue(p)
        assert num < 0 and num <= bound + 1e-9
        assert lam < 0
        assert lam <= num / hardy.test_function_norm(p)
        if base is None:
            base = lam
        assert lam * R * R == pytest.approx(base, rel=1e-6)


@pytest.mark.parametrize("R,k,delta", [(1.0, 41.0, 4.0), (1.0, 4.0, 0.05), (2.0, 15.0, 6.0)])
def test_matrix_oracle(R, k, delta):
    p = HardyProblem(R, k, delta)
    lam = hardy.hardy_first_eigenvalue(p)
    ref = matrix_eigenvalue(p)
    assert lam == pytest.approx(ref, rel=2e-3, abs=1e-6 / R ** 2)


def test_subcritical_short_interval_positive():
    assert hardy.hardy_first_eigenvalue(HardyProblem(1.0, 4.0, 0.05)) > 0


def test_eigenpair():
    p = HardyProblem(1.0, 41.0, 4.0)
    pair = hardy.hardy_eigenpair(p)
    x = np.geomspace(p.R, p.right, 4001)
    phi, dphi = pair.evaluate(x)
    assert abs(phi[0]) < 1e-12
    assert abs(phi[-1]) < 1e-6 * np.max(np.abs(phi))
    assert np.all(phi[1:-1] > 0)
    # Rayleigh quotient of the eigenfunction reproduces the eigenvalue
    num = trapezoid(dphi ** 2 - p.coupling / x ** 2 * phi ** 2, x)
    den = trapezoid(phi ** 2, x)
    assert num / den == pytest.approx(pair.eigenvalue, rel=1e-4)


# ------------------------------------------------------------- Hardy weight

def test_weight_hyperbolic_3d():
    man = hardy.make_manifold(3, make_profile(1, 0, 1, "radial_curvature"), 20.0)
    for r in (0.5, 2.0, 10.0):
        assert hardy.hardy_weight(man, r) == pytest.approx(1 + 1 / (4 * r * r), rel=1e-9)


def test_weight_flat_plane_vanishes():
    man = hardy.make_manifold(2, zero_profile("radial_curvature"), 20.0)
    for r in (1.0, 10.0):
        assert abs(hardy.hardy_weight(man, r)) < 1e-12


def test_weight_tail():
    man = hardy.make_manifold(2, make_profile(1, 0.5, 1, "radial_curvature"), 1000.0, 1e-12)
    assert abs(hardy.hardy_weight(man, 100.0) - 0.2500125) < 1e-6
    cs = []
    for r in (100.0, 200.0, 400.0, 800.0):
        asym = 0.25 + (1 - 0.5) / (4 * r * r)
        cs.append((hardy.hardy_weight(man, r) - asym) * r ** 3)
    assert max(cs) / min(cs) < 1.05


def test_weight_out_of_range():
    man = hardy.make_manifold(2, zero_profile("radial_curvature"), 20.0)
    with pytest.raises(ValueError):
        hardy.hardy_weight(man, 30.0)


def test_model_kind_converted():
    man = hardy.make_manifold(2, make_profile(1, 0, 1), 5.0)
    assert man.curvature.kind.value == "radial_curvature"


@pytest.fixture(scope="module")
def hyperbolic3():
    return hardy.make_manifold(3, make_profile(1, 0, 1, "radial_curvature"), 50.0)


def test_inequality_hyperbolic_bump(hyperbolic3):
    c = hardy.verify_hardy_inequality(hyperbolic3, 1.0, Bump(5.0, 2.0))
    assert c.holds()
    assert c.lhs - c.rhs_interior - c.rhs_boundary > 0.1 * c.lhs
    assert c.rhs_boundary == 0.0


def test_inequality_boundary_term(hyperbolic3):
    c = hardy.verify_hardy_inequality(hyperbolic3, 1.0, Bump(1.5, 1.0))
    assert c.rhs_boundary > 0
    assert c.holds()


def test_zero_function(hyperbolic3):
    c = hardy.verify_hardy_inequality(hyperbolic3, 1.0, Bump(5.0, 2.0, 0.0))
    assert (c.lhs, c.rhs_interior, c.rhs_boundary) == (0.0, 0.0, 0.0)
    assert c.holds()


def test_flat_plane_reduces_to_boundary_term():
    man = hardy.make_manifold(2, zero_profile("radial_curvature"), 20.0)
    c = hardy.verify_hardy_inequality(man, 1.0, Bump(1.5, 1.0))
    assert abs(c.rhs_interior) < 1e-10 * c.lhs
    assert c.lhs >= c.rhs_boundary


def test_quadrature_against_closed_form(hyperbolic3):
    # int_a^b u'^2 sinh^2 r dr * 4 pi by brute force
    u = Bump(6.0, 3.0)
    r = np.linspace(3.0, 9.0, 200001)
    ref = 4 * math.pi * trapezoid(u(r)[1] ** 2 * np.sinh(r) ** 2, r)
    c = hardy.verify_hardy_inequality(hyperbolic3, 1.0, u)
    assert c.lhs == pytest.approx(ref, rel=1e-8)


def test_inequality_errors(hyperbolic3):
    with pytest.raises(ValueError):
        hardy.verify_hardy_inequality(hyperbolic3, 1.0, Bump(48.0, 5.0))
    p = make_custom_profile([0, 1], [0, 0], "radial_curvature")
    object.__setattr__(p, "table", ((0.0, 1.0), (0.5, 0.5)))   # positive curvature: A(R) < 1/R
    object.__setattr__(p, "inner_value", 0.5)
    man = hardy.make_manifold(3, p, 2.0)         # conjugate point at pi / (2 sqrt(0.5)) = 2.22
    with pytest.raises(ValueError, match="mean-curvature"):
        hardy.verify_hardy_inequality(man, 1.0, Bump(1.5, 0.4))


_MANIFOLDS = {}


def _manifold(n, beta):
    key = (n, beta)
    if key not in _MANIFOLDS:
        _MANIFOLDS[key] = hardy.make_manifold(n, make_profile(1, beta, 1, "radial_curvature"), 50.0)
    return _MANIFOLDS[key]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.sampled_from([0.0, 0.5, 1.0]),
       st.floats(1.0, 48.0), st.floats(0.05, 1.0), st.floats(-3, 3))
def test_inequality_random_bumps(n, beta, center, frac, log_amp):
    width = frac * min(center - 0.5, 50.0 - center)
    c = hardy.verify_hardy_inequality(_manifold(n, beta), 1.0, Bump(center, width, 10 ** log_amp))
    # lhs spans dozens of decades here, so the slack is relative
    assert c.lhs - c.rhs_interior - c.rhs_boundary >= -1e-10 * c.lhs
    assert c.lhs - c.rhs_interior >= -1e-10 * c.lhs
