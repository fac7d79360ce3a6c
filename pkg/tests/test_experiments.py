import math

import numpy as np
import pytest

from artifact import experiments
from artifact.eigen import Growth, ModelSpace
from artifact.experiments import (ExperimentError, HypothesisError, predicted_side, sweep_r_join,
                                  threshold_sweep, transplant_check, verify_prop22)
from artifact.ode import solve_warping
from artifact.oracles import weighted_form_eigenvalues
from artifact.profiles import ProfileError, make_custom_profile, make_profile

MODEL = make_profile(1, 2, 2)


@pytest.fixture(scope="module")
def prop22():
    return verify_prop22(3, MODEL, 6.0, 15.0, [5.0, 10.0])


def test_prop22_passes(prop22):
    assert prop22.r_star == 5.0
    assert [ok for _, ok in prop22.verified_at] == [True, True]
    for row in prop22.rows:
        assert row.lambda1 > 0
        assert row.lambda_d < row.gap_target
        assert row.gap_target < 1.0 + row.lambda1
        assert row.energy_below_gap


def test_prop22_chain_identity(prop22):
    for row in prop22.rows:
        assert row.energy == pytest.approx(row.energy_chain, rel=1e-8)


def test_prop22_model_eigenvalue_oracle(prop22):
    # finite volumes converge at second order; Richardson on N and 2N
    m = ModelSpace(3, solve_warping(MODEL, 150.0))
    coarse = weighted_form_eigenvalues(m, 150.0, N=6000, k=1)[0]
    fine = weighted_form_eigenvalues(m, 150.0, N=12000, k=1)[0]
    ref = fine + (fine - coarse) / 3
    assert prop22.rows[0].lambda_d == pytest.approx(ref, abs=1e-6)


def test_prop22_text(prop22):
    text = prop22.to_text()
    assert text.startswith("prop22 n=3")
    assert len(experiments.prop22_rows(prop22)) == 2


@pytest.mark.parametrize("n,beta,delta,k", [
    (3, 2.0, 7.0, 100.0),      # beta (n-1)^2 = 8 = 1 + delta
    (3, 0.0, 6.0, 15.0),       # hyperbolic
    (3, 2.0, 6.0, 14.0),       # k below 2 e^2
])
def test_prop22_preconditions(n, beta, delta, k):
    prof = make_profile(1, beta, 2.0)
    with pytest.raises(HypothesisError):
        verify_prop22(n, prof, delta, k, [5.0])


def test_prop22_needs_tail():
    with pytest.raises(ProfileError):
        verify_prop22(3, make_custom_profile([0, 1], [-1, -1]), 6.0, 15.0, [5.0])


def test_prop22_non_monotone_rejected(monkeypatch):
    real = experiments.first_dirichlet_eigen

    class Fake:
        def __init__(self, lam):
            self.eigenvalue = lam

    def fake(m, L, tol=1e-9):
        # pass at R=5, fail at R=10, pass at R=20
        return Fake(2.0 if L == 300.0 else 0.5)
    monkeypatch.setattr(experiments, "first_dirichlet_eigen", fake)
    with pytest.raises(ExperimentError, match="not monotone"):
        verify_prop22(3, MODEL, 6.0, 15.0, [5.0, 10.0, 20.0])
    monkeypatch.setattr(experiments, "first_dirichlet_eigen", real)


# ------------------------------------------------------------ transplantation

def target(beta, r_join=2.0):
    return make_profile(1, beta, r_join, "radial_curvature")


@pytest.fixture(scope="module")
def margins():
    return {b: transplant_check(3, MODEL, target(b), 1.0, 50.0) for b in (2.0, 3.0, 4.0)}


def test_transplant_example(margins):
    rep = margins[3.0]
    assert rep.quotient < rep.lambda_d_model
    assert rep.margin > 0
    assert rep.margin >= rep.correction - 1e-6
    assert rep.passed()


def test_transplant_monotone_in_target_excess(margins):
    m = [margins[b].margin for b in (2.0, 3.0, 4.0)]
    assert m[0] <= m[1] <= m[2]


def test_transplant_flat_core_volume(margins):
    # beta = 4 with r_join = 2 makes the target flat on the ball W of radius 1
    assert margins[4.0].vol_w == pytest.approx(4 * math.pi / 3, rel=1e-9)


def test_transplant_diagnostics(margins):
    # pointwise comparison along the shifted distance fails on a bounded window here
    assert margins[3.0].shifted_domination < 0
    assert margins[4.0].comparison_excess < 0


def test_transplant_hyperbolic_target_rejected():
    with pytest.raises(HypothesisError, match="domination"):
        transplant_check(3, MODEL, make_profile(1, 0, 1, "radial_curvature"), 1.0, 50.0)


def test_transplant_degenerate_limit():
    # target curvature equal to the model's: margin and correction both vanish as r_w -> 0
    reps = [transplant_check(3, MODEL, target(2.0), r_w, 50.0) for r_w in (0.1, 0.01)]
    for rep, r_w in zip(reps, (0.1, 0.01)):
        assert abs(rep.margin) < 0.1 * r_w ** 2
        assert rep.correction < 0.1 * r_w ** 2
    assert abs(reps[1].margin) < abs(reps[0].margin) / 50


# --------------------------------------------------------------------- sweep

def test_sweep_join_rule():
    assert sweep_r_join(1.0, 0.5) == 1.0
    assert sweep_r_join(1.0, 30.0) == pytest.approx(math.sqrt(30) * 1.01)


def test_predicted_side():
    assert predicted_side(0.5, 2) is Growth.SATURATED
    assert predicted_side(30, 2) is Growth.GROWING
    assert predicted_side(0.25, 3) is Growth.INCONCLUSIVE


def test_sweep_dichotomy_n3():
    entries = threshold_sweep(3, 1.0, [0.1, 10.0], [1e2, 1e3, 1e4])
    got = [e.curve.classification for e in entries]
    assert got == [Growth.SATURATED, Growth.GROWING]
    assert all(e.matches for e in entries)
    assert entries[0].curve.counts[1] == entries[0].curve.counts[2]
    c = entries[1].curve.counts
    assert c[1] - c[0] >= 1 and c[2] - c[1] >= 1


def test_sweep_critical_value_accepted():
    (e,) = threshold_sweep(2, 1.0, [1.0], [1e2, 1e3, 1e4])
    assert e.predicted is Growth.INCONCLUSIVE
    assert e.matches
    assert e.curve.classification is not Growth.GROWING


def test_sweep_needs_two_decades():
    with pytest.raises(ValueError):
        threshold_sweep(2, 1.0, [0.5], [10.0, 100.0])


def test_sweep_csv(tmp_path):
    entries = threshold_sweep(2, 1.0, [0.5], [10.0, 100.0, 1000.0])
    path = tmp_path / "s.csv"
    experiments.write_csv(path, experiments.SWEEP_HEADER, experiments.sweep_rows(entries))
    lines = path.read_text().splitlines()
    assert lines[0] == "n,kappa,beta,L,count,classification,predicted"
    assert lines[1] == "2,1.0,0.5,10.0,0,saturated,saturated"
