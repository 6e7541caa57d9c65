"""Cubic analysis, the two obstructions, verdicts, and solution assembly."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finsler2d import (Connection, DomainError, FiberProfileMetric,
                       NonConvexError, RiemannianNormProfile,
                       VERDICT_BERWALD, VERDICT_NO_SOLUTION,
                       VERDICT_NORMAL_FORM, classify_difference, classify_k,
                       classify_pair, cubic_analysis, difference_from_k,
                       fiber_equation_residual, integral_condition,
                       k_from_factorization, k_from_riemannian, normal_form_check,
                       normal_form_k, numeric_principal_value, pde_residual,
                       riemannian_witness, solution_metric, solution_residual,
                       theta_grid)


# -- cubic analysis ----------------------------------------------------------

def test_normal_form_cubic_has_single_root_meeting_slope_condition():
    an = cubic_analysis(normal_form_k(1.0, 1.0))
    assert not an.k3_zero
    assert len(an.roots) == 1
    assert an.roots[0] == pytest.approx(1.0, abs=1e-12)
    assert an.root_condition
    assert not an.multiple_roots
    b, c, d = an.factorization
    assert (b, d) == (pytest.approx(1.0), pytest.approx(1.0))
    assert c == pytest.approx(1.0)


def test_three_simple_roots_cannot_all_meet_slope_condition():
    # (t-1)(t-2)(t-3): p' alternates sign between roots, so p' = 1 at every
    # root is impossible
    an = cubic_analysis([1.0, -6.0, 11.0, -6.0])
    assert len(an.roots) == 3
    assert not an.root_condition
    assert an.worst_violation > 1e-3     # scaled violation, far above ROOT_TOL


def test_double_root_fails_slope_condition():
    an = cubic_analysis([1.0, -2.0, 1.0, 0.0])      # t (t - 1)^2
    assert an.multiple_roots
    assert not an.root_condition


def test_k3_zero_branch():
    an = cubic_analysis([0.0, 1.0, 0.0, 1.0])
    assert an.k3_zero
    res = classify_k([0.0, 1.0, 0.0, 1.0])
    assert res.verdict == VERDICT_NO_SOLUTION
    assert res.diagnostics[0][0] == "k3_zero"
    assert "f(0) = 0" in res.reason


# -- integral obstruction ----------------------------------------------------

@pytest.mark.parametrize("fac", [(2.0, -1.0, 1.0), (0.5, -0.5, 2.0),
                                 (1.0, 1.0, 1.0), (-1.5, 0.4, 3.0)])
def test_closed_form_integral_matches_principal_value(fac):
    k = k_from_factorization(*fac)
    an = cubic_analysis(k)
    ic = integral_condition(an)
    pv = numeric_principal_value(an.factorization)
    assert pv == pytest.approx(ic.value, abs=5e-10)


def test_frozen_defect_value():
    an = cubic_analysis(k_from_factorization(2.0, -1.0, 1.0))
    ic = integral_condition(an)
    assert ic.value == pytest.approx(-3.0 * np.pi, rel=1e-12)
    assert not ic.holds


def test_integral_holds_iff_b_equals_d():
    an = cubic_analysis(k_from_factorization(0.7, 0.7, 2.0))
    ic = integral_condition(an)
    assert ic.holds
    assert ic.value == pytest.approx(0.0, abs=1e-10)


# -- normal form check -------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.1, 4.0))
def test_normal_form_check_accepts_family(a, c):
    nf = normal_form_check(normal_form_k(a, c))
    assert nf.matches
    assert nf.a == pytest.approx(a, abs=1e-12)
    assert nf.c == pytest.approx(c, rel=1e-12)
    np.testing.assert_allclose(nf.witness, riemannian_witness(a, c), atol=1e-12)


def test_normal_form_check_rejects_perturbation():
    k = normal_form_k(1.0, 1.0).array.copy()
    k[2] += 1e-3
    nf = normal_form_check(k)
    assert not nf.matches
    assert nf.residual > 1e-4
    assert nf.witness is None


def test_normal_form_check_rejects_nonpositive_k3():
    nf = normal_form_check([-1.0, 0.0, 1.0, 0.0])
    assert not nf.matches and nf.residual == np.inf


# -- verdicts ----------------------------------------------------------------

def test_verdict_simple_normal_form():
    res = classify_k([1.0, 0.0, 1.0, 0.0])
    assert res.verdict == VERDICT_NORMAL_FORM
    assert res.a == pytest.approx(0.0, abs=1e-12)
    assert res.c == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(res.witness, np.eye(2), atol=1e-12)
    assert len(res.basis) == 2


def test_verdict_shifted_normal_form():
    res = classify_k([1.0, -3.0, 4.0, -2.0])
    assert res.verdict == VERDICT_NORMAL_FORM
    assert res.a == pytest.approx(1.0, abs=1e-10)
    assert res.c == pytest.approx(1.0, rel=1e-10)


def test_verdict_pole():
    res = classify_k([1.0, 0.0, 2.0, 0.0])
    assert res.verdict == VERDICT_NO_SOLUTION
    assert "pole" in res.reason
    assert any(s == "root_condition" for s, _, _ in res.diagnostics)


def test_verdict_periodicity_defect():
    res = classify_k(k_from_factorization(2.0, -1.0, 1.0))
    assert res.verdict == VERDICT_NO_SOLUTION
    assert "defect" in res.reason
    assert f"{3.0 * np.pi:.6g}" in res.reason
    assert res.diagnostics[-1][0] == "integral_condition"


def test_random_k_always_classifies(rng):
    verdicts = set()
    for _ in range(50):
        res = classify_k(rng.normal(size=4))
        verdicts.add(res.verdict)
        assert res.verdict in (VERDICT_NORMAL_FORM, VERDICT_NO_SOLUTION)
    assert VERDICT_NO_SOLUTION in verdicts   # generic K is obstructed


@settings(max_examples=30, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.1, 4.0))
def test_classification_recovers_parameters(a, c):
    res = classify_k(normal_form_k(a, c))
    assert res.verdict == VERDICT_NORMAL_FORM
    assert res.a == pytest.approx(a, abs=1e-10)
    assert res.c == pytest.approx(c, rel=1e-10)


# -- from difference data ----------------------------------------------------

def test_zero_torsion_is_berwald():
    gam = np.zeros((2, 2, 2))
    gam[0, 0, 0] = 0.4
    res = classify_difference(difference_from_k([1.0, 0.0, 1.0, 0.0]).__class__(
        gam, np.zeros((2, 2, 2))))
    assert res.verdict == VERDICT_BERWALD
    assert res.normalization is None


def test_classify_pair_from_connections():
    dd = difference_from_k(normal_form_k(0.5, 2.0))
    d = Connection(np.zeros((2, 2, 2)))
    gb = Connection(dd.gamma + 0.5 * dd.torsion)
    res = classify_pair(gb, d)
    assert res.verdict == VERDICT_NORMAL_FORM
    assert res.a == pytest.approx(0.5, abs=1e-10)


def test_transformed_difference_still_normal_form(rng):
    k = normal_form_k(0.7, 1.3)
    dd = difference_from_k(k)
    m = np.array([[1.2, 0.4], [-0.3, 0.9]])
    res = classify_difference(dd.transform(m))
    assert res.verdict == VERDICT_NORMAL_FORM
    assert res.normalization is not None
    # witness stays a valid SPD matrix even though (A, C) is gauge-dependent
    w = np.asarray(res.witness)
    assert np.linalg.eigvalsh(w).min() > 0.0


# -- k from riemannian data --------------------------------------------------

def test_k_from_riemannian_inverts_witness():
    for a, c in [(0.0, 1.0), (1.0, 1.0), (-0.8, 2.5)]:
        k = k_from_riemannian(riemannian_witness(a, c))
        np.testing.assert_allclose(k.array, normal_form_k(a, c).array,
                                   atol=1e-12)


def test_k_from_riemannian_scale_invariant():
    g = riemannian_witness(0.6, 1.7)
    k1 = k_from_riemannian(g)
    k2 = k_from_riemannian(1e6 * g)
    np.testing.assert_allclose(k2.array, k1.array, rtol=1e-12)


# -- solution assembly -------------------------------------------------------

def test_solution_metric_and_residual():
    res = classify_k(normal_form_k(0.5, 1.5))
    met = solution_metric(res, c_witness=2.0, c_sin=0.3)
    assert isinstance(met, FiberProfileMetric)
    assert met.evaluate([0.0, 0.0], [1.0, 1.0]) > 0.0
    assert solution_residual(res) < 1e-10
    dd = difference_from_k(res.k)
    for ang in np.linspace(0.1, 2.0 * np.pi, 9):
        y = np.array([np.cos(ang), np.sin(ang)])
        assert np.abs(pde_residual(met, dd, [0.0, 0.0], y)).max() < 1e-10


def test_solution_metric_guards():
    res = classify_k(normal_form_k(0.0, 1.0))
    with pytest.raises(NonConvexError):
        solution_metric(res, c_witness=-1.0)
    with pytest.raises(NonConvexError):
        solution_metric(res, c_witness=0.1, c_sin=5.0)   # f dips negative
    bad = classify_k([1.0, 0.0, 2.0, 0.0])
    with pytest.raises(DomainError):
        solution_metric(bad)
    with pytest.raises(DomainError):
        solution_residual(bad)


def test_original_coordinates_round_trip(rng):
    """Pulling the solution back through the torsion normalization solves
    the PDE system of the untransformed difference data."""
    k = normal_form_k(-0.4, 2.2)
    dd_orig = difference_from_k(k).transform(np.array([[0.9, -0.5],
                                                       [0.2, 1.1]]))
    res = classify_difference(dd_orig)
    assert res.verdict == VERDICT_NORMAL_FORM
    met = solution_metric(res, c_witness=1.0, c_sin=0.1,
                          original_coordinates=True)
    for _ in range(20):
        y = rng.normal(size=2)
        if np.linalg.norm(y) < 0.1:
            continue
        assert np.abs(pde_residual(met, dd_orig, [0.0, 0.0], y)).max() < 1e-9


def test_witness_profile_solves_fiber_equation():
    res = classify_k(normal_form_k(1.2, 0.8))
    prof = RiemannianNormProfile(res.witness)
    r = fiber_equation_residual(prof, res.k, theta_grid(256))
    assert np.abs(r).max() < 1e-10


# -- serialization -----------------------------------------------------------

def test_classification_json_round_trips_through_dumps():
    res = classify_k(normal_form_k(1.0, 1.0))
    blob = json.dumps(res.to_json_dict(), sort_keys=True)
    data = json.loads(blob)
    assert data["verdict"] == VERDICT_NORMAL_FORM
    assert data["a"] == pytest.approx(1.0)
    assert {d["stage"] for d in data["diagnostics"]} >= {"k3_zero",
                                                         "root_condition"}
    neg = classify_k([0.0, 1.0, 0.0, 1.0])
    json.dumps(neg.to_json_dict())    # inf-safe encoding must not raise
