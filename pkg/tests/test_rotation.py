import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from critreg import rotation
from critreg.homeo import Callable1D, CircleMap
from critreg.rotation import Theta


def _h(x):
    return x + 0.08 * np.sin(2 * np.pi * x)


def _h_inv(y):
    return np.vectorize(lambda v: brentq(lambda x: _h(x) - v, v - 1, v + 1, xtol=1e-15))(y)


def _conjugated_rotation(theta):
    return CircleMap(Callable1D(lambda u: _h(_h_inv(u) + theta)))


@pytest.mark.parametrize("P,D,Q", [(-1, 5, 2), (-1, 2, 1), (1, 3, 2), (2, 7, 3)])
def test_partial_quotients_match_sympy(P, D, Q):
    terms, done = rotation.continued_fraction(Theta.quadratic(P, D, Q), 20)
    pre = sympy.continued_fraction_periodic(P, Q, D)
    head = [t for t in pre if not isinstance(t, list)]
    period = pre[-1] if isinstance(pre[-1], list) else []
    ref = list(head)
    while len(ref) < 20:
        ref += period
    assert not done and terms == ref[:20]


def test_rational_expansion_terminates():
    terms, done = rotation.continued_fraction(Theta.parse("13/8"), 10)
    assert done and terms == [1, 1, 1, 1, 2]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        conv = rotation.convergents(Theta.parse("13/8"), 10)
    assert conv.rational and conv[-1] == (13, 8)


def test_silver_convergents_are_pell_ratios():
    conv = rotation.convergents(Theta.parse("sqrt2m1"), 8)
    assert conv[:4] == [(1, 2), (2, 5), (5, 12), (12, 29)]
    for p, q in conv:
        assert math.gcd(p, q) == 1
        assert rotation.approximation_quality(Theta.parse("silver"), p, q) < 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3000))
def test_dirichlet_bound(N):
    th = Theta.parse("invpi")
    r = rotation.dirichlet_approx(th, N)
    assert 1 <= r.q < N
    assert r.error < 1.0 / N


def test_dirichlet_rational_exact():
    r = rotation.dirichlet_approx(Theta.parse("3/7"), 100)
    assert r.rational and (r.p, r.q) == (3, 7) and r.error == 0.0


@given(st.floats(0.0, 1.0, exclude_max=True), st.floats(0.0, 1.0, exclude_max=True))
def test_rigid_rotation_number(theta, x0):
    est = rotation.rotation_number(CircleMap.rotation(theta), 500, x0)
    assert rotation.circle_distance(est.value, theta) <= 1.0 / 500


def test_rotation_number_conjugacy_invariant():
    th = Theta.golden().value
    f = _conjugated_rotation(th)
    assert f.periodicity_defect() < 1e-12
    est = rotation.rotation_number(f, 2000, 0.3)
    assert rotation.circle_distance(est.value, th) <= est.error_bound


def test_koksma_holds_off_rigid_case():
    th = Theta.golden()
    f = _conjugated_rotation(th.value)
    # cos composed with h has variation <= 4 as h is monotone
    res = rotation.denjoy_koksma_check(f, lambda x: np.cos(2 * np.pi * x), 89, theta=th,
                                       variation=4.0, mean_orbit=40_000)
    assert res.is_convergent and res.passed


def test_koksma_warns_off_convergents():
    with pytest.warns(UserWarning):
        res = rotation.denjoy_koksma_check(CircleMap.rotation(Theta.golden().value),
                                           lambda x: np.sin(2 * np.pi * x), 50, theta=Theta.golden())
    assert not res.is_convergent


def test_arc_mass_and_csv(tmp_path):
    mu = rotation.EmpiricalMeasure.lebesgue(1000)
    assert mu.arc_mass(0.9, 0.2) == pytest.approx(0.2)
    p = tmp_path / "mu.csv"
    mu.to_csv(str(p))
    nu = rotation.EmpiricalMeasure.from_csv(str(p))
    assert np.array_equal(nu.points, mu.points)


def test_measure_rotation_number_of_orbit_measure():
    th = Theta.golden().value
    f = _conjugated_rotation(th)
    mu = rotation.EmpiricalMeasure.from_orbit(f, 0.1, 3000)
    res = rotation.measure_rotation_number(mu, f, 0.1, cross_check_n=3000, tol=1e-3)
    assert rotation.circle_distance(res.value, th) < 2e-3
    assert res.agrees


def test_stationary_mc_deterministic_and_near_uniform():
    gens = [CircleMap.rotation(Theta.golden().value), CircleMap.rotation(Fraction(1, 3).__float__())]
    a = rotation.stationary_measure_mc(gens, [0.5, 0.5], 20, 4000, seed=5)
    b = rotation.stationary_measure_mc(gens, [0.5, 0.5], 20, 4000, seed=5)
    assert np.array_equal(a.measure.points, b.measure.points)
    assert a.lebesgue_deviation < 0.03
    with pytest.raises(ValueError):
        rotation.stationary_measure_mc(gens, [0.7, 0.7], 1, 10, seed=0)


def test_circle_distance_wraps():
    assert rotation.circle_distance(0.99, 0.01) == pytest.approx(0.02)
