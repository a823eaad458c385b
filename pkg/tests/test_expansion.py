import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from critreg import expansion as E
from critreg.homeo import Callable1D, SigmaBump
from critreg.modulus import ConcaveModulus

HALF = ConcaveModulus.hoelder(0.5)


def test_fast_power_formula():
    assert E.fast_power(1, HALF, 2.0 ** -6) == 8
    assert E.fast_power(2, HALF, 2.0 ** -6) == 512
    assert E.fast_power(1, ConcaveModulus.lipschitz(), 0.25) == 4


@pytest.mark.parametrize("k", [1, 2])
def test_ell0_is_root(k):
    K0 = E.k0_constant(k)
    ell0 = E.ell0_constant(k, ConcaveModulus.lipschitz())
    # for the Lipschitz gauge l + K0 l = 1 has the closed-form root 1/(1 + K0)
    assert ell0 == pytest.approx(1.0 / (1.0 + K0), rel=1e-12)
    root = brentq(lambda l: l + K0 * math.sqrt(l) - 1.0, 1e-300, 1.0, xtol=1e-300, rtol=1e-15)
    assert E.ell0_constant(k, HALF) == pytest.approx(root, rel=1e-9)


def test_strict_params_reject_long_intervals():
    with pytest.raises(ValueError):
        E.FastDiffeoParams(1, HALF, 0.1)
    p = E.FastDiffeoParams(1, HALF, 0.1, strict=False)
    assert p.beyond_l0 and p.Delta == pytest.approx(0.9 * 0.1 * math.sqrt(0.1))


@pytest.fixture(scope="module")
def lip_map():
    p = E.FastDiffeoParams(1, ConcaveModulus.lipschitz(), 2.0 ** -14, 0.9)
    return p, E.build_fast_diffeo(p)


def test_fast_map_property_checks(lip_map):
    p, f = lip_map
    c = f.checks
    assert c.support and c.plateau and c.monotone and c.ck_ok and c.seminorm_ok
    assert not c.beyond_l0


def test_plateau_is_translation(lip_map):
    p, f = lip_map
    x = np.linspace(p.D0 * p.ell, (1 - p.D0) * p.ell, 33)
    assert np.allclose(f(x) - x, p.Delta, rtol=0, atol=2 * np.spacing(p.ell))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(-6, 6))
def test_closed_iterates_match_steps(lip_map, s, n):
    p, f = lip_map
    x = np.array([s * p.ell])
    step = x.copy()
    g = f if n >= 0 else f.inverse()
    for _ in range(abs(n)):
        step = g(step)
    assert f.iterate_closed(n, x)[0] == pytest.approx(step[0], abs=64 * np.spacing(p.ell))


def test_derivative_against_differences(lip_map):
    p, f = lip_map
    x = np.linspace(0.01, 0.99, 50) * p.ell
    h = 1e-4 * p.ell
    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert np.allclose(f.deriv(x, 1), fd, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 0.99), st.floats(0.1, 3.0))
def test_fast_implies_expansive_for_bumps(delta, L):
    f = SigmaBump.fast(0.0, L, delta)
    # the grid carries the point (1 - delta)/2 |J| that a fast bump moves furthest
    grid = np.sort(np.append(np.linspace(0.0, L, 1025), L * (1 - delta) / 2))
    d = E.measure_fast(f, (0.0, L), grid)
    assert d >= delta - 1e-9
    assert E.measure_expansive(f, (0.0, L), grid) >= E.fast_to_expansive_bound(d) - 1e-3


def test_root_power_expansive():
    f = SigmaBump(0.0, 1.0, 0.05)
    res = E.root_power_expansive(f, (0.0, 1.0), 16, 0.02, np.linspace(0, 1, 513))
    assert res.premise and res.passed
    none = E.root_power_expansive(SigmaBump(0.0, 1.0, 1e-6), (0.0, 1.0), 1, 5.0)
    assert not none.premise


def test_fixed_points_of_sine_perturbation():
    f = Callable1D(lambda x: x + 0.01 * np.sin(3 * np.pi * x))
    pts, cluster = E.fixed_points(f, (0.0, 1.0))
    assert not cluster
    assert np.allclose(pts, [0.0, 1 / 3, 2 / 3, 1.0], atol=1e-10)


def test_k_fixed_policy():
    one = Callable1D(lambda x: 0.5 * x + 0.25, df=lambda x, k=1: np.full_like(x, 0.5))
    rep = E.k_fixed_and_bounds(one, (0.0, 1.0), 1, HALF)
    assert not rep.is_k_fixed and len(rep.fixed_points) == 1
    flat = SigmaBump(0.3, 0.7, 1.0)
    assert E.k_fixed_and_bounds(flat, (0.0, 1.0), 1, HALF).is_k_fixed


@given(st.sets(st.integers(1, 400)), st.integers(10, 400))
def test_density_bounds(idx, H):
    up, low = E.upper_density(idx, H)
    assert 0.0 <= low <= up <= 1.0


def test_density_of_evens():
    up, low = E.upper_density(range(2, 10_001, 2), 10_000)
    assert up == pytest.approx(0.5, abs=1e-3) and low == pytest.approx(0.5, abs=1e-3)


def test_progress_density_examples():
    lin = E.progress_density(np.arange(1000))
    assert lin.ok and lin.upper_progress == 1.0 and lin.limsup_speed == pytest.approx(1.0, abs=1e-2)
    zig = E.progress_density([0, 1] * 500)
    assert zig.ok and zig.progress_set == [1]
    with pytest.raises(ValueError):
        E.progress_density([0, 2, 3])


def test_two_jumps_witness():
    f = SigmaBump.fast(0.2, 0.6, 0.9).inverse()
    g = SigmaBump.fast(0.4, 0.8, 0.9)
    cert = E.two_jumps_witness(f, g, [(0.4, 0.5, 0.6)])
    assert cert.valid and cert.configurations == ["i"]
    bad = E.two_jumps_witness(f, g, [(0.45, 0.5, 0.6)])
    assert not bad.valid and bad.failure == "s_i is not fixed by g"
