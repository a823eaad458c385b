import json
import math
import os
import subprocess
import sys

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critreg.denjoy import (SchemeError, WanderingScheme, blowup_positions, build_denjoy,
                            build_scheme, endpoint_errors, lengths_from_modulus, verify_denjoy)
from critreg.modulus import ConcaveModulus
from critreg.rotation import Theta

HALF = ConcaveModulus.hoelder(0.5)


@pytest.mark.parametrize("tau", [0.3, 0.5, 0.8])
def test_hoelder_lengths_closed_form(tau):
    ld = lengths_from_modulus(ConcaveModulus.hoelder(tau), 40)
    k = np.abs(np.arange(-40, 41)) + ld.K
    # v(x) = x^2 alpha(1/x) = x^(2 - tau)
    assert np.allclose(ld.lengths, k ** (tau - 2.0), rtol=1e-13)
    assert ld.tail_bound == pytest.approx(2 * (1 / (40 + ld.K)) ** (1 - tau) / (1 - tau), rel=1e-12)
    assert math.fsum(ld.lengths) + ld.tail_bound <= 1.0


def test_full_sum_below_one_with_mpmath():
    ld = lengths_from_modulus(HALF, 30)
    K = ld.K
    full = 1 / mpmath.mpf(K) ** 1.5 + 2 * mpmath.nsum(lambda k: 1 / (k + K) ** 1.5, [1, mpmath.inf])
    assert float(full) <= 1.0
    # the tail bound dominates the neglected terms
    tail = 2 * mpmath.nsum(lambda k: 1 / (k + K) ** 1.5, [31, mpmath.inf])
    assert float(tail) <= ld.tail_bound


def test_non_integrable_modulus_rejected():
    with pytest.raises(SchemeError):
        lengths_from_modulus(ConcaveModulus.lipschitz(), 10)


def test_positions_against_high_precision_oracle():
    W = 12
    ld = lengths_from_modulus(HALF, W)
    pos, fr, c, _ = blowup_positions("golden", ld.lengths, W)
    with mpmath.workdps(40):
        th = (mpmath.sqrt(5) - 1) / 2
        fracs = [mpmath.frac(k * th) for k in range(-W, W + 1)]
        lw = mpmath.mpf(float(ld.lengths[-1]))
        mass = [mpmath.mpf(float(x)) - lw for x in ld.lengths]
        cc = 1 - mpmath.fsum(mass)
        for j in range(2 * W + 1):
            ref = cc * fracs[j] + mpmath.fsum(m for f, m in zip(fracs, mass) if f < fracs[j])
            assert abs(float(ref) - pos[j]) < 1e-15
    assert c == pytest.approx(float(cc), abs=1e-15)


def test_scheme_invariants():
    s = build_scheme(HALF, "golden", 200)
    assert s.order_preserved() and s.disjoint()
    assert s.position(0) == 0.0
    # consecutive gaps span arcs of the same length theta, so their free masses
    # differ by l_W times a difference of point counts, bounded via the discrepancy
    lw = s.lengths[-1]
    res = s.gap_mass_residual()
    count = res / lw
    assert abs(count - round(count)) < 1e-6
    assert res <= 4 * (s.position_error - s.tail_bound)


def test_scheme_csv_round_trip(tmp_path):
    s = build_scheme(HALF, "sqrt2m1", 30)
    p = tmp_path / "scheme.csv"
    s.to_csv(str(p))
    meta = json.loads(json.dumps(s.to_dict()))
    back = WanderingScheme.from_csv(str(p), meta)
    assert np.array_equal(back.positions, s.positions)
    assert np.array_equal(back.lengths, s.lengths)
    assert back.theta.quad == s.theta.quad


@pytest.fixture(scope="module")
def small_map():
    return build_denjoy(HALF, "golden", 100)


@settings(max_examples=30, deadline=None)
@given(st.integers(-99, 98))
def test_intervals_map_onto_next(small_map, k):
    assert endpoint_errors(small_map, [k])[0] < 1e-12


def test_map_is_rotation_off_intervals(small_map):
    s = small_map.scheme
    rep = verify_denjoy(small_map, n_iters=300, rotation_iters=20_000)
    assert rep.plateau_ok and rep.wandering
    assert rep.rotation_error <= rep.rotation_bound
    assert small_map.checks["integral_g_defect"] < 1e-12
    # f is increasing: g > 0 on a fine grid
    x = np.linspace(0.0, 1.0, 50_001)
    assert np.min(small_map.g(x)) > 0
    assert s.window_sum() + s.tail_bound <= 1.0


def test_orbit_matches_pure_python_backend(small_map):
    m, u = small_map.orbit_split_fast(0.2, 5000)
    code = ("from critreg import kernels; from critreg.denjoy import build_denjoy;"
            "from critreg.modulus import ConcaveModulus as C;"
            "f = build_denjoy(C.hoelder(0.5), 'golden', 100);"
            "print(kernels.BACKEND, *f.orbit_split_fast(0.2, 5000))")
    env = dict(os.environ, CRITREG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python"
    assert int(out[1]) == m
    assert abs(float(out[2]) - u) < 1e-9
