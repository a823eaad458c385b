import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critreg import _pykernels as py
from critreg.denjoy import build_scheme
from critreg.mollifier import get_phi
from critreg.modulus import ConcaveModulus

compiled = pytest.importorskip("critreg._kernels")
PHI = get_phi()


def _denjoy_arrays():
    s = build_scheme(ConcaveModulus.hoelder(0.5), "golden", 50)
    order = np.argsort(s.positions)
    pos = np.ascontiguousarray(s.positions[order])
    length = np.ascontiguousarray(s.lengths[order])
    deficit = np.ascontiguousarray(0.5 * length)
    cumdef = np.ascontiguousarray(np.concatenate([[0.0], np.cumsum(deficit)]))
    return pos, length, deficit, cumdef


@given(st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=1, max_size=50))
def test_phi_eval_backends_agree(xs):
    x = np.array(xs)
    a = py.phi_eval(x, PHI.vals, PHI.ders, PHI.n)
    b = compiled.phi_eval(x, PHI.vals, PHI.ders, PHI.n)
    assert np.allclose(a, b, rtol=0, atol=1e-15)


def test_phi_eval_endpoints():
    out = py.phi_eval(np.array([-1.0, 0.0, 1.0, 2.0]), PHI.vals, PHI.ders, PHI.n)
    assert list(out) == [-1.0, -1.0, 1.0, 1.0]


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 1.0, exclude_max=True), min_size=1, max_size=40))
def test_denjoy_unit_eval_backends_agree(us):
    pos, length, deficit, cumdef = _denjoy_arrays()
    u = np.array(us)
    args = (pos, length, deficit, cumdef, PHI.vals, PHI.ders, PHI.n)
    a = py.denjoy_unit_eval(u, *args)
    b = compiled.denjoy_unit_eval(u, *args)
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_denjoy_orbit_backends_agree():
    pos, length, deficit, cumdef = _denjoy_arrays()
    args = (pos, length, deficit, cumdef, PHI.vals, PHI.ders, PHI.n)
    a = py.denjoy_orbit(0, 0.123, 500, 0.618, *args)
    b = compiled.denjoy_orbit(0, 0.123, 500, 0.618, *args)
    assert a[0] == b[0]
    assert abs(a[1] - b[1]) < 1e-10


def _prepared(intervals):
    iv = sorted(intervals)
    lo = np.array([a for a, _ in iv])
    hi = np.maximum.accumulate(np.array([b for _, b in iv]))
    return lo, hi


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0.01, 0.5)), min_size=1, max_size=15),
       st.floats(0, 1), st.floats(0, 0.5))
def test_greedy_cover_backends_agree(raw, a, width):
    lo, hi = _prepared([(x, x + w) for x, w in raw])
    assert py.greedy_cover(lo, hi, a, a + width) == compiled.greedy_cover(lo, hi, a, a + width)


def test_greedy_cover_simple_chain():
    lo, hi = _prepared([(0.0, 1.0), (0.5, 2.0), (1.5, 3.0)])
    assert py.greedy_cover(lo, hi, 0.1, 2.5) == 3
    assert py.greedy_cover(lo, hi, 0.1, 0.9) == 1
    # the endpoint 0 is not inside any open interval
    assert py.greedy_cover(lo, hi, 0.0, 0.9) == -1
