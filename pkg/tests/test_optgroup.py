import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from critreg import optgroup as O
from critreg.homeo import GroupWord
from critreg.modulus import ConcaveModulus

HALF = ConcaveModulus.hoelder(0.5)
LENGTHS = O.AdmissibleLengths.invlogsq()


@pytest.fixture(scope="module")
def action():
    return O.build_action(1, HALF, LENGTHS, 120)


def test_invlogsq_tail_bound_against_mpmath():
    for n in (1, 10, 100):
        tail = mpmath.nsum(lambda i: 1 / ((i + 1) * mpmath.log(i + 1) ** 2), [n + 1, mpmath.inf])
        assert float(tail) <= LENGTHS.tail(n)


def test_admissibility():
    assert O.admissible_check(LENGTHS, 200).admissible
    assert not O.admissible_check(O.AdmissibleLengths.inverse(), 200).admissible
    with pytest.raises(O.InfeasibleError):
        O.derive_constants(O.AdmissibleLengths.inverse(), 1, HALF)
    with pytest.raises(ValueError):
        O.AdmissibleLengths.parse("cubic")


def test_constants_for_invlogsq():
    c = O.derive_constants(LENGTHS, 1, HALF, 400)
    l1, l2 = float(LENGTHS(1)), float(LENGTHS(2))
    # ratios l_{i+1}/l_i increase, so the infimum is the first one
    assert c.c1 == pytest.approx(l2 / l1)
    assert c.c2 == 1.0 and c.kappa == 0.25
    assert c.delta0 == pytest.approx(1 - c.c1 * c.kappa / (2 * (1 + c.c1)))
    assert c.feasible()


def test_fast_powers():
    c = O.derive_constants(LENGTHS, 1, HALF, 400)
    i = np.arange(1, 30)
    ref = np.ceil(1.0 / np.sqrt(LENGTHS(i)))
    assert np.array_equal(c.N(i), ref.astype(np.int64))
    c2 = O.derive_constants(LENGTHS, 2, HALF, 400)
    assert c2.N(3) == math.ceil(1.0 / (float(LENGTHS(3)) ** 1.5))


def test_configuration_geometry():
    c = O.derive_constants(LENGTHS, 1, HALF, 50)
    cfg = O.build_configuration(LENGTHS, 50, c)
    assert cfg.is_chain()
    for i in range(1, 51):
        assert cfg.L[-i] == (-cfg.L[i][1], -cfg.L[i][0])
        assert cfg.L[i][1] - cfg.L[i][0] == pytest.approx(float(LENGTHS(i)))
    ov = cfg.overlaps()
    for i in range(1, 50):
        assert ov[f"L{i}_L{i + 1}"] == pytest.approx(c.kappa * float(LENGTHS(i + 1)))


@settings(max_examples=60)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_point_mover_hits_target(p, q):
    m = O.point_mover(p, q)
    assert float(m(p)) == pytest.approx(q, abs=1e-12)


@settings(max_examples=60)
@given(st.floats(0.2, 0.8), st.floats(0.2, 0.8), st.floats(0.2, 0.8))
def test_point_mover_round_trip(p, q, x):
    # away from the ends the mover does not squeeze points below float resolution
    m = O.point_mover(p, q)
    assert float(m.inverse()(m(x))) == pytest.approx(x, abs=1e-9)


@given(st.floats(0.003, 0.997))
def test_identity_mover(p):
    xs = np.linspace(0.01, 0.99, 41)
    assert np.allclose(O.point_mover(p, p)(xs), xs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.booleans())
def test_chart_sends_points(p1, p2, flip):
    assume(abs(p1 - p2) > 0.02)
    p1, p2 = (max(p1, p2), min(p1, p2)) if flip else (min(p1, p2), max(p1, p2))
    ch = O.Chart(2.0, 3.0, p1, 0.25, p2, 0.75, flip=flip)
    out = ch.forward(np.array([p1, p2]))
    assert out == pytest.approx([2.25, 2.75], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.15, 0.85), st.floats(0.15, 0.85), st.booleans())
def test_chart_round_trip(p1, p2, flip):
    # with points near the ends the first mover is steep enough that one ulp of
    # the unit coordinate spans 1e-10 of the image, so stay in the middle here
    assume(abs(p1 - p2) > 0.02)
    p1, p2 = (max(p1, p2), min(p1, p2)) if flip else (min(p1, p2), max(p1, p2))
    ch = O.Chart(2.0, 3.0, p1, 0.25, p2, 0.75, flip=flip)
    ys = np.linspace(2.01, 2.99, 9)
    assert ch.forward(ch.backward(ys)) == pytest.approx(ys, abs=1e-12)


def test_u0_factorisation():
    syl = O.factor_syllables(O.u0_word())
    assert len(syl) % 2 == 0
    assert [side for side, _ in syl] == [i % 2 for i in range(len(syl))]
    # multiplying the runs back gives the word
    back = GroupWord()
    for _, w in reversed(syl):
        back = back * w
    assert back == O.u0_word()


def test_pingpong_rejects_trivial_syllables():
    with pytest.raises(ValueError):
        O.build_pingpong(GroupWord.parse("c d c"))
    with pytest.raises(ValueError):
        O.build_pingpong(GroupWord.parse("d a e a^-1 e^-2"))


def test_action_certificates(action):
    cert = action.certificates
    assert cert["fast"] and cert["chain_condition"] and cert["mirror"] and cert["b_moves_J1"]
    assert cert["u0_nontrivial"] and cert["u0_step_residual"] < 1e-9


def test_generators_are_odd(action):
    xs = np.linspace(1.0, 3.5, 200)
    for v in "abcd":
        g = action.gens[v]
        assert np.allclose(g(-xs), -g(xs), atol=1e-12)


def test_slow_progress(action):
    res = O.slow_progress_experiment(action, 100)
    assert res.membership_ok and res.cd_ok and res.certificate
    assert res.min_ratio > res.ceiling
    with pytest.raises(ValueError):
        O.slow_progress_experiment(action, 119)
    with pytest.raises(ValueError):
        O.slow_progress_experiment(action, 10, s1=action.config.L[1][0])


def test_slow_progress_csv(action, tmp_path):
    res = O.slow_progress_experiment(action, 20)
    p = tmp_path / "sp.csv"
    res.to_csv(str(p))
    rows = p.read_text().splitlines()
    assert rows[0] == "i,N_i,s_i,CD,CD/i" and len(rows) == 21
