import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critreg import chains
from critreg.homeo import SigmaBump, TanBump


def _bfs_cover(intervals, a, b):
    """Shortest path over intervals: step from I to J when J contains the right end of I."""
    start = [i for i, (lo, hi) in enumerate(intervals) if lo < a < hi]
    dist = {i: 1 for i in start}
    q = deque(start)
    while q:
        i = q.popleft()
        if intervals[i][1] > b:
            return dist[i]
        end = intervals[i][1]
        for j, (lo, hi) in enumerate(intervals):
            if j not in dist and lo < end < hi:
                dist[j] = dist[i] + 1
                q.append(j)
    return math.inf


interval = st.tuples(st.integers(0, 40), st.integers(1, 15)).map(lambda t: (t[0] / 4, (t[0] + t[1]) / 4))


@settings(max_examples=300)
@given(st.lists(interval, min_size=1, max_size=12), st.integers(0, 44), st.integers(0, 12))
def test_greedy_matches_shortest_path(iv, a4, w4):
    a, b = a4 / 4 + 0.125, (a4 + w4) / 4 + 0.125
    assert chains.covering_length(iv, (a, b)) == _bfs_cover(iv, a, b)


@settings(max_examples=100)
@given(st.lists(interval, min_size=1, max_size=7), st.integers(0, 44), st.integers(0, 12))
def test_bruteforce_matches_shortest_path(iv, a4, w4):
    a, b = a4 / 4 + 0.125, (a4 + w4) / 4 + 0.125
    assert chains.covering_length_bruteforce(iv, (a, b)) == _bfs_cover(iv, a, b)


def test_open_intervals_do_not_cover_their_ends():
    iv = [(0.0, 1.0), (1.0, 2.0)]
    assert chains.covering_length(iv, (0.5, 1.5)) == math.inf
    assert chains.covering_length(iv + [(0.9, 1.1)], (0.5, 1.5)) == 3


def test_is_chain():
    assert chains.is_chain([(0, 2), (1, 3), (2.5, 4)])
    chk = chains.is_chain([(0, 2), (1, 3), (3, 4)])
    assert not chk and chk.violation == 1
    with pytest.raises(ValueError):
        chains.IntervalChain([(0, 1), (2, 3)])


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_random_chain_is_chain(m, seed):
    iv = chains.random_chain(np.random.default_rng(seed), m)
    assert chains.is_chain(iv)
    assert all(0.0 <= a < b <= 1.0 for a, b in iv)


def test_cover_csv_round_trip(tmp_path):
    cov = chains.SupportCover({"a": [(0.0, 0.5)], "b": [(0.25, 1.0), (1.5, 2.0)]})
    p = tmp_path / "cover.csv"
    cov.to_csv(p)
    back = chains.SupportCover.from_csv(p)
    assert back.labelled() == cov.labelled()
    assert back.multiplicity() == 2


def test_cover_from_action_finds_supports():
    act = chains.chain_action([(0.1, 0.4), (0.3, 0.7)])
    cov = chains.SupportCover.from_action(act, window=(0.0, 1.0))
    iv = sorted(cov.intervals)
    assert iv[0] == pytest.approx((0.1, 0.4), abs=1e-6)
    assert iv[1] == pytest.approx((0.3, 0.7), abs=1e-6)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_mover_length_equals_covering_length(m):
    iv = chains.random_chain(np.random.default_rng(m), m)
    act = chains.chain_action(iv)
    a = 0.5 * (iv[0][0] + iv[1][0])
    b = 0.5 * (iv[m - 2][1] + iv[m - 1][1])
    res = chains.min_syllable_mover(act, (a, b))
    assert res.found and res.length == chains.covering_length(iv, (a, b)) == m
    # the returned word really moves J off itself
    ga, gb = act.apply(res.word, np.array([a, b]))
    assert ga >= b or gb <= a


def test_mover_inside_one_interval():
    act = chains.chain_action([(0.0, 1.0), (0.5, 1.5)])
    res = chains.min_syllable_mover(act, (0.1, 0.2))
    assert res.length == 1


def test_chain_group_condition_and_power():
    iv = [(0.0, 1.0), (0.5, 1.5)]
    maps = [SigmaBump(*iv[0], 0.05), SigmaBump(*iv[1], 0.05)]
    assert not chains.chain_group_condition(maps, iv)
    N, res = chains.chain_condition_power(maps, iv, n_max=2000)
    assert N is not None and res.ok
    # the condition is monotone in the power from here on
    assert chains.chain_group_condition(maps, iv, power=N + 5, check_support=False)


def test_support_check_rejects_wide_maps():
    with pytest.raises(ValueError):
        chains.chain_group_condition([TanBump(0.0, 1.0, 1.0), TanBump(0.5, 1.5, 1.0)],
                                     [(0.0, 0.9), (0.5, 1.5)])
