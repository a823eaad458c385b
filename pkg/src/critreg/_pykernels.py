"""Pure-Python versions of the hot loops.

These mirror ``_kernels.pyx`` one for one and are used whenever the compiled
extension is unavailable (or when ``CRITREG_PURE_PYTHON=1`` is set).
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right

import numpy as np


def phi_eval(x, vals, ders, n):
    """Cubic Hermite interpolation of the mollifier table on [0, 1].

    ``vals``/``ders`` hold Phi and Phi' at the ``n + 1`` nodes ``i / n``.
    Outside [0, 1] the value is clamped to -1 / +1.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    h = 1.0 / n
    lo = x <= 0.0
    hi = x >= 1.0
    mid = ~(lo | hi)
    out[lo] = -1.0
    out[hi] = 1.0
    xm = x[mid] * n
    i = np.minimum(xm.astype(np.int64), n - 1)
    t = xm - i
    t2 = t * t
    t3 = t2 * t
    out[mid] = ((2 * t3 - 3 * t2 + 1) * vals[i] + (t3 - 2 * t2 + t) * h * ders[i]
                + (-2 * t3 + 3 * t2) * vals[i + 1] + (t3 - t2) * h * ders[i + 1])
    return out


def _phi_scalar(x, vals, ders, n):
    if x <= 0.0:
        return -1.0
    if x >= 1.0:
        return 1.0
    xm = x * n
    i = int(xm)
    if i > n - 1:
        i = n - 1
    t = xm - i
    t2 = t * t
    t3 = t2 * t
    h = 1.0 / n
    return ((2 * t3 - 3 * t2 + 1) * vals[i] + (t3 - 2 * t2 + t) * h * ders[i]
            + (-2 * t3 + 3 * t2) * vals[i + 1] + (t3 - t2) * h * ders[i + 1])


def denjoy_unit_eval(u, pos, length, deficit, cumdef, vals, ders, n):
    """Antiderivative of the Denjoy density on [0, 1].

    ``pos`` is sorted; ``cumdef[j]`` is the total deficit of bumps ``< j``.
    """
    u = np.asarray(u, dtype=float)
    idx = np.searchsorted(pos, u, side="right") - 1
    out = u.copy()
    has = idx >= 0
    j = np.where(has, idx, 0)
    inside = has & (u < pos[j] + length[j])
    after = has & ~inside
    out[after] = u[after] - cumdef[j[after] + 1]
    if np.any(inside):
        ji = j[inside]
        s = (u[inside] - pos[ji]) / length[ji]
        r = 0.5 * (phi_eval(s, vals, ders, n) + 1.0)
        out[inside] = u[inside] - cumdef[ji] - deficit[ji] * r
    return out


def _denjoy_unit_scalar(u, pos, length, deficit, cumdef, vals, ders, n):
    j = bisect_right(pos, u) - 1
    if j < 0:
        return u
    if u < pos[j] + length[j]:
        s = (u - pos[j]) / length[j]
        r = 0.5 * (_phi_scalar(s, vals, ders, n) + 1.0)
        return u - cumdef[j] - deficit[j] * r
    return u - cumdef[j + 1]


def denjoy_orbit(turns, frac, steps, shift, pos, length, deficit, cumdef, vals, ders, n):
    """Iterate the lift ``F(m + u) = m + shift + G(u)`` ``steps`` times.

    The integer part is carried separately so that long orbits keep full
    precision in the fractional coordinate.
    """
    pos_l = pos.tolist()
    len_l = length.tolist()
    def_l = deficit.tolist()
    cum_l = cumdef.tolist()
    v_l = vals.tolist()
    d_l = ders.tolist()
    m = int(turns)
    u = float(frac)
    for _ in range(steps):
        y = shift + _denjoy_unit_scalar(u, pos_l, len_l, def_l, cum_l, v_l, d_l, n)
        k = math.floor(y)
        m += k
        u = y - k
    return m, u


def greedy_cover(lo_sorted, prefmax_hi, a, b):
    """Greedy covering count of [a, b] by open intervals, -1 if impossible.

    ``lo_sorted`` are left ends in increasing order and ``prefmax_hi[i]`` is
    the largest right end among the first ``i + 1`` of them.
    """
    lo_l = lo_sorted.tolist() if hasattr(lo_sorted, "tolist") else list(lo_sorted)
    pm = prefmax_hi.tolist() if hasattr(prefmax_hi, "tolist") else list(prefmax_hi)
    cur = a
    count = 0
    while True:
        j = bisect_left(lo_l, cur)
        if j == 0 or pm[j - 1] <= cur:
            return -1
        count += 1
        best = pm[j - 1]
        if best > b:
            return count
        cur = best
