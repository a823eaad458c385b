"""Thompson's group F as exact dyadic PL maps, and its smooth realisations.

Also hosts the compactified affine BS(1,2) action, the boundary-flattening
conjugation by e^{-1/x}, and the Yoccoz transfer family.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .homeo import (GroupWord, Map1D, MonotonicityError, YoccozTransfer, _arr, _out,
                    monotone_inverse)
from .mollifier import get_phi


# exact dyadics -----------------------------------------------------------------
class Dyadic:
    """mantissa * 2**exponent with odd mantissa (or zero)."""

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int, exponent: int = 0):
        mantissa, exponent = int(mantissa), int(exponent)
        if mantissa == 0:
            exponent = 0
        else:
            tz = (mantissa & -mantissa).bit_length() - 1
            mantissa >>= tz
            exponent += tz
        self.mantissa, self.exponent = mantissa, exponent

    @classmethod
    def coerce(cls, v) -> "Dyadic":
        if isinstance(v, Dyadic):
            return v
        if isinstance(v, int):
            return cls(v, 0)
        fr = Fraction(v)
        den = fr.denominator
        if den & (den - 1):
            raise ValueError(f"{v} is not a dyadic rational")
        return cls(fr.numerator, -(den.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __float__(self):
        return math.ldexp(self.mantissa, self.exponent)

    def _bin(self, other, op):
        o = Dyadic.coerce(other)
        e = min(self.exponent, o.exponent)
        a = self.mantissa << (self.exponent - e)
        b = o.mantissa << (o.exponent - e)
        return Dyadic(op(a, b), e)

    def __add__(self, other):
        return self._bin(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._bin(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        o = Dyadic.coerce(other)
        return Dyadic(self.mantissa * o.mantissa, self.exponent + o.exponent)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.mantissa, self.exponent)

    def __truediv__(self, other):
        o = Dyadic.coerce(other)
        if abs(o.mantissa) != 1:
            raise ZeroDivisionError("dyadics are only closed under division by powers of two")
        return Dyadic(self.mantissa * o.mantissa, self.exponent - o.exponent)

    def _cmp(self, other):
        return self.to_fraction() - Dyadic.coerce(other).to_fraction()

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self.to_fraction())

    def __repr__(self):
        return f"Dyadic({self.mantissa}, {self.exponent})"

    def __str__(self):
        return str(self.to_fraction())

    def to_pair(self) -> list:
        return [self.mantissa, self.exponent]

    @classmethod
    def from_pair(cls, pair) -> "Dyadic":
        return cls(int(pair[0]), int(pair[1]))


def _is_dyadic(fr: Fraction) -> bool:
    d = fr.denominator
    return d & (d - 1) == 0


def _is_pow2(fr: Fraction) -> bool:
    return fr > 0 and _is_dyadic(fr) and (fr.numerator & (fr.numerator - 1)) == 0


# PL maps -------------------------------------------------------------------
class PLMap(Map1D):
    """Element of F: dyadic breakpoints, power-of-two slopes, fixing 0 and 1.

    Calls with Fraction, Dyadic or int arguments are exact; float and array
    arguments evaluate in floating point.
    """

    def __init__(self, xs: Sequence, ys: Sequence, check: bool = True):
        xs = [Dyadic.coerce(x).to_fraction() if not isinstance(x, Fraction) else x for x in xs]
        ys = [Dyadic.coerce(y).to_fraction() if not isinstance(y, Fraction) else y for y in ys]
        xs, ys = self._merge(xs, ys)
        self.xs, self.ys = tuple(xs), tuple(ys)
        self.domain = (0.0, 1.0)
        self._fx = np.array([float(x) for x in self.xs])
        self._fy = np.array([float(y) for y in self.ys])
        if check:
            self._check()

    @staticmethod
    def _merge(xs, ys):
        ox, oy = [xs[0]], [ys[0]]
        for i in range(1, len(xs)):
            if i < len(xs) - 1:
                s1 = (ys[i] - oy[-1]) / (xs[i] - ox[-1])
                s2 = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                if s1 == s2:
                    continue
            ox.append(xs[i])
            oy.append(ys[i])
        return ox, oy

    def _check(self):
        if self.xs[0] != 0 or self.xs[-1] != 1 or self.ys[0] != 0 or self.ys[-1] != 1:
            raise ValueError("PL maps of F must fix 0 and 1")
        for a, b in zip(self.xs, self.xs[1:]):
            if not b > a:
                raise ValueError("breakpoints must increase")
        for x, y in zip(self.xs, self.ys):
            if not (_is_dyadic(x) and _is_dyadic(y)):
                raise ValueError("breakpoints and values must be dyadic")
        for s in self.slopes:
            if not _is_pow2(s):
                raise ValueError(f"slope {s} is not a power of two")

    @classmethod
    def identity(cls) -> "PLMap":
        return cls([0, 1], [0, 1])

    @property
    def slopes(self) -> list:
        return [(y2 - y1) / (x2 - x1) for x1, x2, y1, y2 in
                zip(self.xs, self.xs[1:], self.ys, self.ys[1:])]

    @property
    def breakpoints(self) -> list:
        return [Dyadic.coerce(x) for x in self.xs]

    @property
    def values(self) -> list:
        return [Dyadic.coerce(y) for y in self.ys]

    def exact(self, x) -> Fraction:
        x = x.to_fraction() if isinstance(x, Dyadic) else Fraction(x)
        if x <= 0 or x >= 1:
            return x  # identity off [0, 1]
        i = bisect_right(self.xs, x) - 1
        x1, x2, y1, y2 = self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]
        return y1 + (y2 - y1) * (x - x1) / (x2 - x1)

    def __call__(self, x):
        if isinstance(x, (Fraction, Dyadic, int)) and not isinstance(x, bool):
            return self.exact(x)
        return super().__call__(x)

    def _eval(self, x):
        inside = (x > 0) & (x < 1)
        return np.where(inside, np.interp(x, self._fx, self._fy), x)

    def deriv(self, x, k=1):
        x = _arr(x)
        if k >= 2:
            return np.zeros_like(x)
        sl = np.array([float(s) for s in self.slopes])
        j = np.clip(np.searchsorted(self._fx, x, side="right") - 1, 0, sl.size - 1)
        return np.where((x >= 0) & (x < 1), sl[j], 1.0)

    def slope_at_zero(self) -> Fraction:
        return self.slopes[0]

    def slope_at_one(self) -> Fraction:
        return self.slopes[-1]

    def compose(self, other: "PLMap") -> "PLMap":
        """self o other (other acts first)."""
        inv = other.inverse_pl()
        pts = sorted(set(other.xs) | {inv.exact(b) for b in self.xs})
        return PLMap(pts, [self.exact(other.exact(x)) for x in pts], check=False)

    def inverse_pl(self) -> "PLMap":
        return PLMap(self.ys, self.xs, check=False)

    def inverse(self):
        return self.inverse_pl()

    def __matmul__(self, other):
        if isinstance(other, PLMap):
            return self.compose(other)
        return super().__matmul__(other)

    def __pow__(self, n: int) -> "PLMap":
        base = self if n >= 0 else self.inverse_pl()
        out = PLMap.identity()
        for _ in range(abs(n)):
            out = base.compose(out)
        return out

    def is_identity(self) -> bool:
        return self.xs == (0, 1) and self.ys == (0, 1)

    def __eq__(self, other):
        return isinstance(other, PLMap) and self.xs == other.xs and self.ys == other.ys

    def __hash__(self):
        return hash((self.xs, self.ys))

    def __repr__(self):
        pts = ", ".join(f"({x},{y})" for x, y in zip(self.xs, self.ys))
        return f"PLMap[{pts}]"

    def support(self) -> list:
        """Open intervals where the map moves points (exact)."""
        out = []
        cur = None
        for x1, x2, y1, y2 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:]):
            moving = not (x1 == y1 and x2 == y2)
            if moving and cur is None:
                cur = x1 if x1 != y1 or True else x2
            if not moving and cur is not None:
                out.append((cur, x1))
                cur = None
        if cur is not None:
            out.append((cur, self.xs[-1]))
        # shrink to the true fixed-point boundaries inside the first/last moving piece
        return out

    def to_dict(self):
        return {"node": "PLMap", "breakpoints": [Dyadic.coerce(x).to_pair() for x in self.xs],
                "values": [Dyadic.coerce(y).to_pair() for y in self.ys]}

    @classmethod
    def from_dict(cls, d) -> "PLMap":
        return cls([Dyadic.from_pair(p) for p in d["breakpoints"]],
                   [Dyadic.from_pair(p) for p in d["values"]])


def _F(*vals):
    return [Fraction(v) for v in vals]


def standard_generators() -> tuple[PLMap, PLMap]:
    """A: x/2, x - 1/4, 2x - 1 on [0,1/2], [1/2,3/4], [3/4,1].
    B: identity on [0,1/2], then the same pattern rescaled onto [1/2,1]."""
    A = PLMap(_F(0, "1/2", "3/4", 1), _F(0, "1/4", "1/2", 1))
    B = PLMap(_F(0, "1/2", "3/4", "7/8", 1), _F(0, "1/2", "5/8", "3/4", 1))
    return A, B


def evaluate_word(gens: dict, word) -> PLMap:
    """Exact product of a word (rightmost syllable acts first)."""
    if isinstance(word, str):
        word = GroupWord.parse(word)
    out = PLMap.identity()
    for name, e in word.syllables:
        out = out.compose(gens[name] ** e)
    return out


RELATORS = ("[A B^-1, A^-1 B A]", "[A B^-1, A^-2 B A^2]")


def _relator_word(text: str) -> GroupWord:
    inner = text.strip()[1:-1]
    left, right = inner.split(",")
    return GroupWord.commutator(GroupWord.parse(left), GroupWord.parse(right))


def relations_check(A: PLMap, B: PLMap) -> tuple[bool, list]:
    """Both defining relators of F evaluated exactly; [x,y] = x y x^-1 y^-1."""
    gens = {"A": A, "B": B}
    results = []
    for rel in RELATORS:
        results.append((rel, evaluate_word(gens, _relator_word(rel)).is_identity()))
    return all(ok for _, ok in results), results


def two_chain_generators() -> tuple[PLMap, PLMap]:
    """f = B A^-1 supported on (0, 3/4) and g = B^-1 supported on (1/2, 1)."""
    A, B = standard_generators()
    return B.compose(A.inverse_pl()), B.inverse_pl()


# n-transitivity ------------------------------------------------------------
def _standard_pieces(a: Fraction, b: Fraction) -> list:
    """Split [a, b] (dyadic ends) into maximal standard dyadic intervals."""
    pieces = []
    cur = a
    while cur < b:
        # largest 2^-m with cur a multiple of 2^-m and cur + 2^-m <= b
        size = Fraction(1)
        while (cur / size).denominator != 1 or cur + size > b:
            size /= 2
        pieces.append((cur, cur + size))
        cur += size
    return pieces


def _split_last(pieces: list) -> list:
    lo, hi = pieces[-1]
    mid = (lo + hi) / 2
    return pieces[:-1] + [(lo, mid), (mid, hi)]


def _dyadic_interval_map(a, b, c, d) -> tuple[list, list]:
    """Breakpoints of a PL map [a,b] -> [c,d] in F's class, via equal-count
    standard dyadic partitions (repeatedly halving the last piece)."""
    P = _standard_pieces(a, b)
    Q = _standard_pieces(c, d)
    while len(P) < len(Q):
        P = _split_last(P)
    while len(Q) < len(P):
        Q = _split_last(Q)
    xs = [p[0] for p in P] + [P[-1][1]]
    ys = [q[0] for q in Q] + [Q[-1][1]]
    return xs, ys


def n_transitive_map(xs: Sequence, ys: Sequence) -> PLMap:
    """An element g of F with g(x_i) = y_i exactly."""
    X = [Dyadic.coerce(x).to_fraction() for x in xs]
    Y = [Dyadic.coerce(y).to_fraction() for y in ys]
    if len(X) != len(Y):
        raise ValueError("tuples must have equal length")
    for T in (X, Y):
        if any(not (0 < t < 1) for t in T):
            raise ValueError("points must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(T, T[1:])):
            raise ValueError("tuples must be strictly increasing")
    X = [Fraction(0)] + X + [Fraction(1)]
    Y = [Fraction(0)] + Y + [Fraction(1)]
    bx, by = [Fraction(0)], [Fraction(0)]
    for i in range(len(X) - 1):
        px, py = _dyadic_interval_map(X[i], X[i + 1], Y[i], Y[i + 1])
        bx += px[1:]
        by += py[1:]
    return PLMap(bx, by)


# Ghys-Sergiescu ------------------------------------------------------------
class ExpansionLift:
    """Lift data h with h(0) = 0, h(x+1) = h(x) + 2 and |h(x) - h(y)| > |x - y|.

    ``unit`` gives h on [0, 1] (values in [0, 2]); ``dunit`` its derivative.
    """

    def __init__(self, unit: Callable, dunit: Callable, name: str = "h"):
        self.unit, self.dunit, self.name = unit, dunit, name

    def __call__(self, x):
        x = _arr(x)
        fl = np.floor(x)
        return 2.0 * fl + self.unit(x - fl)

    def deriv(self, x):
        x = _arr(x)
        return self.dunit(x - np.floor(x))

    def inverse_unit(self, y: np.ndarray) -> np.ndarray:
        """h^{-1} on [0, 2] by safeguarded Newton."""
        lo = np.zeros_like(y)
        hi = np.ones_like(y)
        x = np.clip(0.5 * y, 0.0, 1.0)
        for _ in range(60):
            fx = self.unit(x) - y
            lo = np.where(fx < 0, x, lo)
            hi = np.where(fx >= 0, x, hi)
            d = self.dunit(x)
            xn = x - fx / d
            bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            if np.all(np.abs(xn - x) <= 1e-17 + 1e-16 * np.abs(x)):
                x = xn
                break
            x = xn
        return x

    def inverse(self, y):
        y = _arr(y)
        fl = np.floor(y / 2.0)
        return fl + self.inverse_unit(y - 2.0 * fl)


def doubling_lift() -> ExpansionLift:
    return ExpansionLift(lambda u: 2.0 * u, lambda u: np.full_like(_arr(u), 2.0), "2x")


@lru_cache(maxsize=1)
def default_lift() -> ExpansionLift:
    """h(x) = x + floor(x) + (1 + Phi(frac x))/2: flat to the identity at integers."""
    phi = get_phi()
    return ExpansionLift(lambda u: u + 0.5 * (1.0 + phi(u)),
                         lambda u: 1.0 + 0.5 * phi.derivative(u, 1), "default")


def check_lift(h: ExpansionLift, n: int = 2001, r: int = 3) -> dict:
    """Grid checks of (A) h(0)=0, (B) h(x+1)=h(x)+2, (C) expansion, (D) tangency at 0."""
    g = np.linspace(-2.0, 2.0, n)
    hv = h(g)
    A = abs(float(h(np.array([0.0]))[0])) < 1e-14
    B = float(np.max(np.abs(h(g + 1.0) - hv - 2.0))) < 1e-12
    dv = np.diff(hv) / np.diff(g)
    C = bool(np.all(dv > 1.0 - 1e-12)) and bool(np.all(np.diff(hv) > np.diff(g) * (1 - 1e-12)))
    xs = np.ldexp(1.0, -np.arange(4, 12))
    tang = np.abs(h(xs) - xs) / xs ** r
    D = bool(np.all(np.diff(tang) <= 1e-15) and tang[-1] < 1e-6) if h.name != "2x" else False
    return {"A": A, "B": B, "C": C, "D": D, "tangency_order_checked": r}


class GhysSergiescu:
    """The conjugacy eta_h and the realisation g -> eta o g o eta^{-1}.

    eta(p/2^q) = h^{-q}(p).  Every double is a dyadic rational, so the default
    ``method="exact"`` evaluates eta at floats by peeling binary digits,
    eta(x) = h^{-1}(d_1 + h^{-1}(d_2 + ...)), and eta^{-1} by reading digits
    off the h-orbit.  ``method="table"`` instead interpolates a level-L table
    monotonically (PCHIP); its error against exact values is reported by
    ``interpolation_error``.
    """

    def __init__(self, h: ExpansionLift | None = None, level: int = 20,
                 method: str = "exact", check: bool = True):
        if method not in ("exact", "table"):
            raise ValueError("method must be 'exact' or 'table'")
        self.h = h or default_lift()
        self.level = level
        self.method = method
        if check:
            chk = check_lift(self.h)
            if not (chk["A"] and chk["B"] and chk["C"]):
                raise ValueError(f"expansion lift fails the (A)-(C) checks: {chk}")
        self._table = None
        self._interp = None

    @property
    def table(self) -> np.ndarray:
        """eta at k/2^L, k = 0..2^L, built from eta(x/2) = h^{-1}(eta(x))."""
        if self._table is None:
            t = np.array([0.0, 1.0])
            for _ in range(self.level):
                ext = np.concatenate([t, t[1:] + 1.0])
                new = np.empty(2 * t.size - 1)
                new[0::2] = t
                new[1::2] = self.h.inverse_unit(ext[1::2])
                t = new
            self._table = t
        return self._table

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.table.size)

    def _fit(self):
        if self._interp is None:
            self._interp = PchipInterpolator(self.grid, self.table, extrapolate=False)

    # exact digit evaluation
    def _eta_unit_exact(self, u: np.ndarray) -> np.ndarray:
        m, e = np.frexp(u)
        M = np.ldexp(m, 53).astype(np.int64)
        q = (53 - e).astype(np.int64)
        nz = M != 0
        tz = np.zeros_like(M)
        tz[nz] = np.log2((M[nz] & -M[nz]).astype(float)).astype(np.int64)
        M = M >> tz
        q = np.where(nz, q - tz, 0)
        v = np.zeros_like(u)
        for j in range(int(q.max(initial=0))):
            act = j < q
            bit = ((M[act] >> j) & 1).astype(float) if j < 63 else np.zeros(int(act.sum()))
            v[act] = self.h.inverse_unit(bit + v[act])
        return v

    def _eta_inv_unit_exact(self, t: np.ndarray) -> np.ndarray:
        v = t.copy()
        x = np.zeros_like(t)
        first = np.full(t.shape, -1)
        for i in range(1, 1200):
            act = (v > 0) & ((first < 0) | (i <= first + 55))
            if not act.any():
                break
            w = self.h(v[act])
            d = np.floor(w)
            v[act] = w - d
            hit = act.copy()
            hit[act] = d > 0
            x[hit] += math.ldexp(1.0, -i)
            first = np.where(hit & (first < 0), i, first)
        return x

    def _eta_unit(self, u):
        if self.method == "exact":
            return self._eta_unit_exact(u)
        self._fit()
        return self._interp(u)

    def _eta_inv_unit(self, t):
        if self.method == "exact":
            return self._eta_inv_unit_exact(t)
        self._fit()
        tab, grid = self.table, self.grid
        idx = np.clip(np.searchsorted(tab, t, side="right") - 1, 0, tab.size - 2)
        lo, hi = grid[idx].copy(), grid[idx + 1].copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._interp(mid) < t
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def eta(self, x):
        """eta on the reals, using eta(x + 1) = eta(x) + 1."""
        x = _arr(x)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        fl = np.floor(x)
        out = fl + self._eta_unit(x - fl)
        return float(out[0]) if scalar else out

    def eta_inv(self, y):
        y = _arr(y)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        fl = np.floor(y)
        out = fl + self._eta_inv_unit(y - fl)
        return float(out[0]) if scalar else out

    def _h_iter(self, y: np.ndarray, counts: np.ndarray) -> np.ndarray:
        """h^{counts}(y) elementwise (negative counts use h^{-1})."""
        y = y.copy()
        for sign, fn in ((1, self.h), (-1, self.h.inverse)):
            todo = counts * sign
            for step in range(int(todo.max(initial=0))):
                m = todo > step
                y[m] = fn(y[m])
        return y

    def eta_exact(self, p: int, q: int) -> float:
        """h^{-q}(p) by direct iteration."""
        y = np.array([float(p)])
        for _ in range(q):
            y = self.h.inverse(y)
        return float(y[0])

    def interpolation_error(self, samples: int = 256, seed: int = 0) -> float:
        """max |table interpolant - h^{-(L+2)}(p)| over sampled level-(L+2) dyadics."""
        rng = np.random.default_rng(seed)
        q = self.level + 2
        ps = rng.integers(0, 1 << q, size=samples) | 1
        exact = np.array([float(p) for p in ps])
        for _ in range(q):
            exact = self.h.inverse(exact)
        self._fit()
        return float(np.max(np.abs(self._interp(ps / float(1 << q)) - exact)))

    def realize(self, g: PLMap) -> Map1D:
        return RealizedPL(self, g)

    def homomorphism_defect(self, g1: PLMap, g2: PLMap, grid=None) -> float:
        grid = np.linspace(0.0, 1.0, 201) if grid is None else grid
        lhs = self.realize(g1.compose(g2))(grid)
        rhs = self.realize(g1)(self.realize(g2)(grid))
        return float(np.max(np.abs(lhs - rhs)))

    def orbit_coverage(self, point: float = 0.5, images: int = 10_000, width_exp: int = 8) -> float:
        """Fraction of dyadic cells of width 2^-width_exp met by a word-ball orbit of point."""
        A, B = standard_generators()
        maps = [self.realize(m) for m in (A, A.inverse_pl(), B, B.inverse_pl())]
        seen = {round(point, 13)}
        pts = [point]
        frontier = np.array([point])
        while len(pts) < images and frontier.size:
            nxt = []
            for m in maps:
                for v in np.atleast_1d(m(frontier)):
                    key = round(float(v), 13)
                    if key not in seen:
                        seen.add(key)
                        nxt.append(float(v))
            pts.extend(nxt)
            frontier = np.array(nxt)
        cells = np.unique(np.floor(np.array(pts[:images]) * (1 << width_exp)).astype(int))
        cells = cells[(cells >= 0) & (cells < (1 << width_exp))]
        return cells.size / float(1 << width_exp)


def _log2_pow(fr: Fraction) -> int:
    return fr.numerator.bit_length() - fr.denominator.bit_length()


class RealizedPL(Map1D):
    """eta o g o eta^{-1} on [0, 1], identity elsewhere.

    Each affine piece x -> 2^j x + m/2^k of g realises as
    h^{-k} o (+m) o h^{k+j}, so only eta at the (dyadic) breakpoints is needed
    to select the piece; eta^{-1} is never evaluated.
    """

    def __init__(self, gs: GhysSergiescu, g: PLMap):
        self.gs, self.g = gs, g
        self.domain = (0.0, 1.0)
        self._ebp = gs.eta(np.array([float(x) for x in g.xs]))
        self._pieces = []
        for x1, y1, s_ in zip(g.xs, g.ys, g.slopes):
            c = y1 - s_ * x1
            k = c.denominator.bit_length() - 1
            self._pieces.append((_log2_pow(s_), k, int(c * (1 << k))))

    def _eval(self, x):
        gs = self.gs
        out = x.copy()
        inside = (x > 0) & (x < 1)
        idx = np.clip(np.searchsorted(self._ebp, x, side="right") - 1, 0, len(self._pieces) - 1)
        for i, (j, k, m) in enumerate(self._pieces):
            sel = inside & (idx == i)
            if not np.any(sel):
                continue
            v = x[sel]
            n = v.size
            if j or k or m:
                v = gs._h_iter(v, np.full(n, k + j))
                v = gs._h_iter(v + m, np.full(n, -k))
            out[sel] = v
        return out

    def inverse(self):
        return RealizedPL(self.gs, self.g.inverse_pl())

    def to_dict(self):
        return {"node": "RealizedPL", "h": self.gs.h.name, "g": self.g.to_dict()}


def ghys_sergiescu(h: ExpansionLift | None = None, level: int = 20,
                   method: str = "exact") -> GhysSergiescu:
    return GhysSergiescu(h, level, method)


# BS(1,2) compactified ------------------------------------------------------
def _blend(x):
    """S(x) = (1 + Phi(3x - 1))/2: 0 on [0,1/3], 1 on [2/3,1]."""
    phi = get_phi()
    return 0.5 * (1.0 + phi(3.0 * x - 1.0))


def phi0(x):
    """(0,1) -> R, equal to -1/x on (0,1/3] and 1/(1-x) on [2/3,1); phi0(1-x) = -phi0(x)."""
    x = _arr(x)
    S = _blend(x)
    with np.errstate(divide="ignore"):
        return (1.0 - S) * (-1.0 / x) + S / (1.0 - x)


def dphi0(x):
    x = _arr(x)
    phi = get_phi()
    S = _blend(x)
    dS = 1.5 * phi.derivative(3.0 * x - 1.0, 1)
    return (1.0 - S) / x ** 2 + S / (1.0 - x) ** 2 + dS * (1.0 / (1.0 - x) + 1.0 / x)


def phi0_inv(y):
    y = np.atleast_1d(_arr(y)).astype(float)
    out = np.empty_like(y)
    lo = y <= -3.0
    hi = y >= 3.0
    mid = ~(lo | hi)
    out[lo] = -1.0 / y[lo]
    out[hi] = 1.0 - 1.0 / y[hi]
    if np.any(mid):
        out[mid] = monotone_inverse(phi0, y[mid], 1.0 / 3.0, 2.0 / 3.0, tol=0.0)
    return out


def bs12_affine(word) -> tuple[int, float]:
    """Exact affine representative (2^m, t) of a word in a(x)=2x, e(x)=x+1."""
    if isinstance(word, str):
        word = GroupWord.parse(word)
    m, t = 0, Fraction(0)
    for name, e in reversed(word.syllables):
        for _ in range(abs(e)):
            if name == "a":
                # x -> 2^{+-1} x applied after current (2^m x + t)
                m, t = (m + 1, 2 * t) if e > 0 else (m - 1, t / 2)
            elif name == "e":
                t = t + (1 if e > 0 else -1)
            else:
                raise KeyError(f"BS(1,2) words use a and e, not {name!r}")
    return m, t


class AffineConjugate(Map1D):
    """phi0^{-1} o (x -> 2^m x + t) o phi0 on [0, 1], fixing the endpoints."""

    def __init__(self, m: int, t):
        self.m, self.t = int(m), Fraction(t)
        self.slope = math.ldexp(1.0, self.m)
        self.offset = float(self.t)
        self.domain = (0.0, 1.0)

    def _eval(self, x):
        out = x.copy()
        inside = (x > 0) & (x < 1)
        if np.any(inside):
            out[inside] = phi0_inv(self.slope * phi0(x[inside]) + self.offset)
        return out

    def deriv(self, x, k=1):
        if k != 1:
            raise NotImplementedError
        x = np.atleast_1d(_arr(x))
        y = self._eval(x)
        return self.slope * dphi0(x) / dphi0(y)

    def inverse(self):
        # (2^m x + t)^{-1} = 2^{-m} x - 2^{-m} t
        return AffineConjugate(-self.m, -self.t / Fraction(2) ** self.m if self.m >= 0
                               else -self.t * Fraction(2) ** (-self.m))

    def ratio0(self, z):
        """g(z)/z near 0: there phi0 = -1/x, so g(z) = z / (2^m - t z)."""
        z = _arr(z)
        small = z <= 1.0 / 3.0
        out = np.empty_like(z)
        zs = z[small]
        den = self.slope - self.offset * zs
        img = np.where(den > 0, zs / np.where(den > 0, den, 1.0), 1.0)
        ok = img <= 1.0 / 3.0
        out[small] = np.where(ok, 1.0 / np.where(den > 0, den, 1.0), 0.0)
        bad = np.zeros_like(z, dtype=bool)
        bad[small] = ~ok
        bad |= ~small
        if np.any(bad):
            out[bad] = self._eval(z[bad]) / z[bad]
        return out

    def ratio1(self, w):
        """(1 - g(1 - w))/w near 1: there phi0 = 1/(1-x)."""
        w = _arr(w)
        small = w <= 1.0 / 3.0
        out = np.empty_like(w)
        ws = w[small]
        den = self.slope + self.offset * ws
        ok = (den > 0) & (ws / np.where(den > 0, den, 1.0) <= 1.0 / 3.0)
        out[small] = np.where(ok, 1.0 / np.where(den > 0, den, 1.0), 0.0)
        bad = np.zeros_like(w, dtype=bool)
        bad[small] = ~ok
        bad |= ~small
        if np.any(bad):
            out[bad] = (1.0 - self._eval(1.0 - w[bad])) / w[bad]
        return out

    def to_dict(self):
        return {"node": "AffineConjugate", "m": self.m, "t": str(self.t)}


def bs12_compactified(word, flatten: bool = True) -> Map1D:
    """The compactified image of a word in a(x) = 2x, e(x) = x + 1 on [0, 1]."""
    m, t = bs12_affine(word)
    g = AffineConjugate(m, t)
    return muller_tsuboi_conjugate(muller_tsuboi_conjugate(g)) if flatten else g


# boundary flattening ---------------------------------------------------------
_E3 = math.exp(-3.0)


def mt_phi(x):
    """(1-S) e^{-1/x} + S (1 - e^{-1/(1-x)}): e^{-1/x} near 0, symmetric about 1/2."""
    x = _arr(x)
    S = _blend(x)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return (1.0 - S) * a + S * (1.0 - b)


def mt_phi_inv(y):
    y = np.atleast_1d(_arr(y)).astype(float)
    out = np.empty_like(y)
    lo = y <= _E3
    hi = y >= 1.0 - _E3
    mid = ~(lo | hi)
    with np.errstate(divide="ignore"):
        out[lo] = np.where(y[lo] > 0, -1.0 / np.log(np.where(y[lo] > 0, y[lo], 1.0)), 0.0)
        w = 1.0 - y[hi]
        out[hi] = np.where(w > 0, 1.0 + 1.0 / np.log1p(-y[hi]), 1.0)
    if np.any(mid):
        out[mid] = monotone_inverse(mt_phi, y[mid], 1.0 / 3.0, 2.0 / 3.0, tol=0.0)
    return out


class _BaseRatios:
    """Adapter giving ratio0 / ratio1 for any endpoint-fixing Map1D."""

    def __init__(self, g: Map1D):
        self.g = g
        if hasattr(g, "ratio0"):
            self.d0 = self.d1 = float("nan")
        elif isinstance(g, PLMap):
            self.d0, self.d1 = float(g.slope_at_zero()), float(g.slope_at_one())
        else:
            self.d0 = float(np.atleast_1d(g.deriv(np.array([0.0]), 1))[0])
            self.d1 = float(np.atleast_1d(g.deriv(np.array([1.0]), 1))[0])
        if self.d0 <= 0 or self.d1 <= 0:
            raise ValueError("boundary flattening needs g'(0) > 0 and g'(1) > 0")

    def ratio0(self, z):
        if hasattr(self.g, "ratio0"):
            return self.g.ratio0(z)
        z = _arr(z)
        out = np.full_like(z, self.d0)
        edge = float(self.g.xs[1]) if isinstance(self.g, PLMap) else 1e-300
        far = z >= edge
        out[far] = self.g._eval(z[far]) / z[far]
        return out

    def ratio1(self, w):
        if hasattr(self.g, "ratio1"):
            return self.g.ratio1(w)
        w = _arr(w)
        out = np.full_like(w, self.d1)
        # inside the last affine piece the ratio is the boundary slope exactly;
        # elsewhere 1 - w loses w to rounding once w < eps
        edge = (1.0 - float(self.g.xs[-2])) if isinstance(self.g, PLMap) else 1e-7
        far = w >= edge
        out[far] = (1.0 - self.g._eval(1.0 - w[far])) / w[far]
        return out


class BoundaryFlatten(Map1D):
    """phi^{-1} o inner o phi with phi = e^{-1/x} near 0 (and symmetric near 1).

    Tiny arguments are handled through the ratio g(z)/z, so iterated
    flattenings stay accurate where e^{-1/x} underflows.
    """

    def __init__(self, inner: Map1D):
        self.inner = inner
        self.base = _BaseRatios(inner) if not isinstance(inner, BoundaryFlatten) else inner
        self.domain = (0.0, 1.0)

    def ratio0(self, z):
        """g1(z)/z for the flattened map; exactly 1 where e^{-1/z} underflows."""
        z = _arr(z)
        out = np.empty_like(z)
        small = z <= 1.0 / 3.0
        zs = z[small]
        with np.errstate(divide="ignore", over="ignore"):
            zz = np.where(zs > 0, np.exp(-1.0 / np.where(zs > 0, zs, 1.0)), 0.0)
        r = self.base.ratio0(zz)
        ok = r * zz <= _E3
        out[small] = np.where(ok, 1.0 / (1.0 - zs * np.log(np.where(ok, r, 1.0))), 0.0)
        bad = np.zeros_like(z, dtype=bool)
        bad[small] = ~ok
        bad |= ~small
        if np.any(bad):
            out[bad] = self._eval(z[bad]) / z[bad]
        return out

    def ratio1(self, w):
        w = _arr(w)
        out = np.empty_like(w)
        small = w <= 1.0 / 3.0
        ws = w[small]
        with np.errstate(divide="ignore", over="ignore"):
            ww = np.where(ws > 0, np.exp(-1.0 / np.where(ws > 0, ws, 1.0)), 0.0)
        r = self.base.ratio1(ww)
        ok = r * ww <= _E3
        out[small] = np.where(ok, 1.0 / (1.0 - ws * np.log(np.where(ok, r, 1.0))), 0.0)
        bad = np.zeros_like(w, dtype=bool)
        bad[small] = ~ok
        bad |= ~small
        if np.any(bad):
            out[bad] = (1.0 - self._eval(1.0 - w[bad])) / w[bad]
        return out

    def _eval(self, x):
        out = x.copy()
        lo = (x > 0) & (x <= 1.0 / 3.0)
        hi = (x < 1) & (x >= 2.0 / 3.0)
        mid = (x > 1.0 / 3.0) & (x < 2.0 / 3.0)
        if np.any(lo):
            xl = x[lo]
            with np.errstate(over="ignore"):
                z = np.exp(-1.0 / xl)
            r = self.base.ratio0(z)
            y = r * z
            near = y <= _E3
            res = np.empty_like(xl)
            res[near] = xl[near] / (1.0 - xl[near] * np.log(r[near]))
            if np.any(~near):
                res[~near] = mt_phi_inv(self.inner._eval(z[~near]))
            out[lo] = res
        if np.any(hi):
            wl = 1.0 - x[hi]
            with np.errstate(over="ignore"):
                z = np.exp(-1.0 / wl)
            r = self.base.ratio1(z)
            near = r * z <= _E3
            res = np.empty_like(wl)
            res[near] = 1.0 - wl[near] / (1.0 - wl[near] * np.log(r[near]))
            if np.any(~near):
                res[~near] = mt_phi_inv(self.inner._eval(1.0 - z[~near]))
            out[hi] = res
        if np.any(mid):
            out[mid] = mt_phi_inv(self.inner._eval(mt_phi(x[mid])))
        return out

    def deriv(self, x, k=1):
        raise NotImplementedError

    def inverse(self):
        return BoundaryFlatten(self.inner.inverse())

    def to_dict(self):
        return {"node": "BoundaryFlatten", "inner": self.inner.to_dict()}


def muller_tsuboi_conjugate(g: Map1D) -> BoundaryFlatten:
    """One flattening step; apply twice for the phi^{-2} o g o phi^2 conjugate."""
    return BoundaryFlatten(g)


def double_flatten(g: Map1D) -> BoundaryFlatten:
    return BoundaryFlatten(BoundaryFlatten(g))


def tangency_ratios(g2: Map1D, order: int = 3, js: Iterable[int] = range(4, 21)) -> list:
    """[(x, |g2(x) - x| / x^order)] along x = 2^-j."""
    out = []
    for j in js:
        x = math.ldexp(1.0, -j)
        out.append((x, abs(float(g2(x)) - x) / x ** order))
    return out


def yoccoz_map(a: float, b: float) -> YoccozTransfer:
    return YoccozTransfer(a, b)
