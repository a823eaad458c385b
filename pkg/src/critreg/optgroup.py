"""The optimally expanding action of (Z x BS(1,2)) * F_2 and Slow Progress runs.

Layout on the line: J_i = (i - 3/4, i + 3/4) for |i| <= 3, then a chain
L_1, L_2, ... to the right with |J_3 cap L_1| = kappa l_1 and
|L_i cap L_{i+1}| = kappa l_{i+1}; L_{-i} = -L_i.  Generators:

    a   fast bumps on the odd L's (and mirrors) plus a J_0 block
    b   fast bumps on the even L's, a bump on J_{+-1}
    c,d a Thompson pair on J_2 u J_3 (Ghys-Sergiescu), mirrors, J_0 block
    e   J_0 block only

The J_0 block is a ping-pong suspension tuned so that u_0 moves a marker.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .chains import SupportCover, chain_condition_power, covering_distance, is_chain
from .expansion import build_fast_on_chain, measure_fast
from .homeo import (GroupWord, Map1D, PiecewiseGlue, SigmaBump, Transported, _arr, _sigma,
                    _sigma_inv, iterate)
from .modulus import ConcaveModulus
from .thompson import bs12_affine, bs12_compactified, ghys_sergiescu, two_chain_generators

J_RADIUS = 0.75
U0_TEXT = "[[c^d, e e^d e^-1], c]"


# lengths ---------------------------------------------------------------------
@dataclass
class AdmissibleLengths:
    """l_i for i >= 1 with a closed-form bound on sum_{i > n} l_i."""

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    tail: Callable[[int], float]
    ratio_note: str = ""

    def __call__(self, i):
        return self.fn(np.asarray(i, dtype=float))

    def window(self, W: int) -> np.ndarray:
        return self.fn(np.arange(1, W + 1, dtype=float))

    @classmethod
    def invlogsq(cls) -> "AdmissibleLengths":
        """l_i = 1/((i+1) log^2(i+1)); the shift keeps l_1 finite."""
        return cls("invlogsq", lambda i: 1.0 / ((i + 1.0) * np.log(i + 1.0) ** 2),
                   lambda n: 1.0 / math.log(n + 1.0),
                   "ratios increase to 1")

    @classmethod
    def geometric(cls, r: float = 0.5) -> "AdmissibleLengths":
        return cls("geometric", lambda i: r ** i, lambda n: r ** (n + 1) / (1.0 - r),
                   "ratios constant")

    @classmethod
    def inverse(cls) -> "AdmissibleLengths":
        return cls("inverse", lambda i: 1.0 / i, lambda n: math.inf, "harmonic")

    @classmethod
    def parse(cls, text: str) -> "AdmissibleLengths":
        t = text.strip().lower()
        if t == "invlogsq":
            return cls.invlogsq()
        if t.startswith("geometric"):
            r = float(t.split(":", 1)[1]) if ":" in t else 0.5
            return cls.geometric(r)
        if t in ("inverse", "harmonic"):
            return cls.inverse()
        raise ValueError(f"unknown length family {text!r}")


@dataclass
class AdmissibleReport:
    admissible: bool
    partial_sum: float
    tail_bound: float
    ratio_inf: float
    ratio_sup: float
    reason: str


def admissible_check(lengths: AdmissibleLengths, W: int) -> AdmissibleReport:
    ell = lengths.window(W)
    s = math.fsum(ell)
    tail = lengths.tail(W)
    r = ell[1:] / ell[:-1]
    rinf, rsup = float(r.min()), float(r.max())
    if not np.all(ell > 0):
        return AdmissibleReport(False, s, tail, rinf, rsup, "nonpositive length")
    if not math.isfinite(tail):
        return AdmissibleReport(False, s, tail, rinf, rsup, "divergent sum")
    return AdmissibleReport(rinf > 0 and math.isfinite(rsup), s, tail, rinf, rsup, lengths.ratio_note)


# constants -------------------------------------------------------------------
class InfeasibleError(ValueError):
    pass


@dataclass
class Constants:
    c1: float
    c2: float
    kappa: float
    delta0: float
    k: int
    alpha: ConcaveModulus
    lengths: AdmissibleLengths

    def N(self, i):
        """N_i = ceil(1/(l_i^{k-1} alpha(l_i)))."""
        ell = np.atleast_1d(self.lengths(i))
        val = np.ceil(1.0 / (ell ** (self.k - 1) * self.alpha.extended(ell)))
        out = val.astype(np.int64)
        return int(out[0]) if np.ndim(i) == 0 else out

    def constraints(self) -> dict:
        l1 = float(self.lengths(1))
        return {"kappa_l1_lt_1": self.kappa * l1 < 1.0,
                "inv_1_plus_c2_gt_kappa": 1.0 / (1.0 + self.c2) > self.kappa,
                "c1_kappa_gap": self.c1 * self.kappa / (1.0 + self.c1) > 1.0 - self.delta0,
                "delta0_range": 0.9 <= self.delta0 < 1.0}

    def feasible(self) -> bool:
        return all(self.constraints().values())

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "kappa": self.kappa, "delta0": self.delta0,
                "k": self.k, "alpha": self.alpha.to_dict(), "lengths": self.lengths.kind}


def derive_constants(lengths: AdmissibleLengths, k: int, alpha: ConcaveModulus,
                     W: int = 400) -> Constants:
    """c1, c2 bound l_{i+1}/l_i; kappa and delta0 from the chain constraints."""
    rep = admissible_check(lengths, W)
    if not rep.admissible:
        raise InfeasibleError(f"lengths not admissible: {rep.reason}")
    c1 = rep.ratio_inf
    # tails with increasing ratios stay below 1; constant ratios stay put
    c2 = 1.0 if lengths.kind == "invlogsq" else rep.ratio_sup
    l1 = float(lengths(1))
    kappa = 0.5 * min(1.0 / (1.0 + c2), 1.0 / l1)
    delta0 = max(0.9, 1.0 - c1 * kappa / (2.0 * (1.0 + c1)))
    out = Constants(c1, c2, kappa, delta0, k, alpha, lengths)
    bad = [name for name, ok in out.constraints().items() if not ok]
    if bad:
        raise InfeasibleError(f"binding constraints: {', '.join(bad)}")
    return out


# configuration ---------------------------------------------------------------
@dataclass
class ChainConfiguration:
    J: dict
    L: dict
    constants: Constants
    W: int

    def ordered(self) -> list:
        left = [self.L[-i] for i in range(self.W, 0, -1)]
        mid = [self.J[i] for i in range(-3, 4)]
        right = [self.L[i] for i in range(1, self.W + 1)]
        return left + mid + right

    def labelled(self) -> list:
        out = [(f"L{-i}", *self.L[-i]) for i in range(self.W, 0, -1)]
        out += [(f"J{i}", *self.J[i]) for i in range(-3, 4)]
        out += [(f"L{i}", *self.L[i]) for i in range(1, self.W + 1)]
        return out

    def cover(self) -> SupportCover:
        return SupportCover({"F": self.ordered()})

    def is_chain(self) -> bool:
        return bool(is_chain(self.ordered()))

    def overlaps(self) -> dict:
        J3, L = self.J[3], self.L
        d = {"J3_L1": J3[1] - L[1][0]}
        for i in range(1, self.W):
            d[f"L{i}_L{i + 1}"] = L[i][1] - L[i + 1][0]
        return d

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "lo", "hi"])
            for name, lo, hi in self.labelled():
                w.writerow([name, repr(float(lo)), repr(float(hi))])


def build_configuration(lengths: AdmissibleLengths, W: int, constants: Constants) -> ChainConfiguration:
    if not constants.feasible():
        raise InfeasibleError("constants violate the chain constraints")
    J = {i: (i - J_RADIUS, i + J_RADIUS) for i in range(-3, 4)}
    ell = lengths.window(W)
    kap = constants.kappa
    L = {}
    lo = J[3][1] - kap * ell[0]
    for i in range(1, W + 1):
        hi = lo + ell[i - 1]
        L[i] = (lo, hi)
        if i < W:
            lo = hi - kap * ell[i]
    for i in range(1, W + 1):
        L[-i] = (-L[i][1], -L[i][0])
    cfg = ChainConfiguration(J, L, constants, W)
    if not cfg.is_chain():
        raise InfeasibleError("interval family is not a chain")
    return cfg


# building blocks ---------------------------------------------------------------
class Mirrored(Map1D):
    """x -> -inner(-x)."""

    def __init__(self, inner: Map1D):
        self.inner = inner
        lo, hi = inner.domain
        self.domain = (-hi, -lo)

    def _eval(self, x):
        return -self.inner._eval(-x)

    def iterate_closed(self, n, x):
        r = self.inner.iterate_closed(n, -x)
        return None if r is None else -r

    def inverse(self):
        return Mirrored(self.inner.inverse())

    def deriv(self, x, k=1):
        return (-1) ** (k + 1) * self.inner.deriv(-_arr(x), k)

    def to_dict(self):
        return {"node": "Mirrored", "inner": self.inner.to_dict()}


class PointMover(Map1D):
    """Smooth diffeomorphism of [lo, hi], flat at the ends, sending p to q.

    In unit coordinates u -> sigma^{-1}(sigma(u) - sigma(p) + sigma(q)), with the
    difference sigma(u) - sigma(p) formed through expm1 so that points near an
    end do not cancel catastrophically.
    """

    def __init__(self, p: float, q: float, lo: float = 0.0, hi: float = 1.0):
        self.lo, self.hi = float(lo), float(hi)
        self.p = (float(p) - lo) / (hi - lo)
        self.q = (float(q) - lo) / (hi - lo)
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise ValueError("mover points must lie inside the interval")
        self.domain = (self.lo, self.hi)

    def _eval(self, x):
        w = self.hi - self.lo
        u = (x - self.lo) / w
        out = x.copy()
        m = (u > SigmaBump.EDGE) & (u < 1 - SigmaBump.EDGE)
        if np.any(m):
            um, p, q = u[m], self.p, self.q
            with np.errstate(over="ignore"):
                # sigma(u) - sigma(p), exact-ish when u is close to p
                a = (math.exp(1.0 / (1.0 - p)) * np.expm1(1.0 / (1.0 - um) - 1.0 / (1.0 - p))
                     - math.exp(1.0 / p) * np.expm1(1.0 / um - 1.0 / p))
                su = _sigma(um)
            # sigma(q) - sigma(p), same trick
            d = (math.exp(1.0 / (1.0 - p)) * math.expm1(1.0 / (1.0 - q) - 1.0 / (1.0 - p))
                 - math.exp(1.0 / p) * math.expm1(1.0 / q - 1.0 / p))
            sq = float(_sigma(np.array(q)))
            # pick the grouping whose rounding error is smaller
            v = np.where(np.abs(a) + abs(sq) <= np.abs(su) + abs(d), a + sq, su + d)
            out[m] = self.lo + w * _sigma_inv(v)
        return out

    def inverse(self):
        return PointMover(self.lo + self.q * (self.hi - self.lo),
                          self.lo + self.p * (self.hi - self.lo), self.lo, self.hi)


def point_mover(p: float, q: float, lo: float = 0.0, hi: float = 1.0) -> PointMover:
    return PointMover(p, q, lo, hi)


class Chart:
    """Smooth increasing identification [0, 1] -> [lo, hi] sending p1, p2 to q1, q2.

    With ``flip`` the unit interval is first reversed (x -> 1 - x).

    A mover on [0, 1] preserves sigma(p2) - sigma(p1). When that gap is too
    small, a first mover on [a, 1] with a just left of p1 widens it to
    sigma(q2) - sigma(q1); a second mover on [0, 1] then sends p1 to q1 and
    p2 lands on q2.
    """

    def __init__(self, lo: float, hi: float, p1: float, q1: float, p2: float, q2: float,
                 flip: bool = False):
        self.lo, self.hi, self.flip = float(lo), float(hi), bool(flip)
        if flip:
            p1, p2 = 1.0 - p1, 1.0 - p2
        if not (0 < p1 < p2 < 1 and 0 < q1 < q2 < 1):
            raise ValueError("chart points must be increasing inside (0, 1)")
        target = float(_sigma(np.array(q2)) - _sigma(np.array(q1)))
        pair = np.array([p1, p2])
        # put a as far left of p1 as possible while [a, 1] still sees a wide gap;
        # a closer a makes the first mover needlessly ill-conditioned
        a = p1 - min(p2 - p1, 0.5 * p1)
        for u1 in (0.3, 0.2, 0.15, 0.1, 0.07, 0.05, 0.035, 0.025, 0.018, 0.012):
            if u1 >= p1:
                continue
            cand = (p1 - u1) / (1.0 - u1)
            loc = (pair - cand) / (1.0 - cand)
            with np.errstate(over="ignore"):
                if float(_sigma(loc[1:2])[0] - _sigma(loc[:1])[0]) >= 2.0 * target:
                    a = cand
                    break

        def excess(y):
            img = point_mover(p1, y, a, 1.0)._eval(pair)
            with np.errstate(over="ignore", invalid="ignore"):
                return float(_sigma(img[1:2])[0] - _sigma(img[:1])[0]) - target

        e0 = excess(p1)
        if e0 >= 0.0:
            # already well separated: send p1 to q1, then p2 to q2 inside [q1, 1]
            self.t1 = point_mover(p1, q1)
            mid = float(self.t1._eval(pair)[1])
            self.t2 = point_mover(mid, q2, q1, 1.0)
            self.t1i, self.t2i = self.t1.inverse(), self.t2.inverse()
            return
        # too close: push p1 away from a until the gap overshoots, then solve
        near, far = p1, None
        for j in range(1, 60):
            cand = 1.0 - (1.0 - p1) * 0.5 ** j
            e = excess(cand)
            if np.isfinite(e) and e > 0:
                far = cand
                break
            if np.isfinite(e):
                near = cand
        if far is None:
            raise ValueError("chart points cannot be separated to the requested gap")
        y = brentq(excess, *sorted((near, far)), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        self.t1 = point_mover(p1, y, a, 1.0)
        self.t2 = point_mover(y, q1)
        self.t1i, self.t2i = self.t1.inverse(), self.t2.inverse()

    def forward(self, s):
        s = np.asarray(s, dtype=float)
        if self.flip:
            s = 1.0 - s
        return self.lo + (self.hi - self.lo) * self.t2._eval(self.t1._eval(s))

    def backward(self, y):
        s = (np.asarray(y, dtype=float) - self.lo) / (self.hi - self.lo)
        s = self.t1i._eval(self.t2i._eval(s))
        return 1.0 - s if self.flip else s


class Conjugate(Map1D):
    """chart o inner o chart^{-1} on [lo, hi], identity elsewhere."""

    def __init__(self, inner: Map1D, chart: Chart, power: int = 1):
        self.inner, self.chart, self.power = inner, chart, int(power)
        self.domain = (chart.lo, chart.hi)

    def _apply(self, x, n):
        out = x.copy()
        m = (x > self.chart.lo) & (x < self.chart.hi)
        if np.any(m):
            s = np.atleast_1d(self.chart.backward(x[m]))
            s = np.atleast_1d(iterate(self.inner, n, s))
            out[m] = self.chart.forward(s)
        return out

    def _eval(self, x):
        return self._apply(x, self.power)

    def iterate_closed(self, n, x):
        return self._apply(x, n * self.power)

    def inverse(self):
        return Conjugate(self.inner, self.chart, -self.power)

    def to_dict(self):
        return {"node": "Conjugate", "lo": self.chart.lo, "hi": self.chart.hi,
                "power": self.power, "inner": self.inner.to_dict()}


# the J_0 block -------------------------------------------------------------------
G0_LETTERS = ("a", "c", "e")
G1_LETTERS = ("b", "d")
BS_SPLIT = 0.9  # BS(1,2) acts on [0, BS_SPLIT], c on [BS_SPLIT, 1]


def u0_word() -> GroupWord:
    c, d, e = (GroupWord.parse(s) for s in "cde")
    X = GroupWord.conj(c, d)
    Y = e * GroupWord.conj(e, d) * e.inverse()
    return GroupWord.commutator(GroupWord.commutator(X, Y), c)


def factor_syllables(word: GroupWord) -> list:
    """Split a word into maximal runs of letters from one free factor, rightmost first."""
    runs: list = []
    for name, e in reversed(word.syllables):
        side = 0 if name in G0_LETTERS else 1
        if runs and runs[-1][0] == side:
            runs[-1][1].insert(0, (name, e))
        else:
            runs.append((side, [(name, e)]))
    return [(side, GroupWord.from_syllables(syl)) for side, syl in runs]


def _base_letter(name: str) -> Map1D:
    """Generators of the base actions on [0, 1]."""
    if name in ("a", "e"):
        return Transported(bs12_compactified(name), 0.0, BS_SPLIT)
    if name == "c":
        return SigmaBump.fast(BS_SPLIT, 1.0, 0.5)
    if name == "d":
        return SigmaBump.fast(0.0, 1.0, 0.5)
    raise KeyError(name)


def _base_apply(word: GroupWord, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    for name, e in reversed(word.syllables):
        if name == "b":
            continue
        s = np.atleast_1d(iterate(_base_letter(name), e, s))
    return s


def _is_trivial_in_factor(side: int, w: GroupWord) -> bool:
    if side == 1:
        return sum(e for n, e in w.syllables if n == "d") == 0
    cexp = sum(e for n, e in w.syllables if n == "c")
    bs = GroupWord.from_syllables([(n, e) for n, e in w.syllables if n != "c"])
    m, t = bs12_affine(bs)
    return cexp == 0 and m == 0 and t == 0


@dataclass
class PingPongBlock:
    """Copies of the base actions on overlapping windows (i, i+2) of [0, 2n+1]."""

    lo: float
    hi: float
    syllables: list
    charts: list
    marker: float
    expected: float

    def piece(self, letter: str) -> Map1D | None:
        side = 0 if letter in G0_LETTERS else 1
        if letter == "b":
            return None
        base = _base_letter(letter)
        pieces = [((ch.lo, ch.hi), Conjugate(base, ch)) for i, ch in enumerate(self.charts)
                  if i % 2 == side]
        return PiecewiseGlue(pieces, (self.lo, self.hi)) if pieces else None


def build_pingpong(word: GroupWord, lo: float = -J_RADIUS, hi: float = J_RADIUS) -> PingPongBlock:
    syl = factor_syllables(word)
    if not syl or syl[0][0] != 0 or len(syl) % 2:
        raise ValueError("word must alternate factors, starting (rightmost) in the first factor "
                         "and ending in the second")
    for side, w in syl:
        if _is_trivial_in_factor(side, w):
            raise ValueError(f"syllable {w} is trivial")
    n = len(syl)
    unit = (hi - lo) / (n + 1)
    grid = np.linspace(0.01, 0.99, 981)
    charts = []
    for i, (side, w) in enumerate(syl):
        img = _base_apply(w, grid)
        j = int(np.argmax(np.abs(img - grid)))
        p, vp = float(grid[j]), float(img[j])
        # a flipped chart turns a leftward move into a rightward one
        flip = vp < p
        charts.append(Chart(lo + i * unit, lo + (i + 2) * unit, p, 0.25, vp, 0.75, flip=flip))
    marker = lo + 0.5 * unit
    expected = lo + (n + 0.5) * unit
    return PingPongBlock(lo, hi, syl, charts, marker, expected)


# the action -----------------------------------------------------------------------
@dataclass
class OptAction:
    gens: dict
    config: ChainConfiguration
    block: PingPongBlock
    certificates: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def apply(self, word, x):
        if isinstance(word, str):
            word = GroupWord.parse(word)
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        for name, e in reversed(word.syllables):
            xa = np.atleast_1d(iterate(self.gens[name], e, xa))
        return xa

    def N(self, i):
        return self.config.constants.N(i)


def _thompson_pair(J2, J3):
    """c+, d+ on J2 u J3 conjugate to the standard two-chain generators of F."""
    f, g = two_chain_generators()
    gs = ghys_sergiescu()
    cf, dg = gs.realize(f), gs.realize(g)
    e_half, e_3q = (float(v) for v in gs.eta(np.array([0.5, 0.75])))
    lo, hi = J2[0], J3[1]
    q1 = (J3[0] - lo) / (hi - lo)
    q2 = (J2[1] - lo) / (hi - lo)
    chart = Chart(lo, hi, e_half, q1, e_3q, q2)
    return Conjugate(cf, chart), Conjugate(dg, chart)


def build_action(k: int, alpha: ConcaveModulus, lengths: AdmissibleLengths, W: int,
                 constants: Constants | None = None, certify: bool = True,
                 fast_grid: int = 513) -> OptAction:
    const = constants or derive_constants(lengths, k, alpha, W)
    cfg = build_configuration(lengths, W, const)
    L, J = cfg.L, cfg.J
    odd = [L[i] for i in range(1, W + 1, 2)]
    even = [L[i] for i in range(2, W + 1, 2)]
    a_plus = build_fast_on_chain(k, alpha, const.delta0, odd)
    b_plus_L = build_fast_on_chain(k, alpha, const.delta0, even) if even else None
    b_J1 = SigmaBump(J[1][0], J[1][1], 1.0)
    c_plus, d_plus = _thompson_pair(J[2], J[3])
    block = build_pingpong(u0_word())

    def glue(pieces):
        pieces = [p for p in pieces if p[1] is not None]
        return PiecewiseGlue(pieces, (-L[W][1], L[W][1]))

    right_a = [(pc[0], pc[1]) for pc in a_plus.pieces]
    right_b = [(pc[0], pc[1]) for pc in b_plus_L.pieces] if b_plus_L else []
    mirror = lambda lst: [((-hi, -lo), Mirrored(m)) for (lo, hi), m in lst]
    J23 = (J[2][0], J[3][1])
    J0 = (J[0][0], J[0][1])
    gens = {
        "a": glue(right_a + mirror(right_a) + [(J0, block.piece("a"))]),
        "b": glue(right_b + mirror(right_b) + [(J[1], b_J1), ((-J[1][1], -J[1][0]), Mirrored(b_J1))]),
        "c": glue([(J23, c_plus), ((-J23[1], -J23[0]), Mirrored(c_plus)), (J0, block.piece("c"))]),
        "d": glue([(J23, d_plus), ((-J23[1], -J23[0]), Mirrored(d_plus)), (J0, block.piece("d"))]),
        "e": glue([(J0, block.piece("e"))]),
    }
    act = OptAction(gens, cfg, block, params={"k": k, "alpha": alpha.to_dict(),
                                               "lengths": lengths.kind, "W": W})
    if certify:
        act.certificates = certify_action(act, fast_grid)
        bad = [k_ for k_, v in act.certificates.items() if isinstance(v, bool) and not v]
        if bad:
            raise RuntimeError(f"construction certificate failed: {', '.join(bad)}")
    return act


def certify_action(act: OptAction, fast_grid: int = 513) -> dict:
    cfg = act.config
    const = cfg.constants
    W = cfg.W
    out = {}
    # (1) a^{N_i} and b^{N_i} are delta0-fast on their L's
    worst = math.inf
    for i in range(1, W + 1):
        g = act.gens["a" if i % 2 else "b"]
        lo, hi = cfg.L[i]
        # the grid carries the construction's witness point lo + (1 - delta0)|L|/2
        grid = np.append(np.linspace(lo, hi, fast_grid), lo + 0.5 * (1 - const.delta0) * (hi - lo))
        worst = min(worst, measure_fast(g, cfg.L[i], grid, power=int(const.N(i))))
    out["fast_min"] = worst
    out["fast"] = worst >= const.delta0
    # (2) c+, d+ form a two-chain on J2, J3 with the chain condition for some power
    c_plus = next(m for (lo, hi), m in act.gens["c"].pieces if lo == cfg.J[2][0])
    d_plus = next(m for (lo, hi), m in act.gens["d"].pieces if lo == cfg.J[2][0])
    N, res = chain_condition_power([_Restricted(c_plus, cfg.J[2]), _Restricted(d_plus, cfg.J[3])],
                                   [cfg.J[2], cfg.J[3]], n_max=64)
    out["chain_power"] = N
    out["chain_condition"] = N is not None
    # (3) u0 moves the marker across the block. Each syllable is checked on its
    # own marker: the conjugated letters are steep there, so chaining all 32
    # steps in floating point amplifies rounding far past the step residual.
    blk = act.block
    unit = (blk.hi - blk.lo) / (len(blk.syllables) + 1)
    steps = []
    for i, (_, w) in enumerate(blk.syllables):
        x = blk.lo + (i + 0.5) * unit
        steps.append(abs(float(act.apply(w, x)[0]) - (x + unit)))
    out["u0_marker"] = blk.marker
    out["u0_expected"] = blk.expected
    out["u0_step_residual"] = max(steps)
    out["u0_chained_image"] = float(act.apply(u0_word(), blk.marker)[0])
    out["u0_nontrivial"] = max(steps) < 1e-9
    # (4) mirror symmetry away from J_0
    xs = np.concatenate([np.linspace(J_RADIUS + 1e-9, cfg.L[W][1], 4001)])
    sym = 0.0
    for v in "abcd":
        g = act.gens[v]
        sym = max(sym, float(np.max(np.abs(g(-xs) + g(xs)))))
    out["mirror_defect"] = sym
    out["mirror"] = sym < 1e-12
    # b+ > x on J1, sampled where the flat ends still resolve in floats
    j1 = cfg.J[1][0] + (cfg.J[1][1] - cfg.J[1][0]) * np.linspace(0.05, 0.95, 181)
    out["b_moves_J1"] = bool(np.all(act.gens["b"](j1) > j1))
    return out


class _Restricted(Map1D):
    """A glued piece seen only on one interval (for support checks)."""

    def __init__(self, m: Map1D, J):
        self.m = m
        self.domain = (float(J[0]), float(J[1]))

    def _eval(self, x):
        out = x.copy()
        s = (x > self.domain[0]) & (x < self.domain[1])
        if np.any(s):
            out[s] = self.m._eval(x[s])
        return out

    def iterate_closed(self, n, x):
        out = x.copy()
        s = (x > self.domain[0]) & (x < self.domain[1])
        if np.any(s):
            out[s] = np.atleast_1d(iterate(self.m, n, x[s]))
        return out

    def inverse(self):
        return _Restricted(self.m.inverse(), self.domain)


# Slow Progress ------------------------------------------------------------------
@dataclass
class SlowProgressRow:
    i: int
    N: int
    s: float
    cd: int
    in_overlap: bool
    ledger_ok: bool

    @property
    def ratio(self) -> float:
        return self.cd / self.i


@dataclass
class SlowProgressResult:
    rows: list
    s1: float
    ceiling: float
    min_ratio: float
    max_ratio: float
    certificate: bool
    membership_ok: bool
    cd_ok: bool

    def to_dict(self) -> dict:
        return {"s1": self.s1, "ceiling": self.ceiling, "min_ratio": self.min_ratio,
                "max_ratio": self.max_ratio, "certificate": self.certificate,
                "membership_ok": self.membership_ok, "cd_ok": self.cd_ok,
                "rows": len(self.rows)}

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "N_i", "s_i", "CD", "CD/i"])
            for r in self.rows:
                w.writerow([r.i, r.N, repr(float(r.s)), r.cd, repr(float(r.ratio))])


def default_s1(cfg: ChainConfiguration) -> float:
    c = cfg.constants
    ell1 = cfg.L[1][1] - cfg.L[1][0]
    return float(cfg.L[1][0] + 0.5 * ((1.0 - c.delta0) + c.kappa) * ell1)


def slow_progress_experiment(act: OptAction, i_max: int, s1: float | None = None) -> SlowProgressResult:
    """s_{i+1} = v_i^{N_i}(s_i) with v odd = a, v even = b; CD from the chain cover."""
    cfg = act.config
    const = cfg.constants
    if i_max > cfg.W - 2:
        raise ValueError("i_max must be at most W - 2")
    s1 = default_s1(cfg) if s1 is None else float(s1)
    L1 = cfg.L[1]
    ell1 = L1[1] - L1[0]
    if not (L1[0] + (1 - const.delta0) * ell1 < s1 < L1[0] + const.kappa * ell1):
        raise ValueError("s1 outside the admissible slot of L_1")
    cover = cfg.cover()
    rows = []
    s = s1
    for i in range(1, i_max + 1):
        Ni = int(const.N(i))
        g = act.gens["a" if i % 2 else "b"]
        s = float(np.atleast_1d(iterate(g, Ni, np.array([s])))[0])
        Li, Lj = cfg.L[i], cfg.L[i + 1]
        inside = Li[0] < s < Li[1] and Lj[0] < s < Lj[1]
        ellj = Lj[1] - Lj[0]
        off = s - Lj[0]
        ledger = (1 - const.delta0) * ellj < off < const.kappa * ellj
        cd = covering_distance(cover, s1, s)
        rows.append(SlowProgressRow(i, Ni, s, int(cd) if math.isfinite(cd) else -1, inside, ledger))
    ratios = np.array([r.ratio for r in rows])
    ceiling = 1.0 - 1.0 / (4 * const.k + 2)
    membership = all(r.in_overlap and r.ledger_ok for r in rows)
    cd_ok = all(r.cd in (r.i, r.i + 1) for r in rows)
    mn = float(ratios.min())
    return SlowProgressResult(rows, s1, ceiling, mn, float(ratios.max()),
                              membership and cd_ok and mn > ceiling, membership, cd_ok)


# expansion proxy -------------------------------------------------------------------
@dataclass
class ExpandResult:
    U: tuple
    reached: bool
    word: GroupWord
    syllables: int


def expand_search(act: OptAction, U, max_syllables: int = 40,
                  exponents: Sequence[int] = (1, 2, 4, 8, 16)) -> ExpandResult:
    """Greedy word search moving U onto L_1 cap J_3 (a cap miss is not a refutation)."""
    cfg = act.config
    T = (cfg.L[1][0], cfg.J[3][1])
    x, y = float(min(U)), float(max(U))

    def dist(a, b):
        if b <= T[0]:
            return T[0] - b
        if a >= T[1]:
            return a - T[1]
        return 0.0

    syl = []
    cands = [(n, s * e) for n in act.gens for e in exponents for s in (1, -1)]
    for step in range(max_syllables):
        if dist(x, y) == 0.0:
            break
        best = None
        for n, e in cands:
            if syl and syl[-1][0] == n:
                continue
            ab = np.atleast_1d(iterate(act.gens[n], e, np.array([x, y])))
            d = dist(ab[0], ab[1])
            # prefer progress, then longer images
            key = (d, -(ab[1] - ab[0]))
            if best is None or key < best[0]:
                best = (key, n, e, float(ab[0]), float(ab[1]))
        if best is None or best[0][0] >= dist(x, y) and best[0][1] >= -(y - x):
            break
        _, n, e, x, y = best
        syl.append((n, e))
    w = GroupWord.from_syllables(list(reversed(syl)))
    return ExpandResult((float(min(U)), float(max(U))), dist(x, y) == 0.0, w, len(syl))
