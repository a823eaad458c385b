"""Interval chains, covering lengths and distances, and chain-group tests."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .homeo import GroupAction, GroupWord, Map1D, SigmaBump, TanBump, iterate, support_components

Interval = tuple  # (inf, sup), open


@dataclass(frozen=True)
class ChainCheck:
    ok: bool
    violation: int | None = None  # index j where I_j, I_{j+1} break the chain pattern

    def __bool__(self):
        return self.ok


def is_chain(intervals: Sequence[Interval]) -> ChainCheck:
    """inf I_j < inf I_{j+1} < sup I_j < sup I_{j+1} for consecutive pairs."""
    for j, (a, b) in enumerate(zip(intervals, intervals[1:])):
        if not (a[0] < b[0] < a[1] < b[1]):
            return ChainCheck(False, j)
    return ChainCheck(True, None)


@dataclass
class IntervalChain:
    intervals: list

    def __post_init__(self):
        self.intervals = [(float(a), float(b)) for a, b in self.intervals]
        chk = is_chain(self.intervals)
        if not chk:
            raise ValueError(f"not a chain at position {chk.violation}")

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def union(self) -> Interval:
        return (self.intervals[0][0], self.intervals[-1][1])


@dataclass
class SupportCover:
    """Support components per generator; ``window`` bounds what was materialised."""

    components: dict = field(default_factory=dict)
    window: tuple | None = None

    @classmethod
    def from_intervals(cls, intervals: Iterable[Interval], label: str = "v") -> "SupportCover":
        return cls({label: [(float(a), float(b)) for a, b in intervals]})

    @classmethod
    def from_action(cls, action: GroupAction, window=None, resolution: int = 4097) -> "SupportCover":
        comps = {}
        for name, m in action.gens.items():
            comps[name] = _supports(m, window, resolution)
        return cls(comps, window)

    @property
    def intervals(self) -> list:
        return [iv for lst in self.components.values() for iv in lst]

    def labelled(self) -> list:
        return [(name, a, b) for name, lst in self.components.items() for a, b in lst]

    def multiplicity(self) -> int:
        """Largest number of listed intervals sharing a point."""
        ev = []
        for a, b in self.intervals:
            ev.append((a, 1))
            ev.append((b, -1))
        ev.sort(key=lambda t: (t[0], t[1]))  # open ends close before opens at the same point
        best = cur = 0
        for _, d in ev:
            cur += d
            best = max(best, cur)
        return best

    def prepared(self):
        iv = sorted(self.intervals)
        lo = np.ascontiguousarray([a for a, _ in iv], dtype=float)
        hi = np.maximum.accumulate(np.array([b for _, b in iv], dtype=float)) if iv else np.zeros(0)
        return lo, np.ascontiguousarray(hi)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "lo", "hi"])
            for name, a, b in self.labelled():
                w.writerow([name, repr(a), repr(b)])

    @classmethod
    def from_csv(cls, path) -> "SupportCover":
        comps: dict = {}
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            return cls({})
        header = [h.strip().lower() for h in rows[0]]
        body = rows[1:] if "lo" in header else rows
        for r in body:
            if not r:
                continue
            if len(r) == 2:
                name, a, b = "v", r[0], r[1]
            else:
                name, a, b = r[0], r[1], r[2]
            a, b = float(a), float(b)
            if not a < b:
                raise ValueError(f"empty interval ({a}, {b}) in {path}")
            comps.setdefault(name, []).append((a, b))
        return cls(comps)


def _supports(m: Map1D, window=None, resolution: int = 4097) -> list:
    if isinstance(m, (TanBump, SigmaBump)):
        return [(m.lo, m.hi)] if m.power else []
    dom = window or m.domain
    return support_components(m, resolution=resolution, domain=dom)


def _as_cover(cover) -> SupportCover:
    if isinstance(cover, SupportCover):
        return cover
    return SupportCover.from_intervals(cover)


def covering_length(cover, target: Interval):
    """Least number of cover intervals whose union contains the closed target.

    Greedy sweep: from the current frontier take the interval through it
    reaching furthest right.  Returns ``math.inf`` when the frontier stalls
    (relative to the materialised window for infinite covers).
    """
    a, b = float(min(target)), float(max(target))
    lo, hi = _as_cover(cover).prepared()
    if lo.size == 0:
        return math.inf
    n = int(kernels.greedy_cover(lo, hi, a, b))
    return math.inf if n < 0 else n


def covering_distance(cover, x: float, y: float):
    """CL of the closed interval between x and y."""
    return covering_length(cover, (min(x, y), max(x, y)))


def covering_length_bruteforce(intervals: Sequence[Interval], target: Interval, max_size=None):
    """Exhaustive minimum over subsets (an oracle for small covers)."""
    a, b = float(min(target)), float(max(target))
    iv = [tuple(map(float, t)) for t in intervals]
    top = len(iv) if max_size is None else min(max_size, len(iv))
    for k in range(1, top + 1):
        for sub in itertools.combinations(iv, k):
            if _covers_exact(sub, a, b):
                return k
    return math.inf


def _covers_exact(sub, a, b) -> bool:
    """Does the union of open intervals contain [a, b]?"""
    cur = a  # leftmost point of [a, b] not yet known to be covered
    changed = True
    used = [False] * len(sub)
    while changed:
        changed = False
        for i, (lo, hi) in enumerate(sub):
            if not used[i] and lo < cur < hi:
                used[i] = True
                cur = hi
                changed = True
                if cur > b:
                    return True
    return False


# syllable search ---------------------------------------------------------------
@dataclass
class MoverResult:
    length: int | None
    word: GroupWord | None
    caps: dict
    complete: bool = True

    @property
    def found(self) -> bool:
        return self.length is not None


def _exponents(cap: int) -> list:
    out = []
    n = 1
    while n <= cap:
        out += [n, -n]
        n *= 2
    return out


def min_syllable_mover(action: GroupAction, J: Interval, max_syllables: int = 6,
                       exponent_cap: int = 1024, max_frontier: int = 400_000) -> MoverResult:
    """Least number of syllables of a word g with g(J) disjoint from J.

    Breadth first over syllable patterns; exponents per slot run through
    +-1, +-2, +-4, ... up to the cap.  Only the images of the endpoints are
    tracked, which suffices since every map is increasing.
    """
    x, y = float(min(J)), float(max(J))
    names = list(action.gens)
    exps = _exponents(exponent_cap)
    caps = {"max_syllables": max_syllables, "exponent_cap": exponent_cap}
    gx, gy = np.array([x]), np.array([y])
    last = np.array([-1])
    history = []  # per level: (parent, gen, exp)
    complete = True
    for ell in range(1, max_syllables + 1):
        nx, ny, ng, parent, ex = [], [], [], [], []
        for gi, name in enumerate(names):
            sel = np.nonzero(last != gi)[0]
            if sel.size == 0:
                continue
            g = action.gens[name]
            for e in exps:
                ax = np.atleast_1d(iterate(g, e, gx[sel]))
                ay = np.atleast_1d(iterate(g, e, gy[sel]))
                hit = np.nonzero((ax >= y) | (ay <= x))[0]
                if hit.size:
                    syl = [(name, e)]
                    p = int(sel[hit[0]])
                    for par, gen, exn in reversed(history):
                        syl.append((names[gen[p]], int(exn[p])))
                        p = int(par[p])
                    # syl lists the last-applied syllable first, matching word order
                    return MoverResult(ell, GroupWord(tuple(syl)), caps, True)
                nx.append(ax)
                ny.append(ay)
                ng.append(np.full(sel.size, gi))
                parent.append(sel)
                ex.append(np.full(sel.size, e))
        if not nx:
            break
        nx, ny = np.concatenate(nx), np.concatenate(ny)
        ng, parent, ex = np.concatenate(ng), np.concatenate(parent), np.concatenate(ex)
        span = max(abs(x), abs(y), 1.0)
        key = np.stack([np.round(nx / (1e-12 * span)), np.round(ny / (1e-12 * span)), ng], axis=1)
        _, keep = np.unique(key, axis=0, return_index=True)
        keep.sort()
        if keep.size > max_frontier:
            keep = keep[:max_frontier]
            complete = False
        gx, gy, last = nx[keep], ny[keep], ng[keep]
        history.append((parent[keep], ng[keep], ex[keep]))
    return MoverResult(None, None, caps, complete)


# chain groups ----------------------------------------------------------------
@dataclass
class ChainGroupResult:
    ok: bool
    patterns: list  # per i: (s_i, s_{i+1}) achieving the inequality, or None
    best_values: list  # per i: the largest f_{i+1}^{+-1} f_i^{+-1}(inf J_{i+1}) found
    targets: list  # per i: sup J_i

    def __bool__(self):
        return self.ok


def _check_support(maps, intervals, tol):
    for i, (m, (lo, hi)) in enumerate(zip(maps, intervals)):
        for a, b in _supports(m, (min(lo, m.domain[0]), max(hi, m.domain[1]))
                              if np.all(np.isfinite(m.domain)) else (lo, hi)):
            if a < lo - tol or b > hi + tol:
                raise ValueError(f"support of map {i} ({a}, {b}) leaves J_{i} = ({lo}, {hi})")


def chain_group_condition(maps: Sequence[Map1D], intervals, power: int = 1,
                          tol: float = 1e-12, check_support: bool = True) -> ChainGroupResult:
    """f_{i+1}^{+-1}(f_i^{+-1}(inf J_{i+1})) >= sup J_i for some sign choice, each i."""
    intervals = list(intervals.intervals if isinstance(intervals, IntervalChain) else intervals)
    if len(maps) != len(intervals):
        raise ValueError("need one map per chain interval")
    if check_support:
        _check_support(maps, intervals, 1e-9)
    patterns, best, targets = [], [], []
    for i in range(len(maps) - 1):
        z = intervals[i + 1][0]
        y = intervals[i][1]
        top, pat = -math.inf, None
        for s1, s2 in itertools.product((1, -1), repeat=2):
            v = float(iterate(maps[i + 1], s2 * power, iterate(maps[i], s1 * power, z)))
            if v > top:
                top = v
            if pat is None and v >= y - tol:
                pat = (s1, s2)
        patterns.append(pat)
        best.append(top)
        targets.append(y)
    return ChainGroupResult(all(p is not None for p in patterns), patterns, best, targets)


def chain_condition_power(maps: Sequence[Map1D], intervals, n_max: int = 4096):
    """Least N with the chain-group condition for f_i^N, or (None, last result)."""
    res = None
    for N in range(1, n_max + 1):
        res = chain_group_condition(maps, intervals, power=N, check_support=(N == 1))
        if res.ok:
            return N, res
    return None, res


# builders --------------------------------------------------------------------
def chain_action(intervals: Sequence[Interval], T: float = 1.0, signs=None,
                 names: Sequence[str] | None = None) -> GroupAction:
    """Tangent-profile bumps supported exactly on each interval."""
    names = list(names) if names else [f"f{i + 1}" for i in range(len(intervals))]
    signs = list(signs) if signs is not None else [1] * len(intervals)
    return GroupAction({n: TanBump(a, b, T, s) for n, (a, b), s in zip(names, intervals, signs)})


def random_chain(rng: np.random.Generator, m: int, lo: float = 0.0, hi: float = 1.0) -> list:
    """An m-chain of open intervals inside (lo, hi) with random overlaps."""
    cuts = np.sort(rng.uniform(lo, hi, size=2 * m))
    while np.min(np.diff(cuts)) < 1e-3 * (hi - lo):
        cuts = np.sort(rng.uniform(lo, hi, size=2 * m))
    # interleave inf_1 < inf_2 < sup_1 < inf_3 < sup_2 < ... < sup_m
    infs = [cuts[0]]
    sups = []
    k = 1
    for j in range(1, m):
        infs.append(cuts[k])
        sups.append(cuts[k + 1])
        k += 2
    sups.append(cuts[-1])
    return [(float(a), float(b)) for a, b in zip(infs, sups)]
