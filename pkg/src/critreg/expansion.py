"""Fast and expansive homeomorphisms, densities, and the single fast diffeomorphism f_l.

f_l = Id + g_l on [0, l] where g_l is the plateau bump
(Delta/2)(Phi(t/(D0 l)) + Phi((l - t)/(D0 l))) with Delta = delta0 l^k alpha(l).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .homeo import (Map1D, PiecewiseGlue, SigmaBump, _arr, derivative_k, iterate,
                    monotone_inverse)
from .modulus import ConcaveModulus, alpha_norm_estimate
from .mollifier import Mollifier, get_phi

ROOT_GRID = 2 ** 14
ROOT_TOL = 1e-11


def build_phi() -> Mollifier:
    """The shared mollifier Phi."""
    return get_phi()


def _alpha(alpha: ConcaveModulus, x: float) -> float:
    return float(np.asarray(alpha.extended(np.array(float(x)))))


# parameters ------------------------------------------------------------------
@dataclass
class FastDiffeoParams:
    """Constants of the fast diffeomorphism.

    ``strict`` enforces l <= l0 (l0 + K0 alpha(l0) <= 1); with ``strict=False``
    larger l are accepted and flagged through ``beyond_l0``.
    """

    k: int
    alpha: ConcaveModulus
    ell: float
    delta0: float = 0.9
    strict: bool = True
    D0: float = field(init=False)
    Delta: float = field(init=False)
    K0: float = field(init=False)
    ell0: float = field(init=False)
    N0: int = field(init=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not (0.9 <= self.delta0 < 1.0):
            raise ValueError("delta0 must lie in [9/10, 1)")
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        self.D0 = (1.0 - self.delta0) / 2.0
        self.K0 = k0_constant(self.k, self.delta0)
        self.ell0 = ell0_constant(self.k, self.alpha, self.delta0)
        a = _alpha(self.alpha, self.ell)
        self.Delta = self.delta0 * self.ell ** self.k * a
        self.N0 = fast_power(self.k, self.alpha, self.ell)
        if not self.Delta < self.ell:
            raise ValueError("Delta must be smaller than ell")
        if self.strict and self.ell > self.ell0:
            raise ValueError(f"ell={self.ell} exceeds ell0={self.ell0}; pass strict=False to allow")

    @property
    def beyond_l0(self) -> bool:
        return self.ell > self.ell0

    def to_dict(self) -> dict:
        return {"k": self.k, "alpha": self.alpha.to_dict(), "ell": self.ell, "delta0": self.delta0,
                "D0": self.D0, "Delta": self.Delta, "K0": self.K0, "ell0": self.ell0,
                "N0": self.N0, "beyond_l0": self.beyond_l0}


def k0_constant(k: int, delta0: float = 0.9) -> float:
    """K0 = ||Phi||_{C^{k+1}} / D0^{k+1}."""
    D0 = (1.0 - delta0) / 2.0
    return get_phi().ck_norm(k + 1) / D0 ** (k + 1)


def ell0_constant(k: int, alpha: ConcaveModulus, delta0: float = 0.9) -> float:
    """Largest l with l + K0 alpha(l) <= 1 (bisection in log scale)."""
    K0 = k0_constant(k, delta0)
    F = lambda l: l + K0 * _alpha(alpha, l) - 1.0
    lo, hi = 1e-300, 1.0
    if F(lo) > 0:
        return 0.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if F(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-15:
            break
    return lo


def fast_power(k: int, alpha: ConcaveModulus, ell: float) -> int:
    """N0 = ceil(1 / (l^{k-1} alpha(l)))."""
    return int(math.ceil(1.0 / (ell ** (k - 1) * _alpha(alpha, ell)) - 1e-12))


# the map ---------------------------------------------------------------------
class FastBump(Map1D):
    """x + g_l(x - lo) on [lo, lo + l], the identity elsewhere.

    On the plateau [D0 l, (1-D0) l] the map is translation by Delta, so
    iterates starting there are evaluated in closed form.
    """

    def __init__(self, lo: float, ell: float, Delta: float, D0: float, power: int = 1):
        self.lo, self.ell, self.Delta, self.D0 = float(lo), float(ell), float(Delta), float(D0)
        self.power = int(power)
        self.domain = (self.lo, self.lo + self.ell)
        self._w = self.D0 * self.ell
        self._p0 = self.D0 * self.ell
        self._p1 = (1.0 - self.D0) * self.ell

    @classmethod
    def from_params(cls, p: FastDiffeoParams, lo: float = 0.0) -> "FastBump":
        return cls(lo, p.ell, p.Delta, p.D0)

    def g(self, t):
        """The bump profile at local coordinate t = x - lo."""
        t = _arr(t)
        phi = get_phi()
        out = np.zeros_like(t)
        m = (t > 0) & (t < self.ell)
        tm = t[m]
        out[m] = 0.5 * self.Delta * (phi(tm / self._w) + phi((self.ell - tm) / self._w))
        return out

    def _step(self, x):
        t = x - self.lo
        return x + self.g(t)

    def _step_inv(self, y):
        t = y - self.lo
        out = y.copy()
        m = (t > 0) & (t < self.ell)
        if np.any(m):
            out[m] = monotone_inverse(self._step, y[m], self.lo, self.lo + self.ell, tol=0.0)
        return out

    def _eval(self, x):
        return self.iterate_closed(1, x)

    def iterate_closed(self, n, x):
        n = n * self.power
        x = np.array(x, dtype=float, copy=True)
        if n == 0:
            return x
        remaining = np.full(x.shape, abs(n), dtype=np.int64)
        for _ in range(abs(n) + 2):
            if not np.any(remaining > 0):
                break
            t = x - self.lo
            if n > 0:
                on = (remaining > 0) & (t >= self._p0) & (t <= self._p1)
                if np.any(on):
                    # steps that start on the plateau: t + (j-1) Delta <= p1
                    jumps = np.floor((self._p1 - t[on]) / self.Delta).astype(np.int64) + 1
                    jumps = np.minimum(jumps, remaining[on])
                    over = t[on] + (jumps - 1) * self.Delta > self._p1
                    jumps = np.where(over, jumps - 1, jumps)
                    idx = np.nonzero(on)[0]
                    x[idx] = self.lo + (t[on] + jumps * self.Delta)
                    remaining[idx] -= jumps
                rest = (remaining > 0) & ~on
                if np.any(rest):
                    x[rest] = self._step(x[rest])
                    remaining[rest] -= 1
            else:
                on = (remaining > 0) & (t >= self._p0 + self.Delta) & (t <= self._p1 + self.Delta)
                if np.any(on):
                    jumps = np.floor((t[on] - self._p0) / self.Delta).astype(np.int64)
                    jumps = np.minimum(np.maximum(jumps, 1), remaining[on])
                    under = t[on] - jumps * self.Delta < self._p0 - 1e-300
                    jumps = np.where(under, jumps - 1, jumps)
                    idx = np.nonzero(on)[0]
                    x[idx] = self.lo + (t[on] - jumps * self.Delta)
                    remaining[idx] -= jumps
                rest = (remaining > 0) & ~on
                if np.any(rest):
                    x[rest] = self._step_inv(x[rest])
                    remaining[rest] -= 1
        return x

    def inverse(self):
        return FastBump(self.lo, self.ell, self.Delta, self.D0, -self.power)

    def deriv(self, x, k=1):
        """Closed form for the map itself (power +1); other powers are not offered."""
        if self.power != 1:
            raise NotImplementedError
        x = np.atleast_1d(_arr(x))
        phi = get_phi()
        t = x - self.lo
        out = np.full_like(x, 1.0 if k == 1 else 0.0)
        m = (t > 0) & (t < self.ell)
        tm = t[m]
        c = 0.5 * self.Delta / self._w ** k
        out[m] += c * (phi.derivative(tm / self._w, k)
                       + (-1) ** k * phi.derivative((self.ell - tm) / self._w, k))
        return out

    def is_monotone(self, n: int = 20001) -> bool:
        g = np.linspace(self.lo, self.lo + self.ell, n)
        return bool(np.all(self.deriv(g, 1) > 0))

    def to_dict(self):
        return {"node": "FastBump", "lo": self.lo, "ell": self.ell, "Delta": self.Delta,
                "D0": self.D0, "power": self.power}


@dataclass
class FastChecks:
    support: bool
    plateau: bool
    holder_seminorm: float  # sampled [f]_{k,alpha}
    seminorm_ok: bool
    ck_distance: float  # sampled ||f - Id||_{C^k}
    ck_ok: bool
    monotone: bool
    beyond_l0: bool

    def to_dict(self):
        return dict(self.__dict__)


def property_checks(f: FastBump, p: FastDiffeoParams, n: int = 4001) -> FastChecks:
    """Spot checks of support, plateau, the k-th derivative seminorm and the C^k distance."""
    lo, l = f.lo, f.ell
    outside = np.array([lo - l, lo - 1e-3 * l, lo, lo + l, lo + l * (1 + 1e-3), lo + 2 * l])
    support = bool(np.all(f(outside) == outside))
    plat = np.linspace(lo + p.D0 * l, lo + (1 - p.D0) * l, 257)
    plateau = bool(np.all(np.abs(f.g(plat - lo) - p.Delta) <= 4 * np.spacing(p.Delta)))
    grid = np.linspace(lo, lo + l, n)
    dk = f.deriv(grid, p.k)
    sub = slice(None, None, max(1, n // 1500))
    semi = alpha_norm_estimate(np.column_stack([grid[sub], dk[sub]]), p.alpha)
    ck = 0.0
    for j in range(p.k + 1):
        if j == 0:
            dev = np.abs(f(grid) - grid)
        else:
            dev = np.abs(f.deriv(grid, j) - (1.0 if j == 1 else 0.0))
        ck = max(ck, float(np.max(dev)))
    bound = p.K0 * _alpha(p.alpha, p.ell)
    return FastChecks(support, plateau, semi, semi <= p.K0, ck, ck <= bound,
                      f.is_monotone(), p.beyond_l0)


def build_fast_diffeo(p: FastDiffeoParams, lo: float = 0.0) -> FastBump:
    f = FastBump.from_params(p, lo)
    f.params = p
    f.checks = property_checks(f, p)
    return f


def build_fast_on_chain(k: int, alpha: ConcaveModulus, delta0: float, intervals: Sequence,
                        strict: bool = True) -> PiecewiseGlue:
    """Product of per-interval fast maps on disjoint intervals.

    Intervals longer than l0 get plain smooth bumps that are delta0-fast in
    one step (the reduction to short intervals).
    """
    iv = sorted((float(a), float(b)) for a, b in intervals)
    for (a1, b1), (a2, b2) in zip(iv, iv[1:]):
        if a2 < b1:
            raise ValueError(f"overlapping intervals ({a1}, {b1}) and ({a2}, {b2})")
    ell0 = ell0_constant(k, alpha, delta0)
    pieces = []
    for a, b in iv:
        L = b - a
        if L <= ell0 or not strict:
            p = FastDiffeoParams(k, alpha, L, delta0, strict=False)
            pieces.append(((a, b), FastBump.from_params(p, a)))
        else:
            pieces.append(((a, b), SigmaBump.fast(a, b, delta0)))
    return PiecewiseGlue(pieces, domain=(iv[0][0], iv[-1][1]) if iv else (0.0, 1.0))


# measurements ----------------------------------------------------------------
def _grid(J, grid, n=4097):
    a, b = float(J[0]), float(J[1])
    if not b > a:
        raise ValueError("degenerate interval")
    if grid is None:
        return a, b, np.linspace(a, b, n)
    return a, b, np.asarray(grid, dtype=float)


def _image(f, x, power: int):
    return np.atleast_1d(iterate(f, power, x)) if power != 1 else np.atleast_1d(f(x))


def fast_profile(f, J, grid=None, power: int = 1):
    """(delta, x0): max |f^power(x) - x| / |J| on the grid and where it is attained."""
    a, b, g = _grid(J, grid)
    d = np.abs(_image(f, g, power) - g) / (b - a)
    i = int(np.argmax(d))
    return float(d[i]), float(g[i])


def measure_fast(f, J, grid=None, power: int = 1) -> float:
    """Grid lower bound for the best delta with f^power delta-fast on J."""
    return fast_profile(f, J, grid, power)[0]


def expansive_profile(f, J, grid=None, power: int = 1):
    a, b, g = _grid(J, grid)
    g = g[(g > a) & (g < b)]
    fx = _image(f, g, power)
    dist = np.minimum.reduce([g - a, b - g, fx - a, b - fx])
    num = np.abs(fx - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(dist > 0, num / dist, np.where(num > 0, np.inf, 0.0))
    if r.size == 0:
        return 0.0, float("nan")
    i = int(np.argmax(r))
    return float(r[i]), float(g[i])


def measure_expansive(f, J, grid=None, power: int = 1) -> float:
    """sup over interior grid points of |f(x) - x| / d({x, f(x)}, boundary of J)."""
    return expansive_profile(f, J, grid, power)[0]


def fast_to_expansive_bound(delta: float) -> float:
    """2 delta / (1 - delta)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return 2.0 * delta / (1.0 - delta)


@dataclass
class RootPowerResult:
    premise: bool
    measured_power: float
    threshold: float
    measured: float
    passed: bool
    note: str = ""


def root_power_expansive(f, J, N: int, delta: float, grid=None) -> RootPowerResult:
    """If f^N is delta-expansive on J, check f is (1/N) log(1 + delta)-expansive.

    The grid is augmented with the f-orbit of the best point for f^N, where
    the argument locates a good point for f.
    """
    a, b, g = _grid(J, grid)
    mp, x0 = expansive_profile(f, J, g, power=N)
    thr = math.log1p(delta) / N
    if mp < delta:
        return RootPowerResult(False, mp, thr, float("nan"), False, "premise unmet: f^N not delta-expansive")
    orbit = [x0]
    for s in (1, -1):
        x = np.array([x0])
        for _ in range(N):
            x = np.atleast_1d(iterate(f, s, x))
            orbit.append(float(x[0]))
    pts = np.unique(np.concatenate([g, np.array(orbit)]))
    m, _ = expansive_profile(f, J, pts)
    return RootPowerResult(True, mp, thr, m, m >= thr * (1 - 1e-12))


# k-fixed -----------------------------------------------------------------------
@dataclass
class KFixedReport:
    is_k_fixed: bool
    fixed_points: list
    cluster: bool
    delta1: float
    delta2: float
    policy: str = ("k-fixed if more than k fixed points, or >= k+2 roots, or a run of "
                   "grid points with |f - x| <= tol (accumulation proxy)")


def fixed_points(f, J, n: int = ROOT_GRID, tol: float = ROOT_TOL):
    """Sign-change bracketing then bisection; returns (points, cluster flag)."""
    a, b = float(J[0]), float(J[1])
    g = np.linspace(a, b, n + 1)
    d = np.atleast_1d(f(g)) - g
    zero = np.abs(d) <= tol
    pts = []
    cluster = bool(np.any(zero[:-1] & zero[1:]))
    for i in np.nonzero(zero)[0]:
        pts.append(float(g[i]))
    sc = np.nonzero((np.sign(d[:-1]) * np.sign(d[1:]) < 0) & ~zero[:-1] & ~zero[1:])[0]
    for i in sc:
        lo, hi = g[i], g[i + 1]
        slo = np.sign(d[i])
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            s = np.sign(float(np.atleast_1d(f(np.array([mid])))[0]) - mid)
            if s == slo:
                lo = mid
            elif s == 0:
                lo = hi = mid
            else:
                hi = mid
        pts.append(0.5 * (lo + hi))
    pts = sorted(pts)
    return pts, cluster


def _inverse_derivs(d1, d2=None, d3=None, k=1):
    if k == 1:
        return 1.0 / d1
    if k == 2:
        return -d2 / d1 ** 3
    if k == 3:
        return (3.0 * d2 ** 2 - d1 * d3) / d1 ** 5
    raise NotImplementedError("inverse derivatives are provided for k <= 3")


def _derivs(f, grid, k):
    try:
        return np.atleast_1d(f.deriv(grid, k))
    except (NotImplementedError, AttributeError):
        return np.array([derivative_k(f, float(x), k).value for x in grid])


def k_fixed_and_bounds(f, J, k: int, beta: ConcaveModulus, grid=None) -> KFixedReport:
    """k-fixed test plus the two at-most-expansive bounds delta1, delta2."""
    a, b = float(J[0]), float(J[1])
    pts, cluster = fixed_points(f, J)
    is_kf = cluster or len(pts) > k
    g = np.linspace(a, b, 1025) if grid is None else np.asarray(grid, dtype=float)
    ds = [_derivs(f, g, j) for j in range(1, k + 1)]
    fk = ds[k - 1]
    idk = 1.0 if k == 1 else 0.0
    invk = _inverse_derivs(*ds, k=k) if k <= 3 else None
    if invk is None:
        raise NotImplementedError("k > 3")
    y = np.atleast_1d(f(g))
    L = b - a
    delta1 = L ** (k - 1) * (float(np.max(np.abs(fk - idk))) + float(np.max(np.abs(invk - idk))))
    sub = slice(None, None, max(1, g.size // 800))
    nf = alpha_norm_estimate(np.column_stack([g[sub], fk[sub]]), beta)
    order = np.argsort(y[sub])
    ni = alpha_norm_estimate(np.column_stack([y[sub][order], invk[sub][order]]), beta)
    delta2 = L ** (k - 1) * _alpha(beta, L) * (nf + ni)
    return KFixedReport(bool(is_kf), pts, cluster, delta1, delta2)


# densities ---------------------------------------------------------------------
def upper_density(indices, horizon: int) -> tuple:
    """(upper, lower) finite-horizon density estimates of a set of positive integers.

    Both are taken over the tail window n in [ceil(horizon/2), horizon] of
    #(P cap [1, n]) / n.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    mark = np.zeros(horizon + 1, dtype=np.int64)
    for i in indices:
        if 1 <= i <= horizon:
            mark[int(i)] = 1
    counts = np.cumsum(mark)[1:]
    n = np.arange(1, horizon + 1)
    start = max(1, math.ceil(horizon / 2)) - 1
    r = counts[start:] / n[start:]
    return float(r.max()), float(r.min())


@dataclass
class ProgressCheck:
    upper_progress: float
    limsup_speed: float
    slack: float
    ok: bool
    progress_set: list


def progress_density(d: Sequence[int], horizon: int | None = None) -> ProgressCheck:
    """Upper density of record times versus limsup d_n / n on the tail window.

    The slack (d_0 + M_{n0} - d_{n0} + 1)/n0 bounds the finite-window gap,
    where n0 starts the window and M is the running maximum.
    """
    d = np.asarray(d, dtype=np.int64)
    if d.size < 2:
        raise ValueError("need at least two terms")
    if np.any(np.abs(np.diff(d)) > 1):
        i = int(np.nonzero(np.abs(np.diff(d)) > 1)[0][0])
        raise ValueError(f"step |d_{i + 1} - d_{i}| exceeds 1")
    if np.any(d < 0):
        raise ValueError("sequence must be nonnegative")
    H = d.size - 1 if horizon is None else min(horizon, d.size - 1)
    run = np.maximum.accumulate(d)
    P = [n for n in range(1, H + 1) if d[n] > run[n - 1]]
    up, _ = upper_density(P, H)
    n0 = max(1, math.ceil(H / 2))
    n = np.arange(n0, H + 1)
    speed = float(np.max(d[n0:H + 1] / n))
    slack = (float(d[0]) + float(run[n0] - d[n0]) + 1.0) / n0
    return ProgressCheck(up, speed, slack, abs(up - speed) <= slack, P)


# two jumps -------------------------------------------------------------------
@dataclass
class TwoJumpsCertificate:
    valid: bool
    configurations: list  # "i" / "ii" per triple
    gaps: list  # |g(y_i) - f(y_i)|
    failure: str | None = None
    index: int | None = None


def two_jumps_witness(f, g, triples, tol: float = 1e-12) -> TwoJumpsCertificate:
    """Validate triples (s_i, y_i, t_i) against the two-jumps configurations.

    (i)  f(y) <= s = g(s) < y < t = f(t) <= g(y)
    (ii) g(y) <= t = f(t) < y < s = g(s) <= f(y)
    and require |g(y_i) - f(y_i)| to decrease.
    """
    ev = lambda m, x: float(np.atleast_1d(m(np.array([float(x)])))[0])
    confs, gaps = [], []
    for i, (s, y, t) in enumerate(triples):
        fy, gy, gs, ft = ev(f, y), ev(g, y), ev(g, s), ev(f, t)
        if abs(gs - s) > tol:
            return TwoJumpsCertificate(False, confs, gaps, "s_i is not fixed by g", i)
        if abs(ft - t) > tol:
            return TwoJumpsCertificate(False, confs, gaps, "t_i is not fixed by f", i)
        if fy <= s + tol and s < y < t and t <= gy + tol:
            confs.append("i")
        elif gy <= t + tol and t < y < s and s <= fy + tol:
            confs.append("ii")
        else:
            return TwoJumpsCertificate(False, confs, gaps, "neither configuration holds", i)
        gaps.append(abs(gy - fy))
    if not gaps:
        return TwoJumpsCertificate(False, confs, gaps, "no triples", None)
    for i in range(1, len(gaps)):
        if not gaps[i] < gaps[i - 1]:
            return TwoJumpsCertificate(False, confs, gaps, "gaps do not decrease", i)
    return TwoJumpsCertificate(True, confs, gaps)
