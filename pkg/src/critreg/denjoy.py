"""C^{1,alpha} circle diffeomorphisms with wandering intervals.

A scheme blows up the finite orbit window {k theta : |k| <= W} into
intervals J_k of lengths l_k = 1/v(|k| + K), v(x) = x^2 alpha(1/x).  The
map is f(x) = x_1 + int_0^x g with

    g = 1 - sum_{-W <= k < W} (1 - l_{k+1}/l_k) rho((x - x_k)/l_k),

rho = Phi'/2 on [0, 1].  Positions come from the measure

    mu = c lambda + sum_{|k| <= W} (l_k - l_W) delta_{k theta},

c = 1 - sum l_k + (2W + 1) l_W.  Shaving l_W off every atom is what makes the
finite window self-consistent: the bumps telescope to l_{-W} - l_W = 0, so
int g = 1, and f(x_k) = x_{k+1}, f(J_k) = J_{k+1} hold identically for
-W <= k < W (up to rounding).  The ideal infinite scheme differs from this one
by at most ``position_error`` in every coordinate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate

from . import kernels
from .homeo import CircleMap, Map1D, _arr
from .modulus import ConcaveModulus, alpha_norm_estimate, integrability
from .mollifier import get_phi
from .rotation import PRECISION_BITS, Theta, _as_theta, rotation_number

FUNDAMENTAL_FACTOR = 64.0
MAX_DOUBLINGS = 80


class SchemeError(ValueError):
    """A hypothesis of the wandering-interval construction fails."""


# lengths -----------------------------------------------------------------
def _inv_alpha_integral(alpha: ConcaveModulus, a: float) -> float:
    """int_0^a dy / alpha(y) for 0 < a <= 1."""
    if alpha.kind == "hoelder":
        return a ** (1.0 - alpha.tau) / (1.0 - alpha.tau)
    v = alpha.validity_sup
    total = 0.0
    lo = a
    if a > v:
        total += integrate.quad(lambda x: 1.0 / float(alpha.extended(x)), v, a,
                                epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        lo = v
    # x = e^{-s}: dx/alpha = exp(-s - log alpha(e^{-s})) ds
    s0 = -math.log(lo)
    tail = integrate.quad(lambda s: math.exp(-s - float(alpha.log_at(s))), s0, math.inf,
                          epsabs=1e-15, epsrel=1e-12, limit=400)[0]
    return total + tail


def _v(alpha: ConcaveModulus, x: np.ndarray) -> np.ndarray:
    return x * x * alpha.extended(1.0 / x)


@dataclass
class LengthData:
    K: float
    lengths: np.ndarray  # index k + W holds l_k
    tail_bound: float
    doublings: int

    def __iter__(self):
        return iter((self.K, self.lengths, self.tail_bound))


def lengths_from_modulus(alpha: ConcaveModulus, W: int, tail_target: float | None = None) -> LengthData:
    """Symmetric lengths l_k = 1/v(|k| + K), |k| <= W.

    K starts at max(2, 1/alpha(1)) and doubles until the window sum plus the
    tail bound is at most 1 and, when given, the tail bound is below
    ``tail_target``.  The tail bound is 2 int_0^{1/(W+K)} dy/alpha(y).
    """
    if W < 1:
        raise ValueError("window W must be positive")
    res = integrability(alpha, "denjoy")
    if not res.finite:
        raise SchemeError(f"1/alpha is not integrable at 0 ({res.certificate})")
    K = max(2.0, 1.0 / float(alpha.extended(1.0)))
    idx = np.abs(np.arange(-W, W + 1)).astype(float)
    for d in range(MAX_DOUBLINGS):
        ells = 1.0 / _v(alpha, idx + K)
        tail = 2.0 * _inv_alpha_integral(alpha, 1.0 / (W + K))
        ok = math.fsum(ells) + tail <= 1.0
        if ok and (tail_target is None or tail < tail_target):
            return LengthData(K, ells, tail, d)
        K *= 2.0
    raise SchemeError("no admissible cutoff K found")


# scheme ------------------------------------------------------------------
def _fractional_orbit(theta: Theta, W: int) -> np.ndarray:
    """{k theta} for k = -W..W, computed at 80 bits."""
    with mpmath.workprec(PRECISION_BITS):
        t = theta.mp()
        return np.array([float(mpmath.frac(k * t)) for k in range(-W, W + 1)])


def _star_discrepancy(points: np.ndarray) -> float:
    t = np.sort(points)
    n = t.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - t), np.max(t - (i - 1) / n)))


@dataclass
class WanderingScheme:
    theta: Theta
    K: float
    W: int
    lengths: np.ndarray
    positions: np.ndarray
    fracs: np.ndarray
    tail_bound: float
    gap_mass: float
    position_error: float
    alpha: ConcaveModulus | None = None
    meta: dict = field(default_factory=dict)

    def length(self, k: int) -> float:
        return float(self.lengths[k + self.W])

    def position(self, k: int) -> float:
        return float(self.positions[k + self.W])

    def interval(self, k: int) -> tuple:
        x = self.position(k)
        return x, x + self.length(k)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.W, self.W + 1)

    def window_sum(self) -> float:
        return math.fsum(self.lengths)

    def order_preserved(self) -> bool:
        return bool(np.array_equal(np.argsort(self.positions, kind="stable"),
                                   np.argsort(self.fracs, kind="stable")))

    def min_gap(self) -> float:
        """Smallest gap between consecutive intervals around the circle (negative = overlap)."""
        o = np.argsort(self.positions)
        lo = self.positions[o]
        hi = lo + self.lengths[o]
        nxt = np.roll(lo, -1)
        nxt[-1] += 1.0
        return float(np.min(nxt - hi))

    def disjoint(self) -> bool:
        return self.min_gap() > 0.0

    def gap_mass_residual(self) -> float:
        """max_i |gap mass of [x_{i-1}, x_i] - gap mass of [x_i, x_{i+1}]| over the window."""
        o = np.argsort(self.positions)
        rank = np.empty_like(o)
        rank[o] = np.arange(o.size)
        covered = np.concatenate([[0.0], np.cumsum(self.lengths[o])])

        def gap(a: int, b: int) -> float:
            # Lebesgue mass of [x_a, x_b] outside the J's, a and b window indices
            ra, rb = rank[a + self.W], rank[b + self.W]
            xa, xb = self.positions[a + self.W], self.positions[b + self.W]
            if rb >= ra:
                return (xb - xa) - (covered[rb] - covered[ra])
            return (xb + 1.0 - xa) - (covered[-1] - covered[ra] + covered[rb])

        worst = 0.0
        for i in range(-self.W + 1, self.W):
            worst = max(worst, abs(gap(i - 1, i) - gap(i, i + 1)))
        return float(worst)

    def ratio_diagnostic(self) -> np.ndarray:
        """Sorted consecutive ratios l_{k+1}/l_k over the window."""
        return np.sort(self.lengths[1:] / self.lengths[:-1])

    def to_dict(self) -> dict:
        return {"theta": self.theta.to_dict(), "K": self.K, "W": self.W,
                "tail_bound": self.tail_bound, "gap_mass": self.gap_mass,
                "position_error": self.position_error,
                "alpha": self.alpha.to_dict() if self.alpha is not None else None,
                "window_sum": self.window_sum()}

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "frac_k_theta", "position", "length", "ratio_next"])
            for j, k in enumerate(self.indices):
                ratio = self.lengths[j + 1] / self.lengths[j] if j + 1 < self.lengths.size else ""
                w.writerow([int(k), repr(float(self.fracs[j])), repr(float(self.positions[j])),
                            repr(float(self.lengths[j])), repr(float(ratio)) if ratio != "" else ""])

    @classmethod
    def from_csv(cls, path: str, meta: dict) -> "WanderingScheme":
        """Rebuild from the CSV rows and the ``to_dict`` metadata."""
        rows = []
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append((int(r["k"]), float(r["frac_k_theta"]), float(r["position"]),
                             float(r["length"])))
        rows.sort()
        th = meta["theta"]
        theta = Theta(th["value"], tuple(th["quad"]) if th.get("quad") else None, th.get("label", ""))
        alpha = ConcaveModulus.from_dict(meta["alpha"]) if meta.get("alpha") else None
        return cls(theta, float(meta["K"]), int(meta["W"]),
                   np.array([r[3] for r in rows]), np.array([r[2] for r in rows]),
                   np.array([r[1] for r in rows]), float(meta["tail_bound"]),
                   float(meta["gap_mass"]), float(meta["position_error"]), alpha)


def blowup_positions(theta, lengths: np.ndarray, W: int, tail_bound: float = 0.0):
    """(positions, fracs, gap_mass, position_error) for a symmetric length window.

    x_k is the mass of [0, {k theta}) under c lambda + sum (l_j - l_W) delta_{j theta}.
    """
    theta = _as_theta(theta)
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size != 2 * W + 1:
        raise ValueError("need 2W + 1 lengths")
    if not math.isclose(lengths[0], lengths[-1], rel_tol=0, abs_tol=0.0):
        raise SchemeError("window lengths must satisfy l_{-W} = l_W")
    total = math.fsum(lengths)
    if total + tail_bound > 1.0:
        raise SchemeError("sum of lengths exceeds 1")
    lw = float(lengths[-1])
    mass = lengths - lw
    c = 1.0 - math.fsum(mass)
    fr = _fractional_orbit(theta, W)
    order = np.argsort(fr, kind="stable")
    before = np.concatenate([[0.0], np.cumsum(mass[order])[:-1]])
    pos = np.empty_like(fr)
    pos[order] = c * fr[order] + before
    disc = _star_discrepancy(fr)
    err = tail_bound + lw * lengths.size * disc
    return pos, fr, c, err


def build_scheme(alpha: ConcaveModulus, theta="golden", W: int = 2000,
                 tail_target: float | None = None) -> WanderingScheme:
    theta = _as_theta(theta)
    ld = lengths_from_modulus(alpha, W, tail_target)
    pos, fr, c, err = blowup_positions(theta, ld.lengths, W, ld.tail_bound)
    return WanderingScheme(theta, ld.K, W, ld.lengths, pos, fr, ld.tail_bound, c, err, alpha,
                           {"doublings": ld.doublings})


# the map -----------------------------------------------------------------
class _DenjoyRestriction(Map1D):
    domain = (0.0, 1.0)

    def __init__(self, shift, pos, length, deficit, cumdef):
        self.shift = float(shift)
        self.pos, self.length, self.deficit, self.cumdef = pos, length, deficit, cumdef
        self.phi = get_phi()

    def G(self, u):
        ua = np.ascontiguousarray(np.atleast_1d(_arr(u)), dtype=float)
        return kernels.denjoy_unit_eval(ua, self.pos, self.length, self.deficit, self.cumdef,
                                        self.phi.vals, self.phi.ders, self.phi.n)

    def _eval(self, u):
        return self.shift + np.asarray(self.G(u)).reshape(np.shape(u))

    def deriv(self, x, k=1):
        """g itself for k = 1, g^{(k-1)} in general."""
        xa = np.atleast_1d(_arr(x))
        u = xa - np.floor(xa)
        j = np.searchsorted(self.pos, u, side="right") - 1
        jj = np.where(j >= 0, j, 0)
        inside = (j >= 0) & (u < self.pos[jj] + self.length[jj])
        out = np.ones_like(u) if k == 1 else np.zeros_like(u)
        if np.any(inside):
            ji = jj[inside]
            s = (u[inside] - self.pos[ji]) / self.length[ji]
            scale = self.deficit[ji] / (2.0 * self.length[ji] ** k)
            out[inside] -= scale * self.phi.derivative(s, k)
        return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


class DenjoyMap(CircleMap):
    """Lift F(m + u) = m + x_1 + G(u) carrying the scheme it was built from."""

    def __init__(self, scheme: WanderingScheme, restriction: _DenjoyRestriction, checks: dict):
        super().__init__(restriction)
        self.scheme = scheme
        self.checks = checks

    def g(self, x):
        return self.restriction.deriv(x, 1)

    def deriv(self, x, k=1):
        return self.restriction.deriv(x, k)

    def orbit_split_fast(self, x0: float, n: int):
        r = self.restriction
        m0 = math.floor(x0)
        return kernels.denjoy_orbit(m0, float(x0 - m0), int(n), r.shift, r.pos, r.length,
                                    r.deficit, r.cumdef, r.phi.vals, r.phi.ders, r.phi.n)

    def forward_orbit(self, x0: float, n: int) -> np.ndarray:
        """Lifted orbit x0, F(x0), ..., F^n(x0)."""
        out = np.empty(n + 1)
        m = math.floor(x0)
        u = x0 - m
        out[0] = x0
        step = self.restriction._eval
        for i in range(1, n + 1):
            y = float(step(np.array([u]))[0])
            fl = math.floor(y)
            m += fl
            u = y - fl
            out[i] = m + u
        return out


def build_denjoy(alpha: ConcaveModulus | WanderingScheme, theta="golden", W: int = 2000,
                 tail_target: float | None = None) -> DenjoyMap:
    """Circle diffeomorphism with f(J_k) = J_{k+1} for -W <= k < W."""
    scheme = alpha if isinstance(alpha, WanderingScheme) else build_scheme(alpha, theta, W, tail_target)
    W = scheme.W
    ells = scheme.lengths
    ratios = ells[1:] / ells[:-1]
    phi = get_phi()
    rho_sup = 0.5 * phi.sup_derivative(1)
    checks = {"ratio_inf": float(ratios.min()), "ratio_sup": float(ratios.max()),
              "rho_sup": rho_sup, "rho_lipschitz": 0.5 * phi.sup_derivative(2)}
    if checks["ratio_inf"] <= 0:
        raise SchemeError("inf l_{k+1}/l_k must be positive")
    gmin = float(np.min(1.0 - (1.0 - ratios) * rho_sup))
    checks["g_min_bound"] = gmin
    if gmin <= 0:
        raise SchemeError("1 - (1 - l_{k+1}/l_k) rho must stay positive")
    if scheme.alpha is not None:
        fe = fundamental_estimate(scheme, scheme.alpha)
        checks["fundamental"] = fe.value
        if not math.isfinite(fe.value):
            raise SchemeError("sup (1/alpha(l_k)) |1 - l_{k+1}/l_k| is not finite")
    if not scheme.disjoint():
        raise SchemeError(f"intervals overlap (min gap {scheme.min_gap():.3e})")

    deficit = np.zeros_like(ells)
    deficit[:-1] = ells[:-1] - ells[1:]  # no bump on J_W
    order = np.argsort(scheme.positions, kind="stable")
    pos = np.ascontiguousarray(scheme.positions[order])
    length = np.ascontiguousarray(ells[order])
    dfc = np.ascontiguousarray(deficit[order])
    cumdef = np.ascontiguousarray(np.concatenate([[0.0], np.cumsum(dfc)]))
    checks["integral_g_defect"] = float(abs(math.fsum(deficit)))
    shift = scheme.position(1)
    if pos[0] != 0.0:
        raise SchemeError("x_0 must sit at the origin")
    return DenjoyMap(scheme, _DenjoyRestriction(shift, pos, length, dfc, cumdef), checks)


# estimates ---------------------------------------------------------------
@dataclass
class FundamentalEstimate:
    value: float
    bound: float
    argmax: int
    passed: bool


def fundamental_estimate(scheme: WanderingScheme, alpha: ConcaveModulus) -> FundamentalEstimate:
    """sup_{|k| < W} |1 - l_{k+1}/l_k| / alpha(l_k) against 64 K."""
    ells = scheme.lengths
    ks = scheme.indices
    sel = np.abs(ks) < scheme.W
    j = np.nonzero(sel)[0]
    vals = np.abs(1.0 - ells[j + 1] / ells[j]) / alpha.extended(ells[j])
    i = int(np.argmax(vals))
    v = float(vals[i])
    bound = FUNDAMENTAL_FACTOR * scheme.K
    return FundamentalEstimate(v, bound, int(ks[j[i]]), v <= bound)


def _in_arc(p: np.ndarray, lo: float, hi: float, tol: float) -> np.ndarray:
    """Does p (mod 1) meet the closed arc [lo, hi] (mod 1), shrunk by tol?"""
    width = hi - lo - 2 * tol
    d = (p - lo - tol) % 1.0
    return d <= width


@dataclass
class DenjoyReport:
    sup_c0: float
    sup_c1: float
    epsilon: float
    close: bool
    wandering: bool
    first_return: int | None
    rotation: float
    rotation_error: float
    rotation_bound: float
    rotation_ok: bool
    endpoint_error: float
    plateau_ok: bool
    alpha_norm: float
    entries: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.wandering and self.rotation_ok and self.plateau_ok

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "entries"}
        d.update(self.entries)
        d["passed"] = self.passed
        return d


def endpoint_errors(f: DenjoyMap, ks) -> np.ndarray:
    """max(|f(x_k) - x_{k+1}|, |f(x_k + l_k) - x_{k+1} - l_{k+1}|) mod 1, per k."""
    s = f.scheme
    out = []
    for k in ks:
        a, b = s.interval(k)
        c, d = s.interval(k + 1)
        fa, fb = f(np.array([a, b]))
        ea = abs(((fa - c) + 0.5) % 1.0 - 0.5)
        eb = abs(((fb - d) + 0.5) % 1.0 - 0.5)
        out.append(max(ea, eb))
    return np.array(out)


def wandering_check(f: DenjoyMap, k: int = 0, n_iters: int = 1000, tol: float = 1e-10):
    """(ok, first n with f^n(J_k) meeting J_k) for 1 <= n <= n_iters."""
    a, b = f.scheme.interval(k)
    oa = f.forward_orbit(a, n_iters)
    ob = f.forward_orbit(b, n_iters)
    for n in range(1, n_iters + 1):
        lo, hi = oa[n], ob[n]
        # image arc [lo, hi] meets [a, b] iff an endpoint of one lies in the other
        hit = bool(_in_arc(np.array([lo, hi]), a, b, tol).any()) or \
            bool(_in_arc(np.array([a, b]), lo, hi, tol).any())
        if hit:
            return False, n
    return True, None


def verify_denjoy(f: DenjoyMap, n_iters: int = 1000, epsilon: float = 0.1,
                  rotation_iters: int = 100_000, grid: int = 20_001, tol: float = 1e-10) -> DenjoyReport:
    s = f.scheme
    th = s.theta.value
    x = np.linspace(0.0, 1.0, grid)
    # grid plus points inside every wandering interval
    inner = (s.positions[:, None] + s.lengths[:, None] * np.linspace(0.05, 0.95, 7)[None, :]).ravel() % 1.0
    pts = np.concatenate([x, inner])
    fx = np.asarray(f(pts))
    c0 = float(np.max(np.abs(((fx - pts - th) + 0.5) % 1.0 - 0.5)))
    gx = np.asarray(f.g(pts))
    c1 = float(np.max(np.abs(gx - 1.0)))
    # f' = 1 off the intervals
    off = np.ones(x.size, dtype=bool)
    for lo, ln in zip(s.positions, s.lengths):
        off &= ~((x >= lo) & (x <= lo + ln))
    plateau_ok = bool(np.all(np.asarray(f.g(x[off])) == 1.0))
    ok_w, first = wandering_check(f, 0, n_iters, tol)
    rot = rotation_number(f, rotation_iters)
    err = abs(((rot.value - th) + 0.5) % 1.0 - 0.5)
    bound = 1e-4 + rot.error_bound
    ks = np.arange(-min(50, s.W - 1), min(50, s.W - 1) + 1)
    ee = float(endpoint_errors(f, ks).max())
    # alpha-norm of g sampled across the central intervals
    anorm = float("nan")
    if s.alpha is not None:
        norms = []
        for k in range(-5, 6):
            lo, hi = s.interval(k)
            u = np.linspace(lo, hi, 65)
            norms.append(alpha_norm_estimate(np.column_stack([u, f.g(u)]), s.alpha))
        anorm = max(norms)
    entries = {"gap_mass_residual": s.gap_mass_residual(), "position_error": s.position_error,
               "tail_bound": s.tail_bound, "integral_g_defect": f.checks["integral_g_defect"]}
    return DenjoyReport(c0, c1, epsilon, c1 < epsilon, ok_w, first, rot.value, err, bound,
                        err <= bound, ee, plateau_ok, anorm, entries)


def write_ratio_csv(scheme: WanderingScheme, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "ratio"])
        for i, r in enumerate(scheme.ratio_diagnostic()):
            w.writerow([i, repr(float(r))])
