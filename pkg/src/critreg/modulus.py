"""Concave moduli of continuity and the diagnostics built on them."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

DEFAULT_TOL = 1e-10


class DomainError(ValueError):
    """Raised when a modulus is evaluated outside its domain of definition."""


def dyadic_grid(jmin: int = 1, jmax: int = 52) -> np.ndarray:
    """Increasing grid 2^-jmax, ..., 2^-jmin."""
    return np.ldexp(1.0, -np.arange(jmax, jmin - 1, -1))


@dataclass(frozen=True)
class ConcaveModulus:
    """A concave gauge alpha with alpha(0) = 0.

    kind is one of "hoelder" (tau), "lipschitz", "omega" (s, t, u: the family
    x^s exp(-t sqrt(log 1/x)) / (log 1/x)^u) or "tabulated" (points).
    """

    kind: str
    tau: float = 1.0
    s: float = 0.0
    t: float = 0.0
    u: float = 0.0
    points: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "hoelder" and not (0.0 < self.tau <= 1.0):
            raise ValueError(f"Hoelder exponent must lie in (0, 1], got {self.tau}")
        if self.kind == "omega" and self.u < 0:
            raise ValueError("omega family needs u >= 0")
        if self.kind == "tabulated":
            pts = self.points
            if len(pts) < 2:
                raise ValueError("tabulated modulus needs at least two points")
            xs = [p[0] for p in pts]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("tabulated abscissae must be strictly increasing")
            if xs[0] != 0.0 or pts[0][1] != 0.0:
                raise ValueError("tabulated modulus must start at (0, 0)")
        if self.kind not in ("hoelder", "lipschitz", "omega", "tabulated"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")

    # construction helpers -------------------------------------------------
    @classmethod
    def hoelder(cls, tau: float) -> "ConcaveModulus":
        return cls("hoelder", tau=float(tau))

    @classmethod
    def lipschitz(cls) -> "ConcaveModulus":
        return cls("lipschitz")

    @classmethod
    def omega(cls, s: float, t: float, u: float = 0.0) -> "ConcaveModulus":
        return cls("omega", s=float(s), t=float(t), u=float(u))

    @classmethod
    def tabulated(cls, points: Iterable[Sequence[float]]) -> "ConcaveModulus":
        pts = sorted((float(x), float(y)) for x, y in points)
        if pts[0][0] != 0.0:
            pts.insert(0, (0.0, 0.0))
        return cls("tabulated", points=tuple(pts))

    @classmethod
    def inverse_log(cls, jmin: int = 3, jmax: int = 200) -> "ConcaveModulus":
        """Tabulated 1/log(1/x) on the points 2^-j."""
        xs = dyadic_grid(jmin, jmax)
        return cls.tabulated(zip(xs, 1.0 / (-np.log(xs))))

    # descriptors -----------------------------------------------------------
    def to_dict(self) -> dict:
        if self.kind == "hoelder":
            return {"kind": "hoelder", "tau": self.tau}
        if self.kind == "lipschitz":
            return {"kind": "lipschitz"}
        if self.kind == "omega":
            return {"kind": "omega", "s": self.s, "t": self.t, "u": self.u}
        return {"kind": "tabulated", "points": [list(p) for p in self.points]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ConcaveModulus":
        d = dict(d)
        kind = d.pop("kind")
        allowed = {"hoelder": {"tau"}, "lipschitz": set(), "omega": {"s", "t", "u"},
                   "tabulated": {"points"}}
        if kind not in allowed:
            raise ValueError(f"unknown modulus kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise ValueError(f"unknown keys for {kind}: {sorted(extra)}")
        if kind == "tabulated":
            return cls.tabulated(d["points"])
        return cls(kind, **{k: float(v) for k, v in d.items()})

    @classmethod
    def parse(cls, text: str) -> "ConcaveModulus":
        """Accept JSON descriptors or the short forms hoelder:0.5, lipschitz,
        omega:s,t,u, invlog, tabulated:path.csv."""
        text = text.strip()
        if text.startswith("{"):
            return cls.from_dict(json.loads(text))
        name, _, arg = text.partition(":")
        name = name.lower()
        if name in ("hoelder", "holder"):
            return cls.hoelder(float(arg))
        if name == "lipschitz":
            return cls.lipschitz()
        if name == "omega":
            vals = [float(v) for v in arg.split(",")]
            return cls.omega(*vals)
        if name == "invlog":
            return cls.inverse_log()
        if name == "tabulated":
            return cls.from_csv(arg)
        raise ValueError(f"cannot parse modulus descriptor {text!r}")

    @classmethod
    def from_csv(cls, path: str) -> "ConcaveModulus":
        pts = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    pts.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header line
        return cls.tabulated(pts)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "alpha"])
            for x, y in self.points:
                w.writerow([repr(x), repr(y)])

    # evaluation ------------------------------------------------------------
    @property
    def validity_sup(self) -> float:
        if self.kind in ("hoelder", "lipschitz"):
            return math.inf
        if self.kind == "omega":
            return math.exp(-1.0)
        return self.points[-1][0]

    def _check_domain(self, x: np.ndarray) -> None:
        if np.any(x < 0):
            raise DomainError("modulus evaluated at a negative argument")
        if np.any(x > self.validity_sup * (1 + 1e-15)):
            raise DomainError(f"argument beyond validity_sup={self.validity_sup}")

    def __call__(self, x):
        return eval_modulus(self, x)

    def _raw(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        if self.kind == "hoelder":
            out[pos] = xp ** self.tau
        elif self.kind == "lipschitz":
            out[pos] = xp
        elif self.kind == "omega":
            out[pos] = np.exp(self._log_omega(-np.log(xp)))
        else:
            xs = np.array([p[0] for p in self.points])
            ys = np.array([p[1] for p in self.points])
            out[pos] = np.interp(xp, xs, ys)
        return out

    def _log_omega(self, L):
        L = np.asarray(L, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.s * L - self.t * np.sqrt(L) - self.u * np.log(L)

    def log_at(self, y):
        """log alpha(e^{-y}) for y >= -log(validity_sup); safe for huge y."""
        y = np.asarray(y, dtype=float)
        if self.kind == "hoelder":
            return -self.tau * y
        if self.kind == "lipschitz":
            return -y
        if self.kind == "omega":
            return self._log_omega(y)
        x1, a1 = self.points[1]
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        cut = -math.log(x1)
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            inner = np.log(np.interp(np.exp(-np.minimum(y, cut)), xs, ys))
        below = math.log(a1) - math.log(x1) - y  # linear piece from the origin
        return np.where(y >= cut, below, inner)

    def derivative(self, x):
        """alpha'(x) for 0 < x <= validity_sup (right derivative for tabulated)."""
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        if self.kind == "hoelder":
            return self.tau * x ** (self.tau - 1.0)
        if self.kind == "lipschitz":
            return np.ones_like(x)
        if self.kind == "omega":
            L = -np.log(x)
            w = self._raw(x)
            return (w / x) * (self.s + self.t / (2 * np.sqrt(L)) + self.u / L)
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        j = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
        return (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j])

    def extended(self, x):
        """Global concave modulus: alpha below validity_sup, tangent line above it."""
        x = np.asarray(x, dtype=float)
        v = self.validity_sup
        if math.isinf(v):
            return eval_modulus(self, x)
        inner = eval_modulus(self, np.minimum(x, v))
        slope = float(self.derivative(np.array(v)))
        return np.where(x > v, inner + slope * (x - v), inner)

    def concavity_indicator(self, L):
        """Sign carrier of alpha'' for the omega family, as a function of L = log(1/x).

        alpha'' = alpha/x^2 (g^2 - g - g') with g = s + t/(2 sqrt L) + u/L, so the
        modulus is concave exactly where this is negative.
        """
        L = np.asarray(L, dtype=float)
        g = self.s + self.t / (2 * np.sqrt(L)) + self.u / L
        dg = -self.t / (4 * L ** 1.5) - self.u / L ** 2
        return g * g - g - dg

    def concave_below(self) -> float:
        """Largest x0 <= validity_sup with alpha concave on (0, x0], 0 if none found."""
        if self.kind != "omega":
            return self.validity_sup
        L = np.geomspace(1.0, 1e8, 4000)
        ind = self.concavity_indicator(L)
        if ind[-1] >= 0:
            return 0.0
        bad = np.nonzero(ind >= 0)[0]
        L0 = 1.0 if bad.size == 0 else L[bad[-1] + 1]
        return math.exp(-L0)

    def regime(self) -> str:
        """Which clause of the omega concavity classification applies."""
        if self.kind != "omega":
            return "not an omega modulus"
        s, t = self.s, self.t
        if s == 0 and t > 0:
            return "i"
        if 0 < s < 1:
            return "ii"
        if s == 1 and t < 0:
            return "iii"
        return "outside classified regime"


def eval_modulus(alpha: ConcaveModulus, x):
    """alpha(x), with alpha(0) = 0 exactly; scalars in, scalars out."""
    arr = np.asarray(x, dtype=float)
    alpha._check_domain(arr)
    out = alpha._raw(np.atleast_1d(arr).astype(float))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


# concavity ---------------------------------------------------------------
@dataclass
class ConcavityReport:
    ok: bool
    violation: tuple | None = None
    reason: str = ""
    regime: str = ""

    def __bool__(self) -> bool:
        return self.ok


def default_grid(alpha: ConcaveModulus) -> np.ndarray:
    if alpha.kind == "tabulated":
        return np.array([p[0] for p in alpha.points])
    g = dyadic_grid(1, 52)
    if alpha.kind == "omega" and alpha.regime() != "outside classified regime":
        # the classification is a statement near 0: test below the concavity onset
        x0 = alpha.concave_below()
        g = dyadic_grid(1, 1000)
        g = g[g <= x0]
        return g[-200:] if g.size > 200 else g
    return g[g <= alpha.validity_sup]


def check_concavity(alpha: ConcaveModulus, grid=None, tol: float = DEFAULT_TOL) -> ConcavityReport:
    """Midpoint concavity plus monotonicity of alpha on every pair of grid points."""
    g = default_grid(alpha) if grid is None else np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    reg = alpha.regime()
    if alpha.kind == "omega" and alpha.s == 1 and alpha.t == 0:
        return ConcavityReport(False, None, "outside classified regime (s=1, t=0 is left open)", reg)
    vals = eval_modulus(alpha, g)
    inc = np.diff(vals)
    if np.any(inc <= 0):
        j = int(np.argmax(inc <= 0))
        return ConcavityReport(False, (g[j], g[j + 1], vals[j], vals[j + 1]), "not increasing", reg)
    xi, yi = np.triu_indices(g.size, k=1)
    mids = eval_modulus(alpha, 0.5 * (g[xi] + g[yi]))
    chords = 0.5 * (vals[xi] + vals[yi])
    # relative slack protects tiny values on deep dyadic grids
    slack = tol * np.maximum(1.0, np.abs(chords)) if tol > 0 else 0.0
    bad = mids < chords - slack
    if np.any(bad):
        j = int(np.argmax(bad))
        return ConcavityReport(False, (g[xi[j]], g[yi[j]], float(mids[j]), float(chords[j])),
                               "midpoint inequality fails", reg)
    pos = g > 0
    ratio = g[pos] / vals[pos]
    if np.any(np.diff(ratio) < -tol * np.maximum(1.0, ratio[1:])):
        return ConcavityReport(False, None, "x/alpha(x) decreases", reg)
    return ConcavityReport(True, None, "", reg)


# integrability -----------------------------------------------------------
@dataclass
class IntegrabilityResult:
    finite: bool
    value: float
    error_bound: float
    certificate: str
    partial_sums: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.finite


def integrability(alpha: ConcaveModulus, which: str = "denjoy", tol: float = DEFAULT_TOL,
                  beta: ConcaveModulus | None = None, k: int = 1,
                  cap: float = 1e3, y_max: float = 1e300) -> IntegrabilityResult:
    """Decide whether the singular integral at x = 0 converges.

    which="denjoy": integral of 1/alpha over (0, 1].
    which="optimal": integral of (1/x)(beta/alpha)^{1/k} over (0, 1].
    The substitution x = e^{-y} turns the singularity into a tail on [y0, inf).
    """
    if which == "optimal":
        if beta is None:
            raise ValueError("optimal integrability needs beta")
        if k < 1:
            raise ValueError("k must be positive")

    def logG(y):
        if which == "denjoy":
            return -y - alpha.log_at(y)
        return (beta.log_at(y) - alpha.log_at(y)) / k

    # head: [x_v, 1] in x, using the linear extension if needed
    v = min(alpha.validity_sup, beta.validity_sup if beta is not None else math.inf, 1.0)
    if v < 1.0:
        if which == "denjoy":
            f = lambda x: 1.0 / float(alpha.extended(x))
        else:
            f = lambda x: (float(beta.extended(x)) / float(alpha.extended(x))) ** (1.0 / k) / x
        head, head_err = integrate.quad(f, v, 1.0, epsabs=tol / 8, epsrel=0, limit=200)
    else:
        head, head_err = 0.0, 0.0
    y0 = -math.log(v)

    G = lambda y: math.exp(float(logG(y)))
    analytic_rate = None
    if which == "denjoy" and alpha.kind == "hoelder":
        analytic_rate = 1.0 - alpha.tau
    elif which == "denjoy" and alpha.kind == "lipschitz":
        analytic_rate = 0.0
    elif which == "optimal" and alpha.kind in ("hoelder", "lipschitz") and \
            beta.kind in ("hoelder", "lipschitz"):
        ta = alpha.tau if alpha.kind == "hoelder" else 1.0
        tb = beta.tau if beta.kind == "hoelder" else 1.0
        analytic_rate = (tb - ta) / k

    def rate(Y):
        if analytic_rate is not None:
            return analytic_rate
        # smallest decay rate of log G sampled on [Y, 64 Y]; log G is
        # eventually concave/convex for every kind here, so this is a bound
        ys = Y * np.geomspace(1.0, 64.0, 13)
        lg = np.array([float(logG(y)) for y in ys])
        h = 1e-6 * ys
        lgh = np.array([float(logG(y + hh)) for y, hh in zip(ys, h)])
        return float(np.min(-(lgh - lg) / h))

    total = head
    err = head_err
    sums = []
    a = y0
    Y = max(2.0 * y0, y0 + 1.0)
    while True:
        piece, perr = integrate.quad(G, a, Y, epsabs=tol / 8, epsrel=1e-13, limit=400)
        total += piece
        err += perr
        sums.append(total)
        lam = rate(Y)
        if lam > 0:
            tail = G(Y) / lam
            if tail <= tol / 2:
                return IntegrabilityResult(True, total, err + tail,
                                           f"tail <= G(Y)/lambda = {tail:.3e} at Y={Y:.4g}", sums)
        if total > cap:
            return IntegrabilityResult(False, math.inf, math.inf,
                                       f"partial sums exceed cap {cap} with monotone growth", sums)
        if Y >= y_max:
            return IntegrabilityResult(False, math.inf, math.inf,
                                       "no tail certificate up to y_max; partial sums still growing",
                                       sums)
        a, Y = Y, min(2.0 * Y, y_max)


# tameness ----------------------------------------------------------------
@dataclass
class TamenessReport:
    sub_tame_sup_estimates: list
    sup_tame_sup_estimates: list
    verdict_sub: bool
    verdict_sup: bool
    advisory: str = "verdicts extrapolate finite grids and are advisory"


def _trend_verdict(values: np.ndarray, threshold: float) -> bool:
    tail = values[len(values) // 2:]
    nonincreasing = bool(np.all(np.diff(tail) <= 1e-12 * np.maximum(1.0, tail[:-1])))
    return bool(values[-1] <= threshold and nonincreasing)


def tameness(beta: ConcaveModulus, t_grid=None, x_grid=None, threshold: float = 1e-3) -> TamenessReport:
    """Sampled sup_x beta(tx)/beta(x) and sup_x t beta(x)/beta(tx) as t -> 0."""
    if t_grid is None:
        t_grid = np.ldexp(1.0, -np.arange(1, 41))
    if x_grid is None:
        x_grid = default_grid(beta) if beta.kind == "tabulated" else dyadic_grid(1, 52)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))[::-1]
    x_grid = np.asarray(x_grid, dtype=float)
    x_grid = x_grid[(x_grid > 0) & (x_grid <= beta.validity_sup)]
    # tabulated kinds are only known down to their first positive abscissa
    floor = beta.points[1][0] if beta.kind == "tabulated" else 0.0
    ly_all = -np.log(x_grid)
    sub, sup = [], []
    for t in t_grid:
        keep = t * x_grid >= floor
        if not np.any(keep):
            raise ValueError(f"no grid point x with t*x inside the table for t={t}")
        ly = ly_all[keep]
        lbx = beta.log_at(ly)
        lbtx = beta.log_at(ly - math.log(t))
        sub.append((float(t), float(np.exp(np.max(lbtx - lbx)))))
        sup.append((float(t), float(np.exp(np.max(math.log(t) + lbx - lbtx)))))
    vs = np.array([v for _, v in sub])
    vp = np.array([v for _, v in sup])
    return TamenessReport(sub, sup, _trend_verdict(vs, threshold), _trend_verdict(vp, threshold))


def is_tame_pair(k: int, beta: ConcaveModulus, report: TamenessReport | None = None) -> bool:
    if k >= 2:
        return True
    if k < 0:
        raise ValueError("k must be nonnegative")
    rep = report if report is not None else tameness(beta)
    return rep.verdict_sub if k == 1 else rep.verdict_sup


# norms -------------------------------------------------------------------
def alpha_norm_estimate(samples, alpha: ConcaveModulus, min_gap: float = 1e-15) -> float:
    """max over sample pairs of |f(x) - f(y)| / alpha(|x - y|) (a lower bound for [f]_alpha)."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two (x, f(x)) samples")
    x, fx = arr[:, 0], arr[:, 1]
    i, j = np.triu_indices(x.size, k=1)
    gap = np.abs(x[i] - x[j])
    scale = max(1.0, float(np.max(np.abs(x))))
    keep = gap > min_gap * scale
    if not np.any(keep):
        return 0.0
    gap = gap[keep]
    num = np.abs(fx[i[keep]] - fx[j[keep]])
    den = alpha.extended(gap)
    return float(np.max(num / den))


# smoothing ---------------------------------------------------------------
@dataclass
class SmoothedModulus:
    modulus: ConcaveModulus
    ratio_min: float
    ratio_max: float


def medvedev_smooth(alpha: ConcaveModulus, grid=None, nodes: int = 64) -> SmoothedModulus:
    """Average alpha(x(1+s)) over s in [-1/2, 1/2] against a smooth weight.

    Each x -> alpha(x(1+s)) is concave, so the average is concave, and it
    lies between alpha(x/2) >= alpha(x)/2 and alpha(3x/2) <= 2 alpha(x).
    Returned as a tabulated modulus together with the realised ratio range.
    """
    from .mollifier import get_phi

    phi = get_phi()
    if grid is None:
        grid = dyadic_grid(2, 52)
    g = np.asarray(grid, dtype=float)
    g = g[(g > 0) & (g * 1.5 <= alpha.validity_sup)]
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * gx                      # nodes in [-1/2, 1/2]
    w = 0.5 * gw * 0.5 * phi.derivative(s + 0.5)  # weight Phi'(s+1/2)/2 integrates to 1
    w = w / w.sum()
    vals = np.array([np.dot(w, eval_modulus(alpha, x * (1.0 + s))) for x in g])
    base = eval_modulus(alpha, g)
    ratio = vals / base
    return SmoothedModulus(ConcaveModulus.tabulated(zip(g, vals)),
                           float(ratio.min()), float(ratio.max()))
