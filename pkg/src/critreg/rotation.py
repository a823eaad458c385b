"""Rotation numbers, continued fractions, Birkhoff sums and empirical measures."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Callable, Sequence

import mpmath
import numpy as np

from .homeo import CircleMap

PRECISION_BITS = 80


# irrationals ---------------------------------------------------------------
@dataclass(frozen=True)
class Theta:
    """A real number with an optional exact quadratic tag (P + sqrt(D)) / Q."""

    value: float
    quad: tuple | None = None
    label: str = ""

    @classmethod
    def quadratic(cls, P: int, D: int, Q: int, label: str = "") -> "Theta":
        with mpmath.workprec(PRECISION_BITS):
            v = (mpmath.mpf(P) + mpmath.sqrt(D)) / Q
        return cls(float(v), (int(P), int(D), int(Q)), label)

    @classmethod
    def golden(cls) -> "Theta":
        return cls.quadratic(-1, 5, 2, "golden")

    @classmethod
    def parse(cls, text: str) -> "Theta":
        """golden, sqrt2m1, invpi, quad:P,D,Q, p/q or a decimal."""
        t = str(text).strip().lower()
        if t == "golden":
            return cls.golden()
        if t in ("sqrt2m1", "silver"):
            return cls.quadratic(-1, 2, 1, t)
        if t in ("invpi", "1/pi"):
            with mpmath.workprec(PRECISION_BITS):
                return cls(float(1 / mpmath.pi), None, "invpi")
        if t.startswith("quad:"):
            P, D, Q = (int(v) for v in t[5:].split(","))
            return cls.quadratic(P, D, Q, t)
        if "/" in t:
            return cls(float(Fraction(t)), None, t)
        return cls(float(t), None, t)

    def mp(self):
        """High-precision value (exact to 80 bits for tagged and named inputs)."""
        with mpmath.workprec(PRECISION_BITS):
            if self.quad is not None:
                P, D, Q = self.quad
                return (mpmath.mpf(P) + mpmath.sqrt(D)) / Q
            if self.label == "invpi":
                return 1 / mpmath.pi
            if "/" in self.label:
                fr = Fraction(self.label)
                return mpmath.mpf(fr.numerator) / fr.denominator
            return mpmath.mpf(self.value)

    def to_dict(self) -> dict:
        return {"value": self.value, "quad": list(self.quad) if self.quad else None,
                "label": self.label}


def _as_theta(theta) -> Theta:
    if isinstance(theta, Theta):
        return theta
    if isinstance(theta, str):
        return Theta.parse(theta)
    return Theta(float(theta))


def continued_fraction(theta, count: int) -> tuple[list, bool]:
    """First partial quotients of theta and whether the expansion terminated."""
    th = _as_theta(theta)
    terms: list = []
    if th.quad is not None:
        P, D, Q = th.quad
        r = isqrt(D)
        if r * r == D:
            return continued_fraction(Theta(float(Fraction(P + r, Q)), None, f"{P + r}/{Q}"), count)
        if Q <= 0:
            raise ValueError("quadratic tags need Q > 0")
        if (D - P * P) % Q:
            P, D, Q = P * Q, D * Q * Q, Q * Q
        sq = isqrt(D)
        for _ in range(count):
            a = (P + sq) // Q  # floor((P + sqrt D)/Q), exact since D is not a square
            terms.append(a)
            P = a * Q - P
            Q = (D - P * P) // Q
        return terms, False
    if th.quad is None and "/" in th.label:
        fr = Fraction(th.label)
        num, den = fr.numerator, fr.denominator
        while den and len(terms) < count:
            a, r = divmod(num, den)
            terms.append(a)
            num, den = den, r
        return terms, den == 0
    with mpmath.workprec(PRECISION_BITS):
        x = th.mp()
        tiny = mpmath.mpf(2) ** (-(PRECISION_BITS - 10))
        for _ in range(count):
            a = int(mpmath.floor(x))
            terms.append(a)
            frac = x - a
            if frac < tiny:
                return terms, True
            x = 1 / frac
    return terms, False


class ConvergentList(list):
    """List of (p, q); ``rational`` is set when the expansion terminated."""

    rational: bool = False


def convergents(theta, count: int) -> ConvergentList:
    """Continued-fraction convergents p/q with q > 1, q strictly increasing."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = ConvergentList()
    p0, q0, p1, q1 = 0, 1, 1, 0  # p_{-2}, q_{-2}, p_{-1}, q_{-1}
    chunk = count + 4
    while True:
        terms, done = continued_fraction(theta, chunk)
        out.clear()
        p0, q0, p1, q1 = 0, 1, 1, 0
        for a in terms:
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
            if q1 > 1:
                out.append((p1, q1))
                if len(out) == count:
                    return out
        if done:
            out.rational = True
            warnings.warn("theta is rational at working precision; expansion terminated")
            return out
        chunk *= 2


def approximation_quality(theta, p: int, q: int) -> float:
    """q |q theta - p| evaluated in 80-bit arithmetic."""
    th = _as_theta(theta)
    with mpmath.workprec(PRECISION_BITS):
        return float(q * abs(q * th.mp() - p))


@dataclass
class DirichletResult:
    p: int
    q: int
    error: float  # |q theta - p|
    rational: bool = False


def dirichlet_approx(theta, N: int) -> DirichletResult:
    """Pigeonhole: among {k theta}, 0 <= k < N, together with 1, the closest
    adjacent pair gives q < N with |q theta - p| < 1/N."""
    if N < 2:
        raise ValueError("N must be >= 2")
    th = _as_theta(theta)
    terms, done = continued_fraction(th, 64)
    if done:
        p0, q0, p1, q1 = 0, 1, 1, 0
        for a in terms:
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        fr = Fraction(p1, q1)
        if fr.denominator < N:
            return DirichletResult(fr.numerator, fr.denominator, 0.0, True)
    with mpmath.workprec(PRECISION_BITS):
        t = th.mp()
        fr = [(float(mpmath.frac(k * t)), k) for k in range(N)]
    fr.append((1.0, -1))  # the point 1 (= k 0 shifted up by one)
    fr.sort()
    best = None
    for (x1, k1), (x2, k2) in zip(fr, fr[1:]):
        gap = x2 - x1
        if best is None or gap < best[0]:
            best = (gap, k1, k2)
    _, k1, k2 = best
    if k2 == -1:
        q = k1
    elif k1 == -1:
        q = k2
    else:
        q = abs(k2 - k1)
    q = max(q, 1)
    with mpmath.workprec(PRECISION_BITS):
        p = int(mpmath.nint(q * th.mp()))
        g = gcd(p, q) or 1
        p, q = p // g, q // g
        err = float(abs(q * th.mp() - p))
    return DirichletResult(p, q, err, False)


# rotation numbers --------------------------------------------------------
@dataclass
class RotationEstimate:
    value: float
    iterations: int
    error_bound: float
    basepoint: float


def _orbit_split(f: CircleMap, x0: float, n: int):
    if hasattr(f, "orbit_split_fast"):
        return f.orbit_split_fast(x0, n)
    m, u = f.orbit_split(x0, n)
    return int(m[0]), float(u[0])


def rotation_number(f: CircleMap, n: int, x0: float = 0.0) -> RotationEstimate:
    """frac((F^n(x0) - x0)/n), with the defect-one error bound 1/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m, u = _orbit_split(f, x0, n)
    m0 = math.floor(x0)
    disp = (m - m0) + (u - (x0 - m0))
    val = disp / n
    return RotationEstimate(val - math.floor(val), n, 1.0 / n, float(x0))


def rotation_series(f: CircleMap, ns: Sequence[int], x0: float = 0.0) -> list:
    """[(n, estimate, bound)] rows for convergence plots."""
    return [(n, (r := rotation_number(f, n, x0)).value, r.error_bound) for n in ns]


def circle_distance(a: float, b: float) -> float:
    d = (a - b) % 1.0
    return min(d, 1.0 - d)


# Birkhoff sums -----------------------------------------------------------
def birkhoff_average(f: CircleMap, phi: Callable, x0, n: int) -> np.ndarray:
    """(1/n) sum_{k<n} phi(F^k x0), vectorised over basepoints."""
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    m = np.floor(x).astype(np.int64)
    u = x - m
    acc = np.zeros_like(u)
    for _ in range(n):
        acc += phi(u)
        m, u = f.step(m, u)
    return acc / n


@dataclass
class KoksmaResult:
    lhs: float
    bound: float
    passed: bool
    is_convergent: bool
    mean: float
    mean_uncertainty: float = 0.0


def denjoy_koksma_check(f: CircleMap, phi: Callable, q: int, x: float = 0.0, variation: float = 4.0,
                        theta=None, mean: float | None = None, tol: float = 1e-12,
                        mean_orbit: int = 200_000) -> KoksmaResult:
    """|(1/q) sum_{k<q} phi(f^k x) - integral| against Var(phi)/q.

    For rigid rotations the integral is Lebesgue; otherwise it is estimated by
    a long Birkhoff orbit and the estimate's spread is reported.
    """
    is_conv = True
    if theta is not None:
        qs = {qq for _, qq in convergents(theta, 60)}
        is_conv = q in qs
        if not is_conv:
            warnings.warn(f"q={q} is not a convergent denominator; the bound is not guaranteed")
    unc = 0.0
    if mean is None:
        restr = f.restriction
        if getattr(restr, "slope", None) == 1.0:
            from scipy import integrate

            mean = integrate.quad(lambda t: float(phi(np.array([t]))[0]), 0.0, 1.0,
                                  epsabs=1e-14, limit=200)[0]
        else:
            starts = np.linspace(0.0, 1.0, 8, endpoint=False)
            avgs = birkhoff_average(f, phi, starts, mean_orbit // 8)
            mean = float(np.mean(avgs))
            unc = float(np.max(avgs) - np.min(avgs))
    s = float(birkhoff_average(f, phi, x, q)[0])
    lhs = abs(s - mean)
    bound = variation / q
    return KoksmaResult(lhs, bound, bool(lhs <= bound + tol + unc), is_conv, float(mean), unc)


@dataclass
class UniqueErgodicityResult:
    deviation: float
    applicable: bool
    reason: str = ""
    averages: list = field(default_factory=list)


def _has_periodic_orbit(f: CircleMap, n_est: int = 20_000, qmax: int = 1000,
                        tol: float = 1e-9) -> tuple[bool, str]:
    rho = rotation_number(f, n_est).value
    grid = np.linspace(0.0, 1.0, 64, endpoint=False)
    for p, q in [(0, 1)] + list(convergents(rho, 12)):
        if q > qmax:
            break
        m = np.floor(grid).astype(np.int64)
        u = grid.copy()
        for _ in range(q):
            m, u = f.step(m, u)
        d = (m + u) - grid - p
        if np.min(np.abs(d)) < tol or (np.min(d) < 0 < np.max(d)):
            return True, f"periodic orbit of type {p}/{q} detected"
    return False, ""


def birkhoff_unique_ergodicity(f: CircleMap, phi: Callable, n: int, basepoints) -> UniqueErgodicityResult:
    """Spread of Birkhoff averages across basepoints (tends to 0 for irrational f)."""
    periodic, why = _has_periodic_orbit(f)
    bp = np.atleast_1d(np.asarray(basepoints, dtype=float))
    avgs = birkhoff_average(f, phi, bp, n)
    dev = float(np.max(np.abs(avgs - np.mean(avgs))))
    if periodic:
        return UniqueErgodicityResult(dev, False, "rational rotation number: " + why, avgs.tolist())
    return UniqueErgodicityResult(dev, True, "", avgs.tolist())


# measures ----------------------------------------------------------------
@dataclass
class EmpiricalMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.mod(np.asarray(self.points, dtype=float), 1.0)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights differ in shape")
        if np.any(self.weights < 0):
            raise ValueError("negative weight")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        order = np.argsort(self.points, kind="stable")
        self.points, self.weights = self.points[order], self.weights[order]

    @classmethod
    def lebesgue(cls, n: int) -> "EmpiricalMeasure":
        return cls((np.arange(n) + 0.5) / n, np.full(n, 1.0 / n))

    @classmethod
    def uniform_atoms(cls, pts) -> "EmpiricalMeasure":
        pts = np.asarray(pts, dtype=float)
        return cls(pts, np.full(pts.size, 1.0 / pts.size))

    @classmethod
    def from_orbit(cls, f: CircleMap, x0: float, n: int) -> "EmpiricalMeasure":
        m = np.array([math.floor(x0)], dtype=np.int64)
        u = np.array([x0 - math.floor(x0)])
        pts = np.empty(n)
        for k in range(n):
            pts[k] = u[0]
            m, u = f.step(m, u)
        return cls.uniform_atoms(pts)

    def arc_mass(self, a: float, length: float) -> float:
        """mu of the arc [a, a + length) mod 1, 0 <= length <= 1."""
        a = a % 1.0
        b = a + length
        cdf = np.concatenate([[0.0], np.cumsum(self.weights)])
        lo = np.searchsorted(self.points, a, side="left")
        if b <= 1.0:
            hi = np.searchsorted(self.points, b, side="left")
            return float(cdf[hi] - cdf[lo])
        hi = np.searchsorted(self.points, b - 1.0, side="left")
        return float(cdf[-1] - cdf[lo] + cdf[hi])

    def pushforward(self, f: CircleMap) -> "EmpiricalMeasure":
        return EmpiricalMeasure(np.mod(f(self.points), 1.0), self.weights.copy())

    def histogram(self, bins: int) -> np.ndarray:
        h, _ = np.histogram(self.points, bins=bins, range=(0.0, 1.0), weights=self.weights)
        return h

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "weight"])
            for p, wt in zip(self.points, self.weights):
                w.writerow([repr(float(p)), repr(float(wt))])

    @classmethod
    def from_csv(cls, path: str) -> "EmpiricalMeasure":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


def circular_cdf_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Oscillation of F_mu - F_nu: a rotation-invariant distance on circle measures."""
    pts = np.union1d(mu.points, nu.points)
    cm = np.concatenate([[0.0], np.cumsum(mu.weights)])
    cn = np.concatenate([[0.0], np.cumsum(nu.weights)])
    Fm = cm[np.searchsorted(mu.points, pts, side="right")]
    Fn = cn[np.searchsorted(nu.points, pts, side="right")]
    d = Fm - Fn
    return float(np.max(d) - np.min(d)) if d.size else 0.0


@dataclass
class MeasureRotation:
    value: float
    pushforward_distance: float
    rotation_estimate: float | None = None
    agrees: bool | None = None


def measure_rotation_number(mu: EmpiricalMeasure, f: CircleMap, x: float = 0.0,
                            cross_check_n: int | None = None, tol: float = 0.0) -> MeasureRotation:
    """mu[x, F(x)) mod 1, with the pushforward distance of mu reported."""
    if abs(mu.weights.sum() - 1.0) > 1e-12:
        raise ValueError("measure is not normalised")
    fx = float(f(x))
    d = fx - x
    whole = math.floor(d)
    mass = mu.arc_mass(x, d - whole)
    val = mass % 1.0
    push = circular_cdf_distance(mu, mu.pushforward(f))
    if cross_check_n:
        est = rotation_number(f, cross_check_n, x)
        agree = circle_distance(val, est.value) <= push + est.error_bound + tol
        return MeasureRotation(val, push, est.value, bool(agree))
    return MeasureRotation(val, push)


@dataclass
class StationaryResult:
    measure: EmpiricalMeasure
    residual: float
    lebesgue_deviation: float
    bins: int


def stationary_measure_mc(gens: Sequence[CircleMap], probs: Sequence[float], steps: int,
                          samples: int, seed: int, bins: int = 16, chunks: int = 8) -> StationaryResult:
    """Random-walk images of uniform start points under i.i.d. generator choices.

    Each chunk of samples draws from its own PCG64 stream spawned from the
    seed, so results do not depend on how chunks are scheduled.
    """
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("probabilities must be positive and sum to 1")
    if len(gens) != probs.size:
        raise ValueError("one probability per generator")
    sizes = [samples // chunks + (1 if i < samples % chunks else 0) for i in range(chunks)]
    streams = np.random.SeedSequence(seed).spawn(chunks)
    out = []
    for size, ss in zip(sizes, streams):
        if size == 0:
            continue
        rng = np.random.default_rng(ss)
        u = rng.random(size)
        m = np.zeros(size, dtype=np.int64)
        for _ in range(steps):
            choice = rng.choice(probs.size, size=size, p=probs)
            for gi, g in enumerate(gens):
                sel = choice == gi
                if np.any(sel):
                    m[sel], u[sel] = g.step(m[sel], u[sel])
        out.append(u)
    pts = np.concatenate(out)
    mu = EmpiricalMeasure.uniform_atoms(pts)
    h = mu.histogram(bins)
    pushed = sum(p * EmpiricalMeasure(np.mod(g(mu.points), 1.0), mu.weights).histogram(bins)
                 for p, g in zip(probs, gens))
    return StationaryResult(mu, float(np.max(np.abs(pushed - h))),
                            float(np.max(np.abs(h - 1.0 / bins))), bins)


def write_rotation_csv(rows, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "estimate", "bound"])
        for n, est, b in rows:
            w.writerow([n, repr(float(est)), repr(float(b))])
