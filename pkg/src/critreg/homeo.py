"""Increasing interval maps and circle lifts as expression trees.

Every node evaluates vectorised over numpy arrays.  Nodes that know a closed
form for their derivative expose it through ``deriv``; everything else falls
back to Richardson-extrapolated finite differences in ``derivative_k``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

EVAL_TOL = 1e-12
DERIV_TOL = 1e-8


class MonotonicityError(RuntimeError):
    """A map that should be increasing was found not to be."""


class PoleError(ValueError):
    """Evaluation too close to a pole of a Moebius node."""


def _arr(x):
    return np.asarray(x, dtype=float)


def _out(x_in, y):
    return float(y) if np.ndim(x_in) == 0 else y


def monotone_inverse(f: Callable, y, lo: float, hi: float, tol: float = EVAL_TOL,
                     max_iter: int = 2100) -> np.ndarray:
    """Solve f(x) = y for increasing f on [lo, hi] by vectorised bisection.

    The default ``max_iter`` is enough to reach adjacent doubles anywhere,
    including subnormal targets next to a flat end.
    """
    y = np.atleast_1d(_arr(y))
    a = np.full_like(y, lo)
    b = np.full_like(y, hi)
    fa = f(a)
    fb = f(b)
    if np.any(y < fa - max(tol, 1e-14 * abs(lo))) or np.any(y > fb + max(tol, 1e-14 * abs(hi))):
        raise MonotonicityError("target outside the range of the map on its domain")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if np.all(((b - a) <= tol) | (m == a) | (m == b)):
            return m
        left = f(m) < y
        a = np.where(left, m, a)
        b = np.where(left, b, m)
    raise MonotonicityError("bisection did not converge; map may not be monotone")


class Map1D:
    """An increasing self-map of the closed interval ``domain``."""

    domain: tuple = (0.0, 1.0)

    def __call__(self, x):
        xa = _arr(x)
        return _out(x, self._eval(np.atleast_1d(xa)).reshape(xa.shape))

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, x, k: int = 1):
        """k-th derivative in closed form; NotImplementedError if unavailable."""
        raise NotImplementedError

    def inverse(self) -> "Map1D":
        return Inverse(self)

    def iterate_closed(self, n: int, x: np.ndarray):
        """Closed form for the n-th iterate, or None."""
        return None

    def __matmul__(self, other: "Map1D") -> "Map1D":
        return Compose([self, other])

    def to_dict(self) -> dict:
        return {"node": type(self).__name__, "opaque": True}

    def validate(self, n: int = 257, tol: float = EVAL_TOL, fixes_ends: bool = True) -> None:
        a, b = self.domain
        if not (math.isfinite(a) and math.isfinite(b)):
            return
        g = np.linspace(a, b, n)
        v = self._eval(g)
        if np.any(np.diff(v) < -tol):
            j = int(np.argmax(np.diff(v) < -tol))
            raise MonotonicityError(f"{type(self).__name__} decreases near x={g[j]}")
        if fixes_ends and (abs(v[0] - a) > max(tol, 1e-12 * abs(a)) or
                           abs(v[-1] - b) > max(tol, 1e-12 * abs(b))):
            raise MonotonicityError(f"{type(self).__name__} does not fix its domain endpoints")


class Identity(Map1D):
    def __init__(self, domain=(0.0, 1.0)):
        self.domain = tuple(domain)

    def _eval(self, x):
        return x.copy()

    def deriv(self, x, k=1):
        x = _arr(x)
        return np.full_like(x, 1.0 if k == 1 else 0.0)

    def inverse(self):
        return self

    def iterate_closed(self, n, x):
        return x.copy()

    def to_dict(self):
        return {"node": "Identity", "domain": list(self.domain)}


class Affine(Map1D):
    """x -> slope * x + offset.  Not endpoint fixing in general."""

    def __init__(self, slope: float, offset: float = 0.0, domain=(-math.inf, math.inf)):
        if slope <= 0:
            raise ValueError("affine slope must be positive")
        self.slope, self.offset = float(slope), float(offset)
        self.domain = tuple(domain)

    def _eval(self, x):
        return self.slope * x + self.offset

    def deriv(self, x, k=1):
        x = _arr(x)
        return np.full_like(x, self.slope if k == 1 else 0.0)

    def inverse(self):
        a, b = self.domain
        return Affine(1.0 / self.slope, -self.offset / self.slope,
                      (self.slope * a + self.offset, self.slope * b + self.offset))

    def iterate_closed(self, n, x):
        if self.slope == 1.0:
            return x + n * self.offset
        s = self.slope ** n
        return s * x + self.offset * (s - 1.0) / (self.slope - 1.0)

    def to_dict(self):
        return {"node": "Affine", "slope": self.slope, "offset": self.offset}


class Moebius(Map1D):
    """x -> x / (s - t x), defined where s - t x > 0."""

    def __init__(self, s: float, t: float, domain=(0.0, 1.0)):
        if s <= 0:
            raise ValueError("Moebius needs s > 0")
        self.s, self.t = float(s), float(t)
        self.domain = tuple(domain)
        for end in self.domain:
            if math.isfinite(end) and self.s - self.t * end < 0:
                raise PoleError("domain reaches the pole x = s/t")

    def _den(self, x):
        d = self.s - self.t * x
        if np.any(d <= 1e-300):
            raise PoleError("evaluation at or beyond the pole")
        return d

    def _eval(self, x):
        return x / self._den(x)

    def deriv(self, x, k=1):
        x = _arr(x)
        d = self._den(x)
        # d^k/dx^k x/(s - t x) = s k! t^{k-1} / (s - t x)^{k+1}
        return self.s * math.factorial(k) * self.t ** (k - 1) / d ** (k + 1)

    def inverse(self):
        s, t = self.s, self.t
        a, b = self.domain
        return _MoebiusInverse(s, t, (a / (s - t * a), b / (s - t * b)))

    def to_dict(self):
        return {"node": "Moebius", "s": self.s, "t": self.t, "domain": list(self.domain)}


class _MoebiusInverse(Map1D):
    def __init__(self, s, t, domain):
        self.s, self.t, self.domain = s, t, tuple(domain)

    def _eval(self, y):
        return self.s * y / (1.0 + self.t * y)

    def deriv(self, y, k=1):
        y = _arr(y)
        d = 1.0 + self.t * y
        return self.s * math.factorial(k) * (-self.t) ** (k - 1) / d ** (k + 1)

    def inverse(self):
        a, b = self.domain
        return Moebius(self.s, self.t, (self.s * a / (1 + self.t * a), self.s * b / (1 + self.t * b)))


class YoccozTransfer(Map1D):
    """phi_b^{-1} o phi_a : [0, a] -> [0, b] with phi_a(x) = -(1/a) cot(pi x / a)."""

    def __init__(self, a: float, b: float):
        if a <= 0 or b <= 0:
            raise ValueError("Yoccoz parameters must be positive")
        self.a, self.b = float(a), float(b)
        self.domain = (0.0, self.a)

    def _eval(self, x):
        th = np.pi * np.clip(x, 0.0, self.a) / self.a
        return (self.b / np.pi) * np.arctan2(self.a * np.sin(th), self.b * np.cos(th))

    def deriv(self, x, k=1):
        x = _arr(x)
        a, b = self.a, self.b
        th = np.pi * x / a
        c, s = np.cos(th), np.sin(th)
        D = b * b * c * c + a * a * s * s
        if k == 1:
            return b * b / D
        if k == 2:
            return b * b * (np.pi / a) * 2 * s * c * (b * b - a * a) / (D * D)
        raise NotImplementedError

    def inverse(self):
        return YoccozTransfer(self.b, self.a)

    def phi_a(self, x):
        return -np.cos(np.pi * _arr(x) / self.a) / (self.a * np.sin(np.pi * _arr(x) / self.a))

    def to_dict(self):
        return {"node": "YoccozTransfer", "a": self.a, "b": self.b}


def _sigma(u):
    """e^{1/(1-u)} - e^{1/u}: an increasing bijection (0,1) -> R, odd about 1/2."""
    with np.errstate(over="ignore"):
        return np.exp(1.0 / (1.0 - u)) - np.exp(1.0 / u)


def _sigma_inv(v: np.ndarray) -> np.ndarray:
    lo = np.full_like(v, 1e-3)
    hi = np.full_like(v, 1.0 - 1e-3)
    for _ in range(64):
        m = 0.5 * (lo + hi)
        left = _sigma(m) < v
        lo = np.where(left, m, lo)
        hi = np.where(left, hi, m)
    # two Newton steps polish the last bits
    u = 0.5 * (lo + hi)
    for _ in range(2):
        with np.errstate(over="ignore"):
            d = np.exp(1.0 / (1.0 - u)) / (1.0 - u) ** 2 + np.exp(1.0 / u) / u ** 2
        step = (_sigma(u) - v) / d
        u = np.clip(u - step, lo, hi)
    return u


class SigmaBump(Map1D):
    """Smooth bump on [lo, hi]: sigma^{-1}(sigma(u) + T) in unit coordinates.

    Infinitely flat at both ends, f(x) > x inside for T > 0, and iterates are
    closed form: f^n = sigma^{-1}(sigma + nT).
    """

    EDGE = 0.002  # below this distance to an end the bump is the identity in floats

    def __init__(self, lo: float, hi: float, T: float, power: int = 1):
        if hi <= lo:
            raise ValueError("empty bump interval")
        self.lo, self.hi, self.T, self.power = float(lo), float(hi), float(T), int(power)
        self.domain = (self.lo, self.hi)

    @classmethod
    def fast(cls, lo: float, hi: float, delta: float, power: int = 1) -> "SigmaBump":
        """Bump whose single step already moves the point (1-delta)/2 by delta|J|."""
        D = (1.0 - delta) / 2.0
        return cls(lo, hi, 2.0 * float(_sigma(np.array(1.0 - D))), power)

    def _shift(self, x, n):
        w = self.hi - self.lo
        u = (x - self.lo) / w
        out = x.copy()
        m = (u > self.EDGE) & (u < 1 - self.EDGE)
        if np.any(m):
            un = _sigma_inv(_sigma(u[m]) + n * self.T)
            out[m] = self.lo + w * un
        return out

    def _eval(self, x):
        return self._shift(x, self.power)

    def iterate_closed(self, n, x):
        return self._shift(x, n * self.power)

    def inverse(self):
        return SigmaBump(self.lo, self.hi, self.T, -self.power)

    def deriv(self, x, k=1):
        if k != 1:
            raise NotImplementedError
        x = _arr(x)
        w = self.hi - self.lo
        u = (x - self.lo) / w
        out = np.ones_like(x)
        m = (u > self.EDGE) & (u < 1 - self.EDGE)
        if np.any(m):
            um = u[m]
            un = _sigma_inv(_sigma(um) + self.power * self.T)
            ds = lambda z: np.exp(1.0 / (1.0 - z)) / (1.0 - z) ** 2 + np.exp(1.0 / z) / z ** 2
            out[m] = ds(um) / ds(un)
        return out

    def to_dict(self):
        return {"node": "SigmaBump", "lo": self.lo, "hi": self.hi, "T": self.T, "power": self.power}


class TanBump(Map1D):
    """Bump on [lo, hi] conjugate to translation by T under tan(pi(u - 1/2)).

    Closed-form inverse and iterates; C^1-tangent to the identity at the ends.
    """

    def __init__(self, lo: float, hi: float, T: float, power: int = 1):
        self.lo, self.hi, self.T, self.power = float(lo), float(hi), float(T), int(power)
        self.domain = (self.lo, self.hi)

    def _shift(self, x, n):
        w = self.hi - self.lo
        u = (x - self.lo) / w
        out = x.copy()
        m = (u > 0) & (u < 1)
        if np.any(m):
            z = np.tan(np.pi * (u[m] - 0.5)) + n * self.T
            out[m] = self.lo + w * (0.5 + np.arctan(z) / np.pi)
        return out

    def _eval(self, x):
        return self._shift(x, self.power)

    def iterate_closed(self, n, x):
        return self._shift(x, n * self.power)

    def inverse(self):
        return TanBump(self.lo, self.hi, self.T, -self.power)

    def to_dict(self):
        return {"node": "TanBump", "lo": self.lo, "hi": self.hi, "T": self.T, "power": self.power}


class Transported(Map1D):
    """inner (a map of [0,1]) moved affinely onto [lo, hi]."""

    def __init__(self, inner: Map1D, lo: float, hi: float):
        self.inner, self.lo, self.hi = inner, float(lo), float(hi)
        self.domain = (self.lo, self.hi)

    def _eval(self, x):
        w = self.hi - self.lo
        return self.lo + w * self.inner._eval((x - self.lo) / w)

    def deriv(self, x, k=1):
        w = self.hi - self.lo
        return self.inner.deriv((_arr(x) - self.lo) / w, k) / w ** (k - 1)

    def inverse(self):
        return Transported(self.inner.inverse(), self.lo, self.hi)

    def iterate_closed(self, n, x):
        w = self.hi - self.lo
        r = self.inner.iterate_closed(n, (x - self.lo) / w)
        return None if r is None else self.lo + w * r

    def to_dict(self):
        return {"node": "Transported", "lo": self.lo, "hi": self.hi, "inner": self.inner.to_dict()}


class PiecewiseGlue(Map1D):
    """Identity off a family of disjoint intervals, given maps on each one."""

    def __init__(self, pieces: Sequence, domain=None):
        pieces = sorted(((float(lo), float(hi)), m) for (lo, hi), m in pieces)
        for (i1, _), (i2, _) in zip(pieces, pieces[1:]):
            if i2[0] < i1[1]:
                raise ValueError(f"overlapping pieces {i1} and {i2}")
        self.pieces = pieces
        self._lo = np.array([p[0][0] for p in pieces])
        self._hi = np.array([p[0][1] for p in pieces])
        if domain is None:
            domain = (self._lo[0], self._hi[-1]) if pieces else (0.0, 1.0)
        self.domain = tuple(domain)

    def _route(self, x, fn):
        out = x.copy()
        if not self.pieces:
            return out
        j = np.searchsorted(self._lo, x, side="right") - 1
        ok = (j >= 0)
        jj = np.where(ok, j, 0)
        inside = ok & (x < self._hi[jj])
        for idx in np.unique(jj[inside]):
            m = inside & (jj == idx)
            out[m] = fn(self.pieces[idx][1], x[m])
        return out

    def _eval(self, x):
        return self._route(x, lambda m, xs: m._eval(xs))

    def iterate_closed(self, n, x):
        def f(m, xs):
            r = m.iterate_closed(n, xs)
            if r is None:
                return iterate(m, n, xs)
            return r
        return self._route(x, f)

    def deriv(self, x, k=1):
        x = np.atleast_1d(_arr(x))
        base = np.full_like(x, 1.0 if k == 1 else 0.0)
        if not self.pieces:
            return base
        j = np.searchsorted(self._lo, x, side="right") - 1
        ok = j >= 0
        jj = np.where(ok, j, 0)
        inside = ok & (x < self._hi[jj])
        for idx in np.unique(jj[inside]):
            m = inside & (jj == idx)
            base[m] = self.pieces[idx][1].deriv(x[m], k)
        return base

    def inverse(self):
        return PiecewiseGlue([(iv, m.inverse()) for iv, m in self.pieces], self.domain)

    def to_dict(self):
        return {"node": "PiecewiseGlue",
                "pieces": [{"interval": list(iv), "map": m.to_dict()} for iv, m in self.pieces]}


class Compose(Map1D):
    """maps[0] o maps[1] o ... (the last map acts first)."""

    def __init__(self, maps: Sequence[Map1D]):
        self.maps = list(maps)
        self.domain = self.maps[-1].domain if self.maps else (0.0, 1.0)

    def _eval(self, x):
        for m in reversed(self.maps):
            x = m._eval(x)
        return x

    def deriv(self, x, k=1):
        if k != 1:
            raise NotImplementedError
        x = np.atleast_1d(_arr(x)).copy()
        d = np.ones_like(x)
        for m in reversed(self.maps):
            d = d * m.deriv(x, 1)
            x = m._eval(x)
        return d

    def inverse(self):
        return Compose([m.inverse() for m in reversed(self.maps)])

    def to_dict(self):
        return {"node": "Compose", "maps": [m.to_dict() for m in self.maps]}


class Inverse(Map1D):
    """Lazy inverse by monotone bisection."""

    def __init__(self, inner: Map1D, tol: float = EVAL_TOL, bracket=None):
        self.inner, self.tol = inner, tol
        self.bracket = bracket
        a, b = bracket or inner.domain
        if math.isfinite(a) and math.isfinite(b):
            lo, hi = inner._eval(np.array([a, b]))
            self.domain = (float(lo), float(hi))
        else:
            self.domain = inner.domain

    def _eval(self, y):
        a, b = self.bracket or self.inner.domain
        if not (math.isfinite(a) and math.isfinite(b)):
            # unbounded domains: bracket around y, assuming bounded displacement
            span = 1.0
            while True:
                lo, hi = y - span, y + span
                if np.all(self.inner._eval(lo) <= y) and np.all(self.inner._eval(hi) >= y):
                    break
                span *= 2
                if span > 1e12:
                    raise MonotonicityError("cannot bracket inverse")
            return _bisect_arrays(self.inner._eval, y, lo, hi, self.tol)
        fa, fb = self.inner._eval(np.array([a, b]))
        inside = (y > fa) & (y < fb)
        out = y.copy()  # off the range the inverse continues as the identity
        out[y <= fa] = a if fa == a else y[y <= fa]
        out[y >= fb] = b if fb == b else y[y >= fb]
        if np.any(inside):
            out[inside] = monotone_inverse(self.inner._eval, y[inside], a, b, self.tol)
        return out

    def deriv(self, y, k=1):
        if k != 1:
            raise NotImplementedError
        x = self._eval(np.atleast_1d(_arr(y)))
        return 1.0 / self.inner.deriv(x, 1)

    def inverse(self):
        return self.inner

    def to_dict(self):
        return {"node": "Inverse", "inner": self.inner.to_dict()}


def _bisect_arrays(f, y, lo, hi, tol):
    for _ in range(2200):
        m = 0.5 * (lo + hi)
        if np.all(((hi - lo) <= tol) | (m == lo) | (m == hi)):
            return m
        left = f(m) < y
        lo = np.where(left, m, lo)
        hi = np.where(left, hi, m)
    raise MonotonicityError("bisection did not converge")


class Power(Map1D):
    """m^n for an integer n (closed form when the node offers one)."""

    def __init__(self, inner: Map1D, n: int):
        self.inner, self.n = inner, int(n)
        self.domain = inner.domain

    def _eval(self, x):
        return iterate(self.inner, self.n, x)

    def deriv(self, x, k=1):
        if k != 1:
            raise NotImplementedError
        x = np.atleast_1d(_arr(x)).copy()
        base = self.inner if self.n >= 0 else self.inner.inverse()
        d = np.ones_like(x)
        for _ in range(abs(self.n)):
            d = d * base.deriv(x, 1)
            x = base._eval(x)
        return d

    def inverse(self):
        return Power(self.inner, -self.n)

    def to_dict(self):
        return {"node": "Power", "n": self.n, "inner": self.inner.to_dict()}


class Callable1D(Map1D):
    """Wrap plain vectorised callables (value, optional derivative, optional inverse)."""

    def __init__(self, f, domain=(0.0, 1.0), df=None, finv=None, name="callable"):
        self.f, self.df, self.finv, self.name = f, df, finv, name
        self.domain = tuple(domain)

    def _eval(self, x):
        return np.asarray(self.f(x), dtype=float)

    def deriv(self, x, k=1):
        if k == 1 and self.df is not None:
            return np.asarray(self.df(_arr(x)), dtype=float)
        raise NotImplementedError

    def inverse(self):
        if self.finv is not None:
            return Callable1D(self.finv, self.domain, finv=self.f, name=self.name + "^-1")
        return Inverse(self)

    def to_dict(self):
        return {"node": "Callable1D", "name": self.name, "opaque": True}


def map_from_dict(d: Mapping) -> Map1D:
    """Rebuild the non-opaque nodes from their descriptors."""
    node = d["node"]
    if d.get("opaque"):
        raise ValueError(f"{node} descriptors are opaque and cannot be rebuilt")
    if node == "Identity":
        return Identity(tuple(d["domain"]))
    if node == "Affine":
        return Affine(d["slope"], d["offset"])
    if node == "Moebius":
        return Moebius(d["s"], d["t"], tuple(d["domain"]))
    if node == "YoccozTransfer":
        return YoccozTransfer(d["a"], d["b"])
    if node == "SigmaBump":
        return SigmaBump(d["lo"], d["hi"], d["T"], d["power"])
    if node == "TanBump":
        return TanBump(d["lo"], d["hi"], d["T"], d["power"])
    if node == "Transported":
        return Transported(map_from_dict(d["inner"]), d["lo"], d["hi"])
    if node == "PiecewiseGlue":
        return PiecewiseGlue([(tuple(p["interval"]), map_from_dict(p["map"])) for p in d["pieces"]])
    if node == "Compose":
        return Compose([map_from_dict(m) for m in d["maps"]])
    if node == "Inverse":
        return Inverse(map_from_dict(d["inner"]))
    if node == "Power":
        return Power(map_from_dict(d["inner"]), d["n"])
    raise ValueError(f"unknown node {node!r}")


# circle lifts --------------------------------------------------------------
class CircleMap:
    """Degree-one lift F(m + u) = m + R(u), R the restriction to [0, 1].

    ``restriction`` must be increasing with R(1) = R(0) + 1.
    """

    def __init__(self, restriction: Map1D, basepoint_offset: float = 0.0):
        self.restriction = restriction
        self.basepoint_offset = float(basepoint_offset)

    @classmethod
    def rotation(cls, theta: float) -> "CircleMap":
        return cls(Affine(1.0, float(theta), (0.0, 1.0)))

    def step(self, m: np.ndarray, u: np.ndarray):
        """One application in split (integer, fraction) coordinates."""
        y = self.restriction._eval(u)
        fl = np.floor(y)
        return m + fl.astype(np.int64), y - fl

    def orbit_split(self, x0, n: int):
        """(m, u) after n steps from x0 (vectorised over x0), n >= 0."""
        x0 = np.atleast_1d(_arr(x0))
        m = np.floor(x0).astype(np.int64)
        u = x0 - m
        for _ in range(n):
            m, u = self.step(m, u)
        return m, u

    def __call__(self, x):
        xa = np.atleast_1d(_arr(x))
        m = np.floor(xa)
        r = m + self.restriction._eval(xa - m)
        return _out(x, r.reshape(np.shape(x)))

    def deriv(self, x, k=1):
        xa = _arr(x)
        return self.restriction.deriv(xa - np.floor(xa), k)

    def inverse(self) -> "CircleMap":
        """Lift of the inverse; F(x) - x lies within 1 of R(0), which brackets the solve."""
        r0 = float(self.restriction(0.0))
        lift = self

        class _InverseRestriction(Map1D):
            domain = (0.0, 1.0)

            def _eval(self_inner, y):
                lo = y - r0 - 1.0
                hi = y - r0 + 1.0
                return _bisect_arrays(lambda v: np.atleast_1d(lift(v)), y, lo, hi, 0.0)

            def deriv(self_inner, y, k=1):
                if k != 1:
                    raise NotImplementedError
                x = self_inner._eval(np.atleast_1d(_arr(y)))
                return 1.0 / lift.deriv(x, 1)

        return CircleMap(_InverseRestriction())

    def periodicity_defect(self, grid=None) -> float:
        g = np.linspace(-2.0, 2.0, 101) if grid is None else _arr(grid)
        return float(np.max(np.abs(self(g + 1.0) - self(g) - 1.0)))


# calculus ------------------------------------------------------------------
def eval_map(m, x, tol: float = EVAL_TOL):
    """Evaluate a Map1D or CircleMap (tol is honoured by lazy inverse nodes)."""
    if isinstance(m, Inverse):
        m.tol = tol
    return m(x)


def iterate(m, n: int, x, tol: float = EVAL_TOL):
    """m^n(x); negative n uses the inverse, closed forms are used when offered."""
    xa = np.atleast_1d(_arr(x)).astype(float)
    if n == 0:
        return _out(x, xa.reshape(np.shape(x)))
    if isinstance(m, Map1D):
        r = m.iterate_closed(n, xa)
        if r is not None:
            return _out(x, r.reshape(np.shape(x)))
    base = m if n > 0 else m.inverse()
    if isinstance(base, Inverse):
        base.tol = tol / abs(n)
    step = base._eval if isinstance(base, Map1D) else (lambda v: np.atleast_1d(base(v)))
    for _ in range(abs(n)):
        xa = step(xa)
    return _out(x, xa.reshape(np.shape(x)))


@dataclass
class DerivativeEstimate:
    value: float
    error: float
    method: str


_STENCILS = {
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
    4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0]),
    5: ([-3, -2, -1, 1, 2, 3], [-0.5, 2.0, -2.5, 2.5, -2.0, 0.5]),
}


def derivative_k(m, x: float, k: int = 1, tol: float = DERIV_TOL) -> DerivativeEstimate:
    """k-th derivative at x: closed form if the node has one, else Richardson FD."""
    if k < 1:
        raise ValueError("k must be positive")
    try:
        v = m.deriv(np.array([float(x)]), k)
        return DerivativeEstimate(float(np.atleast_1d(v)[0]), 0.0, "closed form")
    except (NotImplementedError, AttributeError):
        pass
    if k > 5:
        raise ValueError("finite differences are provided for k <= 5")
    offs, coef = _STENCILS[k]
    scale = max(1.0, abs(x))
    h = tol ** (1.0 / (k + 2)) * scale
    a, b = getattr(m, "domain", (-math.inf, math.inf))
    reach = max(abs(o) for o in offs)
    room = min(x - a, b - x)
    if room <= 0:
        raise ValueError("x must lie inside the domain for finite differences")
    h = min(h, room / (2 * reach))

    def D(hh):
        pts = np.array([x + o * hh for o in offs])
        return float(np.dot(coef, np.atleast_1d(m(pts)))) / hh ** k

    d1, d2 = D(h), D(h / 2)
    rich = (4 * d2 - d1) / 3.0
    return DerivativeEstimate(rich, abs(d2 - d1) / 3.0 + 1e-12 * abs(rich), "richardson")


def support_components(m: Map1D, resolution: int = 4097, tol: float = 1e-12,
                       domain=None) -> list:
    """Maximal open intervals where |m(x) - x| > tol, refined by bisection."""
    a, b = domain or m.domain
    g = np.linspace(a, b, resolution)
    dev = np.abs(m(g) - g)
    on = dev > tol
    comps = []
    i = 0
    n = g.size
    disp = lambda x: abs(float(m(x)) - x) - tol
    while i < n:
        if not on[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and on[j + 1]:
            j += 1
        lo = g[i] if i == 0 else _crossing(disp, g[i - 1], g[i])
        hi = g[j] if j == n - 1 else _crossing(disp, g[j + 1], g[j])
        comps.append((lo, hi))
        i = j + 1
    return comps


def _crossing(disp, outside, inside, iters: int = 60):
    """Bisection for disp = 0 between a point with disp <= 0 and one with disp > 0."""
    for _ in range(iters):
        mid = 0.5 * (outside + inside)
        if disp(mid) > 0:
            inside = mid
        else:
            outside = mid
    return 0.5 * (outside + inside)


def variation_estimate(m, k: int, grid) -> float:
    """Sum |h(x_{i+1}) - h(x_i)| for h = (m - Id)^{(k)}; a lower bound for the variation."""
    g = _arr(grid)
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be increasing")
    if k == 0:
        vals = np.atleast_1d(m(g)) - g
    else:
        try:
            vals = np.atleast_1d(m.deriv(g, k))
        except (NotImplementedError, AttributeError):
            vals = np.array([derivative_k(m, x, k).value for x in g])
        if k == 1:
            vals = vals - 1.0
    return float(np.sum(np.abs(np.diff(vals))))


# words and actions ---------------------------------------------------------
_SYL = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*(?:\^\s*\(?\s*([+-]?\d+)\s*\)?)?\s*")


@dataclass(frozen=True)
class GroupWord:
    """A word as a tuple of syllables (generator, nonzero exponent).

    Written left to right; as a map the rightmost syllable acts first.
    """

    syllables: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "GroupWord":
        """Parse 'a b^-1 c^2' (spaces or '*' separate syllables)."""
        text = text.replace("*", " ").strip()
        syl = []
        pos = 0
        while pos < len(text):
            mt = _SYL.match(text, pos)
            if not mt or mt.end() == pos:
                raise ValueError(f"cannot parse word near {text[pos:]!r}")
            syl.append((mt.group(1), int(mt.group(2)) if mt.group(2) else 1))
            pos = mt.end()
        return cls.from_syllables(syl)

    @classmethod
    def from_syllables(cls, syl: Iterable) -> "GroupWord":
        out: list = []
        for name, e in syl:
            if e == 0:
                continue
            if out and out[-1][0] == name:
                e2 = out[-1][1] + e
                out.pop()
                if e2:
                    out.append((name, e2))
            else:
                out.append((name, e))
        return cls(tuple(out))

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord.from_syllables(self.syllables + other.syllables)

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple((n, -e) for n, e in reversed(self.syllables)))

    def __len__(self) -> int:
        return len(self.syllables)

    def __str__(self) -> str:
        return " ".join(n if e == 1 else f"{n}^{e}" for n, e in self.syllables) or "1"

    @staticmethod
    def commutator(x: "GroupWord", y: "GroupWord") -> "GroupWord":
        """[x, y] = x y x^{-1} y^{-1}."""
        return x * y * x.inverse() * y.inverse()

    @staticmethod
    def conj(x: "GroupWord", y: "GroupWord") -> "GroupWord":
        """x^y = y^{-1} x y."""
        return y.inverse() * x * y


class GroupAction:
    """Generators bound to maps; words evaluate with the rightmost syllable first."""

    def __init__(self, gens: Mapping[str, Map1D]):
        self.gens = dict(gens)

    def word_map(self, w: GroupWord) -> Map1D:
        return compose_word(self.gens, w)

    def apply(self, w: GroupWord, x):
        xa = np.atleast_1d(_arr(x)).astype(float)
        for name, e in reversed(w.syllables):
            xa = np.atleast_1d(iterate(self.gens[name], e, xa))
        return _out(x, xa.reshape(np.shape(x)))


def compose_word(gens: Mapping[str, Map1D], w) -> Map1D:
    """Compose node for the word (string or GroupWord)."""
    if isinstance(w, str):
        w = GroupWord.parse(w)
    if not w.syllables:
        doms = [g.domain for g in gens.values()]
        return Identity(doms[0] if doms else (0.0, 1.0))
    maps = []
    for name, e in w.syllables:
        if name not in gens:
            raise KeyError(f"unbound generator {name!r}")
        g = gens[name]
        maps.append(g if e == 1 else Power(g, e))
    return maps[0] if len(maps) == 1 else Compose(maps)


def is_increasing_on(m, grid, tol: float = EVAL_TOL) -> bool:
    v = np.atleast_1d(m(_arr(grid)))
    return bool(np.all(np.diff(v) > -tol))


def grid_dump(m: Map1D, grid, path: str) -> None:
    """CSV with columns x, f(x), f'(x)."""
    import csv

    g = _arr(grid)
    fx = np.atleast_1d(m(g))
    try:
        d = np.atleast_1d(m.deriv(g, 1))
    except NotImplementedError:
        d = np.array([derivative_k(m, x, 1).value for x in g])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f", "df"])
        for row in zip(g, fx, d):
            w.writerow([repr(float(v)) for v in row])
