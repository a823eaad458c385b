"""The smooth step Phi: -1 on (-inf, 0], +1 on [1, inf), C-infinity in between.

Phi'(x) = (2/Z) exp(-1/(x(1-x))) on (0, 1) with Z the integral of the
exponential over [0, 1].  Values come from a cached table of exact
cumulative integrals, evaluated by cubic Hermite interpolation using the
closed-form derivative, so evaluation error is far below 1e-14.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from . import kernels

TABLE_SIZE = 10_000

# Gauss-Legendre rule used for the per-cell integrals of the table.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _bump_exp(x):
    """exp(-1/(x(1-x))) on (0,1), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = np.exp(-1.0 / (xm * (1.0 - xm)))
    return out


@lru_cache(maxsize=None)
def _numerators(order: int) -> tuple:
    """Polynomials N_m with d^m/dx^m exp(-1/u) = N_m(x) u^{-2m} exp(-1/u), u = x(1-x)."""
    u = np.array([0.0, 1.0, -1.0])
    du = np.array([1.0, -2.0])
    polys = [np.array([1.0])]
    for m in range(order):
        n = polys[-1]
        nxt = P.polysub(P.polyadd(P.polymul(P.polyder(n) if len(n) > 1 else [0.0], P.polymul(u, u)),
                                  P.polymul(n, du)),
                        P.polymul(2 * m * n, P.polymul(du, u)))
        polys.append(np.trim_zeros(nxt, "b") if np.any(nxt) else np.array([0.0]))
    return tuple(polys)


class Mollifier:
    """Tabulated Phi with closed-form derivatives of every order."""

    def __init__(self, n: int = TABLE_SIZE):
        self.n = n
        h = 1.0 / n
        left = np.arange(n) * h
        nodes = 0.5 * h * (_GL_X[None, :] + 1.0) + left[:, None]
        cell = 0.5 * h * (_bump_exp(nodes) @ _GL_W)
        # Kahan-free but fine: cumulative sum of ~1e4 positive terms
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        self.Z = float(cum[-1])
        vals = 2.0 * cum / self.Z - 1.0
        vals = 0.5 * (vals - vals[::-1])  # enforce Phi(1-x) = -Phi(x) on nodes
        vals[0], vals[-1] = -1.0, 1.0
        self.vals = np.ascontiguousarray(vals)
        self.ders = np.ascontiguousarray(2.0 * _bump_exp(np.arange(n + 1) * h) / self.Z)
        self._norms: dict[int, float] = {}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return float(kernels.phi_eval(x.reshape(1), self.vals, self.ders, self.n)[0])
        return kernels.phi_eval(np.ascontiguousarray(x), self.vals, self.ders, self.n)

    def derivative(self, x, order: int = 1):
        """Phi^{(order)}(x); order 0 is Phi itself."""
        if order == 0:
            return self(x)
        x = np.asarray(x, dtype=float)
        m = order - 1
        num = _numerators(m)[m]
        out = np.zeros_like(x)
        inside = (x > 0.0) & (x < 1.0)
        xi = x[inside]
        u = xi * (1.0 - xi)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            logmag = -1.0 / u - 2 * m * np.log(u)
            vals = P.polyval(xi, num) * np.exp(logmag)
        out[inside] = np.where(np.isfinite(vals), vals, 0.0) * (2.0 / self.Z)
        return out if out.ndim else float(out)

    def sup_derivative(self, order: int) -> float:
        """sup |Phi^{(order)}| on [0, 1] (grid search refined by golden section)."""
        if order in self._norms:
            return self._norms[order]
        if order == 0:
            return 1.0
        from scipy.optimize import minimize_scalar

        grid = np.linspace(0.0, 1.0, 200_001)
        vals = np.abs(self.derivative(grid, order))
        best = 0.0
        # refine around the few largest local maxima
        peaks = np.argsort(vals)[-8:]
        for i in peaks:
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
            res = minimize_scalar(lambda t: -abs(float(self.derivative(np.array(t), order))),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13})
            best = max(best, -res.fun, vals[i])
        self._norms[order] = float(best)
        return self._norms[order]

    def ck_norm(self, k: int) -> float:
        """max over 0 <= j <= k of sup |Phi^{(j)}|."""
        return max(self.sup_derivative(j) for j in range(k + 1))


@lru_cache(maxsize=1)
def get_phi() -> Mollifier:
    """Shared, write-once mollifier table."""
    return Mollifier()
