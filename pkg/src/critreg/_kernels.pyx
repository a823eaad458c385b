# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops (same signatures as ``_pykernels``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline double _phi(double x, const double[::1] vals, const double[::1] ders, int n) nogil:
    cdef double xm, t, t2, t3, h
    cdef int i
    if x <= 0.0:
        return -1.0
    if x >= 1.0:
        return 1.0
    xm = x * n
    i = <int>xm
    if i > n - 1:
        i = n - 1
    t = xm - i
    t2 = t * t
    t3 = t2 * t
    h = 1.0 / n
    return ((2 * t3 - 3 * t2 + 1) * vals[i] + (t3 - 2 * t2 + t) * h * ders[i]
            + (-2 * t3 + 3 * t2) * vals[i + 1] + (t3 - t2) * h * ders[i + 1])


cdef inline Py_ssize_t _bisect_right(const double[::1] a, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline Py_ssize_t _bisect_left(const double[::1] a, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _unit(double u, const double[::1] pos, const double[::1] length,
                         const double[::1] deficit, const double[::1] cumdef,
                         const double[::1] vals, const double[::1] ders, int n) nogil:
    cdef Py_ssize_t j = _bisect_right(pos, u) - 1
    cdef double s, r
    if j < 0:
        return u
    if u < pos[j] + length[j]:
        s = (u - pos[j]) / length[j]
        r = 0.5 * (_phi(s, vals, ders, n) + 1.0)
        return u - cumdef[j] - deficit[j] * r
    return u - cumdef[j + 1]


def phi_eval(x, const double[::1] vals, const double[::1] ders, int n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(np.ravel(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xa)
    cdef Py_ssize_t k
    for k in range(xa.shape[0]):
        out[k] = _phi(xa[k], vals, ders, n)
    return out.reshape(np.shape(x))


def denjoy_unit_eval(u, const double[::1] pos, const double[::1] length,
                     const double[::1] deficit, const double[::1] cumdef,
                     const double[::1] vals, const double[::1] ders, int n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ua = np.ascontiguousarray(np.ravel(u), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(ua)
    cdef Py_ssize_t k
    for k in range(ua.shape[0]):
        out[k] = _unit(ua[k], pos, length, deficit, cumdef, vals, ders, n)
    return out.reshape(np.shape(u))


def denjoy_orbit(long long turns, double frac, long long steps, double shift,
                 const double[::1] pos, const double[::1] length,
                 const double[::1] deficit, const double[::1] cumdef,
                 const double[::1] vals, const double[::1] ders, int n):
    cdef long long m = turns, k
    cdef double u = frac, y, fl
    for k in range(steps):
        y = shift + _unit(u, pos, length, deficit, cumdef, vals, ders, n)
        fl = floor(y)
        m += <long long>fl
        u = y - fl
    return m, u


def greedy_cover(const double[::1] lo_sorted, const double[::1] prefmax_hi, double a, double b):
    cdef double cur = a, best
    cdef long count = 0
    cdef Py_ssize_t j
    while True:
        j = _bisect_left(lo_sorted, cur)
        if j == 0 or prefmax_hi[j - 1] <= cur:
            return -1
        count += 1
        best = prefmax_hi[j - 1]
        if best > b:
            return count
        cur = best
