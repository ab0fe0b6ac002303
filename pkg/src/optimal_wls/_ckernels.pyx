# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels.

Same contract as ``_pykernels``, with one C loop per draw.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, erfc, sin, acos, cos, fabs, M_PI, isfinite
from libc.stdint cimport uint64_t

from ._rng import SamplingAnomaly
from .basis import _recurrence

cnp.import_array()

BACKEND = "compiled"

_NAMES = ("legendre_uniform", "chebyshev_arcsine", "hermite_gaussian")

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double EPS = 2.220446049250313e-16
cdef double HSCALE = (2.0 * M_PI) ** -0.25


cdef inline uint64_t mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t h0, uint64_t k, uint64_t q, uint64_t retry) nogil:
    cdef uint64_t h = mix(h0 ^ k)
    cdef uint64_t word = ((q & 0xFFFFFFFFULL) << 32) | (retry & 0xFFFFFFFFULL)
    h = mix(h + word * GOLDEN)
    return (<double>(h >> 11) + 0.5) * 1.1102230246251565e-16


cdef inline double sumsq(int kind, const double* c, int L, double t, const double* a) nogil:
    cdef double prev, cur, nxt, acc
    cdef int k
    prev = HSCALE * exp(-0.25 * t * t) if kind == 2 else 1.0
    acc = c[0] * prev * prev
    if L == 0:
        return acc
    cur = t * prev / a[1]
    acc += c[1] * cur * cur
    for k in range(1, L):
        nxt = (t * cur - a[k] * prev) / a[k + 1]
        prev = cur
        cur = nxt
        acc += c[k + 1] * cur * cur
    return acc


cdef inline double pdf(int kind, const double* c, int L, double t, const double* a) nogil:
    cdef double s = sumsq(kind, c, L, t, a)
    if kind == 0:
        return 0.5 * s
    if kind == 1:
        return s / (M_PI * sqrt(1.0 - t * t))
    return s


cdef double cdf(int kind, const double* c, int L, double t, double at, double aF,
                const double* gx, const double* gw, int p, const double* a,
                const double* tail) nogil:
    cdef double h, out, theta, prev, cur, nxt, s
    cdef int g, k
    if kind == 0:
        h = t - at
        s = 0.0
        for g in range(p):
            s += gw[g] * sumsq(0, c, L, at + h * 0.5 * (gx[g] + 1.0), a)
        return aF + 0.25 * h * s
    if kind == 1:
        if t > 1.0:
            t = 1.0
        if t < -1.0:
            t = -1.0
        theta = acos(t)
        out = 1.0 - theta / M_PI
        for k in range(1, L + 1):
            out -= c[k] * sin(2.0 * k * theta) / (2.0 * k * M_PI)
        return out
    out = 0.5 * erfc(-t / sqrt(2.0))
    if L == 0:
        return out
    prev = HSCALE * exp(-0.25 * t * t)
    cur = t * prev / a[1]
    out -= tail[1] * cur * prev
    for k in range(1, L):
        nxt = (t * cur - a[k] * prev) / a[k + 1]
        prev = cur
        cur = nxt
        out -= tail[k + 1] * cur * prev / sqrt(k + 1.0)
    return out


cdef inline double rowdot(const double* c, const double* row, int m) nogil:
    cdef double s = 0.0
    cdef int k
    for k in range(m):
        s += c[k] * row[k]
    return s


def sum_squares(int kind, coeffs, t):
    """``sum_k c_k phi_k(t)^2`` per draw (times ``rho`` for the Gaussian family)."""
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    cdef const double[:, ::1] tv = np.ascontiguousarray(t_arr.reshape(t_arr.shape[0], -1))
    cdef int L = c.shape[1] - 1
    cdef const double[::1] a = np.ascontiguousarray(_recurrence(_NAMES[kind], max(L, 1)))
    out = np.empty((tv.shape[0], tv.shape[1]))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, n = tv.shape[0]
    cdef Py_ssize_t ci
    with nogil:
        for i in range(n):
            ci = i if c.shape[0] > 1 else 0
            for j in range(tv.shape[1]):
                o[i, j] = sumsq(kind, &c[ci, 0], L, tv[i, j], &a[0])
    return out.reshape(t_arr.shape)


def its_invert(int kind, coeffs, u, grid, table, gl_x, gl_w, double tol=1e-10,
               int max_iter=60):
    """Solve ``Phi(z) = u`` per draw; see ``_pykernels.its_invert``."""
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=float)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=float).ravel()
    cdef const double[::1] gr = np.ascontiguousarray(grid, dtype=float)
    cdef const double[:, ::1] tb = np.ascontiguousarray(table, dtype=float)
    cdef const double[::1] gx = np.ascontiguousarray(gl_x, dtype=float)
    cdef const double[::1] gw = np.ascontiguousarray(gl_w, dtype=float)
    cdef int m = c.shape[1]
    cdef int L = m - 1
    cdef const double[::1] a = np.ascontiguousarray(_recurrence(_NAMES[kind], max(L, 1)))
    cdef Py_ssize_t n = uv.shape[0]
    cdef int G = gr.shape[0]
    cdef int p = gx.shape[0]
    cdef bint shared = c.shape[0] == 1
    z_arr = np.empty(n)
    r_arr = np.zeros(n)
    cdef double[::1] z = z_arr
    cdef double[::1] res = r_arr
    cdef double[::1] nodeF = np.empty(G)
    cdef double[::1] tail = np.empty(m)
    cdef Py_ssize_t i
    cdef int lo, hi, mid, j, it, k
    cdef double ui, Fa, Fb, lo_t, hi_t, at, aF, t, f, tn, dens
    cdef const double* ci
    if shared:
        for j in range(G):
            nodeF[j] = rowdot(&c[0, 0], &tb[j, 0], m)
    with nogil:
        for i in range(n):
            ci = &c[0, 0] if shared else &c[i, 0]
            ui = uv[i]
            if kind == 2:
                tail[L] = ci[L]
                for k in range(L - 1, -1, -1):
                    tail[k] = tail[k + 1] + ci[k]
            # cell search: largest j with F(grid[j]) <= u
            if shared:
                Fa = nodeF[0]
                Fb = nodeF[G - 1]
            else:
                Fa = rowdot(ci, &tb[0, 0], m)
                Fb = rowdot(ci, &tb[G - 1, 0], m)
            if ui < Fa:
                z[i] = gr[0]
                continue
            if ui >= Fb:
                z[i] = gr[G - 1]
                continue
            lo = 0
            hi = G - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                f = nodeF[mid] if shared else rowdot(ci, &tb[mid, 0], m)
                if f <= ui:
                    lo = mid
                else:
                    hi = mid
            lo_t = gr[lo]
            hi_t = gr[hi]
            Fa = nodeF[lo] if shared else rowdot(ci, &tb[lo, 0], m)
            Fb = nodeF[hi] if shared else rowdot(ci, &tb[hi, 0], m)
            at = lo_t
            aF = Fa
            if Fb > Fa:
                f = (ui - Fa) / (Fb - Fa)
                f = 0.0 if f < 0.0 else (1.0 if f > 1.0 else f)
            else:
                f = 0.5
            t = lo_t + f * (hi_t - lo_t)
            # bracketed Newton, bisection when a step leaves the bracket
            for it in range(max_iter):
                f = cdf(kind, ci, L, t, at, aF, &gx[0], &gw[0], p, &a[0], &tail[0]) - ui
                res[i] = f
                if f < 0:
                    lo_t = t
                else:
                    hi_t = t
                if fabs(f) <= tol or hi_t - lo_t <= 4.0 * EPS * (1.0 + fabs(t)):
                    break
                dens = pdf(kind, ci, L, t, &a[0])
                tn = t - f / dens
                if not isfinite(tn) or tn <= lo_t or tn >= hi_t:
                    tn = 0.5 * (lo_t + hi_t)
                t = tn
            z[i] = t
    return z_arr, r_arr


def rs_draw(int kind, coeffs, double envelope, seed, ks, int q, long max_rounds=1_000_000):
    """Rejection sampling with proposal ``rho_q``; see ``_pykernels.rs_draw``."""
    if kind == 2:
        raise ValueError("rejection sampling needs a bounded family")
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=float)
    cdef const cnp.uint64_t[::1] kv = np.ascontiguousarray(ks, dtype=np.uint64)
    cdef int L = c.shape[1] - 1
    cdef const double[::1] a = np.ascontiguousarray(_recurrence(_NAMES[kind], max(L, 1)))
    cdef Py_ssize_t n = kv.shape[0]
    cdef uint64_t h0 = mix((<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)) + GOLDEN)
    cdef bint shared = c.shape[0] == 1
    z_arr = np.empty(n)
    rounds_arr = np.zeros(n, dtype=np.int64)
    cdef double[::1] z = z_arr
    cdef cnp.int64_t[::1] rounds = rounds_arr
    cdef Py_ssize_t i
    cdef long r
    cdef double u1, u2, prop
    cdef const double* ci
    cdef bint failed = False
    with nogil:
        for i in range(n):
            ci = &c[0, 0] if shared else &c[i, 0]
            r = 0
            while True:
                if r >= max_rounds:
                    failed = True
                    break
                u1 = uniform(h0, kv[i], q, 2 * r)
                u2 = uniform(h0, kv[i], q, 2 * r + 1)
                prop = 2.0 * u1 - 1.0 if kind == 0 else -cos(M_PI * u1)
                r += 1
                if u2 * envelope < sumsq(kind, ci, L, prop, &a[0]):
                    z[i] = prop
                    break
            rounds[i] = r
            if failed:
                break
    if failed:
        raise SamplingAnomaly(f"draw not accepted after {max_rounds} rounds")
    return z_arr, rounds_arr
