"""Pure-Python (numpy) sampling kernels.

Same contract as the compiled ``_ckernels`` module: vectorized over draws
instead of looping per draw. Selected automatically when the extension is
not built, or forced with ``OPTIMAL_WLS_BACKEND=python``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from ._rng import SamplingAnomaly, counter_uniform
from .basis import _recurrence

_NAMES = ("legendre_uniform", "chebyshev_arcsine", "hermite_gaussian")
_EPS = np.finfo(float).eps

BACKEND = "python"


def _coef(c: np.ndarray, k: int, ndim: int) -> np.ndarray:
    ck = c[:, k]
    return ck.reshape(ck.shape + (1,) * (ndim - 1))


def sum_squares(kind: int, coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``sum_k c_k phi_k(t)^2`` per draw (times ``rho`` for the Gaussian family).

    ``t`` has shape ``(n,)`` or ``(n, p)``; ``coeffs`` is ``(n, L+1)``.
    """
    L = coeffs.shape[1] - 1
    a = _recurrence(_NAMES[kind], max(L, 1))
    if kind == 2:
        prev = np.exp(-0.25 * t * t) * (2.0 * np.pi) ** -0.25
    else:
        prev = np.ones_like(t)
    acc = _coef(coeffs, 0, t.ndim) * prev * prev
    if L == 0:
        return acc
    cur = t * prev / a[1]
    acc += _coef(coeffs, 1, t.ndim) * cur * cur
    for k in range(1, L):
        prev, cur = cur, (t * cur - a[k] * prev) / a[k + 1]
        acc += _coef(coeffs, k + 1, t.ndim) * cur * cur
    return acc


def _pdf(kind, c, t):
    s = sum_squares(kind, c, t)
    if kind == 0:
        return 0.5 * s
    if kind == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            return s / (np.pi * np.sqrt(1.0 - t * t))
    return s


def _cdf(kind, c, t, anchor_t, anchor_F, gl_x, gl_w):
    L = c.shape[1] - 1
    if kind == 0:
        h = t - anchor_t
        nodes = anchor_t[:, None] + h[:, None] * (0.5 * (gl_x + 1.0))
        vals = sum_squares(0, c, nodes)
        return anchor_F + 0.25 * h * (vals @ gl_w)
    if kind == 1:
        theta = np.arccos(np.clip(t, -1.0, 1.0))
        out = 1.0 - theta / np.pi
        for k in range(1, L + 1):
            out -= c[:, k] * np.sin(2.0 * k * theta) / (2.0 * k * np.pi)
        return out
    a = _recurrence(_NAMES[2], max(L, 1))
    tail = np.cumsum(c[:, ::-1], axis=1)[:, ::-1]
    prev = np.exp(-0.25 * t * t) * (2.0 * np.pi) ** -0.25
    out = ndtr(t)
    if L == 0:
        return out
    cur = t * prev / a[1]
    out = out - tail[:, 1] * cur * prev
    for k in range(1, L):
        prev, cur = cur, (t * cur - a[k] * prev) / a[k + 1]
        out -= tail[:, k + 1] * cur * prev / np.sqrt(k + 1.0)
    return out


def _rowdot(c, rows):
    return np.einsum("ij,ij->i", c, rows)


def _locate(c, u, table, shared):
    G = table.shape[0]
    if shared:
        nodes_F = table @ c[0]
        return np.searchsorted(nodes_F, u, side="right") - 1
    n = u.size
    F0 = _rowdot(c, np.broadcast_to(table[0], c.shape))
    Fend = _rowdot(c, np.broadcast_to(table[-1], c.shape))
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, G - 1, dtype=np.int64)
    while True:
        open_ = hi - lo > 1
        if not open_.any():
            break
        mid = (lo + hi) // 2
        Fm = _rowdot(c, table[mid])
        go = Fm <= u
        lo = np.where(open_ & go, mid, lo)
        hi = np.where(open_ & ~go, mid, hi)
    j = lo
    j = np.where(u < F0, -1, j)
    j = np.where(u >= Fend, G - 1, j)
    return j


def its_invert(kind, coeffs, u, grid, table, gl_x, gl_w, tol=1e-10, max_iter=60):
    """Solve ``Phi(z) = u`` per draw for mixture CDFs ``Phi = sum_k c_k P_k``.

    ``table[j, k] = P_k(grid[j])``. The cell containing the root is located
    by binary search on the table, then a bracketed Newton iteration (with
    bisection fallback) runs inside the cell until ``|Phi(z) - u| <= tol``.
    Returns ``(z, residual)``.
    """
    u = np.ascontiguousarray(u, dtype=float)
    c = np.ascontiguousarray(coeffs, dtype=float)
    grid = np.ascontiguousarray(grid, dtype=float)
    table = np.ascontiguousarray(table, dtype=float)
    n = u.size
    G = grid.size
    shared = c.shape[0] == 1
    j = _locate(c, u, table, shared)
    if shared:
        c = np.broadcast_to(c, (n, c.shape[1]))
    below = j < 0
    above = j >= G - 1
    j = np.clip(j, 0, G - 2)
    a = grid[j].copy()
    b = grid[j + 1].copy()
    Fa = _rowdot(c, table[j])
    Fb = _rowdot(c, table[j + 1])
    anchor_t, anchor_F = a.copy(), Fa.copy()
    span = Fb - Fa
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(span > 0, (u - Fa) / span, 0.5)
    t = a + np.clip(frac, 0.0, 1.0) * (b - a)
    resid = np.zeros(n)
    active = ~(below | above)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ci = c[idx]
        ti = t[idx]
        f = _cdf(kind, ci, ti, anchor_t[idx], anchor_F[idx], gl_x, gl_w) - u[idx]
        resid[idx] = f
        ai = np.where(f < 0, ti, a[idx])
        bi = np.where(f < 0, b[idx], ti)
        a[idx], b[idx] = ai, bi
        conv = (np.abs(f) <= tol) | (bi - ai <= 4.0 * _EPS * (1.0 + np.abs(ti)))
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = ti - f / _pdf(kind, ci, ti)
        bad = ~np.isfinite(tn) | (tn <= ai) | (tn >= bi)
        tn = np.where(bad, 0.5 * (ai + bi), tn)
        t[idx] = np.where(conv, ti, tn)
        active[idx[conv]] = False
    t = np.where(below, grid[0], np.where(above, grid[-1], t))
    return t, resid


def rs_draw(kind, coeffs, envelope, seed, ks, q, max_rounds=1_000_000):
    """Rejection sampling with proposal ``rho_q`` and constant ``envelope``.

    Round ``r`` of draw ``k`` uses the variates ``(seed, k, q, 2r)`` for the
    proposal and ``(seed, k, q, 2r+1)`` for the acceptance test. Returns the
    accepted points and the number of rounds each draw needed.
    """
    if kind == 2:
        raise ValueError("rejection sampling needs a bounded family")
    c = np.ascontiguousarray(coeffs, dtype=float)
    ks = np.ascontiguousarray(ks, dtype=np.uint64)
    n = ks.size
    if c.shape[0] == 1:
        c = np.broadcast_to(c, (n, c.shape[1]))
    z = np.empty(n)
    rounds = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    r = 0
    while pending.size:
        if r >= max_rounds:
            raise SamplingAnomaly(f"{pending.size} draws not accepted after {max_rounds} rounds")
        u1 = counter_uniform(seed, ks[pending], q, 2 * r)
        u2 = counter_uniform(seed, ks[pending], q, 2 * r + 1)
        prop = 2.0 * u1 - 1.0 if kind == 0 else -np.cos(np.pi * u1)
        val = sum_squares(kind, c[pending], prop)
        acc = u2 * envelope < val
        rounds[pending] += 1
        z[pending[acc]] = prop[acc]
        pending = pending[~acc]
        r += 1
    return z, rounds
