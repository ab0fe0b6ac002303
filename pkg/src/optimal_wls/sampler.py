"""Sampling from the optimal measure ``mu_m`` and from ``rho``.

:func:`sample_optimal` runs sequential conditional sampling: coordinate
``q`` of draw ``k`` is drawn from the mixture ``rho_q * sum_k c_k phi_k^2``
whose weights depend on the coordinates already drawn. Each univariate
draw uses either rejection sampling with proposal ``rho_q`` or inversion of
the mixture CDF ``sum_k c_k P_k`` against per-degree primitive tables that
are built once per family and degree.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import ndtri

from . import basis
from ._backend import get_kernels
from ._rng import (STREAM_ITS, STREAM_RS, STREAM_STANDARD, SamplingAnomaly,
                   counter_uniform, derive_seed)
from .basis import DomainError, UnboundedFamilyError, get_family
from .measure import (ApproximationSpace, ConditionalMixture, _tensor_product,
                      aggregation_matrix, degree_counts, optimal_weight)

__all__ = [
    "WeightedSample", "InverseCdfInterpolant", "InverseCdfError", "SamplingAnomaly",
    "sample_optimal", "sample_standard", "sample_mixture_rejection",
    "rejection_draws", "build_inverse_cdf", "sample_mixture_its", "primitive_table",
]

DEFAULT_GRID = 1025
DEFAULT_TOL = 1e-10
MAX_ITER = 60
CELL_NODES = 8       # Gauss-Legendre nodes for partial-cell integrals
TABLE_NODES = 32     # per-cell nodes used when tabulating Legendre primitives
TAIL_TOL = 1e-13


class InverseCdfError(ValueError):
    """A tabulated CDF came out non-monotone."""


@dataclass
class WeightedSample:
    """Points ``x^i`` with weights ``w^i`` and provenance."""

    points: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights differ in length")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be strictly positive")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path=None) -> str:
        """CSV with ``# key=value`` provenance lines, then ``x_1..x_d,w``."""
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x_{i + 1}" for i in range(self.d)] + ["w"])
        for row, w in zip(self.points, self.weights):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text_or_path) -> "WeightedSample":
        text = str(text_or_path)
        if "\n" not in text:
            text = Path(text).read_text()
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line.strip():
                rows.append(line)
        data = np.loadtxt(rows[1:], delimiter=",", ndmin=2)
        return cls(data[:, :-1], data[:, -1], meta)


@dataclass(frozen=True)
class PrimitiveTable:
    """``values[j, k] = P_k(grid[j])`` for one family and degrees ``0..degree``."""

    kind: str
    degree: int
    grid: np.ndarray
    values: np.ndarray


def hermite_radius(degree: int) -> float:
    return max(10.0, np.sqrt(4.0 * degree + 4.0) + 8.0)


@lru_cache(maxsize=128)
def _table(kind: str, degree: int, grid_size: int) -> PrimitiveTable:
    G = int(grid_size)
    if G < 2:
        raise ValueError("grid_size must be at least 2")
    if kind == basis.HERMITE:
        R = hermite_radius(degree)
        grid = np.linspace(-R, R, G)
        values = basis.primitives(kind, degree, grid)
        tail = max(np.max(np.abs(values[0])), np.max(np.abs(1.0 - values[-1])))
        if tail > TAIL_TOL:
            raise InverseCdfError(f"Gaussian truncation at R={R} leaves tail mass {tail:.3g}")
    else:
        # Chebyshev-spaced nodes resolve the endpoint clustering of phi_k^2.
        grid = -np.cos(np.pi * np.arange(G) / (G - 1))
        grid[0], grid[-1] = -1.0, 1.0
        if kind == basis.CHEBYSHEV:
            values = basis.primitives(kind, degree, grid)
        else:
            values = _legendre_table(grid, degree)
    grid.setflags(write=False)
    values.setflags(write=False)
    return PrimitiveTable(kind, degree, grid, values)


def _legendre_table(grid: np.ndarray, degree: int) -> np.ndarray:
    p = min(degree + 1, TABLE_NODES)
    xg, wg = npleg.leggauss(p)
    lo, hi = grid[:-1], grid[1:]
    cells = np.empty((grid.size - 1, degree + 1))
    block = 128
    for s in range(0, lo.size, block):
        a, b = lo[s:s + block], hi[s:s + block]
        nodes = a[:, None] + (b - a)[:, None] * (0.5 * (xg + 1.0))
        v = basis.evaluate(basis.LEGENDRE, nodes, degree, check=False)
        cells[s:s + block] = 0.25 * (b - a)[:, None] * np.einsum("cgk,g->ck", v * v, wg)
    values = np.zeros((grid.size, degree + 1))
    values[1:] = np.cumsum(cells, axis=0)
    return values


def primitive_table(family, degree: int, grid_size: int = DEFAULT_GRID) -> PrimitiveTable:
    """Cached table of ``P_k`` on the sampling grid of ``family``."""
    return _table(get_family(family).kind, int(degree), int(grid_size))


@lru_cache(maxsize=8)
def _cell_rule(p: int):
    return npleg.leggauss(p)


def _rho_inverse(family, u: np.ndarray) -> np.ndarray:
    """Inverse CDF of ``rho``."""
    if family.kind == basis.LEGENDRE:
        return 2.0 * u - 1.0
    if family.kind == basis.CHEBYSHEV:
        return -np.cos(np.pi * u)
    return ndtri(u)


def _resolve_method(space_or_family, method: str) -> str:
    fams = getattr(space_or_family, "families", (space_or_family,))
    method = method.upper()
    if method == "AUTO":
        return "RS" if all(f.bounded for f in fams) else "ITS"
    if method not in ("RS", "ITS"):
        raise ValueError(f"unknown method {method!r}; expected RS, ITS or auto")
    if method == "RS":
        for f in fams:
            if not f.bounded:
                raise UnboundedFamilyError(f"rejection sampling unavailable for {f.kind}")
    return method


def sample_optimal(space: ApproximationSpace, n: int, seed: int, method: str = "auto",
                   grid_size: int = DEFAULT_GRID, tol: float = DEFAULT_TOL,
                   refine: bool = True, backend: str | None = None) -> WeightedSample:
    """``n`` i.i.d. draws from ``mu_m`` with weights ``m / k_m``.

    Parameters
    ----------
    method : {"auto", "RS", "ITS"}
        ``auto`` uses rejection sampling when every family is bounded.
    refine : bool
        ITS only. When False the root is not refined and the draw is the
        piecewise-linear interpolant of the inverse CDF on the grid.
    backend : {"compiled", "python"}, optional
        Kernel implementation; results agree to rounding.
    """
    if n < 1:
        raise ValueError("n must be positive")
    method = _resolve_method(space, method)
    kern = get_kernels(backend)
    d, m = space.d, space.m
    arr = space.index_set.array
    ks = np.arange(n, dtype=np.uint64)
    its_seed = derive_seed(seed, STREAM_ITS)
    rs_seed = derive_seed(seed, STREAM_RS)
    gl_x, gl_w = _cell_rule(CELL_NODES)
    x = np.empty((n, d))
    running = None
    last_active = max((q for q in range(d) if space.degrees[q] > 0), default=-1)
    for q in range(d):
        fam = space.families[q]
        L = space.degrees[q]
        if L == 0:
            # phi_q = rho_q whatever the prefix
            x[:, q] = _rho_inverse(fam, counter_uniform(its_seed, ks, q, 0))
            continue
        if running is None:
            c = (degree_counts(space, q + 1) / m)[None, :]
        else:
            c = running @ aggregation_matrix(space, q + 1)
            c /= c.sum(axis=1, keepdims=True)
        if method == "ITS":
            tab = primitive_table(fam, L, grid_size)
            u = counter_uniform(its_seed, ks, q, 0)
            z, _ = kern.its_invert(fam.code, c, u, tab.grid, tab.values, gl_x, gl_w,
                                   tol, MAX_ITER if refine else 0)
        else:
            z, _ = kern.rs_draw(fam.code, c, basis.envelope_constant(fam, L), rs_seed, ks, q)
        x[:, q] = z
        if q < last_active:
            s = basis.evaluate_scaled(fam, z, L)
            running = _tensor_product(arr[:, q:q + 1], [s * s], n, running)
            running /= running.sum(axis=1, keepdims=True)
    meta = {"measure": "optimal", "seed": int(seed), "method": method,
            "space": space.fingerprint, "n": int(n)}
    return WeightedSample(x, optimal_weight(space, x), meta)


def sample_standard(space: ApproximationSpace, n: int, seed: int) -> WeightedSample:
    """``n`` i.i.d. draws from ``rho`` with unit weights."""
    if n < 1:
        raise ValueError("n must be positive")
    ks = np.arange(n, dtype=np.uint64)
    s = derive_seed(seed, STREAM_STANDARD)
    x = np.empty((n, space.d))
    for q, fam in enumerate(space.families):
        x[:, q] = _rho_inverse(fam, counter_uniform(s, ks, q, 0))
    meta = {"measure": "standard", "seed": int(seed), "method": "ITS",
            "space": space.fingerprint, "n": int(n)}
    return WeightedSample(x, np.ones(n), meta)


def rejection_draws(mixture: ConditionalMixture, n: int, seed: int,
                    backend: str | None = None, start: int = 0):
    """``n`` rejection-sampling draws of one mixture and their round counts."""
    fam = mixture.family
    _resolve_method(fam, "RS")
    ks = np.arange(start, start + n, dtype=np.uint64)
    return get_kernels(backend).rs_draw(fam.code, mixture.coefficients[None, :],
                                        mixture.envelope(), derive_seed(seed, STREAM_RS),
                                        ks, mixture.q - 1)


def sample_mixture_rejection(mixture: ConditionalMixture, seed: int, k: int = 0,
                             backend: str | None = None) -> float:
    """One exact draw from the mixture by rejection from ``rho_q``."""
    z, _ = rejection_draws(mixture, 1, seed, backend, start=k)
    return float(z[0])


@dataclass(frozen=True)
class InverseCdfInterpolant:
    """Piecewise-linear interpolant of ``Phi_q^{-1}`` from ``(Phi_q(t_j), t_j)``."""

    q: int
    nodes: np.ndarray
    values: np.ndarray

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        keep = np.concatenate(([True], np.diff(self.values) > 0))
        out = np.interp(u, self.values[keep], self.nodes[keep])
        return out[()] if out.ndim == 0 else out


def build_inverse_cdf(mixture: ConditionalMixture,
                      grid_size: int = DEFAULT_GRID) -> InverseCdfInterpolant:
    """Tabulate the mixture CDF on the family grid and wrap its inverse."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    tab = primitive_table(mixture.family, mixture.degree, grid_size)
    values = tab.values @ mixture.coefficients
    steps = np.diff(values)
    if np.any(steps < -1e-13):
        j = int(np.argmin(steps))
        raise InverseCdfError(
            f"CDF table decreases by {steps[j]:.3g} between t={tab.grid[j]:.6g} "
            f"and t={tab.grid[j + 1]:.6g}")
    values = np.maximum.accumulate(values)
    return InverseCdfInterpolant(mixture.q, tab.grid.copy(), values)


def sample_mixture_its(mixture: ConditionalMixture, u, solver: str = "interpolant",
                       interpolant: InverseCdfInterpolant | None = None,
                       tol: float = DEFAULT_TOL, grid_size: int = DEFAULT_GRID,
                       backend: str | None = None):
    """Inverse transform ``z = Phi_q^{-1}(u)`` for one mixture.

    ``solver`` is ``interpolant`` (piecewise-linear inverse table),
    ``bisection`` or ``newton`` (both refine to ``|Phi(z) - u| <= tol``).
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)) or np.any(np.isnan(u_arr)):
        raise DomainError("uniform variate must lie in (0, 1)")
    flat = np.atleast_1d(u_arr).ravel()
    if solver == "interpolant":
        interp = interpolant or build_inverse_cdf(mixture, grid_size)
        z = interp(flat)
    elif solver == "bisection":
        z = _bisect(mixture, flat, tol, grid_size)
    elif solver == "newton":
        tab = primitive_table(mixture.family, mixture.degree, grid_size)
        gl_x, gl_w = _cell_rule(CELL_NODES)
        z, _ = get_kernels(backend).its_invert(
            mixture.family.code, mixture.coefficients[None, :], flat, tab.grid,
            tab.values, gl_x, gl_w, tol, MAX_ITER)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    z = np.asarray(z, dtype=float).reshape(u_arr.shape)
    return z[()] if z.ndim == 0 else z


def _bisect(mixture, u, tol, grid_size):
    if mixture.family.bounded:
        lo, hi = np.full(u.size, -1.0), np.full(u.size, 1.0)
    else:
        R = hermite_radius(mixture.degree)
        lo, hi = np.full(u.size, -R), np.full(u.size, R)
    z = 0.5 * (lo + hi)
    for _ in range(200):
        f = mixture.cdf(z) - u
        if np.all(np.abs(f) <= tol):
            break
        lo = np.where(f < 0, z, lo)
        hi = np.where(f < 0, hi, z)
        z = np.where(np.abs(f) <= tol, z, 0.5 * (lo + hi))
    return z
