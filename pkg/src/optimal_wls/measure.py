"""Tensor bases, the Christoffel function and the optimal sampling density.

For a space ``V_m = span{L_nu : nu in Lambda}`` with
``L_nu(x) = prod_i phi_{nu_i}(x_i)`` this module evaluates

* ``k_m(x) = sum_nu L_nu(x)^2`` (inverse of the Christoffel function),
* the optimal weight ``w_m = m / k_m`` and density ``mu_m = k_m rho / m``,
* the marginals of ``mu_m`` on the first ``q`` coordinates and the
  conditional densities used for sequential sampling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import basis
from .basis import BasisFamily, get_family
from .index_sets import IndexSet, degree_profile


@dataclass(frozen=True, eq=False)
class ApproximationSpace:
    """Product measure on ``X = X_1 x ... x X_d`` plus a downward-closed set."""

    families: tuple[BasisFamily, ...]
    index_set: IndexSet

    def __post_init__(self):
        fams = tuple(get_family(f) for f in self.families)
        object.__setattr__(self, "families", fams)
        if len(fams) != self.index_set.dimension:
            raise ValueError(
                f"{len(fams)} families for an index set of dimension "
                f"{self.index_set.dimension}")

    @classmethod
    def isotropic(cls, family, index_set: IndexSet) -> "ApproximationSpace":
        return cls((get_family(family),) * index_set.dimension, index_set)

    @property
    def d(self) -> int:
        return len(self.families)

    @property
    def m(self) -> int:
        return self.index_set.m

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return degree_profile(self.index_set)[0]

    @cached_property
    def fingerprint(self) -> str:
        """Short stable hash of the families and the index set."""
        text = ",".join(f.kind for f in self.families) + "|" + self.index_set.to_json()
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def __eq__(self, other):
        return (isinstance(other, ApproximationSpace)
                and self.families == other.families
                and self.index_set == other.index_set)

    def __hash__(self):
        return hash((self.families, self.index_set))

    def as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.d == 1 and x.shape[0] != 1:
            x = x[:, None]
        x = np.atleast_2d(x)
        if x.shape[-1] != self.d:
            raise ValueError(f"points have {x.shape[-1]} coordinates, space has d={self.d}")
        return x

    def univariate(self, x: np.ndarray, scaled: bool = False) -> list[np.ndarray]:
        """Per-coordinate tables ``phi_k(x_i)``, ``k <= lambda_i``."""
        ev = basis.evaluate_scaled if scaled else basis.evaluate
        return [ev(f, x[:, i], lam) for i, (f, lam)
                in enumerate(zip(self.families, self.degrees))]

    def _product(self, tables: Sequence[np.ndarray], n: int) -> np.ndarray:
        return _tensor_product(self.index_set.array, tables, n)


def _tensor_product(arr: np.ndarray, tables: Sequence[np.ndarray], n: int,
                    out: np.ndarray | None = None) -> np.ndarray:
    """``out[:, j] *= prod_i tables[i][:, arr[j, i]]`` (``out`` defaults to ones).

    Columns with ``nu_i = 0`` only need the degree-0 value. It is 1 for
    unscaled tables; scaled tables multiply whole rows by it and the other
    columns by the ratio to it, which avoids gathers over all ``m`` columns.
    """
    if out is None:
        out = np.ones((n, arr.shape[0]))
    start = out.copy() if any(not np.all(t[:, 0] == 1.0) for t in tables) else None
    underflow = np.zeros(n, dtype=bool)
    for i, tab in enumerate(tables):
        col = arr[:, i]
        nz = np.flatnonzero(col)
        base = tab[:, 0]
        if np.all(base == 1.0):
            if nz.size:
                out[:, nz] *= tab[:, col[nz]]
            continue
        out *= base[:, None]
        if nz.size:
            ok = base > 0
            underflow |= ~ok
            out[:, nz] *= tab[:, col[nz]] / np.where(ok, base, 1.0)[:, None]
    if underflow.any():
        rows = np.flatnonzero(underflow)
        fix = start[rows]
        for i, tab in enumerate(tables):
            fix *= tab[rows][:, arr[:, i]]
        out[rows] = fix
    return out


def eval_tensor_basis(space: ApproximationSpace, x) -> np.ndarray:
    """``(L_nu(x))_{nu in Lambda}``; ``(n, m)`` for ``n`` points, ``(m,)`` for one."""
    pts = space.as_points(x)
    vals = space._product(space.univariate(pts), pts.shape[0])
    return vals[0] if _single(space, x) else vals


def _single(space: ApproximationSpace, x) -> bool:
    x = np.asarray(x, dtype=float)
    if space.d == 1:
        return x.ndim == 0 or (x.ndim == 1 and x.shape[0] == 1)
    return x.ndim == 1


def scaled_tensor_basis(space: ApproximationSpace, x) -> tuple[np.ndarray, np.ndarray]:
    """``(S, log_s)`` with ``L_nu(x) = S[:, nu] * exp(-log_s)``, overflow free."""
    S, log_s, _ = _scaled(space, space.as_points(x))
    return S, log_s


# squared row norms below this are treated as underflowed
_TINY = 1e-280


def _scaled(space, pts):
    """Scaled tensor values plus ``shift``, the log of the extra per-row factor.

    The default factor is ``prod_i sqrt(rho_i)`` over Gaussian coordinates.
    Far in the Gaussian tail that factor underflows; those rows are redone
    with a per-coordinate factor that brings the largest ``|phi_k|`` to 1.
    """
    n = pts.shape[0]
    S = space._product(space.univariate(pts, scaled=True), n)
    log_s = np.zeros(n)
    for i, f in enumerate(space.families):
        log_s += basis.log_scale(f, pts[:, i])
    shift = np.zeros(n)
    herm = [i for i, f in enumerate(space.families) if f.kind == basis.HERMITE]
    if herm:
        bad = ~(np.einsum("ij,ij->i", S, S) >= _TINY)
        if bad.any():
            rows = np.flatnonzero(bad)
            sub = pts[rows]
            tabs, new_log = [], np.zeros(rows.size)
            for i, (f, lam) in enumerate(zip(space.families, space.degrees)):
                start = -basis.log_peak(f, sub[:, i], lam) if i in herm else None
                tabs.append(basis.evaluate_scaled(f, sub[:, i], lam, log_start=start))
                if start is not None:
                    new_log += start
            S[rows] = space._product(tabs, rows.size)
            shift[rows] = new_log - log_s[rows]
            log_s[rows] = new_log
    return S, log_s, shift


def christoffel(space: ApproximationSpace, x):
    """``k_m(x) = sum_nu |L_nu(x)|^2``."""
    L = eval_tensor_basis(space, space.as_points(x))
    k = np.einsum("ij,ij->i", L, L)
    return k[0] if _single(space, x) else k


def optimal_weight(space: ApproximationSpace, x):
    """``w_m(x) = m / k_m(x)``, computed without overflow on Gaussian tails."""
    S, log_s, _ = _scaled(space, space.as_points(x))
    norm = np.sqrt(np.einsum("ij,ij->i", S, S))
    # column 0 is the null index, so S[:, 0] is the scale itself; the ratio
    # keeps w exact when m = 1
    s0 = S[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(s0 > 1e-150, space.m * (s0 / norm) ** 2,
                     space.m * np.exp(2.0 * (log_s - np.log(norm))))
    return w[0] if _single(space, x) else w


def weighted_design(space: ApproximationSpace, x) -> np.ndarray:
    """Rows ``sqrt(w_m(x)) L_nu(x)`` for the optimal weight.

    Equal to ``sqrt(m) S / ||S||`` for the scaled tensor values ``S``; the
    scale factors cancel, so this stays finite for far Gaussian samples.
    """
    S, _ = scaled_tensor_basis(space, x)
    norms = np.sqrt(np.einsum("ij,ij->i", S, S))
    return S * (np.sqrt(space.m) / norms)[:, None]


def product_density(space: ApproximationSpace, x, q: int | None = None) -> np.ndarray:
    """``rho_{A^q}(x) = prod_{i <= q} rho_i(x_i)``."""
    pts = space.as_points(x)
    q = space.d if q is None else q
    out = np.ones(pts.shape[0])
    for i in range(q):
        out = out * basis.density(space.families[i], pts[:, i])
    return out


def optimal_density(space: ApproximationSpace, x):
    """``mu_m(x) = k_m(x) rho(x) / m``."""
    pts = space.as_points(x)
    S, _, shift = _scaled(space, pts)
    ksc = np.einsum("ij,ij->i", S, S)
    # rho(x) k_m(x) = ksc * rho / scale^2; for Hermite rho / scale^2 == exp(-2 shift).
    ratio = np.exp(-2.0 * shift)
    for i, f in enumerate(space.families):
        if f.kind != basis.HERMITE:
            ratio = ratio * basis.density(f, pts[:, i])
    mu = ksc * ratio / space.m
    return mu[0] if _single(space, x) else mu


def _check_q(space, q):
    if not 1 <= q <= space.d:
        raise ValueError(f"q={q} out of range 1..{space.d}")


def marginal(space: ApproximationSpace, q: int, prefix) -> np.ndarray:
    """Marginal ``psi_q`` of ``mu_m`` on the first ``q`` coordinates.

    ``psi_q(z) = rho_{A^q}(z) / m * sum_nu prod_{i <= q} |phi_{nu_i}(z_i)|^2``.
    ``prefix`` has ``q`` coordinates (or shape ``(n, q)``).
    """
    _check_q(space, q)
    sub = _prefix_space(space, q)
    z = np.asarray(prefix, dtype=float)
    single = z.ndim == 0 or (z.ndim == 1 and (q > 1 or z.shape[0] == 1))
    pts = np.atleast_2d(z.reshape(-1, q)) if single else z.reshape(-1, q)
    S, _, shift = _scaled(sub, pts)
    # the same index may repeat after projection: sum over all of Lambda
    ratio = np.exp(-2.0 * shift)
    for i, f in enumerate(sub.families):
        if f.kind != basis.HERMITE:
            ratio = ratio * basis.density(f, pts[:, i])
    vals = np.einsum("ij,ij->i", S, S) * ratio / space.m
    return vals[0] if single else vals


@dataclass(eq=False)
class _ProjectedSpace:
    families: tuple
    array: np.ndarray
    degrees: tuple
    m: int = field(init=False)

    def __post_init__(self):
        self.m = self.array.shape[0]

    @property
    def d(self):
        return len(self.families)

    as_points = ApproximationSpace.as_points
    univariate = ApproximationSpace.univariate

    def _product(self, tables, n):
        return _tensor_product(self.array, tables, n)


def _prefix_space(space: ApproximationSpace, q: int) -> _ProjectedSpace:
    # Keeps every nu in Lambda (with multiplicity) restricted to the first q coordinates.
    arr = space.index_set.array[:, :q]
    return _ProjectedSpace(space.families[:q], arr, tuple(int(v) for v in arr.max(axis=0)))


@dataclass(frozen=True)
class ConditionalMixture:
    """Density ``rho_q(t) * sum_k c_k |phi_k(t)|^2`` on coordinate ``q``."""

    q: int
    coefficients: np.ndarray
    family: BasisFamily

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty vector")
        if np.any(c < 0) or abs(c.sum() - 1.0) > 1e-12:
            raise ValueError("mixture coefficients must be nonnegative and sum to 1")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "family", get_family(self.family))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def pdf(self, t):
        return basis.mixture_density(self.family, self.coefficients, t)

    def cdf(self, t):
        return basis.mixture_cdf(self.family, self.coefficients, t)

    def envelope(self) -> float:
        """Rejection constant ``max_k ||phi_k||_inf^2`` over the present degrees."""
        return basis.envelope_constant(self.family, self.degree)


def degree_counts(space: ApproximationSpace, q: int) -> np.ndarray:
    """``#{nu in Lambda : nu_q = k}`` for ``k = 0..lambda_q`` (``q`` is 1-based)."""
    return np.bincount(space.index_set.array[:, q - 1], minlength=space.degrees[q - 1] + 1)


def aggregation_matrix(space: ApproximationSpace, q: int) -> np.ndarray:
    """``(m, lambda_q+1)`` indicator of ``nu_q = k``."""
    col = space.index_set.array[:, q - 1]
    A = np.zeros((space.m, space.degrees[q - 1] + 1))
    A[np.arange(space.m), col] = 1.0
    return A


def mixture_coefficients(space: ApproximationSpace, q: int, prefix) -> np.ndarray:
    """Per-degree weights ``c_k`` of the conditional density of coordinate ``q``.

    ``prefix`` holds coordinates ``1..q-1``; shape ``(q-1,)`` or ``(n, q-1)``.
    Returns ``(lambda_q+1,)`` or ``(n, lambda_q+1)``.
    """
    _check_q(space, q)
    if q == 1:
        return degree_counts(space, 1) / space.m
    z = np.asarray(prefix, dtype=float)
    single = z.ndim <= 1
    pts = z.reshape(-1, q - 1)
    sub = _prefix_space(space, q - 1)
    S, _ = scaled_tensor_basis(sub, pts)
    alpha = S * S
    alpha /= alpha.sum(axis=1, keepdims=True)
    c = alpha @ aggregation_matrix(space, q)
    return c[0] if single else c


def conditional_mixture(space: ApproximationSpace, q: int, prefix=()) -> ConditionalMixture:
    """Conditional density of coordinate ``q`` given the first ``q-1`` coordinates.

    For ``q = 1`` every ``nu`` gets weight ``1/m``. Otherwise
    ``alpha_nu = prod_{j<q} |phi_{nu_j}(z_j)|^2 / sum_nu prod_{j<q} |phi_{nu_j}(z_j)|^2``
    and ``c_k = sum_{nu_q = k} alpha_nu``. The formula is the continuous
    extension, so prefixes where ``rho`` vanishes are handled too.
    """
    c = mixture_coefficients(space, q, prefix)
    if c.ndim != 1:
        raise ValueError("conditional_mixture takes a single prefix point")
    c = np.clip(c, 0.0, None)
    return ConditionalMixture(q, c / c.sum(), space.families[q - 1])
