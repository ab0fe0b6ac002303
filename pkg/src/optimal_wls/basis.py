"""Univariate orthonormal polynomial families.

Three families are supported, each orthonormal with respect to a
probability density on its support:

``legendre_uniform``
    Legendre polynomials, ``rho(t) = 1/2`` on ``[-1, 1]``.
``chebyshev_arcsine``
    Chebyshev polynomials of the first kind, ``rho(t) = 1/(pi sqrt(1-t^2))``
    on ``[-1, 1]``; ``phi_0 = 1`` and ``phi_j = sqrt(2) T_j``.
``hermite_gaussian``
    Probabilists' Hermite polynomials, ``rho`` the standard normal density.

All of them satisfy the symmetric three-term recurrence

    t phi_k(t) = a_{k+1} phi_{k+1}(t) + a_k phi_{k-1}(t),   phi_0 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import legendre as npleg
from scipy.special import ndtr, roots_hermitenorm

LEGENDRE = "legendre_uniform"
CHEBYSHEV = "chebyshev_arcsine"
HERMITE = "hermite_gaussian"

FAMILY_NAMES = (LEGENDRE, CHEBYSHEV, HERMITE)

# Integer codes shared with the sampling kernels.
KIND_CODES = {LEGENDRE: 0, CHEBYSHEV: 1, HERMITE: 2}

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class DomainError(ValueError):
    """A point lies outside the support of a bounded family."""


class UnboundedFamilyError(ValueError):
    """An operation needs a bounded orthonormal system."""


@dataclass(frozen=True)
class BasisFamily:
    """Descriptor of a univariate measure and its orthonormal polynomials."""

    kind: str

    def __post_init__(self):
        if self.kind not in FAMILY_NAMES:
            raise ValueError(
                f"unknown family {self.kind!r}; expected one of {FAMILY_NAMES}")

    @property
    def bounded(self) -> bool:
        return self.kind != HERMITE

    @property
    def support(self) -> tuple[float, float]:
        return (-1.0, 1.0) if self.bounded else (-np.inf, np.inf)

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def recurrence(self, k_max: int) -> np.ndarray:
        """Off-diagonal coefficients ``a_1 .. a_{k_max}`` (``a[0]`` unused)."""
        return _recurrence(self.kind, int(k_max)).copy()

    def __str__(self):
        return self.kind


def get_family(family) -> BasisFamily:
    if isinstance(family, BasisFamily):
        return family
    return BasisFamily(str(family))


@lru_cache(maxsize=None)
def _recurrence(kind: str, k_max: int) -> np.ndarray:
    k = np.arange(k_max + 1, dtype=float)
    a = np.zeros(k_max + 1)
    if k_max == 0:
        return a
    if kind == LEGENDRE:
        a[1:] = k[1:] / np.sqrt(4.0 * k[1:] ** 2 - 1.0)
    elif kind == CHEBYSHEV:
        a[1:] = 0.5
        a[1] = np.sqrt(0.5)
    else:
        a[1:] = np.sqrt(k[1:])
    return a


def _check_support(family: BasisFamily, t: np.ndarray) -> None:
    if family.bounded and np.any(np.abs(t) > 1.0):
        bad = t[np.abs(t) > 1.0]
        raise DomainError(
            f"{family.kind}: point {bad.flat[0]!r} outside support [-1, 1]")
    if np.any(np.isnan(t)):
        raise DomainError("NaN evaluation point")


def _sweep(kind: str, t: np.ndarray, j_max: int, start) -> np.ndarray:
    a = _recurrence(kind, j_max)
    out = np.empty(t.shape + (j_max + 1,))
    out[..., 0] = start
    if j_max >= 1:
        out[..., 1] = t * out[..., 0] / a[1]
    for k in range(1, j_max):
        out[..., k + 1] = (t * out[..., k] - a[k] * out[..., k - 1]) / a[k + 1]
    return out


def evaluate(family, t, j_max: int, check: bool = True) -> np.ndarray:
    """Vectorized ``phi_0(t) .. phi_{j_max}(t)``; shape ``t.shape + (j_max+1,)``."""
    family = get_family(family)
    t = np.asarray(t, dtype=float)
    if j_max < 0:
        raise ValueError("j_max must be nonnegative")
    if check:
        _check_support(family, t)
    return _sweep(family.kind, t, int(j_max), 1.0)


def log_scale(family, t) -> np.ndarray:
    """Log of the per-point factor applied by :func:`evaluate_scaled`.

    The factor is ``sqrt(rho(t))`` for the Gaussian family, where raw
    polynomial values grow like ``exp(t^2/4)``, and 1 otherwise.
    """
    family = get_family(family)
    t = np.asarray(t, dtype=float)
    if family.kind == HERMITE:
        return -0.25 * t * t - 0.5 * _LOG_SQRT_2PI
    return np.zeros_like(t)


def evaluate_scaled(family, t, j_max: int, check: bool = True, log_start=None) -> np.ndarray:
    """``exp(log_scale(t)) * phi_k(t)``, free of overflow for Gaussian tails.

    ``log_start`` replaces ``log_scale(t)`` as the log of the factor.
    """
    family = get_family(family)
    t = np.asarray(t, dtype=float)
    if check:
        _check_support(family, t)
    if log_start is None:
        log_start = log_scale(family, t)
    return _sweep(family.kind, t, int(j_max), np.exp(log_start))


def log_peak(family, t, j_max: int) -> np.ndarray:
    """``max_{k <= j_max} log |phi_k(t)|`` without forming the values.

    The recurrence is renormalised at every step, so this is finite where
    the values themselves overflow.
    """
    family = get_family(family)
    t = np.asarray(t, dtype=float)
    a = _recurrence(family.kind, j_max)
    prev, cur = np.zeros_like(t), np.ones_like(t)
    acc, best = np.zeros_like(t), np.zeros_like(t)
    with np.errstate(divide="ignore"):
        for k in range(j_max):
            nxt = (t * cur - (a[k] * prev if k else 0.0)) / a[k + 1]
            best = np.maximum(best, acc + np.log(np.abs(nxt)))
            r = np.maximum(np.abs(cur), np.abs(nxt))
            prev, cur = cur / r, nxt / r
            acc = acc + np.log(r)
    return best


def eval_basis(family, j_max: int, t: float) -> np.ndarray:
    """Values ``phi_0(t), ..., phi_{j_max}(t)`` at a single point."""
    return evaluate(family, float(t), j_max)


def density(family, t):
    """Density ``rho(t)`` of the family's measure; zero off a bounded support."""
    family = get_family(family)
    t = np.asarray(t, dtype=float)
    if family.kind == HERMITE:
        out = np.exp(-0.5 * t * t - _LOG_SQRT_2PI)
    elif family.kind == LEGENDRE:
        out = np.where(np.abs(t) <= 1.0, 0.5, 0.0)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(np.abs(t) < 1.0,
                           1.0 / (np.pi * np.sqrt(1.0 - t * t)),
                           np.where(np.abs(t) == 1.0, np.inf, 0.0))
    return out[()] if out.ndim == 0 else out


def sup_norm_bound(family, j: int) -> float:
    """Exact ``||phi_j||_inf`` for the bounded families."""
    family = get_family(family)
    if not family.bounded:
        raise UnboundedFamilyError(
            f"{family.kind} has no finite sup-norm bound; use inverse transform sampling")
    if j == 0:
        return 1.0
    if family.kind == CHEBYSHEV:
        return float(np.sqrt(2.0))
    return float(np.sqrt(2.0 * j + 1.0))


def envelope_constant(family, degree_max: int) -> float:
    """``max_{k <= degree_max} ||phi_k||_inf^2``."""
    return max(sup_norm_bound(family, k) ** 2 for k in range(degree_max + 1))


@lru_cache(maxsize=64)
def _gauss(kind: str, npts: int):
    if kind == LEGENDRE:
        x, w = npleg.leggauss(npts)
        w = w / 2.0
    elif kind == CHEBYSHEV:
        x, w = npcheb.chebgauss(npts)
        w = w / np.pi
    else:
        # numpy's hermegauss overflows beyond a few hundred nodes
        x, w = roots_hermitenorm(npts)
        w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(family, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for ``rho``: exact for polynomials of degree ``2*npts - 1``.

    Weights sum to one.
    """
    return _gauss(get_family(family).kind, int(npts))


def _hermite_cdf_terms(t: np.ndarray, j_max: int) -> np.ndarray:
    # Column i (i >= 1) holds rho(t) phi_i(t) phi_{i-1}(t) / sqrt(i).
    s = _sweep(HERMITE, t, j_max, np.exp(log_scale(HERMITE, t)))
    out = np.zeros_like(s)
    if j_max >= 1:
        i = np.arange(1, j_max + 1)
        out[..., 1:] = s[..., 1:] * s[..., :-1] / np.sqrt(i)
    return out


def primitives(family, j_max: int, t) -> np.ndarray:
    """``P_k(t) = int_{inf X}^t rho phi_k^2`` for ``k = 0..j_max``.

    Shape ``t.shape + (j_max+1,)``. Closed forms are used for the Chebyshev
    (``t = cos(theta)`` substitution) and Gaussian families; the Legendre
    primitive is a polynomial of degree ``2k+1`` integrated exactly by a
    mapped Gauss-Legendre rule.
    """
    family = get_family(family)
    t = np.asarray(t, dtype=float)
    j_max = int(j_max)
    if family.kind == HERMITE:
        terms = _hermite_cdf_terms(t, j_max)
        return ndtr(t)[..., None] - np.cumsum(terms, axis=-1)
    tc = np.clip(t, -1.0, 1.0)
    if family.kind == CHEBYSHEV:
        theta = np.arccos(tc)[..., None]
        k = np.arange(j_max + 1)
        out = np.broadcast_to(1.0 - theta / np.pi, t.shape + (j_max + 1,)).copy()
        if j_max >= 1:
            out[..., 1:] -= np.sin(2.0 * k[1:] * theta) / (2.0 * k[1:] * np.pi)
        return out
    xg, wg = npleg.leggauss(j_max + 1)
    half = 0.5 * (tc + 1.0)
    nodes = -1.0 + half[..., None] * (xg + 1.0)
    vals = _sweep(LEGENDRE, nodes, j_max, 1.0)
    # rho = 1/2 and the mapped weights carry the Jacobian `half`.
    return 0.5 * half[..., None] * np.einsum("...gk,g->...k", vals * vals, wg)


def weighted_square_primitive(family, j: int, t):
    """``P_j(t) = int_{inf X}^t rho(s) phi_j(s)^2 ds``."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    out = primitives(family, j, t)[..., j]
    return out[()] if out.ndim == 0 else out


def mixture_cdf(family, coefficients, t):
    """CDF of the density ``rho(t) * sum_k c_k phi_k(t)^2``."""
    c = np.asarray(coefficients, dtype=float)
    return primitives(family, len(c) - 1, t) @ c


def mixture_density(family, coefficients, t):
    """Density ``rho(t) * sum_k c_k phi_k(t)^2`` (zero off a bounded support)."""
    family = get_family(family)
    c = np.asarray(coefficients, dtype=float)
    t = np.asarray(t, dtype=float)
    L = len(c) - 1
    if family.kind == HERMITE:
        s = evaluate_scaled(family, t, L)
        return (s * s) @ c
    inside = np.abs(t) <= 1.0
    v = evaluate(family, np.where(inside, t, 0.0), L)
    with np.errstate(invalid="ignore"):
        return np.where(inside, density(family, t) * ((v * v) @ c), 0.0)
