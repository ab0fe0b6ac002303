"""Weighted least squares in the basis ``(L_nu)``.

The Gramian ``G = (1/n) sum_i w^i L(x^i) L(x^i)^T`` is assembled from the
weighted design ``A = sqrt(w) L`` in fixed-size row blocks, so the sum is
reduced in the same order on every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from . import basis
from ._rng import STREAM_MC, derive_seed
from .index_sets import StructureError
from .measure import ApproximationSpace, eval_tensor_basis, scaled_tensor_basis
from .sampler import WeightedSample, sample_standard

__all__ = [
    "NormalSystem", "SpectralStats", "FitResult", "design_matrix", "assemble",
    "solve_min_norm", "spectral_stats", "fit", "evaluate", "l2_error",
    "best_approx_error", "COND_THRESHOLD", "SPECTRAL_THRESHOLD",
]

BLOCK_ROWS = 8192
RANK_TOL = 1e-12        # relative eigenvalue cutoff for the pseudo-inverse
CHOLESKY_MIN = 1e-8     # smallest eigenvalue that still takes the Cholesky path
COND_THRESHOLD = 3.0
SPECTRAL_THRESHOLD = 0.5
VARIANTS = ("plain", "truncated", "conditioned")


@dataclass(frozen=True)
class NormalSystem:
    """Normal equations ``G v = rhs`` from ``n`` weighted samples."""

    G: np.ndarray
    rhs: np.ndarray
    n: int


@dataclass(frozen=True)
class SpectralStats:
    """Extreme eigenvalues of ``G`` and derived diagnostics."""

    dist_identity: float
    cond: float
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        # ||G - I|| <= 1/2 forces lambda in [1/2, 3/2], hence cond <= 3.
        if self.dist_identity <= SPECTRAL_THRESHOLD:
            assert self.cond <= COND_THRESHOLD * (1 + 1e-12), self

    @property
    def stable(self) -> bool:
        return self.cond <= COND_THRESHOLD

    def as_dict(self) -> dict:
        return {"dist_identity": self.dist_identity, "cond": self.cond,
                "lambda_min": self.lambda_min, "lambda_max": self.lambda_max}


@dataclass(frozen=True)
class FitResult:
    """Coefficients in the ``(L_nu)`` ordering plus diagnostics.

    Truncation is applied by :func:`evaluate`; ``coefficients`` are the raw
    least-squares solution (or zeros for a rejected conditioned fit).
    """

    coefficients: np.ndarray
    variant: str
    stats: SpectralStats
    conditioned_zeroed: bool = False
    tau: float | None = None
    raw_coefficients: np.ndarray | None = field(default=None, repr=False)


def design_matrix(space: ApproximationSpace, sample: WeightedSample) -> np.ndarray:
    """Rows ``sqrt(w^i) L(x^i)``.

    Scaled basis values are combined with the weights in log space, which
    keeps Gaussian-tail rows finite.
    """
    if sample.d != space.d:
        raise ValueError(f"sample has d={sample.d}, space has d={space.d}")
    S, log_s = scaled_tensor_basis(space, sample.points)
    with np.errstate(divide="ignore"):
        scale = np.exp(0.5 * np.log(sample.weights) - log_s)
    return S * scale[:, None]


def _blocked_gram(A: np.ndarray) -> np.ndarray:
    m = A.shape[1]
    G = np.zeros((m, m))
    for s in range(0, A.shape[0], BLOCK_ROWS):
        blk = A[s:s + BLOCK_ROWS]
        G += blk.T @ blk
    return G


def assemble(space: ApproximationSpace, sample: WeightedSample, y=None) -> NormalSystem:
    """Normal equations for the weighted discrete least-squares problem.

    ``y=None`` assembles only the Gramian (``rhs`` is zero).
    """
    n = sample.n
    A = design_matrix(space, sample)
    G = _blocked_gram(A) / n
    G = 0.5 * (G + G.T)
    if y is None:
        rhs = np.zeros(space.m)
    else:
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != n:
            raise ValueError(f"y has length {y.shape[0]}, sample has n={n}")
        rhs = A.T @ (np.sqrt(sample.weights) * y) / n
    return NormalSystem(G, rhs, n)


def _check_symmetric(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise StructureError(f"expected a square matrix, got shape {G.shape}")
    scale = max(np.max(np.abs(G)), 1.0) if G.size else 1.0
    if np.any(np.abs(G - G.T) > 1e-12 * scale):
        raise StructureError("matrix is not symmetric")
    return G


def spectral_stats(G) -> SpectralStats:
    """``||G - I||_2`` and ``cond(G)`` from the symmetric eigenvalues."""
    G = _check_symmetric(G)
    lam = linalg.eigvalsh(G)
    return _stats(lam)


def _stats(lam: np.ndarray) -> SpectralStats:
    lmin, lmax = float(lam[0]), float(lam[-1])
    dist = max(abs(lmax - 1.0), abs(lmin - 1.0))
    cond = lmax / lmin if lmin > 0 else np.inf
    return SpectralStats(dist, cond, lmin, lmax)


def solve_min_norm(system: NormalSystem) -> np.ndarray:
    """Minimal ``l2``-norm solution of ``G v = rhs``.

    Eigenvalues below ``1e-12 * lambda_max`` are treated as zero. A
    well-conditioned ``G`` goes through a Cholesky solve.
    """
    G = _check_symmetric(system.G)
    rhs = np.asarray(system.rhs, dtype=float)
    lam = linalg.eigvalsh(G)
    if lam[-1] <= 0:
        return np.zeros_like(rhs)
    if lam[0] > max(CHOLESKY_MIN, RANK_TOL * lam[-1]):
        return linalg.cho_solve(linalg.cho_factor(G), rhs)
    return _pinv_solve(G, rhs)


def _pinv_solve(G, rhs):
    lam, V = linalg.eigh(G)
    keep = lam > RANK_TOL * lam[-1]
    Vk = V[:, keep]
    return Vk @ ((Vk.T @ rhs) / lam[keep])


def parse_variant(variant: str, tau: float | None = None) -> tuple[str, float | None]:
    """Accepts ``plain``, ``conditioned``, ``truncated`` or ``truncated(<tau>)``."""
    v = variant.strip().lower()
    if v.startswith("truncated(") and v.endswith(")"):
        tau = float(v[len("truncated("):-1])
        v = "truncated"
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if v == "truncated" and (tau is None or not tau > 0):
        raise ValueError("truncated variant needs tau > 0")
    return v, (tau if v == "truncated" else None)


def fit(space: ApproximationSpace, sample: WeightedSample, y, variant: str = "plain",
        tau: float | None = None, threshold: float = SPECTRAL_THRESHOLD) -> FitResult:
    """Weighted least-squares estimator.

    Parameters
    ----------
    variant : {"plain", "truncated", "conditioned"}
        ``conditioned`` returns the zero function when ``||G - I||_2 >
        threshold``; ``truncated`` clamps values to ``[-tau, tau]`` at
        evaluation time.
    """
    variant, tau = parse_variant(variant, tau)
    system = assemble(space, sample, y)
    lam = linalg.eigvalsh(system.G)
    stats = _stats(lam)
    coef = solve_min_norm(system)
    zeroed = variant == "conditioned" and stats.dist_identity > threshold
    out = np.zeros_like(coef) if zeroed else coef
    return FitResult(out, variant, stats, zeroed, tau, coef)


def evaluate(result: FitResult, space: ApproximationSpace, x):
    """``sum_nu c_nu L_nu(x)``, clamped to ``[-tau, tau]`` for truncated fits."""
    vals = eval_tensor_basis(space, x) @ result.coefficients
    if result.variant == "truncated":
        vals = np.clip(vals, -result.tau, result.tau)
    return vals


QUAD_BUDGET = 200_000   # default tensor-rule size, spread evenly over coordinates


def _quadrature(space: ApproximationSpace, npts: int | None, max_nodes: int = 2_000_000):
    # Beyond exactness on V_m, extra nodes matter for targets with poles near
    # the real axis (Runge under the Gaussian converges slowly).
    per_dim = min(1000, int(round(QUAD_BUDGET ** (1.0 / space.d))))
    sizes = [npts or max(2 * lam + 20, per_dim) for lam in space.degrees]
    total = int(np.prod([float(s) for s in sizes]))
    if total > max_nodes:
        raise ValueError(f"tensor quadrature needs {total} nodes; use monte_carlo")
    rules = [basis.gauss_rule(f, s) for f, s in zip(space.families, sizes)]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    x = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return x, w


def _points(space, method, npts, n_mc, seed):
    if method == "tensor_quadrature":
        return _quadrature(space, npts)
    if method == "monte_carlo":
        s = sample_standard(space, n_mc, derive_seed(seed, STREAM_MC))
        return s.points, np.full(n_mc, 1.0 / n_mc)
    raise ValueError(f"unknown method {method!r}")


def l2_error(space: ApproximationSpace, result: FitResult, u: Callable,
             method: str = "tensor_quadrature", n_mc: int = 10_000, seed: int = 0,
             npts: int | None = None) -> float:
    """``||u - u_tilde||`` in ``L^2(d rho)`` by tensor Gauss quadrature or Monte Carlo.

    The default rule has ``max(2 lambda_i + 20, (2e5)^(1/d))`` nodes per
    coordinate (at most 1000), so it is exact on ``V_m``. For rough targets
    in several dimensions pass a larger ``npts`` or use ``monte_carlo``.
    """
    x, w = _points(space, method, npts, n_mc, seed)
    r = np.asarray(u(x), dtype=float) - evaluate(result, space, x)
    return float(np.sqrt(max(np.dot(w, r * r), 0.0)))


def best_approx_error(space: ApproximationSpace, u: Callable,
                      method: str = "tensor_quadrature", n_mc: int = 10_000,
                      seed: int = 0, npts: int | None = None) -> float:
    """``e_m(u) = ||u - P_m u||`` with projection coefficients from the same rule."""
    x, w = _points(space, method, npts, n_mc, seed)
    L = eval_tensor_basis(space, x)
    ux = np.asarray(u(x), dtype=float)
    if method == "tensor_quadrature":
        coef = L.T @ (w * ux)
    else:
        coef = np.linalg.lstsq(L, ux, rcond=None)[0]
    r = ux - L @ coef
    return float(np.sqrt(max(np.dot(w, r * r), 0.0)))
