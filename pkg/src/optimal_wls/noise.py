"""Additive observation noise ``y = u(x) + h(x) + eta``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from ._rng import STREAM_NOISE, counter_uniform, derive_seed

__all__ = ["NoiseModel", "observe", "KINDS"]

KINDS = ("none", "bounded_uniform", "gaussian")


@dataclass(frozen=True)
class NoiseModel:
    """Deterministic bias ``h`` plus a centred stochastic part ``eta``.

    Parameters
    ----------
    kind : {"none", "bounded_uniform", "gaussian"}
    amplitude : float
        Half-width ``a`` of the uniform law, ``|eta| <= a``.
    sigma : float
        Standard deviation of the Gaussian law.
    bias : callable, optional
        ``h`` evaluated on ``(n, d)`` points.
    """

    kind: str = "none"
    amplitude: float = 0.0
    sigma: float = 0.0
    bias: Callable | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if self.amplitude < 0 or self.sigma < 0:
            raise ValueError("noise scale must be nonnegative")

    @classmethod
    def from_config(cls, cfg: dict | None, bias: Callable | None = None) -> "NoiseModel":
        cfg = dict(cfg or {})
        return cls(cfg.get("kind", "none"), float(cfg.get("amplitude", 0.0)),
                   float(cfg.get("sigma", 0.0)), bias)

    @property
    def variance(self) -> float:
        """``sup_x E(eta^2 | x)``."""
        if self.kind == "gaussian":
            return self.sigma ** 2
        if self.kind == "bounded_uniform":
            return self.amplitude ** 2 / 3.0
        return 0.0

    def draw(self, n: int, seed: int) -> np.ndarray:
        """``eta^1..eta^n``; entry ``i`` depends only on ``(seed, i)``."""
        if self.kind == "none":
            return np.zeros(n)
        u = counter_uniform(derive_seed(seed, STREAM_NOISE), np.arange(n, dtype=np.uint64), 0)
        if self.kind == "bounded_uniform":
            return self.amplitude * (2.0 * u - 1.0)
        return self.sigma * ndtri(u)

    def bound(self, space=None, n_scan: int = 100_000, seed: int = 0) -> float | None:
        """Almost-sure bound ``D`` on ``|h + eta|``, or None if unbounded.

        ``||h||_inf`` is estimated by scanning ``n_scan`` points drawn from
        ``rho`` on ``space``.
        """
        if self.kind == "gaussian":
            return None
        hmax = 0.0
        if self.bias is not None:
            if space is None:
                raise ValueError("a space is needed to scan the bias")
            from .sampler import sample_standard
            pts = sample_standard(space, n_scan, seed).points
            hmax = float(np.max(np.abs(self.bias(pts))))
        return hmax + self.amplitude


def observe(u: Callable, sample, model: NoiseModel | None, seed: int) -> np.ndarray:
    """Noisy observations of ``u`` at the sample points."""
    y = np.asarray(u(sample.points), dtype=float).reshape(sample.n).copy()
    if model is None:
        return y
    if model.bias is not None:
        y += np.asarray(model.bias(sample.points), dtype=float).reshape(sample.n)
    if model.kind != "none":
        y += model.draw(sample.n, seed)
    return y
