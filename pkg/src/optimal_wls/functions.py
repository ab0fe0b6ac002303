"""Registry of target functions ``u : X -> R`` for fits and error studies.

Names: ``exp`` (``exp(sum x)``), ``runge`` (``1 / (1 + 25 |x|^2)``),
``zero``, and ``inVm:<c0>,<c1>,...`` for an element of ``V_m`` given by
coefficients in the ``(L_nu)`` ordering of the space.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .measure import ApproximationSpace, eval_tensor_basis

__all__ = ["get_function", "NAMES"]

NAMES = ("exp", "runge", "zero", "inVm:<coeffs>")


def _exp(x):
    return np.exp(np.atleast_2d(x).sum(axis=1))


def _runge(x):
    x = np.atleast_2d(x)
    return 1.0 / (1.0 + 25.0 * np.sum(x * x, axis=1))


def _zero(x):
    return np.zeros(np.atleast_2d(x).shape[0])


def in_space(space: ApproximationSpace, coefficients) -> Callable:
    """``sum_nu c_nu L_nu`` as a callable on ``(n, d)`` points."""
    c = np.asarray(coefficients, dtype=float)
    if c.shape != (space.m,):
        raise ValueError(f"expected {space.m} coefficients, got {c.shape}")
    return lambda x: eval_tensor_basis(space, np.atleast_2d(x)) @ c


def get_function(name: str, space: ApproximationSpace | None = None) -> Callable:
    """Look up a target by name; ``inVm:`` targets need the space."""
    if name == "exp":
        return _exp
    if name == "runge":
        return _runge
    if name == "zero":
        return _zero
    if name.startswith("inVm:"):
        if space is None:
            raise ValueError("inVm targets need an approximation space")
        body = name[len("inVm:"):]
        coeffs = [float(v) for v in body.split(",") if v.strip()]
        if len(coeffs) < space.m:
            coeffs += [0.0] * (space.m - len(coeffs))
        return in_space(space, coeffs)
    raise KeyError(f"unknown target function {name!r}; known: {', '.join(NAMES)}")
