"""Kernel backend selection.

The compiled extension is used when it imports; ``OPTIMAL_WLS_BACKEND``
(``auto``, ``compiled`` or ``python``) overrides the default.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("compiled", "python")


def available() -> tuple[str, ...]:
    return BACKENDS if _ckernels is not None else ("python",)


def default_backend() -> str:
    choice = os.environ.get("OPTIMAL_WLS_BACKEND", "auto").lower()
    if choice == "python":
        return "python"
    if choice == "compiled" and _ckernels is None:
        raise ImportError("OPTIMAL_WLS_BACKEND=compiled but the extension is not built")
    return "compiled" if _ckernels is not None else "python"


def get_kernels(name: str | None = None):
    name = name or default_backend()
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels are not available; build the extension")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
