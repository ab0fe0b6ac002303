"""Optimal weighted least squares with Christoffel-function sampling.

Typical use::

    from optimal_wls import ApproximationSpace, index_set_for, sample_optimal, fit

    space = ApproximationSpace.isotropic("legendre_uniform", index_set_for(2, 10))
    sample = sample_optimal(space, n=500, seed=1)
    result = fit(space, sample, y)
"""

from importlib import metadata as _metadata

from ._backend import default_backend
from .basis import DomainError, UnboundedFamilyError, eval_basis
from .index_sets import IndexSet, StructureError, index_set_for, nested_sequence
from .lsq import assemble, evaluate, fit, l2_error, solve_min_norm, spectral_stats
from .measure import ApproximationSpace, christoffel, optimal_density, optimal_weight
from .noise import NoiseModel, observe
from .sampler import WeightedSample, sample_optimal, sample_standard

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "ApproximationSpace", "DomainError", "IndexSet", "NoiseModel", "StructureError",
    "UnboundedFamilyError", "WeightedSample", "assemble", "christoffel", "default_backend",
    "eval_basis", "evaluate", "fit", "index_set_for", "l2_error", "nested_sequence",
    "observe", "optimal_density", "optimal_weight", "sample_optimal", "sample_standard",
    "solve_min_norm", "spectral_stats",
]
