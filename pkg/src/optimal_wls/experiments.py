"""Monte Carlo harness for Gramian stability and approximation error.

Every repetition draws its sample from a seed derived from
``(master seed, n, m, repetition)``, so cells can run in any order (or in
parallel) and still give bit-identical results.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import basis
from ._rng import STREAM_EXPERIMENT, derive_seed
from .functions import get_function
from .index_sets import STRATEGIES, index_set_for
from .lsq import (SPECTRAL_THRESHOLD, COND_THRESHOLD, assemble, best_approx_error,
                  fit, l2_error, spectral_stats)
from .measure import ApproximationSpace
from .noise import NoiseModel, observe
from .sampler import sample_optimal, sample_standard

__all__ = [
    "ConfigError", "ExperimentConfig", "StabilityCell", "condition_check", "minimal_n",
    "chernoff_reference", "c_delta", "stability_grid", "run_cell", "high_dim_table",
    "error_study", "noise_scaling", "minimax_error", "repetition_seed", "geometric_grid",
    "resolve_family", "PAPER_N", "COND_CAP",
]

PAPER_N = 26559
COND_CAP = 1e20  # stands in for infinite / overflowing condition numbers in means

MEASURE_ALIASES = {
    "uniform": basis.LEGENDRE,
    "gaussian": basis.HERMITE,
    "chebyshev": basis.CHEBYSHEV,
}
METHODS = ("weighted", "standard")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def resolve_family(name: str) -> str:
    name = MEASURE_ALIASES.get(name, name)
    if name not in basis.FAMILY_NAMES:
        raise ConfigError(f"unknown measure {name!r}")
    return name


# ---------------------------------------------------------------- theory


def kappa(r: float) -> float:
    """``(1 - ln 2) / (2 + 2 r)``."""
    return (1.0 - math.log(2.0)) / (2.0 + 2.0 * r)


def _budget(n: int, r: float) -> float:
    return kappa(r) * n / math.log(n)


def minimal_n(m: int, r: float) -> int:
    """Smallest ``n >= 2`` with ``m <= kappa n / ln n``.

    ``n / ln n`` decreases on ``[2, e]`` and increases afterwards, so
    ``n = 2`` is checked on its own and the search runs over ``n >= 3``.
    """
    if m < 1 or r <= 0:
        raise ValueError("need m >= 1 and r > 0")
    if m <= _budget(2, r):
        return 2
    lo, hi = 3, 4
    while m > _budget(hi, r):
        lo, hi = hi, 2 * hi
    if m <= _budget(lo, r):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if m <= _budget(mid, r):
            hi = mid
        else:
            lo = mid
    return hi


def condition_check(m: int, n: int, r: float) -> dict:
    """Whether ``n`` samples satisfy the budget ``m <= kappa n / ln n``."""
    if m < 1 or n < 2 or r <= 0:
        raise ValueError("need m >= 1, n >= 2 and r > 0")
    budget = _budget(n, r)
    return {"satisfied": bool(m <= budget), "kappa": kappa(r), "budget": budget,
            "minimal_n": minimal_n(m, r)}


def c_delta(delta: float) -> float:
    """``delta + (1 - delta) ln(1 - delta)``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return delta + (1.0 - delta) * math.log1p(-delta)


def chernoff_reference(m: int, n: int, K: float, delta: float = 0.5) -> float:
    """Tail bound ``2 m exp(-c_delta n / K)`` for ``Pr{||G - I|| > delta}``."""
    if K < m:
        raise ValueError("K must be at least m")
    return 2.0 * m * math.exp(-c_delta(delta) * n / K)


# ---------------------------------------------------------------- configs


@dataclass
class ExperimentConfig:
    """Settings shared by the stability, table and error experiments."""

    measure: str = "uniform"
    method: str = "weighted"
    d: int = 1
    strategy: str = "total_degree_lex"
    strategy_seed: int = 0
    grid: list = field(default_factory=list)          # [(n, m), ...]
    repetitions: int = 100
    seed: int = 0
    sampler: str = "ITS"
    dims: list = field(default_factory=list)
    measures: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    n: int = PAPER_N
    m: int = 200
    repetitions_by_d: dict = field(default_factory=dict)
    target: str = "exp"
    m_values: list = field(default_factory=list)
    r: float = 1.0
    variant: str = "plain"
    tau: float | None = None
    noise: dict = field(default_factory=dict)
    error_method: str = "tensor_quadrature"
    sigmas: list = field(default_factory=list)
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if self.d < 1:
            raise ConfigError("d must be positive")
        if self.sampler.upper() not in ("RS", "ITS", "AUTO"):
            raise ConfigError("sampler must be RS, ITS or auto")
        resolve_family(self.measure)
        for mname in self.measures:
            resolve_family(mname)
        for meth in self.methods:
            if meth not in METHODS:
                raise ConfigError(f"method must be one of {METHODS}")
        self.grid = [tuple(int(v) for v in pair) for pair in self.grid]
        for n, m in self.grid:
            if not n >= m >= 1:
                raise ConfigError(f"grid cell (n={n}, m={m}) needs n >= m >= 1")
        if self.dims and not self.n >= self.m >= 1:
            raise ConfigError("table cells need n >= m >= 1")
        self.repetitions_by_d = {int(k): int(v) for k, v in self.repetitions_by_d.items()}
        if any(v < 1 for v in self.repetitions_by_d.values()):
            raise ConfigError("repetitions must be at least 1")
        if self.r <= 0:
            raise ConfigError("r must be positive")


def repetition_seed(master: int, n: int, m: int, k: int) -> int:
    return derive_seed(master, STREAM_EXPERIMENT, n, m, k)


def make_space(measure: str, d: int, m: int, strategy: str = "total_degree_lex",
               strategy_seed: int = 0) -> ApproximationSpace:
    return ApproximationSpace.isotropic(resolve_family(measure),
                                        index_set_for(d, m, strategy, strategy_seed))


def draw(space: ApproximationSpace, method: str, n: int, seed: int, sampler: str = "ITS"):
    if method == "weighted":
        return sample_optimal(space, n, seed, method=sampler)
    return sample_standard(space, n, seed)


# ---------------------------------------------------------------- stability


@dataclass(frozen=True)
class StabilityCell:
    """Empirical stability statistics for one ``(n, m)`` pair.

    ``mean_cond`` replaces infinite or larger-than-``COND_CAP`` values by
    ``COND_CAP``; ``capped`` counts how often that happened.
    """

    n: int
    m: int
    empirical_probability: float
    mean_cond: float
    median_cond: float
    capped: int
    tail_frequency: float
    repetitions: int

    HEADER = ("n", "m", "repetitions", "probability", "mean_cond", "median_cond",
              "capped", "tail_frequency")

    def row(self) -> list:
        return [self.n, self.m, self.repetitions, self.empirical_probability,
                self.mean_cond, self.median_cond, self.capped, self.tail_frequency]


def summarize(n: int, m: int, conds, dists) -> StabilityCell:
    conds = np.asarray(conds, dtype=float)
    dists = np.asarray(dists, dtype=float)
    R = conds.size
    capped = ~(conds < COND_CAP)
    safe = np.where(capped, COND_CAP, conds)
    return StabilityCell(n, m, float(np.count_nonzero(conds <= COND_THRESHOLD)) / R,
                         float(np.mean(safe)), float(np.median(safe)),
                         int(np.count_nonzero(capped)),
                         float(np.count_nonzero(dists > SPECTRAL_THRESHOLD)) / R, R)


def run_cell(measure: str, method: str, d: int, n: int, m: int, repetitions: int,
             seed: int, sampler: str = "ITS", strategy: str = "total_degree_lex",
             strategy_seed: int = 0) -> StabilityCell:
    """``repetitions`` Gramians for one cell and their summary."""
    space = make_space(measure, d, m, strategy, strategy_seed)
    conds, dists = [], []
    for k in range(repetitions):
        sample = draw(space, method, n, repetition_seed(seed, n, m, k), sampler)
        with np.errstate(over="ignore", invalid="ignore"):
            stats = spectral_stats(assemble(space, sample).G)
        conds.append(stats.cond)
        dists.append(stats.dist_identity)
    return summarize(n, m, conds, dists)


def _run_cell_args(args):
    return run_cell(*args)


def _map(func, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, jobs))
    return [func(j) for j in jobs]


def stability_grid(config: ExperimentConfig) -> list[StabilityCell]:
    """One :class:`StabilityCell` per ``(n, m)`` in ``config.grid``, in order."""
    jobs = [(config.measure, config.method, config.d, n, m, config.repetitions,
             config.seed, config.sampler, config.strategy, config.strategy_seed)
            for n, m in config.grid]
    return _map(_run_cell_args, jobs, config.workers)


def geometric_grid(n_min: int, n_max: int, n_count: int, m_values) -> list[tuple[int, int]]:
    """Pairs ``(n, m)`` with ``n`` geometric and ``n >= m``."""
    ns = np.unique(np.round(np.geomspace(n_min, n_max, n_count)).astype(int))
    return [(int(n), int(m)) for m in m_values for n in ns if n >= m]


TABLE_HEADER = ("method", "measure", "d", "n", "m", "repetitions", "probability",
                "mean_cond", "median_cond", "capped")


def high_dim_table(config: ExperimentConfig) -> list[dict]:
    """Rows ``(method, measure, d, probability, mean_cond, ...)`` for each combination."""
    dims = config.dims or [config.d]
    measures = config.measures or [config.measure]
    methods = config.methods or [config.method]
    jobs, keys = [], []
    for method in methods:
        for measure in measures:
            for d in dims:
                R = config.repetitions_by_d.get(int(d), config.repetitions)
                jobs.append((measure, method, int(d), config.n, config.m, R, config.seed,
                             config.sampler, config.strategy, config.strategy_seed))
                keys.append((method, measure, int(d)))
    cells = _map(_run_cell_args, jobs, config.workers)
    return [{"method": meth, "measure": meas, "d": d, "n": c.n, "m": c.m,
             "repetitions": c.repetitions, "probability": c.empirical_probability,
             "mean_cond": c.mean_cond, "median_cond": c.median_cond, "capped": c.capped}
            for (meth, meas, d), c in zip(keys, cells)]


# ---------------------------------------------------------------- errors


def _cheb_vander(x, degree):
    return np.polynomial.chebyshev.chebvander(x, degree)


def minimax_error(u, degree: int, grid_size: int = 20001, tol: float = 1e-10,
                  max_iter: int = 100, check_size: int = 200001) -> float:
    """Uniform error of the best degree-``degree`` polynomial for ``u`` on ``[-1, 1]``.

    Discrete exchange (Remez) iteration on a Chebyshev grid. The returned
    value is the maximum error of the final polynomial on a finer grid, so
    it bounds the true minimax error from above up to grid resolution.
    """
    f = lambda t: np.asarray(u(t[:, None]), dtype=float).ravel()
    N = degree + 2
    x = np.cos(np.pi * np.arange(grid_size) / (grid_size - 1))[::-1]
    fx = f(x)
    Vx = _cheb_vander(x, degree)
    # start from the Chebyshev extrema of degree N-1
    ref = np.searchsorted(x, -np.cos(np.pi * np.arange(N) / (N - 1)))
    ref = np.clip(ref, 0, grid_size - 1)
    best, best_err = np.zeros(degree + 1), np.inf
    for _ in range(max_iter):
        A = np.hstack([Vx[ref], ((-1.0) ** np.arange(N))[:, None]])
        sol = np.linalg.solve(A, fx[ref])
        coef, level = sol[:-1], abs(sol[-1])
        err = fx - Vx @ coef
        emax = np.max(np.abs(err))
        # at rounding level the exchange can wander, so keep the best iterate
        if emax < best_err:
            best, best_err = coef, emax
        if emax - level <= tol * max(emax, 1e-300):
            break
        new = _exchange(err, N)
        if new is None:
            break
        ref = new
    xc = np.cos(np.pi * np.arange(check_size) / (check_size - 1))
    return float(np.max(np.abs(f(xc) - _cheb_vander(xc, degree) @ best)))


def _exchange(err: np.ndarray, N: int) -> np.ndarray:
    """Alternating reference of ``N`` points containing the global maximum."""
    sign = np.sign(err)
    sign[sign == 0] = 1
    breaks = np.flatnonzero(np.diff(sign) != 0) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [err.size]))
    peaks = np.array([s + int(np.argmax(np.abs(err[s:e]))) for s, e in zip(starts, ends)])
    if peaks.size < N:
        return None  # error at rounding level, no alternation left
    best, best_val = 0, -1.0
    mags = np.abs(err[peaks])
    g = int(np.argmax(mags))
    for s in range(max(0, g - N + 1), min(g, peaks.size - N) + 1):
        v = mags[s:s + N].min()
        if v > best_val:
            best, best_val = s, v
    return peaks[best:best + N]


ERROR_HEADER = ("m", "n", "repetitions", "mean_error", "median_error", "max_error",
                "e_m", "e_m_inf", "bound", "fraction_within_bound")


def error_study(config: ExperimentConfig) -> list[dict]:
    """Errors ``||u - u_tilde||`` over an ``m`` sweep with ``n = minimal_n(m, r)``."""
    rows = []
    fam = resolve_family(config.measure)
    for m in config.m_values:
        space = make_space(config.measure, config.d, int(m), config.strategy,
                           config.strategy_seed)
        u = get_function(config.target, space)
        n = minimal_n(int(m), config.r)
        model = NoiseModel.from_config(config.noise)
        errors = []
        for k in range(config.repetitions):
            s = repetition_seed(config.seed, n, int(m), k)
            sample = draw(space, config.method, n, s, config.sampler)
            y = observe(u, sample, model, s)
            res = fit(space, sample, y, config.variant, config.tau)
            errors.append(l2_error(space, res, u, config.error_method, seed=s))
        errors = np.asarray(errors)
        e_m = best_approx_error(space, u, config.error_method, seed=config.seed)
        if config.d == 1 and basis.get_family(fam).bounded:
            e_inf = minimax_error(u, int(m) - 1)
        else:
            e_inf = float("inf")
        bound = (1.0 + math.sqrt(2.0)) * e_inf
        rows.append({"m": int(m), "n": n, "repetitions": config.repetitions,
                     "mean_error": float(errors.mean()),
                     "median_error": float(np.median(errors)),
                     "max_error": float(errors.max()), "e_m": e_m, "e_m_inf": e_inf,
                     "bound": bound,
                     "fraction_within_bound": float(np.mean(errors <= bound))})
    return rows


def noise_scaling(config: ExperimentConfig) -> dict:
    """Mean-square error of fits to pure noise for each ``sigma``.

    The same sample and the same standard normal draws are reused for every
    ``sigma`` (common random numbers), so only the noise level varies.
    Returns the rows and the least-squares slope of ``log mse`` on
    ``log sigma``.
    """
    m = config.m_values[0] if config.m_values else config.m
    space = make_space(config.measure, config.d, int(m), config.strategy,
                       config.strategy_seed)
    zero = get_function("zero")
    n = config.n
    mse = np.zeros(len(config.sigmas))
    for k in range(config.repetitions):
        s = repetition_seed(config.seed, n, int(m), k)
        sample = draw(space, config.method, n, s, config.sampler)
        for j, sigma in enumerate(config.sigmas):
            y = observe(zero, sample, NoiseModel("gaussian", sigma=float(sigma)), s)
            res = fit(space, sample, y, config.variant, config.tau)
            # ||u_tilde||^2 by orthonormality
            mse[j] += float(np.dot(res.coefficients, res.coefficients))
    mse /= config.repetitions
    slope = float(np.polyfit(np.log(config.sigmas), np.log(mse), 1)[0])
    return {"rows": [{"sigma": float(s), "mse": float(e)} for s, e in zip(config.sigmas, mse)],
            "slope": slope, "n": n, "m": int(m)}


# ---------------------------------------------------------------- output


def rows_to_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if isinstance(row, dict):
            row = [row[h] for h in header]
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
