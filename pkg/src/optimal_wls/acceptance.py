"""The twelve acceptance checks, shared by the test suite and ``verify``.

Each check returns a :class:`CheckResult`; ``run_checks`` prints one
``PASS``/``FAIL`` line per check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import basis
from .experiments import (ExperimentConfig, PAPER_N, error_study, high_dim_table,
                          minimal_n, noise_scaling, stability_grid)
from .functions import in_space
from .index_sets import IndexSet, index_set_for
from .lsq import NormalSystem, fit, solve_min_norm
from .measure import ApproximationSpace, christoffel, optimal_weight
from .presets import get_preset
from .sampler import sample_optimal, sample_standard

FAMILIES = basis.FAMILY_NAMES


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _random_points(family: str, n: int, d: int, rng) -> np.ndarray:
    if family == basis.HERMITE:
        return 2.0 * rng.standard_normal((n, d))
    return rng.uniform(-1.0, 1.0, (n, d))


def check_weight_identity(n_points: int = 1000, seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for fam in FAMILIES:
        for d, m in [(1, 100), (2, 60), (5, 100), (10, 100), (10, 30)]:
            space = ApproximationSpace.isotropic(fam, index_set_for(d, m))
            x = _random_points(fam, n_points, d, rng)
            worst = max(worst, float(np.max(np.abs(optimal_weight(space, x)
                                                   * christoffel(space, x) - m))))
    return worst < 1e-9, f"max |w k - m| = {worst:.2e}"


def _tensor_rule(space: ApproximationSpace):
    rules = [basis.gauss_rule(f, lam + 1) for f, lam in zip(space.families, space.degrees)]
    xs = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    ws = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    return (np.stack([g.ravel() for g in xs], axis=1),
            np.prod(np.stack([g.ravel() for g in ws], axis=1), axis=1))


def check_normalization(n_mc: int = 200_000, seed: int = 2) -> tuple[bool, str]:
    worst_q, worst_z = 0.0, 0.0
    for fam in FAMILIES:
        for d, m in [(1, 30), (2, 40), (3, 50)]:
            space = ApproximationSpace.isotropic(fam, index_set_for(d, m))
            x, w = _tensor_rule(space)
            total = float(np.dot(w, christoffel(space, x))) / m
            worst_q = max(worst_q, abs(total - 1.0))
        space = ApproximationSpace.isotropic(fam, index_set_for(10, 60))
        vals = christoffel(space, sample_standard(space, n_mc, seed).points) / space.m
        z = abs(vals.mean() - 1.0) / (vals.std(ddof=1) / math.sqrt(n_mc))
        worst_z = max(worst_z, z)
    ok = worst_q < 1e-8 and worst_z < 3.0
    return ok, f"quadrature error {worst_q:.1e}, d=10 Monte Carlo |z| = {worst_z:.2f}"


def _lin_space():
    return ApproximationSpace.isotropic(basis.LEGENDRE, IndexSet([(0,), (1,)]))


def check_sampler(n: int = 100_000, seed: int = 3) -> tuple[bool, str]:
    space = _lin_space()
    its = sample_optimal(space, n, seed, method="ITS").points[:, 0]
    rs = sample_optimal(space, n, seed + 1, method="RS").points[:, 0]
    ks = stats.kstest(its, lambda t: t / 4 + t ** 3 / 4 + 0.5)
    crit = stats.kstwo.ppf(0.99, n)
    two = stats.ks_2samp(rs, its)
    ok = ks.statistic < crit and two.pvalue > 0.001
    return ok, (f"KS D = {ks.statistic:.4f} (critical {crit:.4f}), "
                f"RS vs ITS p = {two.pvalue:.3f}")


def check_marginal(n: int = 100_000, bins: int = 50, seed: int = 4) -> tuple[bool, str]:
    space = ApproximationSpace.isotropic(basis.LEGENDRE, IndexSet([(0, 0), (1, 0), (0, 1)]))
    x1 = sample_optimal(space, n, seed).points[:, 0]
    edges = np.linspace(-1.0, 1.0, bins + 1)
    cdf = (2.0 * edges + edges ** 3 + 3.0) / 6.0
    expected = n * np.diff(cdf)
    observed = np.histogram(x1, edges)[0]
    p = stats.chisquare(observed, expected).pvalue
    return p > 0.01, f"chi-square p = {p:.3f} with {bins} bins"


def _table_rows(repetitions: int, dims, measures, methods, seed: int = 2014):
    cfg = ExperimentConfig.from_dict({
        "dims": list(dims), "measures": list(measures), "methods": list(methods),
        "n": PAPER_N, "m": 200, "repetitions": repetitions, "seed": seed})
    return high_dim_table(cfg)


_TABLE_CACHE: dict = {}


def weighted_table(repetitions: int = 100):
    key = ("weighted", repetitions)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _table_rows(repetitions, [1, 10],
                                        ["uniform", "gaussian", "chebyshev"], ["weighted"])
    return _TABLE_CACHE[key]


def check_table_probability(repetitions: int = 100) -> tuple[bool, str]:
    rows = weighted_table(repetitions)
    ok = all(r["probability"] == 1.0 for r in rows)
    detail = ", ".join(f"{r['measure']}/d={r['d']}: {r['probability']:.2f}" for r in rows)
    return ok, detail


def check_table_cond(repetitions: int = 100) -> tuple[bool, str]:
    rows = weighted_table(repetitions)
    ok = all(1.30 <= r["mean_cond"] <= 1.80 for r in rows)
    detail = ", ".join(f"{r['measure']}/d={r['d']}: {r['mean_cond']:.4f}" for r in rows)
    return ok, detail


def check_standard_contrast(repetitions: int = 100) -> tuple[bool, str]:
    row = _table_rows(repetitions, [1], ["gaussian"], ["standard"])[0]
    ok = row["probability"] == 0.0 and row["mean_cond"] > 1e6
    return ok, (f"probability {row['probability']:.2f}, mean cond {row['mean_cond']:.3g}, "
                f"median {row['median_cond']:.3g}, capped {row['capped']}")


def check_grids(repetitions: int = 100) -> tuple[bool, str]:
    parts, ok = [], True
    for meas in ("uniform", "gaussian", "chebyshev"):
        cfg = get_preset("stability-grid", f"grid-weighted-{meas}")
        cfg["repetitions"] = repetitions
        cells = stability_grid(ExperimentConfig.from_dict(cfg))
        sel = [c for c in cells if c.n / math.log(c.n) >= 4 * c.m]
        worst = min(c.empirical_probability for c in sel)
        ok &= worst == 1.0
        parts.append(f"weighted {meas}: min {worst:.2f} over {len(sel)} cells")
    cfg = get_preset("stability-grid", "grid-standard-uniform")
    cfg["repetitions"] = repetitions
    cells = stability_grid(ExperimentConfig.from_dict(cfg))
    sel = [c for c in cells if c.n / math.log(c.n) >= c.m ** 2]
    worst = min(c.empirical_probability for c in sel)
    ok &= worst >= 0.90
    parts.append(f"standard uniform: min {worst:.2f} over {len(sel)} cells")
    return ok, "; ".join(parts)


def check_reproduction(runs: int = 100, m: int = 10, seed: int = 9) -> tuple[bool, str]:
    worst, passed, total = 0.0, 0, 0
    rng = np.random.default_rng(seed)
    for fam in FAMILIES:
        for d in (1, 2, 5):
            space = ApproximationSpace.isotropic(fam, index_set_for(d, m))
            n = minimal_n(m, 1.0)
            for k in range(runs):
                c = rng.standard_normal(m)
                sample = sample_optimal(space, n, seed * 1000 + k)
                u = in_space(space, c)
                res = fit(space, sample, u(sample.points))
                err = np.linalg.norm(res.coefficients - c) / np.linalg.norm(c)
                nonsingular = res.stats.lambda_min > 1e-8
                total += 1
                passed += bool(nonsingular and err <= 1e-8)
                worst = max(worst, err)
    return passed == total, f"{passed}/{total} runs, max relative error {worst:.1e}"


def check_near_optimality(repetitions: int = 100) -> tuple[bool, str]:
    cfg = get_preset("error-study", "error-exp")
    cfg["repetitions"] = repetitions
    rows = error_study(ExperimentConfig.from_dict(cfg))
    need = math.ceil(0.95 * repetitions)
    counts = [round(r["fraction_within_bound"] * repetitions) for r in rows]
    ok = all(c >= need for c in counts)
    return ok, "within bound per m=2..8: " + ",".join(str(c) for c in counts)


def check_noise_scaling(repetitions: int = 50) -> tuple[bool, str]:
    cfg = get_preset("error-study", "noise-scaling")
    cfg["repetitions"] = repetitions
    out = noise_scaling(ExperimentConfig.from_dict(cfg))
    slope = out["slope"]
    return abs(slope - 2.0) <= 0.3, f"log-log slope {slope:.4f}"


def pinv_oracle_case(rng, m: int):
    """Random singular PSD system with known eigenstructure and its min-norm solution."""
    r = int(rng.integers(0, m))
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    lam = np.zeros(m)
    lam[:r] = rng.uniform(0.1, 10.0, r)
    G = (Q * lam) @ Q.T
    G = 0.5 * (G + G.T)
    rhs = rng.standard_normal(m)
    Qr = Q[:, :r]
    expected = Qr @ ((Qr.T @ rhs) / lam[:r]) if r else np.zeros(m)
    return G, rhs, expected


def check_pinv(cases: int = 200, seed: int = 12) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(2, 7))
        G, rhs, expected = pinv_oracle_case(rng, m)
        got = solve_min_norm(NormalSystem(G, rhs, 1))
        worst = max(worst, float(np.max(np.abs(got - expected))))
    return worst < 1e-9, f"max deviation {worst:.1e} over {cases} systems"


CHECKS: dict[int, tuple[str, Callable[..., tuple[bool, str]]]] = {
    1: ("optimal-weight identity", check_weight_identity),
    2: ("density normalization", check_normalization),
    3: ("sampler correctness", check_sampler),
    4: ("sequential marginal", check_marginal),
    5: ("weighted stability probability", check_table_probability),
    6: ("weighted mean condition number", check_table_cond),
    7: ("standard Gaussian blow-up", check_standard_contrast),
    8: ("stability grids", check_grids),
    9: ("exact reproduction", check_reproduction),
    10: ("near-optimality in probability", check_near_optimality),
    11: ("noise scaling", check_noise_scaling),
    12: ("minimal-norm oracle", check_pinv),
}

# reduced sizes for a fast smoke run of the expensive checks
QUICK_KWARGS = {5: {"repetitions": 3}, 6: {"repetitions": 3}, 7: {"repetitions": 3},
                8: {"repetitions": 5}, 10: {"repetitions": 20}}


def run_check(number: int, **kwargs) -> CheckResult:
    name, func = CHECKS[number]
    t0 = time.perf_counter()
    passed, detail = func(**kwargs)
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def run_checks(numbers=None, quick: bool = False, echo: Callable[[str], None] = print):
    results = []
    for k in numbers or sorted(CHECKS):
        kwargs = QUICK_KWARGS.get(k, {}) if quick else {}
        res = run_check(k, **kwargs)
        echo(res.line())
        results.append(res)
    return results
