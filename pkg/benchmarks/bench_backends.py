"""Compare the compiled and pure-Python sampling kernels.

Usage::

    python benchmarks/bench_backends.py [--n 20000] [--m 200] [--repeat 3]

Times one full ``sample_optimal`` call per family (ITS, and RS for the
bounded families) with each backend and reports the speed-up and the
largest coordinate difference between the two outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from optimal_wls._backend import available
from optimal_wls.index_sets import index_set_for
from optimal_wls.measure import ApproximationSpace
from optimal_wls.sampler import sample_optimal

FAMILIES = ("legendre_uniform", "chebyshev_arcsine", "hermite_gaussian")


def best_time(func, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--n", type=int, default=20_000)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--rs-n", type=int, default=2000, help="sample size for RS runs")
    args = p.parse_args(argv)

    backends = available()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'family':<18} {'method':<6} {'n':>7} " + " ".join(f"{b:>10}" for b in backends)
          + f" {'speed-up':>9} {'max |diff|':>11}")
    for fam in FAMILIES:
        space = ApproximationSpace.isotropic(fam, index_set_for(args.d, args.m))
        methods = ["ITS"] + (["RS"] if fam != "hermite_gaussian" else [])
        for method in methods:
            n = args.n if method == "ITS" else args.rs_n
            res = {}
            for b in backends:
                res[b] = best_time(lambda: sample_optimal(space, n, 1, method=method, backend=b),
                                   args.repeat)
            cols = " ".join(f"{res[b][0]:>9.3f}s" for b in backends)
            if len(backends) == 2:
                speed = res["python"][0] / res["compiled"][0]
                diff = np.max(np.abs(res["python"][1].points - res["compiled"][1].points))
                tail = f" {speed:>8.1f}x {diff:>11.1e}"
            else:
                tail = ""
            print(f"{fam:<18} {method:<6} {n:>7} {cols}{tail}")


if __name__ == "__main__":
    main()
