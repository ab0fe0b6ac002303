"""Named experiment configurations for the CLI."""

from __future__ import annotations

import numpy as np

from .experiments import PAPER_N, geometric_grid

TABLE_DIMS = [1, 2, 5, 10, 50, 100]
TABLE_MEASURES = ["uniform", "gaussian", "chebyshev"]
TABLE_METHODS = ["weighted", "standard"]

# 15 x 15 grid for d = 1: m in [1, 40], n geometric in [10, 20000]
GRID_M = [int(v) for v in np.unique(np.round(np.linspace(1, 40, 15)).astype(int))]
GRID_N = (10, 20000, 15)


def _grid():
    return [list(p) for p in geometric_grid(*GRID_N, GRID_M)]


def _table(**over):
    cfg = {"dims": TABLE_DIMS, "measures": TABLE_MEASURES, "methods": TABLE_METHODS,
           "n": PAPER_N, "m": 200, "repetitions": 100, "repetitions_by_d": {50: 25, 100: 25},
           "seed": 2014}
    cfg.update(over)
    return cfg


PRESETS: dict[str, dict[str, dict]] = {
    "stability-grid": {
        **{f"grid-weighted-{meas}": {"measure": meas, "method": "weighted", "d": 1,
                                     "grid": _grid(), "repetitions": 100, "seed": 8}
           for meas in TABLE_MEASURES},
        "grid-standard-uniform": {"measure": "uniform", "method": "standard", "d": 1,
                                  "grid": _grid(), "repetitions": 100, "seed": 8},
        "grid-quick": {"measure": "uniform", "method": "weighted", "d": 1,
                       "grid": [[50, 2], [200, 5], [1000, 10]], "repetitions": 10, "seed": 8},
    },
    "high-dim-table": {
        "paper-table-1": _table(),
        "paper-table-2": _table(),
        "table-weighted": _table(dims=[1, 10], methods=["weighted"], repetitions_by_d={}),
        "table-standard-gaussian": _table(dims=[1], measures=["gaussian"],
                                          methods=["standard"], repetitions_by_d={}),
    },
    "error-study": {
        "error-exp": {"target": "exp", "measure": "uniform", "d": 1,
                      "m_values": list(range(2, 9)), "r": 1.0, "repetitions": 100,
                      "seed": 10},
        "noise-scaling": {"measure": "uniform", "d": 1, "m_values": [10], "n": 200,
                          "sigmas": [0.1, 0.2, 0.4], "repetitions": 50, "seed": 11},
    },
}


def get_preset(subcommand: str, name: str) -> dict:
    try:
        return dict(PRESETS[subcommand][name])
    except KeyError:
        known = ", ".join(sorted(PRESETS.get(subcommand, {})))
        raise KeyError(f"no preset {name!r} for {subcommand}; known: {known}") from None
