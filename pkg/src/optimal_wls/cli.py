"""Command-line interface.

Subcommands: ``sample``, ``fit``, ``stability-grid``, ``high-dim-table``,
``error-study`` and ``verify``. Settings come from ``--preset``, then
``--config`` (a JSON document or a provenance sidecar written by an
earlier run), then explicit flags. With ``--out`` the data file is written
together with ``<out>.provenance.json``.

Exit codes: 0 on success, 1 when ``verify`` finds a failing check, 2 on
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

from . import acceptance, presets
from ._backend import default_backend
from .experiments import (ERROR_HEADER, TABLE_HEADER, ConfigError, ExperimentConfig,
                          StabilityCell, error_study, high_dim_table, make_space,
                          noise_scaling, resolve_family, rows_to_csv, stability_grid)
from .functions import get_function
from .index_sets import IndexSet
from .lsq import fit, l2_error
from .measure import ApproximationSpace
from .noise import NoiseModel, observe
from .sampler import sample_optimal, sample_standard

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SPACE_DEFAULTS = {"family": "legendre_uniform", "d": 1, "m": 2,
                  "strategy": "total_degree_lex", "strategy_seed": 0, "index_set": None}
SAMPLE_DEFAULTS = {**SPACE_DEFAULTS, "n": 100, "seed": 0, "method": "auto",
                   "measure": "optimal"}
FIT_DEFAULTS = {**SAMPLE_DEFAULTS, "variant": "plain", "tau": None, "target": "exp",
                "noise": {}, "error_method": "tensor_quadrature"}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "provenance" in data:          # a sidecar from an earlier run
        data = data["config"]
    return data


def _resolve(args, defaults: dict | None, flag_names) -> dict:
    cfg = dict(defaults or {})
    if args.preset:
        try:
            cfg.update(presets.get_preset(args.command, args.preset))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    cfg.update(_load_config(args.config))
    for name in flag_names:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _emit(args, text: str, cfg: dict) -> None:
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        sidecar = {"provenance": {"subcommand": args.command, "version": _version(),
                                  "backend": default_backend(),
                                  "created": datetime.now(timezone.utc).isoformat()},
                   "seed": cfg.get("seed"), "config": cfg}
        Path(str(out) + ".provenance.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True, default=str) + "\n")
    else:
        sys.stdout.write(text)


def _space(cfg: dict) -> ApproximationSpace:
    fam = resolve_family(cfg["family"])
    if cfg.get("index_set"):
        spec = cfg["index_set"]
        iset = IndexSet.load(spec) if isinstance(spec, str) else IndexSet(spec)
        return ApproximationSpace.isotropic(fam, iset)
    return make_space(fam, int(cfg["d"]), int(cfg["m"]), cfg["strategy"],
                      int(cfg["strategy_seed"]))


def _draw(space, cfg):
    if cfg["measure"] == "optimal":
        return sample_optimal(space, int(cfg["n"]), int(cfg["seed"]), method=cfg["method"])
    if cfg["measure"] == "standard":
        return sample_standard(space, int(cfg["n"]), int(cfg["seed"]))
    raise ConfigError("measure must be optimal or standard")


def cmd_sample(args) -> int:
    cfg = _resolve(args, SAMPLE_DEFAULTS, ["family", "d", "m", "strategy", "n", "method",
                                           "measure"])
    sample = _draw(_space(cfg), cfg)
    _emit(args, sample.to_csv(), cfg)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _resolve(args, FIT_DEFAULTS, ["family", "d", "m", "strategy", "n", "method",
                                        "measure", "variant", "tau", "target"])
    if args.noise_sigma is not None:
        cfg["noise"] = {"kind": "gaussian", "sigma": args.noise_sigma}
    space = _space(cfg)
    sample = _draw(space, cfg)
    u = get_function(cfg["target"], space)
    y = observe(u, sample, NoiseModel.from_config(cfg["noise"]), int(cfg["seed"]))
    res = fit(space, sample, y, cfg["variant"], cfg["tau"])
    err = l2_error(space, res, u, cfg["error_method"], seed=int(cfg["seed"]))
    out = {"coefficients": res.coefficients.tolist(), "variant": res.variant,
           "conditioned_zeroed": res.conditioned_zeroed,
           "dist_identity": res.stats.dist_identity, "cond": res.stats.cond,
           "lambda_min": res.stats.lambda_min, "lambda_max": res.stats.lambda_max,
           "errors": {"l2": err}}
    _emit(args, json.dumps(out, indent=2) + "\n", cfg)
    return EXIT_OK


def _experiment_config(args, extra=()) -> tuple[ExperimentConfig, dict]:
    cfg = _resolve(args, None, list(extra))
    if getattr(args, "repetitions", None) is not None:
        cfg["repetitions"] = args.repetitions
        cfg["repetitions_by_d"] = {}
    return ExperimentConfig.from_dict(cfg), cfg


def cmd_stability_grid(args) -> int:
    config, cfg = _experiment_config(args)
    cells = stability_grid(config)
    _emit(args, rows_to_csv([c.row() for c in cells], StabilityCell.HEADER), cfg)
    return EXIT_OK


def cmd_high_dim_table(args) -> int:
    config, cfg = _experiment_config(args, ["n", "m"])
    _emit(args, rows_to_csv(high_dim_table(config), TABLE_HEADER), cfg)
    return EXIT_OK


def cmd_error_study(args) -> int:
    config, cfg = _experiment_config(args)
    if config.sigmas:
        res = noise_scaling(config)
        text = rows_to_csv(res["rows"], ("sigma", "mse"))
        text += f"# slope={res['slope']!r}\n"
    else:
        text = rows_to_csv(error_study(config), ERROR_HEADER)
    _emit(args, text, cfg)
    return EXIT_OK


def cmd_verify(args) -> int:
    name = args.preset or "quick"
    if name == "quick":
        numbers, quick = None, True
    elif name == "full":
        numbers, quick = None, False
    elif name.startswith("acceptance-") and name[len("acceptance-"):].isdigit() \
            and int(name[len("acceptance-"):]) in acceptance.CHECKS:
        numbers, quick = [int(name[len("acceptance-"):])], False
    else:
        raise ConfigError(f"unknown verify preset {name!r}; use quick, full or acceptance-<1..12>")
    lines = []

    def echo(line):
        lines.append(line)
        print(line, flush=True)

    results = acceptance.run_checks(numbers, quick=quick, echo=echo)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optimal-wls", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config or provenance sidecar")
        p.add_argument("--seed", type=int, help="master seed (u64)")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--preset", help="named configuration")
        return p

    def space_flags(p):
        p.add_argument("--family", help="legendre_uniform, chebyshev_arcsine or hermite_gaussian")
        p.add_argument("--d", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--strategy", choices=["total_degree_lex", "random_admissible"])
        p.add_argument("--n", type=int)
        p.add_argument("--method", choices=["RS", "ITS", "auto"])
        p.add_argument("--measure", choices=["optimal", "standard"])

    p = common(sub.add_parser("sample", help="draw a weighted sample (CSV)"))
    space_flags(p)
    p.set_defaults(func=cmd_sample)

    p = common(sub.add_parser("fit", help="weighted least-squares fit (JSON)"))
    space_flags(p)
    p.add_argument("--variant", choices=["plain", "truncated", "conditioned"])
    p.add_argument("--tau", type=float)
    p.add_argument("--target", help="exp, runge, zero or inVm:<c0,c1,...>")
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.set_defaults(func=cmd_fit)

    p = common(sub.add_parser("stability-grid", help="Pr{cond(G) <= 3} over (n, m) cells"))
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=cmd_stability_grid)

    p = common(sub.add_parser("high-dim-table", help="stability across d, measures, methods"))
    p.add_argument("--repetitions", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.set_defaults(func=cmd_high_dim_table)

    p = common(sub.add_parser("error-study", help="L2 errors over an m sweep"))
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=cmd_error_study)

    p = common(sub.add_parser("verify", help="run the acceptance checks"))
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
