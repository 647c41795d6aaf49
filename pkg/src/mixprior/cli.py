"""Command line front end.

Subcommands::

    mixprior run-linear --config cfg.json [--n N] [--reps R] [--seed S]
                        [--out PATH] [--workers W]
    mixprior run-mdp    --config cfg.json [same overrides]
    mixprior fit-prior  --features emb.csv --L 3 --out prior.json
                        [--sigma 0.5] [--seed 0] [--cov-type full|diag]
    mixprior bound      --config bound.json [--out PATH]

Exit codes: 0 on success, 2 on configuration errors (bad flags, malformed
files, inconsistent settings), 3 on numerical failures.

The bound config is a JSON object::

    {"theorem": 1,
     "fixed": {"n": 1000, "d": 30, "L": 10, "sigma": 0.1, "kappa": 1.0},
     "grid": {"param": "lambda0max", "values": [1e-4, 1e-2, 1.0]},
     "out": "bound.csv"}

and the emitted CSV has header `<param>,bound` with 17-significant-digit
values, one row per grid value.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import BoundInputsLinear, BoundInputsMDP, theorem1_bound, theorem2_bound
from .envs import load_feature_file
from .errors import ConfigError, NumericalError
from .harness import config_from_dict, run_to_csv
from .priors import GMMConfig, build_mixture_prior, fit_gmm, save_prior

_BOUND_FIELDS = {
    1: ("n", "d", "L", "sigma", "kappa", "lambda0max"),
    2: ("n", "nX", "nA", "h", "L", "Lambda0min"),
}
_BOUND_INTS = {"n", "d", "L", "nX", "nA", "h"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixprior")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("run-linear", "run-mdp"):
        p = sub.add_parser(name, help=f"run a {name.split('-')[1]} experiment")
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--n", type=int, help="override rounds/episodes per replication")
        p.add_argument("--reps", type=int, help="override replication count")
        p.add_argument("--seed", type=int, help="override base seed")
        p.add_argument("--out", help="override output CSV path")
        p.add_argument("--workers", type=int, help="override worker count")

    p = sub.add_parser("fit-prior", help="fit a mixture prior to a feature file")
    p.add_argument("--features", required=True, help="feature file (class,f0,...)")
    p.add_argument("--L", required=True, type=int, help="number of components")
    p.add_argument("--out", required=True, help="prior file to write")
    p.add_argument("--sigma", type=float, default=0.5, help="reward noise sd to store")
    p.add_argument("--seed", type=int, default=0, help="EM initialization seed")
    p.add_argument("--cov-type", choices=("full", "diag"), default="full")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("bound", help="evaluate a regret bound over a parameter grid")
    p.add_argument("--config", required=True, help="bound config (JSON)")
    p.add_argument("--out", help="override output CSV path")
    return parser


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _run(args: argparse.Namespace, setting: str) -> int:
    raw = _load_json(args.config)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("setting", setting) != setting:
        raise ConfigError(
            f"config setting '{raw.get('setting')}' does not match the subcommand"
        )
    raw["setting"] = setting
    for key in ("n", "reps", "seed", "out", "workers"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    cfg = config_from_dict(raw)
    if not cfg.out:
        raise ConfigError("an output CSV path is required (config 'out' or --out)")
    rows = run_to_csv(cfg)
    print(f"wrote {rows} rows to {cfg.out}")
    return 0


def _fit_prior(args: argparse.Namespace) -> int:
    if args.L < 1:
        raise ConfigError("L must be at least 1")
    if args.sigma <= 0:
        raise ConfigError("sigma must be positive")
    table = load_feature_file(args.features)
    try:
        gmm_config = GMMConfig(
            tol=args.tol, max_iters=args.max_iters, cov_type=args.cov_type, seed=args.seed
        )
        fit = fit_gmm(table.features, args.L, gmm_config)
        prior = build_mixture_prior(fit, args.sigma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    save_prior(prior, args.out)
    print(
        f"fit {args.L} components to {table.features.shape[0]} rows "
        f"(log-likelihood {fit.log_likelihood:.6g}, {fit.iterations} iterations); "
        f"wrote {args.out}"
    )
    return 0


def _bound(args: argparse.Namespace) -> int:
    raw = _load_json(args.config)
    if not isinstance(raw, dict):
        raise ConfigError("bound config must be a JSON object")
    unknown = set(raw) - {"theorem", "fixed", "grid", "out"}
    if unknown:
        raise ConfigError(f"unknown bound config keys: {sorted(unknown)}")
    theorem = raw.get("theorem")
    if theorem not in (1, 2):
        raise ConfigError("theorem must be 1 or 2")
    fields = _BOUND_FIELDS[theorem]
    fixed = raw.get("fixed")
    grid = raw.get("grid")
    if not isinstance(fixed, dict) or not isinstance(grid, dict):
        raise ConfigError("bound config needs 'fixed' and 'grid' objects")
    param = grid.get("param")
    values = grid.get("values")
    if param not in fields:
        raise ConfigError(f"grid param must be one of {fields}")
    if not isinstance(values, list) or not values:
        raise ConfigError("grid values must be a nonempty list")
    extra = set(fixed) - set(fields)
    if extra:
        raise ConfigError(f"unknown fixed parameters: {sorted(extra)}")
    missing = set(fields) - set(fixed) - {param}
    if missing:
        raise ConfigError(f"missing fixed parameters: {sorted(missing)}")
    out = args.out or raw.get("out")
    if not out:
        raise ConfigError("an output CSV path is required (config 'out' or --out)")

    cls = BoundInputsLinear if theorem == 1 else BoundInputsMDP
    evaluate = theorem1_bound if theorem == 1 else theorem2_bound
    lines = [f"{param},bound"]
    for value in values:
        kwargs = {k: (int(v) if k in _BOUND_INTS else float(v)) for k, v in fixed.items()}
        kwargs[param] = int(value) if param in _BOUND_INTS else float(value)
        try:
            inputs = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid bound inputs at {param}={value}: {exc}") from exc
        result = evaluate(inputs)
        lines.append(f"{format(float(value), '.17g')},{format(result, '.17g')}")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(values)} rows to {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses its own exit code for bad flags; map onto config errors
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "run-linear":
            return _run(args, "linear")
        if args.command == "run-mdp":
            return _run(args, "mdp")
        if args.command == "fit-prior":
            return _fit_prior(args)
        if args.command == "bound":
            return _bound(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
