"""Command-line front end: one subcommand per experiment.

Options may come from a JSON config file (--config) and/or flags; flags
override file values, which override built-in defaults.  Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import os
import sys

from .experiments import (
    ConfigError,
    ExperimentConfig,
    NumericalError,
    run,
    validate,
)


def _noise_list(text):
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _add_common(sub):
    sub.add_argument("--config", help="JSON file with configuration values")
    sub.add_argument("--out", dest="output", help="output directory")
    sub.add_argument("--n", dest="n_particles", type=int, help="particles per interferometer")
    sub.add_argument("--seed", type=int, help="base seed for randomized pieces")
    sub.add_argument("--m", dest="repetitions", type=int,
                     help="repetitions for the uncertainty column")
    sub.add_argument("--grid", type=int, help="phase-scan resolution per period")
    sub.add_argument("--workers", type=int,
                     help="worker threads (default: DIFISHER_WORKERS or 1)")
    sub.add_argument("--validate-only", action="store_true",
                     help="check the configuration and exit")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="difisher",
        description="differential-interferometry Fisher-information experiments",
    )
    subs = parser.add_subparsers(dest="experiment", required=True)

    p = subs.add_parser("noon-fi", help="maximized FI over a noise-width grid")
    _add_common(p)
    p.add_argument("--sigma-plus", type=_noise_list, help="total-noise tokens (comma list)")
    p.add_argument("--sigma-minus", type=_noise_list, help="relative-noise tokens")

    p = subs.add_parser("scan-lambda", help="FI of Josephson ground states vs lambda")
    _add_common(p)
    p.add_argument("--sigma-plus", type=_noise_list)
    p.add_argument("--lambda-grid", type=_float_list, dest="lambda_grid")

    p = subs.add_parser("scan-tau", help="FI of twisted states vs twisting time")
    _add_common(p)
    p.add_argument("--sigma-plus", type=_noise_list)
    p.add_argument("--tau-grid", type=_float_list, dest="tau_grid")

    p = subs.add_parser("scan-n", help="FI vs particle number with power-law fit")
    _add_common(p)
    p.add_argument("--sigma-plus", type=_noise_list)
    p.add_argument("--probe", choices=["twin-fock", "coherent", "adiabatic-opt",
                                       "diabatic-opt", "noon"])
    p.add_argument("--n-list", type=_int_list, dest="n_list")

    p = subs.add_parser("noise-histogram", help="F/N^2 histogram over random multi-peak noise")
    _add_common(p)
    p.add_argument("--peaks", type=int)
    p.add_argument("--peak-sigma", type=float, dest="peak_sigma")
    p.add_argument("--trials", type=int)

    p = subs.add_parser("qfi-check", help="measured FI vs exact QFI vs block bound")
    _add_common(p)
    p.add_argument("--sigma-plus", type=_noise_list)
    p.add_argument("--n-list", type=_int_list, dest="n_list")
    p.add_argument("--trials", type=int)

    return parser


def config_from_args(args):
    """Merge defaults < config file < command-line flags."""
    values = {"experiment": args.experiment}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
        allowed = set(ExperimentConfig.__dataclass_fields__)
        unknown = set(file_values) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    for name in ExperimentConfig.__dataclass_fields__:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if "workers" not in values:
        env = os.environ.get("DIFISHER_WORKERS")
        if env:
            try:
                values["workers"] = int(env)
            except ValueError:
                raise ConfigError(f"DIFISHER_WORKERS must be an integer, got {env!r}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        errors = validate(config)
        if errors:
            for err in errors:
                print(f"config error: {err}", file=sys.stderr)
            return 2
        if args.validate_only:
            print("configuration ok")
            return 0
        manifest = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(json.dumps({k: manifest[k] for k in ("experiment", "config_sha256",
                                               "wall_time_s", "outputs")}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
