"""Command-line harness: one subcommand per named experiment.

    specdyn <experiment> --config cfg.json [--out DIR] [--seed N] [--budget N]
    specdyn validate --config cfg.json

Exit status: 0 when every check passed, 1 when a check failed, 2 on
validation errors, 3 on resource/numerical errors.  Worker threads for
grid fan-out come from the SPECDYN_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .errors import NumericalError, ResourceError, ValidationError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="specdyn",
        description=(
            "Spectral-measure dynamics laboratory: return probabilities, "
            "scaling exponents and constructive witness measures."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in sorted(experiments.EXPERIMENTS):
        p = sub.add_parser(name, help=f"run the {name!r} experiment")
        _add_run_args(p)

    v = sub.add_parser("validate", help="check a config document, list violations")
    v.add_argument("--config", required=True, help="path to the JSON config")
    return parser


def _add_run_args(p):
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--out", default=None, help="output directory for artifacts")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument(
        "--budget", type=int, default=None, help="override the atom-pair budget (n^2 cap)"
    )
    return p


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}", path=path) from exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
        if args.command == "validate":
            violations = experiments.validate(config)
            if not violations:
                print("config is valid")
                return EXIT_OK
            for path, message in violations:
                print(f"violation at {path or '<root>'}: {message}")
            return EXIT_INVALID

        if config.get("experiment", args.command) != args.command:
            raise ValidationError(
                f"config names experiment {config.get('experiment')!r}, "
                f"but the {args.command!r} subcommand was invoked",
                path="experiment",
            )
        config = dict(config, experiment=args.command)
        violations = experiments.validate(config)
        if violations:
            for path, message in violations:
                print(f"violation at {path or '<root>'}: {message}", file=sys.stderr)
            return EXIT_INVALID
        report = experiments.run(
            config, out_dir=args.out, seed=args.seed, budget=args.budget
        )
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ResourceError, NumericalError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE

    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
