"""Command line driver for the experiment suite.

Usage follows ``mortar-rbf <experiment> [options]`` where the experiment
is one of interp_1d, interp_surface, kernel_study, poisson_2d or
scheme_compare (dashes are accepted in place of underscores).  Options
given on the command line override values from the ``--config`` file.

Exit codes: 0 on success, 2 for configuration problems (unknown keys,
malformed values, unreadable files), 3 when the numerics fail (singular
operators, ill-conditioned kernel fits, solver breakdowns).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DegenerateElementError,
    IllConditionedKernelError,
    InvalidGeometryError,
    MeshFormatError,
    RescaleBreakdownError,
    SingularOperatorError,
    SolverFailureError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentKind,
    load_config,
    run_experiment,
    serialize_config,
    write_outputs,
)
from .mortar import Scheme
from .rbf import PointLayout

_NUMERICAL_ERRORS = (
    DegenerateElementError,
    IllConditionedKernelError,
    InvalidGeometryError,
    RescaleBreakdownError,
    SingularOperatorError,
    SolverFailureError,
    np.linalg.LinAlgError,
)

_KERNEL_FLAGS = {"ga": "gaussian", "imq": "imq", "wendland": "wendland"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mortar-rbf",
        description="run one of the mortar coupling experiments",
    )
    parser.add_argument(
        "experiment",
        help="experiment name: %s" % ", ".join(k.value for k in ExperimentKind),
    )
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument(
        "--scheme",
        choices=[s.value for s in Scheme],
        help="mortar scheme override",
    )
    parser.add_argument(
        "--kernel",
        choices=sorted(_KERNEL_FLAGS),
        help="kernel family override",
    )
    parser.add_argument(
        "--nm",
        type=int,
        metavar="N",
        help="collocation points per element edge",
    )
    parser.add_argument(
        "--gauss",
        type=int,
        metavar="N",
        help="Gauss points per slave element",
    )
    parser.add_argument(
        "--levels",
        type=int,
        metavar="N",
        help="number of refinement levels",
    )
    parser.add_argument(
        "--warp",
        type=float,
        metavar="AMPLITUDE",
        help="out-of-plane warp amplitude",
    )
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="print the effective config before running",
    )
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file (if any) with command line overrides."""
    try:
        experiment = ExperimentKind(args.experiment.replace("-", "_").lower())
    except ValueError:
        raise ConfigError(
            f"unknown experiment {args.experiment!r}; expected one of "
            + ", ".join(k.value for k in ExperimentKind)
        ) from None

    config = load_config(args.config) if args.config else ExperimentConfig()
    config = replace(config, experiment=experiment)

    mortar = config.mortar
    if args.scheme is not None:
        mortar = replace(mortar, scheme=Scheme(args.scheme))
    if args.kernel is not None:
        mortar = replace(mortar, kernel_family=_KERNEL_FLAGS[args.kernel])
    try:
        if args.nm is not None:
            mortar = replace(
                mortar, layout=PointLayout(mortar.layout.variant, args.nm)
            )
        if args.gauss is not None:
            mortar = replace(mortar, n_gauss=args.gauss)
        config = replace(config, mortar=mortar)
        if args.levels is not None:
            config = replace(config, refinements=args.levels)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.warp is not None:
        config = replace(config, warp_amplitude=args.warp)
    if args.out is not None:
        config = replace(config, out=args.out)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.print_config:
        sys.stdout.write(serialize_config(config))

    try:
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # Parameter combinations rejected deep in the library (for example
        # a Gauss count below the admissible minimum) are config mistakes.
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = config.out if config.out is not None else Path(
        f"{config.experiment.value}_out"
    )
    written = write_outputs(result, out_dir)
    sys.stdout.write(result.report)
    for stem in sorted(written):
        print(f"wrote {written[stem]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
