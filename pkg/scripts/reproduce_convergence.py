#!/usr/bin/env python3
"""Print the headline convergence tables: 1D transfer and coupled Poisson.

Runs the 1D interpolation study and the flat-interface Poisson sweep with
default settings and prints per-level errors with observed orders, so the
main quantitative claims can be checked from a terminal without touching
CSV files.
"""

import argparse
import sys

from mortar_rbf.experiments import (
    ExperimentConfig,
    ExperimentKind,
    run_experiment,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--levels", type=int, default=None)
    args = parser.parse_args()

    for kind, default_levels in (
        (ExperimentKind.INTERP_1D, 5),
        (ExperimentKind.POISSON_2D, 4),
    ):
        config = ExperimentConfig(
            experiment=kind,
            refinements=args.levels if args.levels else default_levels,
        )
        result = run_experiment(config)
        print(result.report)
        if result.orders:
            print("observed orders:")
            for label in sorted(result.orders):
                print(f"  {label}: {result.orders[label]:.3f}")
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
