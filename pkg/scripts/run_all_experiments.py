#!/usr/bin/env python3
"""Run every experiment with default settings into one output tree.

Each experiment writes sweep.csv and report.txt (plus field.csv for the
coupled Poisson study) under <out>/<experiment>/.  Pass --quick to cut
refinement depth for a fast smoke run.
"""

import argparse
import sys
import time
from pathlib import Path

from mortar_rbf.experiments import (
    ExperimentConfig,
    ExperimentKind,
    run_experiment,
    write_outputs,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("experiment_results"))
    parser.add_argument(
        "--quick",
        action="store_true",
        help="use fewer refinement levels everywhere",
    )
    args = parser.parse_args()

    refinements = {
        ExperimentKind.INTERP_1D: 3 if args.quick else 5,
        ExperimentKind.INTERP_SURFACE: 2 if args.quick else 3,
        ExperimentKind.KERNEL_STUDY: 1,
        ExperimentKind.POISSON_2D: 2 if args.quick else 4,
        ExperimentKind.SCHEME_COMPARE: 3,
    }
    for kind in ExperimentKind:
        config = ExperimentConfig(experiment=kind, refinements=refinements[kind])
        start = time.perf_counter()
        result = run_experiment(config)
        elapsed = time.perf_counter() - start
        written = write_outputs(result, args.out / kind.value)
        print(f"{kind.value}: {len(result.rows)} rows in {elapsed:.1f}s")
        for path in sorted(written.values()):
            print(f"  {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
