"""Experiment drivers: interpolation sweeps, kernel studies, Poisson convergence.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding sweep rows, a human-readable report and a
few named scalar metrics.  ``write_outputs`` serializes a result into the
``sweep.csv`` / ``report.txt`` / ``field.csv`` files the command line tool
emits.  Everything is deterministic for a fixed config and seed; only the
``assembly_seconds`` column varies between runs.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .elements import ElementKind, gauss_rule, min_gauss_points, shape_values
from .errors import ConfigError
from .meshes import (
    InterfaceMesh,
    Side,
    jacobian_measure,
    map_to_physical,
    mesh_size,
    segment_pair,
    sine_bump,
    split_unit_square,
    surface_pair,
)
from .mortar import (
    InterfacePair,
    MortarConfig,
    NewtonSettings,
    Scheme,
    assemble,
    compute_transfer,
    interface_transfer,
)
from .poisson import PoissonProblem, broken_norms, build_system, solve
from .rbf import (
    KernelFamily,
    LayoutKind,
    PointLayout,
    basis_diagnostics,
    halton_reference_points,
    interpolation_points,
)

__all__ = [
    "SWEEP_COLUMNS",
    "ExperimentConfig",
    "ExperimentKind",
    "ExperimentResult",
    "SweepRow",
    "load_config",
    "observed_order",
    "parse_config",
    "run_experiment",
    "run_interp_1d",
    "run_interp_surface",
    "run_kernel_study",
    "run_poisson_2d",
    "run_scheme_compare",
    "serialize_config",
    "write_outputs",
]


class ExperimentKind(str, Enum):
    INTERP_1D = "interp_1d"
    INTERP_SURFACE = "interp_surface"
    KERNEL_STUDY = "kernel_study"
    POISSON_2D = "poisson_2d"
    SCHEME_COMPARE = "scheme_compare"


_KERNEL_ALIASES = {
    "ga": KernelFamily.GAUSSIAN,
    "gaussian": KernelFamily.GAUSSIAN,
    "imq": KernelFamily.INV_MULTIQUADRIC,
    "wendland": KernelFamily.WENDLAND_C2,
}

_WARP_VARIANTS = ("bump", "flat")


def _parse_kernel(token: str) -> KernelFamily:
    try:
        return _KERNEL_ALIASES[token.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown kernel {token!r}; expected one of ga, imq, wendland"
        ) from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment run.

    ``ratio`` is the target master/slave mesh-size ratio as an exact
    rational; 2/3 makes the master side the finer one.  ``refinements``
    counts levels in a sweep (and sets the resolution of single-shot
    runs).  The mortar sub-config carries scheme, kernel, collocation
    layout and quadrature choices; experiments that compare schemes or
    kernels override those fields per run and keep the rest.
    """

    experiment: ExperimentKind = ExperimentKind.INTERP_1D
    refinements: int = 5
    ratio: Fraction = Fraction(2, 3)
    mortar: MortarConfig = field(default_factory=MortarConfig)
    function: str = "default"
    warp_amplitude: float = 0.15
    warp_variant: str = "bump"
    seed: int = 0
    out: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "experiment", ExperimentKind(self.experiment))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if not 1 <= self.refinements <= 8:
            raise ConfigError(
                f"refinements must lie in [1, 8], got {self.refinements}"
            )
        if self.ratio <= 0:
            raise ConfigError(f"mesh ratio must be positive, got {self.ratio}")
        if self.warp_variant not in _WARP_VARIANTS:
            raise ConfigError(
                f"warp_variant must be one of {_WARP_VARIANTS}, "
                f"got {self.warp_variant!r}"
            )
        if self.warp_amplitude < 0.0:
            raise ConfigError("warp_amplitude must be non-negative")

    def element_counts(self, level: int) -> tuple[int, int]:
        """(master, slave) element counts at a refinement level.

        The denominator of the ratio scales the master count so that
        h_master/h_slave equals the configured rational exactly on a
        shared span.
        """
        return (
            self.ratio.denominator * 2**level,
            self.ratio.numerator * 2**level,
        )


# Column order of sweep.csv.  The header names are part of the output
# contract, so they stay fixed even where the Python attribute is named
# differently (n_M <-> n_colloc).
SWEEP_COLUMNS = (
    "level",
    "h_master",
    "h_slave",
    "scheme",
    "kernel",
    "n_M",
    "n_gauss",
    "l2_error",
    "h1_error",
    "rmse",
    "cond_estimate",
    "assembly_seconds",
    "dropped_fraction",
)


@dataclass(frozen=True)
class SweepRow:
    level: int
    h_master: float
    h_slave: float
    scheme: str
    kernel: str
    n_colloc: int
    n_gauss: int
    l2_error: float
    h1_error: float | None = None
    rmse: float | None = None
    cond_estimate: float | None = None
    assembly_seconds: float = 0.0
    dropped_fraction: float = 0.0
    #: Extra (name, value) pairs appended after the standard columns;
    #: every row of one result must carry the same names.
    extra: tuple[tuple[str, str], ...] = ()

    def record(self) -> list[str]:
        cells = [
            str(self.level),
            repr(float(self.h_master)),
            repr(float(self.h_slave)),
            self.scheme,
            self.kernel,
            str(self.n_colloc),
            str(self.n_gauss),
            repr(float(self.l2_error)),
        ]
        for value in (self.h1_error, self.rmse, self.cond_estimate):
            cells.append("" if value is None else repr(float(value)))
        cells.append(repr(float(self.assembly_seconds)))
        cells.append(repr(float(self.dropped_fraction)))
        cells.extend(value for _, value in self.extra)
        return cells


@dataclass
class ExperimentResult:
    rows: list[SweepRow]
    report: str
    orders: dict[str, float] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)
    #: Optional point-wise error samples, columns (x, y[, z], abs_error).
    field_points: np.ndarray | None = None
    extra_columns: tuple[str, ...] = ()


def observed_order(h_values, errors) -> float:
    """Least-squares slope of log(error) vs log(h) over the finest levels.

    Uses the last three levels when available, which skips pre-asymptotic
    behavior on coarse grids.
    """
    h = np.asarray(h_values, float)
    e = np.asarray(errors, float)
    if h.size < 2:
        raise ValueError("order estimation needs at least two levels")
    n = min(3, h.size)
    if np.any(e[-n:] <= 0.0):
        return float("nan")
    return float(np.polyfit(np.log(h[-n:]), np.log(e[-n:]), 1)[0])


def _timed_assembly(pair: InterfacePair, config: MortarConfig):
    """Assemble three times, return (matrices, median wall seconds)."""
    times = []
    mats = None
    for _ in range(3):
        start = time.perf_counter()
        mats = assemble(pair, config)
        times.append(time.perf_counter() - start)
    return mats, float(np.median(times))


# ---------------------------------------------------------------------------
# Analytic test functions


def _function_1d(name: str) -> Callable:
    if name in ("default", "sin4_plus_square"):
        return lambda x: np.sin(4.0 * x) + x * x
    raise ConfigError(f"unknown 1D test function {name!r}")


def _surface_function(name: str, default: str) -> Callable:
    """Surface test fields; the default differs between flat and warped runs."""
    resolved = default if name == "default" else name
    if resolved == "sin4x_cos4y":
        return lambda p: np.sin(4.0 * p[..., 0]) * np.cos(4.0 * p[..., 1])
    if resolved == "sinx_plus_cosy":
        return lambda p: np.sin(p[..., 0]) + np.cos(p[..., 1])
    raise ConfigError(f"unknown surface test function {name!r}")


def _poisson_functions(name: str):
    """Source, exact solution and gradient of the manufactured problem."""
    if name not in ("default", "bubble16"):
        raise ConfigError(f"unknown Poisson test function {name!r}")

    def source(x, y):
        return 32.0 * (x * (1.0 - x) + y * (1.0 - y))

    def exact(x, y):
        return 16.0 * x * y * (1.0 - x) * (1.0 - y)

    def exact_gradient(x, y):
        gx = 16.0 * y * (1.0 - y) * (1.0 - 2.0 * x)
        gy = 16.0 * x * (1.0 - x) * (1.0 - 2.0 * y)
        return np.stack([gx, gy], axis=-1)

    return source, exact, exact_gradient


def _transfer_l2_error(slave: InterfaceMesh, values: np.ndarray, fn: Callable) -> float:
    """L2 norm of (transferred FE field - exact) over the slave interface."""
    n_1d = 10
    rule = gauss_rule(
        slave.kind, n_1d if slave.kind.ref_dim == 1 else n_1d * n_1d
    )
    basis = shape_values(slave.kind, rule.points)
    total = 0.0
    for elem in range(slave.n_elems):
        phys = map_to_physical(slave, elem, rule.points)
        measure = jacobian_measure(slave, elem, rule.points)
        approx = basis @ values[slave.connectivity[elem]]
        if slave.kind.ref_dim == 1:
            exact = fn(phys[:, 0])
        else:
            exact = fn(phys)
        total += np.sum(rule.weights * measure * (approx - exact) ** 2)
    return float(np.sqrt(total))


def _scheme_gauss_count(kind: ElementKind, config: MortarConfig) -> int:
    if config.n_gauss is not None:
        return config.n_gauss
    return min_gauss_points(kind)


def _transfer_field(pair, mortar_config, master_values):
    mats, seconds = _timed_assembly(pair, mortar_config)
    operator = compute_transfer(mats)
    values = interface_transfer(operator, master_values)
    return values, seconds, mats.stats


# ---------------------------------------------------------------------------
# Experiments


def run_interp_1d(config: ExperimentConfig) -> ExperimentResult:
    """Transfer-error convergence on 1D pairs over [-1, 1].

    Runs linear and quadratic segment pairs through SB, EB and RB (with
    the configured kernel plus Wendland for the smoothness contrast) and
    reports observed orders of the slave-side L2 error.
    """
    fn = _function_1d(config.function)
    span = (-1.0, 1.0)
    rb_kernels = [config.mortar.kernel_family]
    if KernelFamily.WENDLAND_C2 not in rb_kernels:
        rb_kernels.append(KernelFamily.WENDLAND_C2)

    rows: list[SweepRow] = []
    orders: dict[str, float] = {}
    metrics: dict[str, float] = {}
    lines = ["1D interpolation transfer study", ""]
    for kind in (ElementKind.SEG2, ElementKind.SEG3):
        runs: list[tuple[str, MortarConfig]] = [
            ("sb", replace(config.mortar, scheme=Scheme.SB1D)),
            ("eb", replace(config.mortar, scheme=Scheme.EB)),
        ]
        for kernel in rb_kernels:
            runs.append(
                ("rb", replace(config.mortar, scheme=Scheme.RB, kernel_family=kernel))
            )
        for scheme_token, mortar in runs:
            errors = []
            h_slave = []
            for level in range(config.refinements):
                n_master, n_slave = config.element_counts(level)
                master, slave = segment_pair(n_master, n_slave, kind, span=span)
                pair = InterfacePair(master, slave)
                values, seconds, stats = _transfer_field(
                    pair, mortar, fn(master.nodes[:, 0])
                )
                err = _transfer_l2_error(slave, values, fn)
                errors.append(err)
                h_slave.append(mesh_size(slave))
                kernel_token = (
                    mortar.kernel_family.value if scheme_token == "rb" else ""
                )
                rows.append(
                    SweepRow(
                        level=level,
                        h_master=mesh_size(master),
                        h_slave=h_slave[-1],
                        scheme=scheme_token,
                        kernel=kernel_token,
                        n_colloc=(
                            mortar.layout.n_per_edge if scheme_token == "rb" else 0
                        ),
                        n_gauss=_scheme_gauss_count(kind, mortar),
                        l2_error=err,
                        assembly_seconds=seconds,
                        dropped_fraction=stats.dropped_fraction,
                    )
                )
            label = f"{kind.value}/{scheme_token}"
            if scheme_token == "rb":
                label += f"/{mortar.kernel_family.value}"
            if config.refinements >= 2:
                orders[label] = observed_order(h_slave, errors)
            formatted = ", ".join(f"{e:.4e}" for e in errors)
            order_text = f"{orders[label]:.3f}" if label in orders else "n/a"
            lines.append(f"{label}: errors [{formatted}], order {order_text}")
            metrics[f"finest/{label}"] = errors[-1]
        lines.append("")
    ga_key = f"finest/seg3/rb/{config.mortar.kernel_family.value}"
    wl_key = "finest/seg3/rb/wendland"
    if ga_key in metrics and wl_key in metrics and ga_key != wl_key:
        lines.append(
            "finest-level quadratic-segment comparison: "
            f"{config.mortar.kernel_family.value} {metrics[ga_key]:.4e} "
            f"vs wendland {metrics[wl_key]:.4e}"
        )
    return ExperimentResult(rows, "\n".join(lines).strip() + "\n", orders, metrics)


def run_interp_surface(config: ExperimentConfig) -> ExperimentResult:
    """Flat surface sweeps plus a warped non-conforming comparison.

    The flat part refines bilinear and serendipity quadrilateral pairs
    and runs EB against RB at 4 and 6 collocation points per edge.  The
    warped part runs one pair (both role assignments) with an identical
    out-of-plane bump on both sides, comparing RB and EB L2 errors.
    """
    flat_fn = _surface_function(config.function, "sin4x_cos4y")
    warped_fn = _surface_function(config.function, "sinx_plus_cosy")
    rows: list[SweepRow] = []
    orders: dict[str, float] = {}
    metrics: dict[str, float] = {}
    lines = ["surface interpolation transfer study", "", "flat sweeps:"]

    flat_levels = min(config.refinements, 4)
    for kind in (ElementKind.QUAD4, ElementKind.QUAD8):
        runs = [("eb", replace(config.mortar, scheme=Scheme.EB))]
        for n_colloc in (4, 6):
            runs.append(
                (
                    "rb",
                    replace(
                        config.mortar,
                        scheme=Scheme.RB,
                        layout=replace(config.mortar.layout, n_per_edge=n_colloc),
                    ),
                )
            )
        for scheme_token, mortar in runs:
            errors = []
            h_slave = []
            for level in range(flat_levels):
                n_master, n_slave = config.element_counts(level)
                master, slave = surface_pair(n_master, n_slave, kind)
                pair = InterfacePair(master, slave)
                values, seconds, stats = _transfer_field(
                    pair, mortar, flat_fn(master.nodes)
                )
                err = _transfer_l2_error(slave, values, flat_fn)
                errors.append(err)
                h_slave.append(mesh_size(slave))
                rows.append(
                    SweepRow(
                        level=level,
                        h_master=mesh_size(master),
                        h_slave=h_slave[-1],
                        scheme=scheme_token,
                        kernel=(
                            mortar.kernel_family.value if scheme_token == "rb" else ""
                        ),
                        n_colloc=(
                            mortar.layout.n_per_edge if scheme_token == "rb" else 0
                        ),
                        n_gauss=_scheme_gauss_count(kind, mortar),
                        l2_error=err,
                        assembly_seconds=seconds,
                        dropped_fraction=stats.dropped_fraction,
                    )
                )
            label = f"{kind.value}/{scheme_token}"
            if scheme_token == "rb":
                label += f"/{mortar.layout.n_per_edge}"
            if flat_levels >= 2:
                orders[label] = observed_order(h_slave, errors)
            for idx, err in enumerate(errors):
                metrics[f"flat/{label}/level{idx}"] = err
            formatted = ", ".join(f"{e:.4e}" for e in errors)
            order_text = f"{orders[label]:.3f}" if label in orders else "n/a"
            lines.append(f"  {label}: errors [{formatted}], order {order_text}")

    lines += ["", "warped pair (identical bump on both sides):"]
    amplitude = config.warp_amplitude if config.warp_variant == "bump" else 0.0
    warp = sine_bump(amplitude)
    top_level = config.refinements - 1
    counts = config.element_counts(top_level)
    fine, coarse = max(counts), min(counts)
    for n_master, n_slave, role in (
        (coarse, fine, "coarse_master"),
        (fine, coarse, "fine_master"),
    ):
        master, slave = surface_pair(
            n_master, n_slave, ElementKind.QUAD4, warp_master=warp, warp_slave=warp
        )
        pair = InterfacePair(master, slave)
        for scheme_token, mortar in (
            ("rb", replace(config.mortar, scheme=Scheme.RB)),
            ("eb", replace(config.mortar, scheme=Scheme.EB)),
        ):
            values, seconds, stats = _transfer_field(
                pair, mortar, warped_fn(master.nodes)
            )
            err = _transfer_l2_error(slave, values, warped_fn)
            metrics[f"warped/{role}/{scheme_token}"] = err
            rows.append(
                SweepRow(
                    level=top_level,
                    h_master=mesh_size(master),
                    h_slave=mesh_size(slave),
                    scheme=scheme_token,
                    kernel=(
                        mortar.kernel_family.value if scheme_token == "rb" else ""
                    ),
                    n_colloc=(
                        mortar.layout.n_per_edge if scheme_token == "rb" else 0
                    ),
                    n_gauss=_scheme_gauss_count(ElementKind.QUAD4, mortar),
                    l2_error=err,
                    assembly_seconds=seconds,
                    dropped_fraction=stats.dropped_fraction,
                )
            )
        rb_err = metrics[f"warped/{role}/rb"]
        eb_err = metrics[f"warped/{role}/eb"]
        lines.append(
            f"  {role}: rb {rb_err:.4e}  eb {eb_err:.4e}  ratio {rb_err / eb_err:.4f}"
        )
    return ExperimentResult(rows, "\n".join(lines) + "\n", orders, metrics)


def _fill_distance(mesh: InterfaceMesh, elem: int, layout: PointLayout) -> float:
    """Largest distance from a dense element sample to the collocation set."""
    kind = mesh.kind
    colloc = map_to_physical(mesh, elem, interpolation_points(kind, layout))
    probes = map_to_physical(mesh, elem, halton_reference_points(kind, 400))
    return float(cdist(np.atleast_2d(probes), np.atleast_2d(colloc)).min(axis=1).max())


def run_kernel_study(config: ExperimentConfig) -> ExperimentResult:
    """Basis-interpolation quality per kernel, layout and point count.

    Fits one master element per element family and records the RMSE of the
    rescaled basis reproduction together with the kernel matrix condition
    estimate.  Two shape-parameter policies run side by side: the element
    circumdiameter (default) and twice the collocation fill distance.
    """
    rows: list[SweepRow] = []
    metrics: dict[str, float] = {}
    lines = ["kernel and layout study", ""]
    extra_columns = ("element", "layout", "epsilon_policy")

    meshes = (
        ("seg3", segment_pair(2, 3, ElementKind.SEG3)[0]),
        ("quad4", surface_pair(2, 3, ElementKind.QUAD4)[0]),
    )
    for element_label, mesh in meshes:
        h_elem = mesh_size(mesh)
        for family in KernelFamily:
            for variant in (LayoutKind.UNIFORM, LayoutKind.SINE):
                for n_colloc in range(3, 11):
                    layout = PointLayout(variant, n_colloc)
                    for policy in ("h_elem", "2_fill"):
                        epsilon = None
                        if policy == "2_fill":
                            epsilon = 2.0 * _fill_distance(mesh, 0, layout)
                        start = time.perf_counter()
                        diag = basis_diagnostics(
                            mesh, 0, layout, family, epsilon=epsilon
                        )
                        seconds = time.perf_counter() - start
                        key = (
                            f"{element_label}/{family.value}/{variant.value}"
                            f"/{n_colloc}/{policy}"
                        )
                        metrics[key] = diag.rmse
                        metrics[f"cond/{key}"] = diag.condition_estimate
                        rows.append(
                            SweepRow(
                                level=n_colloc - 3,
                                h_master=h_elem,
                                h_slave=h_elem,
                                scheme="rb",
                                kernel=family.value,
                                n_colloc=n_colloc,
                                n_gauss=0,
                                l2_error=diag.rmse,
                                rmse=diag.rmse,
                                cond_estimate=diag.condition_estimate,
                                assembly_seconds=seconds,
                                extra=(
                                    ("element", element_label),
                                    ("layout", variant.value),
                                    ("epsilon_policy", policy),
                                ),
                            )
                        )
        for family in KernelFamily:
            uni = [
                metrics[f"{element_label}/{family.value}/uniform/{n}/h_elem"]
                for n in range(6, 11)
            ]
            mod = [
                metrics[f"{element_label}/{family.value}/sine/{n}/h_elem"]
                for n in range(6, 11)
            ]
            lines.append(
                f"{element_label} {family.value}: uniform rmse "
                f"{uni[0]:.3e}..{uni[-1]:.3e}, clustered {mod[0]:.3e}..{mod[-1]:.3e}"
            )
        lines.append("")
    return ExperimentResult(
        rows,
        "\n".join(lines).strip() + "\n",
        metrics=metrics,
        extra_columns=extra_columns,
    )


def run_poisson_2d(config: ExperimentConfig) -> ExperimentResult:
    """Coupled Poisson convergence on a split unit square.

    Sweeps a flat-interface pairing over the configured refinements for
    RB, EB and SB, then solves one curved-interface problem at the finest
    resolution and exports point-wise nodal errors.
    """
    source, exact, exact_gradient = _poisson_functions(config.function)
    rows: list[SweepRow] = []
    orders: dict[str, float] = {}
    metrics: dict[str, float] = {}
    lines = ["coupled Poisson study (split unit square)", "", "flat interface:"]

    base_scale = 4
    runs = [
        ("rb", replace(config.mortar, scheme=Scheme.RB)),
        ("eb", replace(config.mortar, scheme=Scheme.EB)),
        ("sb", replace(config.mortar, scheme=Scheme.SB1D)),
    ]
    for scheme_token, mortar in runs:
        l2_errors = []
        h1_errors = []
        h_slave = []
        for level in range(config.refinements):
            n_master, n_slave = config.element_counts(level)
            master, slave = split_unit_square(
                base_scale * n_master, base_scale * n_slave
            )
            problem = PoissonProblem(
                master,
                slave,
                source,
                exact=exact,
                exact_gradient=exact_gradient,
            )
            build_times = []
            for _ in range(3):
                start = time.perf_counter()
                build_system(problem, mortar)
                build_times.append(time.perf_counter() - start)
            seconds = float(np.median(build_times))
            fields = solve(problem, mortar)
            report = broken_norms(problem, fields)
            l2_errors.append(report.l2_broken)
            h1_errors.append(report.h1_broken)
            h_slave.append(mesh_size(slave))
            metrics[f"flat/{scheme_token}/constraint/level{level}"] = (
                fields.constraint_residual
            )
            rows.append(
                SweepRow(
                    level=level,
                    h_master=mesh_size(master),
                    h_slave=h_slave[-1],
                    scheme=scheme_token,
                    kernel=(
                        mortar.kernel_family.value if scheme_token == "rb" else ""
                    ),
                    n_colloc=(
                        mortar.layout.n_per_edge if scheme_token == "rb" else 0
                    ),
                    n_gauss=_scheme_gauss_count(ElementKind.SEG2, mortar),
                    l2_error=report.l2_broken,
                    h1_error=report.h1_broken,
                    assembly_seconds=seconds,
                    dropped_fraction=0.0,
                )
            )
            metrics[f"flat/{scheme_token}/l2/level{level}"] = report.l2_broken
        if config.refinements >= 2:
            orders[f"{scheme_token}/l2"] = observed_order(h_slave, l2_errors)
            orders[f"{scheme_token}/h1"] = observed_order(h_slave, h1_errors)
        formatted = ", ".join(f"{e:.4e}" for e in l2_errors)
        lines.append(f"  {scheme_token}: broken L2 [{formatted}]")
        if f"{scheme_token}/l2" in orders:
            lines.append(
                f"  {scheme_token}: observed orders L2 "
                f"{orders[f'{scheme_token}/l2']:.3f}, "
                f"H1 {orders[f'{scheme_token}/h1']:.3f}"
            )

    lines += ["", "curved interface:"]
    if config.warp_variant == "bump" and config.warp_amplitude > 0.0:
        amplitude = config.warp_amplitude
    else:
        amplitude = 0.0
    curve = (lambda x: amplitude * np.sin(np.pi * x)) if amplitude else None
    n_master, n_slave = config.element_counts(config.refinements - 1)
    master, slave = split_unit_square(
        base_scale * n_master, base_scale * n_slave, interface_offset=curve
    )
    problem = PoissonProblem(
        master, slave, source, exact=exact, exact_gradient=exact_gradient
    )
    fields = solve(problem, config.mortar)
    report = broken_norms(problem, fields)
    metrics["curved/constraint_residual"] = fields.constraint_residual
    metrics["curved/l2"] = report.l2_broken
    metrics["curved/h1"] = report.h1_broken
    lines.append(
        f"  scheme {config.mortar.scheme.value}: broken L2 {report.l2_broken:.4e}, "
        f"H1 {report.h1_broken:.4e}, constraint residual "
        f"{fields.constraint_residual:.3e}"
    )

    samples = []
    for mesh, values in (
        (master, fields.master_values),
        (slave, fields.slave_values),
    ):
        truth = exact(mesh.nodes[:, 0], mesh.nodes[:, 1])
        samples.append(
            np.column_stack([mesh.nodes, np.abs(values - truth)])
        )
    field_points = np.vstack(samples)
    return ExperimentResult(
        rows, "\n".join(lines) + "\n", orders, metrics, field_points
    )


def run_scheme_compare(config: ExperimentConfig) -> ExperimentResult:
    """Accuracy and assembly cost against quadrature density on one pair.

    Builds a fixed 1D pair whose interior slave nodes are jittered (with
    the configured seed) so no slave element lines up with the master
    grid, then sweeps the Gauss count.  Errors are max-entry differences
    of the transfer operator against the exact-intersection reference.
    """
    n_master, n_slave = config.element_counts(2)
    master, _ = segment_pair(n_master, n_slave, ElementKind.SEG2, span=(-1.0, 1.0))
    rng = np.random.default_rng(config.seed)
    h_slave = 2.0 / n_slave
    xs = np.linspace(-1.0, 1.0, n_slave + 1)
    xs[1:-1] += rng.uniform(-0.3, 0.3, n_slave - 1) * h_slave
    connectivity = np.column_stack([np.arange(n_slave), np.arange(1, n_slave + 1)])
    slave = InterfaceMesh(
        np.column_stack([xs, np.zeros_like(xs)]),
        connectivity,
        ElementKind.SEG2,
        Side.SLAVE,
    )
    pair = InterfacePair(master, slave)

    def dense_transfer(mats):
        matrix = compute_transfer(mats).matrix
        return matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix)

    reference = dense_transfer(
        assemble(pair, replace(config.mortar, scheme=Scheme.SB1D, n_gauss=2))
    )

    rows: list[SweepRow] = []
    metrics: dict[str, float] = {}
    lines = ["scheme comparison on a jittered 1D pair", ""]
    gauss_counts = (2, 4, 8, 16, 32)
    schemes = (
        ("sb", Scheme.SB1D),
        ("eb", Scheme.EB),
        ("rb", Scheme.RB),
    )
    for level, n_gauss in enumerate(gauss_counts):
        for scheme_token, scheme in schemes:
            mortar = replace(config.mortar, scheme=scheme, n_gauss=n_gauss)
            mats, seconds = _timed_assembly(pair, mortar)
            err = float(np.abs(dense_transfer(mats) - reference).max())
            metrics[f"{scheme_token}/n_gauss{n_gauss}"] = err
            metrics[f"time/{scheme_token}/n_gauss{n_gauss}"] = seconds
            rows.append(
                SweepRow(
                    level=level,
                    h_master=mesh_size(master),
                    h_slave=mesh_size(slave),
                    scheme=scheme_token,
                    kernel=(
                        mortar.kernel_family.value if scheme_token == "rb" else ""
                    ),
                    n_colloc=(
                        mortar.layout.n_per_edge if scheme_token == "rb" else 0
                    ),
                    n_gauss=n_gauss,
                    l2_error=err,
                    assembly_seconds=seconds,
                    dropped_fraction=mats.stats.dropped_fraction,
                )
            )
    for scheme_token, _ in schemes:
        errs = ", ".join(
            f"{metrics[f'{scheme_token}/n_gauss{n}']:.3e}" for n in gauss_counts
        )
        lines.append(f"{scheme_token}: operator error vs exact reference [{errs}]")
    lines.append("")
    lines.append(
        "assembly seconds are medians of three repetitions; the transfer "
        "solve is excluded"
    )
    return ExperimentResult(rows, "\n".join(lines) + "\n", metrics=metrics)


_RUNNERS = {
    ExperimentKind.INTERP_1D: run_interp_1d,
    ExperimentKind.INTERP_SURFACE: run_interp_surface,
    ExperimentKind.KERNEL_STUDY: run_kernel_study,
    ExperimentKind.POISSON_2D: run_poisson_2d,
    ExperimentKind.SCHEME_COMPARE: run_scheme_compare,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch to the configured experiment's runner."""
    return _RUNNERS[config.experiment](config)


# ---------------------------------------------------------------------------
# Config files


def serialize_config(config: ExperimentConfig) -> str:
    """Render a config as the line-oriented key = value format."""
    mortar = config.mortar
    lines = [
        f"experiment = {config.experiment.value}",
        f"refinements = {config.refinements}",
        f"ratio = {config.ratio}",
        f"scheme = {mortar.scheme.value}",
        f"kernel = {mortar.kernel_family.value}",
        f"layout = {mortar.layout.variant.value}",
        f"n_m = {mortar.layout.n_per_edge}",
        f"n_gauss = {'default' if mortar.n_gauss is None else mortar.n_gauss}",
        f"support_tol = {mortar.support_tol!r}",
        f"epsilon = {'default' if mortar.epsilon is None else repr(mortar.epsilon)}",
        f"newton_tol = {mortar.newton.tol!r}",
        f"newton_max_iter = {mortar.newton.max_iter}",
        f"function = {config.function}",
        f"warp_amplitude = {config.warp_amplitude!r}",
        f"warp_variant = {config.warp_variant}",
        f"seed = {config.seed}",
    ]
    if config.out is not None:
        lines.append(f"out = {config.out}")
    return "\n".join(lines) + "\n"


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {value!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse the key = value config format into an :class:`ExperimentConfig`.

    Blank lines and lines starting with ``#`` are ignored.  Unknown keys
    and malformed values raise :class:`ConfigError`.  Serializing the
    result reproduces the canonical form of the same settings.
    """
    settings: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number} is not a key = value pair: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in settings:
            raise ConfigError(f"duplicate key {key!r} on line {number}")
        settings[key] = value

    known = {
        "experiment",
        "refinements",
        "ratio",
        "scheme",
        "kernel",
        "layout",
        "n_m",
        "n_gauss",
        "support_tol",
        "epsilon",
        "newton_tol",
        "newton_max_iter",
        "function",
        "warp_amplitude",
        "warp_variant",
        "seed",
        "out",
    }
    unknown = sorted(set(settings) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    defaults = ExperimentConfig()
    mortar_defaults = defaults.mortar

    try:
        experiment = ExperimentKind(settings.get("experiment", defaults.experiment))
    except ValueError:
        raise ConfigError(
            f"unknown experiment {settings['experiment']!r}"
        ) from None
    try:
        scheme = Scheme(settings.get("scheme", mortar_defaults.scheme))
    except ValueError:
        raise ConfigError(f"unknown scheme {settings['scheme']!r}") from None
    kernel = (
        _parse_kernel(settings["kernel"])
        if "kernel" in settings
        else mortar_defaults.kernel_family
    )
    try:
        layout_variant = LayoutKind(
            settings.get("layout", mortar_defaults.layout.variant)
        )
    except ValueError:
        raise ConfigError(f"unknown layout {settings['layout']!r}") from None

    if "ratio" in settings:
        try:
            ratio = Fraction(settings["ratio"])
        except (ValueError, ZeroDivisionError):
            raise ConfigError(
                f"ratio expects a rational like 2/3, got {settings['ratio']!r}"
            ) from None
    else:
        ratio = defaults.ratio

    n_gauss_text = settings.get("n_gauss", "default")
    n_gauss = None if n_gauss_text == "default" else _parse_int("n_gauss", n_gauss_text)
    epsilon_text = settings.get("epsilon", "default")
    epsilon = (
        None if epsilon_text == "default" else _parse_float("epsilon", epsilon_text)
    )

    try:
        layout = PointLayout(
            layout_variant,
            _parse_int("n_m", settings["n_m"])
            if "n_m" in settings
            else mortar_defaults.layout.n_per_edge,
        )
        mortar = MortarConfig(
            scheme=scheme,
            n_gauss=n_gauss,
            kernel_family=kernel,
            layout=layout,
            support_tol=(
                _parse_float("support_tol", settings["support_tol"])
                if "support_tol" in settings
                else mortar_defaults.support_tol
            ),
            newton=NewtonSettings(
                tol=(
                    _parse_float("newton_tol", settings["newton_tol"])
                    if "newton_tol" in settings
                    else mortar_defaults.newton.tol
                ),
                max_iter=(
                    _parse_int("newton_max_iter", settings["newton_max_iter"])
                    if "newton_max_iter" in settings
                    else mortar_defaults.newton.max_iter
                ),
            ),
            epsilon=epsilon,
        )
        return ExperimentConfig(
            experiment=experiment,
            refinements=(
                _parse_int("refinements", settings["refinements"])
                if "refinements" in settings
                else defaults.refinements
            ),
            ratio=ratio,
            mortar=mortar,
            function=settings.get("function", defaults.function),
            warp_amplitude=(
                _parse_float("warp_amplitude", settings["warp_amplitude"])
                if "warp_amplitude" in settings
                else defaults.warp_amplitude
            ),
            warp_variant=settings.get("warp_variant", defaults.warp_variant),
            seed=(
                _parse_int("seed", settings["seed"])
                if "seed" in settings
                else defaults.seed
            ),
            out=Path(settings["out"]) if "out" in settings else None,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# Output files


def write_outputs(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write sweep.csv, report.txt and (when present) field.csv.

    Returns the paths that were written, keyed by file stem.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    sweep_path = out / "sweep.csv"
    with sweep_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(SWEEP_COLUMNS) + list(result.extra_columns))
        for row in result.rows:
            writer.writerow(row.record())
    written["sweep"] = sweep_path

    report_path = out / "report.txt"
    report = result.report
    if result.orders:
        order_lines = ["", "observed orders (finest-3 least squares):"]
        for label in sorted(result.orders):
            order_lines.append(f"  {label}: {result.orders[label]:.3f}")
        report = report.rstrip("\n") + "\n" + "\n".join(order_lines) + "\n"
    report_path.write_text(report)
    written["report"] = report_path

    if result.field_points is not None:
        field_path = out / "field.csv"
        n_coords = result.field_points.shape[1] - 1
        header = ["x", "y", "z"][:n_coords] + ["abs_error"]
        with field_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for sample in result.field_points:
                writer.writerow([repr(float(v)) for v in sample])
        written["field"] = field_path
    return written
