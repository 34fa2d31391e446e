"""Mortar coupling matrices for non-conforming interface pairs.

Three quadrature schemes fill the same two matrices, the slave-side
multiplier mass matrix and the master-slave coupling matrix:

* ``rb``: the master basis is replaced by a rescaled kernel interpolant,
  so slave Gauss points never need to be projected onto the master;
* ``eb``: slave Gauss points are Newton-projected onto candidate master
  elements and points landing outside every master are sorted out;
* ``sb``: exact interval intersection, available for 1D interfaces only,
  used as the reference oracle.

Whatever the scheme, both matrices integrate over the identical set of
surviving Gauss points with identical weights.  That shared-point rule is
what makes the transfer operator reproduce constants, so the pointwise
schemes enforce it structurally: each surviving point is assigned to
exactly one master element and contributes to both matrices at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .elements import (
    ElementKind,
    gauss_rule,
    min_gauss_points,
    node_reference_coords,
    shape_gradients,
    shape_second_derivatives,
    shape_values,
)
from .errors import (
    IllConditionedKernelError,
    InvalidGeometryError,
    SingularOperatorError,
)
from .meshes import (
    InterfaceMesh,
    element_circumdiameter,
    element_nodes,
    jacobian_measure,
    map_to_physical,
)
from .rbf import (
    KernelFamily,
    PointLayout,
    RbfInterpolant,
    evaluate_rescaled_masked,
    fit_master_interpolant,
)

#: Newton iterates are clamped inside the widest reference box the shape
#: routines accept, so evaluation never fails mid-iteration.
_NEWTON_CLAMP = 1.45

#: Transfer operators with at most this many entries are stored dense.
_DENSE_TRANSFER_LIMIT = 1_000_000

#: Intersection intervals shorter than this fraction of the interface span
#: are discarded as degenerate slivers.
_SLIVER_REL = 1e-14


class Scheme(str, Enum):
    """Quadrature scheme used to build the coupling matrices."""

    RB = "rb"
    EB = "eb"
    SB1D = "sb"


@dataclass(frozen=True)
class NewtonSettings:
    """Stopping rule for point projection onto master elements."""

    tol: float = 1e-10
    max_iter: int = 20

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("newton tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("newton iteration budget must be at least 1")


@dataclass(frozen=True)
class MortarConfig:
    """Assembly options shared by every scheme.

    ``n_gauss`` counts Gauss points per slave element (total, so tensor
    rules on quadrilaterals take 4, 9, 16, ...).  ``None`` picks the
    minimum admissible for the slave element degree.  ``epsilon`` forces a
    kernel shape parameter; by default each master element uses its own
    circumdiameter.
    """

    scheme: Scheme = Scheme.RB
    n_gauss: int | None = None
    kernel_family: KernelFamily = KernelFamily.GAUSSIAN
    layout: PointLayout = field(default_factory=PointLayout)
    support_tol: float = 1e-6
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    epsilon: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "kernel_family", KernelFamily(self.kernel_family))
        if not 0.0 <= self.support_tol <= 0.1:
            raise ValueError(
                f"support_tol must lie in [0, 0.1], got {self.support_tol}"
            )
        if self.n_gauss is not None and self.n_gauss < 1:
            raise ValueError("n_gauss must be positive")
        if self.epsilon is not None and self.epsilon <= 0.0:
            raise ValueError("epsilon override must be positive")


@dataclass(frozen=True)
class InterfacePair:
    """A master and a slave interface mesh glued by mortar conditions.

    ``gap_tolerance`` inflates bounding boxes during contact search; it
    must cover the largest geometric gap between the two surfaces (warped
    or offset interfaces).  The default, half the largest element
    circumdiameter on either side, covers moderate warps; pass an explicit
    value for larger offsets.
    """

    master: InterfaceMesh
    slave: InterfaceMesh
    gap_tolerance: float | None = None

    def __post_init__(self):
        if self.master.kind.ref_dim != self.slave.kind.ref_dim:
            raise InvalidGeometryError(
                "master and slave interfaces must both be curves or both "
                f"be surfaces, got {self.master.kind.value} and "
                f"{self.slave.kind.value}"
            )
        if self.master.nodes.shape[1] != self.slave.nodes.shape[1]:
            raise InvalidGeometryError(
                "master and slave interfaces live in different ambient "
                "dimensions"
            )
        if self.gap_tolerance is not None and self.gap_tolerance < 0.0:
            raise ValueError("gap_tolerance must be non-negative")

    @property
    def resolved_gap_tolerance(self) -> float:
        if self.gap_tolerance is not None:
            return self.gap_tolerance
        largest = 0.0
        for mesh in (self.master, self.slave):
            for elem in range(mesh.n_elems):
                largest = max(largest, element_circumdiameter(mesh, elem))
        return 0.5 * largest


@dataclass
class AssemblyStats:
    """Bookkeeping emitted by every assembly run."""

    pairs_visited: int = 0
    gauss_points_total: int = 0
    gauss_points_dropped: int = 0
    uncovered_slave_elements: tuple[int, ...] = ()

    @property
    def dropped_fraction(self) -> float:
        if self.gauss_points_total == 0:
            return 0.0
        return self.gauss_points_dropped / self.gauss_points_total


@dataclass(frozen=True)
class MortarMatrices:
    """Slave mass and coupling matrices plus assembly bookkeeping.

    ``slave_mass`` is square over slave interface nodes and symmetric;
    ``coupling`` maps master nodes to slave test functions.  Both were
    integrated over the same surviving Gauss points.
    """

    slave_mass: sparse.csr_matrix
    coupling: sparse.csr_matrix
    stats: AssemblyStats

    @property
    def n_slave_nodes(self) -> int:
        return self.slave_mass.shape[0]

    @property
    def n_master_nodes(self) -> int:
        return self.coupling.shape[1]


@dataclass(frozen=True)
class TransferOperator:
    """Maps master interface nodal values to slave interface nodal values."""

    matrix: np.ndarray | sparse.csr_matrix

    @property
    def n_slave_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_master_nodes(self) -> int:
        return self.matrix.shape[1]

    def row_sums(self) -> np.ndarray:
        ones = np.ones(self.matrix.shape[1])
        return np.asarray(self.matrix @ ones).ravel()


@dataclass(frozen=True)
class ConsistencyReport:
    """Diagnostics for the constant-transfer property of an assembly."""

    row_sum_defect: float
    dropped_fraction: float
    uncovered_slaves: tuple[int, ...]


def _resolve_rule(config: MortarConfig, kind: ElementKind):
    minimum = min_gauss_points(kind)
    n = config.n_gauss if config.n_gauss is not None else minimum
    if n < minimum:
        raise ValueError(
            f"{kind.value} mortar integrals need at least {minimum} Gauss "
            f"points per slave element, got {n}"
        )
    return gauss_rule(kind, n)


def _element_boxes(mesh: InterfaceMesh) -> tuple[np.ndarray, np.ndarray]:
    corners = mesh.nodes[mesh.connectivity]
    return corners.min(axis=1), corners.max(axis=1)


def contact_search(pair: InterfacePair) -> list[np.ndarray]:
    """Candidate master elements per slave element.

    Axis-aligned bounding boxes inflated by the pair's gap tolerance; a
    master is a candidate whenever the inflated boxes intersect.  Flat
    conforming interfaces produce no false negatives even at zero
    tolerance because touching boxes count as intersecting.
    """
    gap = pair.resolved_gap_tolerance
    master_lo, master_hi = _element_boxes(pair.master)
    slave_lo, slave_hi = _element_boxes(pair.slave)
    low_ok = slave_lo[:, None, :] - gap <= master_hi[None, :, :]
    high_ok = slave_hi[:, None, :] + gap >= master_lo[None, :, :]
    hit = (low_ok & high_ok).all(axis=2)
    return [np.flatnonzero(row) for row in hit]


def support_detect(values, tol: float):
    """True where every entry of a probe row lies within [-tol, 1+tol].

    The probe row holds quantities that live in [0, 1] exactly when the
    point sits over the master element: interpolated coordinate ramps for
    the kernel scheme, normalized reference coordinates for the projection
    scheme.  Accepts a single row (returns bool) or a batch (bool array).
    """
    arr = np.asarray(values, float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    inside = ((arr >= -tol) & (arr <= 1.0 + tol)).all(axis=1)
    return bool(inside[0]) if single else inside


def _containment_depth(box_coords: np.ndarray) -> np.ndarray:
    """Distance to the nearest face of the unit reference box, signed.

    Positive inside, negative outside; the tie-break assigns boundary
    points to the candidate they sit deepest in.
    """
    return np.minimum(box_coords, 1.0 - box_coords).min(axis=1)


def _box_coordinate_data(kind: ElementKind) -> np.ndarray:
    """Nodal values of the reference box coordinates (1 + xi) / 2.

    Interpolating these ramps recovers the box coordinates of a query
    point because the shape functions reproduce linear functions.  The
    ramps and their complements are the positive corner-pair combinations
    used for support detection; raw corner bases would not do, since they
    dip below zero inside quadrilaterals.
    """
    return (1.0 + node_reference_coords(kind)) / 2.0


def _solve_newton_step(hess: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    tiny = np.finfo(float).tiny
    step = np.zeros_like(rhs)
    if rhs.shape[1] == 1:
        diag = hess[:, 0, 0]
        safe = np.abs(diag) > tiny
        step[safe, 0] = rhs[safe, 0] / diag[safe]
        return step
    a, b = hess[:, 0, 0], hess[:, 0, 1]
    c, d = hess[:, 1, 0], hess[:, 1, 1]
    det = a * d - b * c
    safe = np.abs(det) > tiny
    step[safe, 0] = (d[safe] * rhs[safe, 0] - b[safe] * rhs[safe, 1]) / det[safe]
    step[safe, 1] = (a[safe] * rhs[safe, 1] - c[safe] * rhs[safe, 0]) / det[safe]
    return step


def _project_batch(
    mesh: InterfaceMesh,
    elem: int,
    targets: np.ndarray,
    settings: NewtonSettings,
) -> tuple[np.ndarray, np.ndarray]:
    """Newton projection of physical points onto one master element.

    Finds reference coordinates where the residual, the gap vector dotted
    with the surface tangents, vanishes; that is the foot point of the
    orthogonal projection.  The residual scales as length squared, so the
    tolerance is taken relative to the squared element circumdiameter.
    """
    kind = mesh.kind
    coords = element_nodes(mesh, elem)
    n = targets.shape[0]
    xi = np.zeros((n, kind.ref_dim))
    scale = element_circumdiameter(mesh, elem) ** 2

    def tangent_residual(current):
        grads = shape_gradients(kind, current)
        pos = shape_values(kind, current) @ coords
        jac = np.einsum("gnr,nd->gdr", grads, coords)
        gap = targets - pos
        return jac, gap, np.einsum("gdr,gd->gr", jac, gap)

    for _ in range(settings.max_iter):
        jac, gap, resid = tangent_residual(xi)
        if np.max(np.abs(resid)) <= settings.tol * scale:
            break
        curv = np.einsum(
            "gnrs,nd->gdrs", shape_second_derivatives(kind, xi), coords
        )
        hess = -np.einsum("gdr,gds->grs", jac, jac) + np.einsum(
            "gdrs,gd->grs", curv, gap
        )
        xi = np.clip(
            xi + _solve_newton_step(hess, -resid), -_NEWTON_CLAMP, _NEWTON_CLAMP
        )
    _, _, resid = tangent_residual(xi)
    converged = np.max(np.abs(resid), axis=1) <= settings.tol * scale
    return xi, converged


def project_point_newton(
    mesh: InterfaceMesh,
    elem: int,
    point,
    settings: NewtonSettings | None = None,
) -> tuple[np.ndarray, bool]:
    """Project one physical point onto a master element.

    Returns the reference coordinates of the foot point and a convergence
    flag; non-converged points must be treated as outside the element.
    """
    if settings is None:
        settings = NewtonSettings()
    target = np.atleast_2d(np.asarray(point, float))
    xi, converged = _project_batch(mesh, elem, target, settings)
    return xi[0], bool(converged[0])


class _KernelEvaluator:
    """Evaluates kernel-interpolated master bases at slave Gauss points."""

    def __init__(self, pair: InterfacePair, config: MortarConfig):
        self.mesh = pair.master
        self.config = config
        self.box_data = _box_coordinate_data(pair.master.kind)
        self._cache: dict[int, RbfInterpolant] = {}

    def interpolant(self, elem: int) -> RbfInterpolant:
        interp = self._cache.get(elem)
        if interp is None:
            try:
                interp = fit_master_interpolant(
                    self.mesh,
                    elem,
                    self.config.layout,
                    self.config.kernel_family,
                    epsilon=self.config.epsilon,
                )
            except IllConditionedKernelError as exc:
                raise IllConditionedKernelError(
                    f"master element {elem}: {exc}", condition=exc.condition
                ) from exc
            self._cache[elem] = interp
        return interp

    def __call__(self, elem: int, phys: np.ndarray):
        vals, ok = evaluate_rescaled_masked(self.interpolant(elem), phys)
        probes = vals @ self.box_data
        inside = ok & support_detect(probes, self.config.support_tol)
        return vals, inside, _containment_depth(probes)


class _ProjectionEvaluator:
    """Evaluates master bases at the Newton foot points of slave points."""

    def __init__(self, pair: InterfacePair, config: MortarConfig):
        self.mesh = pair.master
        self.settings = config.newton
        self.tol = config.support_tol

    def __call__(self, elem: int, phys: np.ndarray):
        xi, converged = _project_batch(self.mesh, elem, phys, self.settings)
        box = (1.0 + xi) / 2.0
        inside = converged & support_detect(box, self.tol)
        return shape_values(self.mesh.kind, xi), inside, _containment_depth(box)


class _TripletBuffer:
    """Accumulates scattered element blocks for one sparse matrix."""

    def __init__(self, shape):
        self.shape = shape
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []

    def add(self, row_nodes, col_nodes, block):
        self.rows.append(np.repeat(row_nodes, len(col_nodes)))
        self.cols.append(np.tile(col_nodes, len(row_nodes)))
        self.vals.append(np.asarray(block).ravel())

    def build(self) -> sparse.csr_matrix:
        if not self.vals:
            return sparse.csr_matrix(self.shape)
        coo = sparse.coo_matrix(
            (
                np.concatenate(self.vals),
                (np.concatenate(self.rows), np.concatenate(self.cols)),
            ),
            shape=self.shape,
        )
        return coo.tocsr()


def _assemble_pointwise(
    pair: InterfacePair, config: MortarConfig, evaluator
) -> MortarMatrices:
    """Shared slave-side Gauss loop of the kernel and projection schemes.

    Each Gauss point is offered to every candidate master element; among
    those accepting it, the point is assigned to the one it sits deepest
    in.  Points accepted by nobody are dropped from both matrices, which
    keeps the quadrature sets of the two matrices identical.
    """
    slave, master = pair.slave, pair.master
    rule = _resolve_rule(config, slave.kind)
    slave_basis = shape_values(slave.kind, rule.points)
    candidates = contact_search(pair)

    n_slave = slave.nodes.shape[0]
    n_master = master.nodes.shape[0]
    mass = _TripletBuffer((n_slave, n_slave))
    coupling = _TripletBuffer((n_slave, n_master))

    pairs_visited = 0
    dropped = 0
    uncovered: list[int] = []
    n_master_basis = master.kind.n_nodes

    for s_elem in range(slave.n_elems):
        cands = candidates[s_elem]
        if cands.size == 0:
            dropped += rule.n_points
            uncovered.append(s_elem)
            continue
        phys = map_to_physical(slave, s_elem, rule.points)
        measure = jacobian_measure(slave, s_elem, rule.points)

        best_depth = np.full(rule.n_points, -np.inf)
        best_master = np.full(rule.n_points, -1)
        best_vals = np.zeros((rule.n_points, n_master_basis))
        for m_elem in cands:
            pairs_visited += 1
            vals, inside, depth = evaluator(int(m_elem), phys)
            depth = np.where(inside, depth, -np.inf)
            better = depth > best_depth
            if not better.any():
                continue
            best_depth[better] = depth[better]
            best_master[better] = m_elem
            best_vals[better] = vals[better]

        keep = best_master >= 0
        dropped += rule.n_points - int(np.count_nonzero(keep))
        if not keep.any():
            uncovered.append(s_elem)
            continue
        weights = rule.weights * measure
        s_nodes = slave.connectivity[s_elem]
        mass_block = np.einsum(
            "g,gi,gj->ij", weights[keep], slave_basis[keep], slave_basis[keep]
        )
        mass.add(s_nodes, s_nodes, mass_block)
        for m_elem in np.unique(best_master[keep]):
            sel = keep & (best_master == m_elem)
            block = np.einsum(
                "g,gi,gk->ik", weights[sel], slave_basis[sel], best_vals[sel]
            )
            coupling.add(s_nodes, master.connectivity[m_elem], block)

    stats = AssemblyStats(
        pairs_visited=pairs_visited,
        gauss_points_total=rule.n_points * slave.n_elems,
        gauss_points_dropped=dropped,
        uncovered_slave_elements=tuple(uncovered),
    )
    return MortarMatrices(
        slave_mass=mass.build(), coupling=coupling.build(), stats=stats
    )


def assemble_rb(pair: InterfacePair, config: MortarConfig) -> MortarMatrices:
    """Assemble with the kernel-interpolated master basis.

    One rescaled interpolant is fitted per master element that receives at
    least one Gauss point; slave points are classified by interpolated
    coordinate ramps, so no projection ever runs.
    """
    return _assemble_pointwise(pair, config, _KernelEvaluator(pair, config))


def assemble_eb(pair: InterfacePair, config: MortarConfig) -> MortarMatrices:
    """Assemble with Newton projection of slave Gauss points."""
    return _assemble_pointwise(pair, config, _ProjectionEvaluator(pair, config))


def _principal_direction(nodes: np.ndarray) -> np.ndarray:
    centered = nodes - nodes.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    direction = vt[0]
    lead = np.argmax(np.abs(direction))
    if direction[lead] < 0.0:
        direction = -direction
    return direction


def _collinearity_residual(nodes: np.ndarray, direction: np.ndarray) -> float:
    centered = nodes - nodes.mean(axis=0)
    along = centered @ direction
    return float(np.max(np.abs(centered - np.outer(along, direction)), initial=0.0))


def _line_parameter_inverse(
    kind: ElementKind, node_params: np.ndarray, targets: np.ndarray, span: float
) -> np.ndarray:
    """Reference coordinates whose 1D map hits the given line parameters."""
    ref = node_reference_coords(kind)[:, 0]
    lo, hi = np.argmin(ref), np.argmax(ref)
    denom = node_params[hi] - node_params[lo]
    xi = (2.0 * (targets - node_params[lo]) / denom - 1.0)[:, None]
    for _ in range(30):
        vals = shape_values(kind, xi) @ node_params - targets
        if np.max(np.abs(vals)) <= 1e-14 * span:
            break
        slope = shape_gradients(kind, xi)[:, :, 0] @ node_params
        xi = np.clip(xi - (vals / slope)[:, None], -_NEWTON_CLAMP, _NEWTON_CLAMP)
    else:
        raise InvalidGeometryError(
            "could not invert the 1D element parameterization; the element "
            "is badly distorted along its line"
        )
    return xi


def assemble_sb_1d(pair: InterfacePair, config: MortarConfig) -> MortarMatrices:
    """Exact assembly for straight 1D interfaces by interval intersection.

    Both meshes must be straight and parallel (the slave may sit at a
    normal offset; it is projected onto the master line).  Every
    slave-master intersection interval receives its own Gauss rule, which
    integrates the polynomial integrands exactly, so the result serves as
    the reference the other schemes are compared against.
    """
    master, slave = pair.master, pair.slave
    if master.kind.ref_dim != 1:
        raise InvalidGeometryError(
            "exact intersection assembly handles 1D interfaces only"
        )
    rule = _resolve_rule(config, slave.kind)

    direction = _principal_direction(master.nodes)
    t_master = (master.nodes - master.nodes.mean(axis=0)) @ direction
    t_slave = (slave.nodes - master.nodes.mean(axis=0)) @ direction
    span = max(np.ptp(t_master), np.ptp(t_slave))
    straightness = max(
        _collinearity_residual(master.nodes, direction),
        _collinearity_residual(slave.nodes, direction),
    )
    if straightness > 1e-9 * span:
        raise InvalidGeometryError(
            "exact intersection assembly needs straight parallel meshes; "
            f"largest off-line deviation is {straightness:.3e}"
        )

    base_points, base_weights = rule.points[:, 0], rule.weights
    n_slave = slave.nodes.shape[0]
    n_master = master.nodes.shape[0]
    mass = _TripletBuffer((n_slave, n_slave))
    coupling = _TripletBuffer((n_slave, n_master))

    master_params = [t_master[conn] for conn in master.connectivity]
    master_bounds = [(p.min(), p.max()) for p in master_params]

    pairs_visited = 0
    points_total = 0
    uncovered: list[int] = []
    sliver = _SLIVER_REL * span

    for s_elem in range(slave.n_elems):
        s_params = t_slave[slave.connectivity[s_elem]]
        s_lo, s_hi = s_params.min(), s_params.max()
        s_nodes = slave.connectivity[s_elem]
        covered = False
        for m_elem, (m_lo, m_hi) in enumerate(master_bounds):
            lo, hi = max(s_lo, m_lo), min(s_hi, m_hi)
            if hi - lo <= sliver:
                continue
            pairs_visited += 1
            covered = True
            t_g = 0.5 * (lo + hi) + 0.5 * (hi - lo) * base_points
            w_g = 0.5 * (hi - lo) * base_weights
            points_total += len(t_g)
            xi_s = _line_parameter_inverse(slave.kind, s_params, t_g, span)
            xi_m = _line_parameter_inverse(
                master.kind, master_params[m_elem], t_g, span
            )
            phi = shape_values(slave.kind, xi_s)
            psi = shape_values(master.kind, xi_m)
            mass.add(s_nodes, s_nodes, np.einsum("g,gi,gj->ij", w_g, phi, phi))
            coupling.add(
                s_nodes,
                master.connectivity[m_elem],
                np.einsum("g,gi,gk->ik", w_g, phi, psi),
            )
        if not covered:
            uncovered.append(s_elem)

    stats = AssemblyStats(
        pairs_visited=pairs_visited,
        gauss_points_total=points_total,
        gauss_points_dropped=0,
        uncovered_slave_elements=tuple(uncovered),
    )
    return MortarMatrices(
        slave_mass=mass.build(), coupling=coupling.build(), stats=stats
    )


def assemble(pair: InterfacePair, config: MortarConfig) -> MortarMatrices:
    """Dispatch on the configured scheme."""
    if config.scheme is Scheme.RB:
        return assemble_rb(pair, config)
    if config.scheme is Scheme.EB:
        return assemble_eb(pair, config)
    return assemble_sb_1d(pair, config)


def compute_transfer(matrices: MortarMatrices) -> TransferOperator:
    """Solve the slave mass against the coupling matrix.

    Never forms an inverse: the mass matrix is factorized once and applied
    to the coupling columns.  Raises :class:`SingularOperatorError` naming
    the slave nodes whose rows are empty (uncovered nodes), or wrapping
    the factorization failure otherwise.
    """
    mass = matrices.slave_mass.tocsr()
    row_weight = np.asarray(np.abs(mass).sum(axis=1)).ravel()
    empty = np.flatnonzero(row_weight == 0.0)
    if empty.size:
        raise SingularOperatorError(
            "slave mass matrix has empty rows; slave nodes "
            f"{empty.tolist()} received no surviving Gauss points",
            nodes=empty.tolist(),
        )
    try:
        factor = splu(mass.tocsc())
    except RuntimeError as exc:
        raise SingularOperatorError(
            f"slave mass factorization failed: {exc}"
        ) from exc

    n_entries = mass.shape[0] * matrices.coupling.shape[1]
    if n_entries <= _DENSE_TRANSFER_LIMIT:
        transfer = factor.solve(matrices.coupling.toarray())
    else:
        chunks = []
        dense_cols = matrices.coupling.tocsc()
        step = 256
        for start in range(0, dense_cols.shape[1], step):
            block = dense_cols[:, start : start + step].toarray()
            chunks.append(sparse.csr_matrix(factor.solve(block)))
        transfer = sparse.hstack(chunks, format="csr")
    return TransferOperator(matrix=transfer)


def interface_transfer(transfer: TransferOperator, master_values) -> np.ndarray:
    """Apply the transfer operator to master interface nodal values."""
    values = np.asarray(master_values, float)
    if values.shape[0] != transfer.n_master_nodes:
        raise ValueError(
            f"expected {transfer.n_master_nodes} master nodal values, "
            f"got {values.shape[0]}"
        )
    return np.asarray(transfer.matrix @ values)


def consistency_report(matrices: MortarMatrices) -> ConsistencyReport:
    """Constant-transfer diagnostics; never raises.

    A singular slave mass (uncovered nodes) reports an infinite defect.
    """
    try:
        transfer = compute_transfer(matrices)
    except SingularOperatorError:
        defect = np.inf
    else:
        sums = transfer.row_sums()
        defect = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
    return ConsistencyReport(
        row_sum_defect=defect,
        dropped_fraction=matrices.stats.dropped_fraction,
        uncovered_slaves=matrices.stats.uncovered_slave_elements,
    )


def save_matrix_text(matrix, path) -> None:
    """Write a matrix as coordinate triples.

    One header line ``matrix <rows> <cols> <nnz>`` followed by one
    ``row col value`` line per stored entry, row-major, full float
    precision.  Works for sparse and dense inputs.
    """
    canonical = sparse.csr_matrix(matrix)
    canonical.sum_duplicates()
    coo = canonical.tocoo()
    with open(path, "w", encoding="ascii") as handle:
        handle.write(f"matrix {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, value in zip(coo.row, coo.col, coo.data):
            handle.write(f"{i} {j} {float(value)!r}\n")


def load_matrix_text(path) -> sparse.csr_matrix:
    """Read a matrix written by :func:`save_matrix_text`."""
    with open(path, "r", encoding="ascii") as handle:
        header = handle.readline().split()
        if len(header) != 4 or header[0] != "matrix":
            raise ValueError(f"{path}: malformed matrix header")
        n_rows, n_cols, nnz = (int(part) for part in header[1:])
        rows = np.empty(nnz, int)
        cols = np.empty(nnz, int)
        vals = np.empty(nnz, float)
        for k in range(nnz):
            parts = handle.readline().split()
            if len(parts) != 3:
                raise ValueError(f"{path}: truncated at entry {k}")
            rows[k], cols[k], vals[k] = int(parts[0]), int(parts[1]), float(parts[2])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
