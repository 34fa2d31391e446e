"""Mesh containers, isoparametric geometry, structured generation and I/O.

Two mesh flavours are used throughout:

* ``InterfaceMesh``: a mesh of segments (in R^2) or quadrilateral surface
  elements (in R^3) describing one side of a coupling interface.
* ``VolumeMesh``: a triangulation of a planar subdomain with string tags on
  boundary edges ("dirichlet", "interface", ...).

Meshes are immutable after construction; node and connectivity arrays are
marked read-only.

The text format written by :func:`save_mesh` is line oriented::

    meshfmt 1
    nodes <count> <dim>
    <x> <y> [<z>]
    elements <count> <kind>
    <i0> <i1> ...
    tags <count>
    <n1> <n2> <name>

Node indices are 0-based.  The ``tags`` section is optional and only
meaningful for volume meshes.  Coordinates are written with full precision
so that a save/load round trip reproduces the payload exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.spatial.distance import pdist

from .elements import (
    ElementKind,
    gauss_rule,
    shape_gradients,
    shape_values,
)
from .errors import DegenerateElementError, InvalidGeometryError, MeshFormatError

__all__ = [
    "Side",
    "InterfaceMesh",
    "VolumeMesh",
    "map_to_physical",
    "jacobian_matrix",
    "jacobian_measure",
    "element_circumdiameter",
    "mesh_size",
    "translate",
    "segment_mesh",
    "segment_pair",
    "square_surface_mesh",
    "surface_pair",
    "sine_bump",
    "rectangle_mesh",
    "rectangle_grid_mesh",
    "split_unit_square",
    "extract_interface",
    "save_mesh",
    "load_mesh",
]


class Side(str, Enum):
    """Role of an interface mesh in a mortar pairing."""

    MASTER = "master"
    SLAVE = "slave"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _validate_connectivity(nodes, connectivity, kind):
    if connectivity.ndim != 2 or connectivity.shape[1] != kind.n_nodes:
        raise ValueError(
            f"{kind.value} connectivity must have {kind.n_nodes} columns, "
            f"got shape {connectivity.shape}"
        )
    if connectivity.size and (
        connectivity.min() < 0 or connectivity.max() >= nodes.shape[0]
    ):
        raise ValueError("connectivity refers to nodes outside the mesh")
    if not np.all(np.isfinite(nodes)):
        raise ValueError("mesh nodes contain non-finite coordinates")


@dataclass(frozen=True)
class InterfaceMesh:
    """One side of a coupling interface.

    Attributes
    ----------
    nodes : ndarray, shape (n_nodes, dim)
        Coordinates; dim is 2 for segment meshes and 3 for surface meshes.
    connectivity : ndarray, shape (n_elems, nodes_per_elem)
        0-based node indices, ordered per the reference element convention.
    kind : ElementKind
    side : Side
    """

    nodes: np.ndarray
    connectivity: np.ndarray
    kind: ElementKind
    side: Side = Side.MASTER

    def __post_init__(self):
        object.__setattr__(self, "nodes", _freeze(np.asarray(self.nodes, float)))
        object.__setattr__(
            self, "connectivity", _freeze(np.asarray(self.connectivity, np.int64))
        )
        object.__setattr__(self, "kind", ElementKind(self.kind))
        object.__setattr__(self, "side", Side(self.side))
        if self.kind is ElementKind.TRI3:
            raise ValueError("triangles are volume elements, not interface elements")
        expected_dim = 2 if self.kind.ref_dim == 1 else 3
        if self.nodes.ndim != 2 or self.nodes.shape[1] != expected_dim:
            raise ValueError(
                f"{self.kind.value} interface nodes must live in R^{expected_dim}"
            )
        _validate_connectivity(self.nodes, self.connectivity, self.kind)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elems(self) -> int:
        return self.connectivity.shape[0]

    def with_side(self, side: Side) -> "InterfaceMesh":
        return InterfaceMesh(self.nodes, self.connectivity, self.kind, side)


@dataclass(frozen=True)
class VolumeMesh:
    """Linear triangulation of a planar subdomain.

    ``boundary_tags`` maps sorted boundary edge node pairs to tag strings.
    The conventional tags are "dirichlet" and "interface".
    """

    nodes: np.ndarray
    connectivity: np.ndarray
    boundary_tags: dict[tuple[int, int], str] = field(default_factory=dict)
    kind: ElementKind = ElementKind.TRI3

    def __post_init__(self):
        object.__setattr__(self, "nodes", _freeze(np.asarray(self.nodes, float)))
        object.__setattr__(
            self, "connectivity", _freeze(np.asarray(self.connectivity, np.int64))
        )
        object.__setattr__(self, "kind", ElementKind(self.kind))
        if self.kind is not ElementKind.TRI3:
            raise ValueError("volume meshes are built from tri3 elements")
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ValueError("volume mesh nodes must live in R^2")
        _validate_connectivity(self.nodes, self.connectivity, self.kind)
        tags = {
            (int(min(a, b)), int(max(a, b))): str(t)
            for (a, b), t in self.boundary_tags.items()
        }
        object.__setattr__(self, "boundary_tags", tags)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elems(self) -> int:
        return self.connectivity.shape[0]

    def tagged_edges(self, tag: str) -> list[tuple[int, int]]:
        return [e for e, t in self.boundary_tags.items() if t == tag]

    def tagged_nodes(self, tag: str) -> np.ndarray:
        """Sorted unique node ids lying on edges carrying ``tag``."""
        ids = set()
        for a, b in self.tagged_edges(tag):
            ids.add(a)
            ids.add(b)
        return np.array(sorted(ids), dtype=np.int64)


Mesh = InterfaceMesh | VolumeMesh


# --- isoparametric geometry ------------------------------------------------


def element_nodes(mesh: Mesh, elem: int) -> np.ndarray:
    """Physical coordinates of an element's nodes, shape (n_nodes, dim)."""
    return mesh.nodes[mesh.connectivity[elem]]


def map_to_physical(mesh: Mesh, elem: int, xi) -> np.ndarray:
    """Map reference coordinates to physical space, x(xi) = sum_i N_i(xi) x_i."""
    coords = element_nodes(mesh, elem)
    vals = shape_values(mesh.kind, xi)
    return vals @ coords


def jacobian_matrix(mesh: Mesh, elem: int, xi) -> np.ndarray:
    """Jacobian dx/dxi, shape (..., dim, ref_dim)."""
    coords = element_nodes(mesh, elem)
    grads = shape_gradients(mesh.kind, xi)
    return np.einsum("...nr,nd->...dr", grads, coords)


def jacobian_measure(mesh: Mesh, elem: int, xi) -> np.ndarray:
    """Integration measure of the isoparametric map at ``xi``.

    For volume triangles this is the (signed) Jacobian determinant, for
    curves and surfaces the metric sqrt(det(J^T J)).  A non-positive value
    raises :class:`DegenerateElementError`.
    """
    J = jacobian_matrix(mesh, elem, xi)
    single = J.ndim == 2
    if single:
        J = J[None]
    if isinstance(mesh, VolumeMesh):
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        if np.any(det <= 0.0):
            raise DegenerateElementError(
                f"element {elem} has non-positive Jacobian determinant"
            )
        meas = det
    else:
        G = np.einsum("gdr,gds->grs", J, J)
        if G.shape[1] == 1:
            det = G[:, 0, 0]
        else:
            det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0]
        if np.any(det <= 0.0):
            raise DegenerateElementError(
                f"element {elem} has a degenerate surface metric"
            )
        meas = np.sqrt(det)
    return meas[0] if single else meas


def element_circumdiameter(mesh: Mesh, elem: int) -> float:
    """Largest pairwise distance between the element's nodes."""
    return float(pdist(element_nodes(mesh, elem)).max())


def mesh_size(mesh: Mesh) -> float:
    """Largest element circumdiameter in the mesh."""
    return max(element_circumdiameter(mesh, e) for e in range(mesh.n_elems))


def translate(mesh: Mesh, vector) -> Mesh:
    """Rigidly translate a mesh by ``vector``."""
    vector = np.asarray(vector, float)
    nodes = mesh.nodes + vector
    if isinstance(mesh, VolumeMesh):
        return VolumeMesh(nodes, mesh.connectivity, dict(mesh.boundary_tags))
    return InterfaceMesh(nodes, mesh.connectivity, mesh.kind, mesh.side)


def _validate_measures(mesh: Mesh, probe) -> None:
    for e in range(mesh.n_elems):
        jacobian_measure(mesh, e, probe)


# --- structured generation -------------------------------------------------


def segment_mesh(
    n_elems: int,
    kind: ElementKind = ElementKind.SEG2,
    span: tuple[float, float] = (-1.0, 1.0),
    side: Side = Side.MASTER,
    height: float = 0.0,
) -> InterfaceMesh:
    """Uniform segment mesh along the x-axis, embedded in R^2 at ``height``."""
    kind = ElementKind(kind)
    if kind not in (ElementKind.SEG2, ElementKind.SEG3):
        raise ValueError("segment meshes require seg2 or seg3 elements")
    if n_elems < 1:
        raise ValueError("n_elems must be positive")
    a, b = span
    if not b > a:
        raise ValueError("span must be increasing")
    per_elem = kind.degree
    xs = np.linspace(a, b, per_elem * n_elems + 1)
    nodes = np.column_stack([xs, np.full_like(xs, height)])
    first = per_elem * np.arange(n_elems)[:, None]
    conn = first + np.arange(per_elem + 1)[None, :]
    return InterfaceMesh(nodes, conn, kind, side)


def segment_pair(
    n_master: int,
    n_slave: int,
    kind: ElementKind = ElementKind.SEG2,
    span: tuple[float, float] = (-1.0, 1.0),
) -> tuple[InterfaceMesh, InterfaceMesh]:
    """Master/slave segment meshes over the same interval (conforming ends)."""
    master = segment_mesh(n_master, kind, span, Side.MASTER)
    slave = segment_mesh(n_slave, kind, span, Side.SLAVE)
    return master, slave


def sine_bump(amplitude: float, span: tuple[float, float] = (-1.0, 1.0)) -> Callable:
    """Out-of-plane warp z(x, y) = a sin(pi x') sin(pi y').

    Coordinates x', y' are rescaled so that the bump vanishes on the border
    of the given square span.  With the default span the peak value is
    ``amplitude``, attained at the four points (+-1/2, +-1/2).
    """
    a, b = span

    def warp(x, y):
        sx = np.sin(np.pi * (x - a) / (b - a) * 2.0)
        sy = np.sin(np.pi * (y - a) / (b - a) * 2.0)
        return amplitude * sx * sy

    return warp


def square_surface_mesh(
    n_per_side: int,
    kind: ElementKind = ElementKind.QUAD4,
    side: Side = Side.MASTER,
    span: tuple[float, float] = (-1.0, 1.0),
    warp: Callable | None = None,
) -> InterfaceMesh:
    """Structured quadrilateral surface mesh over a square, embedded in R^3.

    ``warp`` is an optional out-of-plane displacement z = warp(x, y)
    applied to every node (corner and mid-side alike).  A warp that
    degenerates the surface metric raises :class:`DegenerateElementError`.
    """
    kind = ElementKind(kind)
    if kind not in (ElementKind.QUAD4, ElementKind.QUAD8):
        raise ValueError("surface meshes require quad4 or quad8 elements")
    if n_per_side < 1:
        raise ValueError("n_per_side must be positive")
    n = n_per_side
    a, b = span
    xs = np.linspace(a, b, n + 1)

    def zval(x, y):
        return warp(x, y) if warp is not None else np.zeros(np.shape(x))

    cx, cy = np.meshgrid(xs, xs, indexing="xy")
    corner_xy = np.column_stack([cx.ravel(), cy.ravel()])

    def cidx(i, j):
        return j * (n + 1) + i

    if kind is ElementKind.QUAD4:
        xy = corner_xy
        conn = np.empty((n * n, 4), dtype=np.int64)
        e = 0
        for j in range(n):
            for i in range(n):
                conn[e] = (cidx(i, j), cidx(i + 1, j), cidx(i + 1, j + 1), cidx(i, j + 1))
                e += 1
    else:
        mids = 0.5 * (xs[:-1] + xs[1:])
        hx, hy = np.meshgrid(mids, xs, indexing="xy")
        h_xy = np.column_stack([hx.ravel(), hy.ravel()])
        vx, vy = np.meshgrid(xs, mids, indexing="xy")
        v_xy = np.column_stack([vx.ravel(), vy.ravel()])
        base_h = corner_xy.shape[0]
        base_v = base_h + h_xy.shape[0]
        xy = np.vstack([corner_xy, h_xy, v_xy])

        def hidx(i, j):
            return base_h + j * n + i

        def vidx(i, j):
            return base_v + j * (n + 1) + i

        conn = np.empty((n * n, 8), dtype=np.int64)
        e = 0
        for j in range(n):
            for i in range(n):
                conn[e] = (
                    cidx(i, j),
                    cidx(i + 1, j),
                    cidx(i + 1, j + 1),
                    cidx(i, j + 1),
                    hidx(i, j),
                    vidx(i + 1, j),
                    hidx(i, j + 1),
                    vidx(i, j),
                )
                e += 1

    z = zval(xy[:, 0], xy[:, 1])
    nodes = np.column_stack([xy, z])
    mesh = InterfaceMesh(nodes, conn, kind, side)
    probe = gauss_rule(kind, (kind.degree + 1) ** 2).points
    _validate_measures(mesh, probe)
    return mesh


def surface_pair(
    n_master: int,
    n_slave: int,
    kind: ElementKind = ElementKind.QUAD4,
    warp_master: Callable | None = None,
    warp_slave: Callable | None = None,
    span: tuple[float, float] = (-1.0, 1.0),
) -> tuple[InterfaceMesh, InterfaceMesh]:
    """Master/slave surface meshes over the same square.

    Distinct warps yield geometrically non-conforming interfaces with gaps
    that grow away from the (flat) boundary ring.
    """
    master = square_surface_mesh(n_master, kind, Side.MASTER, span, warp_master)
    slave = square_surface_mesh(n_slave, kind, Side.SLAVE, span, warp_slave)
    return master, slave


def rectangle_grid_mesh(
    x_nodes,
    y_nodes,
    interface_edge: str | None = None,
    interface_offset: Callable | None = None,
) -> VolumeMesh:
    """Triangulate a logically rectangular grid of nodes.

    Every grid cell is split along its lower-left to upper-right diagonal,
    so that two meshes generated on nested grids share their triangles.
    ``interface_edge`` ("bottom" or "top") selects the horizontal boundary
    tagged "interface"; every other boundary edge is tagged "dirichlet".

    ``interface_offset`` shifts the interface row by offset(x), blending
    linearly to zero at the opposite edge.  A shift large enough to tangle
    the grid raises :class:`DegenerateElementError`.
    """
    xs = np.asarray(x_nodes, float)
    ys = np.asarray(y_nodes, float)
    nx, ny = xs.size - 1, ys.size - 1
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell in each direction")
    if interface_edge not in (None, "bottom", "top"):
        raise ValueError("interface_edge must be 'bottom', 'top' or None")

    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    if interface_offset is not None:
        if interface_edge is None:
            raise ValueError("interface_offset requires an interface_edge")
        y0, y1 = ys[0], ys[-1]
        if interface_edge == "bottom":
            blend = (y1 - gy) / (y1 - y0)
        else:
            blend = (gy - y0) / (y1 - y0)
        gy = gy + blend * interface_offset(gx)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    conn = np.empty((2 * nx * ny, 3), dtype=np.int64)
    e = 0
    for j in range(ny):
        for i in range(nx):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n11, n01 = nid(i + 1, j + 1), nid(i, j + 1)
            conn[e] = (n00, n10, n11)
            conn[e + 1] = (n00, n11, n01)
            e += 2

    tags: dict[tuple[int, int], str] = {}

    def tag_edge(a, b, name):
        tags[(min(a, b), max(a, b))] = name

    bottom_tag = "interface" if interface_edge == "bottom" else "dirichlet"
    top_tag = "interface" if interface_edge == "top" else "dirichlet"
    for i in range(nx):
        tag_edge(nid(i, 0), nid(i + 1, 0), bottom_tag)
        tag_edge(nid(i, ny), nid(i + 1, ny), top_tag)
    for j in range(ny):
        tag_edge(nid(0, j), nid(0, j + 1), "dirichlet")
        tag_edge(nid(nx, j), nid(nx, j + 1), "dirichlet")

    mesh = VolumeMesh(nodes, conn, tags)
    centroid = np.array([[1.0 / 3.0, 1.0 / 3.0]])
    _validate_measures(mesh, centroid)
    return mesh


def rectangle_mesh(
    nx: int,
    ny: int,
    x_span: tuple[float, float] = (0.0, 1.0),
    y_span: tuple[float, float] = (0.0, 1.0),
    interface_edge: str | None = None,
    interface_offset: Callable | None = None,
) -> VolumeMesh:
    """Uniform rectangle triangulation, see :func:`rectangle_grid_mesh`."""
    xs = np.linspace(*x_span, nx + 1)
    ys = np.linspace(*y_span, ny + 1)
    return rectangle_grid_mesh(xs, ys, interface_edge, interface_offset)


def split_unit_square(
    n_master_x: int,
    n_slave_x: int,
    split: float = 0.5,
    interface_offset: Callable | None = None,
) -> tuple[VolumeMesh, VolumeMesh]:
    """Two stacked subdomain meshes of the unit square.

    The master subdomain is the upper part [0,1] x [split,1], the slave the
    lower part.  Cell counts in y keep cells near-square for each side's
    own resolution, so different ``n_master_x`` / ``n_slave_x`` produce a
    non-conforming interface at y = split.  ``interface_offset`` bends the
    interface row of both meshes onto the same curve, each side sampling it
    with its own nodes (a geometrically non-conforming pairing).
    """
    ny_m = max(1, round(n_master_x * (1.0 - split)))
    ny_s = max(1, round(n_slave_x * split))
    master = rectangle_mesh(
        n_master_x, ny_m, (0.0, 1.0), (split, 1.0), "bottom", interface_offset
    )
    slave = rectangle_mesh(
        n_slave_x, ny_s, (0.0, 1.0), (0.0, split), "top", interface_offset
    )
    return master, slave


def extract_interface(mesh: VolumeMesh, side: Side) -> tuple[InterfaceMesh, np.ndarray]:
    """Build the segment mesh of a volume mesh's "interface" edges.

    The edges must form one simple open chain.  Returns the interface mesh
    (nodes ordered along the chain, starting from the end with the smaller
    (x, y)) and the map from interface node index to volume node index.
    """
    edges = mesh.tagged_edges("interface")
    if not edges:
        raise InvalidGeometryError("mesh has no edges tagged 'interface'")
    adjacency: dict[int, list[int]] = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    ends = [n for n, nbrs in adjacency.items() if len(nbrs) == 1]
    if len(ends) != 2 or any(len(v) > 2 for v in adjacency.values()):
        raise InvalidGeometryError("interface edges do not form a simple open chain")
    start = min(ends, key=lambda n: (mesh.nodes[n, 0], mesh.nodes[n, 1]))
    chain = [start]
    prev = -1
    while True:
        nbrs = [n for n in adjacency[chain[-1]] if n != prev]
        if not nbrs:
            break
        prev = chain[-1]
        chain.append(nbrs[0])
    if len(chain) != len(adjacency):
        raise InvalidGeometryError("interface edges are not contiguous")
    node_map = np.array(chain, dtype=np.int64)
    nodes = mesh.nodes[node_map]
    conn = np.column_stack(
        [np.arange(len(chain) - 1), np.arange(1, len(chain))]
    ).astype(np.int64)
    return InterfaceMesh(nodes, conn, ElementKind.SEG2, side), node_map


# --- text format I/O -------------------------------------------------------


def _fmt_float(v: float) -> str:
    return repr(float(v))


def save_mesh(mesh: Mesh, path) -> None:
    """Write a mesh in the ``meshfmt 1`` text format (see module docstring)."""
    lines = ["meshfmt 1"]
    n, dim = mesh.nodes.shape
    lines.append(f"nodes {n} {dim}")
    for row in mesh.nodes:
        lines.append(" ".join(_fmt_float(v) for v in row))
    lines.append(f"elements {mesh.n_elems} {mesh.kind.value}")
    for row in mesh.connectivity:
        lines.append(" ".join(str(int(i)) for i in row))
    if isinstance(mesh, VolumeMesh) and mesh.boundary_tags:
        items = sorted(mesh.boundary_tags.items())
        lines.append(f"tags {len(items)}")
        for (a, b), tag in items:
            lines.append(f"{a} {b} {tag}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, path):
        with open(path, encoding="utf-8") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next(self, missing: str) -> tuple[int, str]:
        while self.pos < len(self.lines):
            lineno = self.pos + 1
            text = self.lines[self.pos].strip()
            self.pos += 1
            if text:
                return lineno, text
        raise MeshFormatError(f"unexpected end of file: missing {missing}")


def load_mesh(path, side: Side = Side.MASTER) -> Mesh:
    """Read a mesh written by :func:`save_mesh`.

    The element kind decides the container: ``tri3`` files come back as
    :class:`VolumeMesh`, everything else as :class:`InterfaceMesh` with the
    requested ``side``.  Malformed input raises :class:`MeshFormatError`
    naming the offending line or missing section.
    """
    reader = _LineReader(path)

    lineno, header = reader.next("'meshfmt' header")
    if header.split() != ["meshfmt", "1"]:
        raise MeshFormatError(f"line {lineno}: expected 'meshfmt 1', got {header!r}")

    lineno, text = reader.next("'nodes' section")
    parts = text.split()
    if len(parts) != 3 or parts[0] != "nodes":
        raise MeshFormatError(f"line {lineno}: expected 'nodes <count> <dim>'")
    try:
        n_nodes, dim = int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise MeshFormatError(f"line {lineno}: bad node header: {exc}") from None
    if dim not in (2, 3) or n_nodes < 1:
        raise MeshFormatError(f"line {lineno}: unsupported node count or dimension")
    nodes = np.empty((n_nodes, dim))
    for i in range(n_nodes):
        lineno, text = reader.next(f"node row {i}")
        parts = text.split()
        if len(parts) != dim:
            raise MeshFormatError(
                f"line {lineno}: expected {dim} coordinates, got {len(parts)}"
            )
        try:
            nodes[i] = [float(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad coordinate value") from None

    lineno, text = reader.next("'elements' section")
    parts = text.split()
    if len(parts) != 3 or parts[0] != "elements":
        raise MeshFormatError(f"line {lineno}: expected 'elements <count> <kind>'")
    try:
        n_elems = int(parts[1])
        kind = ElementKind(parts[2])
    except ValueError:
        raise MeshFormatError(
            f"line {lineno}: bad element count or unknown kind {parts[2]!r}"
        ) from None
    conn = np.empty((n_elems, kind.n_nodes), dtype=np.int64)
    for i in range(n_elems):
        lineno, text = reader.next(f"element row {i}")
        parts = text.split()
        if len(parts) != kind.n_nodes:
            raise MeshFormatError(
                f"line {lineno}: expected {kind.n_nodes} node indices, got {len(parts)}"
            )
        try:
            conn[i] = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad node index") from None

    tags: dict[tuple[int, int], str] = {}
    try:
        lineno, text = reader.next("end of file")
    except MeshFormatError:
        text = ""
    if text:
        parts = text.split()
        if len(parts) != 2 or parts[0] != "tags":
            raise MeshFormatError(f"line {lineno}: expected 'tags <count>'")
        n_tags = int(parts[1])
        for i in range(n_tags):
            lineno, text = reader.next(f"tag row {i}")
            parts = text.split()
            if len(parts) != 3:
                raise MeshFormatError(
                    f"line {lineno}: expected '<n1> <n2> <tag>', got {text!r}"
                )
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise MeshFormatError(f"line {lineno}: bad tag node index") from None
            tags[(a, b)] = parts[2]

    try:
        if kind is ElementKind.TRI3:
            return VolumeMesh(nodes, conn, tags)
        return InterfaceMesh(nodes, conn, kind, side)
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from None
