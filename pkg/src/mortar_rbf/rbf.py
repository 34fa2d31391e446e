"""Rescaled radial-basis interpolation of master element basis functions.

A master element gets one interpolant: kernel collocation points are laid
out on the reference element, mapped through the isoparametric map, and the
nodal basis functions (plus the constant 1) are sampled there.  Solving the
collocation system once per element yields weight vectors that evaluate the
interpolated basis anywhere in physical space.

Evaluation always returns the *rescaled* interpolant

    N_hat_j(x) = Pi[N_j](x) / Pi[1](x),

the plain interpolant divided by the interpolant of the constant one.  The
rescaling restores an exact partition of unity (rows of the evaluated basis
matrix sum to one) and, for the Gaussian kernel on flat elements, makes the
evaluation invariant under translations normal to the element plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from .elements import ElementKind, shape_values
from .errors import IllConditionedKernelError, RescaleBreakdownError
from .meshes import Mesh, element_circumdiameter, map_to_physical

__all__ = [
    "KernelFamily",
    "RbfKernel",
    "LayoutKind",
    "PointLayout",
    "RbfInterpolant",
    "InterpolationDiagnostics",
    "kernel_eval",
    "interpolation_points",
    "fit_master_interpolant",
    "evaluate_rescaled",
    "evaluate_rescaled_masked",
    "rmse",
    "halton_reference_points",
    "basis_diagnostics",
]

#: Rescaling denominators are compared against this times the absolute sum
#: of their kernel-weighted terms; smaller means catastrophic cancellation
#: and the query is treated as "out of support".  The test is relative so
#: that a uniform attenuation of every kernel value (a Gaussian interpolant
#: queried off the element plane scales all terms by exp(-s^2/eps^2)) does
#: not trigger it, preserving normal-translation invariance.
BREAKDOWN_TOL = 1e-12

#: Collocation matrices with a 1-norm condition estimate beyond this are
#: rejected as numerically singular (about 4.5e17 in double precision).
#: The bar is deliberately high: a Gaussian fit on a planar quadrilateral
#: with six points per edge already runs its gram matrix near 1e16, yet
#: the rescaled basis it produces is still accurate to coupling tolerances
#: because rescaling cancels the dominant error component.  Only fits
#: whose factorization is effectively rank-deficient are refused.
COND_LIMIT = 100.0 / np.finfo(float).eps

#: Largest admissible points-per-edge count; denser sets are notoriously
#: unstable for smooth kernels.
MAX_POINTS_PER_EDGE = 10


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    INV_MULTIQUADRIC = "imq"
    WENDLAND_C2 = "wendland"


@dataclass(frozen=True)
class RbfKernel:
    """A radial kernel family with shape parameter ``epsilon``.

    Gaussian:             exp(-(r/eps)^2)
    Inverse multiquadric: 1 / sqrt(r^2 + eps^2)
    Wendland C2:          (1 - r/eps)_+^4 (1 + 4 r/eps), zero for r >= eps
    """

    family: KernelFamily
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not self.epsilon > 0.0:
            raise ValueError("kernel shape parameter epsilon must be positive")

    def __call__(self, r):
        return kernel_eval(self, r)


def kernel_eval(kernel: RbfKernel, r) -> np.ndarray:
    """Evaluate the kernel profile at distances ``r`` (any shape, r >= 0)."""
    r = np.asarray(r, float)
    eps = kernel.epsilon
    if kernel.family is KernelFamily.GAUSSIAN:
        return np.exp(-((r / eps) ** 2))
    if kernel.family is KernelFamily.INV_MULTIQUADRIC:
        return 1.0 / np.sqrt(r * r + eps * eps)
    # Wendland C2, compact support of radius eps.
    q = r / eps
    cut = np.maximum(1.0 - q, 0.0)
    return cut**4 * (1.0 + 4.0 * q)


class LayoutKind(str, Enum):
    UNIFORM = "uniform"
    SINE = "sine"


@dataclass(frozen=True)
class PointLayout:
    """Collocation point layout on the reference element.

    ``n_per_edge`` counts points per edge, element vertices included, so a
    segment gets n points, a quadrilateral n^2 and a triangle n(n+1)/2.
    The "sine" variant remaps each uniform coordinate through sin(pi t / 2)
    (in edge-normalized coordinates), clustering points toward the element
    boundary where interpolation of the nodal basis is hardest.
    """

    variant: LayoutKind = LayoutKind.UNIFORM
    n_per_edge: int = 6

    def __post_init__(self):
        object.__setattr__(self, "variant", LayoutKind(self.variant))
        if not 2 <= self.n_per_edge <= MAX_POINTS_PER_EDGE:
            raise ValueError(
                f"n_per_edge must lie in [2, {MAX_POINTS_PER_EDGE}], "
                f"got {self.n_per_edge}"
            )


def interpolation_points(kind: ElementKind, layout: PointLayout) -> np.ndarray:
    """Reference coordinates of the collocation points, shape (M, ref_dim)."""
    kind = ElementKind(kind)
    n = layout.n_per_edge
    t = np.linspace(-1.0, 1.0, n)
    if layout.variant is LayoutKind.SINE:
        t = np.sin(0.5 * np.pi * t)
    if kind.ref_dim == 1:
        return t.reshape(-1, 1)
    if kind in (ElementKind.QUAD4, ElementKind.QUAD8):
        xx, yy = np.meshgrid(t, t, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])
    # Triangle: uniform barycentric lattice, sine-remapped per coordinate.
    # The remap is the [-1, 1] one transported to [0, 1]; being odd about
    # the midpoint it preserves u_i + u_j <= 1, so points stay inside.
    u = np.linspace(0.0, 1.0, n)
    if layout.variant is LayoutKind.SINE:
        u = 0.5 * (1.0 + np.sin(0.5 * np.pi * (2.0 * u - 1.0)))
    pts = [(u[i], u[j]) for j in range(n) for i in range(n - j)]
    return np.array(pts)


@dataclass(frozen=True)
class RbfInterpolant:
    """Fitted rescaled interpolant of one master element's nodal basis.

    ``weights`` has one column per basis function; ``rescale_weights`` is
    the weight vector of the constant-one interpolant used as denominator.
    ``condition`` is the 1-norm condition estimate of the collocation
    matrix from its LU factorization.
    """

    kind: ElementKind
    kernel: RbfKernel
    points: np.ndarray
    weights: np.ndarray
    rescale_weights: np.ndarray
    condition: float

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)
        self.rescale_weights.setflags(write=False)

    @property
    def n_basis(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class InterpolationDiagnostics:
    """Quality measures of a fitted interpolant."""

    rmse: float
    condition_estimate: float
    unstable: bool


def _condition_estimate(matrix: np.ndarray, lu: np.ndarray) -> float:
    anorm = np.linalg.norm(matrix, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return np.inf
    return float(1.0 / rcond)


def fit_master_interpolant(
    mesh: Mesh,
    elem: int,
    layout: PointLayout,
    family: KernelFamily,
    epsilon: float | None = None,
    cond_limit: float | None = COND_LIMIT,
) -> RbfInterpolant:
    """Fit the rescaled kernel interpolant of one element's nodal basis.

    The shape parameter defaults to the element circumdiameter, the policy
    that keeps conditioning acceptable across refinement; pass ``epsilon``
    to override it for parameter studies.  Distances are measured in
    physical space, so the interpolant can be queried at points off the
    element (including off its plane).

    The rescaling weights are taken as the row sums of the basis weight
    matrix rather than a separate solve against all-ones data.  The two
    agree exactly in real arithmetic (the shape functions sum to one at
    every collocation point), but the row-sum form makes the rescaled
    basis values sum to one at every query point up to roundoff no matter
    how badly conditioned the collocation matrix is.

    Raises :class:`IllConditionedKernelError` when the collocation matrix
    condition estimate exceeds ``cond_limit`` (pass None to disable).
    """
    kind = ElementKind(mesh.kind)
    ref_pts = interpolation_points(kind, layout)
    phys = np.atleast_2d(map_to_physical(mesh, elem, ref_pts))
    if epsilon is None:
        epsilon = element_circumdiameter(mesh, elem)
    kernel = RbfKernel(family, epsilon)

    gram = kernel_eval(kernel, cdist(phys, phys))
    basis = shape_values(kind, ref_pts)

    lu, piv = lu_factor(gram)
    condition = _condition_estimate(gram, lu)
    if cond_limit is not None and condition > cond_limit:
        raise IllConditionedKernelError(
            f"kernel collocation matrix is numerically singular "
            f"(condition estimate {condition:.3e})",
            condition=condition,
        )
    weights = lu_solve((lu, piv), basis)
    return RbfInterpolant(
        kind=kind,
        kernel=kernel,
        points=phys,
        weights=weights,
        rescale_weights=weights.sum(axis=1),
        condition=condition,
    )


def _query_matrix(interp: RbfInterpolant, points) -> tuple[np.ndarray, bool]:
    pts = np.asarray(points, float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != interp.points.shape[1]:
        raise ValueError(
            f"query points have dimension {pts.shape[1]}, "
            f"interpolant lives in dimension {interp.points.shape[1]}"
        )
    return kernel_eval(interp.kernel, cdist(pts, interp.points)), single


def evaluate_rescaled_masked(
    interp: RbfInterpolant, points
) -> tuple[np.ndarray, np.ndarray]:
    """Rescaled basis values with a validity mask.

    The rescaling denominator is computed as the sum of the per-basis
    numerators, so valid rows sum to one identically (up to the final
    division) however ill-conditioned the fit was.

    Rows whose rescaling denominator is wiped out by cancellation, i.e.
    smaller than :data:`BREAKDOWN_TOL` times the absolute sum of its
    kernel-weighted terms, are zeroed and flagged False.  The same fate
    hits rows where every kernel value vanishes outright (queries beyond
    the Wendland cutoff, or Gaussian queries so remote the kernel
    underflows).  Callers must treat flagged queries as out of support.
    """
    phi, _ = _query_matrix(interp, points)
    numer = phi @ interp.weights
    denom = numer.sum(axis=1)
    term_size = (np.abs(phi) @ np.abs(interp.weights)).sum(axis=1)
    ok = np.abs(denom) >= BREAKDOWN_TOL * term_size
    ok &= term_size > 0.0
    values = np.zeros_like(numer)
    if ok.any():
        values[ok] = numer[ok] / denom[ok, None]
    return values, ok


def evaluate_rescaled(interp: RbfInterpolant, points) -> np.ndarray:
    """Rescaled basis values at query points.

    Returns (n_basis,) for a single point, (n_pts, n_basis) for a batch.
    Raises :class:`RescaleBreakdownError` if any denominator vanishes.
    """
    pts = np.asarray(points, float)
    single = pts.ndim == 1
    values, ok = evaluate_rescaled_masked(interp, pts)
    if not ok.all():
        bad = int(np.count_nonzero(~ok))
        raise RescaleBreakdownError(
            f"rescaling denominator vanished at {bad} query point(s); "
            "the query lies outside the kernel support"
        )
    return values[0] if single else values


def rmse(interp: RbfInterpolant, probe_points, exact_fn) -> float:
    """Root-mean-square interpolation error over probe points.

    ``exact_fn`` maps an (n, d) array of physical points to exact values,
    broadcastable against the (n, n_basis) interpolated values.  The mean
    runs over every (point, column) residual.
    """
    pts = np.atleast_2d(np.asarray(probe_points, float))
    values = evaluate_rescaled(interp, pts)
    exact = np.asarray(exact_fn(pts), float)
    if exact.ndim == 1:
        exact = exact[:, None]
    resid = values - exact
    return float(np.sqrt(np.mean(resid**2)))


def halton_reference_points(kind: ElementKind, n: int) -> np.ndarray:
    """Deterministic Halton probe points inside the reference element."""
    kind = ElementKind(kind)
    sampler = qmc.Halton(d=kind.ref_dim, scramble=False)
    u = sampler.random(n)
    if kind.ref_dim == 1:
        return 2.0 * u - 1.0
    if kind in (ElementKind.QUAD4, ElementKind.QUAD8):
        return 2.0 * u - 1.0
    # Fold the unit square onto the simplex.
    over = u.sum(axis=1) > 1.0
    u[over] = 1.0 - u[over]
    return u


def basis_diagnostics(
    mesh: Mesh,
    elem: int,
    layout: PointLayout,
    family: KernelFamily,
    epsilon: float | None = None,
    n_probes: int = 40,
    unstable_threshold: float = 1e10,
) -> InterpolationDiagnostics:
    """Fit an element interpolant and measure how well it reproduces the basis.

    The RMSE compares rescaled interpolated basis values against the exact
    shape functions at ``n_probes`` Halton points of the reference element.
    The fit is never rejected here; instability is only flagged.
    """
    interp = fit_master_interpolant(
        mesh, elem, layout, family, epsilon=epsilon, cond_limit=None
    )
    ref = halton_reference_points(mesh.kind, n_probes)
    phys = np.atleast_2d(map_to_physical(mesh, elem, ref))
    exact = shape_values(mesh.kind, ref)
    values, ok = evaluate_rescaled_masked(interp, phys)
    err = float(np.sqrt(np.mean((values[ok] - exact[ok]) ** 2))) if ok.any() else np.inf
    return InterpolationDiagnostics(
        rmse=err,
        condition_estimate=interp.condition,
        unstable=bool(interp.condition > unstable_threshold),
    )
