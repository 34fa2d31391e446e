import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mortar_rbf.elements import ElementKind
from mortar_rbf.errors import InvalidGeometryError, SingularOperatorError
from mortar_rbf.meshes import InterfaceMesh, Side, segment_mesh, segment_pair
from mortar_rbf.mortar import (
    InterfacePair,
    MortarConfig,
    NewtonSettings,
    Scheme,
    assemble,
    compute_transfer,
    consistency_report,
    contact_search,
    interface_transfer,
    load_matrix_text,
    project_point_newton,
    save_matrix_text,
    support_detect,
)
from mortar_rbf.rbf import KernelFamily

ALL_SCHEMES = list(Scheme)

EXACT_UNIT_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


def unit_pair(n_master, n_slave, kind=ElementKind.SEG2):
    return InterfacePair(*segment_pair(n_master, n_slave, kind, span=(0.0, 1.0)))


@pytest.mark.parametrize("scheme", [Scheme.SB1D, Scheme.EB])
def test_single_element_matrices_match_closed_form(scheme):
    matrices = assemble(unit_pair(1, 1), MortarConfig(scheme=scheme))
    np.testing.assert_allclose(
        matrices.slave_mass.toarray(), EXACT_UNIT_MASS, atol=1e-15
    )
    np.testing.assert_allclose(
        matrices.coupling.toarray(), EXACT_UNIT_MASS, atol=1e-15
    )
    assert matrices.stats.dropped_fraction == 0.0


def test_single_element_kernel_scheme_is_close_to_closed_form():
    matrices = assemble(unit_pair(1, 1), MortarConfig(scheme=Scheme.RB))
    np.testing.assert_allclose(
        matrices.slave_mass.toarray(), EXACT_UNIT_MASS, atol=1e-15
    )
    np.testing.assert_allclose(
        matrices.coupling.toarray(), EXACT_UNIT_MASS, atol=1e-6
    )


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
def test_conforming_transfer_is_identity(scheme):
    pair = unit_pair(4, 4)
    transfer = compute_transfer(assemble(pair, MortarConfig(scheme=scheme)))
    identity = np.eye(transfer.n_slave_nodes)
    tol = 1e-6 if scheme is Scheme.RB else 1e-13
    np.testing.assert_allclose(transfer.matrix, identity, atol=tol)


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
@pytest.mark.parametrize("kind", [ElementKind.SEG2, ElementKind.SEG3])
def test_row_sums_and_mass_bookkeeping(scheme, kind):
    pair = unit_pair(3, 4, kind)
    matrices = assemble(pair, MortarConfig(scheme=scheme, n_gauss=4))
    transfer = compute_transfer(matrices)
    np.testing.assert_allclose(transfer.row_sums(), 1.0, atol=1e-12)

    mass = matrices.slave_mass.toarray()
    np.testing.assert_allclose(mass, mass.T, atol=1e-15)
    # Both matrices integrate partitions of unity over the same points, so
    # their totals equal each other and the interface length.
    assert mass.sum() == pytest.approx(1.0, rel=1e-12)
    assert matrices.coupling.sum() == pytest.approx(1.0, rel=1e-10)


def test_constant_transfer_is_exact():
    pair = unit_pair(5, 3)
    for scheme in ALL_SCHEMES:
        transfer = compute_transfer(assemble(pair, MortarConfig(scheme=scheme)))
        ones = interface_transfer(transfer, np.ones(transfer.n_master_nodes))
        np.testing.assert_allclose(ones, 1.0, atol=1e-12)


def test_projection_scheme_ignores_normal_offset():
    reference = assemble(unit_pair(3, 4), MortarConfig(scheme=Scheme.EB))
    master = segment_mesh(3, span=(0.0, 1.0))
    lifted = segment_mesh(4, span=(0.0, 1.0), side=Side.SLAVE, height=0.05)
    offset = assemble(InterfacePair(master, lifted), MortarConfig(scheme=Scheme.EB))
    np.testing.assert_allclose(
        offset.coupling.toarray(), reference.coupling.toarray(), atol=1e-9
    )
    np.testing.assert_allclose(
        offset.slave_mass.toarray(), reference.slave_mass.toarray(), atol=1e-12
    )


def test_projection_scheme_converges_to_exact_intersections():
    pair = unit_pair(2, 3)
    exact = assemble(pair, MortarConfig(scheme=Scheme.SB1D)).coupling.toarray()
    errors = []
    for n_gauss in (2, 8, 32):
        approx = assemble(
            pair, MortarConfig(scheme=Scheme.EB, n_gauss=n_gauss)
        ).coupling.toarray()
        errors.append(np.abs(approx - exact).max())
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-4


@pytest.mark.parametrize("scheme", [Scheme.RB, Scheme.EB])
def test_master_element_order_does_not_matter(scheme):
    pair = unit_pair(3, 4)
    shuffled_master = InterfaceMesh(
        pair.master.nodes.copy(),
        pair.master.connectivity[::-1].copy(),
        pair.master.kind,
        pair.master.side,
    )
    base = assemble(pair, MortarConfig(scheme=scheme))
    shuffled = assemble(
        InterfacePair(shuffled_master, pair.slave), MortarConfig(scheme=scheme)
    )
    np.testing.assert_allclose(
        shuffled.coupling.toarray(), base.coupling.toarray(), atol=1e-13
    )
    np.testing.assert_allclose(
        shuffled.slave_mass.toarray(), base.slave_mass.toarray(), atol=1e-13
    )


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
def test_uncovered_slave_elements_are_reported(scheme):
    master = segment_mesh(2, span=(0.0, 0.5))
    slave = segment_mesh(4, span=(0.0, 1.0), side=Side.SLAVE)
    matrices = assemble(InterfacePair(master, slave), MortarConfig(scheme=scheme))
    assert matrices.stats.uncovered_slave_elements == (2, 3)

    with pytest.raises(SingularOperatorError) as info:
        compute_transfer(matrices)
    assert tuple(info.value.nodes) == (3, 4)

    report = consistency_report(matrices)
    assert report.row_sum_defect == np.inf
    assert report.uncovered_slaves == (2, 3)


def test_dropped_fraction_counts_points_outside_the_master():
    master = segment_mesh(2, span=(0.0, 0.5))
    slave = segment_mesh(4, span=(0.0, 1.0), side=Side.SLAVE)
    matrices = assemble(
        InterfacePair(master, slave), MortarConfig(scheme=Scheme.EB, n_gauss=2)
    )
    assert matrices.stats.gauss_points_total == 8
    assert matrices.stats.dropped_fraction == pytest.approx(0.5)


def test_contact_search_finds_every_true_overlap():
    pair = unit_pair(3, 5)
    candidates = contact_search(pair)
    slave_x = pair.slave.nodes[:, 0]
    master_x = pair.master.nodes[:, 0]
    for s_elem, cands in enumerate(candidates):
        s_lo, s_hi = sorted(slave_x[pair.slave.connectivity[s_elem]])
        for m_elem in range(pair.master.n_elems):
            m_lo, m_hi = sorted(master_x[pair.master.connectivity[m_elem]])
            if min(s_hi, m_hi) - max(s_lo, m_lo) > 1e-12:
                assert m_elem in cands


def test_support_detect_interval():
    assert support_detect([0.0, 0.5, 1.0], tol=0.0)
    assert not support_detect([-0.01, 0.5], tol=1e-6)
    assert support_detect([-0.01, 0.5], tol=0.05)
    batch = support_detect([[0.2, 0.8], [1.2, 0.5]], tol=1e-6)
    assert batch.tolist() == [True, False]


def test_point_projection_on_affine_segment():
    mesh = segment_mesh(3, span=(0.0, 1.0))
    xi, converged = project_point_newton(mesh, 0, [1.0 / 6.0, 0.0])
    assert converged
    assert xi[0] == pytest.approx(0.0, abs=1e-10)
    xi, converged = project_point_newton(mesh, 0, [1.0 / 3.0, 0.2])
    assert converged
    assert xi[0] == pytest.approx(1.0, abs=1e-8)


def test_exact_scheme_requires_straight_meshes():
    master = segment_mesh(2, span=(0.0, 1.0))
    kinked = InterfaceMesh(
        np.array([[0.0, 0.0], [0.5, 0.08], [1.0, 0.0]]),
        np.array([[0, 1], [1, 2]]),
        ElementKind.SEG2,
        Side.SLAVE,
    )
    with pytest.raises(InvalidGeometryError):
        assemble(InterfacePair(master, kinked), MortarConfig(scheme=Scheme.SB1D))


def test_pair_and_config_validation():
    seg = segment_mesh(2)
    with pytest.raises(ValueError):
        MortarConfig(support_tol=0.5)
    with pytest.raises(ValueError):
        MortarConfig(n_gauss=0)
    with pytest.raises(ValueError):
        MortarConfig(epsilon=-1.0)
    with pytest.raises(ValueError):
        NewtonSettings(tol=0.0)
    with pytest.raises(ValueError):
        NewtonSettings(max_iter=0)
    with pytest.raises(ValueError):
        InterfacePair(seg, seg, gap_tolerance=-0.1)
    with pytest.raises(ValueError):
        assemble(unit_pair(1, 1), MortarConfig(n_gauss=1))


def test_matrix_text_round_trip(tmp_path):
    matrices = assemble(unit_pair(3, 4), MortarConfig(scheme=Scheme.EB))
    path = tmp_path / "coupling.txt"
    save_matrix_text(matrices.coupling, path)
    again = load_matrix_text(path)
    np.testing.assert_array_equal(again.toarray(), matrices.coupling.toarray())

    dense = np.array([[0.0, -1.25e-17], [3.0, 0.125]])
    save_matrix_text(dense, path)
    np.testing.assert_array_equal(load_matrix_text(path).toarray(), dense)


def test_matrix_text_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("matrix 2 2\n")
    with pytest.raises(ValueError):
        load_matrix_text(path)
    path.write_text("matrix 2 2 3\n0 0 1.0\n")
    with pytest.raises(ValueError):
        load_matrix_text(path)


@settings(deadline=None, max_examples=15)
@given(
    n_master=st.integers(min_value=1, max_value=6),
    n_slave=st.integers(min_value=1, max_value=6),
    scheme=st.sampled_from(ALL_SCHEMES),
)
def test_row_sums_are_one_for_any_pair(n_master, n_slave, scheme):
    config = MortarConfig(scheme=scheme, kernel_family=KernelFamily.WENDLAND_C2)
    transfer = compute_transfer(assemble(unit_pair(n_master, n_slave), config))
    np.testing.assert_allclose(transfer.row_sums(), 1.0, atol=1e-10)
