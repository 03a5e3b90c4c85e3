import numpy as np
import pytest

from branchqem import qmath
from branchqem.qmath import (
    DensityMatrix,
    DimensionMismatchError,
    SubsystemShape,
    bell_state,
    complete_basis,
    embed,
    kron,
    partial_trace,
    project,
)


def test_kron_identity():
    assert np.allclose(kron(qmath.ID2, qmath.ID2), np.eye(4))


def test_kron_basis_action():
    ket10 = np.zeros(4)
    ket10[2] = 1.0
    out = kron(qmath.X, qmath.ID2) @ ket10
    expected = np.zeros(4)
    expected[0] = 1.0  # |10> -> |00>
    assert np.allclose(out, expected)


def test_kron_dimension_arithmetic():
    a = np.ones((2, 2))
    b = np.ones((3, 3))
    assert kron(a, b).shape == (6, 6)


def test_kron_mixed_product_property():
    rng = np.random.default_rng(0)
    a, b, c, d = (rng.standard_normal((2, 2)) for _ in range(4))
    left = kron(a, b) @ kron(c, d)
    right = kron(a @ c, b @ d)
    assert np.allclose(left, right)


def test_kron_associativity():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3))
    c = rng.standard_normal((2, 2))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_embed_single_qubit():
    shape = SubsystemShape([2, 2])
    assert np.allclose(embed(qmath.X, [1], shape), np.kron(np.eye(2), qmath.X))


def test_embed_swap_action():
    shape = SubsystemShape([2, 2])
    swap = np.eye(4)[[0, 2, 1, 3]]
    v01 = np.zeros(4)
    v01[1] = 1.0
    out = embed(swap, [0, 1], shape) @ v01
    expected = np.zeros(4)
    expected[2] = 1.0
    assert np.allclose(out, expected)


def test_embed_rejects_wrong_local_dim():
    shape = SubsystemShape([3, 2])
    with pytest.raises(DimensionMismatchError):
        embed(qmath.Z, [0], shape)


def test_embed_duplicate_target_rejected():
    shape = SubsystemShape([2, 2])
    with pytest.raises(ValueError):
        embed(np.eye(4), [0, 0], shape)


def test_embed_disjoint_commute():
    rng = np.random.default_rng(2)
    shape = SubsystemShape([2, 3, 2])
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    ea = embed(a, [0], shape)
    eb = embed(b, [2], shape)
    assert np.allclose(ea @ eb, eb @ ea)


def test_embed_permutation_consistency():
    rng = np.random.default_rng(3)
    shape = SubsystemShape([2, 2, 2])
    op = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    direct = embed(op, [2, 0], shape)
    # acting on (2, 0) equals permuting to adjacent slots and back
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    perm = qmath.permute_subsystems(v, [2, 0, 1], shape)
    inner = embed(op, [0, 1], SubsystemShape([2, 2, 2])) @ perm
    undone = qmath.permute_subsystems(
        inner, [1, 2, 0], SubsystemShape([2, 2, 2])
    )
    assert np.allclose(direct @ v, undone)


def test_partial_trace_bell_marginal():
    shape = SubsystemShape([2, 2])
    rho = DensityMatrix.from_ket(bell_state(1), shape)
    for keep in ([0], [1]):
        red = partial_trace(rho, keep)
        assert np.allclose(red.matrix, np.eye(2) / 2)


def test_partial_trace_product_state():
    rng = np.random.default_rng(4)
    a = qmath.random_ket(2, rng)
    b = qmath.random_ket(3, rng)
    rho = DensityMatrix.from_ket(kron(a, b), SubsystemShape([2, 3]))
    red = partial_trace(rho, [0])
    assert np.allclose(red.matrix, np.outer(a, a.conj()))


def test_partial_trace_keep_all_is_identity():
    rng = np.random.default_rng(5)
    psi = qmath.random_ket(6, rng)
    rho = DensityMatrix.from_ket(psi, SubsystemShape([2, 3]))
    red = partial_trace(rho, [0, 1])
    assert np.allclose(red.matrix, rho.matrix)


def test_partial_trace_marginal_traces():
    rng = np.random.default_rng(6)
    psi = qmath.random_ket(8, rng)
    rho = DensityMatrix.from_ket(psi, SubsystemShape([2, 2, 2]))
    left = partial_trace(rho, [0])
    right = partial_trace(rho, [1, 2])
    assert abs(left.trace - 1.0) < 1e-10
    assert abs(right.trace - 1.0) < 1e-10


def test_project_bell_half():
    shape = SubsystemShape([2, 2])
    rho = DensityMatrix.from_ket(bell_state(1), shape)
    reduced = project(rho, qmath.KET0, [0])
    assert abs(reduced.trace - 0.5) < 1e-12
    assert np.allclose(reduced.matrix, 0.5 * np.outer(qmath.KET0, qmath.KET0))


def test_project_completeness():
    rng = np.random.default_rng(7)
    psi = qmath.random_ket(8, rng)
    rho = DensityMatrix.from_ket(psi, SubsystemShape([2, 2, 2]))
    basis = complete_basis(qmath.random_ket(2, rng))
    total = sum(project(rho, b, [1]).trace for b in basis)
    assert abs(total - 1.0) < 1e-10


def test_project_product_factor():
    rng = np.random.default_rng(8)
    a = qmath.random_ket(2, rng)
    phi = qmath.random_ket(2, rng)
    rho = DensityMatrix.from_ket(kron(a, phi), SubsystemShape([2, 2]))
    reduced = project(rho, phi, [1])
    assert np.allclose(reduced.matrix, np.outer(a, a.conj()), atol=1e-12)


def test_complete_basis_orthonormal():
    rng = np.random.default_rng(9)
    first = qmath.random_ket(5, rng)
    basis = complete_basis(first)
    g = np.array([[np.vdot(a, b) for b in basis] for a in basis])
    assert np.allclose(g, np.eye(5), atol=1e-10)
    assert np.allclose(basis[0], first / np.linalg.norm(first))


def test_density_matrix_validation():
    shape = SubsystemShape([2])
    good = DensityMatrix(np.eye(2) / 2, shape)
    good.validate()
    bad = DensityMatrix(np.array([[1.2, 0], [0, -0.2]]), shape)
    with pytest.raises(ValueError):
        bad.validate()


def test_subsystem_shape_rejects_dim_one():
    with pytest.raises(ValueError):
        SubsystemShape([1, 2])


def test_unitary_hermitian_checks():
    assert qmath.is_unitary(qmath.H)
    assert not qmath.is_unitary(np.array([[1, 1], [0, 1]]))
    assert qmath.is_hermitian(qmath.Y)
    assert not qmath.is_hermitian(qmath.T_GATE)
