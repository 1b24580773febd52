import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rng_from, seeds, state, unitary
from qirec.qmat import (
    I2,
    SX,
    SZ,
    BlochAngle,
    basis_from_angle,
    bloch_vector,
    computational_basis,
    dephase,
    dephase_side_b,
    density_matrix,
    herm_eig,
    kron,
    partial_trace,
    pure,
    relative_entropy,
    state_from_bloch,
    trace_distance,
    von_neumann_entropy,
)

PHI = pure([1, 0, 0, 1])
PLUS = pure([1, 1])
ZERO = pure([1, 0])


def test_kron_identity_and_diagonal():
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert np.allclose(kron(SZ, SZ), np.diag([1, -1, -1, 1]))


def test_kron_flips_first_qubit():
    v = np.array([1, 0, 0, 0])
    assert np.allclose(kron(SX, I2) @ v, [0, 0, 1, 0])


def test_kron_rejects_wrong_dims():
    with pytest.raises(ValueError):
        kron(np.eye(4), I2)


def test_partial_trace_examples():
    ra, rb = state(1, 2), state(2, 2)
    assert np.allclose(partial_trace(np.kron(ra, rb), "B"), rb)
    assert np.allclose(partial_trace(np.kron(ra, rb), "A"), ra)
    assert np.allclose(partial_trace(PHI, "A"), I2 / 2)
    assert np.allclose(partial_trace(np.diag([0.5, 0.2, 0.2, 0.1]), "A"), np.diag([0.7, 0.3]))


def test_herm_eig_examples():
    vals, _ = herm_eig(np.diag([3, 1, 2, 0]))
    assert np.allclose(vals, [3, 2, 1, 0])
    vals, vecs = herm_eig(SX)
    assert np.allclose(vals, [1, -1])
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    assert abs(abs(vecs[:, 0].conj() @ plus) - 1) < 1e-12
    assert abs(abs(vecs[:, 1].conj() @ minus) - 1) < 1e-12


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        herm_eig(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("dim", [2, 4])
def test_herm_eig_reconstruction_bulk(dim):
    rng = rng_from(7)
    g = rng.normal(size=(10_000, dim, dim)) + 1j * rng.normal(size=(10_000, dim, dim))
    h = g + np.swapaxes(g, -1, -2).conj()
    vals, vecs = herm_eig(h)
    recon = np.einsum("nij,nj,nkj->nik", vecs, vals, vecs.conj())
    assert np.max(np.abs(recon - h)) < 1e-9
    assert np.all(np.diff(vals, axis=-1) <= 1e-12)
    # numpy as an independent oracle for the spectrum
    assert np.allclose(vals, np.linalg.eigvalsh(h)[..., ::-1], atol=1e-9)


def test_herm_eig_eigenvector_equation():
    h = state(3) * 3 - np.eye(4)
    vals, vecs = herm_eig(h)
    for i in range(4):
        assert np.allclose(h @ vecs[:, i], vals[i] * vecs[:, i], atol=1e-9)


def test_herm_eig_degenerate_spectrum():
    u = unitary(4, 4)
    h = u @ np.diag([1.0, 1.0, 0.0, 0.0]) @ u.conj().T
    vals, vecs = herm_eig(h)
    assert np.allclose(vals, [1, 1, 0, 0], atol=1e-12)
    assert np.allclose(vecs.conj().T @ vecs, np.eye(4), atol=1e-10)


@pytest.mark.parametrize(
    "rho, expected",
    [(ZERO, 0.0), (np.eye(4) / 4, 2.0), (np.diag([0.75, 0.25]), 0.811278124459)],
)
def test_entropy_examples(rho, expected):
    assert von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-9)


def test_relative_entropy_examples():
    rho = state(5, 2)
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)
    assert relative_entropy(ZERO, I2 / 2) == pytest.approx(1.0, abs=1e-12)
    assert relative_entropy(PLUS, ZERO) == math.inf


@pytest.mark.parametrize(
    "a, b, expected",
    [(ZERO, ZERO, 0.0), (ZERO, pure([0, 1]), 1.0), (ZERO, PLUS, 1 / math.sqrt(2))],
)
def test_trace_distance_examples(a, b, expected):
    assert trace_distance(a, b) == pytest.approx(expected, abs=1e-12)


def test_dephase_examples():
    diag = np.diag([0.3, 0.7])
    assert np.allclose(dephase(diag), diag)
    assert np.allclose(dephase(PLUS), I2 / 2)


def test_dephase_side_b_examples():
    assert np.allclose(dephase_side_b(PHI), np.diag([0.5, 0, 0, 0.5]))
    rho_a = state(9, 2)
    assert np.allclose(dephase_side_b(np.kron(rho_a, PLUS)), np.kron(rho_a, I2 / 2))
    chi = 0.5 * (np.kron(state(10, 2), ZERO) + np.kron(state(11, 2), pure([0, 1])))
    assert np.allclose(dephase_side_b(chi), chi)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        density_matrix(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        density_matrix(np.eye(3) / 3)
    clipped = density_matrix(np.diag([1 + 1e-10, -1e-10]))
    assert np.min(np.linalg.eigvalsh(clipped)) >= 0
    assert np.trace(clipped).real == pytest.approx(1.0, abs=1e-14)


def test_bloch_angle_invariants():
    b = BlochAngle(1.0, -0.5)
    assert 0 <= b.phi < 2 * math.pi
    with pytest.raises(ValueError):
        BlochAngle(4.0)
    assert np.allclose(BlochAngle.xz(math.pi / 8).vector, [math.sin(math.pi / 4), 0, math.cos(math.pi / 4)])
    assert np.allclose(BlochAngle.xz(-math.pi / 8).vector, [-math.sin(math.pi / 4), 0, math.cos(math.pi / 4)])


def test_xz_basis_vectors():
    a = 0.3
    b = basis_from_angle(BlochAngle.xz(a))
    assert np.allclose(b[:, 0], [math.cos(a), math.sin(a)])
    assert np.allclose(b[:, 1], [-math.sin(a), math.cos(a)])


@given(seeds, st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_basis_from_angle_is_eigenbasis(seed, theta, phi):
    angle = BlochAngle(theta, phi)
    b = basis_from_angle(angle)
    n = angle.vector
    op = n[0] * SX + n[1] * np.array([[0, -1j], [1j, 0]]) + n[2] * SZ
    assert np.allclose(op @ b[:, 0], b[:, 0], atol=1e-12)
    assert np.allclose(op @ b[:, 1], -b[:, 1], atol=1e-12)


@given(seeds, seeds)
def test_entropy_unitary_invariance(s1, s2):
    rho = state(s1)
    u = unitary(s2, 4)
    assert von_neumann_entropy(u @ rho @ u.conj().T) == pytest.approx(von_neumann_entropy(rho), abs=1e-10)


@given(seeds, st.sampled_from([2, 4]))
def test_entropy_bounds(seed, dim):
    s = von_neumann_entropy(state(seed, dim, rank=1 + seed % dim))
    assert -1e-12 <= s <= math.log2(dim) + 1e-12


@given(seeds, seeds)
def test_relative_entropy_nonnegative_and_zero_only_on_equal(s1, s2):
    rho, sigma = state(s1), state(s2)
    val = relative_entropy(rho, sigma)
    assert val >= 0
    if trace_distance(rho, sigma) > 1e-8:
        assert val > 0


@given(seeds, seeds, seeds)
def test_relative_entropy_appending_a_state(s1, s2, s3):
    rho, sigma, p = state(s1, 2), state(s2, 2), state(s3, 2)
    assert relative_entropy(np.kron(p, rho), np.kron(p, sigma)) == pytest.approx(
        relative_entropy(rho, sigma), abs=1e-10)


@given(seeds, st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_dephase_properties(seed, theta, phi):
    rho = state(seed, 2)
    b = BlochAngle(theta, phi)
    once = dephase(rho, b)
    assert np.trace(once).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(once, once.conj().T)
    assert np.allclose(dephase(once, b), once, atol=1e-12)


@given(seeds, st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_dephase_side_b_commutes_with_unitary_on_a(seed, theta, phi):
    rho = state(seed)
    u = np.kron(unitary(seed + 1), I2)
    b = BlochAngle(theta, phi)
    lhs = dephase_side_b(u @ rho @ u.conj().T, b)
    rhs = u @ dephase_side_b(rho, b) @ u.conj().T
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(seeds)
def test_bloch_round_trip(seed):
    rho = state(seed, 2)
    assert np.allclose(state_from_bloch(bloch_vector(rho)), rho, atol=1e-12)


def test_stacks_match_single_evaluations():
    rhos = np.stack([state(s) for s in range(5)])
    vals = von_neumann_entropy(rhos)
    assert np.allclose(vals, [von_neumann_entropy(r) for r in rhos])
    assert np.allclose(dephase(rhos, computational_basis(4)), [dephase(r) for r in rhos])
