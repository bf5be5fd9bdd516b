import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaccess import linalg
from qaccess.config import using_tolerances
from qaccess.errors import NonSquare, NotHermitian, NotOrthonormal, NotPsd, ShapeMismatch, TooManyColumns

from helpers import GOLDEN_A_TILDE, GOLDEN_EIGENVALUES, random_hermitian, random_psd, random_unitary, seeds


def test_pauli_x_spectrum():
    eig = linalg.hermitian_eig([[0, 1], [1, 0]])
    np.testing.assert_allclose(eig.eigenvalues, [-1, 1], atol=1e-14)


def test_identity_spectrum_and_basis():
    eig = linalg.hermitian_eig(np.eye(3))
    np.testing.assert_allclose(eig.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(eig.vectors.conj().T @ eig.vectors, np.eye(3), atol=1e-14)


def test_golden_scaled_ancilla_spectrum():
    eig = linalg.hermitian_eig(GOLDEN_A_TILDE)
    np.testing.assert_allclose(eig.eigenvalues, GOLDEN_EIGENVALUES, atol=2e-3)


def test_eig_is_bitwise_deterministic():
    rng = np.random.default_rng(5)
    m = random_hermitian(rng, 7)
    a, b = linalg.hermitian_eig(m), linalg.hermitian_eig(m.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.vectors, b.vectors)


def test_eig_errors():
    with pytest.raises(NonSquare):
        linalg.hermitian_eig(np.zeros((2, 3)))
    with pytest.raises(NotHermitian):
        linalg.hermitian_eig([[0, 1], [0, 0]])
    with pytest.raises(ShapeMismatch):
        linalg.hermitian_eig(np.zeros(3))


def test_eig_accepts_tiny_asymmetry():
    m = np.array([[1.0, 0.5 + 1e-10], [0.5, 2.0]])
    linalg.hermitian_eig(m)


def test_eig_degenerate_large_block():
    rng = np.random.default_rng(2)
    u = random_unitary(rng, 6)
    m = u @ np.diag([1, 1, 1, 2, 2, -3.0]) @ u.conj().T
    eig = linalg.hermitian_eig(m)
    np.testing.assert_allclose(eig.eigenvalues, [-3, 1, 1, 1, 2, 2], atol=1e-12)
    assert linalg.max_abs(eig.reconstruct() - m) <= 1e-10 * max(1, linalg.max_abs(m))


@settings(max_examples=120, deadline=None)
@given(seed=seeds, n=st.integers(1, 16))
def test_eig_reconstruction_and_orthonormality(seed, n):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n) * 10 ** rng.uniform(-3, 3)
    eig = linalg.hermitian_eig(m)
    scale = max(1.0, linalg.max_abs(m))
    assert linalg.max_abs(eig.reconstruct() - m) <= 1e-10 * scale
    assert linalg.max_abs(eig.vectors.conj().T @ eig.vectors - np.eye(n)) <= 1e-10
    assert np.all(np.diff(eig.eigenvalues) >= 0)
    np.testing.assert_allclose(eig.eigenvalues, np.linalg.eigvalsh(m), atol=1e-10 * scale)


def test_is_psd_examples():
    v = linalg.is_psd([[1, 0.9], [0.9, 1]])
    assert v.is_psd and abs(v.min_eigenvalue - 0.1) < 1e-12
    v = linalg.is_psd([[0.4, 0.5], [0.5, 0.4]])
    assert not v.is_psd and abs(v.min_eigenvalue + 0.1) < 1e-12
    v = linalg.is_psd(np.zeros((3, 3)))
    assert v.is_psd and v.min_eigenvalue == 0
    assert v.tolerance_used == 1e-9


def test_is_psd_tolerance_is_relative_and_configurable():
    m = np.diag([1000.0, -5e-7])
    assert linalg.is_psd(m).is_psd  # 1e-9 * 1000 = 1e-6
    assert not linalg.is_psd(np.diag([1.0, -5e-7])).is_psd
    with using_tolerances(psd=1e-6):
        assert linalg.is_psd(np.diag([1.0, -5e-7])).is_psd
    assert not linalg.is_psd(m, tol=1e-9).is_psd


@settings(max_examples=50, deadline=None)
@given(seed=seeds, n=st.integers(1, 8))
def test_psd_verdict_consistency(seed, n):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n)
    v = linalg.is_psd(m)
    assert v.is_psd == (v.min_eigenvalue >= -v.tolerance_used)
    assert bool(v) == v.is_psd
    assert abs(v.min_eigenvalue - np.linalg.eigvalsh(m)[0]) < 1e-10 * max(1, linalg.max_abs(m))


def test_hadamard_examples():
    a = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(linalg.hadamard(a, [[5, 6], [7, 8]]), [[5, 12], [21, 32]])
    np.testing.assert_array_equal(linalg.hadamard(a, np.ones((2, 2))), a)
    np.testing.assert_array_equal(linalg.hadamard(a, np.eye(2)), np.diag([1, 4]))
    with pytest.raises(ShapeMismatch):
        linalg.hadamard(a, np.ones((3, 3)))


def test_sqrt_examples():
    np.testing.assert_allclose(linalg.matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2, 3]), atol=1e-14)
    np.testing.assert_allclose(linalg.matrix_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-14)
    p = np.full((2, 2), 0.5)
    np.testing.assert_allclose(linalg.matrix_sqrt_psd(p), p, atol=1e-12)
    with pytest.raises(NotPsd):
        linalg.matrix_sqrt_psd(np.diag([1.0, -0.1]))
    # tiny negative eigenvalues are clipped
    linalg.matrix_sqrt_psd(np.diag([1.0, -1e-12]))


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 8))
def test_sqrt_squares_back_and_is_covariant(seed, n):
    rng = np.random.default_rng(seed)
    m = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
    r = linalg.matrix_sqrt_psd(m)
    assert linalg.max_abs(r @ r - m) <= 1e-9 * max(1, linalg.max_abs(m))
    assert linalg.is_psd(r)
    u = random_unitary(rng, n)
    lhs = linalg.matrix_sqrt_psd(u @ m @ u.conj().T)
    assert linalg.max_abs(lhs - u @ r @ u.conj().T) <= 1e-8


def test_factor_gram_examples():
    w = linalg.factor_gram(np.eye(2))
    np.testing.assert_allclose(w.conj().T @ w, np.eye(2), atol=1e-14)
    w = linalg.factor_gram(np.ones((2, 2)))
    assert w.shape == (1, 2)
    np.testing.assert_allclose(w[:, 0], w[:, 1], atol=1e-14)
    assert abs(np.linalg.norm(w[:, 0]) - 1) < 1e-14
    x = np.array([[1, 0.5], [0.5, 1]])
    b = x - 0.5 * np.eye(2)
    np.testing.assert_allclose(b, np.full((2, 2), 0.5))
    w = linalg.factor_gram(b)
    assert w.shape[0] == 1
    np.testing.assert_allclose(w[:, 0], w[:, 1], atol=1e-14)
    assert abs(np.linalg.norm(w[:, 0]) - np.sqrt(0.5)) < 1e-14
    assert linalg.factor_gram(np.zeros((3, 3))).shape == (0, 3)
    with pytest.raises(NotPsd):
        linalg.factor_gram(np.diag([1.0, -1.0]))


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 12))
def test_factor_gram_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(1, n + 1))
    g = random_psd(rng, n, rank)
    w = linalg.factor_gram(g)
    assert w.shape[0] == rank
    assert linalg.max_abs(w.conj().T @ w - g) <= 1e-9 * max(1, linalg.max_abs(g))


def test_singular_value_examples():
    np.testing.assert_allclose(linalg.singular_values(np.diag([3.0, 1.0])), [3, 1], atol=1e-14)
    np.testing.assert_allclose(linalg.singular_values(np.zeros((2, 3))), [0, 0, 0])
    np.testing.assert_allclose(linalg.singular_values(np.array([[0.6], [0.8]])), [1.0], atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, r=st.integers(1, 6), c=st.integers(1, 6))
def test_singular_values_match_reference(seed, r, c):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))
    sv = linalg.singular_values(m)
    ref = np.zeros(c)
    ref[: min(r, c)] = np.linalg.svd(m, compute_uv=False)
    np.testing.assert_allclose(sv, ref, atol=1e-9)
    assert np.all(np.diff(sv) <= 1e-15)


def test_complete_to_unitary_examples():
    np.testing.assert_allclose(linalg.complete_to_unitary(np.array([1.0, 0.0]), 2), np.eye(2), atol=1e-15)
    rng = np.random.default_rng(0)
    u = random_unitary(rng, 3)
    np.testing.assert_allclose(linalg.complete_to_unitary(u, 3), u, atol=1e-12)
    u = linalg.complete_to_unitary(np.array([1.0, 1.0]) / np.sqrt(2), 2)
    second = u[:, 1] / (u[0, 1] / abs(u[0, 1]))
    np.testing.assert_allclose(second, np.array([1, -1]) / np.sqrt(2), atol=1e-12)
    assert linalg.max_abs(u.conj().T @ u - np.eye(2)) <= 1e-9


def test_complete_to_unitary_errors():
    with pytest.raises(NotOrthonormal):
        linalg.complete_to_unitary(np.array([[1.0, 1.0], [0.0, 0.0]]), 2)
    with pytest.raises(TooManyColumns):
        linalg.complete_to_unitary(np.eye(3)[:2, :], 2)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, dim=st.integers(1, 10), data=st.data())
def test_complete_to_unitary_is_unitary(seed, dim, data):
    k = data.draw(st.integers(0, dim))
    rng = np.random.default_rng(seed)
    cols = random_unitary(rng, dim)[:, :k]
    u = linalg.complete_to_unitary(cols, dim)
    assert linalg.max_abs(u.conj().T @ u - np.eye(dim)) <= 1e-9
    assert linalg.max_abs(u[:, :k] - cols) <= 1e-8


def test_orthonormal_basis_drops_dependent_columns():
    v = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    q = linalg.orthonormal_basis(v)
    assert q.shape == (3, 2)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(2), atol=1e-14)
