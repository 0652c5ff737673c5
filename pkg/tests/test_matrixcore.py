import numpy as np
import pytest

from retrodiction import matrixcore as mc
from retrodiction.errors import NotHermitian, NotPSD, NotSquare

SQ2 = np.sqrt(2.0)


def test_pauli_x_eigensystem():
    lam, v = mc.herm_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(lam, [1, -1])
    assert np.allclose(np.abs(v[:, 0]), [1 / SQ2, 1 / SQ2])
    assert np.allclose(v[0, 1] * v[1, 1].conj(), -0.5)
    assert np.allclose(v @ np.diag(lam) @ v.conj().T, [[0, 1], [1, 0]])


def test_diagonal_eigensystem_is_sorted_descending():
    lam, v = mc.herm_eig(np.diag([0.3, 0.7]))
    assert np.allclose(lam, [0.7, 0.3])
    assert np.allclose(np.abs(v), [[0, 1], [1, 0]])


def test_identity_eigensystem():
    lam, v = mc.herm_eig(np.eye(2))
    assert np.allclose(lam, [1, 1])
    assert np.allclose(v.conj().T @ v, np.eye(2))


def test_rejects_bad_inputs():
    with pytest.raises(NotSquare):
        mc.herm_eig(np.zeros((2, 3)))
    with pytest.raises(NotHermitian):
        mc.herm_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NotPSD):
        mc.psd_sqrt(np.diag([1.0, -0.1]))


@pytest.mark.parametrize(
    "m, root",
    [
        (np.diag([4.0, 9.0]), np.diag([2.0, 3.0])),
        (np.zeros((2, 2)), np.zeros((2, 2))),
        (np.full((2, 2), 0.5), np.full((2, 2), 0.5)),
    ],
)
def test_psd_sqrt(m, root):
    s = mc.psd_sqrt(m)
    assert np.allclose(s, root)
    assert np.allclose(s @ s, m)


def test_pinv_examples():
    assert np.allclose(mc.pinv_psd(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    assert np.allclose(mc.pinv_psd(np.eye(3)), np.eye(3))
    m = np.diag([0.7, 0.3, 0.0])
    inv = mc.pinv_psd(m)
    assert np.allclose(inv, np.diag([1 / 0.7, 1 / 0.3, 0.0]))
    assert np.allclose(m @ inv @ m, m)
    assert np.allclose(inv @ m @ inv, inv)


def test_pinv_sqrt_squares_to_pinv(rng):
    z = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    m = z @ z.conj().T
    r = mc.pinv_sqrt_psd(m)
    assert np.allclose(r @ r, np.linalg.pinv(m, hermitian=True))


def test_support_projection_examples():
    assert np.allclose(mc.support_projection(np.diag([0.7, 0.3, 0.0])), np.diag([1, 1, 0]))
    v = np.array([1, 1]) / SQ2
    p = np.outer(v, v)
    q = mc.support_projection(p)
    assert np.allclose(q, p)
    assert np.allclose(q @ q, q)
    z = np.array([[0.6, 0.2j], [-0.2j, 0.4]])
    assert np.allclose(mc.support_projection(z), np.eye(2))


def test_rank_cutoff_is_relative():
    m = np.diag([1e-3, 1e-15])
    assert mc.rank(m) == 1
    assert mc.rank(np.diag([1e-3, 1e-12])) == 2
    # a caller-supplied scale raises the cutoff
    assert mc.rank(np.diag([1e-3, 1e-12]), scale=100.0) == 1


def test_small_negative_noise_is_clamped():
    s = mc.psd_sqrt(np.diag([1.0, -1e-13]))
    assert np.allclose(s, np.diag([1.0, 0.0]))


def test_tolerance_override_is_scoped():
    m = np.diag([1.0, 1e-8])
    assert mc.rank(m) == 2
    with mc.use_tolerance(mc.Tolerance(eig_cut_rel=1e-6)):
        assert mc.rank(m) == 1
    assert mc.rank(m) == 2
    with pytest.raises(ValueError):
        mc.Tolerance(abs_eps=0.0)


def test_random_isometry_and_completion(rng):
    v = mc.random_isometry(5, 3, rng)
    assert np.allclose(v.conj().T @ v, np.eye(3))
    u = mc.random_unitary(4, rng)
    assert np.allclose(u @ u.conj().T, np.eye(4))
    full = mc.complete_orthonormal(v, 5)
    assert full.shape == (5, 5)
    assert np.allclose(full[:, :3], v)
    assert np.allclose(full.conj().T @ full, np.eye(5))
    empty = mc.complete_orthonormal(np.zeros((3, 0)), 3)
    assert np.allclose(empty.conj().T @ empty, np.eye(3))
