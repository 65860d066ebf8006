import numpy as np
import pytest
from numpy.testing import assert_allclose

from spdkalman import ContractError
from spdkalman.symvec import (
    btr,
    duplication,
    kron_h,
    kron_u,
    sel_matrix,
    symmetrize,
    unuvec,
    unvech,
    uvec,
    vech,
    vech_dim,
    vech_len,
)


def test_vech_hand_value():
    # Column-major lower triangle: [X00, X10, X11].
    assert_allclose(vech([[2.0, 1.0], [1.0, 3.0]]), [2.0, 1.0, 3.0])


def test_vech_3x3_order():
    x = np.array([[1.0, 2.0, 3.0],
                  [2.0, 4.0, 5.0],
                  [3.0, 5.0, 6.0]])
    assert_allclose(vech(x), [1, 2, 3, 4, 5, 6])


def test_uvec_hand_value():
    assert_allclose(uvec([[1.0, 2.0], [3.0, 4.0]]), [1.0, 3.0, 2.0, 4.0])


def test_vech_rejects_asymmetric():
    with pytest.raises(ContractError):
        vech([[1.0, 2.0], [0.0, 1.0]])


def test_vech_rejects_nonsquare():
    with pytest.raises(ContractError):
        vech(np.ones((2, 3)))


def test_unvech_roundtrip(rng):
    for n in (1, 2, 3, 5):
        x = rng.standard_normal((n, n))
        x = (x + x.T) / 2
        assert_allclose(unvech(vech(x)), x)


def test_unuvec_roundtrip(rng):
    a = rng.standard_normal((3, 3))
    assert_allclose(unuvec(uvec(a)), a)
    assert_allclose(unuvec(uvec(a), n=3), a)
    with pytest.raises(ContractError):
        unuvec(np.ones(5))


def test_vech_len_dim():
    assert vech_len(1) == 1
    assert vech_len(4) == 10
    assert vech_dim(10) == 4
    with pytest.raises(ContractError):
        vech_dim(5)


def test_duplication_hand_value():
    d = duplication(2)
    expected = np.array([[1.0, 0.0, 0.0],
                         [0.0, 1.0, 0.0],
                         [0.0, 1.0, 0.0],
                         [0.0, 0.0, 1.0]])
    assert_allclose(d, expected)


def test_duplication_identity(rng):
    for n in (1, 2, 4):
        x = rng.standard_normal((n, n))
        x = (x + x.T) / 2
        assert_allclose(duplication(n) @ vech(x), uvec(x), atol=1e-14)


def test_sel_matrix_hand_value():
    s = sel_matrix(2)
    expected = np.array([[1.0, 0.0, 0.0, 0.0],
                         [0.0, 1.0, 0.0, 0.0],
                         [0.0, 0.0, 0.0, 1.0]])
    assert_allclose(s, expected)


def test_sel_matrix_picks_vech(rng):
    # Holds for any square matrix, symmetric or not; the vech order is the
    # column-major lower triangle, rebuilt here directly.
    for n in (1, 3, 4):
        a = rng.standard_normal((n, n))
        want = np.concatenate([a[j:, j] for j in range(n)])
        assert_allclose(sel_matrix(n) @ uvec(a), want)


def test_sel_of_duplication_is_identity():
    for n in (1, 2, 3):
        assert_allclose(sel_matrix(n) @ duplication(n), np.eye(vech_len(n)))


def test_kron_h_hand_value():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    x = np.array([[2.0, 1.0], [1.0, 3.0]])
    # A X A^T = [[7, 4], [4, 3]].
    assert_allclose(kron_h(a) @ vech(x), [7.0, 4.0, 3.0])


def test_kron_h_identity_random(rng):
    for _ in range(20):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 5))
        a = rng.standard_normal((m, n))
        x = rng.standard_normal((n, n))
        x = (x + x.T) / 2
        assert_allclose(kron_h(a) @ vech(x), vech(a @ x @ a.T), atol=1e-12)


def _uvec_rect(a):
    # uvec generalized to rectangular products A X B.
    return np.asarray(a, dtype=float).flatten(order="F")


def test_kron_u_identity_random(rng):
    for _ in range(20):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 5))
        r = int(rng.integers(1, 5))
        a = rng.standard_normal((m, n))
        b = rng.standard_normal((n, r))
        x = rng.standard_normal((n, n))
        x = (x + x.T) / 2
        assert_allclose(kron_u(b.T, a) @ vech(x), _uvec_rect(a @ x @ b),
                        atol=1e-12)


def test_kron_u_of_identities_is_duplication():
    for n in (1, 2, 3):
        assert_allclose(kron_u(np.eye(n), np.eye(n)), duplication(n))


def test_kron_u_shape_mismatch():
    with pytest.raises(ContractError):
        kron_u(np.ones((2, 3)), np.ones((2, 2)))


def test_btr_sums_diagonal_blocks(rng):
    n = 2
    blocks = rng.standard_normal((n, n, n, n))
    big = np.block([[blocks[i, j] for j in range(n)] for i in range(n)])
    assert_allclose(btr(big, n), blocks[0, 0] + blocks[1, 1])


def test_btr_trace_pairing(rng):
    # trace(M kron(I, B)) == trace(btr(M) B) for all B.
    n = 3
    m = rng.standard_normal((n * n, n * n))
    b = rng.standard_normal((n, n))
    lhs = np.trace(m @ np.kron(np.eye(n), b))
    rhs = np.trace(btr(m, n) @ b)
    assert_allclose(lhs, rhs, atol=1e-12)


def test_btr_shape_check():
    with pytest.raises(ContractError):
        btr(np.eye(3), 2)


def test_symmetrize():
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    assert_allclose(symmetrize(a), [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ContractError):
        symmetrize(np.ones((2, 3)))
