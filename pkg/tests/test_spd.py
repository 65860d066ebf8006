import numpy as np
import pytest
from numpy.testing import assert_allclose

from spdkalman import (
    ContractError,
    NotSpdError,
    SpdMatrix,
    TangentPair,
    ai_inner,
    geodesic,
    pair_inner,
    pair_norm,
    retract,
)
from spdkalman.spd import egrad_to_rgrad, ehess_to_rhess, spd_sqrt

from conftest import random_spd, random_sym


def test_constructor_accepts_spd(rng):
    x = random_spd(rng, 3)
    assert x.n == 3
    assert x.eig_min > 0
    assert not x.data.flags.writeable


def test_constructor_rejects_indefinite():
    with pytest.raises(NotSpdError):
        SpdMatrix([[1.0, 0.0], [0.0, -1.0]])


def test_constructor_rejects_singular():
    with pytest.raises(NotSpdError):
        SpdMatrix([[1.0, 1.0], [1.0, 1.0]])


def test_constructor_rejects_asymmetric():
    with pytest.raises(ContractError):
        SpdMatrix([[1.0, 0.5], [0.0, 1.0]])


def test_constructor_rejects_nonsquare():
    with pytest.raises(ContractError):
        SpdMatrix(np.ones((2, 3)))


def test_power_and_solve(rng):
    x = random_spd(rng, 4)
    assert_allclose(x.power(0.5) @ x.power(0.5), x.data, atol=1e-10)
    assert_allclose(x.power(-1.0) @ x.data, np.eye(4), atol=1e-10)
    b = rng.standard_normal((4, 2))
    assert_allclose(x.data @ x.solve(b), b, atol=1e-10)


def test_spd_sqrt(rng):
    x = random_spd(rng, 3)
    s = spd_sqrt(x)
    assert_allclose(s.data @ s.data, x.data, atol=1e-10)


def test_identity_helper():
    x = SpdMatrix.identity(3, scale=2.0)
    assert_allclose(x.data, 2.0 * np.eye(3))


def test_ai_inner_scalar_hand_value():
    # trace(X^-1 V1 X^-1 V2) with X=2, V1=V2=3 gives 2.25.
    x = SpdMatrix([[2.0]])
    assert_allclose(ai_inner(x, np.array([[3.0]]), np.array([[3.0]])), 2.25)


def test_ai_inner_matches_direct(rng):
    x = random_spd(rng, 4)
    v1 = random_sym(rng, 4)
    v2 = random_sym(rng, 4)
    xi = np.linalg.inv(x.data)
    assert_allclose(ai_inner(x, v1, v2), np.trace(xi @ v1 @ xi @ v2),
                    rtol=1e-10)


def test_ai_inner_affine_invariance(rng):
    # The metric is invariant under congruence X -> A X A^T.
    x = random_spd(rng, 3)
    v1 = random_sym(rng, 3)
    v2 = random_sym(rng, 3)
    a = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    before = ai_inner(x, v1, v2)
    after = ai_inner(SpdMatrix(a @ x.data @ a.T), a @ v1 @ a.T, a @ v2 @ a.T)
    assert_allclose(after, before, rtol=1e-9)


def test_retract_diagonal_hand_value():
    # At the identity the retraction is the matrix exponential.
    x = SpdMatrix(np.eye(2))
    v = np.diag([np.log(2.0), 0.0])
    assert_allclose(retract(x, v).data, np.diag([2.0, 1.0]), atol=1e-12)


def test_retract_stays_spd_for_any_scale(rng):
    for _ in range(10):
        n = int(rng.integers(1, 5))
        x = random_spd(rng, n)
        v = random_sym(rng, n, scale=3.0)
        for s in (-2.0, -1.0, 0.0, 1.0, 2.0):
            y = retract(x, v, s)  # constructor enforces positive definiteness
            assert y.eig_min > 0


def test_retract_zero_is_identity(rng):
    x = random_spd(rng, 3)
    assert_allclose(retract(x, np.zeros((3, 3))).data, x.data, atol=1e-12)


def test_retract_first_order(rng):
    # d/ds retract(X, sV) at s=0 equals V.
    x = random_spd(rng, 3)
    v = random_sym(rng, 3)
    h = 1e-6
    fd = (retract(x, v, h).data - retract(x, v, -h).data) / (2 * h)
    assert_allclose(fd, v, atol=1e-6)


def test_retract_along_x_is_scaling(rng):
    # V = X moves along the one-parameter scaling geodesic e^s X.
    x = random_spd(rng, 3)
    y = retract(x, x.data, 1.0)
    assert_allclose(y.data, np.e * x.data, rtol=1e-10)


def test_geodesic_endpoints(rng):
    x = random_spd(rng, 3)
    y = random_spd(rng, 3)
    assert_allclose(geodesic(x, y, 0.0).data, x.data, atol=1e-10)
    assert_allclose(geodesic(x, y, 1.0).data, y.data, atol=1e-10)


def test_geodesic_scalar_is_geometric_mean():
    x = SpdMatrix([[1.0]])
    y = SpdMatrix([[4.0]])
    assert_allclose(geodesic(x, y, 0.5).data, [[2.0]], rtol=1e-12)


def test_egrad_to_rgrad_scalar():
    x = SpdMatrix([[2.0]])
    assert_allclose(egrad_to_rgrad(x, np.array([[3.0]])), [[12.0]])


def test_egrad_to_rgrad_symmetrizes(rng):
    x = random_spd(rng, 3)
    g = rng.standard_normal((3, 3))
    out = egrad_to_rgrad(x, g)
    assert_allclose(out, out.T)
    sym = (g + g.T) / 2
    assert_allclose(out, x.data @ sym @ x.data, atol=1e-10)


def test_ehess_shape_and_symmetry(rng):
    x = random_spd(rng, 3)
    g = random_sym(rng, 3)
    dg = random_sym(rng, 3)
    v = random_sym(rng, 3)
    out = ehess_to_rhess(x, g, dg, v)
    assert_allclose(out, out.T)


def test_tangent_pair_algebra():
    a = TangentPair(np.eye(2), 2.0 * np.eye(1))
    b = TangentPair(np.ones((2, 2)), np.eye(1))
    s = a + 2.0 * b - b
    assert_allclose(s.v_q, np.eye(2) + np.ones((2, 2)))
    assert_allclose(s.v_r, 3.0 * np.eye(1))
    assert_allclose((-a).v_q, -np.eye(2))
    z = TangentPair.zeros(2, 1)
    assert_allclose(z.v_q, np.zeros((2, 2)))


def test_pair_inner_and_norm(rng):
    xq = random_spd(rng, 2)
    xr = random_spd(rng, 1)
    a = TangentPair(random_sym(rng, 2), random_sym(rng, 1))
    b = TangentPair(random_sym(rng, 2), random_sym(rng, 1))
    want = ai_inner(xq, a.v_q, b.v_q) + ai_inner(xr, a.v_r, b.v_r)
    assert_allclose(pair_inner(xq, xr, a, b), want, rtol=1e-12)
    assert pair_norm(xq, xr, a) == pytest.approx(
        np.sqrt(pair_inner(xq, xr, a, a))
    )
