import numpy as np
import pytest
from numpy.testing import assert_allclose

from spdkalman import (
    BENCHMARK_Q,
    BENCHMARK_R,
    ContractError,
    ExcitationError,
    SystemModel,
    benchmark_model,
    check_uniform_bounds,
    coeff_window,
    ctrl_gramian,
    obs_gramian,
    phi,
    regressor,
    residual,
    simulate,
)


def constant_model(f, g, h, m=1):
    f = np.atleast_2d(np.asarray(f, dtype=float))
    g = np.atleast_2d(np.asarray(g, dtype=float))
    h = np.atleast_2d(np.asarray(h, dtype=float))
    return SystemModel(
        f=lambda k: f, g=lambda k: g, h=lambda k: h,
        n=f.shape[0], p=h.shape[0], q=g.shape[1], m=m,
    )


def integrator_model(m=1):
    return constant_model([[1.0]], [[1.0]], [[1.0]], m=m)


def test_model_validates_dimensions():
    with pytest.raises(ContractError):
        SystemModel(f=lambda k: np.eye(2), g=lambda k: np.eye(2),
                    h=lambda k: np.eye(2), n=2, p=2, q=2, m=0)
    with pytest.raises(ContractError):
        SystemModel(f=lambda k: np.eye(3), g=lambda k: np.eye(2),
                    h=lambda k: np.eye(2), n=2, p=2, q=2, m=1)


def test_phi_composition():
    model = benchmark_model(tau=100)
    f = lambda k: np.asarray(model.f(k), dtype=float)
    assert_allclose(phi(model, 5, 5), np.eye(2))
    assert_allclose(phi(model, 6, 5), f(5))
    assert_allclose(phi(model, 8, 5), f(7) @ f(6) @ f(5))
    with pytest.raises(ContractError):
        phi(model, 4, 5)


def test_obs_gramian_scalar_hand_sum():
    # F = H = 1: every term is 1, so a window of s+1 steps sums to s+1.
    model = integrator_model()
    assert_allclose(obs_gramian(model, 3, 2), [[3.0]])
    # F = 2: terms 1, 4, 16.
    model2 = constant_model([[2.0]], [[1.0]], [[1.0]])
    assert_allclose(obs_gramian(model2, 0, 2), [[21.0]])
    with pytest.raises(ContractError):
        obs_gramian(model, 0, -1)


def test_ctrl_gramian_scalar_hand_sum():
    model = integrator_model()
    assert_allclose(ctrl_gramian(model, 3, 2), [[3.0]])
    # F = 2: transition from i+1 to k+s+1 contributes 4^(k+s-i).
    model2 = constant_model([[2.0]], [[1.0]], [[1.0]])
    assert_allclose(ctrl_gramian(model2, 0, 2), [[21.0]])


def test_ctrl_gramian_with_q_cov():
    # Scaling the noise covariance scales the Gramian linearly.
    model = integrator_model()
    base = ctrl_gramian(model, 0, 3)
    scaled = ctrl_gramian(model, 0, 3, q_cov=[[2.5]])
    assert_allclose(scaled, 2.5 * base)


def test_uniform_bounds_benchmark():
    model = benchmark_model()
    bounds = check_uniform_bounds(model, range(200), model.m - 1, BENCHMARK_Q)
    assert bounds.ok
    assert 0 < bounds.alpha1 <= bounds.alpha2
    assert 0 < bounds.beta1 <= bounds.beta2
    with pytest.raises(ContractError):
        check_uniform_bounds(model, range(0), 2)


def test_coeff_window_integrator_oracle():
    # First difference of the measurements minus the known input:
    # Z_k = y_k - y_{k-1} - u_{k-1} = w_{k-1} + v_k - v_{k-1}.
    model = integrator_model()
    cw = coeff_window(model, 5)
    assert cw.m == 1
    assert_allclose(cw.a[0], [[1.0]])
    assert_allclose(cw.a[1], [[-1.0]])
    assert_allclose(cw.b[0], [[1.0]])
    assert_allclose(cw.bg[0], [[1.0]])
    assert cw.noise_gain() == pytest.approx(3.0)


def test_coeff_window_requires_k_at_least_m():
    model = benchmark_model()
    with pytest.raises(ContractError):
        coeff_window(model, model.m - 1)
    coeff_window(model, model.m)  # boundary is allowed


def test_coeff_window_rejects_unobservable():
    # H = 0 makes every window Gramian singular.
    model = constant_model([[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(ExcitationError):
        coeff_window(model, 3)


def test_residual_window_shapes():
    model = integrator_model()
    cw = coeff_window(model, 5)
    with pytest.raises(ContractError):
        residual(cw, np.zeros((3, 1)), np.zeros((1, 1)))
    with pytest.raises(ContractError):
        residual(cw, np.zeros((2, 1)), np.zeros((2, 1)))


def test_annihilation_benchmark():
    # The residual coefficients eliminate the deterministic trajectory.
    model = benchmark_model(tau=500)
    traj = simulate(model, BENCHMARK_Q, BENCHMARK_R, 120, seed=3,
                    noise_scale=0.0)
    scale = 1.0 + float(np.max(np.abs(traj.y)))
    for k in range(model.m, 120):
        cw = coeff_window(model, k)
        z = residual(cw, traj.y[k - model.m:k + 1], traj.u[k - model.m:k])
        assert float(np.linalg.norm(z)) <= 1e-10 * scale


def test_residual_noise_decomposition():
    # On noisy data Z_k must equal its noise-only expansion
    # sum_i B_i w_{k-i} + sum_i A_i v_{k-i}, exactly.
    model = benchmark_model(tau=300)
    traj = simulate(model, BENCHMARK_Q, BENCHMARK_R, 60, seed=11)
    m = model.m
    for k in (m, 17, 42):
        cw = coeff_window(model, k)
        z = residual(cw, traj.y[k - m:k + 1], traj.u[k - m:k])
        want = cw.a[0] @ traj.v[k]
        for i in range(1, m + 1):
            want = want + cw.b[i - 1] @ traj.w[k - i] + cw.a[i] @ traj.v[k - i]
        assert_allclose(z, want, atol=1e-10)


def test_regressor_integrator_oracle():
    # For the scalar integrator with one lag the exact equations are
    # E[Z_k^2] = Q + 2R and E[Z_k Z_{k-1}] = -R.
    model = integrator_model()
    coeffs = {k: coeff_window(model, k) for k in (4, 5)}
    z = {4: np.array([2.0]), 5: np.array([3.0])}
    sample = regressor(5, coeffs, z, lags=1)
    assert_allclose(sample.d, [[1.0, 2.0], [0.0, -1.0]])
    assert_allclose(sample.b, [9.0, 6.0])
    assert sample.k == 5 and sample.lags == 1


def test_regressor_exact_autocovariance_substitution():
    # Substituting the true (Q, R) into D theta must reproduce the exact
    # residual autocovariances implied by the coefficient windows.
    model = benchmark_model(tau=400)
    q = np.asarray(BENCHMARK_Q)
    r = np.asarray(BENCHMARK_R)
    m = model.m
    k = 37
    coeffs = {t: coeff_window(model, t) for t in range(k - m, k + 1)}
    z = {t: np.zeros(model.n) for t in coeffs}  # b is irrelevant here
    sample = regressor(k, coeffs, z, lags=m)
    theta = np.concatenate([[q[0, 0], q[1, 0], q[1, 1]], [r[0, 0]]])

    cw0 = coeffs[k]
    pred = sample.d @ theta
    # Lag 0: Cov(Z_k) from the noise expansion.
    cov0 = sum(b @ q @ b.T for b in cw0.b) + sum(a @ r @ a.T for a in cw0.a)
    assert_allclose(pred[:3], [cov0[0, 0], cov0[1, 0], cov0[1, 1]],
                    atol=1e-12)
    # Lag l: E[Z_k Z_{k-l}^T] pairing shared noise terms.
    row = 3
    for lag in range(1, m + 1):
        cwl = coeffs[k - lag]
        cov = np.zeros((model.n, model.n))
        for i in range(lag + 1, m + 1):
            cov += cw0.b[i - 1] @ q @ cwl.b[i - lag - 1].T
        for i in range(lag, m + 1):
            cov += cw0.a[i] @ r @ cwl.a[i - lag].T
        assert_allclose(pred[row:row + 4], cov.flatten(order="F"),
                        atol=1e-12)
        row += 4


def test_regressor_monte_carlo_lag0():
    # Sample second moments of the residual agree with D theta within
    # Monte Carlo error.
    model = integrator_model()
    q_true = np.array([[0.5]])
    r_true = np.array([[0.25]])
    n_draws = 4000
    k = 6
    cw = coeff_window(model, k)
    coeffs = {k: cw, k - 1: coeff_window(model, k - 1)}
    rng = np.random.default_rng(99)
    acc0 = 0.0
    for _ in range(n_draws):
        traj = simulate(model, q_true, r_true, k + 1,
                        seed=int(rng.integers(0, 2**31)))
        z = residual(cw, traj.y[k - 1:k + 1], traj.u[k - 1:k])
        acc0 += z[0] * z[0]
    sample = regressor(k, coeffs, {k: np.zeros(1), k - 1: np.zeros(1)}, lags=0)
    theta = np.array([q_true[0, 0], r_true[0, 0]])
    want = (sample.d @ theta)[0]
    got = acc0 / n_draws
    # Var(Z^2) for a Gaussian is 2 (Q+2R)^2; allow 4 standard errors.
    se = np.sqrt(2.0) * want / np.sqrt(n_draws)
    assert abs(got - want) < 4 * se


def test_regressor_missing_history():
    model = integrator_model()
    coeffs = {5: coeff_window(model, 5)}
    with pytest.raises(ContractError):
        regressor(5, coeffs, {5: np.zeros(1)}, lags=1)
    with pytest.raises(ContractError):
        regressor(6, coeffs, {6: np.zeros(1)}, lags=0)
    with pytest.raises(ContractError):
        regressor(5, coeffs, {5: np.zeros(1)}, lags=2)


def test_noise_gain_positive_on_benchmark():
    model = benchmark_model()
    for k in (3, 10, 57):
        assert coeff_window(model, k).noise_gain() > 0
