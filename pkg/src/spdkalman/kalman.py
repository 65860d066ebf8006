"""Kalman recursions and the online noise-adaptive filtering driver.

``akf_step`` is a standard predict/update cycle with Joseph-form covariance
propagation, parameterized by whatever noise covariances the caller currently
believes in. The :class:`AdaptiveKalman` driver couples that filter with the
measurement-difference regression: once enough history has accumulated it
re-estimates (Q, R) every step, either by raw recursive least squares or by
the trust-region solve on the SPD manifold, and feeds the estimates back into
the filter.

For diagnostics the driver can run, in lockstep on the same data, the
reference filter that knows the true covariances, plus the recursion for the
actual error covariance of the adaptive filter (the covariance its gain
sequence really attains under the true noise), written in one-step predictor
form:

    P_{k+1} = (F_k - K_k H_k) P_k (F_k - K_k H_k)^T + K_k R K_k^T + Q,

with K_k the predictor-form gain F_k P^hat_k H_k^T (H_k P^hat_k H_k^T + R^hat)^-1.
"""

from dataclasses import dataclass, field

import numpy as np

from .mda import SystemModel, coeff_window, regressor, residual
from .objective import ObjectiveContext, eps_shift, eps_unshift
from .rls import ThetaEstimate, matrices_to_theta, rls_update, theta_to_matrices
from .spd import SpdMatrix
from .symvec import symmetrize, vech_len
from .trust_region import TrustRegionParams, rtr_solve
from .validation import ContractError, check_series, check_symmetric, check_vector


@dataclass(frozen=True)
class FilterState:
    """Posterior mean and covariance after the measurement update at time k."""

    x: np.ndarray
    p: np.ndarray
    k: int


@dataclass(frozen=True)
class StepResult:
    """One filter step: new posterior plus the intermediate quantities."""

    state: FilterState
    x_pred: np.ndarray
    p_pred: np.ndarray
    gain: np.ndarray


def _cov(m):
    return m.data if isinstance(m, SpdMatrix) else np.asarray(m, dtype=float)


def akf_step(state: FilterState, model: SystemModel, k: int, u_prev, y,
             q_hat, r_hat) -> StepResult:
    """Predict with (F_{k-1}, G_{k-1}, u_{k-1}), then update with y_k.

    The covariance update uses the Joseph form, which preserves symmetry
    and, for SPD (q_hat, r_hat), positive definiteness.
    """
    if k != state.k + 1:
        raise ContractError(f"filter step expects k={state.k + 1}, got {k}")
    q_hat = _cov(q_hat)
    r_hat = _cov(r_hat)
    f_prev = np.asarray(model.f(k - 1), dtype=float)
    g_prev = np.asarray(model.g(k - 1), dtype=float)
    h_k = np.asarray(model.h(k), dtype=float)
    u_prev = check_vector(u_prev, dim=model.q, name="u_prev")
    y = check_vector(y, dim=model.p, name="y")

    x_pred = f_prev @ state.x + g_prev @ u_prev
    p_pred = symmetrize(f_prev @ state.p @ f_prev.T + q_hat)
    s = symmetrize(h_k @ p_pred @ h_k.T + r_hat)
    gain = np.linalg.solve(s, h_k @ p_pred).T
    x_new = x_pred + gain @ (y - h_k @ x_pred)
    ikh = np.eye(model.n) - gain @ h_k
    p_new = symmetrize(ikh @ p_pred @ ikh.T + gain @ r_hat @ gain.T)
    return StepResult(FilterState(x_new, p_new, k), x_pred, p_pred, gain)


def optimal_kf_step(state: FilterState, model: SystemModel, k: int, u_prev, y,
                    q_true, r_true) -> StepResult:
    """Reference filter step with the true noise covariances."""
    return akf_step(state, model, k, u_prev, y, q_true, r_true)


def actual_cov_step(p_actual, model: SystemModel, k: int, gain_pred,
                    q_true, r_true) -> np.ndarray:
    """Propagate the actual error covariance of a filter using ``gain_pred``.

    ``gain_pred`` is the one-step predictor gain (F_k times the filter gain
    at time k); ``p_actual`` is the true covariance of the predictor error
    x_k - x_pred_k. Returns the covariance at k+1.
    """
    p_actual = check_symmetric(p_actual, "p_actual")
    f_k = np.asarray(model.f(k), dtype=float)
    h_k = np.asarray(model.h(k), dtype=float)
    fbar = f_k - gain_pred @ h_k
    out = fbar @ p_actual @ fbar.T + gain_pred @ _cov(r_true) @ gain_pred.T
    return symmetrize(out + _cov(q_true))


@dataclass
class FilterConfig:
    """Driver configuration.

    ``lags`` defaults to the model's stacking depth m. ``q_true``/``r_true``
    enable the lockstep reference filter and actual-covariance diagnostics.
    In ``rtr`` mode the initial (q0, r0) must clear the eigenvalue floor eps.
    ``r_w`` fixes the equation weighting; None (the default) normalizes each
    step by the squared noise gain of its residual window.
    """

    method: str = "rtr"  # "rtr" or "rls"
    lags: int | None = None
    eps: float = 0.1
    x0: np.ndarray | None = None
    p0: np.ndarray | float = 10.0
    q0: np.ndarray | None = None
    r0: np.ndarray | None = None
    psi0: np.ndarray | float = 1e3
    r_w: np.ndarray | None = None
    trust: TrustRegionParams = field(default_factory=TrustRegionParams)
    q_true: np.ndarray | None = None
    r_true: np.ndarray | None = None


@dataclass
class FilterHistory:
    """Per-step arrays produced by a driver run; index is the time step k.

    Quantities that do not exist at a step (the prediction at k=0, the
    estimation outputs before the history guard opens) hold NaN. ``q_hat[k]``
    is the estimate available after step k, used by the prediction at k+1.
    """

    guard_start: int
    x_filt: np.ndarray
    p_filt: np.ndarray
    p_pred: np.ndarray
    q_hat: np.ndarray
    r_hat: np.ndarray
    theta: np.ndarray
    theta_rls: np.ndarray
    cost: np.ndarray
    grad_norm: np.ndarray
    rtr_iters: np.ndarray
    rtr_converged: np.ndarray
    p_opt_pred: np.ndarray | None = None
    p_actual: np.ndarray | None = None

    @property
    def steps(self):
        return self.x_filt.shape[0]

    def p_gap(self):
        """Frobenius distance between apparent and optimal predicted covariances."""
        if self.p_opt_pred is None:
            raise ContractError("run had no true covariances configured")
        return np.linalg.norm(self.p_pred - self.p_opt_pred, axis=(1, 2))


class AdaptiveKalman:
    """Online noise-adaptive Kalman filter.

    Feed one (u_k, y_k) pair per call to :meth:`step`, starting at k=0. The
    first sample only seeds the buffers (the state estimate is the supplied
    prior); from k=1 the filter runs a predict/update cycle, and once
    k > m + lags the noise covariances are re-estimated every step from the
    measurement-difference regression.
    """

    def __init__(self, model: SystemModel, config: FilterConfig | None = None):
        self.model = model
        self.config = config = config if config is not None else FilterConfig()
        if config.method not in ("rtr", "rls"):
            raise ContractError(f"unknown method {config.method!r}")
        n, p = model.n, model.p
        self.lags = config.lags if config.lags is not None else model.m
        if self.lags < 0 or self.lags > model.m:
            raise ContractError(
                f"lags must lie in [0, m={model.m}], got {self.lags}"
            )
        self.guard_start = model.m + self.lags + 1

        x0 = np.zeros(n) if config.x0 is None else np.asarray(config.x0, float)
        p0 = config.p0 * np.eye(n) if np.isscalar(config.p0) else config.p0
        self.state = FilterState(
            check_vector(x0, dim=n, name="x0"),
            SpdMatrix(p0).data.copy(),
            k=0,
        )

        q0 = np.eye(n) if config.q0 is None else np.asarray(config.q0, float)
        r0 = np.eye(p) if config.r0 is None else np.asarray(config.r0, float)
        self._q_hat = SpdMatrix(q0).data.copy()
        self._r_hat = SpdMatrix(r0).data.copy()
        if config.method == "rtr":
            # Warm-start variables live on the shifted manifold.
            self._q_eps, self._r_eps = eps_shift(
                SpdMatrix(q0), SpdMatrix(r0), config.eps
            )

        dim = vech_len(n) + vech_len(p)
        psi0 = config.psi0 * np.eye(dim) if np.isscalar(config.psi0) else config.psi0
        self.estimate = ThetaEstimate(
            matrices_to_theta(self._q_hat, self._r_hat), SpdMatrix(psi0)
        )
        self._rows = vech_len(n) + self.lags * n * n
        if config.r_w is None:
            # Default weighting: per-step scaled identity, normalizing each
            # regression equation by the squared noise gain of its residual
            # window. The regression noise is quadratic in the residual, so
            # unnormalized equations from badly conditioned measurement
            # windows would otherwise dominate the fit.
            self._r_w_fixed = None
        else:
            self._r_w_fixed = SpdMatrix(config.r_w)
            if self._r_w_fixed.n != self._rows:
                raise ContractError(
                    f"r_w side {self._r_w_fixed.n} does not match the "
                    f"{self._rows} regressor rows"
                )

        self._track_truth = config.q_true is not None and config.r_true is not None
        if self._track_truth:
            self._q_true = check_symmetric(config.q_true, "q_true")
            self._r_true = check_symmetric(config.r_true, "r_true")
            self.opt_state = FilterState(self.state.x.copy(), self.state.p.copy(), 0)
            self._p_actual = None  # defined from k=1 on

        self._k_next = 0
        self._u_prev = None
        self._y_buf = {}
        self._u_buf = {}
        self._coeff_buf = {}
        self._z_buf = {}
        self._records = []

    # -- estimation -----------------------------------------------------

    def _r_w_at(self, k):
        """Equation weight for step k: fixed if configured, scaled otherwise."""
        if self._r_w_fixed is not None:
            return self._r_w_fixed
        scale = self._coeff_buf[k].noise_gain() ** 2
        return SpdMatrix(scale * np.eye(self._rows))

    def _estimate_step(self, k):
        """Re-estimate (Q, R) from the window ending at k. Returns a record."""
        sample = regressor(k, self._coeff_buf, self._z_buf, self.lags)
        prior = self.estimate
        r_w = self._r_w_at(k)
        # The (theta, Psi) recursion is plain recursive least squares in both
        # modes; its convergence analysis requires the unmodified chain. The
        # manifold solve below only produces the reported, filter-fed
        # estimates and never feeds back into the recursion.
        updated = rls_update(prior, sample, r_w)
        self.estimate = updated
        rec = {"theta_rls": updated.theta}
        if self.config.method == "rls":
            q, r = theta_to_matrices(updated.theta, self.model.n, self.model.p)
            self._q_hat, self._r_hat = q, r
            rec.update(cost=np.nan, grad_norm=np.nan, iters=0, converged=True)
        else:
            ctx = ObjectiveContext(
                sample, prior.theta, prior.psi, r_w,
                self.config.eps, self.model.n, self.model.p,
            )
            self._q_eps, self._r_eps, trace = rtr_solve(
                ctx, self._q_eps, self._r_eps, self.config.trust
            )
            q_full, r_full = eps_unshift(self._q_eps, self._r_eps, self.config.eps)
            self._q_hat, self._r_hat = q_full.data.copy(), r_full.data.copy()
            rec.update(
                cost=trace.final_cost,
                grad_norm=trace.final_grad_norm,
                iters=trace.n_iters,
                converged=trace.converged,
            )
        return rec

    # -- stepping -------------------------------------------------------

    def step(self, u_k, y_k):
        """Consume (u_k, y_k); returns the per-step record dictionary."""
        k = self._k_next
        model = self.model
        u_k = check_vector(u_k, dim=model.q, name="u_k")
        y_k = check_vector(y_k, dim=model.p, name="y_k")
        rec = {
            "k": k,
            "theta_rls": np.full(self.estimate.theta.shape[0], np.nan),
            "cost": np.nan, "grad_norm": np.nan, "iters": 0, "converged": False,
        }

        if k > 0:
            step = akf_step(self.state, model, k, self._u_prev, y_k,
                            self._q_hat, self._r_hat)
            self.state = step.state
            rec["p_pred"] = step.p_pred
            if self._track_truth:
                opt = optimal_kf_step(self.opt_state, model, k, self._u_prev,
                                      y_k, self._q_true, self._r_true)
                self.opt_state = opt.state
                rec["p_opt_pred"] = opt.p_pred
                if self._p_actual is None:
                    # Same initial spread as the filter's own prior.
                    f0 = np.asarray(model.f(0), dtype=float)
                    self._p_actual = symmetrize(
                        f0 @ self._records[0]["p_filt"] @ f0.T + self._q_true
                    )
                rec["p_actual"] = self._p_actual
                gain_pred = np.asarray(model.f(k), dtype=float) @ step.gain
                self._p_actual = actual_cov_step(
                    self._p_actual, model, k, gain_pred,
                    self._q_true, self._r_true,
                )

        # Measurement-difference bookkeeping.
        self._y_buf[k] = y_k
        self._u_buf[k] = u_k
        if k >= model.m:
            cw = coeff_window(model, k)
            y_win = np.stack([self._y_buf[k - model.m + j] for j in range(model.m + 1)])
            u_win = np.stack([self._u_buf[k - model.m + j] for j in range(model.m)])
            self._coeff_buf[k] = cw
            self._z_buf[k] = residual(cw, y_win, u_win)
        if k >= self.guard_start:
            rec.update(self._estimate_step(k))

        rec["x_filt"] = self.state.x
        rec["p_filt"] = self.state.p
        rec["q_hat"] = self._q_hat
        rec["r_hat"] = self._r_hat
        rec["theta"] = self.estimate.theta

        self._records.append(rec)
        self._u_prev = u_k
        self._k_next += 1
        self._prune(k)
        return rec

    def _prune(self, k):
        horizon = self.model.m + self.lags + 2
        for buf in (self._y_buf, self._u_buf, self._coeff_buf, self._z_buf):
            stale = [t for t in buf if t < k - horizon]
            for t in stale:
                del buf[t]

    # -- history --------------------------------------------------------

    def history(self) -> FilterHistory:
        n, p = self.model.n, self.model.p
        steps = len(self._records)
        dim = vech_len(n) + vech_len(p)

        def collect(key, shape, default=np.nan):
            out = np.full((steps,) + shape, default, dtype=float)
            for i, rec in enumerate(self._records):
                if key in rec:
                    out[i] = rec[key]
            return out

        hist = FilterHistory(
            guard_start=self.guard_start,
            x_filt=collect("x_filt", (n,)),
            p_filt=collect("p_filt", (n, n)),
            p_pred=collect("p_pred", (n, n)),
            q_hat=collect("q_hat", (n, n)),
            r_hat=collect("r_hat", (p, p)),
            theta=collect("theta", (dim,)),
            theta_rls=collect("theta_rls", (dim,)),
            cost=collect("cost", ()),
            grad_norm=collect("grad_norm", ()),
            rtr_iters=collect("iters", (), default=0.0),
            rtr_converged=collect("converged", (), default=0.0),
        )
        if self._track_truth:
            hist.p_opt_pred = collect("p_opt_pred", (n, n))
            hist.p_actual = collect("p_actual", (n, n))
        return hist


def run_adaptive_filter(model: SystemModel, u, y,
                        config: FilterConfig | None = None) -> FilterHistory:
    """Batch driver: feed aligned input/measurement arrays through the filter."""
    u = check_series(u, model.q, "u")
    y = check_series(y, model.p, "y")
    if u.shape[0] != y.shape[0]:
        raise ContractError(
            f"u and y must have the same length, got {u.shape[0]} and {y.shape[0]}"
        )
    loop = AdaptiveKalman(model, config)
    for k in range(y.shape[0]):
        loop.step(u[k], y[k])
    return loop.history()
