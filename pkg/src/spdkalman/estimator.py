"""Scikit-learn style front end for the adaptive filter."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .kalman import AdaptiveKalman, FilterConfig, FilterState, akf_step
from .spd import SpdMatrix
from .validation import ContractError, check_series


class AdaptiveKalmanFilter(BaseEstimator):
    """Noise-adaptive Kalman filter with an estimator interface.

    ``fit`` consumes a measurement sequence (and optionally the exogenous
    input sequence), jointly estimating the process and measurement noise
    covariances while filtering; ``predict`` then filters a sequence with
    the fitted covariances held fixed. With ``method="rtr"`` the fitted
    covariances are guaranteed symmetric positive definite with smallest
    eigenvalue above ``eps``.

    Parameters
    ----------
    model : SystemModel
        Time-indexed system matrices and dimensions.
    method : {"rtr", "rls"}
        Manifold trust-region estimation (positive definite by construction)
        or the raw recursive least squares baseline (unconstrained).
    lags : int or None
        Autocovariance lags used per step; defaults to the model's stacking
        depth m.
    eps : float
        Eigenvalue floor for the reported covariances in "rtr" mode.
    q0, r0 : array or None
        Initial covariance guesses; identity when omitted.
    x0 : array or None
        Initial state estimate; zero when omitted.
    p0 : float or array
        Initial state covariance (scalar means a multiple of the identity).
    psi0 : float or array
        Initial covariance of the stacked estimate theta.
    r_w : array or None
        Weight (noise covariance) of the per-step regression equations. When
        omitted, each step is normalized by the squared noise gain of its
        residual window, which keeps badly conditioned measurement windows
        from dominating the fit.
    trust_region : TrustRegionParams or None
        Trust-region tuning constants; package defaults when omitted.

    Attributes
    ----------
    q_hat_ : ndarray of shape (n, n)
        Final process noise covariance estimate.
    r_hat_ : ndarray of shape (p, p)
        Final measurement noise covariance estimate.
    theta_ : ndarray
        Final stacked estimate [vech(Q); vech(R)].
    psi_ : ndarray
        Final covariance of theta_.
    x_filtered_ : ndarray of shape (N, n)
        Filtered state means from the adaptive pass.
    history_ : FilterHistory
        Full per-step record of the fitting run.
    """

    def __init__(self, model=None, method="rtr", lags=None, eps=0.1,
                 q0=None, r0=None, x0=None, p0=10.0, psi0=1e3, r_w=None,
                 trust_region=None):
        self.model = model
        self.method = method
        self.lags = lags
        self.eps = eps
        self.q0 = q0
        self.r0 = r0
        self.x0 = x0
        self.p0 = p0
        self.psi0 = psi0
        self.r_w = r_w
        self.trust_region = trust_region

    def _config(self):
        kwargs = dict(
            method=self.method, lags=self.lags, eps=self.eps,
            x0=self.x0, p0=self.p0, q0=self.q0, r0=self.r0,
            psi0=self.psi0, r_w=self.r_w,
        )
        if self.trust_region is not None:
            kwargs["trust"] = self.trust_region
        return FilterConfig(**kwargs)

    def fit(self, y, u=None):
        """Run the adaptive filter over a measurement sequence.

        Parameters
        ----------
        y : array-like of shape (N, p) or (N,)
            Measurements.
        u : array-like of shape (N, q), (N,) or None
            Exogenous inputs aligned with y; zeros when omitted.
        """
        if self.model is None:
            raise ContractError("a SystemModel must be supplied via `model`")
        y = check_series(y, self.model.p, "y")
        u = self._inputs(u, y.shape[0])
        loop = AdaptiveKalman(self.model, self._config())
        for k in range(y.shape[0]):
            loop.step(u[k], y[k])
        history = loop.history()
        last = history.steps - 1
        self.history_ = history
        self.q_hat_ = history.q_hat[last].copy()
        self.r_hat_ = history.r_hat[last].copy()
        self.theta_ = loop.estimate.theta.copy()
        self.psi_ = loop.estimate.psi.data.copy()
        self.x_filtered_ = history.x_filt.copy()
        self.n_steps_ = history.steps
        return self

    def _inputs(self, u, n_rows):
        if u is None:
            return np.zeros((n_rows, self.model.q))
        return check_series(u, self.model.q, "u")

    def predict(self, y, u=None):
        """Filter a sequence with the fitted covariances held fixed.

        Returns the filtered state means, shape (N, n).
        """
        if not hasattr(self, "q_hat_"):
            raise NotFittedError(
                "this AdaptiveKalmanFilter is not fitted yet; call fit first"
            )
        model = self.model
        try:
            q_hat = SpdMatrix(self.q_hat_)
            r_hat = SpdMatrix(self.r_hat_)
        except Exception as exc:
            raise ContractError(
                "fitted covariances are not positive definite, so a filtering "
                "pass is not well posed; refit with method='rtr'"
            ) from exc
        y = check_series(y, model.p, "y")
        u = self._inputs(u, y.shape[0])
        x0 = np.zeros(model.n) if self.x0 is None else np.asarray(self.x0, float)
        p0 = self.p0 * np.eye(model.n) if np.isscalar(self.p0) else self.p0
        state = FilterState(x0, SpdMatrix(p0).data.copy(), 0)
        out = np.empty((y.shape[0], model.n))
        out[0] = state.x
        for k in range(1, y.shape[0]):
            state = akf_step(state, model, k, u[k - 1], y[k], q_hat, r_hat).state
            out[k] = state.x
        return out
