"""Measurement-difference autocovariance regression for linear time-varying systems.

The system is

    x_{k+1} = F_k x_k + G_k u_k + w_k,      w_k ~ N(0, Q)
    y_k     = H_k x_k + v_k,                v_k ~ N(0, R)

with constant, mutually uncorrelated noise covariances Q and R. Stacking a
window of m measurements and inverting the window's observability Gramian
eliminates the state and yields a measurable residual

    Z_k = sum_{i=0}^{m} A_i^k y_{k-i} - sum_{i=1}^{m} B_i^k G_{k-i} u_{k-i}
        = sum_{i=1}^{m} B_i^k w_{k-i} + sum_{i=0}^{m} A_i^k v_{k-i},

whose autocovariance at lags 0..P is linear in (Q, R). Each time step then
contributes one linear equation  b_k = D_k theta  with
theta = [vech(Q); vech(R)], which downstream estimators consume.

On noise-free data the residual Z_k vanishes identically (the coefficients
annihilate the deterministic part of the trajectory); that property is the
main correctness oracle for this module.
"""

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .symvec import kron_h, kron_u, uvec, vech, vech_len
from .validation import (
    ContractError,
    ExcitationError,
    as_float_array,
    check_symmetric,
)

# Windows whose observability Gramian is worse conditioned than this are
# rejected as insufficiently excited.
GRAMIAN_COND_MAX = 1e12


@dataclass(frozen=True)
class SystemModel:
    """Time-indexed system matrices plus dimensions.

    f, g, h are callables mapping a time index k >= 0 to F_k (n x n),
    G_k (n x q) and H_k (p x n). ``m`` is the measurement stacking depth,
    which must be at least the system's observability index for the window
    Gramians to be invertible.
    """

    f: Callable[[int], np.ndarray]
    g: Callable[[int], np.ndarray]
    h: Callable[[int], np.ndarray]
    n: int
    p: int
    q: int
    m: int = 3

    def __post_init__(self):
        if min(self.n, self.p, self.q) < 1:
            raise ContractError("system dimensions must be positive")
        if self.m < 1:
            raise ContractError("stacking depth m must be at least 1")
        for name, fn, shape in (
            ("f", self.f, (self.n, self.n)),
            ("g", self.g, (self.n, self.q)),
            ("h", self.h, (self.p, self.n)),
        ):
            probe = np.asarray(fn(0), dtype=float)
            if probe.shape != shape:
                raise ContractError(
                    f"provider {name}(0) returned shape {probe.shape}, "
                    f"expected {shape}"
                )


@dataclass(frozen=True)
class GramianBounds:
    """Eigenvalue extremes of the window Gramians over a range of start times."""

    alpha1: float  # min eig of the observability Gramians
    alpha2: float  # max eig of the observability Gramians
    beta1: float  # min eig of the controllability Gramians
    beta2: float  # max eig of the controllability Gramians
    ok: bool


@dataclass(frozen=True)
class CoeffWindow:
    """Residual coefficients at one time step.

    a[i] multiplies y_{k-i} (i = 0..m), b[i-1] multiplies w_{k-i}
    (i = 1..m), and bg[i-1] = b[i-1] @ G_{k-i} multiplies u_{k-i}.
    """

    k: int
    a: tuple
    b: tuple
    bg: tuple

    @property
    def m(self):
        return len(self.b)

    def noise_gain(self) -> float:
        """Squared Frobenius mass of the maps taking noise into the residual.

        Equals trace Cov(Z_k) when both noise covariances are identity.
        The residual regression is normalized by its square, because the
        regression noise is quadratic in Z_k. Strictly positive: the newest
        measurement always enters with a nonzero coefficient.
        """
        g = 0.0
        for m_ in self.a:
            g += float(np.sum(m_ * m_))
        for m_ in self.b:
            g += float(np.sum(m_ * m_))
        return g


@dataclass(frozen=True)
class RegressorSample:
    """One linear equation b = D theta in the stacked covariance unknowns."""

    d: np.ndarray
    b: np.ndarray
    k: int
    lags: int


def phi(model: SystemModel, k: int, l: int) -> np.ndarray:
    """State transition matrix over [l, k): F_{k-1} F_{k-2} ... F_l.

    phi(model, k, k) is the identity; k < l is rejected.
    """
    if k < l:
        raise ContractError(f"phi requires k >= l, got k={k}, l={l}")
    out = np.eye(model.n)
    for j in range(l, k):
        out = np.asarray(model.f(j), dtype=float) @ out
    return out


def obs_gramian(model: SystemModel, k: int, s: int) -> np.ndarray:
    """Observability Gramian of the window [k, k+s].

    Sum over i = k..k+s of phi(i,k)^T H_i^T H_i phi(i,k).
    """
    if s < 0:
        raise ContractError("window length s must be nonnegative")
    acc = np.eye(model.n)
    hk = np.asarray(model.h(k), dtype=float)
    gram = hk.T @ hk
    for i in range(k + 1, k + s + 1):
        acc = np.asarray(model.f(i - 1), dtype=float) @ acc
        hi_phi = np.asarray(model.h(i), dtype=float) @ acc
        gram = gram + hi_phi.T @ hi_phi
    return (gram + gram.T) / 2.0


def ctrl_gramian(model: SystemModel, k: int, s: int, q_cov=None) -> np.ndarray:
    """Controllability Gramian of the window [k, k+s] for noise shaped by Q.

    Sum over i = k..k+s of phi(k+s+1, i+1) E E^T phi(k+s+1, i+1)^T with
    E E^T = Q (any factor of Q gives the same Gramian). ``q_cov=None``
    uses the identity.
    """
    if s < 0:
        raise ContractError("window length s must be nonnegative")
    if q_cov is None:
        e = np.eye(model.n)
    else:
        q_cov = check_symmetric(q_cov, "process noise covariance")
        e = np.linalg.cholesky(q_cov)
    acc = np.eye(model.n)  # phi(k+s+1, i+1), starting at i = k+s
    gram = np.zeros((model.n, model.n))
    for i in range(k + s, k - 1, -1):
        term = acc @ e
        gram = gram + term @ term.T
        if i > k:
            acc = acc @ np.asarray(model.f(i), dtype=float)
    return (gram + gram.T) / 2.0


def check_uniform_bounds(model, k_range, s, q_cov=None) -> GramianBounds:
    """Eigenvalue extremes of both Gramians over start times in ``k_range``.

    ``ok`` is true when both minimum eigenvalues are strictly positive,
    which is the uniform observability / controllability condition the
    regression and filter stability arguments rest on.
    """
    a1 = b1 = np.inf
    a2 = b2 = -np.inf
    seen = False
    for k in k_range:
        seen = True
        wo = np.linalg.eigvalsh(obs_gramian(model, k, s))
        wc = np.linalg.eigvalsh(ctrl_gramian(model, k, s, q_cov))
        a1 = min(a1, wo[0])
        a2 = max(a2, wo[-1])
        b1 = min(b1, wc[0])
        b2 = max(b2, wc[-1])
    if not seen:
        raise ContractError("k_range is empty")
    return GramianBounds(a1, a2, b1, b2, ok=bool(a1 > 0 and b1 > 0))


def _stacked_obs(model, k_top, m):
    """Stacked observability matrix of the window [k_top-m+1, k_top].

    Row block j holds H_{k_top-j} phi(k_top-j, k_top-m+1), j = 0..m-1,
    newest measurement first. Its Gram product equals the window's
    observability Gramian.
    """
    base = k_top - m + 1
    phis = [np.eye(model.n)]
    for t in range(1, m):
        phis.append(np.asarray(model.f(base + t - 1), dtype=float) @ phis[-1])
    blocks = []
    for j in range(m):
        i = k_top - j
        blocks.append(np.asarray(model.h(i), dtype=float) @ phis[m - 1 - j])
    return np.vstack(blocks)


def _stacked_noise_map(model, k_top, m):
    """Coefficient of the stacked inputs [w+Gu]_{k_top-1..k_top-m+1}.

    Shape (m p, (m-1) n). Block (r, c) is H_{k_top-r} phi(k_top-r, k_top-c)
    when c >= r and zero otherwise; the last row block is identically zero.
    """
    n, p = model.n, model.p
    out = np.zeros((m * p, (m - 1) * n))
    for r in range(m):
        acc = np.eye(n)
        hr = np.asarray(model.h(k_top - r), dtype=float)
        for c in range(r, m - 1):
            out[r * p:(r + 1) * p, c * n:(c + 1) * n] = hr @ acc
            if c < m - 2:
                acc = acc @ np.asarray(model.f(k_top - c - 1), dtype=float)
    return out


def _solved_stack(model, k_top, m):
    """M^-1 O^T for the window topped at k_top, with conditioning guard."""
    o = _stacked_obs(model, k_top, m)
    gram = o.T @ o
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 0 or w[-1] > GRAMIAN_COND_MAX * w[0]:
        raise ExcitationError(
            f"observability Gramian over [{k_top - m + 1}, {k_top}] is "
            f"singular or ill conditioned (eigs [{w[0]:.3e}, {w[-1]:.3e}]); "
            "the stacking depth m may be below the observability index"
        )
    return np.linalg.solve(gram, o.T), o


def coeff_window(model: SystemModel, k: int) -> CoeffWindow:
    """Residual coefficients A_i^k, B_i^k at time k.

    Differences the Gramian-inverted stacked measurement equations at k and
    k-1, eliminating the state. Requires k >= m so that all matrices down
    to time index k-m exist.
    """
    m, n, p = model.m, model.n, model.p
    if k < m:
        raise ContractError(f"coeff_window requires k >= m (= {m}), got {k}")
    g_cur, _ = _solved_stack(model, k, m)  # acts on [y_k .. y_{k-m+1}]
    g_prev, _ = _solved_stack(model, k - 1, m)  # acts on [y_{k-1} .. y_{k-m}]
    f_base = np.asarray(model.f(k - m), dtype=float)

    a_full = np.hstack([g_cur, np.zeros((n, p))])
    a_full[:, p:] -= f_base @ g_prev

    w_cur = _stacked_noise_map(model, k, m)
    w_prev = _stacked_noise_map(model, k - 1, m)
    b_full = np.hstack([g_cur @ w_cur, np.eye(n)])
    b_full[:, n:] -= f_base @ (g_prev @ w_prev)

    a = tuple(a_full[:, i * p:(i + 1) * p].copy() for i in range(m + 1))
    b = tuple(b_full[:, (i - 1) * n:i * n].copy() for i in range(1, m + 1))
    bg = tuple(
        b[i - 1] @ np.asarray(model.g(k - i), dtype=float) for i in range(1, m + 1)
    )
    return CoeffWindow(k=k, a=a, b=b, bg=bg)


def residual(coeffs: CoeffWindow, y_window, u_window) -> np.ndarray:
    """Measurement-difference residual Z_k from one coefficient window.

    ``y_window`` holds [y_{k-m}, ..., y_k] (oldest first, m+1 rows) and
    ``u_window`` holds [u_{k-m}, ..., u_{k-1}] (oldest first, m rows).
    Identically zero on noise-free data.
    """
    m = coeffs.m
    y_window = as_float_array(y_window, "y_window")
    u_window = as_float_array(u_window, "u_window")
    if len(y_window) != m + 1:
        raise ContractError(f"y_window must hold {m + 1} rows, got {len(y_window)}")
    if len(u_window) != m:
        raise ContractError(f"u_window must hold {m} rows, got {len(u_window)}")
    z = coeffs.a[0] @ y_window[m]
    for i in range(1, m + 1):
        z = z + coeffs.a[i] @ y_window[m - i]
        z = z - coeffs.bg[i - 1] @ u_window[m - i]
    return z


def regressor(
    k: int,
    coeff_history: Mapping[int, CoeffWindow],
    z_history: Mapping[int, np.ndarray],
    lags: int,
) -> RegressorSample:
    """Per-step linear equation b_k = D_k [vech(Q); vech(R)].

    Row block 0 comes from the lag-0 residual autocovariance (vech of the
    single-sample outer product Z_k Z_k^T), and row block l from the lag-l
    cross product (uvec of Z_k Z_{k-l}^T), l = 1..lags. Requires coefficient
    windows and residuals for times k-lags..k and lags <= m.
    """
    if lags < 0:
        raise ContractError("lags must be nonnegative")
    try:
        cw0 = coeff_history[k]
    except KeyError:
        raise ContractError(f"no coefficient window at time {k}") from None
    m = cw0.m
    if lags > m:
        raise ContractError(f"lags (= {lags}) must not exceed the window m (= {m})")
    n = cw0.b[0].shape[0]
    p = cw0.a[0].shape[1]
    m_q, m_r = vech_len(n), vech_len(p)

    try:
        z0 = z_history[k]
        d_rows = [
            np.hstack([
                sum(kron_h(cw0.b[i - 1]) for i in range(1, m + 1)),
                sum(kron_h(cw0.a[i]) for i in range(m + 1)),
            ])
        ]
        b_rows = [vech(np.outer(z0, z0))]
        for lag in range(1, lags + 1):
            cwl = coeff_history[k - lag]
            db = sum(
                (kron_u(cwl.b[i - lag - 1], cw0.b[i - 1]) for i in range(lag + 1, m + 1)),
                start=np.zeros((n * n, m_q)),
            )
            da = sum(
                (kron_u(cwl.a[i - lag], cw0.a[i]) for i in range(lag, m + 1)),
                start=np.zeros((n * n, m_r)),
            )
            d_rows.append(np.hstack([db, da]))
            b_rows.append(uvec(np.outer(z0, z_history[k - lag])))
    except KeyError as missing:
        raise ContractError(
            f"history is missing time {missing.args[0]} needed for lags={lags} at k={k}"
        ) from None

    return RegressorSample(
        d=np.vstack(d_rows), b=np.concatenate(b_rows), k=k, lags=lags
    )
