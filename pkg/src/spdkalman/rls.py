"""Recursive least squares on the vectorized noise-covariance equation.

Tracks theta = [vech(Q); vech(R)] through the per-step equations
b_k = D_k theta + noise, with Joseph-form covariance propagation so the
information matrix stays symmetric positive definite. The raw solution is
unconstrained: nothing here keeps the implied Q and R positive definite,
which is exactly the weakness the manifold solver addresses.
"""

from dataclasses import dataclass

import numpy as np

from .mda import RegressorSample
from .spd import SpdMatrix
from .symvec import symmetrize, unvech, vech, vech_len
from .validation import ContractError, check_vector


@dataclass(frozen=True)
class ThetaEstimate:
    """Stacked estimate theta = [vech(Q); vech(R)] with covariance psi."""

    theta: np.ndarray
    psi: SpdMatrix

    def __post_init__(self):
        check_vector(self.theta, dim=self.psi.n, name="theta")


def initial_estimate(n, p, psi_scale=1e3, q0=None, r0=None) -> ThetaEstimate:
    """Diffuse prior centered on (Q, R) = (I, I) unless overridden."""
    q0 = np.eye(n) if q0 is None else np.asarray(q0, dtype=float)
    r0 = np.eye(p) if r0 is None else np.asarray(r0, dtype=float)
    theta = matrices_to_theta(q0, r0)
    return ThetaEstimate(theta, SpdMatrix(psi_scale * np.eye(theta.shape[0])))


def rls_update(
    est: ThetaEstimate, sample: RegressorSample, r_w: SpdMatrix
) -> ThetaEstimate:
    """One recursive least squares step.

    Gain L = Psi D^T (R_w + D Psi D^T)^-1, followed by the Joseph-form
    covariance update. The returned theta is the exact minimizer of the
    regularized one-step objective

        0.5 |D theta - b|^2_{R_w^-1} + 0.5 |theta - theta_prev|^2_{Psi^-1}.
    """
    d, b = sample.d, sample.b
    rows, cols = d.shape
    if cols != est.theta.shape[0]:
        raise ContractError(
            f"regressor has {cols} columns but theta has length {est.theta.shape[0]}"
        )
    if r_w.n != rows or b.shape[0] != rows:
        raise ContractError(
            f"row mismatch: D has {rows} rows, b has {b.shape[0]}, R_w is {r_w.n}"
        )
    psi = est.psi.data
    dpsi = d @ psi
    s = symmetrize(r_w.data + dpsi @ d.T)
    gain = np.linalg.solve(s, dpsi).T
    theta = est.theta + gain @ (b - d @ est.theta)
    ild = np.eye(cols) - gain @ d
    psi_new = ild @ psi @ ild.T + gain @ r_w.data @ gain.T
    return ThetaEstimate(theta, SpdMatrix(symmetrize(psi_new)))


def theta_to_matrices(theta, n, p):
    """Split theta into the implied (Q, R); symmetric but possibly indefinite."""
    theta = check_vector(theta, dim=vech_len(n) + vech_len(p), name="theta")
    m_q = vech_len(n)
    return unvech(theta[:m_q]), unvech(theta[m_q:])


def matrices_to_theta(q, r):
    """Stack symmetric (Q, R) into theta = [vech(Q); vech(R)]."""
    return np.concatenate([vech(q), vech(r)])
