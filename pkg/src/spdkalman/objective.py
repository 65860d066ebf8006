"""The per-step estimation objective on the product SPD manifold.

The cost is the same regularized least squares criterion the recursive
update minimizes,

    J(theta) = 0.5 (D theta - b)^T R_w^-1 (D theta - b)
             + 0.5 (theta - theta_prev)^T Psi^-1 (theta - theta_prev),

but evaluated through the manifold variables (Q, R) via
theta = [vech(eps I + Q); vech(eps I + R)]. The shift of origin by eps I
keeps every reported estimate at least eps away from the positive
semidefinite boundary without changing the unconstrained minimizer.

Gradients are assembled exactly through the vectorization operators: with
g the theta-space gradient, the Euclidean matrix gradient with respect to Q
is  btr(sym(uvec(I) g_Q^T S_n))  where S_n is the selection matrix, and the
directional derivative replaces g_Q by (D_Q^T R_w^-1 D + [I 0] Psi^-1) theta_V.
The Riemannian gradient and Hessian then follow from the standard
affine-invariant lifts in :mod:`spdkalman.spd`.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .mda import RegressorSample
from .spd import SpdMatrix, TangentPair, egrad_to_rgrad, ehess_to_rhess
from .symvec import btr, sel_matrix, symmetrize, uvec, vech, vech_len
from .validation import ContractError, NotSpdError, check_vector


def eps_shift(q_full: SpdMatrix, r_full: SpdMatrix, eps: float):
    """Map full-coordinate (Q, R) to the manifold variables (Q - eps I, R - eps I).

    Requires both matrices to clear the eigenvalue floor strictly.
    """
    if eps < 0:
        raise ContractError("eps must be nonnegative")
    for name, m in (("Q", q_full), ("R", r_full)):
        if m.eig_min <= eps:
            raise NotSpdError(
                f"{name} does not clear the eigenvalue floor eps={eps} "
                f"(eig_min={m.eig_min:.6g})"
            )
    return (
        SpdMatrix(q_full.data - eps * np.eye(q_full.n)),
        SpdMatrix(r_full.data - eps * np.eye(r_full.n)),
    )


def eps_unshift(q_eps: SpdMatrix, r_eps: SpdMatrix, eps: float):
    """Inverse of :func:`eps_shift`: report (eps I + Q, eps I + R)."""
    if eps < 0:
        raise ContractError("eps must be nonnegative")
    return (
        SpdMatrix(q_eps.data + eps * np.eye(q_eps.n)),
        SpdMatrix(r_eps.data + eps * np.eye(r_eps.n)),
    )


class ObjectiveContext:
    """Frozen per-step data defining the objective, with cached factorizations.

    Parameters: the regressor sample (D, b), the previous estimate and its
    covariance (prior), the equation noise weight R_w, the eigenvalue floor
    eps, and the dimensions (n, p) of Q and R.
    """

    def __init__(self, sample: RegressorSample, prior_theta, prior_psi: SpdMatrix,
                 r_w: SpdMatrix, eps: float, n: int, p: int):
        if eps < 0:
            raise ContractError("eps must be nonnegative")
        self.n, self.p = n, p
        self.m_q, self.m_r = vech_len(n), vech_len(p)
        dim = self.m_q + self.m_r
        d = np.asarray(sample.d, dtype=float)
        if d.shape[1] != dim:
            raise ContractError(
                f"D has {d.shape[1]} columns, expected {dim} for n={n}, p={p}"
            )
        if r_w.n != d.shape[0]:
            raise ContractError(
                f"R_w side {r_w.n} does not match the {d.shape[0]} regressor rows"
            )
        self.sample = sample
        self.d = d
        self.b = check_vector(sample.b, dim=d.shape[0], name="b")
        self.prior_theta = check_vector(prior_theta, dim=dim, name="prior_theta")
        if prior_psi.n != dim:
            raise ContractError("prior covariance side does not match theta")
        self.prior_psi = prior_psi
        self.r_w = r_w
        self.eps = float(eps)

        self._rw_cho = cho_factor(r_w.data)
        self._psi_inv = cho_solve(cho_factor(prior_psi.data), np.eye(dim))
        rw_inv_d = cho_solve(self._rw_cho, d)
        # Directional-derivative blocks of the theta-space gradient.
        self._h_q = d[:, : self.m_q].T @ rw_inv_d + self._psi_inv[: self.m_q]
        self._h_r = d[:, self.m_q:].T @ rw_inv_d + self._psi_inv[self.m_q:]
        # The cost is an exact quadratic in theta; cache its canonical form
        # 0.5 theta^T A theta - c^T theta + const for the solver's hot path.
        self._quad_a = np.vstack([self._h_q, self._h_r])
        rw_inv_b = cho_solve(self._rw_cho, self.b)
        self._quad_c = d.T @ rw_inv_b + self._psi_inv @ self.prior_theta
        self._quad_const = 0.5 * float(
            self.b @ rw_inv_b
            + self.prior_theta @ (self._psi_inv @ self.prior_theta)
        )
        # vech-coefficient vectors pair with symmetric matrices through a
        # fixed linear map; precompute its basis once per side.
        self._basis_q = self._coeff_basis(n)
        self._basis_r = self._coeff_basis(p)
        self._eps_eye_n = self.eps * np.eye(n)
        self._eps_eye_p = self.eps * np.eye(p)

    def theta_of(self, q: SpdMatrix, r: SpdMatrix) -> np.ndarray:
        """Full coordinates theta at the manifold point (Q, R)."""
        return np.concatenate([
            vech(q.data + self._eps_eye_n),
            vech(r.data + self._eps_eye_p),
        ])

    def cost(self, q: SpdMatrix, r: SpdMatrix) -> float:
        return self.cost_theta(self.theta_of(q, r))

    def cost_theta(self, theta) -> float:
        """The quadratic cost evaluated directly in theta coordinates."""
        return float(
            0.5 * theta @ (self._quad_a @ theta)
            - self._quad_c @ theta
            + self._quad_const
        )

    def _grad_theta(self, theta) -> np.ndarray:
        return self._quad_a @ theta - self._quad_c

    @staticmethod
    def _coeff_basis(side):
        """Stacked images of the map w -> btr(sym(uvec(I) (w^T S))).

        Trace-pairing a vech-coefficient vector with symmetric matrices is
        linear in w, so the map is applied once to each basis vector and the
        hot path reduces to a tensor contraction.
        """
        sel = sel_matrix(side)
        uvec_eye = uvec(np.eye(side))
        m = vech_len(side)
        basis = np.empty((m, side, side))
        for i in range(m):
            w = np.zeros(m)
            w[i] = 1.0
            basis[i] = btr(symmetrize(np.outer(uvec_eye, sel.T @ w)), side)
        return basis

    def _coeff_to_matrix(self, w, side):
        basis = self._basis_q if side == self.n else self._basis_r
        return np.tensordot(w, basis, axes=1)

    def egrad_matrices(self, q: SpdMatrix, r: SpdMatrix):
        """Euclidean gradient matrices (symmetric) at the manifold point."""
        g = self._grad_theta(self.theta_of(q, r))
        return (
            self._coeff_to_matrix(g[: self.m_q], self.n),
            self._coeff_to_matrix(g[self.m_q:], self.p),
        )

    def riem_grad(self, q: SpdMatrix, r: SpdMatrix) -> TangentPair:
        eg_q, eg_r = self.egrad_matrices(q, r)
        return TangentPair(egrad_to_rgrad(q, eg_q), egrad_to_rgrad(r, eg_r))

    def hess_operator(self, q: SpdMatrix, r: SpdMatrix):
        """Riemannian Hessian action at a fixed base point as a closure."""
        eg_q, eg_r = self.egrad_matrices(q, r)

        def apply(v: TangentPair) -> TangentPair:
            theta_v = np.concatenate([vech(v.v_q), vech(v.v_r)])
            dg_q = self._coeff_to_matrix(self._h_q @ theta_v, self.n)
            dg_r = self._coeff_to_matrix(self._h_r @ theta_v, self.p)
            return TangentPair(
                ehess_to_rhess(q, eg_q, dg_q, v.v_q),
                ehess_to_rhess(r, eg_r, dg_r, v.v_r),
            )

        return apply

    def riem_hess_apply(self, q: SpdMatrix, r: SpdMatrix, v: TangentPair) -> TangentPair:
        return self.hess_operator(q, r)(v)
