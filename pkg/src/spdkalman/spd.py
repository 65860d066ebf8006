"""Geometry of the symmetric positive definite cone.

The cone of SPD matrices is treated as a Riemannian manifold under the
affine-invariant metric

    <V1, V2>_X = trace(X^-1 V1 X^-1 V2),

for which geodesics have the closed form

    gamma(s) = X^(1/2) (X^(-1/2) Y X^(-1/2))^s X^(1/2),

and the geodesic leaving X with tangent velocity V is

    gamma_{X,V}(s) = X^(1/2) expm(s X^(-1/2) V X^(-1/2)) X^(1/2),

which stays SPD for every real s. Euclidean gradients and Hessians are
lifted to their Riemannian counterparts with the standard conversion

    grad f(X)      = X sym(egrad) X
    Hess f(X)[V]   = X sym(ederiv) X + sym(V sym(egrad) X).

All matrix functions are evaluated through symmetric eigendecompositions.
"""

from dataclasses import dataclass

import numpy as np

from .symvec import symmetrize
from .validation import SYMMETRY_RTOL, ContractError, NotSpdError

# An SPD candidate is rejected when eig_min <= SPD_EIG_RTOL * eig_max.
SPD_EIG_RTOL = 1e-12


class SpdMatrix:
    """A symmetric positive definite matrix with a certified spectrum.

    The constructor validates symmetry and positive definiteness; instances
    carry their eigendecomposition so that square roots, inverses and
    fractional powers are cheap. The wrapped array is read-only.
    """

    __slots__ = ("data", "eig_min", "_w", "_u")

    def __init__(self, data):
        a = np.asarray(data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractError(
                f"SPD matrix must be square, got shape {a.shape}"
            )
        scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
        if float(np.abs(a - a.T).max()) > SYMMETRY_RTOL * scale:
            raise ContractError("SPD matrix is not symmetric within tolerance")
        a = (a + a.T) / 2.0
        w, u = np.linalg.eigh(a)
        if w[0] <= SPD_EIG_RTOL * max(w[-1], 0.0):
            raise NotSpdError(
                f"matrix is not positive definite (eig_min={w[0]:.3e}, "
                f"eig_max={w[-1]:.3e})"
            )
        a.setflags(write=False)
        self.data = a
        self.eig_min = float(w[0])
        self._w = w
        self._u = u

    @property
    def n(self):
        return self.data.shape[0]

    @classmethod
    def identity(cls, n, scale=1.0):
        return cls(scale * np.eye(n))

    def power(self, s):
        """Matrix power X^s as a plain symmetric array."""
        return symmetrize((self._u * self._w**s) @ self._u.T)

    def solve(self, b):
        """X^-1 @ b without forming the inverse."""
        return self._u @ ((self._u.T @ b).T / self._w).T

    def __repr__(self):
        return f"SpdMatrix(n={self.n}, eig_min={self.eig_min:.6g})"


@dataclass(frozen=True)
class TangentPair:
    """A tangent vector on the product manifold SPD(n) x SPD(p).

    Both components must be symmetric; this is a documented contract rather
    than a checked one, because pairs are created in the innermost solver
    loop. Every producer in the package symmetrizes explicitly. Supports
    the vector space operations needed by the trust-region inner solver.
    """

    v_q: np.ndarray
    v_r: np.ndarray

    @classmethod
    def zeros(cls, n, p):
        return cls(np.zeros((n, n)), np.zeros((p, p)))

    def __add__(self, other):
        return TangentPair(self.v_q + other.v_q, self.v_r + other.v_r)

    def __sub__(self, other):
        return TangentPair(self.v_q - other.v_q, self.v_r - other.v_r)

    def __neg__(self):
        return TangentPair(-self.v_q, -self.v_r)

    def __mul__(self, scalar):
        return TangentPair(self.v_q * scalar, self.v_r * scalar)

    __rmul__ = __mul__


def spd_sqrt(x: SpdMatrix) -> SpdMatrix:
    """Principal square root."""
    return SpdMatrix(x.power(0.5))


def ai_inner(x: SpdMatrix, v1, v2) -> float:
    """Affine-invariant inner product trace(X^-1 V1 X^-1 V2) at base point X."""
    a = x._u.T @ v1 @ x._u
    b = x._u.T @ v2 @ x._u
    return float(np.sum(a * b / np.outer(x._w, x._w)))


def geodesic(x: SpdMatrix, y: SpdMatrix, s: float) -> SpdMatrix:
    """Point at parameter s on the geodesic from X (s=0) to Y (s=1)."""
    sq = x.power(0.5)
    isq = x.power(-0.5)
    mid = symmetrize(isq @ y.data @ isq)
    w, u = np.linalg.eigh(mid)
    frac = (u * w**s) @ u.T
    return SpdMatrix(sq @ frac @ sq)


def retract(x: SpdMatrix, v, s: float = 1.0) -> SpdMatrix:
    """Geodesic retraction: gamma_{X,V}(s). SPD for every real s.

    The tangent vector must be symmetric (same contract as TangentPair).
    """
    root = np.sqrt(x._w)
    sq = (x._u * root) @ x._u.T
    isq = (x._u / root) @ x._u.T
    a = symmetrize(isq @ v @ isq)
    w, u = np.linalg.eigh(a)
    e = (u * np.exp(s * w)) @ u.T
    return SpdMatrix(sq @ e @ sq)


def egrad_to_rgrad(x: SpdMatrix, egrad) -> np.ndarray:
    """Lift a Euclidean gradient to the affine-invariant gradient X sym(G) X."""
    return symmetrize(x.data @ symmetrize(egrad) @ x.data)


def ehess_to_rhess(x: SpdMatrix, egrad, ederiv, v) -> np.ndarray:
    """Riemannian Hessian action from Euclidean gradient and its derivative.

    ``ederiv`` is the directional derivative of the Euclidean gradient at X
    along the tangent vector ``v``.
    """
    first = x.data @ symmetrize(ederiv) @ x.data
    second = v @ symmetrize(egrad) @ x.data
    return symmetrize(first) + symmetrize(second)


def pair_inner(xq: SpdMatrix, xr: SpdMatrix, a: TangentPair, b: TangentPair) -> float:
    """Product-manifold inner product at base point (Q, R)."""
    return ai_inner(xq, a.v_q, b.v_q) + ai_inner(xr, a.v_r, b.v_r)


def pair_norm(xq: SpdMatrix, xr: SpdMatrix, a: TangentPair) -> float:
    return float(np.sqrt(max(pair_inner(xq, xr, a, a), 0.0)))
