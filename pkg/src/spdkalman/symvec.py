"""Vectorization algebra for symmetric matrices.

Conventions used throughout the package:

* ``uvec`` stacks all columns of a square matrix (column-major), so
  ``uvec(A @ X @ B) == np.kron(B.T, A) @ uvec(X)``.
* ``vech`` stacks the lower triangle column by column:
  ``[X[0,0], X[1,0], ..., X[n-1,0], X[1,1], ..., X[n-1,n-1]]``.
* ``kron_h(A)`` is the half Kronecker square defined by
  ``vech(A @ X @ A.T) == kron_h(A) @ vech(X)`` for symmetric ``X``.
* ``kron_u(Bt, A)`` is the rectangular variant defined by
  ``uvec(A @ X @ B) == kron_u(B.T, A) @ vech(X)`` for symmetric ``X``.
* ``btr(A, n)`` sums the n-by-n diagonal blocks of an n^2-by-n^2 matrix, so
  ``trace(A @ np.kron(I_n, B)) == trace(btr(A, n) @ B)``.
* ``sel_matrix(n)`` maps uvec coordinates to vech coordinates:
  ``vech(X) == sel_matrix(n) @ uvec(X)`` for any square ``X``.
"""

import numpy as np

from .validation import SYMMETRY_RTOL, ContractError

_DUP_CACHE = {}
_SEL_CACHE = {}
_TRIU_CACHE = {}


def _triu(n):
    if n not in _TRIU_CACHE:
        _TRIU_CACHE[n] = np.triu_indices(n)
    return _TRIU_CACHE[n]


def vech_len(n):
    """Length of the half vectorization of an n-by-n matrix."""
    return n * (n + 1) // 2


def vech_dim(length):
    """Matrix side recovered from a vech length, validating the input."""
    n = int(round((np.sqrt(8 * length + 1) - 1) / 2))
    if vech_len(n) != length:
        raise ContractError(f"{length} is not a valid vech length")
    return n


def vech(x):
    """Half vectorization (column-major lower triangle) of a symmetric matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ContractError(f"vech expects a square matrix, got shape {x.shape}")
    scale = max(1.0, float(np.abs(x).max())) if x.size else 1.0
    if float(np.abs(x - x.T).max()) > SYMMETRY_RTOL * scale:
        raise ContractError("vech argument is not symmetric within tolerance")
    r, c = _triu(x.shape[0])
    # (c, r) walks the lower triangle column by column.
    return x[c, r].copy()


def unvech(v):
    """Inverse of :func:`vech`; fills both triangles."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ContractError("unvech expects a 1-dimensional array")
    n = vech_dim(v.shape[0])
    out = np.zeros((n, n))
    r, c = _triu(n)
    out[c, r] = v
    out[r, c] = v
    return out


def uvec(a):
    """Full vectorization, stacking the columns of a square matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"uvec expects a square matrix, got shape {a.shape}")
    return a.flatten(order="F")


def unuvec(v, n=None):
    """Inverse of :func:`uvec`."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ContractError("unuvec expects a 1-dimensional array")
    if n is None:
        n = int(round(np.sqrt(v.shape[0])))
    if n * n != v.shape[0]:
        raise ContractError(f"length {v.shape[0]} is not a perfect square")
    return v.reshape((n, n), order="F").copy()


def duplication(n):
    """Duplication matrix D with ``uvec(X) == D @ vech(X)`` for symmetric X."""
    if n not in _DUP_CACHE:
        d = np.zeros((n * n, vech_len(n)))
        for j in range(n):
            for i in range(n):
                lo, hi = min(i, j), max(i, j)
                col = lo * n - lo * (lo - 1) // 2 + (hi - lo)
                d[j * n + i, col] = 1.0
        d.setflags(write=False)
        _DUP_CACHE[n] = d
    return _DUP_CACHE[n]


def sel_matrix(n):
    """Selection matrix picking vech entries out of uvec coordinates.

    Block-diagonal of identity matrices with the first i rows deleted,
    i = 0..n-1. Satisfies ``vech(X) == sel_matrix(n) @ uvec(X)`` and, for
    symmetric X, ``vech(X) == sel_matrix(n) @ np.kron(I, X) @ uvec(I)``.
    """
    if n not in _SEL_CACHE:
        s = np.zeros((vech_len(n), n * n))
        t = 0
        for j in range(n):
            for i in range(j, n):
                s[t, j * n + i] = 1.0
                t += 1
        s.setflags(write=False)
        _SEL_CACHE[n] = s
    return _SEL_CACHE[n]


def kron_h(a):
    """Half Kronecker square: ``vech(A X A.T) == kron_h(A) @ vech(X)``.

    For A of shape (m, n) the result has shape (m(m+1)/2, n(n+1)/2).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ContractError("kron_h expects a matrix")
    m, n = a.shape
    return sel_matrix(m) @ np.kron(a, a) @ duplication(n)


def kron_u(bt, a):
    """Rectangular half Kronecker product.

    Defined by ``uvec(A X B) == kron_u(B.T, A) @ vech(X)`` for symmetric X.
    Both arguments must have the same number of columns (the side of X).
    ``kron_u(I, I)`` is the duplication matrix.
    """
    bt = np.asarray(bt, dtype=float)
    a = np.asarray(a, dtype=float)
    if bt.ndim != 2 or a.ndim != 2:
        raise ContractError("kron_u expects matrices")
    if bt.shape[1] != a.shape[1]:
        raise ContractError(
            f"kron_u column counts must agree, got {bt.shape} and {a.shape}"
        )
    return np.kron(bt, a) @ duplication(a.shape[1])


def btr(a, n):
    """Block trace: sum of the n-by-n diagonal blocks of an n^2-by-n^2 matrix."""
    a = np.asarray(a, dtype=float)
    if a.shape != (n * n, n * n):
        raise ContractError(
            f"btr expects shape ({n * n}, {n * n}), got {a.shape}"
        )
    return np.einsum("iaib->ab", a.reshape(n, n, n, n))


def symmetrize(a):
    """Symmetric part (A + A.T) / 2."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(
            f"symmetrize expects a square matrix, got shape {a.shape}"
        )
    return (a + a.T) / 2.0
