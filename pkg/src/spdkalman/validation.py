"""Shared input validation helpers and error types.

Every module in the package funnels its argument checking through these
helpers so that contract violations surface as a small, predictable set of
exception types.
"""

import numpy as np

# Relative tolerance for "is this matrix symmetric" checks.
SYMMETRY_RTOL = 1e-10


class ContractError(ValueError):
    """An argument violates a documented contract (shape, symmetry, range)."""


class NotSpdError(ContractError):
    """A matrix required to be symmetric positive definite is not."""


class ExcitationError(RuntimeError):
    """The data window carries too little information.

    Raised when an observability Gramian over the requested window is
    singular or numerically ill conditioned, which means the stacked
    measurements cannot be inverted for the state.
    """


def as_float_array(a, name="array"):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} contains non-finite entries")
    return a


def check_matrix(a, name="matrix"):
    a = as_float_array(a, name)
    if a.ndim != 2:
        raise ContractError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def check_square(a, name="matrix"):
    a = check_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ContractError(f"{name} must be square, got shape {a.shape}")
    return a


def check_symmetric(a, name="matrix", rtol=SYMMETRY_RTOL):
    """Validate symmetry within a relative tolerance and return the array."""
    a = check_square(a, name)
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if float(np.max(np.abs(a - a.T))) > rtol * scale:
        raise ContractError(f"{name} is not symmetric within tolerance")
    return a


def check_vector(a, dim=None, name="vector"):
    a = as_float_array(a, name)
    a = np.atleast_1d(a)
    if a.ndim != 1:
        raise ContractError(f"{name} must be 1-dimensional, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ContractError(f"{name} must have length {dim}, got {a.shape[0]}")
    return a


def check_series(a, width, name="series"):
    """Coerce a measurement or input sequence to shape (N, width)."""
    a = as_float_array(a, name)
    if a.ndim == 1:
        if width != 1:
            raise ContractError(
                f"{name} is 1-dimensional but {width} channels are expected"
            )
        a = a[:, None]
    if a.ndim != 2 or a.shape[1] != width:
        raise ContractError(
            f"{name} must have shape (N, {width}), got {a.shape}"
        )
    return a
