"""Riemannian trust-region solver on the product manifold SPD(n) x SPD(p).

Minimizes the per-step objective with the classical outer loop: build the
quadratic model of the cost at the current point, approximately minimize it
inside the trust region with a truncated conjugate gradient inner solver,
retract the step along the geodesic, and accept or reject based on the
ratio of actual to predicted decrease. Because the iterates move along
geodesics of the SPD cone they remain positive definite by construction,
whatever the data says.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .objective import ObjectiveContext
from .spd import SpdMatrix, TangentPair, pair_inner, pair_norm, retract
from .validation import ContractError

# Relative floor for the predicted model decrease; below this the current
# point is numerically stationary.
_MODEL_DECREASE_FLOOR = 1e-15


@dataclass(frozen=True)
class TrustRegionParams:
    """Tuning constants for the outer loop and the inner CG solver.

    ``delta_bar`` (max radius) defaults to sqrt of the manifold dimension
    and ``delta_init`` to an eighth of that, both resolved against the
    objective when the solve starts. ``rho_min`` must lie in [0, 1/4).
    """

    delta_bar: float | None = None
    delta_init: float | None = None
    rho_min: float = 0.1
    max_outer: int = 50
    grad_tol: float = 1e-8
    tcg_kappa: float = 0.1
    tcg_theta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho_min < 0.25:
            raise ContractError("rho_min must lie in [0, 1/4)")
        if self.delta_bar is not None and self.delta_bar <= 0:
            raise ContractError("delta_bar must be positive")
        if self.delta_init is not None:
            if self.delta_init <= 0:
                raise ContractError("delta_init must be positive")
            if self.delta_bar is not None and self.delta_init > self.delta_bar:
                raise ContractError("delta_init must not exceed delta_bar")
        if self.max_outer < 1:
            raise ContractError("max_outer must be at least 1")
        if self.grad_tol <= 0:
            raise ContractError("grad_tol must be positive")

    def resolve(self, dim):
        bar = self.delta_bar if self.delta_bar is not None else math.sqrt(dim)
        init = self.delta_init if self.delta_init is not None else bar / 8.0
        return bar, init


@dataclass
class RtrTrace:
    """Per-iteration record of the outer loop."""

    cost: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    stop: list = field(default_factory=list)
    converged: bool = False
    final_cost: float = np.nan
    final_grad_norm: float = np.nan

    @property
    def n_iters(self):
        return len(self.cost)


def quad_model(ctx: ObjectiveContext, q: SpdMatrix, r: SpdMatrix,
               v: TangentPair) -> float:
    """Second-order model J + <grad, V> + 0.5 <Hess[V], V> at (Q, R)."""
    grad = ctx.riem_grad(q, r)
    hv = ctx.riem_hess_apply(q, r, v)
    return (
        ctx.cost(q, r)
        + pair_inner(q, r, grad, v)
        + 0.5 * pair_inner(q, r, hv, v)
    )


def tcg(ctx, q, r, delta, kappa=0.1, theta=1.0, max_inner=None,
        grad=None, hess_op=None):
    """Truncated conjugate gradient for the trust-region subproblem.

    Runs CG on the quadratic model in the tangent space at (Q, R) under the
    affine-invariant metric, stopping on the superlinear residual rule
    |r_j| <= |r_0| min(kappa, |r_0|^theta), on negative curvature, or when
    the iterate reaches the trust-region boundary (in the latter two cases
    the step is extended to the boundary along the current direction).

    Returns (step, hess_times_step, stop_reason).
    """
    if delta <= 0:
        raise ContractError("trust-region radius must be positive")
    if grad is None:
        grad = ctx.riem_grad(q, r)
    if hess_op is None:
        hess_op = ctx.hess_operator(q, r)
    if max_inner is None:
        max_inner = ctx.m_q + ctx.m_r

    v = TangentPair.zeros(ctx.n, ctx.p)
    hv = TangentPair.zeros(ctx.n, ctx.p)
    res = grad
    rr = pair_inner(q, r, res, res)
    r0_norm = math.sqrt(max(rr, 0.0))
    if r0_norm == 0.0:
        return v, hv, "zero gradient"
    target = r0_norm * min(kappa, r0_norm**theta)
    d = -1.0 * res

    # Inner products tracked incrementally: vv = <v, v>, vd = <v, d>,
    # dd = <d, d>, all in the metric at (Q, R).
    vv = 0.0
    vd = 0.0
    dd = rr

    for _ in range(max_inner):
        hd = hess_op(d)
        d_hd = pair_inner(q, r, d, hd)
        alpha = rr / d_hd if d_hd > 0 else np.inf
        vv_next = vv + 2.0 * alpha * vd + alpha * alpha * dd
        if d_hd <= 0 or vv_next >= delta * delta:
            # Stretch to the boundary along d: solve |v + tau d| = delta.
            tau = (-vd + math.sqrt(vd * vd + dd * (delta * delta - vv))) / dd
            v = v + tau * d
            hv = hv + tau * hd
            reason = "negative curvature" if d_hd <= 0 else "boundary"
            return v, hv, reason
        v = v + alpha * d
        hv = hv + alpha * hd
        vv = vv_next
        res = res + alpha * hd
        rr_next = pair_inner(q, r, res, res)
        if math.sqrt(max(rr_next, 0.0)) <= target:
            return v, hv, "converged"
        beta = rr_next / rr
        rr = rr_next
        d = -1.0 * res + beta * d
        vd = beta * (vd + alpha * dd)
        dd = rr + beta * beta * dd
    return v, hv, "max inner iterations"


def rtr_solve(ctx: ObjectiveContext, q0: SpdMatrix, r0: SpdMatrix,
              params: TrustRegionParams | None = None):
    """Trust-region minimization of the objective from the warm start (q0, r0).

    Returns (q, r, trace). Iterates are SPD throughout; accepted steps
    strictly decrease the cost. The loop stops when the gradient norm falls
    below ``grad_tol``, when the model predicts no meaningful decrease
    (numerical stationarity), or after ``max_outer`` iterations.
    """
    if params is None:
        params = TrustRegionParams()
    delta_bar, delta = params.resolve(ctx.m_q + ctx.m_r)
    if delta > delta_bar:
        raise ContractError("initial radius exceeds the radius cap")

    q, r = q0, r0
    cost = ctx.cost(q, r)
    trace = RtrTrace()

    # The base point only moves on acceptance, so the gradient and the
    # Hessian operator are reused across rejected iterations.
    grad = None
    for _ in range(params.max_outer):
        if grad is None:
            grad = ctx.riem_grad(q, r)
            grad_norm = pair_norm(q, r, grad)
            hess_op = ctx.hess_operator(q, r)
        if grad_norm <= params.grad_tol:
            trace.converged = True
            break
        v, hv, stop = tcg(
            ctx, q, r, delta,
            kappa=params.tcg_kappa, theta=params.tcg_theta,
            grad=grad, hess_op=hess_op,
        )
        decrease = -(pair_inner(q, r, grad, v) + 0.5 * pair_inner(q, r, hv, v))
        if decrease <= _MODEL_DECREASE_FLOOR * (1.0 + abs(cost)):
            # The model cannot improve on this point at this scale.
            trace.converged = True
            break
        q_new = retract(q, v.v_q, 1.0)
        r_new = retract(r, v.v_r, 1.0)
        cost_new = ctx.cost(q_new, r_new)
        rho = (cost - cost_new) / decrease

        trace.cost.append(cost)
        trace.grad_norm.append(grad_norm)
        trace.delta.append(delta)
        trace.rho.append(rho)
        trace.stop.append(stop)

        if rho < 0.25:
            delta = delta / 4.0
        elif rho > 0.75 and stop in ("negative curvature", "boundary"):
            delta = min(2.0 * delta, delta_bar)

        accepted = rho > params.rho_min
        trace.accepted.append(accepted)
        if accepted:
            q, r, cost = q_new, r_new, cost_new
            grad = None

    trace.final_cost = cost
    trace.final_grad_norm = pair_norm(q, r, ctx.riem_grad(q, r))
    if trace.final_grad_norm <= params.grad_tol:
        trace.converged = True
    return q, r, trace
