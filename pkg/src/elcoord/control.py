"""Distributed coordination control laws and the actuation saturation model.

Two controllers, both driven by the gradient of the link potential toward
each initial neighbor:

* output feedback: no velocity measurements at all; damping is injected
  through a first-order position filter xhat' = -zeta xhat + x, and gravity
  is compensated from the known model.

    f_hat = -rho * sum_j grad_i psi - kappa * (x - zeta * xhat) + g*

  Note x - zeta*xhat is exactly the filter derivative, so the damping term
  is -kappa * d(xhat)/dt.

* adaptive: velocities are measured but the masses are unknown. A regressor
  times the current estimate theta_hat feeds forward the reference dynamics,
  damping acts on the sliding signal s = dx + alpha * e and on dx itself,
  and theta_hat flows by a smoothly projected gradient law that keeps it in
  a configured box.

Saturation is componentwise. The output-feedback wrench is clamped directly;
the adaptive law instead scales its damping gain down to kappa_hat so the
total command respects the limits whenever the feedforward part alone fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import RobotModel, regressor, task_velocity
from .potential import PotentialSpec, grad_i, hessian

__all__ = [
    "OutputFeedbackGains",
    "AdaptiveGains",
    "ActuationLimits",
    "FilterState",
    "neighbor_gradient_sum",
    "neighbor_gradient_rate",
    "output_feedback_control",
    "AdaptiveControl",
    "adaptive_control",
    "project_theta_dot",
    "saturate_output_feedback",
    "saturate_adaptive",
]


# ---------------------------------------------------------------------------
# gain / limit containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutputFeedbackGains:
    """Per-agent gains: proportional scale rho, damping kappa, filter pole zeta."""

    rho: float
    kappa: float
    zeta: float

    def __post_init__(self):
        if min(self.rho, self.kappa, self.zeta) <= 0.0:
            raise ValueError("output-feedback gains must be strictly positive")


@dataclass(frozen=True)
class AdaptiveGains:
    """Per-agent adaptive gains and the parameter box.

    alpha weighs the gradient sum inside the sliding signal, mu is direct
    velocity damping, beta the adaptation rate, delta the projection
    boundary-layer width. theta_lo/theta_hi bound the admissible parameter
    vector componentwise; delta must fit inside half the box on every
    component so the smoothing layers cannot overlap.
    """

    kappa: float
    mu: float
    beta: float
    alpha: float
    delta: float
    theta_lo: tuple = (0.1, 0.1)
    theta_hi: tuple = (0.835, 0.835)

    def __post_init__(self):
        if min(self.kappa, self.mu, self.beta, self.alpha, self.delta) <= 0.0:
            raise ValueError("adaptive gains must be strictly positive")
        lo = np.asarray(self.theta_lo, dtype=float)
        hi = np.asarray(self.theta_hi, dtype=float)
        if lo.shape != hi.shape:
            raise ValueError("parameter box bounds must have matching shapes")
        if np.any(hi <= lo):
            raise ValueError("parameter box must have positive width")
        if np.any(self.delta >= 0.5 * (hi - lo)):
            raise ValueError("delta must be below half the parameter box width")

    @property
    def box(self):
        return (np.asarray(self.theta_lo, dtype=float), np.asarray(self.theta_hi, dtype=float))


@dataclass(frozen=True)
class ActuationLimits:
    """Componentwise task-wrench bound; the k-th command obeys |f_k| <= f_bar[k]."""

    f_bar: tuple

    def __post_init__(self):
        if np.any(np.asarray(self.f_bar, dtype=float) <= 0.0):
            raise ValueError("actuation limits must be strictly positive")

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.f_bar, dtype=float)


@dataclass
class FilterState:
    """First-order velocity-filter internal state for one agent."""

    xhat: np.ndarray

    @staticmethod
    def initial(x0, gains: OutputFeedbackGains) -> "FilterState":
        # Starting at x(0)/zeta zeroes the filter derivative, so damping is
        # inactive at t = 0 and the initial command is implementable.
        return FilterState(xhat=np.asarray(x0, dtype=float) / gains.zeta)


# ---------------------------------------------------------------------------
# shared gradient bookkeeping
# ---------------------------------------------------------------------------

def neighbor_gradient_sum(x_i, neighbor_xs, spec: PotentialSpec) -> np.ndarray:
    """e_i = sum over initial neighbors of grad_i psi(||x_i - x_j||)."""
    e = np.zeros(2)
    for x_j in neighbor_xs:
        e += grad_i(x_i, x_j, spec)
    return e


def neighbor_gradient_rate(x_i, dx_i, neighbor_xs, neighbor_dxs, spec: PotentialSpec) -> np.ndarray:
    """de_i/dt = sum_j Hess(x_ij) (dx_i - dx_j)."""
    de = np.zeros(2)
    x_i = np.asarray(x_i, dtype=float)
    dx_i = np.asarray(dx_i, dtype=float)
    for x_j, dx_j in zip(neighbor_xs, neighbor_dxs):
        de += hessian(x_i - np.asarray(x_j, dtype=float), spec) @ (dx_i - np.asarray(dx_j, dtype=float))
    return de


# ---------------------------------------------------------------------------
# output feedback
# ---------------------------------------------------------------------------

def output_feedback_control(x_i, neighbor_xs, xhat_i, gains: OutputFeedbackGains, g_star, spec: PotentialSpec):
    """Position-only coordination command for one agent.

    Returns (f_hat, dxhat): the unsaturated wrench and the filter state
    derivative. Reads positions and the filter state only; there is no
    velocity argument on purpose.
    """
    x_i = np.asarray(x_i, dtype=float)
    xhat_i = np.asarray(xhat_i, dtype=float)
    e = neighbor_gradient_sum(x_i, neighbor_xs, spec)
    dxhat = -gains.zeta * xhat_i + x_i
    f_hat = -gains.rho * e - gains.kappa * dxhat + np.asarray(g_star, dtype=float)
    return f_hat, dxhat


# ---------------------------------------------------------------------------
# adaptive
# ---------------------------------------------------------------------------

@dataclass
class AdaptiveControl:
    """Everything the adaptive law computes for one agent at one state."""

    f_hat: np.ndarray      # unsaturated wrench (uses the full kappa)
    omega: np.ndarray      # raw adaptation flow, before projection
    e: np.ndarray
    de: np.ndarray
    s: np.ndarray
    base: np.ndarray       # feedforward + velocity damping, without -kappa s
    Phi: np.ndarray


def adaptive_control(
    q_i,
    dq_i,
    neighbor_xs,
    neighbor_dxs,
    theta_hat,
    gains: AdaptiveGains,
    model: RobotModel,
    spec: PotentialSpec,
) -> AdaptiveControl:
    """Adaptive coordination command for one agent.

    Task position/velocity follow from the agent's own joint state; neighbor
    positions and velocities arrive over the (1-hop) communication links.
    The wrench is Phi theta_hat - kappa s - mu dx with s = dx + alpha e, and
    omega = -beta Phi^T s drives the estimate.
    """
    from .dynamics import forward_kinematics

    theta_hat = np.asarray(theta_hat, dtype=float)
    x_i = forward_kinematics(q_i, model)
    dx_i = task_velocity(q_i, dq_i, model)

    e = neighbor_gradient_sum(x_i, neighbor_xs, spec)
    de = neighbor_gradient_rate(x_i, dx_i, neighbor_xs, neighbor_dxs, spec)
    s = dx_i + gains.alpha * e

    Phi = regressor(q_i, dq_i, -gains.alpha * e, -gains.alpha * de, model)
    base = Phi @ theta_hat - gains.mu * dx_i
    f_hat = base - gains.kappa * s
    omega = -gains.beta * (Phi.T @ s)
    return AdaptiveControl(f_hat=f_hat, omega=omega, e=e, de=de, s=s, base=base, Phi=Phi)


def project_theta_dot(theta_hat, omega, gains: AdaptiveGains) -> np.ndarray:
    """Smoothly projected parameter flow.

    Componentwise: inside the box and more than delta from the active bound
    the flow is omega unchanged; within the delta layer the outward
    component fades linearly, reaching zero exactly on the bound. The
    resulting flow is continuous in (theta_hat, omega) and never points out
    of the box from its surface.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    omega = np.asarray(omega, dtype=float)
    lo, hi = gains.box
    delta = gains.delta
    out = omega.copy()
    for k in range(out.shape[0]):
        if omega[k] < 0.0 and theta_hat[k] <= lo[k] + delta:
            upsilon = min(1.0, (lo[k] + delta - theta_hat[k]) / delta)
            out[k] = (1.0 - upsilon) * omega[k]
        elif omega[k] > 0.0 and theta_hat[k] >= hi[k] - delta:
            upsilon = min(1.0, (theta_hat[k] - (hi[k] - delta)) / delta)
            out[k] = (1.0 - upsilon) * omega[k]
    return out


# ---------------------------------------------------------------------------
# saturation
# ---------------------------------------------------------------------------

def saturate_output_feedback(f_hat, limits: ActuationLimits):
    """Clamp a wrench componentwise. Returns (applied, flags)."""
    f_hat = np.asarray(f_hat, dtype=float)
    f_bar = limits.vec
    applied = np.clip(f_hat, -f_bar, f_bar)
    flags = np.abs(f_hat) > f_bar
    return applied, flags


def saturate_adaptive(base, s, kappa: float, limits: ActuationLimits):
    """Damping-scaling saturation for the adaptive law.

    Finds the largest kappa_hat in (0, kappa] with
    |base_k - kappa_hat s_k| <= f_bar_k for every component and returns
    (applied wrench, kappa_hat, base_saturated). When the base command alone
    already violates the limits no kappa_hat exists; the base is hard
    clamped and base_saturated is flagged so callers can record the
    diagnostic.
    """
    base = np.asarray(base, dtype=float)
    s = np.asarray(s, dtype=float)
    f_bar = limits.vec

    if np.any(np.abs(base) > f_bar):
        return np.clip(base, -f_bar, f_bar), 0.0, True

    kappa_hat = float(kappa)
    for k in range(base.shape[0]):
        if s[k] != 0.0:
            room = (f_bar[k] + np.sign(s[k]) * base[k]) / abs(s[k])
            kappa_hat = min(kappa_hat, room)
    kappa_hat = max(kappa_hat, 0.0)
    applied = np.clip(base - kappa_hat * s, -f_bar, f_bar)
    return applied, kappa_hat, False
