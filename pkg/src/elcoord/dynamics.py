"""Planar two-revolute-joint manipulator dynamics.

Joint-space model

    M(q) ddq + C(q, dq) dq + g(q) = J(q)^T f

with f the wrench applied at the end effector, plus the task-space
equivalents

    M* = J^-T M J^-1
    C* = J^-T (C - M J^-1 Jdot) J^-1
    g* = J^-T g

used by the controllers and the certificate inequalities. The mass model is
a point mass per link concentrated at the link tip (m1 at the elbow, m2 at
the end effector), which keeps every term linear in (m1, m2) and gives
the joint-space inertia

    M11 = m1 l1^2 + m2 (l1^2 + l2^2 + 2 l1 l2 cos q2)
    M12 = m2 (l2^2 + l1 l2 cos q2)
    M22 = m2 l2^2

with det M = l1^2 l2^2 m2 (m1 + m2 sin^2 q2) > 0 everywhere, so joint-space
forward dynamics stays regular even where the Jacobian is singular.

Model bounds (inertia eigenvalue brackets, Coriolis constant, gravity
ceiling, manipulability floor) are estimated by deterministic low-discrepancy
sampling over an elbow-angle region; see `estimate_bounds`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegionContainsSingularity, SingularConfiguration

__all__ = [
    "SINGULARITY_TOL",
    "RobotModel",
    "JointState",
    "TaskState",
    "DynamicBounds",
    "mass_matrix",
    "coriolis_matrix",
    "gravity_vector",
    "forward_kinematics",
    "jacobian",
    "jacobian_dot",
    "task_velocity",
    "min_singular_value",
    "task_space_terms",
    "forward_dynamics",
    "regressor",
    "estimate_bounds",
]

# Configurations with min singular value of J at or below this are treated
# as singular throughout the package (task-space transforms refuse, the
# simulator aborts with a diagnostic event).
SINGULARITY_TOL = 1e-3


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobotModel:
    """Physical parameters of one planar 2-link manipulator.

    Masses are lumped at the link tips. `grav` is the gravitational
    acceleration acting along -y of the task plane (set 0.0 for a horizontal
    plane).
    """

    m1: float = 0.5
    m2: float = 0.5
    l1: float = 1.0
    l2: float = 1.0
    grav: float = 9.81
    mass_model: str = "point_mass_at_tip"

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mass_model != "point_mass_at_tip":
            raise ValueError(f"unsupported mass model: {self.mass_model!r}")

    @property
    def theta(self) -> np.ndarray:
        """Dynamic parameter vector [m1, m2] of the linear parameterization."""
        return np.array([self.m1, self.m2])


@dataclass
class JointState:
    """Joint angles q (rad) and velocities dq (rad/s), both length 2."""

    q: np.ndarray
    dq: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(2)
        self.dq = np.asarray(self.dq, dtype=float).reshape(2)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.dq))):
            raise ValueError("joint state entries must be finite")


@dataclass
class TaskState:
    """End-effector position x (m) and velocity dx (m/s), both length 2."""

    x: np.ndarray
    dx: np.ndarray

    @staticmethod
    def from_joint(state: JointState, model: RobotModel) -> "TaskState":
        return TaskState(
            x=forward_kinematics(state.q, model),
            dx=task_velocity(state.q, state.dq, model),
        )


@dataclass(frozen=True)
class DynamicBounds:
    """Sampled model bounds over an elbow-angle region.

    lambda1/lambda2 bracket the joint-space inertia eigenvalues,
    lambda1_star/lambda2_star the task-space ones. `c` bounds the task-space
    Coriolis term via ||C*(q, dq) y|| <= c ||dx|| ||y||, `gamma` bounds
    |g*| per task component, and `manip_floor` is the smallest Jacobian
    singular value seen over the region (after margin deflation).
    """

    lambda1: float
    lambda2: float
    lambda1_star: float
    lambda2_star: float
    c: float
    gamma: np.ndarray
    manip_floor: float
    region: tuple = ()
    n_samples: int = 0
    margin: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.lambda1_star <= self.lambda2_star):
            raise ValueError("task-space eigenvalue bounds out of order")
        if not (self.c > 0.0):
            raise ValueError("coriolis bound must be positive")
        if np.any(np.asarray(self.gamma) < 0.0):
            raise ValueError("gravity bound must be nonnegative")
        if not (self.manip_floor > 0.0):
            raise ValueError("manipulability floor must be positive")


# ---------------------------------------------------------------------------
# closed-form model terms
# ---------------------------------------------------------------------------

def mass_matrix(q, model: RobotModel) -> np.ndarray:
    """Joint-space inertia matrix M(q), symmetric positive definite."""
    q = np.asarray(q, dtype=float)
    m1, m2, l1, l2 = model.m1, model.m2, model.l1, model.l2
    c2 = math.cos(q[1])
    m11 = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2)
    m12 = m2 * (l2 * l2 + l1 * l2 * c2)
    m22 = m2 * l2 * l2
    return np.array([[m11, m12], [m12, m22]])


def coriolis_matrix(q, dq, model: RobotModel) -> np.ndarray:
    """Christoffel-symbol Coriolis matrix C(q, dq).

    Built so that d/dt M - 2 C is skew-symmetric.
    """
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    h = -model.m2 * model.l1 * model.l2 * math.sin(q[1])
    return np.array(
        [
            [h * dq[1], h * (dq[0] + dq[1])],
            [-h * dq[0], 0.0],
        ]
    )


def gravity_vector(q, model: RobotModel) -> np.ndarray:
    """Joint torques due to gravity."""
    q = np.asarray(q, dtype=float)
    m1, m2, l1, l2, g = model.m1, model.m2, model.l1, model.l2, model.grav
    c1 = math.cos(q[0])
    c12 = math.cos(q[0] + q[1])
    return np.array(
        [
            (m1 + m2) * g * l1 * c1 + m2 * g * l2 * c12,
            m2 * g * l2 * c12,
        ]
    )


def forward_kinematics(q, model: RobotModel) -> np.ndarray:
    """End-effector position in the task plane."""
    q = np.asarray(q, dtype=float)
    l1, l2 = model.l1, model.l2
    return np.array(
        [
            l1 * math.cos(q[0]) + l2 * math.cos(q[0] + q[1]),
            l1 * math.sin(q[0]) + l2 * math.sin(q[0] + q[1]),
        ]
    )


def jacobian(q, model: RobotModel) -> np.ndarray:
    """Task Jacobian J(q) with dx = J dq."""
    q = np.asarray(q, dtype=float)
    l1, l2 = model.l1, model.l2
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    return np.array(
        [
            [-l1 * s1 - l2 * s12, -l2 * s12],
            [l1 * c1 + l2 * c12, l2 * c12],
        ]
    )


def jacobian_dot(q, dq, model: RobotModel) -> np.ndarray:
    """Time derivative of the Jacobian along (q, dq)."""
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    l1, l2 = model.l1, model.l2
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    d1 = dq[0]
    d12 = dq[0] + dq[1]
    return np.array(
        [
            [-l1 * c1 * d1 - l2 * c12 * d12, -l2 * c12 * d12],
            [-l1 * s1 * d1 - l2 * s12 * d12, -l2 * s12 * d12],
        ]
    )


def task_velocity(q, dq, model: RobotModel) -> np.ndarray:
    """End-effector velocity J(q) dq."""
    return jacobian(q, model) @ np.asarray(dq, dtype=float)


def min_singular_value(q, model: RobotModel) -> float:
    """Smallest singular value of J(q), in closed form from J^T J."""
    q = np.asarray(q, dtype=float)
    l1, l2 = model.l1, model.l2
    c2 = math.cos(q[1])
    s2 = math.sin(q[1])
    g11 = l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2
    g22 = l2 * l2
    tr = g11 + g22
    det = (l1 * l2 * s2) ** 2
    disc = max(tr * tr - 4.0 * det, 0.0)
    lam_min = 0.5 * (tr - math.sqrt(disc))
    return math.sqrt(max(lam_min, 0.0))


def task_space_terms(q, dq, model: RobotModel):
    """Task-space dynamics terms (M*, C*, g*).

    Raises SingularConfiguration when the smallest singular value of J is at
    or below SINGULARITY_TOL, where the transformation is meaningless.
    """
    if min_singular_value(q, model) <= SINGULARITY_TOL:
        raise SingularConfiguration(
            f"min singular value of J at q={np.asarray(q)} is below {SINGULARITY_TOL}"
        )
    J = jacobian(q, model)
    J_inv = np.linalg.inv(J)
    M = mass_matrix(q, model)
    C = coriolis_matrix(q, dq, model)
    Jd = jacobian_dot(q, dq, model)
    M_star = J_inv.T @ M @ J_inv
    C_star = J_inv.T @ (C - M @ J_inv @ Jd) @ J_inv
    g_star = J_inv.T @ gravity_vector(q, model)
    return M_star, C_star, g_star


def forward_dynamics(state: JointState, f_task, model: RobotModel) -> np.ndarray:
    """Joint acceleration under an end-effector wrench.

    ddq = M^-1 (J^T f - C dq - g). Uses the closed-form 2x2 inverse; M is
    invertible at every configuration.
    """
    f_task = np.asarray(f_task, dtype=float)
    q, dq = state.q, state.dq
    M = mass_matrix(q, model)
    rhs = jacobian(q, model).T @ f_task - coriolis_matrix(q, dq, model) @ dq - gravity_vector(q, model)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return np.array(
        [
            (M[1, 1] * rhs[0] - M[0, 1] * rhs[1]) / det,
            (M[0, 0] * rhs[1] - M[1, 0] * rhs[0]) / det,
        ]
    )


# ---------------------------------------------------------------------------
# linear parameterization
# ---------------------------------------------------------------------------

def regressor(q, dq, v_ref, a_ref, model: RobotModel) -> np.ndarray:
    """Regressor Phi with Phi @ [m1, m2] = M* a_ref + C* v_ref + g*.

    v_ref and a_ref are task-space reference velocity/acceleration signals
    chosen by the caller (the adaptive law passes v_ref = -alpha e and
    a_ref = -alpha de). Only the masses are treated as unknown; lengths and
    gravity are kinematic knowns, so Phi is 2x2.

    Columns are built from the unit-mass slices of (M, C, g): with
    u = J^-1 v_ref and w = J^-1 a_ref - J^-1 Jdot u,

        Phi[:, k] = J^-T (dM/dm_k w + dC/dm_k u + dg/dm_k).
    """
    if min_singular_value(q, model) <= SINGULARITY_TOL:
        raise SingularConfiguration("regressor undefined at a singular configuration")
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    l1, l2, g = model.l1, model.l2, model.grav
    c1 = math.cos(q[0])
    c2 = math.cos(q[1])
    s2 = math.sin(q[1])
    c12 = math.cos(q[0] + q[1])

    J = jacobian(q, model)
    J_inv = np.linalg.inv(J)
    u = J_inv @ np.asarray(v_ref, dtype=float)
    w = J_inv @ np.asarray(a_ref, dtype=float) - J_inv @ jacobian_dot(q, dq, model) @ u

    # Unit-mass slices. dC/dm1 = 0; dC/dm2 has the Christoffel structure
    # with h evaluated at m2 = 1.
    dM1 = np.array([[l1 * l1, 0.0], [0.0, 0.0]])
    dM2 = np.array(
        [
            [l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2, l2 * l2 + l1 * l2 * c2],
            [l2 * l2 + l1 * l2 * c2, l2 * l2],
        ]
    )
    h1 = -l1 * l2 * s2
    dC2 = np.array([[h1 * dq[1], h1 * (dq[0] + dq[1])], [-h1 * dq[0], 0.0]])
    dg1 = np.array([g * l1 * c1, 0.0])
    dg2 = np.array([g * l1 * c1 + g * l2 * c12, g * l2 * c12])

    col1 = J_inv.T @ (dM1 @ w + dg1)
    col2 = J_inv.T @ (dM2 @ w + dC2 @ u + dg2)
    return np.column_stack([col1, col2])


# ---------------------------------------------------------------------------
# bound estimation
# ---------------------------------------------------------------------------

def _batch_terms(q1, q2, model: RobotModel):
    """Vectorized M, J, J^-1, g over sample arrays. Shapes (n, 2, 2) / (n, 2)."""
    m1, m2, l1, l2, g = model.m1, model.m2, model.l1, model.l2, model.grav
    c1, s1 = np.cos(q1), np.sin(q1)
    c2, s2 = np.cos(q2), np.sin(q2)
    c12, s12 = np.cos(q1 + q2), np.sin(q1 + q2)
    n = q1.shape[0]

    M = np.empty((n, 2, 2))
    M[:, 0, 0] = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2)
    M[:, 0, 1] = m2 * (l2 * l2 + l1 * l2 * c2)
    M[:, 1, 0] = M[:, 0, 1]
    M[:, 1, 1] = m2 * l2 * l2

    J = np.empty((n, 2, 2))
    J[:, 0, 0] = -l1 * s1 - l2 * s12
    J[:, 0, 1] = -l2 * s12
    J[:, 1, 0] = l1 * c1 + l2 * c12
    J[:, 1, 1] = l2 * c12

    grav = np.empty((n, 2))
    grav[:, 0] = (m1 + m2) * g * l1 * c1 + m2 * g * l2 * c12
    grav[:, 1] = m2 * g * l2 * c12
    return M, J, grav, (c1, s1, c2, s2, c12, s12)


def _sym_eig_bounds(A):
    """Eigenvalue range of a batch of symmetric 2x2 matrices."""
    tr = A[:, 0, 0] + A[:, 1, 1]
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    return 0.5 * (tr - disc), 0.5 * (tr + disc)


def _coriolis_direction_sweep(q1, q2, J, J_inv, M, model, n_dirs=48):
    """Max over unit task-velocity/test directions of ||C*(q, J^-1 u) y||.

    C* is linear in the task velocity, so sweeping unit directions and
    taking the max gives the constant c with ||C* y|| <= c ||dx|| ||y||.
    """
    m2, l1, l2 = model.m2, model.l1, model.l2
    s2 = np.sin(q2)
    c1, s1 = np.cos(q1), np.sin(q1)
    c12, s12 = np.cos(q1 + q2), np.sin(q1 + q2)
    n = q1.shape[0]

    # C*(q, dq) and Jdot(q, dq) are linear in dq; assemble the two basis
    # slices T_a = C*(q, J^-1 e_a) as (n, 2, 2).
    T = np.empty((2, n, 2, 2))
    for a in range(2):
        e = np.zeros(2)
        e[a] = 1.0
        dq = J_inv @ e  # (n, 2)
        h = -m2 * l1 * l2 * s2
        C = np.empty((n, 2, 2))
        C[:, 0, 0] = h * dq[:, 1]
        C[:, 0, 1] = h * (dq[:, 0] + dq[:, 1])
        C[:, 1, 0] = -h * dq[:, 0]
        C[:, 1, 1] = 0.0
        d1 = dq[:, 0]
        d12 = dq[:, 0] + dq[:, 1]
        Jd = np.empty((n, 2, 2))
        Jd[:, 0, 0] = -l1 * c1 * d1 - l2 * c12 * d12
        Jd[:, 0, 1] = -l2 * c12 * d12
        Jd[:, 1, 0] = -l1 * s1 * d1 - l2 * s12 * d12
        Jd[:, 1, 1] = -l2 * s12 * d12
        inner = C - M @ (J_inv @ Jd)
        T[a] = np.transpose(J_inv, (0, 2, 1)) @ inner @ J_inv

    ang = np.linspace(0.0, 2.0 * np.pi, n_dirs, endpoint=False)
    U = np.stack([np.cos(ang), np.sin(ang)], axis=1)  # velocity directions
    best = np.zeros(n)
    for u in U:
        A = u[0] * T[0] + u[1] * T[1]  # (n, 2, 2) = C*(q, unit dx)
        # max over unit y of ||A y|| is the largest singular value
        _, smax = _sym_eig_bounds(np.transpose(A, (0, 2, 1)) @ A)
        best = np.maximum(best, np.sqrt(smax))
    return float(np.max(best))


def estimate_bounds(
    model: RobotModel,
    region,
    n_samples: int = 2048,
    margin: float = 0.05,
) -> DynamicBounds:
    """Estimate model bounds over elbow angles q2 in [region[0], region[1]].

    Samples (q1, q2) with a deterministic Halton sequence, q1 over the full
    circle, and returns eigenvalue brackets, the Coriolis constant, the
    per-component gravity ceiling, and the manipulability floor, each pushed
    outward by `margin` (upper bounds inflated, lower bounds deflated).

    Raises RegionContainsSingularity if the region touches a straight or
    folded elbow (sin q2 = 0) or if any sample lands below SINGULARITY_TOL.
    """
    q2_lo, q2_hi = float(region[0]), float(region[1])
    if q2_hi < q2_lo:
        raise ValueError("region must be ordered (q2_lo, q2_hi)")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")

    # Any multiple of pi inside the closed interval means a singular elbow.
    k_lo = math.ceil(q2_lo / math.pi - 1e-12)
    k_hi = math.floor(q2_hi / math.pi + 1e-12)
    if k_lo <= k_hi:
        raise RegionContainsSingularity(
            f"elbow region [{q2_lo:.6g}, {q2_hi:.6g}] contains sin(q2) = 0"
        )

    from scipy.stats import qmc

    if q2_hi > q2_lo:
        u = qmc.Halton(d=2, scramble=False).random(n_samples)
        q1 = -math.pi + 2.0 * math.pi * u[:, 0]
        q2 = q2_lo + (q2_hi - q2_lo) * u[:, 1]
        # Include the region endpoints: several bounds peak exactly there.
        q2 = np.concatenate([q2, [q2_lo, q2_hi], [q2_lo, q2_hi]])
        q1 = np.concatenate([q1, [0.0, 0.0], [math.pi / 2, math.pi / 2]])
    else:
        u = qmc.Halton(d=1, scramble=False).random(n_samples)
        q1 = -math.pi + 2.0 * math.pi * u[:, 0]
        q2 = np.full_like(q1, q2_lo)

    M, J, grav, _ = _batch_terms(q1, q2, model)
    det_J = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    g11 = J[:, 0, 0] ** 2 + J[:, 1, 0] ** 2
    g22 = J[:, 0, 1] ** 2 + J[:, 1, 1] ** 2
    tr = g11 + g22
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det_J * det_J, 0.0))
    sv_min = np.sqrt(np.maximum(0.5 * (tr - disc), 0.0))
    floor = float(np.min(sv_min))
    if floor <= SINGULARITY_TOL:
        raise RegionContainsSingularity(
            f"sampled manipulability {floor:.3g} at or below tolerance {SINGULARITY_TOL}"
        )

    J_inv = np.linalg.inv(J)
    M_star = np.transpose(J_inv, (0, 2, 1)) @ M @ J_inv
    g_star = np.einsum("nij,ni->nj", J_inv, grav)

    lam_lo, lam_hi = _sym_eig_bounds(M)
    lam_star_lo, lam_star_hi = _sym_eig_bounds(M_star)
    c_raw = _coriolis_direction_sweep(q1, q2, J, J_inv, M, model)

    up = 1.0 + margin
    dn = 1.0 - margin
    return DynamicBounds(
        lambda1=float(np.min(lam_lo)) * dn,
        lambda2=float(np.max(lam_hi)) * up,
        lambda1_star=float(np.min(lam_star_lo)) * dn,
        lambda2_star=float(np.max(lam_star_hi)) * up,
        c=c_raw * up,
        gamma=np.max(np.abs(g_star), axis=0) * up,
        manip_floor=floor * dn,
        region=(q2_lo, q2_hi),
        n_samples=int(n_samples),
        margin=float(margin),
    )


def merge_bounds(bounds_list) -> DynamicBounds:
    """Fleet-wide bounds: the conservative envelope of per-robot bounds.

    Eigenvalue brackets widen, the Coriolis and gravity ceilings take the
    max, the manipulability floor takes the min. Useful when robots differ;
    for identical robots this is the identity.
    """
    bl = list(bounds_list)
    if not bl:
        raise ValueError("merge_bounds needs at least one DynamicBounds")
    if len(bl) == 1:
        return bl[0]
    return DynamicBounds(
        lambda1=min(b.lambda1 for b in bl),
        lambda2=max(b.lambda2 for b in bl),
        lambda1_star=min(b.lambda1_star for b in bl),
        lambda2_star=max(b.lambda2_star for b in bl),
        c=max(b.c for b in bl),
        gamma=np.max(np.vstack([np.asarray(b.gamma) for b in bl]), axis=0),
        manip_floor=min(b.manip_floor for b in bl),
        region=bl[0].region,
        n_samples=min(b.n_samples for b in bl),
        margin=max(b.margin for b in bl),
    )
