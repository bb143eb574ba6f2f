"""Certified sufficient conditions for connectivity-preserving coordination.

Each check evaluates one inequality that, when satisfied, guarantees the
corresponding closed loop keeps every initial communication link shorter
than the radius while coordinating. The four main conditions:

* output_feedback_budget: the saturation bounds can carry the scaled
  gradient pull plus worst-case filter damping plus gravity on the whole
  operating region (non-strict, componentwise, per agent).
* output_feedback_energy: initial kinetic plus link energy stays below the
  escape level psi(r) of a single link (strict).
* adaptive_budget: same idea for the adaptive law, with the sliding-signal
  damping and regressor feedforward replacing the filter terms (strict).
* adaptive_energy: initial sliding/parameter/link energy below psi(r)
  (strict).

plus a two-agent stopping-distance feasibility bound and a small gain
synthesis search built on top of the checks. Verdicts are pure functions of
their numeric inputs; every Certificate records those inputs for replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import ActuationLimits, AdaptiveGains, OutputFeedbackGains, neighbor_gradient_sum
from .dynamics import (
    DynamicBounds,
    RobotModel,
    forward_kinematics,
    mass_matrix,
    task_space_terms,
    task_velocity,
)
from .errors import InvalidGeometry, NotFound
from .graph import CommGraph, build_initial_graph
from .potential import PotentialSpec, psi, psi_at_r, sigma, nu

__all__ = [
    "Certificate",
    "check_output_feedback_budget",
    "check_output_feedback_energy",
    "check_adaptive_budget",
    "check_adaptive_energy",
    "check_two_agent_stopping",
    "check_all",
    "find_shape_constant",
    "synthesize_output_feedback_gains",
]


@dataclass(frozen=True)
class Certificate:
    """Outcome of one sufficient-condition evaluation.

    margin = rhs - lhs (componentwise where the condition is per agent and
    per component). verdict follows the condition's strictness: the
    actuation-budget condition for output feedback is non-strict (>= 0),
    everything else requires margin > 0.
    """

    condition_id: str
    lhs: np.ndarray
    rhs: np.ndarray
    verdict: bool
    margin: np.ndarray
    strict: bool
    inputs_digest: dict = field(default_factory=dict)

    def summary(self) -> str:
        flag = "PASS" if self.verdict else "FAIL"
        worst = float(np.min(self.margin))
        return f"{self.condition_id}: {flag} (worst margin {worst:.6g})"


def _finish(condition_id, lhs, rhs, strict, digest) -> Certificate:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    margin = rhs - lhs
    verdict = bool(np.all(margin > 0.0)) if strict else bool(np.all(margin >= 0.0))
    return Certificate(
        condition_id=condition_id,
        lhs=lhs,
        rhs=rhs,
        verdict=verdict,
        margin=margin,
        strict=strict,
        inputs_digest=digest,
    )


def _per_agent(value, n, kind):
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ValueError(f"expected {n} per-agent {kind}, got {len(value)}")
        return list(value)
    return [value] * n


# ---------------------------------------------------------------------------
# output feedback conditions
# ---------------------------------------------------------------------------

def check_output_feedback_budget(gains, graph: CommGraph, spec: PotentialSpec,
                                 bounds: DynamicBounds, limits) -> Certificate:
    """Actuation budget of the filtered position-feedback law.

    Per agent i and component k:

        2 |N_i| rho_i sigma r + sqrt(2 rho_i kappa_i psi(r)) + gamma_k
            <= f_bar_ik

    The first term bounds the gradient pull with every link stretched to the
    radius, the square root bounds the filter-damping term on the invariant
    region, and gamma covers gravity compensation.
    """
    n = graph.n_agents
    gains = _per_agent(gains, n, "gains")
    limits = _per_agent(limits, n, "limits")
    sig = sigma(spec)
    barrier = psi_at_r(spec)
    gamma = np.asarray(bounds.gamma, dtype=float)

    lhs = np.empty((n, 2))
    rhs = np.empty((n, 2))
    for i in range(n):
        deg = graph.degree(i)
        g = gains[i]
        pull = 2.0 * deg * g.rho * sig * spec.r
        damp = np.sqrt(2.0 * g.rho * g.kappa * barrier)
        lhs[i] = pull + damp + gamma
        rhs[i] = limits[i].vec
    digest = {
        "sigma": sig, "psi_at_r": barrier, "gamma": gamma.tolist(),
        "rho": [g.rho for g in gains], "kappa": [g.kappa for g in gains],
        "degrees": [graph.degree(i) for i in range(n)], "r": spec.r, "Q": spec.Q,
        "f_bar": [l.vec.tolist() for l in limits],
    }
    return _finish("output_feedback_budget", lhs, rhs, strict=False, digest=digest)


def check_output_feedback_energy(initial_states, models, gains, graph: CommGraph,
                                 spec: PotentialSpec) -> Certificate:
    """Initial-energy condition of the filtered law.

    (1/2) sum_i [ lam_i0 / rho_i * ||dq_i(0)||^2 + sum_j psi(d_ij(0)^2) ]
        < psi(r)

    with lam_i0 the largest eigenvalue of the joint inertia at q_i(0). Links
    are counted once per endpoint by the inner sum, which is what the
    leading 1/2 compensates for.
    """
    n = graph.n_agents
    models = _per_agent(models, n, "models")
    gains = _per_agent(gains, n, "gains")

    positions = [forward_kinematics(st.q, m) for st, m in zip(initial_states, models)]
    kinetic = 0.0
    for i in range(n):
        lam = float(np.max(np.linalg.eigvalsh(mass_matrix(initial_states[i].q, models[i]))))
        kinetic += lam / gains[i].rho * float(initial_states[i].dq @ initial_states[i].dq)
    link = 0.0
    for (i, j) in graph.edges:
        diff = positions[i] - positions[j]
        link += 2.0 * psi(float(diff @ diff), spec)  # once per endpoint
    lhs = 0.5 * (kinetic + link)
    rhs = psi_at_r(spec)
    digest = {
        "rho": [g.rho for g in gains], "Q": spec.Q, "r": spec.r,
        "edges": list(graph.edges),
        "dq0": [st.dq.tolist() for st in initial_states],
    }
    return _finish("output_feedback_energy", lhs, rhs, strict=True, digest=digest)


# ---------------------------------------------------------------------------
# adaptive conditions
# ---------------------------------------------------------------------------

def check_adaptive_budget(gains, graph: CommGraph, spec: PotentialSpec,
                          bounds: DynamicBounds, limits) -> Certificate:
    """Actuation budget of the adaptive law (strict).

    Per agent and component, with S = sqrt(2 alpha mu psi(r) / lambda1*)
    the sliding-signal ceiling on the invariant region:

        [ (2 nu lambda2* + c r sigma) alpha |N_i| + mu ] *
            [ S + alpha sigma r |N_i| ] + gamma_k + kappa S  <  f_bar_k
    """
    n = graph.n_agents
    gains = _per_agent(gains, n, "gains")
    limits = _per_agent(limits, n, "limits")
    sig = sigma(spec)
    nv = nu(spec)
    barrier = psi_at_r(spec)
    gamma = np.asarray(bounds.gamma, dtype=float)

    lhs = np.empty((n, 2))
    rhs = np.empty((n, 2))
    for i in range(n):
        g = gains[i]
        deg = graph.degree(i)
        s_max = np.sqrt(2.0 * g.alpha * g.mu * barrier / bounds.lambda1_star)
        mass_rate = (2.0 * nv * bounds.lambda2_star + bounds.c * spec.r * sig) * g.alpha * deg + g.mu
        reach = s_max + g.alpha * sig * spec.r * deg
        lhs[i] = mass_rate * reach + gamma + g.kappa * s_max
        rhs[i] = limits[i].vec
    digest = {
        "sigma": sig, "nu": nv, "psi_at_r": barrier,
        "lambda1_star": bounds.lambda1_star, "lambda2_star": bounds.lambda2_star,
        "c": bounds.c, "gamma": gamma.tolist(),
        "alpha": [g.alpha for g in gains], "mu": [g.mu for g in gains],
        "kappa": [g.kappa for g in gains],
        "degrees": [graph.degree(i) for i in range(n)],
        "f_bar": [l.vec.tolist() for l in limits], "Q": spec.Q, "r": spec.r,
    }
    return _finish("adaptive_budget", lhs, rhs, strict=True, digest=digest)


def check_adaptive_energy(initial_states, models, gains, graph: CommGraph,
                          spec: PotentialSpec) -> Certificate:
    """Initial-energy condition of the adaptive law (strict).

    (1/2) sum_i (1 / (alpha mu_i)) [ lam*_i0 ||s_i(0)||^2
        + ||theta_hi - theta_lo||^2 / beta_i ] + sum_edges psi(d(0)^2)
        < psi(r)

    with lam*_i0 the largest task-inertia eigenvalue at q_i(0) and
    s_i(0) = dx_i(0) + alpha e_i(0). Raises SingularConfiguration when an
    initial configuration has no meaningful task-space inertia.
    """
    n = graph.n_agents
    models = _per_agent(models, n, "models")
    gains = _per_agent(gains, n, "gains")

    positions = [forward_kinematics(st.q, m) for st, m in zip(initial_states, models)]
    velocities = [task_velocity(st.q, st.dq, m) for st, m in zip(initial_states, models)]

    total = 0.0
    for i in range(n):
        g = gains[i]
        M_star, _, _ = task_space_terms(initial_states[i].q, initial_states[i].dq, models[i])
        lam = float(np.max(np.linalg.eigvalsh(M_star)))
        neigh = graph.neighbors(i)
        e0 = neighbor_gradient_sum(positions[i], [positions[j] for j in neigh], spec)
        s0 = velocities[i] + g.alpha * e0
        lo, hi = g.box
        dtheta = hi - lo
        total += (lam * float(s0 @ s0) + float(dtheta @ dtheta) / g.beta) / (g.alpha * g.mu)
    link = sum(
        psi(float((positions[i] - positions[j]) @ (positions[i] - positions[j])), spec)
        for (i, j) in graph.edges
    )
    lhs = 0.5 * total + link
    rhs = psi_at_r(spec)
    digest = {
        "alpha": [g.alpha for g in gains], "mu": [g.mu for g in gains],
        "beta": [g.beta for g in gains],
        "dtheta_norm": [float(np.linalg.norm(np.subtract(g.theta_hi, g.theta_lo))) for g in gains],
        "Q": spec.Q, "r": spec.r, "edges": list(graph.edges),
    }
    return _finish("adaptive_energy", lhs, rhs, strict=True, digest=digest)


# ---------------------------------------------------------------------------
# two-agent feasibility
# ---------------------------------------------------------------------------

def check_two_agent_stopping(v1: float, v2: float, d0: float, r: float,
                             f_bar1: float, f_bar2: float) -> Certificate:
    """Can two unit-mass agents stop their separation before it reaches r?

    Worst case: both initial speeds point along the separation line and both
    agents brake at full force, a bang-bang double integrator on the
    relative coordinate. Feasible iff

        (v1 + v2)^2 < 2 (r - d0) (f_bar1 + f_bar2)
    """
    if d0 >= r:
        raise InvalidGeometry(f"initial distance {d0} already at or past the radius {r}")
    lhs = (v1 + v2) ** 2
    rhs = 2.0 * (r - d0) * (f_bar1 + f_bar2)
    digest = {"v1": v1, "v2": v2, "d0": d0, "r": r, "f_bar1": f_bar1, "f_bar2": f_bar2}
    return _finish("two_agent_stopping", lhs, rhs, strict=True, digest=digest)


# ---------------------------------------------------------------------------
# assemblies and search
# ---------------------------------------------------------------------------

def check_all(controller_kind: str, initial_states, models, gains, graph,
              spec, bounds, limits) -> list:
    """All certificates applicable to one controller configuration."""
    if controller_kind == "output_feedback":
        return [
            check_output_feedback_budget(gains, graph, spec, bounds, limits),
            check_output_feedback_energy(initial_states, models, gains, graph, spec),
        ]
    if controller_kind == "adaptive":
        return [
            check_adaptive_budget(gains, graph, spec, bounds, limits),
            check_adaptive_energy(initial_states, models, gains, graph, spec),
        ]
    raise ValueError(f"unknown controller kind {controller_kind!r}")


def find_shape_constant(d0: float, r: float, n_links: int, start=None) -> float:
    """Find Q with n_links * psi(d0^2) < psi(r), halving from `start`.

    Exists for every d0 < r because psi(r) = r^2/Q grows without bound as
    Q shrinks while psi(d0^2) stays finite. Returns the first (largest)
    power-of-two fraction of the start that works.
    """
    if not (0.0 <= d0 < r):
        raise InvalidGeometry(f"need 0 <= d0 < r, got d0={d0}, r={r}")
    Q = float(start) if start is not None else r * r
    for _ in range(200):
        spec = PotentialSpec(r=r, Q=Q)
        if n_links * psi(d0 * d0, spec) < psi_at_r(spec):
            return Q
        Q *= 0.5
    raise NotFound("no shape constant found after 200 halvings")


def _rho_budget_ceiling(deg, kappa, spec, gamma, f_bar, rho_max=1e6):
    """Largest rho satisfying the output-feedback budget for one agent."""
    sig = sigma(spec)
    barrier = psi_at_r(spec)

    def slack(rho):
        lhs = 2.0 * deg * rho * sig * spec.r + np.sqrt(2.0 * rho * kappa * barrier) + gamma
        return float(np.min(f_bar - lhs))

    if slack(0.0) < 0.0:
        return None  # gravity alone exceeds the budget
    lo, hi = 0.0, 1.0
    while slack(hi) >= 0.0:
        hi *= 2.0
        if hi > rho_max:
            return rho_max
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slack(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def synthesize_output_feedback_gains(
    initial_states,
    models,
    graph: CommGraph,
    spec: PotentialSpec,
    limits,
    bounds: DynamicBounds,
    zeta: float = 20.0,
    kappa: float = 10.0,
    current_rho=None,
    q_grid=None,
    kappa_grid=None,
    safety: float = 0.9,
):
    """Search for gains with both output-feedback certificates true.

    Tries the given (Q, kappa) first and falls back to small grids. rho is
    chosen per agent by bisection to the budget ceiling, backed off by
    `safety` so the certified margin is strictly positive. If `current_rho`
    is supplied and already certified with the given spec, it is returned
    unchanged (idempotence). Returns (gains list, spec, certificates).

    Raises NotFound when gravity alone exceeds a limit or when no grid point
    certifies.
    """
    n = graph.n_agents
    models = _per_agent(models, n, "models")
    limits = _per_agent(limits, n, "limits")
    gamma = np.asarray(bounds.gamma, dtype=float)
    for lim in limits:
        if np.any(gamma >= lim.vec):
            raise NotFound(
                f"gravity bound {gamma} exceeds an actuation limit {lim.vec}; "
                "no gain choice can help"
            )

    def certify(cand_gains, cand_spec):
        certs = [
            check_output_feedback_budget(cand_gains, graph, cand_spec, bounds, limits),
            check_output_feedback_energy(initial_states, models, cand_gains, graph, cand_spec),
        ]
        return certs if all(c.verdict for c in certs) else None

    if current_rho is not None:
        cand = [OutputFeedbackGains(rho=r_, kappa=kappa, zeta=zeta) for r_ in _per_agent(current_rho, n, "rho")]
        certs = certify(cand, spec)
        if certs is not None:
            return cand, spec, certs

    q_candidates = list(q_grid) if q_grid is not None else [spec.Q, spec.Q / 2, spec.Q / 4, 2 * spec.Q]
    kappa_candidates = list(kappa_grid) if kappa_grid is not None else [kappa, 1.0, 10.0, 100.0]

    for Q in q_candidates:
        cand_spec = PotentialSpec(r=spec.r, Q=float(Q))
        for kap in kappa_candidates:
            rho_list = []
            ok = True
            for i in range(n):
                ceiling = _rho_budget_ceiling(
                    graph.degree(i), kap, cand_spec, gamma, limits[i].vec
                )
                if ceiling is None or ceiling * safety <= 0.0:
                    ok = False
                    break
                rho_list.append(ceiling * safety)
            if not ok:
                continue
            cand = [OutputFeedbackGains(rho=r_, kappa=kap, zeta=zeta) for r_ in rho_list]
            certs = certify(cand, cand_spec)
            if certs is not None:
                return cand, cand_spec, certs
    raise NotFound("no certified (Q, rho, kappa) found in the search grid")
