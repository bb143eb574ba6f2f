"""Closed-loop simulation of the coordinating manipulator network.

A Scenario bundles everything a run needs: robot models, initial joint
states, one controller configuration per robot, the potential shape, the
communication radius margin, actuation limits and integration settings.
run() integrates the stacked network ODE with fixed-step RK4 until the
horizon or the first terminal event (a communication link reaching the
radius, or a robot hitting a kinematic singularity) and returns a
TrajectoryLog with the sampled time series, the event list and the
Lyapunov column.

Time stepping happens in the compiled kernels of _kernels.py; this module
owns scenario validation, state packing, log assembly and serialization.
The Lyapunov column is evaluated after the fact from logged states, which
keeps the hot loop small and makes the published V reproducible from the
CSV alone. Rows where V is undefined (an edge at or past the radius, or a
singular configuration in the adaptive case) carry NaN.

Convergence is declared when the largest pairwise end-effector distance
stays below CONVERGED_TOL for CONVERGED_HOLD seconds of simulated time;
both constants are artifact choices, documented here because the source
material gives no numeric threshold.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .control import ActuationLimits, AdaptiveGains, OutputFeedbackGains
from .dynamics import SINGULARITY_TOL, RobotModel, mass_matrix, min_singular_value
from .errors import OutOfDomain, SingularConfiguration
from .graph import CommGraph, build_initial_graph
from .potential import PotentialSpec, psi

CONVERGED_TOL = 0.05
CONVERGED_HOLD = 1.0

OUTPUT_FEEDBACK = "output_feedback"
ADAPTIVE = "adaptive"

_STATUS_NAMES = {
    _kernels.STATUS_DONE: "completed",
    _kernels.STATUS_LINK_BREAK: "link_break",
    _kernels.STATUS_SINGULAR: "singularity",
}


# ---------------------------------------------------------------------------
# scenario and state containers
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Scenario:
    """Complete description of one closed-loop experiment.

    controller selects the law: "output_feedback" robots carry
    OutputFeedbackGains in of_gains, "adaptive" robots carry AdaptiveGains
    in ad_gains plus an initial parameter guess theta0 inside the gain box.
    """

    models: tuple
    q0: np.ndarray
    dq0: np.ndarray
    controller: str
    spec: PotentialSpec
    limits: tuple
    of_gains: tuple = None
    ad_gains: tuple = None
    theta0: np.ndarray = None
    eps: float = 0.05
    dt: float = 1e-3
    t_end: float = 20.0
    log_stride: int = 1
    seed: int = 0
    name: str = "scenario"
    out_csv: str = None
    out_events: str = None

    def __post_init__(self):
        self.models = tuple(self.models)
        n = len(self.models)
        if n < 1:
            raise ValueError("scenario needs at least one robot")
        for m in self.models:
            if not isinstance(m, RobotModel):
                raise TypeError("models must be RobotModel instances")
        self.q0 = np.ascontiguousarray(self.q0, dtype=float)
        self.dq0 = np.ascontiguousarray(self.dq0, dtype=float)
        if self.q0.shape != (n, 2) or self.dq0.shape != (n, 2):
            raise ValueError("q0 and dq0 must have shape (n_robots, 2)")
        if self.controller not in (OUTPUT_FEEDBACK, ADAPTIVE):
            raise ValueError(f"unknown controller {self.controller!r}")
        if not isinstance(self.spec, PotentialSpec):
            raise TypeError("spec must be a PotentialSpec")
        self.limits = tuple(self.limits)
        if len(self.limits) != n:
            raise ValueError("one ActuationLimits per robot required")
        for lim in self.limits:
            if not isinstance(lim, ActuationLimits):
                raise TypeError("limits must be ActuationLimits instances")
        if self.controller == OUTPUT_FEEDBACK:
            if self.of_gains is None:
                raise ValueError("output_feedback scenario needs of_gains")
            self.of_gains = tuple(self.of_gains)
            if len(self.of_gains) != n:
                raise ValueError("one OutputFeedbackGains per robot required")
            for g in self.of_gains:
                if not isinstance(g, OutputFeedbackGains):
                    raise TypeError("of_gains must be OutputFeedbackGains")
        else:
            if self.ad_gains is None or self.theta0 is None:
                raise ValueError("adaptive scenario needs ad_gains and theta0")
            self.ad_gains = tuple(self.ad_gains)
            if len(self.ad_gains) != n:
                raise ValueError("one AdaptiveGains per robot required")
            for g in self.ad_gains:
                if not isinstance(g, AdaptiveGains):
                    raise TypeError("ad_gains must be AdaptiveGains")
            self.theta0 = np.ascontiguousarray(self.theta0, dtype=float)
            if self.theta0.shape != (n, 2):
                raise ValueError("theta0 must have shape (n_robots, 2)")
            for i, g in enumerate(self.ad_gains):
                lo, hi = g.box
                if np.any(self.theta0[i] < lo) or np.any(self.theta0[i] > hi):
                    raise ValueError(
                        f"theta0 of robot {i} lies outside its parameter box")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if not (0.0 < self.eps < self.spec.r):
            raise ValueError("eps must lie in (0, r)")
        self.log_stride = int(self.log_stride)
        if self.log_stride < 1:
            raise ValueError("log_stride must be a positive integer")
        for attr in ("out_csv", "out_events"):
            val = getattr(self, attr)
            if val is not None and not isinstance(val, str):
                raise ValueError(f"{attr} must be a string path when set")

    @property
    def n_robots(self):
        return len(self.models)

    def initial_positions(self):
        """End-effector positions at t=0, shape (n_robots, 2)."""
        return _forward_positions(self.q0, _lengths(self.models))

    def build_graph(self):
        """Construct the fixed communication graph from the initial state."""
        return build_initial_graph(self.initial_positions(), self.spec.r, self.eps)


@dataclass
class NetworkState:
    """Instantaneous network state: joints, joint rates and the per-robot
    auxiliary pair (filter state or parameter estimate)."""

    q: np.ndarray
    dq: np.ndarray
    aux: np.ndarray
    t: float = 0.0

    def pack(self):
        return np.concatenate([
            np.asarray(self.q, dtype=float).ravel(),
            np.asarray(self.dq, dtype=float).ravel(),
            np.asarray(self.aux, dtype=float).ravel(),
        ])

    @staticmethod
    def unpack(y, n_robots, t=0.0):
        two_n = 2 * n_robots
        return NetworkState(
            q=y[:two_n].reshape(n_robots, 2).copy(),
            dq=y[two_n:2 * two_n].reshape(n_robots, 2).copy(),
            aux=y[2 * two_n:].reshape(n_robots, 2).copy(),
            t=t,
        )


@dataclass
class SimEvent:
    """Timestamped discrete event raised during a run."""

    kind: str
    t: float
    agent: int = None
    edge: tuple = None

    LINK_BREAK = "link_break"
    SINGULARITY = "singularity"
    BASE_SATURATED = "base_saturated"
    CONVERGED = "converged"

    def to_dict(self):
        return {
            "kind": self.kind,
            "t": self.t,
            "agent": self.agent,
            "edge": list(self.edge) if self.edge is not None else None,
        }


@dataclass(eq=False)
class TrajectoryLog:
    """Sampled closed-loop history of one run.

    Arrays are indexed [row, robot, component] except t (row,), d (row,
    edge) and V (row,). aux holds the filter state for output feedback and
    the parameter estimate for adaptive runs. sat flags mark wrench
    components whose unsaturated command exceeded the limit. V is NaN on
    rows where the potential or the task-space metric is undefined.
    """

    scenario: Scenario
    graph: CommGraph
    t: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    wrench: np.ndarray
    sat: np.ndarray
    aux: np.ndarray
    d: np.ndarray
    V: np.ndarray
    events: list = field(default_factory=list)
    status: str = "completed"
    converged_t: float = None
    theta_clamp_count: int = 0

    @property
    def n_rows(self):
        return self.t.shape[0]

    @property
    def t_final(self):
        return float(self.t[-1]) if self.n_rows else 0.0

    def final_coordination_error(self):
        if self.n_rows:
            return coordination_error(self.x[-1])
        return coordination_error(self.scenario.initial_positions())

    def v_violation_count(self, slack=1e-6):
        """Number of logged steps where V rose by more than `slack`.

        NaN rows never count: comparisons against NaN are false, and an
        undefined V carries no monotonicity claim.
        """
        if self.n_rows < 2:
            return 0
        diff = self.V[1:] - self.V[:-1]
        with np.errstate(invalid="ignore"):
            return int(np.sum(diff > slack))

    def column_names(self):
        cols = ["t"]
        for i in range(self.scenario.n_robots):
            cols += [f"{base}_{i}" for base in
                     ("q1", "q2", "dq1", "dq2", "x1", "x2",
                      "f1", "f2", "sat1", "sat2")]
        for (i, j) in self.graph.edges:
            cols.append(f"d_{i}_{j}")
        cols.append("V")
        return cols

    def to_csv(self, path):
        """Write the log as CSV (atomically: temp file, then rename).

        One row per sample; floats at 12 significant digits, saturation
        flags as 0/1. A zero-length log yields a valid header-only file.
        """
        header = ",".join(self.column_names())
        n = self.scenario.n_robots
        blocks = [self.t[:, None]]
        for i in range(n):
            blocks += [self.q[:, i, :], self.dq[:, i, :], self.x[:, i, :],
                       self.wrench[:, i, :], self.sat[:, i, :].astype(float)]
        blocks += [self.d, self.V[:, None]]
        data = np.hstack(blocks) if self.n_rows else np.empty((0, len(self.column_names())))
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write(header + "\n")
            for row in data:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(tmp, path)

    def events_payload(self):
        """JSON-ready events document (see events_schema.json)."""
        return {
            "schema_version": 1,
            "scenario": self.scenario.name,
            "controller": self.scenario.controller,
            "seed": self.scenario.seed,
            "status": self.status,
            "events": [ev.to_dict() for ev in sorted(self.events, key=lambda e: e.t)],
            "final": {
                "t": self.t_final,
                "coordination_error": float(self.final_coordination_error()),
                "v_violations": self.v_violation_count(),
                "theta_clamp_count": int(self.theta_clamp_count),
            },
        }

    def write_events(self, path):
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(self.events_payload(), fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)


def _fmt(v):
    if v != v:  # NaN
        return "nan"
    return f"{v:.12g}"


# ---------------------------------------------------------------------------
# kinematic helpers shared by packing and log assembly
# ---------------------------------------------------------------------------

def _lengths(models):
    l1 = np.array([m.l1 for m in models])
    l2 = np.array([m.l2 for m in models])
    return l1, l2


def _forward_positions(q, lengths):
    """Vectorized tip positions; q has shape (..., n, 2)."""
    l1, l2 = lengths
    q1 = q[..., 0]
    q12 = q[..., 0] + q[..., 1]
    return np.stack([l1 * np.cos(q1) + l2 * np.cos(q12),
                     l1 * np.sin(q1) + l2 * np.sin(q12)], axis=-1)


def _forward_velocities(q, dq, lengths):
    """Vectorized tip velocities J(q) dq; shapes as _forward_positions."""
    l1, l2 = lengths
    q1 = q[..., 0]
    q12 = q[..., 0] + q[..., 1]
    dq1 = dq[..., 0]
    dq2 = dq[..., 1]
    vx = (-l1 * np.sin(q1) - l2 * np.sin(q12)) * dq1 + (-l2 * np.sin(q12)) * dq2
    vy = (l1 * np.cos(q1) + l2 * np.cos(q12)) * dq1 + (l2 * np.cos(q12)) * dq2
    return np.stack([vx, vy], axis=-1)


def coordination_error(positions):
    """Largest pairwise end-effector distance, the rendezvous metric."""
    pts = np.asarray(positions, dtype=float)
    n = pts.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            best = max(best, float(np.hypot(*(pts[i] - pts[j]))))
    return best


# ---------------------------------------------------------------------------
# Lyapunov evaluation
# ---------------------------------------------------------------------------

def lyapunov_value(state, scenario, graph=None):
    """Network Lyapunov function at one state.

    Output feedback: V = 1/2 sum_i [ (dq' M dq + kappa ||xhat_dot||^2)/rho ]
    plus the potential sum over edges, with xhat_dot = -zeta xhat + x.
    Adaptive: V = 1/2 sum_i [ (s' M* s + ||theta - theta_hat||^2 / beta)
    / (alpha mu) ] plus the same potential sum, with s = xdot + alpha e.

    Raises OutOfDomain if any edge distance exceeds the radius; raises
    SingularConfiguration if the adaptive form needs an inverse Jacobian at
    a singular configuration.
    """
    if graph is None:
        graph = scenario.build_graph()
    lengths = _lengths(scenario.models)
    x = _forward_positions(state.q, lengths)
    value = _edge_potential_sum(x, graph, scenario.spec)
    if scenario.controller == OUTPUT_FEEDBACK:
        for i, model in enumerate(scenario.models):
            M = mass_matrix(state.q[i], model)
            g = scenario.of_gains[i]
            xh_dot = -g.zeta * state.aux[i] + x[i]
            value += 0.5 / g.rho * (
                state.dq[i] @ M @ state.dq[i] + g.kappa * (xh_dot @ xh_dot))
    else:
        dx = _forward_velocities(state.q, state.dq, lengths)
        e = _gradient_sums(x, graph, scenario.spec)
        for i, model in enumerate(scenario.models):
            if min_singular_value(state.q[i], model) <= SINGULARITY_TOL:
                raise SingularConfiguration(
                    f"robot {i} too close to a kinematic singularity for "
                    "the task-space metric")
            g = scenario.ad_gains[i]
            s = dx[i] + g.alpha * e[i]
            # s' M* s == (J^-1 s)' M (J^-1 s); avoids forming M* explicitly
            u = _jac_solve(state.q[i], s, model)
            M = mass_matrix(state.q[i], model)
            theta_err = model.theta - state.aux[i]
            value += 0.5 / (g.alpha * g.mu) * (
                u @ M @ u + (theta_err @ theta_err) / g.beta)
    return float(value)


def _edge_potential_sum(x, graph, spec):
    total = 0.0
    r2 = spec.r * spec.r
    for (i, j) in graph.edges:
        s = float(np.sum((x[i] - x[j]) ** 2))
        if s > r2 * (1.0 + 1e-12):
            raise OutOfDomain(
                f"edge ({i}, {j}) at distance {np.sqrt(s):.6g} exceeds the "
                f"radius {spec.r:.6g}")
        total += psi(min(s, r2), spec)
    return total


def _gradient_sums(x, graph, spec):
    from .potential import grad_i

    e = np.zeros_like(x)
    for (i, j) in graph.edges:
        g = grad_i(x[i], x[j], spec)
        e[i] += g
        e[j] -= g
    return e


def _jac_solve(q, v, model):
    """J(q)^{-1} v via the closed-form 2x2 inverse."""
    l1, l2 = model.l1, model.l2
    s1 = np.sin(q[0])
    c1 = np.cos(q[0])
    s12 = np.sin(q[0] + q[1])
    c12 = np.cos(q[0] + q[1])
    J11 = -l1 * s1 - l2 * s12
    J12 = -l2 * s12
    J21 = l1 * c1 + l2 * c12
    J22 = l2 * c12
    det = J11 * J22 - J12 * J21
    return np.array([(J22 * v[0] - J12 * v[1]) / det,
                     (-J21 * v[0] + J11 * v[1]) / det])


def _lyapunov_series(log_q, log_dq, log_aux, log_x, log_d, scenario, graph):
    """V per logged row; NaN where undefined instead of raising."""
    L = log_q.shape[0]
    V = np.full(L, np.nan)
    r = scenario.spec.r
    state = NetworkState(q=None, dq=None, aux=None)
    for k in range(L):
        if np.any(log_d[k] >= r):
            continue
        state.q = log_q[k]
        state.dq = log_dq[k]
        state.aux = log_aux[k]
        try:
            V[k] = lyapunov_value(state, scenario, graph)
        except (OutOfDomain, SingularConfiguration):
            continue
    return V


# ---------------------------------------------------------------------------
# packing and drivers
# ---------------------------------------------------------------------------

def _phys_array(models):
    return np.array([[m.m1, m.m2, m.l1, m.l2, m.grav] for m in models])


def _initial_aux(scenario, x0):
    if scenario.controller == OUTPUT_FEEDBACK:
        zeta = np.array([g.zeta for g in scenario.of_gains])
        return x0 / zeta[:, None]
    return scenario.theta0.copy()


def _initial_packed(scenario):
    x0 = scenario.initial_positions()
    aux0 = _initial_aux(scenario, x0)
    return np.concatenate([scenario.q0.ravel(), scenario.dq0.ravel(),
                           aux0.ravel()])


def _edge_arrays(graph):
    if graph.edges:
        ei = np.array([e[0] for e in graph.edges], dtype=np.int64)
        ej = np.array([e[1] for e in graph.edges], dtype=np.int64)
    else:
        ei = np.empty(0, dtype=np.int64)
        ej = np.empty(0, dtype=np.int64)
    return ei, ej


def _fbar_array(limits):
    return np.array([lim.vec for lim in limits])


def _drive(scenario, y0, graph, n_steps, stride):
    """Dispatch to the compiled driver; returns the raw kernel outputs."""
    n = scenario.n_robots
    phys = _phys_array(scenario.models)
    ei, ej = _edge_arrays(graph)
    fbar = _fbar_array(scenario.limits)
    r = scenario.spec.r
    Q = scenario.spec.Q
    dt = scenario.dt
    conv_hold = max(1, int(round(CONVERGED_HOLD / dt)))

    n_rows = (len(range(0, n_steps, stride)) + 1) if n_steps > 0 else 0
    log_t = np.empty(n_rows)
    log_y = np.empty((n_rows, 6 * n))
    log_f = np.empty((n_rows, n, 2))
    log_sat = np.empty((n_rows, n, 2))
    log_d = np.empty((n_rows, max(1, ei.shape[0])))[:, :ei.shape[0]]

    if scenario.controller == OUTPUT_FEEDBACK:
        rho = np.array([g.rho for g in scenario.of_gains])
        kap = np.array([g.kappa for g in scenario.of_gains])
        zet = np.array([g.zeta for g in scenario.of_gains])
        out = _kernels.drive_of(
            y0, phys, ei, ej, rho, kap, zet, fbar, r, Q, dt, n_steps, stride,
            SINGULARITY_TOL, CONVERGED_TOL, conv_hold,
            log_t, log_y, log_f, log_sat, log_d)
        status, ev_step, ev_index, n_logged, conv_step, y_final = out
        extra = (-1, -1, 0)
    else:
        kap = np.array([g.kappa for g in scenario.ad_gains])
        mu = np.array([g.mu for g in scenario.ad_gains])
        beta = np.array([g.beta for g in scenario.ad_gains])
        alpha = np.array([g.alpha for g in scenario.ad_gains])
        delta = np.array([g.delta for g in scenario.ad_gains])
        lo = np.array([g.theta_lo for g in scenario.ad_gains])
        hi = np.array([g.theta_hi for g in scenario.ad_gains])
        out = _kernels.drive_ad(
            y0, phys, ei, ej, kap, mu, beta, alpha, delta, lo, hi, fbar, r, Q,
            dt, n_steps, stride, SINGULARITY_TOL, CONVERGED_TOL, conv_hold,
            log_t, log_y, log_f, log_sat, log_d)
        (status, ev_step, ev_index, n_logged, conv_step,
         bs_step, bs_agent, clamp_count, y_final) = out
        extra = (bs_step, bs_agent, clamp_count)

    logs = (log_t[:n_logged], log_y[:n_logged], log_f[:n_logged],
            log_sat[:n_logged], log_d[:n_logged])
    return status, ev_step, ev_index, conv_step, extra, logs, y_final


def run(scenario):
    """Integrate a scenario to its horizon or first terminal event.

    Raises DisconnectedInitialGraph if the initial configuration does not
    admit a connected communication graph, and SingularConfiguration if a
    robot starts at (or numerically at) a kinematic singularity.
    """
    graph = scenario.build_graph()
    for i, model in enumerate(scenario.models):
        if min_singular_value(scenario.q0[i], model) <= SINGULARITY_TOL:
            raise SingularConfiguration(
                f"robot {i} starts too close to a kinematic singularity")

    n_steps = int(round(scenario.t_end / scenario.dt))
    y0 = _initial_packed(scenario)
    status, ev_step, ev_index, conv_step, extra, logs, _ = _drive(
        scenario, y0, graph, n_steps, scenario.log_stride)
    log_t, log_y, log_f, log_sat, log_d = logs

    n = scenario.n_robots
    two_n = 2 * n
    L = log_t.shape[0]
    q = log_y[:, :two_n].reshape(L, n, 2)
    dq = log_y[:, two_n:2 * two_n].reshape(L, n, 2)
    aux = log_y[:, 2 * two_n:].reshape(L, n, 2)
    lengths = _lengths(scenario.models)
    x = _forward_positions(q, lengths)
    dx = _forward_velocities(q, dq, lengths)
    V = _lyapunov_series(q, dq, aux, x, log_d, scenario, graph)

    events = []
    dt = scenario.dt
    if status == _kernels.STATUS_LINK_BREAK:
        events.append(SimEvent(SimEvent.LINK_BREAK, t=ev_step * dt,
                               edge=graph.edges[ev_index]))
    elif status == _kernels.STATUS_SINGULAR:
        events.append(SimEvent(SimEvent.SINGULARITY, t=ev_step * dt,
                               agent=int(ev_index)))
    converged_t = None
    if conv_step >= 0:
        converged_t = conv_step * dt
        events.append(SimEvent(SimEvent.CONVERGED, t=converged_t))
    bs_step, bs_agent, clamp_count = extra
    if bs_step >= 0:
        events.append(SimEvent(SimEvent.BASE_SATURATED, t=bs_step * dt,
                               agent=int(bs_agent)))

    return TrajectoryLog(
        scenario=scenario, graph=graph,
        t=log_t, q=q, dq=dq, x=x, dx=dx,
        wrench=log_f, sat=log_sat > 0.5, aux=aux, d=log_d, V=V,
        events=events, status=_STATUS_NAMES[status],
        converged_t=converged_t, theta_clamp_count=int(clamp_count),
    )


def step(state, scenario, graph=None):
    """Advance one RK4 step from `state`; returns the next NetworkState.

    Raises SingularConfiguration if the step lands on (or crosses) a
    kinematic singularity. A link reaching the radius does not raise; the
    caller can inspect distances, mirroring run()'s event-not-error view.
    """
    if graph is None:
        graph = scenario.build_graph()
    y0 = state.pack()
    status, _, ev_index, _, _, _, y_final = _drive(
        scenario, y0, graph, n_steps=1, stride=2)
    if status == _kernels.STATUS_SINGULAR:
        raise SingularConfiguration(
            f"robot {ev_index} crossed a kinematic singularity")
    return NetworkState.unpack(y_final, scenario.n_robots, t=state.t + scenario.dt)


def initial_state(scenario):
    """NetworkState at t=0, with the filter state seeded so its derivative
    starts at zero (output feedback) or theta_hat at its initial guess."""
    x0 = scenario.initial_positions()
    return NetworkState(q=scenario.q0.copy(), dq=scenario.dq0.copy(),
                        aux=_initial_aux(scenario, x0), t=0.0)


# ---------------------------------------------------------------------------
# batch execution
# ---------------------------------------------------------------------------

def _worker(scenario):
    return run(scenario)


def max_workers_from_env(n_jobs):
    """Worker count for run_many: COORD_SIM_THREADS caps it when set."""
    workers = min(n_jobs, os.cpu_count() or 1)
    cap = os.environ.get("COORD_SIM_THREADS")
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError:
            raise ValueError(
                f"COORD_SIM_THREADS must be an integer, got {cap!r}")
        if cap_val < 1:
            raise ValueError("COORD_SIM_THREADS must be >= 1")
        workers = min(workers, cap_val)
    return max(1, workers)


def run_many(scenarios):
    """Run scenarios in parallel worker processes, preserving order.

    Results are identical to [run(s) for s in scenarios]; the environment
    variable COORD_SIM_THREADS caps the process count.
    """
    scenarios = list(scenarios)
    if not scenarios:
        return []
    workers = max_workers_from_env(len(scenarios))
    if workers == 1 or len(scenarios) == 1:
        return [run(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, scenarios))
