"""Scenario files: a small TOML dialect describing one experiment.

A file has sections [robots], [network], [potential], [controller],
[limits], [sim] and optionally [bounds]. Scalars broadcast across robots
wherever a per-robot list would be repetitive, so the common case (five
identical arms) stays readable:

    name = "five_robot_filtered"

    [robots]
    count = 5
    m1 = 0.5
    m2 = 0.5
    l1 = 1.0
    l2 = 1.0
    grav = 0.0
    q0 = [[1.0, 1.2], [0.4, 1.9], ...]    # radians, one pair per robot
    dq0 = [[0.0, 0.0], ...]

    [network]
    r = 1.0
    eps = 0.25

    [potential]
    Q = 1.0

    [controller]
    type = "output_feedback"               # or "adaptive"
    rho = [2.743, 1.583, 1.125, 1.583, 1.583]
    kappa = 10.0
    zeta = 20.0

    [limits]
    f_bar = 20.0                           # scalar, pair, or per-robot pairs

    [sim]
    dt = 0.001
    t_end = 40.0
    log_stride = 10
    seed = 0

    [bounds]                               # optional: certification region
    region = [0.5235987755982988, 2.6179938779914944]
    samples = 2048
    margin = 0.05

Adaptive controllers replace the gain keys with kappa, mu, beta, alpha,
delta plus the parameter box (theta_lo, theta_hi) and the initial guess
theta_hat0 (a pair, broadcast, or one pair per robot).

load_scenario returns the Scenario plus a BoundsRequest carrying the
region/sample configuration certificates should use; save_scenario writes
a file that loads back to an equivalent pair.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .control import ActuationLimits, AdaptiveGains, OutputFeedbackGains
from .dynamics import RobotModel
from .errors import ParseError
from .potential import PotentialSpec
from .sim import ADAPTIVE, OUTPUT_FEEDBACK, Scenario

DEFAULT_REGION = (math.pi / 6.0, 5.0 * math.pi / 6.0)
DEFAULT_SAMPLES = 2048
DEFAULT_MARGIN = 0.05


@dataclass(frozen=True)
class BoundsRequest:
    """Sampling configuration for certifying a scenario's gains."""

    region: tuple = DEFAULT_REGION
    samples: int = DEFAULT_SAMPLES
    margin: float = DEFAULT_MARGIN


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------

def _section(doc, name, path):
    try:
        sec = doc[name]
    except KeyError:
        raise ParseError(f"{path}: missing [{name}] section") from None
    if not isinstance(sec, dict):
        raise ParseError(f"{path}: [{name}] must be a table")
    return sec


def _get(sec, section, key, path, default=None, required=False):
    if key in sec:
        return sec[key]
    if required:
        raise ParseError(f"{path}: [{section}] is missing required key {key!r}")
    return default


def _as_float(value, section, key, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{path}: [{section}] {key} must be a number, "
                         f"got {value!r}")
    return float(value)


def _as_int(value, section, key, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{path}: [{section}] {key} must be an integer, "
                         f"got {value!r}")
    return int(value)


def _per_robot_floats(value, n, section, key, path):
    """Scalar broadcast or an n-list of numbers."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)] * n
    if isinstance(value, list):
        if len(value) != n:
            raise ParseError(f"{path}: [{section}] {key} needs {n} entries, "
                             f"got {len(value)}")
        return [_as_float(v, section, key, path) for v in value]
    raise ParseError(f"{path}: [{section}] {key} must be a number or a list "
                     f"of {n} numbers")


def _pair(value, section, key, path):
    if (not isinstance(value, list) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in value)):
        raise ParseError(f"{path}: [{section}] {key} must be a pair of numbers")
    return [float(value[0]), float(value[1])]


def _per_robot_pairs(value, n, section, key, path):
    """A single pair broadcast, or an n-list of pairs."""
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value)):
        return [[float(value[0]), float(value[1])]] * n
    if isinstance(value, list):
        if len(value) != n:
            raise ParseError(f"{path}: [{section}] {key} needs {n} pairs, "
                             f"got {len(value)}")
        return [_pair(v, section, key, path) for v in value]
    raise ParseError(f"{path}: [{section}] {key} must be a pair or a list of "
                     f"{n} pairs")


def _limits_array(value, n, path):
    """f_bar: scalar, a component pair, or one pair per robot."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [[float(value), float(value)]] * n
    return _per_robot_pairs(value, n, "limits", "f_bar", path)


def load_scenario(path):
    """Parse a scenario file. Returns (Scenario, BoundsRequest)."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: cannot read scenario file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: invalid TOML: {exc}") from exc

    name = doc.get("name")
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    elif not isinstance(name, str):
        raise ParseError(f"{path}: top-level name must be a string")

    robots = _section(doc, "robots", path)
    n = _as_int(_get(robots, "robots", "count", path, required=True),
                "robots", "count", path)
    if n < 1:
        raise ParseError(f"{path}: [robots] count must be >= 1")
    m1 = _per_robot_floats(_get(robots, "robots", "m1", path, required=True),
                           n, "robots", "m1", path)
    m2 = _per_robot_floats(_get(robots, "robots", "m2", path, required=True),
                           n, "robots", "m2", path)
    l1 = _per_robot_floats(_get(robots, "robots", "l1", path, required=True),
                           n, "robots", "l1", path)
    l2 = _per_robot_floats(_get(robots, "robots", "l2", path, required=True),
                           n, "robots", "l2", path)
    grav = _per_robot_floats(_get(robots, "robots", "grav", path, default=9.81),
                             n, "robots", "grav", path)
    q0 = _per_robot_pairs(_get(robots, "robots", "q0", path, required=True),
                          n, "robots", "q0", path)
    dq0 = _per_robot_pairs(_get(robots, "robots", "dq0", path, default=[0.0, 0.0]),
                           n, "robots", "dq0", path)
    try:
        models = tuple(RobotModel(m1=m1[i], m2=m2[i], l1=l1[i], l2=l2[i],
                                  grav=grav[i]) for i in range(n))
    except ValueError as exc:
        raise ParseError(f"{path}: [robots] {exc}") from exc

    network = _section(doc, "network", path)
    r = _as_float(_get(network, "network", "r", path, default=1.0),
                  "network", "r", path)
    eps = _as_float(_get(network, "network", "eps", path, required=True),
                    "network", "eps", path)

    potential = _section(doc, "potential", path)
    Q = _as_float(_get(potential, "potential", "Q", path, required=True),
                  "potential", "Q", path)
    try:
        spec = PotentialSpec(r=r, Q=Q)
    except ValueError as exc:
        raise ParseError(f"{path}: [potential] {exc}") from exc

    controller = _section(doc, "controller", path)
    kind = _get(controller, "controller", "type", path, required=True)
    if kind not in (OUTPUT_FEEDBACK, ADAPTIVE):
        raise ParseError(f"{path}: [controller] type must be "
                         f"'{OUTPUT_FEEDBACK}' or '{ADAPTIVE}', got {kind!r}")
    of_gains = None
    ad_gains = None
    theta0 = None
    try:
        if kind == OUTPUT_FEEDBACK:
            rho = _per_robot_floats(
                _get(controller, "controller", "rho", path, required=True),
                n, "controller", "rho", path)
            kap = _per_robot_floats(
                _get(controller, "controller", "kappa", path, required=True),
                n, "controller", "kappa", path)
            zet = _per_robot_floats(
                _get(controller, "controller", "zeta", path, required=True),
                n, "controller", "zeta", path)
            of_gains = tuple(OutputFeedbackGains(rho=rho[i], kappa=kap[i],
                                                 zeta=zet[i]) for i in range(n))
        else:
            kap = _per_robot_floats(
                _get(controller, "controller", "kappa", path, required=True),
                n, "controller", "kappa", path)
            mu = _per_robot_floats(
                _get(controller, "controller", "mu", path, required=True),
                n, "controller", "mu", path)
            beta = _per_robot_floats(
                _get(controller, "controller", "beta", path, required=True),
                n, "controller", "beta", path)
            alpha = _per_robot_floats(
                _get(controller, "controller", "alpha", path, required=True),
                n, "controller", "alpha", path)
            delta = _per_robot_floats(
                _get(controller, "controller", "delta", path, required=True),
                n, "controller", "delta", path)
            lo = _per_robot_pairs(
                _get(controller, "controller", "theta_lo", path, required=True),
                n, "controller", "theta_lo", path)
            hi = _per_robot_pairs(
                _get(controller, "controller", "theta_hi", path, required=True),
                n, "controller", "theta_hi", path)
            theta0 = _per_robot_pairs(
                _get(controller, "controller", "theta_hat0", path, required=True),
                n, "controller", "theta_hat0", path)
            ad_gains = tuple(AdaptiveGains(
                kappa=kap[i], mu=mu[i], beta=beta[i], alpha=alpha[i],
                delta=delta[i], theta_lo=tuple(lo[i]), theta_hi=tuple(hi[i]))
                for i in range(n))
    except ValueError as exc:
        raise ParseError(f"{path}: [controller] {exc}") from exc

    limits_sec = _section(doc, "limits", path)
    fbar = _limits_array(_get(limits_sec, "limits", "f_bar", path, required=True),
                         n, path)
    try:
        limits = tuple(ActuationLimits(f_bar=tuple(fbar[i])) for i in range(n))
    except ValueError as exc:
        raise ParseError(f"{path}: [limits] {exc}") from exc

    sim_sec = _section(doc, "sim", path)
    dt = _as_float(_get(sim_sec, "sim", "dt", path, required=True),
                   "sim", "dt", path)
    t_end = _as_float(_get(sim_sec, "sim", "t_end", path, required=True),
                      "sim", "t_end", path)
    stride = _as_int(_get(sim_sec, "sim", "log_stride", path, default=1),
                     "sim", "log_stride", path)
    seed = _as_int(_get(sim_sec, "sim", "seed", path, default=0),
                   "sim", "seed", path)
    out_csv = _get(sim_sec, "sim", "out_csv", path)
    out_events = _get(sim_sec, "sim", "out_events", path)
    for key, val in (("out_csv", out_csv), ("out_events", out_events)):
        if val is not None and not isinstance(val, str):
            raise ParseError(f"{path}: [sim] {key} must be a string")

    try:
        scenario = Scenario(
            models=models, q0=np.array(q0), dq0=np.array(dq0),
            controller=kind, spec=spec, limits=limits,
            of_gains=of_gains, ad_gains=ad_gains,
            theta0=np.array(theta0) if theta0 is not None else None,
            eps=eps, dt=dt, t_end=t_end, log_stride=stride, seed=seed,
            name=name, out_csv=out_csv, out_events=out_events)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc

    bounds_sec = doc.get("bounds", {})
    if not isinstance(bounds_sec, dict):
        raise ParseError(f"{path}: [bounds] must be a table")
    region = _get(bounds_sec, "bounds", "region", path)
    if region is not None:
        region = tuple(_pair(region, "bounds", "region", path))
    else:
        region = DEFAULT_REGION
    samples = _as_int(_get(bounds_sec, "bounds", "samples", path,
                           default=DEFAULT_SAMPLES), "bounds", "samples", path)
    margin = _as_float(_get(bounds_sec, "bounds", "margin", path,
                            default=DEFAULT_MARGIN), "bounds", "margin", path)
    if samples < 2:
        raise ParseError(f"{path}: [bounds] samples must be >= 2")
    if margin < 0.0:
        raise ParseError(f"{path}: [bounds] margin must be nonnegative")
    request = BoundsRequest(region=region, samples=samples, margin=margin)

    return scenario, request


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def _toml_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML")


def _collapse(values):
    """Emit a scalar when every robot shares the value, else the list."""
    vals = list(values)
    if all(v == vals[0] for v in vals):
        return vals[0]
    return vals


def scenario_to_doc(scenario, request=None):
    """Scenario (+ optional BoundsRequest) as nested plain dicts."""
    models = scenario.models
    doc = {"name": scenario.name}
    doc["robots"] = {
        "count": scenario.n_robots,
        "m1": _collapse(m.m1 for m in models),
        "m2": _collapse(m.m2 for m in models),
        "l1": _collapse(m.l1 for m in models),
        "l2": _collapse(m.l2 for m in models),
        "grav": _collapse(m.grav for m in models),
        "q0": [list(row) for row in scenario.q0],
        "dq0": [list(row) for row in scenario.dq0],
    }
    doc["network"] = {"r": scenario.spec.r, "eps": scenario.eps}
    doc["potential"] = {"Q": scenario.spec.Q}
    if scenario.controller == OUTPUT_FEEDBACK:
        doc["controller"] = {
            "type": OUTPUT_FEEDBACK,
            "rho": _collapse(g.rho for g in scenario.of_gains),
            "kappa": _collapse(g.kappa for g in scenario.of_gains),
            "zeta": _collapse(g.zeta for g in scenario.of_gains),
        }
    else:
        doc["controller"] = {
            "type": ADAPTIVE,
            "kappa": _collapse(g.kappa for g in scenario.ad_gains),
            "mu": _collapse(g.mu for g in scenario.ad_gains),
            "beta": _collapse(g.beta for g in scenario.ad_gains),
            "alpha": _collapse(g.alpha for g in scenario.ad_gains),
            "delta": _collapse(g.delta for g in scenario.ad_gains),
            "theta_lo": _collapse(list(g.theta_lo) for g in scenario.ad_gains),
            "theta_hi": _collapse(list(g.theta_hi) for g in scenario.ad_gains),
            "theta_hat0": [list(row) for row in scenario.theta0],
        }
    doc["limits"] = {"f_bar": _collapse(list(lim.f_bar) for lim in scenario.limits)}
    doc["sim"] = {"dt": scenario.dt, "t_end": scenario.t_end,
                  "log_stride": scenario.log_stride, "seed": scenario.seed}
    if scenario.out_csv is not None:
        doc["sim"]["out_csv"] = scenario.out_csv
    if scenario.out_events is not None:
        doc["sim"]["out_events"] = scenario.out_events
    if request is not None:
        doc["bounds"] = {"region": list(request.region),
                         "samples": request.samples,
                         "margin": request.margin}
    return doc


def dumps_scenario(scenario, request=None):
    """Render a scenario as TOML text that load_scenario accepts."""
    doc = scenario_to_doc(scenario, request)
    lines = []
    for key, value in doc.items():
        if not isinstance(value, dict):
            lines.append(f"{key} = {_toml_value(value)}")
    for section, table in doc.items():
        if not isinstance(table, dict):
            continue
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def save_scenario(scenario, path, request=None):
    """Write a scenario file (atomically) that round-trips via load."""
    text = dumps_scenario(scenario, request)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
