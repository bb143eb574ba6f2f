"""Command line interface: scenario files in, artifacts out.

Subcommands:

    elcoord check      evaluate the gain certificates for a scenario
    elcoord run        simulate; write CSV + events JSON + figures
    elcoord bounds     sample the model bounds and cache them
    elcoord synthesize search certified output-feedback gains

Exit codes form a small protocol so CI scripts can assert outcomes without
parsing: 0 success, 1 error (bad input, singular start, disconnected
graph), 2 at least one certificate false, 3 a communication link broke
during the run, 4 gain synthesis found nothing.

All output files land in --out (default: current directory), named after
the scenario. Summary lines are one-per-line key=value so grep and awk can
pick them apart. COORD_SIM_THREADS caps worker processes for batch APIs.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import figures
from .certificates import check_all, synthesize_output_feedback_gains
from .dynamics import DynamicBounds, JointState, estimate_bounds, merge_bounds
from .errors import ElcoordError, NotFound, ParseError
from .scenario import BoundsRequest, load_scenario, save_scenario
from .sim import OUTPUT_FEEDBACK, run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNCERTIFIED = 2
EXIT_LINK_BREAK = 3
EXIT_NOT_FOUND = 4


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with this tool's error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_ERROR)


def _region_arg(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'q2min,q2max'")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number pair: {text!r}")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path, payload):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# bounds plumbing shared by check / bounds / synthesize
# ---------------------------------------------------------------------------

def _bounds_to_dict(b):
    return {
        "lambda1": b.lambda1, "lambda2": b.lambda2,
        "lambda1_star": b.lambda1_star, "lambda2_star": b.lambda2_star,
        "c": b.c, "gamma": list(np.asarray(b.gamma)),
        "manip_floor": b.manip_floor, "region": list(b.region),
        "n_samples": b.n_samples, "margin": b.margin,
    }


def _bounds_from_dict(d):
    return DynamicBounds(
        lambda1=d["lambda1"], lambda2=d["lambda2"],
        lambda1_star=d["lambda1_star"], lambda2_star=d["lambda2_star"],
        c=d["c"], gamma=np.asarray(d["gamma"], dtype=float),
        manip_floor=d["manip_floor"], region=tuple(d["region"]),
        n_samples=d["n_samples"], margin=d["margin"],
    )


def _bounds_cache_path(out_dir, scenario):
    return os.path.join(out_dir, f"{scenario.name}.bounds.json")


def _compute_bounds(scenario, request):
    """Per distinct robot model; returns (groups, fleet) where groups maps
    a model to (robot indices, DynamicBounds) and fleet is the merged
    conservative envelope certificates consume."""
    groups = []
    for i, model in enumerate(scenario.models):
        for entry in groups:
            if entry["model"] == model:
                entry["robots"].append(i)
                break
        else:
            groups.append({"model": model, "robots": [i]})
    for entry in groups:
        entry["bounds"] = estimate_bounds(
            entry["model"], request.region,
            n_samples=request.samples, margin=request.margin)
    fleet = merge_bounds([entry["bounds"] for entry in groups])
    return groups, fleet


def _load_or_compute_bounds(scenario, request, out_dir, print_report=False):
    """Fleet bounds from the cache file when present, else freshly sampled
    (and cached for the next invocation)."""
    cache = _bounds_cache_path(out_dir, scenario)
    if os.path.exists(cache):
        with open(cache) as fh:
            payload = json.load(fh)
        per_robot = [_bounds_from_dict(d) for d in payload["per_robot"]]
        if len(per_robot) != scenario.n_robots:
            raise ParseError(
                f"{cache}: cached bounds cover {len(per_robot)} robots, "
                f"scenario has {scenario.n_robots}; delete the cache or "
                "rerun the bounds command")
        if print_report:
            print(f"BOUNDS scenario={scenario.name} source=cache path={cache}")
        return merge_bounds(per_robot)

    groups, fleet = _compute_bounds(scenario, request)
    payload = {
        "schema_version": 1,
        "scenario": scenario.name,
        "region": list(request.region),
        "samples": request.samples,
        "margin": request.margin,
        "per_robot": [_bounds_to_dict(_group_for(groups, i))
                      for i in range(scenario.n_robots)],
    }
    _write_json(cache, payload)
    if print_report:
        _print_bounds_report(scenario, request, groups, cache)
    return fleet


def _group_for(groups, robot):
    for entry in groups:
        if robot in entry["robots"]:
            return entry["bounds"]
    raise KeyError(robot)


def _print_bounds_report(scenario, request, groups, cache):
    print(f"BOUNDS scenario={scenario.name} source=sampled "
          f"region=[{request.region[0]:.6g},{request.region[1]:.6g}] "
          f"samples={request.samples} margin={request.margin:.6g}")
    for entry in groups:
        b = entry["bounds"]
        robots = ",".join(str(i) for i in entry["robots"])
        gamma = np.asarray(b.gamma)
        print(f"MODEL robots={robots} lambda1={b.lambda1:.6g} "
              f"lambda2={b.lambda2:.6g} lambda1_star={b.lambda1_star:.6g} "
              f"lambda2_star={b.lambda2_star:.6g} c={b.c:.6g} "
              f"gamma1={gamma[0]:.6g} gamma2={gamma[1]:.6g} "
              f"manip_floor={b.manip_floor:.6g}")
    print(f"WROTE {cache}")


def _apply_request_overrides(request, args):
    updates = {}
    if getattr(args, "region", None) is not None:
        updates["region"] = args.region
    if getattr(args, "samples", None) is not None:
        updates["samples"] = args.samples
    return dataclasses.replace(request, **updates) if updates else request


def _initial_states(scenario):
    return [JointState(q=scenario.q0[i], dq=scenario.dq0[i])
            for i in range(scenario.n_robots)]


def _gains_of(scenario):
    return (scenario.of_gains if scenario.controller == OUTPUT_FEEDBACK
            else scenario.ad_gains)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cert_to_dict(cert):
    return {
        "condition_id": cert.condition_id,
        "verdict": bool(cert.verdict),
        "strict": bool(cert.strict),
        "lhs": np.asarray(cert.lhs).tolist(),
        "rhs": np.asarray(cert.rhs).tolist(),
        "margin": np.asarray(cert.margin).tolist(),
        "worst_margin": float(np.min(cert.margin)),
        "inputs_digest": cert.inputs_digest,
    }


def _print_certs(certs):
    for cert in certs:
        flag = "PASS" if cert.verdict else "FAIL"
        print(f"CERT id={cert.condition_id} verdict={flag} "
              f"worst_margin={float(np.min(cert.margin)):.6g} "
              f"strict={'yes' if cert.strict else 'no'}")


def cmd_check(args):
    scenario, request = load_scenario(args.scenario)
    request = _apply_request_overrides(request, args)
    bounds = _load_or_compute_bounds(scenario, request, args.out)
    graph = scenario.build_graph()
    certs = check_all(scenario.controller, _initial_states(scenario),
                      list(scenario.models), list(_gains_of(scenario)),
                      graph, scenario.spec, bounds, list(scenario.limits))
    _print_certs(certs)
    all_true = all(c.verdict for c in certs)
    result = "certified" if all_true else "uncertified"
    print(f"CHECK scenario={scenario.name} result={result}")
    report = os.path.join(args.out, f"{scenario.name}.certificates.json")
    _write_json(report, {
        "schema_version": 1,
        "scenario": scenario.name,
        "controller": scenario.controller,
        "result": result,
        "certificates": [_cert_to_dict(c) for c in certs],
    })
    print(f"WROTE {report}")
    return EXIT_OK if all_true else EXIT_UNCERTIFIED


def cmd_run(args):
    scenario, _ = load_scenario(args.scenario)
    updates = {}
    if args.dt is not None:
        updates["dt"] = args.dt
    if args.t_end is not None:
        updates["t_end"] = args.t_end
    if args.log_stride is not None:
        updates["log_stride"] = args.log_stride
    if updates:
        try:
            scenario = dataclasses.replace(scenario, **updates)
        except ValueError as exc:
            raise ParseError(f"invalid override: {exc}") from exc

    log = run(scenario)

    csv_name = scenario.out_csv or f"{scenario.name}.csv"
    events_name = scenario.out_events or f"{scenario.name}.events.json"
    csv_path = os.path.join(args.out, csv_name)
    events_path = os.path.join(args.out, events_name)
    log.to_csv(csv_path)
    log.write_events(events_path)

    print(f"RUN scenario={scenario.name} status={log.status} "
          f"t_final={log.t_final:.6g} "
          f"coordination_error={log.final_coordination_error():.6g} "
          f"v_violations={log.v_violation_count()}")
    for ev in sorted(log.events, key=lambda e: e.t):
        loc = ""
        if ev.edge is not None:
            loc = f" edge=({ev.edge[0]},{ev.edge[1]})"
        if ev.agent is not None:
            loc = f" agent={ev.agent}"
        print(f"EVENT kind={ev.kind} t={ev.t:.6g}{loc}")
    print(f"WROTE {csv_path}")
    print(f"WROTE {events_path}")

    if not args.no_figures:
        for path in figures.render_all(log, args.out):
            print(f"WROTE {path}")

    if log.status == "link_break":
        return EXIT_LINK_BREAK
    if log.status == "singularity":
        sys.stderr.write(
            f"error: robot hit a kinematic singularity at "
            f"t={log.t_final:.6g} s; trajectory truncated\n")
        return EXIT_ERROR
    return EXIT_OK


def cmd_bounds(args):
    scenario, request = load_scenario(args.scenario)
    request = _apply_request_overrides(request, args)
    cache = _bounds_cache_path(args.out, scenario)
    groups, _ = _compute_bounds(scenario, request)
    payload = {
        "schema_version": 1,
        "scenario": scenario.name,
        "region": list(request.region),
        "samples": request.samples,
        "margin": request.margin,
        "per_robot": [_bounds_to_dict(_group_for(groups, i))
                      for i in range(scenario.n_robots)],
    }
    _write_json(cache, payload)
    _print_bounds_report(scenario, request, groups, cache)
    return EXIT_OK


def cmd_synthesize(args):
    scenario, request = load_scenario(args.scenario)
    request = _apply_request_overrides(request, args)
    if scenario.controller != OUTPUT_FEEDBACK:
        sys.stderr.write(
            "error: gain synthesis supports the output-feedback "
            "controller only\n")
        return EXIT_ERROR
    if np.any(scenario.dq0 != 0.0):
        sys.stderr.write("error: gain synthesis requires robots at rest\n")
        return EXIT_ERROR

    bounds = _load_or_compute_bounds(scenario, request, args.out)
    graph = scenario.build_graph()
    gains, spec, certs = synthesize_output_feedback_gains(
        _initial_states(scenario), list(scenario.models), graph,
        scenario.spec, list(scenario.limits), bounds,
        zeta=scenario.of_gains[0].zeta, kappa=scenario.of_gains[0].kappa,
        current_rho=[g.rho for g in scenario.of_gains])

    print(f"SYNTH scenario={scenario.name} Q={spec.Q:.6g} "
          f"kappa={gains[0].kappa:.6g} zeta={gains[0].zeta:.6g}")
    for i, g in enumerate(gains):
        print(f"RHO robot={i} value={g.rho:.12g}")
    _print_certs(certs)

    derived = dataclasses.replace(scenario, of_gains=tuple(gains), spec=spec)
    out_path = os.path.join(args.out, f"{scenario.name}.synthesized.toml")
    save_scenario(derived, out_path, request)
    print(f"WROTE {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser():
    parser = _Parser(
        prog="elcoord",
        description="Simulator and certificate toolkit for bounded, "
                    "connectivity-preserving coordination of planar "
                    "two-link manipulators.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, metavar="PATH",
                       help="scenario TOML file")
        p.add_argument("--out", default=".", metavar="DIR",
                       help="output directory (default: current)")

    p_check = sub.add_parser("check", help="evaluate gain certificates")
    common(p_check)
    p_check.add_argument("--samples", type=int, metavar="N",
                         help="bound-sampling count override")
    p_check.add_argument("--region", type=_region_arg, metavar="A,B",
                         help="elbow-angle region override, radians")
    p_check.set_defaults(fn=cmd_check)

    p_run = sub.add_parser("run", help="simulate and write artifacts")
    common(p_run)
    p_run.add_argument("--dt", type=float, help="integration step override")
    p_run.add_argument("--t-end", type=float, dest="t_end",
                       help="horizon override, seconds")
    p_run.add_argument("--log-stride", type=int, dest="log_stride",
                       metavar="N", help="log every N steps")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")
    p_run.set_defaults(fn=cmd_run)

    p_bounds = sub.add_parser("bounds", help="sample model bounds and cache")
    common(p_bounds)
    p_bounds.add_argument("--samples", type=int, metavar="N",
                          help="sampling count override")
    p_bounds.add_argument("--region", type=_region_arg, metavar="A,B",
                          help="elbow-angle region override, radians")
    p_bounds.set_defaults(fn=cmd_bounds)

    p_synth = sub.add_parser("synthesize",
                             help="search certified output-feedback gains")
    common(p_synth)
    p_synth.add_argument("--samples", type=int, metavar="N",
                         help="bound-sampling count override")
    p_synth.add_argument("--region", type=_region_arg, metavar="A,B",
                         help="elbow-angle region override, radians")
    p_synth.set_defaults(fn=cmd_synthesize)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.out != "." and not os.path.isdir(args.out):
        try:
            os.makedirs(args.out, exist_ok=True)
        except OSError as exc:
            sys.stderr.write(f"error: cannot create output dir: {exc}\n")
            return EXIT_ERROR
    try:
        return args.fn(args)
    except ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except NotFound as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NOT_FOUND
    except ElcoordError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
