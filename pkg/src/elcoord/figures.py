"""Diagnostic figures rendered next to the delimited output.

Four PNGs per run: inter-robot distances against the communication radius,
the coordination error, the Lyapunov trace against its invariant ceiling,
and the applied wrench components against their limits. All figures come
from the TrajectoryLog alone, so anything plotted here can be recomputed
from the CSV.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .potential import psi_at_r
from .sim import CONVERGED_TOL, coordination_error


def _finalize(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_distances(log, path):
    """Per-edge distance traces with the radius marked."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    r = log.scenario.spec.r
    for k, (i, j) in enumerate(log.graph.edges):
        ax.plot(log.t, log.d[:, k], lw=1.1, label=f"d({i},{j})")
    ax.axhline(r, color="crimson", ls="--", lw=1.2, label="radius r")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("inter-robot distance [m]")
    ax.set_title(f"{log.scenario.name}: link distances")
    if len(log.graph.edges) <= 12:
        ax.legend(fontsize=8, ncol=2)
    ax.grid(alpha=0.3)
    _finalize(fig, path)


def plot_coordination(log, path):
    """Max pairwise end-effector distance with the convergence threshold."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    err = np.array([coordination_error(log.x[k]) for k in range(log.n_rows)])
    ax.plot(log.t, err, lw=1.2, color="tab:blue")
    ax.axhline(CONVERGED_TOL, color="gray", ls=":", lw=1.0,
               label=f"threshold {CONVERGED_TOL} m")
    if log.converged_t is not None:
        ax.axvline(log.converged_t, color="tab:green", ls="--", lw=1.0,
                   label=f"converged at {log.converged_t:.3g} s")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("coordination error [m]")
    ax.set_title(f"{log.scenario.name}: coordination error")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    _finalize(fig, path)


def plot_lyapunov(log, path):
    """V trace against the connectivity ceiling psi(r)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(log.t, log.V, lw=1.2, color="tab:purple", label="V")
    ax.axhline(psi_at_r(log.scenario.spec), color="crimson", ls="--", lw=1.2,
               label="psi(r)")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("V")
    ax.set_title(f"{log.scenario.name}: Lyapunov trace")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _finalize(fig, path)


def plot_wrench(log, path):
    """Applied wrench components per robot with the actuation limits."""
    n = log.scenario.n_robots
    fig, axes = plt.subplots(n, 1, figsize=(7.0, 1.9 * n + 1.2),
                             sharex=True, squeeze=False)
    for i in range(n):
        ax = axes[i, 0]
        ax.plot(log.t, log.wrench[:, i, 0], lw=0.9, label="f1")
        ax.plot(log.t, log.wrench[:, i, 1], lw=0.9, label="f2")
        fb = log.scenario.limits[i].vec
        ax.axhline(fb[0], color="gray", ls=":", lw=0.8)
        ax.axhline(-fb[0], color="gray", ls=":", lw=0.8)
        if fb[1] != fb[0]:
            ax.axhline(fb[1], color="lightgray", ls=":", lw=0.8)
            ax.axhline(-fb[1], color="lightgray", ls=":", lw=0.8)
        ax.set_ylabel(f"robot {i} [N]")
        if i == 0:
            ax.legend(fontsize=8, loc="upper right")
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("t [s]")
    fig.suptitle(f"{log.scenario.name}: applied wrenches", y=0.995)
    _finalize(fig, path)


def render_all(log, out_dir, stem=None):
    """Render the standard figure set; returns the written paths."""
    import os

    stem = stem or log.scenario.name
    paths = []
    if log.n_rows == 0:
        return paths
    jobs = [("distances", plot_distances), ("coordination", plot_coordination),
            ("lyapunov", plot_lyapunov), ("wrench", plot_wrench)]
    for suffix, fn in jobs:
        path = os.path.join(out_dir, f"{stem}_{suffix}.png")
        fn(log, path)
        paths.append(path)
    return paths
