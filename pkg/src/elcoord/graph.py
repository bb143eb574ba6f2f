"""Communication graph utilities.

The graph is built once from the initial end-effector positions (edge iff
distance <= r - eps) and then frozen: coordination never adds edges, and a
distance growing past r is reported as a link-break event by the simulator
rather than by mutating the edge set. Laplacian / incidence helpers follow
the usual algebraic graph theory conventions with edge weights psi'(d^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedInitialGraph
from .potential import PotentialSpec, psi_prime

__all__ = [
    "CommGraph",
    "build_initial_graph",
    "is_connected",
    "weighted_laplacian",
    "incidence_matrix",
]


@dataclass(frozen=True)
class CommGraph:
    """Frozen initial communication graph.

    edges are unordered index pairs stored as sorted tuples, no self-loops,
    no duplicates. Constructed connected (see build_initial_graph).
    """

    n_agents: int
    edges: tuple
    r: float
    eps: float

    def __post_init__(self):
        seen = set()
        for (i, j) in self.edges:
            if i == j:
                raise ValueError(f"self-loop on agent {i}")
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise ValueError(f"edge ({i}, {j}) out of range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    def neighbors(self, i: int) -> list:
        out = []
        for (a, b) in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))


def build_initial_graph(positions, r: float, eps: float) -> CommGraph:
    """Build the frozen edge set from initial positions.

    Edge (i, j) exists iff ||x_i - x_j|| <= r - eps. The margin eps > 0
    keeps initial links strictly inside the radius. Raises
    DisconnectedInitialGraph when the result is not connected, since the
    coordination analysis assumes a connected network.
    """
    if not (r > eps > 0.0):
        raise ValueError(f"need r > eps > 0, got r={r}, eps={eps}")
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(positions[i] - positions[j]) <= r - eps:
                edges.append((i, j))
    graph = CommGraph(n_agents=n, edges=tuple(edges), r=float(r), eps=float(eps))
    if not is_connected(graph):
        raise DisconnectedInitialGraph(
            f"initial graph with edges {graph.edges} does not connect all {n} agents"
        )
    return graph


def is_connected(graph) -> bool:
    """Breadth-first reachability test.

    Accepts a CommGraph or a square adjacency matrix (nonzero = edge).
    """
    if isinstance(graph, CommGraph):
        n = graph.n_agents
        adj = [[] for _ in range(n)]
        for (i, j) in graph.edges:
            adj[i].append(j)
            adj[j].append(i)
    else:
        A = np.asarray(graph)
        n = A.shape[0]
        adj = [list(np.nonzero(A[i])[0]) for i in range(n)]

    if n <= 1:
        return True
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return len(seen) == n


def weighted_laplacian(positions, graph: CommGraph, spec: PotentialSpec) -> np.ndarray:
    """Weighted graph Laplacian with edge weights psi'(d_ij^2).

    Symmetric with zero row sums; equals D W D^T for the incidence matrix D
    and W = diag of edge weights. Raises OutOfDomain (from the potential) if
    an edge is stretched past the radius.
    """
    positions = np.asarray(positions, dtype=float)
    n = graph.n_agents
    L = np.zeros((n, n))
    for (i, j) in graph.edges:
        diff = positions[i] - positions[j]
        w = psi_prime(float(diff @ diff), spec)
        L[i, j] -= w
        L[j, i] -= w
        L[i, i] += w
        L[j, j] += w
    return L


def incidence_matrix(graph: CommGraph) -> np.ndarray:
    """Node-edge incidence matrix, one column per edge.

    Deterministic orientation: the lower-index endpoint is the tail (-1),
    the higher-index endpoint the head (+1). Any consistent orientation
    satisfies L = D W D^T; fixing one keeps tests reproducible.
    """
    D = np.zeros((graph.n_agents, len(graph.edges)))
    for k, (i, j) in enumerate(graph.edges):
        a, b = (i, j) if i < j else (j, i)
        D[a, k] = -1.0
        D[b, k] = 1.0
    return D
