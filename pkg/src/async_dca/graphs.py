"""Directed-graph analysis for stochastic matrices.

The graph of a row-stochastic matrix ``A`` has an edge ``j -> i`` exactly
when ``a_ij > 0``: information flows from the agent being listened to, to
the agent doing the averaging.  Note this is the transpose of the support
digraph of the Markov chain with transition matrix ``A``; routines that
need the chain direction (``is_sia``) build it themselves.

A node is a root when every other node is reachable from it.  The set of
roots of a rooted graph is always a single strongly connected component
(any node that reaches a root is itself a root, and roots reach each
other), namely the unique source component of the condensation.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .errors import DimensionError, ValidationError
from .matrices import StochasticMatrix, _entries, ergodic_coefficient, is_scrambling


@dataclass(frozen=True)
class DirectedGraph:
    """Nodes 1..n and a set of ordered edge pairs; self-loops allowed."""

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("graph needs at least one node")
        for u, v in self.edges:
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValidationError(f"edge ({u}, {v}) out of range 1..{self.n}")
        object.__setattr__(self, "edges", frozenset((int(u), int(v)) for u, v in self.edges))

    def successors(self, u: int) -> list:
        return sorted(v for (a, v) in self.edges if a == u)

    def adjacency(self) -> list:
        """0-based adjacency lists, successors in ascending order."""
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u - 1].append(v - 1)
        for lst in adj:
            lst.sort()
        return adj


@dataclass(frozen=True)
class RootReport:
    rooted: bool
    roots: frozenset
    chi: frozenset

    def to_json(self) -> dict:
        return {
            "rooted": self.rooted,
            "roots": sorted(self.roots),
            "chi": sorted(self.chi),
        }


@dataclass(frozen=True)
class LabelledCycle:
    """Directed cycle on positions 1..length with per-position node labels.

    Position p has an edge to p+1 (and length to 1); labels name nodes of
    the source graph and may repeat.
    """

    length: int
    labels: tuple

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        if self.length < 1 or len(labels) != self.length:
            raise ValidationError(
                f"cycle length {self.length} does not match {len(labels)} labels"
            )
        if any(v < 1 for v in labels):
            raise ValidationError("labels must be positive node indices")
        object.__setattr__(self, "labels", labels)

    def label(self, position: int) -> int:
        self._check_position(position)
        return self.labels[position - 1]

    def predecessor(self, position: int) -> int:
        self._check_position(position)
        return self.length if position == 1 else position - 1

    def successor(self, position: int) -> int:
        self._check_position(position)
        return 1 if position == self.length else position + 1

    def _check_position(self, position: int) -> None:
        if not 1 <= position <= self.length:
            raise DimensionError(f"position {position} out of range 1..{self.length}")

    @classmethod
    def from_json(cls, obj: dict) -> "LabelledCycle":
        try:
            return cls(int(obj["length"]), tuple(obj["labels"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"cycle JSON needs 'length' and 'labels': {exc}") from exc

    def to_json(self) -> dict:
        return {"length": self.length, "labels": list(self.labels)}


def build_graph(A) -> DirectedGraph:
    """Influence graph of a nonnegative square matrix: edge (j, i) iff a_ij > 0."""
    if isinstance(A, StochasticMatrix):
        arr = A.entries
    else:
        arr = np.asarray(A, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    edges = {(j + 1, i + 1) for i, j in zip(*np.nonzero(arr > 0))}
    return DirectedGraph(n, frozenset(edges))


def _scc_indices(adj: list) -> list:
    """Kosaraju SCCs over 0-based adjacency lists, sources first."""
    n = len(adj)
    visited = [False] * n
    order = []
    for s in range(n):
        if visited[s]:
            continue
        stack = [(s, 0)]
        visited[s] = True
        while stack:
            u, ptr = stack[-1]
            if ptr < len(adj[u]):
                stack[-1] = (u, ptr + 1)
                v = adj[u][ptr]
                if not visited[v]:
                    visited[v] = True
                    stack.append((v, 0))
            else:
                order.append(u)
                stack.pop()
    radj = [[] for _ in range(n)]
    for u in range(n):
        for v in adj[u]:
            radj[v].append(u)
    comp = [-1] * n
    comps = []
    for s in reversed(order):
        if comp[s] != -1:
            continue
        cid = len(comps)
        members = [s]
        comp[s] = cid
        stack = [s]
        while stack:
            u = stack.pop()
            for v in radj[u]:
                if comp[v] == -1:
                    comp[v] = cid
                    members.append(v)
                    stack.append(v)
        comps.append(sorted(members))
    return comps


def scc_decomposition(G: DirectedGraph) -> list:
    """Maximal strongly connected components, in condensation topological order."""
    return [frozenset(m + 1 for m in members) for members in _scc_indices(G.adjacency())]


def roots(G: DirectedGraph) -> RootReport:
    """Nodes from which every other node is reachable.

    The root set of a rooted graph is the unique source component of the
    condensation, which is also the only strongly connected component fully
    contained in it; ``chi`` reports that component (empty when unrooted).
    """
    comps = scc_decomposition(G)
    comp_of = {}
    for idx, members in enumerate(comps):
        for v in members:
            comp_of[v] = idx
    has_incoming = [False] * len(comps)
    for u, v in G.edges:
        cu, cv = comp_of[u], comp_of[v]
        if cu != cv:
            has_incoming[cv] = True
    sources = [i for i, inc in enumerate(has_incoming) if not inc]
    if len(sources) == 1:
        root_set = comps[sources[0]]
        return RootReport(True, root_set, root_set)
    return RootReport(False, frozenset(), frozenset())


def _component_period(members: list, adj: list) -> int:
    """gcd of (depth(u) + 1 - depth(v)) over edges inside one SCC.

    Depths come from a BFS layering rooted at the smallest member; tree
    edges contribute 0, which gcd ignores.  Returns 0 for a single node
    with no self-loop.
    """
    inside = set(members)
    depth = {members[0]: 0}
    queue = [members[0]]
    while queue:
        nxt = []
        for u in queue:
            for v in adj[u]:
                if v in inside and v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        queue = nxt
    g = 0
    for u in members:
        for v in adj[u]:
            if v in inside:
                g = gcd(g, depth[u] + 1 - depth[v])
    return abs(g)


def is_sia(A) -> bool:
    """Stochastic-indecomposable-aperiodic test via the chain structure.

    The Markov chain with row-transition matrix ``A`` (support edge
    ``i -> j`` iff ``a_ij > 0``) has its powers converge to a rank-one
    matrix exactly when there is a single closed communicating class and
    that class is aperiodic.
    """
    arr = _entries(A)
    n = arr.shape[0]
    adj = [list(np.nonzero(arr[i] > 0)[0]) for i in range(n)]
    comps = _scc_indices(adj)
    comp_of = {}
    for idx, members in enumerate(comps):
        for v in members:
            comp_of[v] = idx
    closed = []
    for idx, members in enumerate(comps):
        if all(comp_of[v] == idx for u in members for v in adj[u]):
            closed.append(members)
    if len(closed) != 1:
        return False
    return _component_period(closed[0], adj) == 1


def _strongly_connected_in_induced(members: list, adj: list) -> bool:
    inside = set(members)

    def covers(start, edges):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in edges[u]:
                if v in inside and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(inside)

    radj = [[] for _ in range(len(adj))]
    for u in range(len(adj)):
        for v in adj[u]:
            radj[v].append(u)
    return covers(members[0], adj) and covers(members[0], radj)


def build_labelled_cycle(G: DirectedGraph, component) -> LabelledCycle:
    """Closed walk through a strongly connected component, as a labelled cycle.

    Concatenates BFS shortest paths (lowest-index tie-breaking) between the
    component's nodes in ascending order, then back to the first.  The
    resulting cycle covers every component node and its length is at most
    m*(m-1) for a component of m >= 2 nodes.
    """
    members = sorted(set(int(v) for v in component))
    if not members:
        raise ValidationError("component is empty")
    if any(not 1 <= v <= G.n for v in members):
        raise ValidationError(f"component {members} out of range 1..{G.n}")
    adj = G.adjacency()
    members0 = [v - 1 for v in members]
    if not _strongly_connected_in_induced(members0, adj):
        raise ValidationError(f"component {members} is not strongly connected")
    if len(members0) == 1:
        v = members0[0]
        if v not in adj[v]:
            raise ValidationError(
                f"singleton component {members} has no self-loop, so no cycle exists"
            )
        return LabelledCycle(1, (v + 1,))

    inside = set(members0)

    def shortest_path(src, dst):
        parent = {src: None}
        queue = [src]
        while queue:
            nxt = []
            for u in queue:
                for v in adj[u]:  # ascending order fixes tie-breaking
                    if v in inside and v not in parent:
                        parent[v] = u
                        if v == dst:
                            path = [v]
                            while parent[path[-1]] is not None:
                                path.append(parent[path[-1]])
                            return path[::-1]
                        nxt.append(v)
            queue = nxt
        raise ValidationError(f"no path from {src + 1} to {dst + 1} inside component")

    labels = []
    legs = list(zip(members0, members0[1:] + members0[:1]))
    for src, dst in legs:
        labels.extend(shortest_path(src, dst)[:-1])
    return LabelledCycle(len(labels), tuple(v + 1 for v in labels))


def analysis_report(A: StochasticMatrix) -> dict:
    """Connectivity / ergodicity summary used by the `analyze` subcommand."""
    G = build_graph(A)
    rep = roots(G)
    comps = scc_decomposition(G)
    cycle_length = None
    if rep.rooted:
        try:
            cycle_length = build_labelled_cycle(G, rep.chi).length
        except ValidationError:
            cycle_length = None
    return {
        "n": A.n,
        "rooted": rep.rooted,
        "roots": sorted(rep.roots),
        "scc": [sorted(c) for c in comps],
        "sia": is_sia(A),
        "scrambling": is_scrambling(A),
        "lambda": ergodic_coefficient(A),
        "delta_min": A.min_positive_entry(),
        "cycle_length": cycle_length,
    }
