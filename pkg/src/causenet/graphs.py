"""Graph data model: full DAGs, partial constraint graphs and input masks.

Node 0 is always the prediction target; features occupy indices 1..d.
A full graph states the complete causal structure. A partial graph is a
constraint object over a subset of nodes: for two covered nodes i, k the
absence of (i, k) forbids a direct influence of i on k, while pairs that
touch uncovered nodes stay unconstrained.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


def default_node_names(n: int) -> tuple[str, ...]:
    return ("Y",) + tuple(f"X{i}" for i in range(1, n))


def _validate_edges(edges: frozenset[Edge], node_count: int) -> None:
    for i, k in edges:
        if not (0 <= i < node_count and 0 <= k < node_count):
            raise DomainError(f"edge ({i}, {k}) outside node range 0..{node_count - 1}")
        if i == k:
            raise DomainError(f"self-loop on node {i}")


@dataclass(frozen=True)
class CausalGraph:
    """A directed acyclic graph over all d+1 features, target at index 0."""

    node_count: int
    edges: frozenset[Edge]
    node_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        if not self.node_names:
            object.__setattr__(self, "node_names", default_node_names(self.node_count))
        if len(self.node_names) != self.node_count:
            raise DomainError("node_names length must equal node_count")
        _validate_edges(self.edges, self.node_count)
        if not is_acyclic(self.edges, self.node_count):
            raise DomainError("edge set contains a directed cycle")

    def without_edges(self, removed: set[Edge]) -> "CausalGraph":
        return CausalGraph(self.node_count, self.edges - frozenset(removed), self.node_names)


@dataclass(frozen=True)
class PartialGraph:
    """Constraints over a known subset of nodes; may hold both directions."""

    node_count: int
    known_nodes: frozenset[int]
    edges: frozenset[Edge]
    node_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "known_nodes", frozenset(self.known_nodes))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        if not self.node_names:
            object.__setattr__(self, "node_names", default_node_names(self.node_count))
        if len(self.node_names) != self.node_count:
            raise DomainError("node_names length must equal node_count")
        for n in self.known_nodes:
            if not 0 <= n < self.node_count:
                raise DomainError(f"known node {n} outside node range")
        _validate_edges(self.edges, self.node_count)
        for i, k in self.edges:
            if i not in self.known_nodes or k not in self.known_nodes:
                raise DomainError(f"edge ({i}, {k}) touches a node outside known_nodes")


def complete_partial_graph(node_count: int, node_names: tuple[str, ...] = ()) -> PartialGraph:
    """All nodes known, every ordered off-diagonal pair present: no constraint
    beyond the self-mask, i.e. plain unconstrained training."""
    nodes = frozenset(range(node_count))
    edges = frozenset((i, k) for i in range(node_count) for k in range(node_count) if i != k)
    return PartialGraph(node_count, nodes, edges, node_names)


def is_acyclic(edges: frozenset[Edge] | set[Edge], node_count: int) -> bool:
    """Three-color DFS cycle check."""
    adjacency: list[list[int]] = [[] for _ in range(node_count)]
    for i, k in edges:
        if not (0 <= i < node_count and 0 <= k < node_count):
            raise DomainError(f"edge ({i}, {k}) outside node range")
        adjacency[i].append(k)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * node_count

    def visit(u: int) -> bool:
        color[u] = GRAY
        for v in adjacency[u]:
            if color[v] == GRAY:
                return False
            if color[v] == WHITE and not visit(v):
                return False
        color[u] = BLACK
        return True

    return all(color[u] != WHITE or visit(u) for u in range(node_count))


def _find_cycle(edges: set[Edge], node_count: int) -> list[Edge] | None:
    """Return the edges of one directed cycle, or None if acyclic."""
    adjacency: list[list[int]] = [[] for _ in range(node_count)]
    for i, k in sorted(edges):
        adjacency[i].append(k)
    color = [0] * node_count
    stack: list[int] = []

    def visit(u: int) -> list[Edge] | None:
        color[u] = 1
        stack.append(u)
        for v in adjacency[u]:
            if color[v] == 1:
                start = stack.index(v)
                path = stack[start:] + [v]
                return list(zip(path[:-1], path[1:]))
            if color[v] == 0:
                found = visit(v)
                if found is not None:
                    return found
        color[u] = 2
        stack.pop()
        return None

    for u in range(node_count):
        if color[u] == 0:
            found = visit(u)
            if found is not None:
                return found
    return None


def break_cycles(weighted_edges: dict[Edge, float], node_count: int) -> set[Edge]:
    """Drop minimum-weight edges from detected cycles until none remain.

    One warning is logged per removed edge. The result is a subset of the
    input edge set and always acyclic.
    """
    edges = set(weighted_edges)
    _validate_edges(frozenset(edges), node_count)
    while True:
        cycle = _find_cycle(edges, node_count)
        if cycle is None:
            return edges
        weakest = min(cycle, key=lambda e: (weighted_edges[e], e))
        edges.discard(weakest)
        logger.warning(
            "breaking cycle %s: removing edge %s (weight %.6g)",
            cycle, weakest, weighted_edges[weakest],
        )


def mask_from_partial(g: PartialGraph) -> np.ndarray:
    """Boolean allow-matrix: allowed[i, k] says inputs i may feed sub-network k.

    Pairs inside the known set are allowed only when the partial graph lists
    them; any pair touching an unknown node stays allowed. The diagonal is
    always masked (each sub-network reconstructs its feature without it).
    """
    n = g.node_count
    allowed = np.ones((n, n), dtype=bool)
    np.fill_diagonal(allowed, False)
    known = sorted(g.known_nodes)
    for i in known:
        for k in known:
            if i != k and (i, k) not in g.edges:
                allowed[i, k] = False
    return allowed


def mask_from_full(g: CausalGraph) -> np.ndarray:
    """Allow exactly the graph's edges; everything else is masked."""
    allowed = np.zeros((g.node_count, g.node_count), dtype=bool)
    for i, k in g.edges:
        allowed[i, k] = True
    np.fill_diagonal(allowed, False)
    return allowed


def validate_mask(allowed: np.ndarray, node_count: int) -> np.ndarray:
    allowed = np.asarray(allowed, dtype=bool)
    if allowed.shape != (node_count, node_count):
        raise ShapeError(f"mask shape {allowed.shape} != ({node_count}, {node_count})")
    if np.diagonal(allowed).any():
        raise DomainError("mask diagonal must be fully masked")
    return allowed


def graph_to_json(g: CausalGraph | PartialGraph) -> dict:
    """Interchange schema shared by CLI, service and UI."""
    payload = {
        "nodes": list(g.node_names),
        "edges": sorted([list(e) for e in g.edges]),
        "kind": "full" if isinstance(g, CausalGraph) else "partial",
    }
    if isinstance(g, PartialGraph):
        payload["known_nodes"] = sorted(g.known_nodes)
    return payload


def graph_from_json(payload: dict) -> CausalGraph | PartialGraph:
    nodes = payload.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise DomainError("graph JSON needs a non-empty 'nodes' list")
    edges = frozenset((int(i), int(k)) for i, k in payload.get("edges", []))
    kind = payload.get("kind", "full")
    names = tuple(str(n) for n in nodes)
    if kind == "full":
        return CausalGraph(len(nodes), edges, names)
    if kind == "partial":
        known = frozenset(int(n) for n in payload.get("known_nodes", []))
        return PartialGraph(len(nodes), known, edges, names)
    raise DomainError(f"unknown graph kind {kind!r}")
