"""Directed graphs induced by nonnegative matrices.

Edge convention: ``adj[i, j]`` is true when entry ``(i, j)`` of the source
matrix is positive, i.e. agent ``i`` listens to agent ``j``.  Information
flows ``j -> i``; a vertex *accesses* another if it can reach it along such
steps.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from math import gcd

import numpy as np

from .errors import InvalidInputError
from .matrix import TOL_ZERO, _require_stochastic, as_matrix, hajnal_diameter

TOL_SIA = 1e-10
SIA_SQUARINGS = 30

EDGE_DIRECTION = "source_to_sink_column_to_row"


@dataclass(frozen=True, eq=False)
class DiGraph:
    """``adjacency[i, j]`` means a link from ``j`` to ``i``."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidInputError(f"adjacency must be square, got {adj.shape}")
        object.__setattr__(self, "adjacency", adj)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """Pairs ``(i, j)`` in row-major order, one per link ``j -> i``."""
        return [(int(i), int(j)) for i, j in np.argwhere(self.adjacency)]

    def self_linked(self) -> set[int]:
        return {int(v) for v in np.flatnonzero(np.diag(self.adjacency))}

    def __eq__(self, other):
        return isinstance(other, DiGraph) and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())


def graph_of(m, delta: float = 0.0, tol_zero: float = TOL_ZERO) -> DiGraph:
    """Graph with a link ``j -> i`` wherever ``m[i, j] >= max(delta, tol_zero)``.

    ``delta = 0`` gives the plain graph (strict positivity up to ``tol_zero``).
    """
    a = as_matrix(m, square=True)
    if delta < 0:
        raise InvalidInputError("delta must be >= 0")
    if delta > 0:
        return DiGraph(a >= max(delta, tol_zero))
    return DiGraph(a > tol_zero)


def _reach_from(g: DiGraph, v: int) -> np.ndarray:
    # successors of j are rows i with adj[i, j]
    seen = np.zeros(g.n, dtype=bool)
    seen[v] = True
    queue = deque([v])
    cols = g.adjacency.T
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(cols[j] & ~seen):
            seen[i] = True
            queue.append(i)
    return seen


def reachability(g: DiGraph) -> np.ndarray:
    """``R[u, v]`` is true when ``u`` accesses ``v`` (reflexive)."""
    return np.array([_reach_from(g, v) for v in range(g.n)], dtype=bool).reshape(g.n, g.n)


def root_set(g: DiGraph) -> set[int]:
    """Vertices that access every vertex; nonempty iff ``g`` has a spanning tree."""
    if g.n == 0:
        return set()
    reach = reachability(g)
    return {int(v) for v in np.flatnonzero(reach.all(axis=1))}


def is_strongly_connected(g: DiGraph) -> bool:
    return len(root_set(g)) == g.n


def strongly_connected_components(g: DiGraph) -> list[frozenset[int]]:
    reach = reachability(g)
    mutual = reach & reach.T
    comps, seen = [], np.zeros(g.n, dtype=bool)
    for v in range(g.n):
        if not seen[v]:
            members = np.flatnonzero(mutual[v])
            seen[members] = True
            comps.append(frozenset(int(u) for u in members))
    return comps


def closed_classes(g: DiGraph) -> list[frozenset[int]]:
    """Components with no incoming link from outside.

    These are the closed classes of the Markov chain with the same
    row-stochastic pattern.
    """
    out = []
    for comp in strongly_connected_components(g):
        inside = np.zeros(g.n, dtype=bool)
        inside[list(comp)] = True
        if not g.adjacency[np.ix_(inside, ~inside)].any():
            out.append(comp)
    return out


def component_period(g: DiGraph, comp) -> int | None:
    """gcd of cycle lengths inside ``comp``; ``None`` when it has no cycle."""
    comp = sorted(comp)
    member = set(comp)
    level = {comp[0]: 0}
    queue = deque([comp[0]])
    cols = g.adjacency.T
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(cols[j]):
            i = int(i)
            if i in member and i not in level:
                level[i] = level[j] + 1
                queue.append(i)
    period = 0
    for j in comp:
        for i in np.flatnonzero(cols[j]):
            i = int(i)
            if i in member:
                period = gcd(period, level[j] + 1 - level[i])
    return period or None


def graph_period(g: DiGraph) -> int | None:
    """Period of the unique closed class.

    Returns ``None`` when there are several closed classes or the closed
    class contains no cycle.
    """
    classes = closed_classes(g)
    if len(classes) != 1:
        return None
    return component_period(g, classes[0])


def is_aperiodic(g: DiGraph) -> bool:
    return graph_period(g) == 1


def is_scrambling_graph(g: DiGraph) -> bool:
    """Every pair of vertices has a common in-neighbour."""
    a = g.adjacency.astype(np.int64)
    return bool(((a @ a.T) > 0).all())


class SIAMethod(str, Enum):
    GRAPH_SUFFICIENT = "graph_sufficient"
    POWER_LIMIT = "power_limit"


def is_sia(m, method: SIAMethod | str = SIAMethod.POWER_LIMIT, tol: float = TOL_SIA,
           squarings: int = SIA_SQUARINGS) -> bool:
    """Decide whether powers of ``m`` converge to a matrix with identical rows.

    ``graph_sufficient`` only reports true when the graph has a spanning tree
    and a self-linked root; it can miss SIA matrices without such a root.
    ``power_limit`` squares repeatedly and checks the Hajnal diameter.
    """
    a = as_matrix(m, square=True)
    _require_stochastic(a)
    method = SIAMethod(method)
    if method is SIAMethod.GRAPH_SUFFICIENT:
        g = graph_of(a)
        return bool(root_set(g) & g.self_linked())
    p = a
    for _ in range(squarings + 1):
        if hajnal_diameter(p) < tol:
            return True
        p = p @ p
    return False


def lifted_labels(m: int, tau_max: int) -> list[str]:
    """Labels ``v_{i,j}`` for the lifted state, block index first (1-based)."""
    return [f"v_{{{i + 1},{j + 1}}}" for i in range(tau_max + 1) for j in range(m)]


def to_dot(g: DiGraph, labels=None, name: str = "G") -> str:
    labels = labels or [str(v + 1) for v in range(g.n)]
    lines = [f"digraph {json.dumps(name)} {{"]
    for v in range(g.n):
        lines.append(f"  n{v} [label={json.dumps(labels[v])}];")
    for i, j in g.edges():
        lines.append(f"  n{j} -> n{i};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(g: DiGraph) -> dict:
    return {"n": g.n, "edge_direction": EDGE_DIRECTION, "edges": [list(e) for e in g.edges()]}


def graph_from_json(obj: dict) -> DiGraph:
    if obj.get("edge_direction", EDGE_DIRECTION) != EDGE_DIRECTION:
        raise InvalidInputError(f"unsupported edge_direction {obj.get('edge_direction')!r}")
    try:
        n = int(obj["n"])
        adj = np.zeros((n, n), dtype=bool)
        for i, j in obj["edges"]:
            adj[int(i), int(j)] = True
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InvalidInputError(f"bad graph JSON: {exc}") from None
    return DiGraph(adj)
