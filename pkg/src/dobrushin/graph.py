"""Finite simple graphs: degrees, greedy coloring, path metric, boundaries and shells."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence


class GraphError(ValueError):
    """Raised for malformed edge lists or unknown vertices."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Connected simple graph with vertices ordered by ascending (string) id."""

    vertices: tuple[str, ...]
    adjacency: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.vertices)})

    def _key(self):
        return self.vertices, tuple(self.adjacency[v] for v in self.vertices)

    def __eq__(self, other):
        return isinstance(other, Graph) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in self._index

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def neighbors(self, v: str) -> tuple[str, ...]:
        if v not in self._index:
            raise GraphError(f"unknown vertex {v!r}")
        return self.adjacency[v]

    def degree(self, v: str) -> int:
        return len(self.neighbors(v))

    def edges(self) -> list[tuple[str, str]]:
        """Undirected edges (u, v) with u < v, in ascending order."""
        return [(u, v) for u in self.vertices for v in self.adjacency[u] if u < v]

    def directed_edges(self) -> list[tuple[str, str]]:
        return [(u, v) for u in self.vertices for v in self.adjacency[u]]


def build_graph(edges: Iterable[Sequence]) -> Graph:
    """Validate an edge list and build a :class:`Graph`.

    Vertex ids are converted to strings. Self-loops, repeated edges (in either
    orientation) and disconnected edge sets are rejected.
    """
    edges = [tuple(str(x) for x in e) for e in edges]
    if not edges:
        raise GraphError("edge list is empty")
    adj: dict[str, set[str]] = {}
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"edge {e!r} does not have exactly two endpoints")
        u, v = e
        if u == v:
            raise GraphError(f"self-loop at vertex {u!r}")
        if v in adj.get(u, ()):
            raise GraphError(f"duplicate edge ({u!r}, {v!r})")
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    vertices = tuple(sorted(adj))
    g = Graph(vertices, {v: tuple(sorted(adj[v])) for v in vertices})
    reached = _bfs_distances(g, vertices[0])
    if len(reached) != len(vertices):
        missing = next(v for v in vertices if v not in reached)
        raise GraphError(f"graph is disconnected: vertex {missing!r} unreachable from {vertices[0]!r}")
    return g


def max_degree(g: Graph) -> int:
    return max(len(g.adjacency[v]) for v in g.vertices)


@dataclass(frozen=True)
class ColorPartition:
    """Ordered independent classes V_0, ..., V_{k-1} covering the vertex set."""

    classes: tuple[tuple[str, ...], ...]

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def color_of(self, v: str) -> int:
        for j, cls in enumerate(self.classes):
            if v in cls:
                return j
        raise GraphError(f"unknown vertex {v!r}")

    def is_valid(self, g: Graph) -> bool:
        flat = [v for cls in self.classes for v in cls]
        if sorted(flat) != list(g.vertices):
            return False
        return all(is_independent(g, cls) for cls in self.classes)


def is_independent(g: Graph, vertices: Iterable[str]) -> bool:
    vs = set(vertices)
    return all(not (set(g.neighbors(v)) & vs) for v in vs)


def greedy_color(g: Graph) -> ColorPartition:
    """First-fit coloring in ascending vertex order."""
    color: dict[str, int] = {}
    for v in g.vertices:
        used = {color[u] for u in g.adjacency[v] if u in color}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    k = max(color.values()) + 1
    return ColorPartition(tuple(tuple(v for v in g.vertices if color[v] == j) for j in range(k)))


def _bfs_distances(g: Graph, source: str) -> dict[str, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def path_distance(g: Graph, a: str, b: str) -> int:
    g.index(a)
    g.index(b)
    return _bfs_distances(g, a)[b]


def external_boundary(g: Graph, region: Iterable[str]) -> frozenset[str]:
    """Vertices outside ``region`` with at least one neighbor inside it."""
    region = frozenset(region)
    for v in region:
        g.index(v)
    return frozenset(u for v in region for u in g.adjacency[v] if u not in region)


def shells(g: Graph, center: str, n: int) -> list[frozenset[str]]:
    """Nested balls D_0 = {center}, D_k = D_{k-1} plus its external boundary."""
    if n < 1:
        raise GraphError("number of shells must be at least 1")
    g.index(center)
    out = [frozenset([center])]
    while len(out) < n:
        out.append(out[-1] | external_boundary(g, out[-1]))
    return out
