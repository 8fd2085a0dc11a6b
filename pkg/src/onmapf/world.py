"""Environment representation: undirected graphs, 4-neighbor grids, shortest distances.

Graphs are immutable after construction and connectivity is verified up front,
so shortest-path queries never fail. Distance maps are computed per source on
demand and cached on the graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import DisconnectedWorld, EmptyWorld, InvalidEdge, ParseError

BLOCKED_CHAR = "@"
FREE_CHAR = "."


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph over vertices 0..vertex_count-1.

    ``adjacency[v]`` is the sorted tuple of neighbors of ``v``. Instances are
    read-only after construction; the distance cache is the only mutable state
    and is fill-once per source.
    """

    vertex_count: int
    adjacency: tuple[tuple[int, ...], ...]
    _dist_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def dist_from(self, source: int) -> list[int]:
        """BFS distance map from ``source``, memoized."""
        cached = self._dist_cache.get(source)
        if cached is None:
            cached = self._bfs(source)
            self._dist_cache[source] = cached
        return cached

    def _bfs(self, source: int) -> list[int]:
        dist = [-1] * self.vertex_count
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for u in self.adjacency[v]:
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(v, u) for v in range(self.vertex_count) for u in self.adjacency[v] if v < u]


def build_graph(vertex_count: int, edges) -> Graph:
    """Build a connected undirected graph from an edge list.

    Raises InvalidEdge for self-loops or out-of-range endpoints and
    DisconnectedWorld if the vertices do not form one component.
    """
    if vertex_count <= 0:
        raise EmptyWorld("graph needs at least one vertex")
    neighbor_sets = [set() for _ in range(vertex_count)]
    for u, v in edges:
        if u == v:
            raise InvalidEdge(f"self-loop at vertex {u}")
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise InvalidEdge(f"edge ({u}, {v}) out of range for {vertex_count} vertices")
        neighbor_sets[u].add(v)
        neighbor_sets[v].add(u)
    adjacency = tuple(tuple(sorted(s)) for s in neighbor_sets)
    graph = Graph(vertex_count, adjacency)
    reach = graph.dist_from(0)
    if any(d < 0 for d in reach):
        raise DisconnectedWorld("graph is not connected")
    return graph


@dataclass(frozen=True)
class GridMap:
    """A 4-neighbor grid with blocked cells; unblocked cells become graph vertices.

    Vertices are numbered row-major over unblocked cells, which fixes ids for
    reproducible tie-breaking.
    """

    height: int
    width: int
    blocked: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise EmptyWorld("grid dimensions must be positive")
        for (r, c) in self.blocked:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise InvalidEdge(f"blocked cell ({r}, {c}) outside the grid")
        cells = tuple(
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) not in self.blocked
        )
        object.__setattr__(self, "_cells", cells)
        object.__setattr__(self, "_index", {cell: i for i, cell in enumerate(cells)})

    def cells(self) -> tuple[tuple[int, int], ...]:
        """Unblocked cells in row-major order."""
        return self._cells

    def vertex_of(self, row: int, col: int) -> int:
        try:
            return self._index[(row, col)]
        except KeyError:
            raise InvalidEdge(f"cell ({row}, {col}) is blocked or outside the grid") from None

    def cell_of(self, vertex: int) -> tuple[int, int]:
        return self._cells[vertex]

    def to_graph(self) -> Graph:
        return build_grid(self.height, self.width, self.blocked)


def build_grid(height: int, width: int, blocked=()) -> Graph:
    """Graph of a height x width grid: one vertex per unblocked cell, edges
    between orthogonally adjacent unblocked cells."""
    blocked = frozenset(blocked)
    grid = GridMap(height, width, blocked)
    cells = grid.cells()
    if not cells:
        raise EmptyWorld("all grid cells are blocked")
    index = {cell: i for i, cell in enumerate(cells)}
    edges = []
    for (r, c) in cells:
        for (r2, c2) in ((r + 1, c), (r, c + 1)):
            if (r2, c2) in index:
                edges.append((index[(r, c)], index[(r2, c2)]))
    try:
        return build_graph(len(cells), edges)
    except DisconnectedWorld:
        raise DisconnectedWorld("unblocked cells are not connected") from None


def shortest_dist(graph: Graph, s: int, t: int) -> int:
    """Unweighted shortest-path length between two vertices."""
    return graph.dist_from(s)[t]


def shortest_path_lex(graph: Graph, s: int, t: int) -> tuple[int, ...]:
    """The lexicographically smallest shortest path from s to t.

    Greedy over the distance-to-target map: from each vertex pick the
    smallest-id neighbor that still decreases the distance.
    """
    dist_to_t = graph.dist_from(t)
    path = [s]
    v = s
    while v != t:
        v = next(u for u in graph.adjacency[v] if dist_to_t[u] == dist_to_t[v] - 1)
        path.append(v)
    return tuple(path)


# ---------------------------------------------------------------------------
# text formats


def load_map(text: str, source: str = "<map>") -> GridMap:
    """Parse the grid map format: ``height H`` / ``width W`` / ``map`` / rows
    of ``.`` (free) and ``@`` (blocked)."""
    lines = text.splitlines()

    def expect(lineno, prefix):
        if lineno > len(lines):
            raise ParseError(f"missing '{prefix}' line", source, lineno)
        parts = lines[lineno - 1].split()
        if len(parts) != (2 if prefix != "map" else 1) or parts[0] != prefix:
            raise ParseError(f"expected '{prefix}' line", source, lineno)
        return parts

    height = _parse_int(expect(1, "height")[1], source, 1)
    width = _parse_int(expect(2, "width")[1], source, 2)
    expect(3, "map")
    if height < 1 or width < 1:
        raise ParseError("grid dimensions must be positive", source, 1)
    blocked = set()
    for r in range(height):
        lineno = 4 + r
        if lineno > len(lines):
            raise ParseError(f"missing map row {r}", source, lineno)
        row = lines[lineno - 1]
        if len(row) != width:
            raise ParseError(f"map row has length {len(row)}, expected {width}", source, lineno)
        for c, ch in enumerate(row):
            if ch == BLOCKED_CHAR:
                blocked.add((r, c))
            elif ch != FREE_CHAR:
                raise ParseError(f"unexpected map character {ch!r}", source, lineno)
    return GridMap(height, width, frozenset(blocked))


def dump_map(grid: GridMap) -> str:
    rows = [
        "".join(
            BLOCKED_CHAR if (r, c) in grid.blocked else FREE_CHAR for c in range(grid.width)
        )
        for r in range(grid.height)
    ]
    return "\n".join([f"height {grid.height}", f"width {grid.width}", "map"] + rows) + "\n"


def load_graph(text: str, source: str = "<graph>") -> Graph:
    """Parse the general graph format: ``vertices N`` then ``u v`` edge lines."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty graph file", source, 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "vertices":
        raise ParseError("expected 'vertices N' header", source, 1)
    n = _parse_int(head[1], source, 1)
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'u v' edge line", source, lineno)
        edges.append((_parse_int(parts[0], source, lineno), _parse_int(parts[1], source, lineno)))
    return build_graph(n, edges)


def dump_graph(graph: Graph) -> str:
    lines = [f"vertices {graph.vertex_count}"]
    lines += [f"{u} {v}" for u, v in graph.edges()]
    return "\n".join(lines) + "\n"


def _parse_int(token: str, source: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", source, lineno) from None
