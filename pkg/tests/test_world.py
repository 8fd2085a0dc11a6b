import random

import pytest

from onmapf import (
    DisconnectedWorld,
    EmptyWorld,
    GridMap,
    InvalidEdge,
    ParseError,
    build_graph,
    build_grid,
    shortest_dist,
    shortest_path_lex,
)
from onmapf.world import dump_graph, dump_map, load_graph, load_map


def test_strip_grid_is_a_path_graph():
    m = 4
    g = build_grid(1, m + 1)
    assert g.vertex_count == m + 1
    assert g.adjacency[0] == (1,)
    assert g.adjacency[m] == (m - 1,)
    for v in range(1, m):
        assert g.adjacency[v] == (v - 1, v + 1)


def test_2x2_grid_is_a_four_cycle():
    g = build_grid(2, 2)
    assert g.vertex_count == 4
    assert all(len(g.adjacency[v]) == 2 for v in range(4))
    assert set(g.edges()) == {(0, 1), (0, 2), (1, 3), (2, 3)}


def test_single_cell_grid():
    g = build_grid(1, 1)
    assert g.vertex_count == 1
    assert g.edge_count() == 0


def test_disconnected_grid_rejected():
    # a full column of blocks splits a 3x3 grid
    with pytest.raises(DisconnectedWorld):
        build_grid(3, 3, {(0, 1), (1, 1), (2, 1)})


def test_all_blocked_grid_rejected():
    with pytest.raises(EmptyWorld):
        build_grid(2, 2, {(0, 0), (0, 1), (1, 0), (1, 1)})


def test_build_graph_path():
    g = build_graph(3, [(0, 1), (1, 2)])
    assert g.adjacency == ((1,), (0, 2), (1,))


def test_build_graph_rejects_self_loop_and_range():
    with pytest.raises(InvalidEdge):
        build_graph(2, [(0, 0)])
    with pytest.raises(InvalidEdge):
        build_graph(2, [(0, 5)])
    with pytest.raises(DisconnectedWorld):
        build_graph(3, [(0, 1)])


def test_shortest_dist_on_line_and_square():
    m = 7
    line = build_grid(1, m + 1)
    assert shortest_dist(line, 0, m) == m
    square = build_grid(2, 2)
    assert shortest_dist(square, 0, 3) == 2  # v1 to v4 takes two steps


def brute_force_dist(graph, s, t, max_len):
    """Independent oracle: expand all walks of bounded length."""
    frontier = {s}
    for steps in range(max_len + 1):
        if t in frontier:
            return steps
        frontier = {u for v in frontier for u in graph.adjacency[v]}
    return None


def test_shortest_dist_around_blocked_center():
    g = build_grid(3, 3, {(1, 1)})
    # corner-to-opposite-corner on the ring; oracle enumerates short walks
    corner, opposite = 0, g.vertex_count - 1
    assert brute_force_dist(g, corner, opposite, 6) == 4
    assert shortest_dist(g, corner, opposite) == 4


def random_connected_graph(rng, n):
    edges = [(rng.randrange(i), i) for i in range(1, n)]  # random spanning tree
    for _ in range(n):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.append((min(u, v), max(u, v)))
    return build_graph(n, edges)


def test_distance_symmetry_and_triangle_inequality():
    rng = random.Random(7)
    for _ in range(20):
        g = random_connected_graph(rng, rng.randint(2, 9))
        n = g.vertex_count
        for _ in range(15):
            u, v, w = (rng.randrange(n) for _ in range(3))
            assert shortest_dist(g, u, v) == shortest_dist(g, v, u)
            assert shortest_dist(g, u, w) <= shortest_dist(g, u, v) + shortest_dist(g, v, w)
        assert all(shortest_dist(g, v, v) == 0 for v in range(n))


def test_open_grid_distance_is_manhattan():
    rng = random.Random(3)
    grid = GridMap(5, 6, frozenset())
    g = grid.to_graph()
    for _ in range(30):
        a = (rng.randrange(5), rng.randrange(6))
        b = (rng.randrange(5), rng.randrange(6))
        manhattan = abs(a[0] - b[0]) + abs(a[1] - b[1])
        assert shortest_dist(g, grid.vertex_of(*a), grid.vertex_of(*b)) == manhattan


def test_shortest_path_lex_prefers_smaller_ids():
    g = build_grid(2, 2)
    assert shortest_path_lex(g, 0, 3) == (0, 1, 3)
    assert shortest_path_lex(g, 3, 0) == (3, 1, 0)


def test_map_roundtrip_and_errors():
    grid = GridMap(2, 3, frozenset({(0, 1)}))
    text = dump_map(grid)
    assert load_map(text) == grid
    with pytest.raises(ParseError):
        load_map("height 2\nwidth 3\nmap\n..\n...")  # short row
    with pytest.raises(ParseError):
        load_map("h 2\nwidth 3\nmap\n...\n...")
    with pytest.raises(ParseError):
        load_map("height 2\nwidth 3\nmap\n..x\n...")


def test_graph_roundtrip_and_errors():
    g = build_graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert load_graph(dump_graph(g)).adjacency == g.adjacency
    with pytest.raises(ParseError):
        load_graph("vertices two\n0 1")
    with pytest.raises(ParseError):
        load_graph("vertices 2\n0 1 2")
