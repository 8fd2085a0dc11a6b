"""Instance model, timed paths, collision semantics, objectives, rationality bounds.

Timing conventions used throughout the package:

* a path owns the vertices ``start_time .. arrival_time`` where
  ``arrival_time = start_time + len(vertices) - 1``;
* an agent occupies a vertex for ``t`` in ``[start_time, arrival_time - 1]``
  only. It does not exist in the graph before it starts, and it is removed the
  instant it arrives at its goal, so the arrival vertex is never occupied;
* the edge of every move, including the final move into the goal, is in use
  for its departure step. Two agents may never traverse one edge in opposite
  directions during the same step, even if one of them is arriving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, UnplannedAgent
from .world import Graph, GridMap, shortest_dist


@dataclass(frozen=True)
class Agent:
    """One transportation request: go from start to goal, known from release on."""

    id: int
    start: int
    goal: int
    release: int

    def __post_init__(self):
        if self.start == self.goal:
            raise ValueError(f"agent {self.id}: goal must differ from start")
        if self.release < 0:
            raise ValueError(f"agent {self.id}: release time must be non-negative")


@dataclass(frozen=True)
class OnlineInstance:
    """A graph plus agents sorted by non-decreasing release time, ids 1..m."""

    graph: Graph
    agents: tuple[Agent, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        for i, agent in enumerate(self.agents, start=1):
            if agent.id != i:
                raise ValueError(f"agent ids must be 1..m in order, got {agent.id} at slot {i}")
            if i > 1 and agent.release < self.agents[i - 2].release:
                raise ValueError("agents must be sorted by non-decreasing release time")
            if not (0 <= agent.start < self.graph.vertex_count):
                raise ValueError(f"agent {i}: start vertex out of range")
            if not (0 <= agent.goal < self.graph.vertex_count):
                raise ValueError(f"agent {i}: goal vertex out of range")

    @property
    def m(self) -> int:
        return len(self.agents)

    def agent(self, agent_id: int) -> Agent:
        return self.agents[agent_id - 1]

    def dist(self, agent_id: int) -> int:
        a = self.agent(agent_id)
        return shortest_dist(self.graph, a.start, a.goal)


@dataclass(frozen=True)
class ReleaseGroup:
    time: int
    agent_ids: tuple[int, ...]


def partition_by_release(inst: OnlineInstance) -> list[ReleaseGroup]:
    """Split agents into groups of equal release time, in increasing time order."""
    groups: list[ReleaseGroup] = []
    for agent in inst.agents:
        if groups and groups[-1].time == agent.release:
            groups[-1] = ReleaseGroup(agent.release, groups[-1].agent_ids + (agent.id,))
        else:
            groups.append(ReleaseGroup(agent.release, (agent.id,)))
    return groups


@dataclass(frozen=True)
class Path:
    """A timed walk: entry j of ``vertices`` is the position at start_time + j."""

    start_time: int
    vertices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if not self.vertices:
            raise ValueError("a path needs at least one vertex")

    @property
    def arrival_time(self) -> int:
        return self.start_time + len(self.vertices) - 1

    def position(self, t: int):
        """Vertex at time t for t in [start, arrival], else None."""
        if self.start_time <= t <= self.arrival_time:
            return self.vertices[t - self.start_time]
        return None

    def moves(self):
        """Yield (from, to, departure_time) for every non-wait step."""
        for j in range(len(self.vertices) - 1):
            u, v = self.vertices[j], self.vertices[j + 1]
            if u != v:
                yield u, v, self.start_time + j

    def wait_count(self) -> int:
        return sum(
            1 for j in range(len(self.vertices) - 1) if self.vertices[j] == self.vertices[j + 1]
        )


# A plan is simply a mapping agent id -> Path, possibly partial.
Plan = dict[int, Path]


def occupancy(path: Path, t: int):
    """Vertex occupied at time t, or None: agents occupy only [start, arrival-1].

    The agent is removed from the graph the moment it arrives, so the arrival
    step itself does not occupy the goal vertex.
    """
    if path.start_time <= t <= path.arrival_time - 1:
        return path.vertices[t - path.start_time]
    return None


def validate_path(path: Path, agent: Agent, graph: Graph) -> None:
    """Check a path against its agent: endpoints, release, adjacency."""
    if path.vertices[0] != agent.start:
        raise ValueError(f"agent {agent.id}: path must begin at its start vertex")
    if path.vertices[-1] != agent.goal:
        raise ValueError(f"agent {agent.id}: path must end at its goal vertex")
    if path.start_time < agent.release:
        raise ValueError(f"agent {agent.id}: path starts before its release time")
    for j in range(len(path.vertices) - 1):
        u, v = path.vertices[j], path.vertices[j + 1]
        if u != v and v not in graph.adjacency[u]:
            raise ValueError(f"agent {agent.id}: step {u}->{v} is not an edge")


@dataclass(frozen=True)
class Conflict:
    kind: str  # "vertex" or "edge"
    agents: tuple[int, int]
    time: int
    location: object  # vertex id, or (u, v) ordered by the lower agent's move


def detect_conflicts(plan: Plan, inst: OnlineInstance | None = None) -> list[Conflict]:
    """All vertex and edge collisions between the given paths.

    A vertex conflict needs both agents to actually occupy the vertex
    (arrivals do not occupy). An edge conflict is two agents traversing one
    edge in opposite directions in the same step; final moves count.
    """
    ids = sorted(plan)
    conflicts = []
    for a_pos, i in enumerate(ids):
        pi = plan[i]
        for j in ids[a_pos + 1:]:
            pj = plan[j]
            lo = max(pi.start_time, pj.start_time)
            hi = min(pi.arrival_time - 1, pj.arrival_time - 1)
            for t in range(lo, hi + 1):
                vi = occupancy(pi, t)
                if vi is not None and vi == occupancy(pj, t):
                    conflicts.append(Conflict("vertex", (i, j), t, vi))
            moves_j = {(u, v, t) for u, v, t in pj.moves()}
            for u, v, t in pi.moves():
                if (v, u, t) in moves_j:
                    conflicts.append(Conflict("edge", (i, j), t, (u, v)))
    conflicts.sort(key=lambda c: (c.time, c.agents, c.kind, str(c.location)))
    return conflicts


@dataclass(frozen=True)
class Metrics:
    flowtime: int
    makespan: int
    latency: int


def evaluate(plan: Plan, agent_ids, inst: OnlineInstance) -> Metrics:
    """Flowtime, makespan and latency of the plan restricted to the given agents."""
    agent_ids = sorted(agent_ids)
    if not agent_ids:
        raise ValueError("cannot evaluate an empty agent set")
    flowtime = 0
    makespan = 0
    dist_sum = 0
    for i in agent_ids:
        path = plan.get(i)
        if path is None:
            raise UnplannedAgent(f"agent {i} has no path")
        agent = inst.agent(i)
        flowtime += path.arrival_time - agent.release
        makespan = max(makespan, path.arrival_time)
        dist_sum += inst.dist(i)
    return Metrics(flowtime, makespan, flowtime - dist_sum)


def rationality_bounds(inst: OnlineInstance, k: int) -> tuple[int, int]:
    """Per-release-time flowtime and makespan ceilings a sensible algorithm
    never exceeds (routing everyone one at a time already meets them).

    For the k-th release group over revealed agents 1..m_k:
    flow bound = m_k * sum of their shortest distances; make bound is anchored
    at the last agent whose release outruns the running one-at-a-time chain,
    i.e. it equals the makespan sequential routing would produce. Anchoring
    at a fixed-baseline candidate instead undercuts sequential routing itself
    whenever several releases outrun the chain.
    """
    groups = partition_by_release(inst)
    if not (1 <= k <= len(groups)):
        raise ValueError(f"group index {k} out of range 1..{len(groups)}")
    m_k = groups[k - 1].agent_ids[-1]  # revealed agents are exactly ids 1..m_k
    dists = [inst.dist(i) for i in range(1, m_k + 1)]
    flow_bound = m_k * sum(dists)

    n_k = 1
    chain = 0  # arrival of the sequential chain so far
    for n in range(1, m_k + 1):
        release = inst.agent(n).release
        if release > chain:
            n_k = n
            chain = release
        chain += dists[n - 1]
    make_bound = inst.agent(n_k).release + sum(dists[n_k - 1:])
    assert make_bound == chain
    return flow_bound, make_bound


def is_rational_at(plan: Plan, inst: OnlineInstance, k: int) -> bool:
    """Does the plan for all agents revealed by group k meet both bounds?"""
    groups = partition_by_release(inst)
    revealed = range(1, groups[k - 1].agent_ids[-1] + 1)
    metrics = evaluate(plan, revealed, inst)
    flow_bound, make_bound = rationality_bounds(inst, k)
    return metrics.flowtime <= flow_bound and metrics.makespan <= make_bound


@dataclass(frozen=True)
class RatioReport:
    """Empirical cost ratio of an online run against an optimal-cost baseline."""

    algorithm_cost: int
    optimal_cost: int
    ratio: object  # Fraction, or math.inf when optimal_cost == 0 < algorithm_cost
    additive_gap: int

    @staticmethod
    def of(algorithm_cost: int, optimal_cost: int) -> "RatioReport":
        if optimal_cost > 0:
            ratio = Fraction(algorithm_cost, optimal_cost)
        elif algorithm_cost > 0:
            ratio = math.inf
        else:
            ratio = Fraction(1)
        return RatioReport(algorithm_cost, optimal_cost, ratio, algorithm_cost - optimal_cost)


# ---------------------------------------------------------------------------
# scenario and plan text formats


def load_scenario(text: str, *, grid: GridMap | None = None, graph: Graph | None = None,
                  source: str = "<scen>") -> list[Agent]:
    """Parse agents from scenario text.

    Grid flavor lines are ``id release start_row start_col goal_row goal_col``
    (needs ``grid``); general-graph lines are ``id release start goal``
    (needs ``graph``). ``#`` starts a comment.
    """
    agents = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 6:
            if grid is None:
                raise ParseError("grid scenario line but no grid map given", source, lineno)
            aid, rel, sr, sc, gr, gc = (_int(p, source, lineno) for p in parts)
            try:
                start = grid.vertex_of(sr, sc)
                goal = grid.vertex_of(gr, gc)
            except Exception as exc:
                raise ParseError(str(exc), source, lineno) from None
        elif len(parts) == 4:
            if graph is None:
                raise ParseError("graph scenario line but no graph given", source, lineno)
            aid, rel, start, goal = (_int(p, source, lineno) for p in parts)
            if not (0 <= start < graph.vertex_count and 0 <= goal < graph.vertex_count):
                raise ParseError("vertex out of range", source, lineno)
        else:
            raise ParseError("expected 4 or 6 whitespace-separated fields", source, lineno)
        if aid != len(agents) + 1:
            raise ParseError(f"agent ids must be 1..m in order, got {aid}", source, lineno)
        if agents and rel < agents[-1].release:
            raise ParseError("release times must be non-decreasing", source, lineno)
        try:
            agents.append(Agent(aid, start, goal, rel))
        except ValueError as exc:
            raise ParseError(str(exc), source, lineno) from None
    return agents


def dump_scenario(agents, grid: GridMap | None = None) -> str:
    lines = []
    for a in agents:
        if grid is not None:
            sr, sc = grid.cell_of(a.start)
            gr, gc = grid.cell_of(a.goal)
            lines.append(f"{a.id} {a.release} {sr} {sc} {gr} {gc}")
        else:
            lines.append(f"{a.id} {a.release} {a.start} {a.goal}")
    return "\n".join(lines) + "\n"


def plan_to_csv(plan: Plan, inst: OnlineInstance) -> str:
    """CSV export: agent,start_time,arrival_time,service_time,path."""
    rows = ["agent,start_time,arrival_time,service_time,path"]
    for i in sorted(plan):
        path = plan[i]
        service = path.arrival_time - inst.agent(i).release
        rows.append(
            f"{i},{path.start_time},{path.arrival_time},{service},"
            + ";".join(str(v) for v in path.vertices)
        )
    return "\n".join(rows) + "\n"


def _int(token: str, source: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", source, lineno) from None
