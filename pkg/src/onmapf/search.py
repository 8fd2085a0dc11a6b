"""Single-agent space-time search and an exact joint planner.

``plan_min_arrival`` is a space-time A* against a reservation table: states are
(vertex, time) plus an off-graph chain that lets an agent delay its entry
arbitrarily long. ``offline_optimal`` runs A* with operator decomposition over
joint configurations: within one time step the agents are advanced one at a
time, which keeps the branching factor per node at the single-agent level.

Both searches are exact and fully deterministic. The single-agent search
breaks ties by fewest waits, then by the lexicographically smallest vertex
sequence; the joint search breaks ties by the secondary objective (makespan
under flowtime and vice versa), then by the lexicographically smallest
configuration history. Heuristics are exact graph distances, so reported
optima are exact, not approximate.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .core import Agent, Path, Plan
from .errors import BudgetExhausted
from .world import Graph

PENDING = -1  # joint-state token: revealed (or not) but not yet in the graph
DONE = -2  # joint-state token: arrived and removed


@dataclass(frozen=True)
class SearchLimits:
    """Caps for a single search call.

    ``horizon_bound`` of None derives a completeness bound from the inputs
    (obstacle horizon + vertex count + latest start), which always admits a
    plan because every obstacle eventually disappears.
    """

    horizon_bound: int | None = None
    node_budget: int = 10_000_000


DEFAULT_LIMITS = SearchLimits()


class DynamicObstacleSet:
    """Time-indexed vertex and edge reservations derived from committed paths.

    A path reserves its vertex for every step it actually occupies it, i.e.
    [start, arrival), and reserves the edge of every move, including the final
    move into the goal, for the step it departs on.
    """

    def __init__(self):
        self.vertex_reservations: dict[tuple[int, int], int] = {}
        self.edge_reservations: dict[tuple[tuple[int, int], int], int] = {}
        self.horizon = 0

    def add_path(self, agent_id: int, path: Path) -> None:
        for offset in range(len(path.vertices) - 1):
            t = path.start_time + offset
            self.vertex_reservations[(path.vertices[offset], t)] = agent_id
            self.horizon = max(self.horizon, t + 1)
        for u, v, t in path.moves():
            self.edge_reservations[((u, v), t)] = agent_id
            self.horizon = max(self.horizon, t + 1)

    def vertex_free(self, v: int, t: int) -> bool:
        return (v, t) not in self.vertex_reservations

    def swap_free(self, u: int, v: int, depart: int) -> bool:
        """True unless some reserved move traverses v->u while we go u->v."""
        return ((v, u), depart) not in self.edge_reservations

    def __len__(self):
        return len(self.vertex_reservations) + len(self.edge_reservations)


def build_obstacles(plan: Plan, excluded=(), inst=None) -> DynamicObstacleSet:
    """Reservations for every planned agent not in ``excluded``."""
    obstacles = DynamicObstacleSet()
    excluded = set(excluded)
    for agent_id in sorted(plan):
        if agent_id not in excluded:
            obstacles.add_path(agent_id, plan[agent_id])
    return obstacles


# ---------------------------------------------------------------------------
# single-agent space-time A*


def plan_min_arrival(
    graph: Graph,
    agent: Agent,
    obstacles: DynamicObstacleSet | None = None,
    earliest_start: int | None = None,
    limits: SearchLimits | None = None,
) -> Path:
    """Earliest-arrival path for one agent against a set of moving obstacles.

    The agent may stay off the graph as long as it likes before entering at
    its start vertex, so a plan always exists: worst case it enters after all
    reservations have expired and walks a shortest path.
    """
    if obstacles is None:
        obstacles = DynamicObstacleSet()
    if earliest_start is None:
        earliest_start = agent.release
    if earliest_start < agent.release:
        raise ValueError("earliest_start must not precede the agent's release")
    if limits is None:
        limits = DEFAULT_LIMITS
    start, goal = agent.start, agent.goal
    dist_to_goal = graph.dist_from(goal)
    horizon = limits.horizon_bound
    if horizon is None:
        horizon = obstacles.horizon + graph.vertex_count + earliest_start + 1

    # Heap keys are (arrival lower bound, waits so far, vertex sequence so
    # far); payload marks off-graph / in-graph / finished nodes. The first
    # finished node popped is the optimum under exactly that ordering.
    OFF, NODE, GOAL = 0, 1, 2
    heap = []
    heapq.heappush(heap, (earliest_start + 1 + dist_to_goal[start], 0, (), OFF, earliest_start, -1))
    if obstacles.vertex_free(start, earliest_start):
        heapq.heappush(
            heap,
            (earliest_start + dist_to_goal[start], 0, (start,), NODE, earliest_start, earliest_start),
        )
    closed = set()
    pops = 0

    while heap:
        f, waits, vseq, kind, t, started = heapq.heappop(heap)
        pops += 1
        if pops > limits.node_budget:
            raise BudgetExhausted(f"single-agent search exceeded {limits.node_budget} pops")
        if kind == GOAL:
            return Path(started, vseq)
        key = (-1, t, -1) if kind == OFF else (vseq[-1], t, started)
        if key in closed:
            continue
        closed.add(key)
        nt = t + 1
        if kind == OFF:
            if nt + dist_to_goal[start] <= horizon:
                heapq.heappush(heap, (nt + 1 + dist_to_goal[start], 0, (), OFF, nt, -1))
                if obstacles.vertex_free(start, nt):
                    heapq.heappush(heap, (nt + dist_to_goal[start], 0, (start,), NODE, nt, nt))
            continue
        if nt > horizon:
            continue
        v = vseq[-1]
        if obstacles.vertex_free(v, nt):
            heapq.heappush(heap, (nt + dist_to_goal[v], waits + 1, vseq + (v,), NODE, nt, started))
        for u in graph.adjacency[v]:
            if not obstacles.swap_free(v, u, t):
                continue
            if u == goal:
                heapq.heappush(heap, (nt, waits, vseq + (u,), GOAL, nt, started))
            elif obstacles.vertex_free(u, nt):
                heapq.heappush(heap, (nt + dist_to_goal[u], waits, vseq + (u,), NODE, nt, started))

    raise BudgetExhausted(f"no plan within horizon {horizon}; bound too tight")


# ---------------------------------------------------------------------------
# exact joint planning


@dataclass(frozen=True)
class JointTask:
    """One agent's view inside a joint search.

    Either ``entry`` is set (the agent still has to appear at that vertex, no
    earlier than ``release``) or ``current`` is set (the agent sits at that
    vertex when the plan starts and only its future is open).
    """

    agent_id: int
    goal: int
    release: int
    entry: int | None = None
    current: int | None = None


def offline_optimal(
    graph: Graph,
    agents,
    frozen: DynamicObstacleSet | None = None,
    objective: str = "flowtime",
    limits: SearchLimits | None = None,
    *,
    start_time: int | None = None,
    fixed_makespan: int = 0,
) -> Plan:
    """Exact minimum-cost joint plan for a set of not-yet-started agents.

    Every agent may start at any time at or after its release; the plan also
    avoids all ``frozen`` reservations. ``fixed_makespan`` folds the arrival
    times of agents outside the search into the makespan objective (used when
    previously planned agents count toward the measured cost). Intended for
    small agent sets; exponential in the number of agents.
    """
    agents = sorted(agents, key=lambda a: a.id)
    if not agents:
        return {}
    tasks = [JointTask(a.id, a.goal, a.release, entry=a.start) for a in agents]
    if start_time is None:
        start_time = min(a.release for a in agents)
    return joint_plan(
        graph,
        tasks,
        objective,
        frozen=frozen,
        start_time=start_time,
        limits=limits,
        fixed_makespan=fixed_makespan,
    )


def joint_plan(
    graph: Graph,
    tasks: list[JointTask],
    objective: str,
    *,
    frozen: DynamicObstacleSet | None = None,
    start_time: int,
    limits: SearchLimits | None = None,
    upper_bound: int | None = None,
    fixed_makespan: int = 0,
) -> Plan:
    """Exact joint plan over explicit tasks; see ``offline_optimal``.

    Returns one path per task; paths of tasks given by ``current`` start at
    ``start_time`` at that vertex (callers splice their executed prefixes back
    on). ``upper_bound`` is an optional cost of a known feasible plan in the
    same units as the objective; it prunes but never changes the optimum. When
    some task is already in the graph, callers should supply it, because the
    default completeness horizon assumes agents can outwait all reservations.

    Flowtime is minimized by one search keyed (flowtime, makespan, history).
    Makespan needs two passes: a max-composed cost has no clean per-state
    dominance for its tie-breakers, so the first pass finds the exact optimal
    makespan and the second minimizes flowtime under that makespan as a hard
    cap (every surviving plan then meets it exactly).
    """
    if objective not in ("flowtime", "makespan"):
        raise ValueError(f"unknown objective {objective!r}")
    if not tasks:
        return {}
    if frozen is None:
        frozen = DynamicObstacleSet()
    if limits is None:
        limits = DEFAULT_LIMITS
    tasks = sorted(tasks, key=lambda task: task.agent_id)

    if objective == "flowtime":
        _, plan = _od_search(
            graph, tasks, "flowtime", frozen, start_time, limits, upper_bound, fixed_makespan, None
        )
        return plan
    best_make, _ = _od_search(
        graph, tasks, "makespan", frozen, start_time, limits, upper_bound, fixed_makespan, None
    )
    _, plan = _od_search(
        graph, tasks, "flowtime", frozen, start_time, limits, None, fixed_makespan, best_make
    )
    return plan


def _od_search(graph, tasks, primary, frozen, t0, limits, upper_bound, fixed_makespan, make_cap):
    """One operator-decomposition A* pass; returns (optimal value, plan)."""
    n = len(tasks)
    dist_maps = [graph.dist_from(task.goal) for task in tasks]
    flow_primary = primary == "flowtime"

    if upper_bound is None and make_cap is None and all(t.entry is not None for t in tasks):
        upper_bound = _sequential_bound(tasks, dist_maps, frozen, t0, fixed_makespan, primary)
    horizon = limits.horizon_bound
    if horizon is None:
        latest = max([t0] + [task.release for task in tasks])
        if make_cap is not None:
            horizon = make_cap + 1
        elif upper_bound is not None:
            horizon = (latest + upper_bound + 1) if flow_primary else (upper_bound + 1)
        else:
            horizon = max(latest, frozen.horizon) + (n + 1) * graph.vertex_count + 1

    def rho(token, tau, idx):
        # Remaining-service lower bound of one agent, counted from time tau.
        if token == DONE:
            return 0
        if token == PENDING:
            d = dist_maps[idx][tasks[idx].entry]
            return 1 + d if tasks[idx].release <= tau else d
        return dist_maps[idx][token]

    def arrival_floor(token, tau, idx):
        # Earliest possible arrival time of one agent, given its position.
        if token == PENDING:
            d = dist_maps[idx][tasks[idx].entry]
            return tau + 1 + d if tasks[idx].release <= tau else tasks[idx].release + d
        return tau + dist_maps[idx][token]

    # Root configurations: agents already in the graph sit at their frozen
    # positions; every pending agent released by t0 may either enter now or
    # keep waiting off the graph.
    entry_choices = []
    base = []
    for idx, task in enumerate(tasks):
        if task.current is not None:
            base.append(task.current)
        else:
            base.append(PENDING)
            if task.release <= t0:
                entry_choices.append(idx)
    heap = []
    push_id = 0
    for mask in range(1 << len(entry_choices)):
        pos = list(base)
        ok = True
        used = {p for p in pos if p >= 0}
        for bit, idx in enumerate(entry_choices):
            if mask >> bit & 1:
                s = tasks[idx].entry
                if s in used or not frozen.vertex_free(s, t0):
                    ok = False
                    break
                used.add(s)
                pos[idx] = s
        if not ok:
            continue
        pos = tuple(pos)
        h_flow = sum(rho(pos[i], t0, i) for i in range(n))
        make_lb = fixed_makespan
        for i in range(n):
            make_lb = max(make_lb, arrival_floor(pos[i], t0, i))
        if make_cap is not None and make_lb > make_cap:
            continue
        f1, f2 = (h_flow, make_lb) if flow_primary else (make_lb, h_flow)
        if upper_bound is not None and f1 > upper_bound:
            continue
        heapq.heappush(heap, (f1, f2, pos, push_id, t0, 0, pos, 0, h_flow, make_lb, ()))
        push_id += 1

    closed = set()
    pops = 0
    while heap:
        f1, f2, hist, _, t, j, pos, g_flow, h_flow, make_lb, layer_moves = heapq.heappop(heap)
        pops += 1
        if pops > limits.node_budget:
            raise BudgetExhausted(f"joint search exceeded {limits.node_budget} pops")
        if all(p == DONE for p in pos):
            return f1, _reconstruct(hist, tasks, t0)
        key = (t, j, pos)
        if key in closed:
            continue
        closed.add(key)
        nt = t + 1
        if nt > horizon:
            continue
        task = tasks[j]
        token = pos[j]
        accrual = 1 if (task.release <= t and token != DONE) else 0
        occupied_next = [p for p in pos[:j] if p >= 0]

        options = []  # (new token, move edge or None)
        if token == DONE:
            options.append((DONE, None))
        elif token == PENDING:
            options.append((PENDING, None))
            s = task.entry
            if task.release <= nt and s not in occupied_next and frozen.vertex_free(s, nt):
                options.append((s, None))
        else:
            v = token
            if v not in occupied_next and frozen.vertex_free(v, nt):
                options.append((v, None))
            for u in graph.adjacency[v]:
                if not frozen.swap_free(v, u, t) or (u, v) in layer_moves:
                    continue
                if u == task.goal:
                    options.append((DONE, (v, u)))
                elif u not in occupied_next and frozen.vertex_free(u, nt):
                    options.append((u, (v, u)))

        for new_token, edge in options:
            g2 = g_flow + accrual
            h2 = h_flow - rho(token, t, j) + rho(new_token, nt, j)
            if token == DONE:
                m2 = make_lb
            elif new_token == DONE:
                m2 = max(make_lb, nt)
            else:
                m2 = max(make_lb, arrival_floor(new_token, nt, j))
            if make_cap is not None and m2 > make_cap:
                continue
            nf1, nf2 = (g2 + h2, m2) if flow_primary else (m2, g2 + h2)
            if upper_bound is not None and nf1 > upper_bound:
                continue
            new_pos = pos[:j] + (new_token,) + pos[j + 1:]
            if j + 1 == n:
                entry = (nf1, nf2, hist + (new_token,), push_id, nt, 0, new_pos, g2, h2, m2, ())
            else:
                moves = layer_moves + (edge,) if edge else layer_moves
                entry = (nf1, nf2, hist + (new_token,), push_id, t, j + 1, new_pos, g2, h2, m2, moves)
            heapq.heappush(heap, entry)
            push_id += 1

    raise BudgetExhausted(f"joint search found no plan within horizon {horizon}")


def _sequential_bound(tasks, dist_maps, frozen, t0, fixed_makespan, objective) -> int:
    """Cost of the trivially feasible plan: wait until every reservation has
    expired, then route the agents one at a time."""
    t_free = max(frozen.horizon, t0)
    prev_arrival = 0
    flow = 0
    make = fixed_makespan
    for idx, task in enumerate(tasks):
        start = max(task.release, t_free, prev_arrival)
        arrival = start + dist_maps[idx][task.entry]
        flow += arrival - max(task.release, t0)
        make = max(make, arrival)
        prev_arrival = arrival
    return flow if objective == "flowtime" else make


def _reconstruct(hist, tasks, t0) -> Plan:
    """Turn the flat token history back into one Path per task.

    ``hist`` holds one token per (layer, agent) in agent order; trailing
    tokens of the final partial layer are all DONE and may be missing.
    """
    n = len(tasks)
    plan: Plan = {}
    for idx, task in enumerate(tasks):
        column = [hist[q] for q in range(idx, len(hist), n)]
        entry_at = next(i for i, tok in enumerate(column) if tok >= 0)
        done_at = next(i for i, tok in enumerate(column) if tok == DONE)
        vertices = tuple(column[entry_at:done_at]) + (task.goal,)
        plan[task.agent_id] = Path(t0 + entry_at, vertices)
    return plan
