"""Release-time execution loop, controllability modes, and rationalization.

An online run consumes reveal events from a :class:`RevealSource` (a fixed
instance or an adaptive adversary), plans at each release time under the
policy's controllability mode, and records a committed-plan snapshot after
every event. Commitment semantics:

* ``new-single``: each newly revealed agent is planned alone, in id order,
  against all previously committed paths as dynamic obstacles; never replans.
* ``new``: the whole release group is planned jointly against the committed
  paths as dynamic obstacles; never replans.
* ``all``: every revealed agent's future is replanned jointly. Executed
  prefixes are frozen: an agent in the graph is pinned to its current
  position, an agent that already arrived keeps its path, and any agent still
  off the graph (including one whose committed start lies in the future) may
  be rescheduled freely from the current time on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import core
from .core import (
    Agent,
    Metrics,
    OnlineInstance,
    Path,
    Plan,
    evaluate,
    is_rational_at,
    partition_by_release,
    rationality_bounds,
)
from .errors import ProtocolViolation
from .search import (
    DEFAULT_LIMITS,
    JointTask,
    SearchLimits,
    build_obstacles,
    joint_plan,
    offline_optimal,
    plan_min_arrival,
)
from .world import Graph, shortest_dist, shortest_path_lex

MODES = ("new-single", "new", "all")
OBJECTIVES = ("flowtime", "makespan")


@dataclass(frozen=True)
class OnlinePolicy:
    """What to plan for at each release time and how well.

    ``planner`` is one of ``sequence`` (chain agents one after another),
    ``opt-rational`` (optimal cost for the controllable set, needs
    ``objective``), or ``custom`` (arbitrary hook producing the new group's
    paths). ``rationalized`` adds the fallback that keeps every snapshot
    within the per-release-time flowtime/makespan ceilings.
    """

    mode: str
    planner: str
    objective: str | None = None
    custom: object = None
    rationalized: bool = False
    label: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.planner == "sequence":
            if self.mode != "new-single":
                raise ValueError("the sequence planner plans one agent at a time")
        elif self.planner == "opt-rational":
            if self.objective not in OBJECTIVES:
                raise ValueError("opt-rational needs objective flowtime or makespan")
        elif self.planner == "custom":
            if not callable(self.custom):
                raise ValueError("custom policy needs a callable hook")
            if self.mode == "all":
                raise ValueError("custom hooks plan newly revealed agents only")
        else:
            raise ValueError(f"unknown planner {self.planner!r}")

    @property
    def name(self) -> str:
        if self.label:
            base = self.label
        elif self.planner == "sequence":
            base = "sequence"
        else:
            base = f"{self.planner}({self.mode}:{self.objective})"
        return base + ("+rationalized" if self.rationalized else "")


def sequence_policy() -> OnlinePolicy:
    return OnlinePolicy(mode="new-single", planner="sequence")


def opt_rational(mode: str, objective: str) -> OnlinePolicy:
    return OnlinePolicy(mode=mode, planner="opt-rational", objective=objective)


def custom_policy(hook, mode: str = "new", label: str = "custom") -> OnlinePolicy:
    return OnlinePolicy(mode=mode, planner="custom", custom=hook, label=label)


def rationalize_wrap(policy: OnlinePolicy) -> OnlinePolicy:
    """Same policy, but guaranteed to satisfy the rationality bounds at every
    release time: any violating computation is replaced by sequential routing
    of the new group after the previously committed makespan."""
    return replace(policy, rationalized=True)


def wasteful_policy() -> OnlinePolicy:
    """Deliberately irrational: routes each group sequentially but pads the
    first agent with one more wait than the flowtime ceiling allows, so the
    unwrapped policy violates the bounds at every release time."""

    def hook(ctx: "CustomContext") -> Plan:
        inst = ctx.instance
        slack = inst.m * sum(inst.dist(i) for i in range(1, inst.m + 1)) + 1
        chain = max((p.arrival_time for p in ctx.committed.values()), default=0)
        chain = max(chain, ctx.time)
        paths: Plan = {}
        for idx, agent in enumerate(ctx.new_agents):
            route = shortest_path_lex(ctx.graph, agent.start, agent.goal)
            if idx == 0:
                route = (route[0],) * slack + route
            path = Path(max(chain, agent.release), route)
            paths[agent.id] = path
            chain = path.arrival_time
        return paths

    return custom_policy(hook, mode="new", label="wasteful")


def replay_policy(plan: Plan, label: str = "replay-optimal") -> OnlinePolicy:
    """Irrational-but-good: replays a precomputed plan (typically the
    full-knowledge optimum) one agent at a time as the agents are revealed.
    No online algorithm could produce it without clairvoyance."""

    def hook(ctx: "CustomContext") -> Plan:
        return {agent.id: plan[agent.id] for agent in ctx.new_agents}

    return custom_policy(hook, mode="new-single", label=label)


@dataclass(frozen=True)
class CustomContext:
    """What a custom planning hook gets to look at."""

    graph: Graph
    time: int
    new_agents: tuple[Agent, ...]
    committed: Plan
    instance: OnlineInstance


class RevealSource:
    """Sequential source of release events.

    ``next_event`` yields ``(release_time, agents)`` or None when exhausted;
    after planning, the loop reports the committed plan via ``observe`` so
    adaptive sources can choose future reveals.
    """

    def graph(self) -> Graph:
        raise NotImplementedError

    def next_event(self):
        raise NotImplementedError

    def observe(self, time: int, plan: Plan) -> None:  # noqa: ARG002 - default sink
        return None


class InstanceSource(RevealSource):
    """Replays a fixed instance's release groups."""

    def __init__(self, instance: OnlineInstance):
        self.instance = instance
        self._groups = partition_by_release(instance)
        self._next = 0

    def graph(self) -> Graph:
        return self.instance.graph

    def next_event(self):
        if self._next >= len(self._groups):
            return None
        group = self._groups[self._next]
        self._next += 1
        return group.time, [self.instance.agent(i) for i in group.agent_ids]


@dataclass
class Snapshot:
    """Committed plan right after one release event, plus its bound checks."""

    k: int
    time: int
    plan: Plan
    flow_ok: bool
    make_ok: bool
    fallback: bool


@dataclass
class SimulationTrace:
    policy: OnlinePolicy
    instance: OnlineInstance
    snapshots: list[Snapshot] = field(default_factory=list)
    plan: Plan = field(default_factory=dict)
    metrics: Metrics | None = None
    conflicts: list = field(default_factory=list)


def sequence_step(prev_arrival: int, agent: Agent, graph: Graph) -> Path:
    """One step of the sequential baseline: start once the predecessor has
    arrived (or at release), walk a shortest path without waiting."""
    start = max(agent.release, prev_arrival)
    return Path(start, shortest_path_lex(graph, agent.start, agent.goal))


def run(source: RevealSource, policy: OnlinePolicy, limits: SearchLimits | None = None) -> SimulationTrace:
    """Drive the policy over all reveal events and return the full trace."""
    if limits is None:
        limits = DEFAULT_LIMITS
    graph = source.graph()
    committed: Plan = {}
    revealed: list[Agent] = []
    trace_snapshots: list[Snapshot] = []
    k = 0
    last_time = -1

    while True:
        event = source.next_event()
        if event is None:
            break
        time_k, new_agents = event
        if time_k <= last_time:
            raise ProtocolViolation("release events must have increasing times")
        last_time = time_k
        new_agents = sorted(new_agents, key=lambda a: a.id)
        for agent in new_agents:
            if agent.id != len(revealed) + 1:
                raise ProtocolViolation(f"expected agent {len(revealed) + 1}, got {agent.id}")
            if agent.release != time_k:
                raise ProtocolViolation("revealed agent's release differs from event time")
            revealed.append(agent)
        k += 1
        inst_now = OnlineInstance(graph, tuple(revealed))
        before = dict(committed)
        prev_makespan = max((p.arrival_time for p in before.values()), default=0)

        _plan_event(committed, graph, inst_now, new_agents, time_k, policy, limits, prev_makespan)

        fallback = False
        if policy.rationalized and policy.mode != "new-single":
            violated = not is_rational_at(committed, inst_now, k)
            if not violated and policy.planner == "custom":
                # A hook may emit paths that clash with the commitments; that
                # is just as much a violation as busting the cost ceilings.
                violated = bool(core.detect_conflicts(committed, inst_now))
            if violated:
                committed.clear()
                committed.update(before)
                _route_sequentially(committed, graph, new_agents, max(time_k, prev_makespan))
                fallback = True

        revealed_ids = range(1, len(revealed) + 1)
        metrics_k = evaluate(committed, revealed_ids, inst_now)
        flow_bound, make_bound = rationality_bounds(inst_now, k)
        trace_snapshots.append(
            Snapshot(
                k,
                time_k,
                dict(committed),
                metrics_k.flowtime <= flow_bound,
                metrics_k.makespan <= make_bound,
                fallback,
            )
        )
        source.observe(time_k, dict(committed))

    instance = OnlineInstance(graph, tuple(revealed))
    metrics = evaluate(committed, range(1, len(revealed) + 1), instance)
    conflicts = core.detect_conflicts(committed, instance)
    return SimulationTrace(policy, instance, trace_snapshots, dict(committed), metrics, conflicts)


def check_global_bounds(trace: SimulationTrace, inst: OnlineInstance) -> tuple[bool, bool]:
    """Final-solution sanity bounds implied by rationality: flowtime at most
    m times the summed distances, makespan at most the last anchored bound."""
    groups = partition_by_release(inst)
    flow_bound, make_bound = rationality_bounds(inst, len(groups))
    return trace.metrics.flowtime <= flow_bound, trace.metrics.makespan <= make_bound


# ---------------------------------------------------------------------------
# per-event planning


def _plan_event(committed, graph, inst_now, new_agents, time_k, policy, limits, prev_makespan):
    if policy.planner == "sequence":
        _plan_single_agents(committed, graph, inst_now, new_agents, policy, limits, "sequence")
    elif policy.planner == "custom":
        _plan_custom(committed, graph, inst_now, new_agents, time_k, policy)
    elif policy.mode == "new-single":
        _plan_single_agents(committed, graph, inst_now, new_agents, policy, limits, "min-arrival")
    elif policy.mode == "new":
        obstacles = build_obstacles(committed)
        sub = offline_optimal(
            graph,
            new_agents,
            frozen=obstacles,
            objective=policy.objective,
            limits=limits,
            start_time=time_k,
            fixed_makespan=prev_makespan,
        )
        committed.update(sub)
    else:
        _replan_all(committed, graph, inst_now, new_agents, time_k, policy, limits, prev_makespan)


def _plan_single_agents(committed, graph, inst_now, new_agents, policy, limits, kind):
    """Plan newly revealed agents one at a time in id order, treating every
    already-planned agent as a dynamic obstacle."""
    for agent in new_agents:
        prev_arrival = max((p.arrival_time for p in committed.values()), default=0)
        if kind == "sequence":
            path = sequence_step(prev_arrival, agent, graph)
        else:
            obstacles = build_obstacles(committed)
            path = plan_min_arrival(graph, agent, obstacles, agent.release, limits)
        if policy.rationalized:
            path = _cap_single_path(path, agent, graph, prev_arrival, committed)
        committed[agent.id] = path


def _cap_single_path(path, agent, graph, prev_arrival, committed):
    """Per-agent rationalization: a candidate may not arrive later than the
    sequential route would, and must fit the commitments; otherwise that
    route (which starts after every committed arrival) replaces it."""
    dist = shortest_dist(graph, agent.start, agent.goal)
    limit = max(agent.release, prev_arrival) + dist
    if path.arrival_time > limit or _collides(path, build_obstacles(committed)):
        return sequence_step(prev_arrival, agent, graph)
    return path


def _collides(path, obstacles) -> bool:
    for offset, v in enumerate(path.vertices[:-1]):
        if not obstacles.vertex_free(v, path.start_time + offset):
            return True
    return any(not obstacles.swap_free(u, v, t) for u, v, t in path.moves())


def _plan_custom(committed, graph, inst_now, new_agents, time_k, policy):
    ctx = CustomContext(graph, time_k, tuple(new_agents), dict(committed), inst_now)
    produced = policy.custom(ctx)
    new_ids = {a.id for a in new_agents}
    if set(produced) != new_ids:
        raise ValueError("custom hook must return exactly the new agents' paths")
    for agent in new_agents:
        path = produced[agent.id]
        core.validate_path(path, agent, graph)
        if policy.rationalized and policy.mode == "new-single":
            prev_arrival = max((p.arrival_time for p in committed.values()), default=0)
            path = _cap_single_path(path, agent, graph, prev_arrival, committed)
        committed[agent.id] = path


def _route_sequentially(committed, graph, agents, start_at):
    """SEQUENCE-style fallback: route the group one agent at a time starting
    no earlier than ``start_at`` (the previously committed makespan)."""
    chain = start_at
    for agent in agents:
        path = Path(max(chain, agent.release), shortest_path_lex(graph, agent.start, agent.goal))
        committed[agent.id] = path
        chain = path.arrival_time


def _replan_all(committed, graph, inst_now, new_agents, time_k, policy, limits, prev_makespan):
    """Replan every revealed agent's future from time_k on."""
    tasks = []
    prefixes = {}
    fixed_makespan = 0
    incumbent_arrivals = {}
    for aid, path in committed.items():
        agent = inst_now.agent(aid)
        if path.arrival_time <= time_k:
            fixed_makespan = max(fixed_makespan, path.arrival_time)
        elif path.start_time <= time_k:
            tasks.append(JointTask(aid, agent.goal, agent.release, current=path.position(time_k)))
            prefixes[aid] = path
            incumbent_arrivals[aid] = path.arrival_time
        else:
            tasks.append(JointTask(aid, agent.goal, agent.release, entry=agent.start))
            incumbent_arrivals[aid] = path.arrival_time
    for agent in new_agents:
        tasks.append(JointTask(agent.id, agent.goal, agent.release, entry=agent.start))
    # Incumbent continuation: keep old futures, chain the new group after the
    # committed makespan. Its cost is a sound upper bound for the replan.
    chain = max(time_k, prev_makespan)
    for agent in new_agents:
        chain += shortest_dist(graph, agent.start, agent.goal)
        incumbent_arrivals[agent.id] = chain
    if policy.objective == "flowtime":
        upper = sum(
            incumbent_arrivals[t.agent_id] - max(t.release, time_k) for t in tasks
        )
    else:
        upper = max([fixed_makespan] + list(incumbent_arrivals.values()))

    sub = joint_plan(
        graph,
        tasks,
        policy.objective,
        start_time=time_k,
        limits=limits,
        upper_bound=upper,
        fixed_makespan=fixed_makespan,
    )
    for aid, suffix in sub.items():
        old = prefixes.get(aid)
        if old is None:
            committed[aid] = suffix
        else:
            keep = old.vertices[: time_k - old.start_time]
            committed[aid] = Path(old.start_time, keep + suffix.vertices)
