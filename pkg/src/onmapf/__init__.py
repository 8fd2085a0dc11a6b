"""Online multi-agent path finding at desk scale.

Agents appear over time at start vertices, must reach goals collision-free,
and disappear on arrival. The package provides the instance model, exact
single-agent and joint planners, the online execution loop with its
controllability modes and rationalization, adversarial instance generators,
and a benchmark CLI (``onmapf``).
"""

from .adversary import (
    LineCosts,
    RandomSpec,
    ReductionOutput,
    SatInstance,
    TwoByTwoAdversary,
    decode_assignment,
    gen_2x2_adversary,
    gen_line,
    gen_random,
    line_closed_forms,
    parse_dimacs,
    reduce_sat,
    satisfies,
)
from .core import (
    Agent,
    Conflict,
    Metrics,
    OnlineInstance,
    Path,
    Plan,
    RatioReport,
    ReleaseGroup,
    detect_conflicts,
    evaluate,
    is_rational_at,
    occupancy,
    partition_by_release,
    rationality_bounds,
    validate_path,
)
from .errors import (
    BudgetExhausted,
    DisconnectedWorld,
    EmptyWorld,
    InvalidEdge,
    MalformedSat,
    NonIntegerResult,
    NotMakespanThree,
    OddM,
    OnlineMapfError,
    ParseError,
    ProtocolViolation,
    UnplannedAgent,
)
from .online import (
    CustomContext,
    InstanceSource,
    OnlinePolicy,
    RevealSource,
    SimulationTrace,
    Snapshot,
    check_global_bounds,
    custom_policy,
    opt_rational,
    rationalize_wrap,
    run,
    sequence_policy,
    sequence_step,
)
from .search import (
    DynamicObstacleSet,
    JointTask,
    SearchLimits,
    build_obstacles,
    joint_plan,
    offline_optimal,
    plan_min_arrival,
)
from .world import (
    Graph,
    GridMap,
    build_graph,
    build_grid,
    shortest_dist,
    shortest_path_lex,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
