"""Energy-minimal speed scaling for precedence-constrained task graphs.

The model: each task has a fixed amount of work, tasks are pinned to
processors in a given order, and everything must finish by a common
deadline. Running a task at speed s burns power s^3, so the job is to
pick speeds (continuous, from a finite mode set, hopping between modes,
or on a uniform grid) that meet the deadline as cheaply as possible.
"""

from .continuous import (
    ContinuousModel,
    PowerProfile,
    check_constant_power,
    power_profile,
    solve_chain,
    solve_dag,
    solve_fork_join,
    solve_independent,
    solve_spg,
    solve_tree,
    spg_cost,
    tree_eq_cost,
    Elementary,
    Parallel,
    Series,
    TreeNode,
)
from .discrete import (
    ApproxResult,
    DiscreteModel,
    ExactSolution,
    IncrementalModel,
    admissible_speeds,
    approx_discrete,
    approx_incremental,
    gen_2partition,
    geometric_modes,
    round_continuous,
    solve_exact,
)
from .errors import (
    BudgetExceededError,
    CoverageError,
    CycleError,
    DegenerateDurationError,
    InfeasibleError,
    LpInfeasibleError,
    LpNumericalError,
    NoConvergenceError,
    RangeError,
    ReclaimError,
    UnsupportedError,
    WorkDeficitError,
)
from .graph import (
    ConstantSpeed,
    ExecutionGraph,
    Schedule,
    Segments,
    SolveReport,
    Task,
    asap_times,
    build_execution_graph,
    evaluate_schedule,
    instance_from_dict,
    load_instance,
    load_schedule,
    schedule_from_obj,
    schedule_to_obj,
    topological_order,
    with_asap_starts,
)
from .structure import STRUCTURES, as_chain, as_fork, as_spg, as_tree, detect_structure
from .vdd import VddModel, average_speeds, build_lp, format_lp, solve_vdd

__version__ = "0.1.0"

__all__ = [
    "ApproxResult",
    "BudgetExceededError",
    "ConstantSpeed",
    "ContinuousModel",
    "CoverageError",
    "CycleError",
    "DegenerateDurationError",
    "DiscreteModel",
    "Elementary",
    "ExactSolution",
    "ExecutionGraph",
    "IncrementalModel",
    "InfeasibleError",
    "LpInfeasibleError",
    "LpNumericalError",
    "NoConvergenceError",
    "Parallel",
    "PowerProfile",
    "RangeError",
    "ReclaimError",
    "STRUCTURES",
    "Schedule",
    "Segments",
    "Series",
    "SolveReport",
    "Task",
    "TreeNode",
    "UnsupportedError",
    "VddModel",
    "WorkDeficitError",
    "admissible_speeds",
    "approx_discrete",
    "approx_incremental",
    "asap_times",
    "as_chain",
    "as_fork",
    "as_spg",
    "as_tree",
    "average_speeds",
    "build_execution_graph",
    "build_lp",
    "check_constant_power",
    "detect_structure",
    "evaluate_schedule",
    "format_lp",
    "gen_2partition",
    "geometric_modes",
    "instance_from_dict",
    "load_instance",
    "load_schedule",
    "power_profile",
    "round_continuous",
    "schedule_from_obj",
    "schedule_to_obj",
    "solve_chain",
    "solve_dag",
    "solve_exact",
    "solve_fork_join",
    "solve_independent",
    "solve_spg",
    "solve_tree",
    "spg_cost",
    "topological_order",
    "tree_eq_cost",
    "with_asap_starts",
]
