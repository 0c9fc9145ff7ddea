"""Finite-speed models: exact search, rounding schemes, hard instances.

Choosing one mode per task is NP-hard even on a chain with two modes, so
the exact solver is a pruned exhaustive search meant for desk-scale
instances. The approximation pipelines trade that exponent for a
certified multiplicative bound: solve the instance under a geometric
mode-hopping relaxation, then round each task's average speed up to the
model's grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

from .errors import BudgetExceededError, InfeasibleError, RangeError
from .graph import (
    REL_TOL,
    ConstantSpeed,
    ExecutionGraph,
    Schedule,
    SolveReport,
    Task,
    asap_times,
    build_execution_graph,
    evaluate_schedule,
    topological_order,
)
from .vdd import VddModel, average_speeds, solve_vdd

log = logging.getLogger("reclaim.discrete")

DEFAULT_NODE_BUDGET = 10_000_000


@dataclass(frozen=True)
class DiscreteModel:
    """A finite set of modes, strictly ascending."""

    modes: tuple[float, ...]

    def __post_init__(self):
        if not self.modes:
            raise ValueError("at least one mode is required")
        if any(not s > 0 for s in self.modes):
            raise ValueError(f"modes must be positive: {self.modes}")
        if any(a >= b for a, b in zip(self.modes, self.modes[1:])):
            raise ValueError(f"modes must be strictly ascending: {self.modes}")

    @cached_property
    def alpha(self) -> float:
        """Largest gap between adjacent modes; 0 for a single mode."""
        if len(self.modes) == 1:
            return 0.0
        return max(b - a for a, b in zip(self.modes, self.modes[1:]))


@dataclass(frozen=True)
class IncrementalModel:
    """Arithmetic speed grid: s_min, s_min + delta, ... capped at s_max.

    s_max itself is admissible only when it lies on the grid.
    """

    s_min: float
    s_max: float
    delta: float

    def __post_init__(self):
        if not self.s_min > 0:
            raise ValueError(f"s_min must be positive, got {self.s_min}")
        if self.s_max < self.s_min:
            raise ValueError(f"s_max {self.s_max} below s_min {self.s_min}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


SpeedModel = Union[DiscreteModel, IncrementalModel]


def admissible_speeds(model: SpeedModel) -> list[float]:
    """Every speed the model allows, ascending."""
    if isinstance(model, DiscreteModel):
        return list(model.modes)
    steps = int(math.floor((model.s_max - model.s_min) / model.delta + 1e-9))
    top = model.s_min + steps * model.delta
    if top > model.s_max * (1 + 1e-12):
        steps -= 1
    return [model.s_min + i * model.delta for i in range(steps + 1)]


@dataclass(frozen=True)
class ExactSolution:
    speeds: dict[str, float]
    energy: float
    makespan: float
    nodes: int


def solve_exact(
    g: ExecutionGraph, model: SpeedModel, node_budget: int = DEFAULT_NODE_BUDGET
) -> ExactSolution:
    """Globally optimal one-mode-per-task assignment by branch and bound.

    Tasks are fixed in topological order and speeds tried ascending, so
    the first optimum reached is the lexicographically smallest one; the
    ties-included pruning rule then keeps exactly that incumbent. Bounds:
    a branch dies when even finishing the suffix at the fastest mode
    misses the deadline, or when its energy plus the suffix's floor (all
    remaining work at the slowest mode) cannot beat the incumbent.
    """
    speeds = admissible_speeds(model)
    order = topological_order(g)
    n = len(order)
    cost = [g.costs[tid] for tid in order]
    pos = {tid: i for i, tid in enumerate(order)}
    preds: list[list[int]] = [[] for _ in range(n)]
    for u, v in g.edges:
        preds[pos[v]].append(pos[u])
    fastest = speeds[-1]
    slowest = speeds[0]
    limit = g.deadline * (1 + REL_TOL)

    completion = [0.0] * n

    def optimistic_makespan(i: int) -> float:
        # Completions fixed through position i; the rest run flat out.
        comp = completion[: i + 1] + [0.0] * (n - i - 1)
        span = max(comp[: i + 1], default=0.0)
        for j in range(i + 1, n):
            begin = max((comp[p] for p in preds[j]), default=0.0)
            comp[j] = begin + cost[j] / fastest
            if comp[j] > span:
                span = comp[j]
        return span

    if optimistic_makespan(-1) > limit:
        raise InfeasibleError(
            f"even the fastest mode {fastest:g} misses deadline {g.deadline:g}"
        )

    # Energy floor of every suffix: all remaining work at the slowest mode.
    floor = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        floor[i] = floor[i + 1] + cost[i] * slowest * slowest

    best_energy = math.inf
    best_speeds: list[float] | None = None
    best_makespan = 0.0
    chosen = [0.0] * n
    nodes = 0

    def descend(i: int, energy: float) -> None:
        nonlocal nodes, best_energy, best_speeds, best_makespan
        if i == n:
            # Bounds guarantee feasibility and strict improvement here.
            best_energy = energy
            best_speeds = chosen.copy()
            best_makespan = max(completion)
            return
        begin = max((completion[p] for p in preds[i]), default=0.0)
        for s in speeds:
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"node budget {node_budget} exhausted",
                    best=_pack(best_speeds, best_energy, best_makespan, nodes, order),
                    nodes=nodes,
                )
            extended = energy + cost[i] * s * s
            if extended + floor[i + 1] >= best_energy:
                break  # faster modes only cost more
            completion[i] = begin + cost[i] / s
            if optimistic_makespan(i) > limit:
                continue  # a faster mode may still fit
            chosen[i] = s
            descend(i + 1, extended)

    descend(0, 0.0)
    assert best_speeds is not None  # the all-fastest point was feasible
    solution = _pack(best_speeds, best_energy, best_makespan, nodes, order)
    log.info("exact: energy %.12g after %d nodes", best_energy, nodes)
    return solution


def _pack(speeds, energy, makespan, nodes, order):
    if speeds is None:
        return None
    return ExactSolution(
        speeds={tid: s for tid, s in zip(order, speeds)},
        energy=energy,
        makespan=makespan,
        nodes=nodes,
    )


# ---------------------------------------------------------------------------
# Approximation pipelines


@dataclass(frozen=True)
class ApproxResult:
    schedule: Schedule
    report: SolveReport
    bound_factor: float
    certified_upper: float


def geometric_modes(s_min: float, s_max: float, K: int) -> list[float]:
    """{s_min * (1 + 1/K)^i} for i = 0..N, the largest power within s_max."""
    if K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    if s_max < s_min:
        raise ValueError(f"s_max {s_max} below s_min {s_min}")
    ratio = 1.0 + 1.0 / K
    count = int(math.floor(math.log(s_max / s_min) / math.log(ratio)))
    while s_min * ratio ** (count + 1) <= s_max * (1 + 1e-12):
        count += 1
    while count > 0 and s_min * ratio**count > s_max * (1 + 1e-12):
        count -= 1
    return [s_min * ratio**i for i in range(count + 1)]


def _round_up(target: float, grid: Sequence[float]) -> float | None:
    for s in grid:
        if s >= target * (1 - REL_TOL):
            return s
    return None


def _approx(g: ExecutionGraph, grid: list[float], K: int, bound_factor: float, lowest: float):
    geo = geometric_modes(lowest, grid[-1], K)
    vdd_schedule, vdd_report = solve_vdd(g, VddModel(tuple(geo)))
    averages = average_speeds(vdd_schedule, g)
    profiles: dict[str, ConstantSpeed] = {}
    for tid, avg in averages.items():
        snapped = _round_up(avg, grid)
        if snapped is None:
            raise InfeasibleError(
                f"task {tid!r} needs average speed {avg:g}, above the top "
                f"admissible speed {grid[-1]:g}"
            )
        profiles[tid] = ConstantSpeed(snapped)
    durations = {tid: g.costs[tid] / p.speed for tid, p in profiles.items()}
    starts, _ = asap_times(g, durations)
    schedule = Schedule(profiles=profiles, starts=starts)
    evaluated = evaluate_schedule(g, schedule)
    # Rounding up never stretches a task, so the mode-hopping feasibility
    # carries over; the certificate needs no knowledge of the optimum.
    per_task = bound_factor / (1.0 + 1.0 / K) ** 2
    certified = per_task * vdd_report.energy
    report = SolveReport(
        energy=evaluated.energy,
        makespan=evaluated.makespan,
        feasible=evaluated.feasible,
        speeds=evaluated.speeds,
        diagnostics={
            "vdd_energy": vdd_report.energy,
            "geometric_modes": geo,
            "K": K,
        },
    )
    return ApproxResult(
        schedule=schedule,
        report=report,
        bound_factor=bound_factor,
        certified_upper=certified,
    )


def approx_incremental(g: ExecutionGraph, model: IncrementalModel, K: int) -> ApproxResult:
    """Certified (1 + delta/s_min)^2 (1 + 1/K)^2 scheme on the speed grid."""
    grid = admissible_speeds(model)
    factor = (1.0 + model.delta / model.s_min) ** 2 * (1.0 + 1.0 / K) ** 2
    return _approx(g, grid, K, factor, model.s_min)


def approx_discrete(g: ExecutionGraph, model: DiscreteModel, K: int) -> ApproxResult:
    """Certified (1 + alpha/s_1)^2 (1 + 1/K)^2 scheme on the mode set."""
    grid = admissible_speeds(model)
    factor = (1.0 + model.alpha / model.modes[0]) ** 2 * (1.0 + 1.0 / K) ** 2
    return _approx(g, grid, K, factor, model.modes[0])


def round_continuous(speeds: Sequence[float], model: IncrementalModel) -> list[float]:
    """Round each speed up to the grid; energy grows at most by
    (1 + delta/s_min)^2 and no duration ever stretches."""
    grid = admissible_speeds(model)
    out = []
    for s in speeds:
        if s > model.s_max * (1 + REL_TOL):
            raise RangeError(f"speed {s:g} exceeds the model cap {model.s_max:g}")
        snapped = _round_up(s, grid)
        if snapped is None:
            raise RangeError(
                f"no admissible speed at or above {s:g} (grid tops out at {grid[-1]:g})"
            )
        out.append(snapped)
    return out


# ---------------------------------------------------------------------------
# Hard instances


def gen_2partition(values: Sequence[int]) -> tuple[ExecutionGraph, DiscreteModel, float]:
    """Chain instance whose optimal-energy question encodes 2-Partition.

    For positive integers a_i with T = (sum a_i)/2: a chain of tasks with
    costs a_i, modes {1, 2}, and deadline 3T/2 admits a schedule meeting
    the deadline with energy at most 5T exactly when some subset of the
    a_i sums to T. Deadline and bound are quarters of integers, so both
    are exact in binary floating point.
    """
    values = list(values)
    if not values:
        raise ValueError("at least one value is required")
    if any(int(v) != v or v <= 0 for v in values):
        raise ValueError(f"values must be positive integers: {values}")
    total = int(sum(values))
    deadline = 3.0 * total / 4.0
    bound = 5.0 * total / 2.0
    tasks = [Task(id=f"T{i + 1}", cost=float(v)) for i, v in enumerate(values)]
    chain = [t.id for t in tasks]
    graph = build_execution_graph(tasks, [], [chain], deadline)
    return graph, DiscreteModel((1.0, 2.0)), bound
