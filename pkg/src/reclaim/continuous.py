"""Continuous-speed solvers.

Closed forms cover the graph classes where the optimum has a known
shape: independent tasks, chains, fork/join, trees (bottom-up equivalent
costs), and series-parallel graphs. A log-barrier solver handles
arbitrary DAGs. Constant per-task speed is optimal in this model, so
every solver here returns one speed per task, and the power-profile
helpers verify the flat-power signature of an interior optimum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InfeasibleError, NoConvergenceError, UnsupportedError
from .graph import (
    REL_TOL,
    ConstantSpeed,
    ExecutionGraph,
    Schedule,
    SolveReport,
    Task,
    asap_times,
    topological_order,
)

log = logging.getLogger("reclaim.continuous")


def _cbrt(x: float) -> float:
    return x ** (1.0 / 3.0)


@dataclass(frozen=True)
class ContinuousModel:
    """Speed cap; math.inf means uncapped."""

    s_max: float = math.inf

    def __post_init__(self):
        if not self.s_max > 0:
            raise ValueError(f"s_max must be positive, got {self.s_max}")


# ---------------------------------------------------------------------------
# Closed forms


def solve_independent(
    costs: Sequence[float], deadline: float, s_max: float = math.inf
) -> tuple[list[float], float]:
    """Each task gets the whole window: s_i = w_i / D."""
    _check_window(deadline)
    speeds = []
    energy = 0.0
    for w in costs:
        s = w / deadline
        if s > s_max * (1 + REL_TOL):
            raise InfeasibleError(f"cost {w} needs speed {s:g} > cap {s_max:g}")
        speeds.append(min(s, s_max))
        energy += w**3 / deadline**2
    return speeds, energy


def solve_chain(
    costs: Sequence[float], deadline: float, s_max: float = math.inf
) -> tuple[float, float]:
    """A chain behaves like one task of the summed cost: s = W / D."""
    _check_window(deadline)
    total = sum(costs)
    s = total / deadline
    if s > s_max * (1 + REL_TOL):
        raise InfeasibleError(f"chain work {total} needs speed {s:g} > cap {s_max:g}")
    return min(s, s_max), total**3 / deadline**2


def solve_fork_join(
    root_cost: float,
    branch_costs: Sequence[float],
    deadline: float,
    s_max: float = math.inf,
) -> tuple[list[float], float]:
    """Root task followed by independent branches (or the time-mirrored join).

    Unclamped, the root runs at ((sum w^3)^(1/3) + w0) / D and each branch
    at its cost-proportional share. When that exceeds the cap, the root is
    pinned at s_max and the branches split the remaining window as
    independent tasks.
    """
    _check_window(deadline)
    cubes = _cbrt(sum(w**3 for w in branch_costs))
    s0 = (cubes + root_cost) / deadline
    if s0 <= s_max * (1 + REL_TOL):
        s0 = min(s0, s_max)
        speeds = [s0] + [s0 * w / cubes for w in branch_costs]
        return speeds, (cubes + root_cost) ** 3 / deadline**2
    rest = deadline - root_cost / s_max
    if rest <= 0:
        raise InfeasibleError(
            f"root work {root_cost} at cap {s_max:g} leaves no window for the branches"
        )
    branch_speeds, branch_energy = solve_independent(branch_costs, rest, s_max)
    energy = root_cost * s_max * s_max + branch_energy
    return [s_max] + branch_speeds, energy


def _check_window(deadline: float) -> None:
    if not deadline > 0:
        raise InfeasibleError(f"deadline must be positive, got {deadline}")


# ---------------------------------------------------------------------------
# Trees


@dataclass(frozen=True)
class TreeNode:
    id: str
    cost: float
    children: tuple["TreeNode", ...] = ()


def _postorder(root: TreeNode) -> list[TreeNode]:
    # Iterative: fixture trees reach 10^4 nodes, past the recursion limit.
    out: list[TreeNode] = []
    stack: list[TreeNode] = [root]
    while stack:
        node = stack.pop()
        out.append(node)
        stack.extend(node.children)
    out.reverse()  # children now precede their parent
    return out


def tree_eq_cost(root: TreeNode) -> float:
    """Equivalent cost: leaves keep their own, a parent adds its cost to
    the cube-root of the sum of cubed child costs."""
    eq: dict[int, float] = {}
    for node in _postorder(root):
        if node.children:
            eq[id(node)] = _cbrt(sum(eq[id(c)] ** 3 for c in node.children)) + node.cost
        else:
            eq[id(node)] = node.cost
    return eq[id(root)]


def solve_tree(
    root: TreeNode, deadline: float, s_max: float = math.inf
) -> tuple[float, dict[str, float]]:
    """Energy and per-task speeds for a rooted tree.

    Bottom-up equivalent costs first; then speeds top-down. A node whose
    required speed stays under the cap passes each child the window that
    remains after its own run; a capped node burns s_max and recurses on
    a shortened window. Infeasible when a node's own work overruns its
    window even at s_max.
    """
    _check_window(deadline)
    eq: dict[int, float] = {}
    for node in _postorder(root):
        if node.children:
            eq[id(node)] = _cbrt(sum(eq[id(c)] ** 3 for c in node.children)) + node.cost
        else:
            eq[id(node)] = node.cost

    speeds: dict[str, float] = {}
    energy = 0.0
    stack: list[tuple[TreeNode, float]] = [(root, deadline)]
    while stack:
        node, window = stack.pop()
        if window <= 0:
            raise InfeasibleError(f"no execution window left at task {node.id!r}")
        s = eq[id(node)] / window
        if s > s_max * (1 + REL_TOL):
            s = s_max
            if node.cost / s_max > window * (1 + REL_TOL):
                raise InfeasibleError(
                    f"task {node.id!r}: work {node.cost} at cap {s_max:g} "
                    f"misses its window {window:g}"
                )
        else:
            s = min(s, s_max)
        speeds[node.id] = s
        energy += node.cost * s * s
        remaining = window - node.cost / s
        for child in node.children:
            stack.append((child, remaining))
    return energy, speeds


# ---------------------------------------------------------------------------
# Series-parallel graphs


@dataclass(frozen=True)
class Elementary:
    """Two tasks joined by a single edge; the smallest SPG."""

    source: Task
    sink: Task

    def __post_init__(self):
        if self.source.id == self.sink.id:
            raise ValueError("an elementary graph needs two distinct tasks")


@dataclass(frozen=True)
class Series:
    """Left's sink merged with right's source."""

    left: "SpgNode"
    right: "SpgNode"
    source: Task = field(init=False, compare=False)
    sink: Task = field(init=False, compare=False)

    def __post_init__(self):
        if self.left.sink != self.right.source:
            raise ValueError(
                f"series composition needs matching junction tasks, got "
                f"{self.left.sink.id!r} then {self.right.source.id!r}"
            )
        object.__setattr__(self, "source", self.left.source)
        object.__setattr__(self, "sink", self.right.sink)


@dataclass(frozen=True)
class Parallel:
    """Both operands share their source task and their sink task."""

    left: "SpgNode"
    right: "SpgNode"
    source: Task = field(init=False, compare=False)
    sink: Task = field(init=False, compare=False)

    def __post_init__(self):
        if self.left.source != self.right.source or self.left.sink != self.right.sink:
            raise ValueError("parallel composition needs shared source and sink tasks")
        object.__setattr__(self, "source", self.left.source)
        object.__setattr__(self, "sink", self.right.sink)


SpgNode = Union[Elementary, Series, Parallel]


def spg_cost(root: SpgNode) -> float:
    """Equivalent cost of a series-parallel graph.

    Interior cost composes by summation in series (the shared junction
    task counted once) and by cube-root-of-cube-sums in parallel; the
    endpoints' own costs are added back once at the top.
    """
    return root.source.cost + _inner_cost(root) + root.sink.cost


def _inner_cost(root: SpgNode) -> float:
    # Post-order over the composition tree, iterative for depth safety.
    out: list[SpgNode] = []
    stack: list[SpgNode] = [root]
    while stack:
        node = stack.pop()
        out.append(node)
        if isinstance(node, (Series, Parallel)):
            stack.append(node.left)
            stack.append(node.right)
    inner: dict[int, float] = {}
    for node in reversed(out):
        if isinstance(node, Elementary):
            inner[id(node)] = 0.0
        elif isinstance(node, Series):
            inner[id(node)] = (
                inner[id(node.left)] + node.left.sink.cost + inner[id(node.right)]
            )
        else:
            inner[id(node)] = _cbrt(inner[id(node.left)] ** 3 + inner[id(node.right)] ** 3)
    return inner[id(root)]


def solve_spg(root: SpgNode, deadline: float, s_max: float = math.inf) -> float:
    """Optimal energy of a series-parallel graph, uncapped speeds only."""
    if math.isfinite(s_max):
        raise UnsupportedError(
            "series-parallel closed form requires an uncapped speed model; "
            "route the instance to the general DAG solver instead"
        )
    _check_window(deadline)
    return spg_cost(root) ** 3 / deadline**2


# ---------------------------------------------------------------------------
# General DAGs: log-barrier interior point over durations and completions


BARRIER_GROWTH = 10.0
GAP_TOL = 1e-9
NEWTON_TOL = 1e-12
MAX_NEWTON = 4000


def solve_dag(g: ExecutionGraph, s_max: float = math.inf) -> tuple[Schedule, SolveReport]:
    """Minimum-energy constant per-task speeds for an arbitrary DAG.

    Minimizes sum w^3 / d^2 over durations d and completion times t with
    the precedence, window, and speed-cap constraints kept strictly
    feasible by a log barrier. Diagnostics report the Newton iteration
    count, the final duality measure, and a scaled stationarity residual.
    """
    order = topological_order(g)
    n = len(order)
    D = g.deadline
    w = np.array([g.costs[tid] for tid in order])

    if n == 1:
        # One task, one window; keep the trivial answer exact.
        s = w[0] / D
        if s > s_max * (1 + REL_TOL):
            raise InfeasibleError(f"cost {w[0]} needs speed {s:g} > cap {s_max:g}")
        return _emit(g, order, np.array([min(s, s_max)]), {"iterations": 0, "residual": 0.0})

    idx = {tid: i for i, tid in enumerate(order)}
    edges = [(idx[u], idx[v]) for u, v in sorted(g.edges)]

    ref = s_max
    if not math.isfinite(s_max):
        # Pick a virtual cap that leaves the start point half the window.
        unit_cp = float(_asap_vector(n, edges, w).max())
        ref = 2.0 * unit_cp / D
    d0 = w / ref
    t0 = _asap_vector(n, edges, d0)
    cp = float(t0.max())
    if math.isfinite(s_max):
        if cp > D * (1 + REL_TOL):
            raise InfeasibleError(
                f"critical path {cp:g} at cap {s_max:g} exceeds deadline {D:g}"
            )
        if cp >= D * (1 - 1e-9):
            # The window is exactly the all-cap critical path: no interior
            # exists, and every task on the path is pinned anyway.
            return _emit(
                g,
                order,
                np.full(n, s_max),
                {"iterations": 0, "residual": 0.0, "pinned": True},
            )

    gamma = D / cp
    beta = 1.0 + 0.9 * (gamma - 1.0)
    depth = _depths(n, edges)
    cushion = cp * (gamma - beta) / (2.0 * n)
    x = np.concatenate([beta * d0, beta * t0 + cushion * (depth + 1.0)])

    lb = w / s_max if math.isfinite(s_max) else np.zeros(n)
    A, rhs = _constraints(n, edges, lb, D)
    m_rows = A.shape[0]

    def objective(xv: np.ndarray) -> float:
        return float(np.sum(w**3 / xv[:n] ** 2))

    def grad_f(xv: np.ndarray) -> np.ndarray:
        out = np.zeros(2 * n)
        out[:n] = -2.0 * w**3 / xv[:n] ** 3
        return out

    t_barrier = 1.0
    iterations = 0
    rounds = 0
    while True:
        rounds += 1
        x, iterations = _center(
            x, t_barrier, A, rhs, w, n, objective, grad_f, iterations
        )
        f_val = objective(x)
        gap = m_rows / t_barrier
        if gap <= GAP_TOL * max(1.0, abs(f_val)):
            break
        t_barrier *= BARRIER_GROWTH
        if iterations > MAX_NEWTON:
            raise NoConvergenceError(
                f"barrier stalled after {iterations} Newton steps (gap {gap:.3e})",
                iterations=iterations,
                residual=gap,
            )

    residual = _stationarity_residual(x, t_barrier, A, rhs, grad_f)
    extra = 0
    while residual > 1e-8 and extra < 6 and iterations <= MAX_NEWTON:
        # The contract asks for a certified residual; crank the barrier a
        # little further when the multiplier estimate is not there yet.
        extra += 1
        t_barrier *= BARRIER_GROWTH
        x, iterations = _center(
            x, t_barrier, A, rhs, w, n, objective, grad_f, iterations
        )
        residual = min(
            residual, _stationarity_residual(x, t_barrier, A, rhs, grad_f)
        )
    if residual > 1e-8:
        log.warning("stationarity residual %.2e above the 1e-8 target", residual)
    speeds = w / x[:n]
    if math.isfinite(s_max):
        np.minimum(speeds, s_max, out=speeds)
    diagnostics = {
        "iterations": iterations,
        "residual": residual,
        "duality_gap": m_rows / t_barrier,
        "barrier_rounds": rounds,
    }
    log.info(
        "dag solve: %d tasks, %d newton steps, residual %.2e",
        n,
        iterations,
        residual,
    )
    return _emit(g, order, speeds, diagnostics)


def _stationarity_residual(x, t_barrier, A, rhs, grad_f) -> float:
    """Scaled KKT stationarity residual at x, with refined multipliers.

    The central-path estimate lam_j = 1/(t * slack_j) is only as centered
    as the last Newton pass; a least-squares fit of the near-active
    multipliers certifies stationarity several orders tighter. Both
    candidates are scored and the smaller residual wins.
    """
    slack = A @ x - rhs
    lam = 1.0 / (t_barrier * slack)
    grad0 = grad_f(x)
    scale = max(1.0, float(np.max(np.abs(grad0))))

    def score(lam_vec: np.ndarray) -> float:
        return float(np.max(np.abs(grad0 - A.T @ lam_vec))) / scale

    best = score(lam)
    support = lam > 1e-6 * max(1.0, float(lam.max()))
    for _ in range(5):
        if not support.any():
            break
        mu, *_ = np.linalg.lstsq(A[support].T, grad0, rcond=None)
        if (mu >= 0.0).all():
            refined = np.zeros_like(lam)
            refined[support] = mu
            best = min(best, score(refined))
            break
        # Negative multipliers mark constraints that do not bind; drop them.
        keep = np.zeros_like(support)
        keep[support] = mu > 0.0
        support = keep
    return best


def _center(x, t_barrier, A, rhs, w, n, objective, grad_f, iterations):
    # Newton descent on t*f(x) - sum log(slack), with a fraction-to-the-
    # boundary cap and Armijo backtracking. The decrement is computed
    # from the quadratic form, which stays accurate when t is huge.
    for _ in range(200):
        slack = A @ x - rhs
        inv = 1.0 / slack
        grad = t_barrier * grad_f(x) - A.T @ inv
        hess = (A.T * inv**2) @ A
        dd = np.zeros(2 * n)
        dd[:n] = t_barrier * 6.0 * w**3 / x[:n] ** 4
        hess[np.diag_indices_from(hess)] += dd
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        decrement = float(step @ (hess @ step))
        iterations += 1
        if decrement / 2.0 <= NEWTON_TOL:
            return x, iterations
        if iterations > MAX_NEWTON:
            return x, iterations

        ray = A @ step
        limit = np.inf
        blocking = ray < 0
        if blocking.any():
            limit = float(np.min(-slack[blocking] / ray[blocking]))
        alpha = min(1.0, 0.99 * limit)

        def phi(xv):
            return t_barrier * objective(xv) - float(np.sum(np.log(A @ xv - rhs)))

        base = phi(x)
        noise = 1e-12 * abs(base)
        while alpha > 1e-12:
            trial = x + alpha * step
            if (A @ trial - rhs).min() > 0 and phi(trial) <= base - 0.25 * alpha * decrement + noise:
                x = trial
                break
            alpha *= 0.5
        else:
            return x, iterations  # at the numerical floor for this center
    return x, iterations


def _constraints(n, edges, lb, deadline):
    # Rows of A x >= rhs, stored as (A, rhs): duration floors, start
    # nonnegativity (t_i >= d_i), precedence gaps, deadline ceilings.
    rows = n + n + len(edges) + n
    A = np.zeros((rows, 2 * n))
    rhs = np.zeros(rows)
    r = 0
    for i in range(n):
        A[r, i] = 1.0
        rhs[r] = lb[i]
        r += 1
    for i in range(n):
        A[r, n + i] = 1.0
        A[r, i] = -1.0
        r += 1
    for u, v in edges:
        A[r, n + v] = 1.0
        A[r, n + u] = -1.0
        A[r, v] = -1.0
        r += 1
    for i in range(n):
        A[r, n + i] = -1.0
        rhs[r] = -deadline
        r += 1
    return A, rhs


def _asap_vector(n, edges, durations):
    # Indices are topological already, so one forward sweep suffices.
    t = np.array(durations, dtype=float)
    preds: dict[int, list[int]] = {i: [] for i in range(n)}
    for u, v in edges:
        preds[v].append(u)
    for i in range(n):
        if preds[i]:
            t[i] = max(t[u] for u in preds[i]) + durations[i]
    return t


def _depths(n, edges):
    depth = np.zeros(n)
    preds: dict[int, list[int]] = {i: [] for i in range(n)}
    for u, v in edges:
        preds[v].append(u)
    for i in range(n):
        if preds[i]:
            depth[i] = max(depth[u] for u in preds[i]) + 1.0
    return depth


def _emit(g, order, speeds, diagnostics):
    profile = {tid: ConstantSpeed(float(s)) for tid, s in zip(order, speeds)}
    durations = {tid: g.costs[tid] / profile[tid].speed for tid in order}
    starts, completion = asap_times(g, durations)
    makespan = max(completion.values())
    energy = sum(g.costs[tid] * profile[tid].speed ** 2 for tid in order)
    schedule = Schedule(profiles=profile, starts=starts)
    report = SolveReport(
        energy=energy,
        makespan=makespan,
        feasible=makespan <= g.deadline * (1 + REL_TOL),
        speeds={tid: profile[tid].speed for tid in order},
        diagnostics=diagnostics,
    )
    return schedule, report


# ---------------------------------------------------------------------------
# Power profiles


@dataclass(frozen=True)
class PowerProfile:
    """Piecewise-constant total power: len(times) == len(levels) + 1."""

    times: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.levels) + 1 or not self.levels:
            raise ValueError("profile needs k+1 breakpoints for k levels")
        if any(a >= b for a, b in zip(self.times, self.times[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(level < 0 for level in self.levels):
            raise ValueError("power levels must be non-negative")

    def integral(self) -> float:
        return sum(
            level * (b - a)
            for level, a, b in zip(self.levels, self.times, self.times[1:])
        )

    def span(self) -> float:
        return self.times[-1] - self.times[0]


def power_profile(
    g: ExecutionGraph, schedule: Schedule, min_interval: float = 0.0
) -> PowerProfile:
    """Total dissipated power over time: the sum of s^3 across whatever
    runs at each instant.

    Start times must be explicit. With ``min_interval`` > 0, consecutive
    intervals are coalesced (duration-weighted, integral preserved) until
    each merged piece spans at least that long; numeric schedules produce
    sliver intervals where nearly simultaneous events disagree in the
    last few ulps, and those slivers carry meaningless levels.
    """
    if schedule.starts is None:
        raise ValueError("power profile needs explicit start times")
    deltas: dict[float, float] = {}
    for tid, profile in schedule.profiles.items():
        try:
            clock = schedule.starts[tid]
        except KeyError:
            raise ValueError(f"no start time for task {tid!r}") from None
        if isinstance(profile, ConstantSpeed):
            parts = ((profile.speed, g.costs[tid] / profile.speed),)
        else:
            parts = profile.parts
        for speed, duration in parts:
            if duration <= 0:
                continue
            power = speed**3
            deltas[clock] = deltas.get(clock, 0.0) + power
            clock += duration
            deltas[clock] = deltas.get(clock, 0.0) - power

    points = sorted(deltas)
    times: list[float] = [points[0]]
    levels: list[float] = []
    level = 0.0
    for a, b in zip(points, points[1:]):
        level += deltas[a]
        levels.append(max(level, 0.0))  # scrub -1e-18 accumulation dust
        times.append(b)

    if min_interval > 0.0 and len(levels) > 1:
        times, levels = _coalesce(times, levels, min_interval)
    return PowerProfile(times=tuple(times), levels=tuple(levels))


def _coalesce(times, levels, min_interval):
    out_t = [times[0]]
    out_l = []
    acc_width = 0.0
    acc_area = 0.0
    for a, b, level in zip(times, times[1:], levels):
        acc_width += b - a
        acc_area += (b - a) * level
        if acc_width >= min_interval:
            out_t.append(b)
            out_l.append(acc_area / acc_width)
            acc_width = 0.0
            acc_area = 0.0
    if acc_width > 0.0:
        # Tail too narrow to stand alone: fold it into the last piece.
        if out_l:
            prev_width = out_t[-1] - out_t[-2]
            out_l[-1] = (out_l[-1] * prev_width + acc_area) / (prev_width + acc_width)
            out_t[-1] = times[-1]
        else:
            out_t.append(times[-1])
            out_l.append(acc_area / acc_width)
    return out_t, out_l


def check_constant_power(profile: PowerProfile, rel_tol: float = 1e-4) -> bool:
    """True when no level strays from the time-averaged mean by more than
    rel_tol relative."""
    mean = profile.integral() / profile.span()
    if mean <= 0:
        return all(level == 0 for level in profile.levels)
    return all(abs(level - mean) <= rel_tol * mean for level in profile.levels)
