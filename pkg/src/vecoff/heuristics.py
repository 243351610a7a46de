"""Non-learning schedulers: queue disciplines and particle-swarm search.

Two families live here. The first picks one task per decision window at
simulation time (first-come-first-served, smallest-deadline-first, and a
per-window swarm search). The second optimizes a whole episode offline: a
task ordering is replayed by greedily assigning each task, in order, to
the earliest-available server, dropping it if it can no longer meet its
deadline. Orderings are encoded as random-key priority vectors, so the
swarm moves through a continuous space and every position decodes to a
valid permutation.

The offline optimizer assumes full knowledge of the episode's arrivals,
which an online scheduler never has; its value is as a reference bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .channel import attach_comm_times
from .domain import ChannelParams, MecState, SimConfig, Task, TaskStatus
from .engine import (
    DecisionWindow,
    EpisodeResult,
    assign,
    earliest_availability,
    is_feasible_at,
    slack,
)
from .experiments import objective

BRUTE_FORCE_LIMIT = 8


@dataclass
class PsoParams:
    """Swarm search knobs, shared by the offline and per-window modes."""

    swarm_size: int = 50
    iterations_static: int = 100
    iterations_dynamic: int = 30
    inertia: float = 0.729
    c1: float = 1.49
    c2: float = 1.49
    velocity_clamp: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        import dataclasses

        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PsoParams":
        return cls(**d)


@dataclass
class AssignmentPlan:
    """An episode-level schedule: a task ordering and its replay objective."""

    ordering: tuple[int, ...]
    objective: float


def fcfs_select(window: DecisionWindow) -> int:
    """Index of the earliest-arrived feasible task (ties: lowest id)."""
    feas = window.feasible
    if not feas:
        raise ValueError("empty window")
    return min(range(len(feas)), key=lambda i: (feas[i].arrival, feas[i].id))


def sdf_select(window: DecisionWindow) -> int:
    """Index of the feasible task with the soonest deadline (ties: lowest id)."""
    feas = window.feasible
    if not feas:
        raise ValueError("empty window")
    return min(range(len(feas)), key=lambda i: (feas[i].deadline, feas[i].id))


class FcfsScheduler:
    name = "fcfs"

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        return fcfs_select(window)


class SdfScheduler:
    name = "sdf"

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        return sdf_select(window)


class RandomScheduler:
    """Uniform random valid choice. Exists for fuzzing, not comparison."""

    name = "random"

    def __init__(self, seed: int = 0):
        self._rng = np.random.default_rng(seed)

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        return int(self._rng.integers(len(window.feasible)))


class PlanScheduler:
    """Follow a fixed ordering: always pick the feasible task that the plan
    ranks first. Lets an offline plan be pushed through the online engine."""

    name = "plan"

    def __init__(self, ordering: Sequence[int], tasks: Sequence[Task]):
        # ordering holds positions into `tasks`; store ranks per task id
        self._rank = {tasks[pos].id: r for r, pos in enumerate(ordering)}

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        feas = window.feasible
        return min(range(len(feas)), key=lambda i: self._rank[feas[i].id])


def replay_ordering(
    tasks: Sequence[Task], ordering: Sequence[int], num_mecs: int
) -> EpisodeResult:
    """Greedy replay of one complete ordering.

    Walks the ordering, putting each task on the earliest-available server
    at ``max(availability, arrival)``; a task that cannot finish inside its
    coverage window from there is dropped. Input tasks must carry comm_time
    and are not mutated (the result holds copies).
    """
    if sorted(ordering) != list(range(len(tasks))):
        raise ValueError("ordering must be a permutation of task positions")
    work = [t.copy() for t in tasks]
    mecs = [MecState(id=j + 1) for j in range(num_mecs)]
    for pos in ordering:
        t = work[pos]
        sid, avail = earliest_availability(mecs)
        server = mecs[sid - 1]
        start = max(avail, t.arrival)
        if is_feasible_at(t, start):
            assign(t, server)
        else:
            t.transition(TaskStatus.DROPPED)
    return EpisodeResult(tasks=work, windows=[], num_mecs=num_mecs, mecs=mecs)


def induced_ordering(result: EpisodeResult) -> tuple[int, ...]:
    """Recover the ordering an episode effectively executed.

    Completed tasks sort by processing start (ties by id); dropped tasks
    go last, where a replay will drop them again since availability only
    ever grows. Positions index the id-sorted task list, the same space
    ``prepare_tasks`` and the replays use.
    """
    rank = {t.id: r for r, t in enumerate(sorted(result.tasks, key=lambda t: t.id))}
    completed = []
    dropped = []
    for t in result.tasks:
        if t.status is TaskStatus.COMPLETED:
            completed.append((t.start_proc, t.id))
        else:
            dropped.append((t.deadline, t.id))
    completed.sort()
    dropped.sort()
    return tuple(rank[tid] for _, tid in completed) + tuple(
        rank[tid] for _, tid in dropped
    )


def decode_priorities(position: np.ndarray) -> tuple[int, ...]:
    """Random-key decode: sort task positions by ascending priority key."""
    return tuple(int(i) for i in np.argsort(position, kind="stable"))


def _ordering_to_position(ordering: Sequence[int], n: int) -> np.ndarray:
    pos = np.empty(n)
    for rank, task_pos in enumerate(ordering):
        pos[task_pos] = rank / max(n, 1)
    return pos


def brute_force_oracle(
    tasks: Sequence[Task],
    cfg: SimConfig,
    params: ChannelParams,
    max_tasks: int = BRUTE_FORCE_LIMIT,
) -> AssignmentPlan:
    """Exhaustive minimum over every task ordering.

    Factorial cost; refuses more than ``max_tasks`` tasks. Ties resolve to
    the lexicographically first ordering, so the result is deterministic.
    """
    if len(tasks) > max_tasks:
        raise ValueError(
            f"{len(tasks)} tasks exceeds the exhaustive-search limit of {max_tasks}"
        )
    base = prepare_tasks(tasks, params)
    best_val = None
    best_ord: tuple[int, ...] = ()
    for perm in itertools.permutations(range(len(base))):
        val = objective(replay_ordering(base, perm, cfg.num_mecs), cfg.lambda_weight)
        if best_val is None or val < best_val:
            best_val, best_ord = val, perm
    if best_val is None:
        best_val = objective(
            replay_ordering(base, (), cfg.num_mecs), cfg.lambda_weight
        )
    return AssignmentPlan(ordering=best_ord, objective=best_val)


def prepare_tasks(tasks: Sequence[Task], params: ChannelParams) -> list[Task]:
    """Copies in id order with comm times attached."""
    base = [t.copy() for t in sorted(tasks, key=lambda t: t.id)]
    attach_comm_times(base, params)
    return base


def pso_optimize_static(
    tasks: Sequence[Task],
    cfg: SimConfig,
    params: ChannelParams,
    pso: PsoParams,
    seed: int,
    seed_orderings: Sequence[Sequence[int]] = (),
) -> AssignmentPlan:
    """Offline swarm search over whole-episode orderings.

    The swarm is warm-started with an arrival-order particle and a
    deadline-order particle (plus any caller-provided ``seed_orderings``),
    so the search never finishes worse than those replays; the rest of the
    swarm starts at random keys. Returns the best plan ever evaluated.
    """
    base = prepare_tasks(tasks, params)
    n = len(base)
    lam = cfg.lambda_weight
    if n == 0:
        return AssignmentPlan(ordering=(), objective=0.0)

    def fitness(position: np.ndarray) -> tuple[float, tuple[int, ...]]:
        order = decode_priorities(position)
        return objective(replay_ordering(base, order, cfg.num_mecs), lam), order

    rng = np.random.default_rng(seed)
    swarm = max(pso.swarm_size, 1)
    x = rng.uniform(0.0, 1.0, size=(swarm, n))
    v = rng.uniform(-0.1, 0.1, size=(swarm, n))

    starts: list[Sequence[int]] = [
        sorted(range(n), key=lambda i: (base[i].arrival, base[i].id)),
        sorted(range(n), key=lambda i: (base[i].deadline, base[i].id)),
    ]
    starts.extend(seed_orderings)
    for row, ordering in enumerate(starts[:swarm]):
        x[row] = _ordering_to_position(ordering, n)

    pbest_x = x.copy()
    pbest_val = np.empty(swarm)
    best_val = None
    best_ord: tuple[int, ...] = ()
    for i in range(swarm):
        val, order = fitness(x[i])
        pbest_val[i] = val
        if best_val is None or val < best_val:
            best_val, best_ord = val, order
    gbest_x = pbest_x[int(np.argmin(pbest_val))].copy()

    for _ in range(pso.iterations_static):
        r1 = rng.uniform(size=(swarm, n))
        r2 = rng.uniform(size=(swarm, n))
        v = (
            pso.inertia * v
            + pso.c1 * r1 * (pbest_x - x)
            + pso.c2 * r2 * (gbest_x - x)
        )
        np.clip(v, -pso.velocity_clamp, pso.velocity_clamp, out=v)
        x = x + v
        for i in range(swarm):
            val, order = fitness(x[i])
            if val < pbest_val[i]:
                pbest_val[i] = val
                pbest_x[i] = x[i].copy()
            if val < best_val:
                best_val, best_ord = val, order
        gbest_x = pbest_x[int(np.argmin(pbest_val))].copy()

    return AssignmentPlan(ordering=best_ord, objective=best_val)


class DynamicPsoScheduler:
    """Per-window swarm search, run online.

    At each window it searches orderings of the feasible set against the
    servers' current availabilities, scoring a candidate by the weighted
    sum of its replayed latencies and its replay drop fraction, and
    commits only the first task of the winner. A one-task window returns
    immediately without searching.
    """

    name = "on-dyn-pso"

    def __init__(self, params: PsoParams, lambda_weight: float, seed: int = 0):
        self._p = params
        self._lam = lambda_weight
        self._rng = np.random.default_rng(seed)

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        feas = window.feasible
        w = len(feas)
        if w == 0:
            raise ValueError("empty window")
        if w == 1:
            return 0
        avails = [m.available_at for m in mecs]
        arrivals = [t.arrival for t in feas]
        procs = [t.proc_time for t in feas]
        comms = [t.comm_time for t in feas]
        slacks = [slack(t) for t in feas]
        lam = self._lam

        def fitness(order: Sequence[int]) -> float:
            av = list(avails)
            lat = 0.0
            drops = 0
            for pos in order:
                j = min(range(len(av)), key=lambda k: av[k])
                start = max(av[j], arrivals[pos])
                waiting = start - arrivals[pos]
                if waiting <= slacks[pos]:
                    av[j] = start + procs[pos]
                    lat += waiting + procs[pos] + 2.0 * comms[pos]
                else:
                    drops += 1
            return lam * lat + (1.0 - lam) * drops / w

        p = self._p
        rng = self._rng
        swarm = max(p.swarm_size, 1)
        x = rng.uniform(0.0, 1.0, size=(swarm, w))
        v = rng.uniform(-0.1, 0.1, size=(swarm, w))
        # particle 0 starts at the arrival-order keys, so the search can
        # never do worse than taking the window in order
        x[0] = _ordering_to_position(range(w), w)
        pbest_x = x.copy()
        pbest_val = np.empty(swarm)
        best_val = None
        best_head = 0
        for i in range(swarm):
            order = decode_priorities(x[i])
            val = fitness(order)
            pbest_val[i] = val
            if best_val is None or val < best_val:
                best_val, best_head = val, order[0]
        gbest_x = pbest_x[int(np.argmin(pbest_val))].copy()

        for _ in range(p.iterations_dynamic):
            r1 = rng.uniform(size=(swarm, w))
            r2 = rng.uniform(size=(swarm, w))
            v = p.inertia * v + p.c1 * r1 * (pbest_x - x) + p.c2 * r2 * (gbest_x - x)
            np.clip(v, -p.velocity_clamp, p.velocity_clamp, out=v)
            x = x + v
            for i in range(swarm):
                order = decode_priorities(x[i])
                val = fitness(order)
                if val < pbest_val[i]:
                    pbest_val[i] = val
                    pbest_x[i] = x[i].copy()
                if val < best_val:
                    best_val, best_head = val, order[0]
            gbest_x = pbest_x[int(np.argmin(pbest_val))].copy()

        return int(best_head)
