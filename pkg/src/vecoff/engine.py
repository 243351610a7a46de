"""Discrete-event engine for task offloading at one roadside unit.

Protocol. Tasks arrive at the RSU over time; M edge servers each process
one task at a time, non-preemptively. A task arriving while some server is
idle is assigned on the spot, with no scheduler involvement. Tasks arriving
while every server is busy queue up. Whenever a server frees and the queue
is non-empty, the engine builds a decision window: the queued tasks that
can still finish inside their vehicle's remaining coverage time form the
feasible set, the rest are dropped (server availability only grows, so a
task infeasible now is infeasible forever). The scheduler is invoked to
pick exactly one feasible task per invocation; the loop repeats while
feasible tasks and idle servers remain.

When ``charge_exec_time`` is on, each scheduler invocation's duration is
added to the simulation clock before the chosen task starts, so a slow
scheduler inflates every queued task's waiting time and can expire
marginal tasks, including the one it just picked (which is then dropped).

Event ties at one timestamp resolve server-release events before arrivals,
so a task arriving exactly when a server frees takes the idle-server path.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Protocol, Sequence

from .channel import BandwidthEvent, attach_comm_times
from .domain import MecState, SimConfig, Task, TaskStatus, validate_config

_MEC_FREE = 0
_ARRIVAL = 1


class SchedulingProtocolError(RuntimeError):
    """A scheduler broke the engine contract (bad index, infeasible pick)."""


@dataclass
class DecisionWindow:
    """One scheduler invocation's view of the queue.

    ``queued`` is the snapshot of waiting tasks considered at this window
    (size W); ``feasible`` the subset that can still meet its deadline if
    started at ``earliest_avail`` (size W_y), in arrival order. Tasks in
    ``queued`` but not in ``feasible`` have already been dropped by the
    time the scheduler sees the window.
    """

    index: int
    queued: list[Task]
    feasible: list[Task]
    earliest_avail: float


@dataclass
class WindowRecord:
    """Log line for one decision window."""

    index: int
    queue_size: int
    feasible_size: int
    duration: float = 0.0


@dataclass
class DecisionPoint:
    """What the engine hands a scheduler: the window, live server states
    (read-only by convention), and the current clock."""

    window: DecisionWindow
    mecs: list[MecState]
    now: float


@dataclass
class EpisodeResult:
    """Outcome of one simulated episode."""

    tasks: list[Task]
    windows: list[WindowRecord]
    num_mecs: int
    bandwidth_events: list[BandwidthEvent] = field(default_factory=list)
    mecs: list[MecState] = field(default_factory=list)

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    @property
    def completed(self) -> list[Task]:
        return [t for t in self.tasks if t.status is TaskStatus.COMPLETED]

    @property
    def dropped(self) -> list[Task]:
        return [t for t in self.tasks if t.status is TaskStatus.DROPPED]

    @property
    def num_dropped(self) -> int:
        return len(self.dropped)

    @property
    def num_windows(self) -> int:
        """Windows in which the scheduler was actually invoked."""
        return sum(1 for w in self.windows if w.feasible_size >= 1)

    @property
    def total_decision_time(self) -> float:
        # start value keeps the windowless case a float, so reports
        # serialize it the same way on every path
        return sum((w.duration for w in self.windows), 0.0)

    def to_jsonl(self, path: str) -> None:
        """Dump one JSON record per task, then the window log."""
        import json

        with open(path, "w") as fh:
            for t in self.tasks:
                rec = {"kind": "task", **t.to_dict()}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            for w in self.windows:
                rec = {
                    "kind": "window",
                    "index": w.index,
                    "queue_size": w.queue_size,
                    "feasible_size": w.feasible_size,
                    "duration": w.duration,
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


class Scheduler(Protocol):
    """What the engine requires of a scheduling policy."""

    name: str

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        """Return an index into ``window.feasible``."""
        ...


def earliest_availability(mecs: Sequence[MecState]) -> tuple[int, float]:
    """(server id, availability) of the first server to become free.

    Ties go to the lowest server index.
    """
    if not mecs:
        raise ValueError("no servers")
    best = min(mecs, key=lambda m: (m.available_at, m.id))
    return best.id, best.available_at


def slack(task: Task) -> float:
    """Longest waiting time the task can absorb and still deliver its
    result before its vehicle leaves coverage."""
    if task.comm_time is None:
        raise ValueError(f"task {task.id} has no comm_time attached")
    return task.remaining_in_range - task.proc_time - task.comm_time


def is_feasible_at(task: Task, start: float) -> bool:
    """Can the task start processing at ``start`` and still make it?

    The boundary is inclusive: a result delivered exactly at the deadline
    counts.
    """
    return (start - task.arrival) <= slack(task)


def build_window(
    pending: list[Task], t_e_av: float, now: float, index: int = 0
) -> DecisionWindow:
    """Form a decision window for the earliest availability ``t_e_av``.

    The snapshot takes every pending task that has already arrived by
    ``t_e_av``. Members that cannot absorb the projected waiting time
    ``t_e_av - arrival`` are dropped on the spot and removed from
    ``pending`` (availability never decreases, so they could never become
    feasible later). Mutates ``pending``.
    """
    if now < t_e_av:
        raise ValueError(f"window built at now={now} before availability {t_e_av}")
    queued = [t for t in pending if t.arrival <= t_e_av]
    feasible = []
    for t in queued:
        if is_feasible_at(t, max(t_e_av, t.arrival)):
            feasible.append(t)
        else:
            t.transition(TaskStatus.DROPPED)
            pending.remove(t)
    return DecisionWindow(
        index=index, queued=queued, feasible=feasible, earliest_avail=t_e_av
    )


def assign(task: Task, mec: MecState, at: float | None = None) -> float:
    """Commit one task to one server.

    Processing starts at ``max(mec.available_at, task.arrival)``, lifted
    to ``at`` when given (the instant a charged decision completed). The
    caller must have checked feasibility; an infeasible assignment is a
    scheduler bug and raises. Fills in all of the task's timing fields and
    returns the instant the server frees again.
    """
    start = max(mec.available_at, task.arrival)
    if at is not None:
        start = max(start, at)
    if not is_feasible_at(task, start):
        raise SchedulingProtocolError(
            f"task {task.id} assigned to server {mec.id} at {start} cannot "
            f"meet its deadline {task.deadline}"
        )
    task.transition(TaskStatus.ASSIGNED)
    task.start_proc = start
    task.waiting = start - task.arrival
    task.comp_latency = task.proc_time + task.waiting
    task.e2e_latency = task.comp_latency + 2.0 * task.comm_time
    task.assigned_mec = mec.id
    mec.add_busy(start, start + task.proc_time)
    task.transition(TaskStatus.COMPLETED)
    return start + task.proc_time


def episode_loop(
    tasks: list[Task], cfg: SimConfig
) -> Generator[DecisionPoint, tuple[int, float], EpisodeResult]:
    """Run one episode, yielding at every scheduler invocation.

    The caller answers each yielded DecisionPoint with ``(choice,
    duration)``: the index of the chosen task in ``window.feasible`` and
    the decision's execution time in seconds. ``duration`` is recorded in
    the window log, and added to the clock when the config charges
    execution time. Tasks must arrive with ``comm_time`` attached and must
    all be Pending; they are mutated in place. The generator's return
    value is the EpisodeResult.
    """
    mecs = [MecState(id=j + 1) for j in range(cfg.num_mecs)]
    by_server_id = {m.id: m for m in mecs}
    by_task_id: dict[int, Task] = {}
    events: list[tuple[float, int, int]] = []
    for t in tasks:
        if t.status is not TaskStatus.PENDING:
            raise ValueError(f"task {t.id} is {t.status.value}, expected pending")
        if t.comm_time is None:
            raise ValueError(f"task {t.id} has no comm_time attached")
        if t.id in by_task_id:
            raise ValueError(f"duplicate task id {t.id}")
        by_task_id[t.id] = t
        heapq.heappush(events, (t.arrival, _ARRIVAL, t.id))

    pending: list[Task] = []
    windows: list[WindowRecord] = []
    clock = 0.0
    window_index = 0

    while events:
        ev_time, kind, key = heapq.heappop(events)
        clock = max(clock, ev_time)

        if kind == _ARRIVAL:
            task = by_task_id[key]
            free = [m for m in mecs if m.available_at <= clock]
            if free:
                # Idle server: assign on arrival, no scheduler involved.
                target = min(free, key=lambda m: (m.available_at, m.id))
                at = clock if cfg.charge_exec_time else None
                start = max(target.available_at, task.arrival, at or 0.0)
                if is_feasible_at(task, start):
                    free_at = assign(task, target, at=at)
                    heapq.heappush(events, (free_at, _MEC_FREE, target.id))
                else:
                    task.transition(TaskStatus.DROPPED)
            else:
                pending.append(task)
            continue

        # A server released its task; drain the queue while anything is
        # both feasible and startable.
        while pending:
            sid, t_e_av = earliest_availability(mecs)
            if t_e_av > clock:
                break
            window_index += 1
            window = build_window(pending, t_e_av, clock, index=window_index)
            record = WindowRecord(
                index=window.index,
                queue_size=len(window.queued),
                feasible_size=len(window.feasible),
            )
            windows.append(record)
            if not window.feasible:
                # everything in the snapshot was dropped by the filter;
                # pending shrank, so the loop makes progress
                continue
            choice, duration = yield DecisionPoint(window=window, mecs=mecs, now=clock)
            if not isinstance(choice, int) or not (0 <= choice < len(window.feasible)):
                raise SchedulingProtocolError(
                    f"scheduler returned {choice!r} for a window of "
                    f"{len(window.feasible)} feasible tasks"
                )
            if duration < 0:
                raise SchedulingProtocolError(f"negative decision duration {duration}")
            record.duration = duration
            if cfg.charge_exec_time and duration > 0:
                clock += duration
            task = window.feasible[choice]
            server = by_server_id[sid]
            at = clock if cfg.charge_exec_time else None
            start = max(server.available_at, task.arrival, at or 0.0)
            pending.remove(task)
            if not is_feasible_at(task, start):
                # the decision itself took long enough to expire its pick
                task.transition(TaskStatus.DROPPED)
                continue
            free_at = assign(task, server, at=at)
            heapq.heappush(events, (free_at, _MEC_FREE, server.id))

    if pending:
        raise RuntimeError(
            f"engine finished with {len(pending)} tasks still pending"
        )
    for t in tasks:
        if t.status not in (TaskStatus.COMPLETED, TaskStatus.DROPPED):
            raise RuntimeError(f"task {t.id} ended in state {t.status.value}")

    return EpisodeResult(
        tasks=list(tasks),
        windows=windows,
        num_mecs=cfg.num_mecs,
        mecs=mecs,
    )


def run_episode(
    tasks: Sequence[Task],
    scheduler: Scheduler,
    cfg: SimConfig,
    channel_params,
    exec_cost: float | None = None,
) -> EpisodeResult:
    """Simulate one episode under ``scheduler``.

    The input tasks are copied, so a task list can be replayed under many
    schedulers. Each scheduler invocation is timed with a wall clock;
    ``exec_cost``, when given, replaces the measured duration with a fixed
    synthetic cost so runs become exactly reproducible. With
    ``cfg.charge_exec_time`` false the result is a pure function of
    (tasks, scheduler decisions).
    """
    validate_config(cfg)
    work = [t.copy() for t in sorted(tasks, key=lambda t: (t.arrival, t.id))]
    bandwidth_events = attach_comm_times(work, channel_params)
    loop = episode_loop(work, cfg)
    try:
        point = next(loop)
        while True:
            t0 = time.perf_counter()
            choice = scheduler.select(point.window, point.mecs, point.now)
            measured = time.perf_counter() - t0
            duration = measured if exec_cost is None else exec_cost
            point = loop.send((choice, duration))
    except StopIteration as stop:
        result: EpisodeResult = stop.value
    result.bandwidth_events = bandwidth_events
    return result
