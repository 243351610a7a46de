"""Comparison metrics and the experiment matrix.

The scheduling objective weighs the sum of end-to-end latencies over the
served tasks against the fraction of dropped tasks:

    lambda * sum(e2e latencies) + (1 - lambda) * drops / N

The latency term is an unnormalized sum of seconds, so a normalized
variant (the sum divided by N times the largest task deadline) is reported
alongside it as a dimension-free diagnostic; the raw form is the one
optimizers minimize.

``run_matrix`` reproduces the comparative study shape: every algorithm on
every traffic density, ten seeded runs each, with per-run rows plus a mean
row per cell. RL algorithms are deployed test-only: one greedy episode per
seeded trace from a policy trained beforehand.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .domain import SimConfig
from .engine import EpisodeResult, run_episode
from .mobility import generate_trace, spawn_tasks

ALGO_TAGS = ("off-sta-pso", "on-dyn-pso", "dqn", "ppo", "fcfs", "sdf")
DEFAULT_SEEDS = tuple(range(1, 11))
DEFAULT_VEHICLE_COUNTS = (50, 100, 200)

CSV_COLUMNS = [
    "algo",
    "vehicles",
    "run",
    "seed",
    "drop_ratio",
    "mean_e2e_s",
    "mean_wait_s",
    "objective",
    "objective_normalized",
    "total_exec_s",
    "windows",
    "per_window_exec_s",
    "log10_exec",
]


def objective(result: EpisodeResult, lambda_weight: float) -> float:
    """Weighted latency-sum plus drop-fraction score (lower is better)."""
    n = result.num_tasks
    if n == 0:
        return 0.0
    lat = sum(t.e2e_latency for t in result.completed)
    return lambda_weight * lat + (1.0 - lambda_weight) * result.num_dropped / n


def objective_normalized(result: EpisodeResult, lambda_weight: float) -> float:
    """Objective with the latency sum scaled by N times the largest deadline."""
    n = result.num_tasks
    if n == 0:
        return 0.0
    lat = sum(t.e2e_latency for t in result.completed)
    max_deadline = max(t.deadline for t in result.tasks)
    scale = n * max_deadline if max_deadline > 0 else n
    return lambda_weight * lat / scale + (1.0 - lambda_weight) * result.num_dropped / n


def _log10_or_neg_inf(x: float) -> float:
    return math.log10(x) if x > 0 else float("-inf")


@dataclass
class RunRow:
    """One line of the comparison report."""

    algo: str
    vehicles: int
    run: str
    seed: int
    drop_ratio: float
    mean_e2e_s: float
    mean_wait_s: float
    objective: float
    objective_normalized: float
    total_exec_s: float
    windows: int
    per_window_exec_s: float
    log10_exec: float

    @classmethod
    def from_result(
        cls,
        algo: str,
        vehicles: int,
        run: str,
        seed: int,
        result: EpisodeResult,
        lambda_weight: float,
        total_exec_s: float | None = None,
    ) -> "RunRow":
        """Distill one episode. ``total_exec_s`` overrides the engine's
        decision-time total for algorithms whose cost is not per-window
        (the offline optimizer)."""
        completed = result.completed
        n = result.num_tasks
        drop_ratio = result.num_dropped / n if n else 0.0
        mean_e2e = sum(t.e2e_latency for t in completed) / len(completed) if completed else 0.0
        mean_wait = sum(t.waiting for t in completed) / len(completed) if completed else 0.0
        windows = result.num_windows
        exec_s = result.total_decision_time if total_exec_s is None else total_exec_s
        per_window = exec_s / windows if windows else 0.0
        # dynamic schedulers are judged per decision, the offline one by its
        # single optimization run
        log10_exec = _log10_or_neg_inf(per_window if windows else exec_s)
        return cls(
            algo=algo,
            vehicles=vehicles,
            run=run,
            seed=seed,
            drop_ratio=drop_ratio,
            mean_e2e_s=mean_e2e,
            mean_wait_s=mean_wait,
            objective=objective(result, lambda_weight),
            objective_normalized=objective_normalized(result, lambda_weight),
            total_exec_s=exec_s,
            windows=windows,
            per_window_exec_s=per_window,
            log10_exec=log10_exec,
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RunRow":
        return cls(**d)


def _mean_row(rows: Sequence[RunRow]) -> RunRow:
    """Average the numeric columns of one (algo, vehicles) cell."""
    n = len(rows)
    mean_per_window = sum(r.per_window_exec_s for r in rows) / n
    mean_total = sum(r.total_exec_s for r in rows) / n
    mean_windows = sum(r.windows for r in rows) / n
    return RunRow(
        algo=rows[0].algo,
        vehicles=rows[0].vehicles,
        run="mean",
        seed=-1,
        drop_ratio=sum(r.drop_ratio for r in rows) / n,
        mean_e2e_s=sum(r.mean_e2e_s for r in rows) / n,
        mean_wait_s=sum(r.mean_wait_s for r in rows) / n,
        objective=sum(r.objective for r in rows) / n,
        objective_normalized=sum(r.objective_normalized for r in rows) / n,
        total_exec_s=mean_total,
        windows=round(mean_windows),
        per_window_exec_s=mean_per_window,
        log10_exec=_log10_or_neg_inf(mean_per_window if mean_windows else mean_total),
    )


@dataclass
class MetricsReport:
    """Per-run rows plus one mean row per (algorithm, density) cell."""

    rows: list[RunRow] = field(default_factory=list)
    means: list[RunRow] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "means": [r.to_dict() for r in self.means],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MetricsReport":
        return cls(
            rows=[RunRow.from_dict(r) for r in d["rows"]],
            means=[RunRow.from_dict(r) for r in d["means"]],
        )

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str) -> "MetricsReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in list(self.rows) + list(self.means):
                d = row.to_dict()
                writer.writerow([_csv_cell(d[c]) for c in CSV_COLUMNS])

    @classmethod
    def from_csv(cls, path: str) -> "MetricsReport":
        report = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_COLUMNS:
                raise ValueError(
                    f"{path}: unexpected header {header!r}, expected {CSV_COLUMNS}"
                )
            for cells in reader:
                d = dict(zip(CSV_COLUMNS, cells))
                row = RunRow(
                    algo=d["algo"],
                    vehicles=int(d["vehicles"]),
                    run=d["run"],
                    seed=int(d["seed"]),
                    drop_ratio=float(d["drop_ratio"]),
                    mean_e2e_s=float(d["mean_e2e_s"]),
                    mean_wait_s=float(d["mean_wait_s"]),
                    objective=float(d["objective"]),
                    objective_normalized=float(d["objective_normalized"]),
                    total_exec_s=float(d["total_exec_s"]),
                    windows=int(d["windows"]),
                    per_window_exec_s=float(d["per_window_exec_s"]),
                    log10_exec=float(d["log10_exec"]),
                )
                (report.means if row.run == "mean" else report.rows).append(row)
        return report


def _csv_cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def make_scheduler(
    algo: str,
    config: "ExperimentConfig",
    seed: int,
    policies: Mapping[str, Any] | None = None,
):
    """Instantiate the scheduler behind an algorithm tag.

    RL tags need a trained policy in ``policies``; a fresh scheduler is
    built per call so stateful search seeds stay reproducible.
    """
    from . import heuristics
    from .rl.policy import PolicyScheduler

    policies = policies or {}
    if algo == "fcfs":
        return heuristics.FcfsScheduler()
    if algo == "sdf":
        return heuristics.SdfScheduler()
    if algo == "on-dyn-pso":
        return heuristics.DynamicPsoScheduler(
            config.pso, config.sim.lambda_weight, seed=seed
        )
    if algo in ("dqn", "ppo"):
        policy = policies.get(algo)
        if policy is None:
            raise ValueError(f"algorithm {algo} requires a trained policy")
        if policy.algorithm != algo:
            raise ValueError(
                f"policy trained for {policy.algorithm} cannot run as {algo}"
            )
        return PolicyScheduler(policy)
    raise ValueError(f"unknown algorithm tag {algo!r}; expected one of {ALGO_TAGS}")


def build_episode_tasks(config: "ExperimentConfig", vehicles: int, seed: int):
    """Trace plus task list for one seeded run, on independent substreams."""
    trace_seed, task_seed = [
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(2)
    ]
    trace = generate_trace(config.geometry, vehicles, trace_seed)
    tasks = spawn_tasks(
        trace,
        config.geometry,
        config.workload,
        config.sim.tasks_per_vehicle,
        task_seed,
    )
    return trace, tasks


def run_cell(
    config: "ExperimentConfig",
    algo: str,
    vehicles: int,
    run: str,
    seed: int,
    policies: Mapping[str, Any] | None = None,
    synthetic_costs: Mapping[str, float] | None = None,
    tasks=None,
    seed_orderings: Sequence[Sequence[int]] = (),
) -> tuple[RunRow, EpisodeResult]:
    """One (algorithm, density, seed) run.

    With ``synthetic_costs`` given, each scheduler invocation is charged
    the map's fixed cost for the algorithm instead of measured wall-clock,
    making the run byte-for-byte reproducible. The offline optimizer runs
    uncharged; its reported execution time is its optimization wall-clock
    (or the map's value, read as a total, in synthetic mode).
    ``seed_orderings`` warm-starts the offline swarm and is ignored by the
    online algorithms.
    """
    from . import heuristics

    cfg = config.sim
    sim = SimConfig(
        num_mecs=cfg.num_mecs,
        lambda_weight=cfg.lambda_weight,
        num_vehicles=vehicles,
        tasks_per_vehicle=cfg.tasks_per_vehicle,
        rng_seed=seed,
        window_cap=cfg.window_cap,
        charge_exec_time=cfg.charge_exec_time,
    )
    if tasks is None:
        _, tasks = build_episode_tasks(config, vehicles, seed)

    if algo == "off-sta-pso":
        t0 = time.perf_counter()
        plan = heuristics.pso_optimize_static(
            tasks, sim, config.channel, config.pso, seed,
            seed_orderings=seed_orderings,
        )
        wall = time.perf_counter() - t0
        base = heuristics.prepare_tasks(tasks, config.channel)
        result = heuristics.replay_ordering(base, plan.ordering, sim.num_mecs)
        if synthetic_costs is None:
            total_exec = wall
        else:
            total_exec = synthetic_costs.get(algo, 0.0)
        row = RunRow.from_result(
            algo, vehicles, run, seed, result, sim.lambda_weight, total_exec_s=total_exec
        )
        return row, result

    scheduler = make_scheduler(algo, config, seed, policies)
    exec_cost = None if synthetic_costs is None else synthetic_costs.get(algo, 0.0)
    result = run_episode(tasks, scheduler, sim, config.channel, exec_cost=exec_cost)
    row = RunRow.from_result(algo, vehicles, run, seed, result, sim.lambda_weight)
    return row, result


def run_matrix(
    config: "ExperimentConfig",
    algos: Sequence[str] = ALGO_TAGS,
    vehicle_counts: Sequence[int] = DEFAULT_VEHICLE_COUNTS,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    policies: Mapping[str, Any] | None = None,
    synthetic_costs: Mapping[str, float] | None = None,
) -> MetricsReport:
    """The full comparison: algorithms x densities x seeded runs.

    Every algorithm sees the same task list for a given (density, seed),
    so rows are comparable within a column. The offline optimizer runs
    after the online algorithms of its column and warm-starts its swarm
    with the schedules they actually executed, which pins it to its role
    as the performance bound: it can only improve on them.
    """
    from .heuristics import induced_ordering

    for algo in algos:
        if algo not in ALGO_TAGS:
            raise ValueError(f"unknown algorithm tag {algo!r}")
    report = MetricsReport()
    ordered = [a for a in algos if a != "off-sta-pso"] + [
        a for a in algos if a == "off-sta-pso"
    ]
    for vehicles in vehicle_counts:
        task_sets = {
            seed: build_episode_tasks(config, vehicles, seed)[1] for seed in seeds
        }
        executed: dict[int, list[tuple[int, ...]]] = {seed: [] for seed in seeds}
        rows_by_algo: dict[str, list[RunRow]] = {}
        for algo in ordered:
            cell_rows = []
            for i, seed in enumerate(seeds, start=1):
                row, result = run_cell(
                    config,
                    algo,
                    vehicles,
                    run=str(i),
                    seed=seed,
                    policies=policies,
                    synthetic_costs=synthetic_costs,
                    tasks=task_sets[seed],
                    seed_orderings=executed[seed],
                )
                cell_rows.append(row)
                if algo != "off-sta-pso":
                    executed[seed].append(induced_ordering(result))
            rows_by_algo[algo] = cell_rows
        # report in the caller's algorithm order, not execution order
        for algo in algos:
            report.rows.extend(rows_by_algo[algo])
            report.means.append(_mean_row(rows_by_algo[algo]))
    return report


def export_report(report: MetricsReport, fmt: str, path: str) -> None:
    if fmt == "csv":
        report.to_csv(path)
    elif fmt == "json":
        report.to_json(path)
    else:
        raise ValueError(f"unknown export format {fmt!r}; expected csv or json")
