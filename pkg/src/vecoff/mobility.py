"""Vehicle traces, coverage geometry, and task generation.

Vehicles drive a straight road at constant per-vehicle speed and are
sampled at 1 Hz from the moment they enter the road. The roadside unit
covers a disc; a vehicle's deadline context is the instant it leaves that
disc. Positions between samples are linear in time (speeds are constant),
so range crossings are found exactly by solving the quadratic
|p(t) - rsu|^2 = radius^2 on the bracketing segment.

The geometry and workload defaults here are desk-scale placeholders chosen
for a loaded-but-survivable RSU; they make no claim to match any particular
field deployment.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .domain import ConfigError, Task

LANE_WIDTH_M = 3.5

TRACE_HEADER = ["time", "vehicle_id", "x", "y", "speed"]


@dataclass
class TraceSample:
    """One row of a floating-car trace."""

    time: float
    vehicle_id: int
    x: float
    y: float
    speed: float


@dataclass
class ScenarioGeometry:
    """Road layout and RSU placement.

    ``entry_rate`` is the mean rate (vehicles/second) of the Poisson
    process that staggers road entries; it is the main congestion knob.
    """

    rsu_x: float = 500.0
    rsu_y: float = 0.0
    coverage_radius: float = 250.0
    road_length: float = 1000.0
    lanes: int = 2
    speed_range: tuple[float, float] = (20.0, 30.0)
    entry_rate: float = 10.0

    def __post_init__(self) -> None:
        violations = []
        if self.coverage_radius <= 0:
            violations.append(f"coverage_radius must be positive, got {self.coverage_radius}")
        if self.road_length <= 0:
            violations.append(f"road_length must be positive, got {self.road_length}")
        if not isinstance(self.lanes, int) or self.lanes < 1:
            violations.append(f"lanes must be an integer >= 1, got {self.lanes!r}")
        lo, hi = self.speed_range
        if not (0 < lo <= hi):
            violations.append(f"speed_range must satisfy 0 < min <= max, got {self.speed_range}")
        if self.entry_rate <= 0:
            violations.append(f"entry_rate must be positive, got {self.entry_rate}")
        if violations:
            raise ConfigError(violations)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rsu_x": self.rsu_x,
            "rsu_y": self.rsu_y,
            "coverage_radius": self.coverage_radius,
            "road_length": self.road_length,
            "lanes": self.lanes,
            "speed_range": list(self.speed_range),
            "entry_rate": self.entry_rate,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioGeometry":
        d = dict(d)
        d["speed_range"] = tuple(d["speed_range"])
        return cls(**d)


# Per-frame processing time on an edge server, by input resolution.
DEFAULT_PROC_TIME_TABLE = {
    (224, 224): 0.05,
    (640, 480): 0.15,
    (1280, 720): 0.40,
}


@dataclass
class WorkloadModel:
    """What the vehicles ask the RSU to compute.

    Each task is one camera frame: ``size = width * height *
    bits_per_pixel``. Its processing time comes from ``proc_time_table``.
    A vehicle's k-th task is generated at its road-entry time plus the sum
    of k exponential draws with rate ``poisson_rate``.
    """

    poisson_rate: float = 0.1
    resolutions: tuple[tuple[int, int], ...] = ((224, 224), (640, 480), (1280, 720))
    bits_per_pixel: int = 24
    proc_time_table: dict[tuple[int, int], float] = field(
        default_factory=lambda: dict(DEFAULT_PROC_TIME_TABLE)
    )

    def __post_init__(self) -> None:
        violations = []
        if self.poisson_rate <= 0:
            violations.append(f"poisson_rate must be positive, got {self.poisson_rate}")
        if self.bits_per_pixel <= 0:
            violations.append(f"bits_per_pixel must be positive, got {self.bits_per_pixel}")
        if not self.resolutions:
            violations.append("resolutions must be non-empty")
        for res in self.resolutions:
            if res not in self.proc_time_table:
                violations.append(f"resolution {res} has no proc_time_table entry")
            elif self.proc_time_table[res] <= 0:
                violations.append(f"proc_time_table[{res}] must be positive")
        if violations:
            raise ConfigError(violations)

    def task_size(self, resolution: tuple[int, int]) -> int:
        w, h = resolution
        return w * h * self.bits_per_pixel

    def to_dict(self) -> dict[str, Any]:
        return {
            "poisson_rate": self.poisson_rate,
            "resolutions": [list(r) for r in self.resolutions],
            "bits_per_pixel": self.bits_per_pixel,
            "proc_time_table": {
                f"{w}x{h}": t for (w, h), t in sorted(self.proc_time_table.items())
            },
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WorkloadModel":
        table = {}
        for key, t in d["proc_time_table"].items():
            w, h = key.split("x")
            table[(int(w), int(h))] = t
        return cls(
            poisson_rate=d["poisson_rate"],
            resolutions=tuple(tuple(r) for r in d["resolutions"]),
            bits_per_pixel=d["bits_per_pixel"],
            proc_time_table=table,
        )


def generate_trace(
    geom: ScenarioGeometry, n_vehicles: int, seed: int
) -> list[TraceSample]:
    """Synthesize a floating-car trace.

    Vehicles enter at x=0 with exponential headways (rate
    ``geom.entry_rate``), drive at a constant speed drawn uniformly from
    ``geom.speed_range``, and are sampled at 1 Hz on a per-vehicle clock
    until they exit the road. Lanes only set the lateral offset.
    Deterministic for a fixed seed.
    """
    if n_vehicles < 0:
        raise ValueError(f"n_vehicles must be >= 0, got {n_vehicles}")
    rng = np.random.default_rng(seed)
    headways = rng.exponential(1.0 / geom.entry_rate, size=n_vehicles)
    entries = np.cumsum(headways)
    lo, hi = geom.speed_range
    speeds = rng.uniform(lo, hi, size=n_vehicles)
    samples: list[TraceSample] = []
    for vid in range(n_vehicles):
        speed = float(speeds[vid])
        entry = float(entries[vid])
        y = ((vid % geom.lanes) + 0.5) * LANE_WIDTH_M
        k = 0
        while speed * k < geom.road_length:
            samples.append(
                TraceSample(
                    time=entry + k,
                    vehicle_id=vid,
                    x=speed * k,
                    y=y,
                    speed=speed,
                )
            )
            k += 1
    return samples


def write_trace(samples: Iterable[TraceSample], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for s in samples:
            writer.writerow([repr(s.time), s.vehicle_id, repr(s.x), repr(s.y), repr(s.speed)])


def ingest_trace(path: str) -> list[TraceSample]:
    """Read a trace CSV, validating as it goes.

    A zero-byte or header-only file yields an empty trace. Malformed rows,
    negative speeds, and non-monotonic per-vehicle timestamps raise
    ValueError naming the offending line.
    """
    samples: list[TraceSample] = []
    last_time: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [c.strip() for c in header] != TRACE_HEADER:
            raise ValueError(
                f"{path}: line 1: expected header {','.join(TRACE_HEADER)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(TRACE_HEADER)} fields, "
                    f"got {len(row)}"
                )
            try:
                t = float(row[0])
                vid = int(row[1])
                x = float(row[2])
                y = float(row[3])
                speed = float(row[4])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: malformed row: {exc}") from None
            if speed < 0:
                raise ValueError(f"{path}: line {lineno}: negative speed {speed}")
            if vid in last_time and t <= last_time[vid]:
                raise ValueError(
                    f"{path}: line {lineno}: time {t} not increasing for vehicle {vid}"
                )
            last_time[vid] = t
            samples.append(TraceSample(time=t, vehicle_id=vid, x=x, y=y, speed=speed))
    return samples


def _crossings(
    samples: Sequence[TraceSample], geom: ScenarioGeometry
) -> tuple[float, float] | None:
    """In-range interval (t_in, t_out) of one vehicle, or None.

    Positions are linear between samples, so the squared distance to the
    RSU is quadratic in time on each segment and crossings solve exactly.
    If the vehicle is still inside coverage at its last sample, the
    interval is closed at that sample: nothing past the trace is assumed.
    """
    if not samples:
        return None
    r2 = geom.coverage_radius**2

    def dist2(s: TraceSample) -> float:
        return (s.x - geom.rsu_x) ** 2 + (s.y - geom.rsu_y) ** 2

    t_in: float | None = None
    if dist2(samples[0]) <= r2:
        t_in = samples[0].time
    for a, b in zip(samples, samples[1:]):
        dt = b.time - a.time
        if dt <= 0:
            raise ValueError(f"vehicle {a.vehicle_id}: non-increasing sample times")
        # p(s) = a + s*(b-a), s in [0,1]; solve |p(s)-rsu|^2 = r^2.
        ax, ay = a.x - geom.rsu_x, a.y - geom.rsu_y
        dx, dy = b.x - a.x, b.y - a.y
        qa = dx * dx + dy * dy
        qb = 2 * (ax * dx + ay * dy)
        qc = ax * ax + ay * ay - r2
        roots = []
        if qa > 0:
            disc = qb * qb - 4 * qa * qc
            if disc >= 0:
                sq = math.sqrt(disc)
                roots = [(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)]
        for s in roots:
            if 0 <= s <= 1:
                t = a.time + s * dt
                entering = dist2(a) > r2 and dist2(b) <= r2
                leaving = dist2(a) <= r2 and dist2(b) > r2
                if entering and t_in is None:
                    t_in = t
                elif leaving and t_in is not None:
                    return (t_in, t)
    if t_in is not None:
        # never left coverage within the trace
        return (t_in, samples[-1].time)
    return None


def vehicles_in_coverage(
    trace: Sequence[TraceSample], geom: ScenarioGeometry
) -> dict[int, tuple[float, float]]:
    """Map vehicle id -> (t_in, t_out) for vehicles that enter coverage."""
    by_vehicle: dict[int, list[TraceSample]] = {}
    for s in trace:
        by_vehicle.setdefault(s.vehicle_id, []).append(s)
    out = {}
    for vid in sorted(by_vehicle):
        interval = _crossings(by_vehicle[vid], geom)
        if interval is not None:
            out[vid] = interval
    return out


def deadline_of(
    arrival: float, samples: Sequence[TraceSample], geom: ScenarioGeometry
) -> tuple[float, float]:
    """(deadline, remaining_in_range) for a task arriving at ``arrival``.

    The deadline is the instant the vehicle's distance to the RSU next
    exceeds the coverage radius. A vehicle already out of range at
    ``arrival`` yields remaining_in_range = 0. Raises if the vehicle never
    enters coverage at all.
    """
    interval = _crossings(samples, geom)
    if interval is None:
        vid = samples[0].vehicle_id if samples else "?"
        raise ValueError(f"vehicle {vid} never enters coverage")
    t_in, t_out = interval
    if arrival >= t_out:
        return (arrival, 0.0)
    remaining = t_out - max(arrival, t_in)
    if arrival < t_in:
        # a task generated before coverage is held until range entry
        remaining = t_out - t_in
    return (arrival + remaining, remaining)


def spawn_tasks(
    trace: Sequence[TraceSample],
    geom: ScenarioGeometry,
    workload: WorkloadModel,
    tasks_per_vehicle: int,
    seed: int,
) -> list[Task]:
    """Generate the episode's task list from a trace.

    Each covered vehicle emits ``tasks_per_vehicle`` tasks. A task
    generated before range entry arrives at the entry instant; one
    generated after range exit is clamped to the exit instant (its
    remaining time is then zero and the engine will drop it). Vehicles
    that never enter coverage emit nothing. Task ids are assigned in
    arrival order. Deterministic for a fixed seed.
    """
    if tasks_per_vehicle < 1:
        raise ValueError(f"tasks_per_vehicle must be >= 1, got {tasks_per_vehicle}")
    rng = np.random.default_rng(seed)
    by_vehicle: dict[int, list[TraceSample]] = {}
    for s in trace:
        by_vehicle.setdefault(s.vehicle_id, []).append(s)

    drafts = []
    for vid in sorted(by_vehicle):
        samples = by_vehicle[vid]
        interval = _crossings(samples, geom)
        # draws happen even for uncovered vehicles so that coverage does not
        # shift the random stream of later vehicles
        gen = samples[0].time
        for _ in range(tasks_per_vehicle):
            gen += rng.exponential(1.0 / workload.poisson_rate)
            res = workload.resolutions[rng.integers(len(workload.resolutions))]
            if interval is None:
                continue
            t_in, t_out = interval
            arrival = min(max(gen, t_in), t_out)
            remaining = t_out - arrival
            drafts.append(
                {
                    "vehicle_id": vid,
                    "arrival": arrival,
                    "size": workload.task_size(res),
                    "proc_time": workload.proc_time_table[res],
                    "deadline": arrival + remaining,
                    "remaining_in_range": remaining,
                }
            )

    drafts.sort(key=lambda d: (d["arrival"], d["vehicle_id"]))
    return [Task(id=i, **d) for i, d in enumerate(drafts)]
