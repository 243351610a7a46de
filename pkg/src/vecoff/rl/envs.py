"""Episode environments for training schedulers.

Both environments share one minimal interface: ``reset() -> (state,
mask)`` and ``step(action) -> (reward, next_or_None, done)``, where
``state`` is the flat float vector and ``mask`` the boolean action mask.
There is deliberately no discounting or bookkeeping here; trainers own
that.

Actions outside the mask are legal to *take* but worthless: the step
earns zero reward and the episode advances as if the first task of the
window had been chosen. Exploration can therefore roam the whole padded
action space and learn which slots hold real work, while the simulator
behind the environment only ever sees valid choices.
"""

from __future__ import annotations

import numpy as np

from ..channel import ChannelParams, attach_comm_times
from ..domain import MecState, SimConfig, Task
from ..engine import DecisionPoint, DecisionWindow, EpisodeResult, episode_loop
from ..mobility import ScenarioGeometry, WorkloadModel, generate_trace, spawn_tasks
from .encoding import EncoderSpec, encode_state
from .reward import decision_reward

Obs = tuple[np.ndarray, np.ndarray]


class OffloadEnv:
    """Full simulation episodes, one decision window per step.

    Every reset draws a fresh traffic trace and task set from the
    environment's own seed stream, so two environments built with the
    same seed replay the same episode sequence. Scenarios that happen to
    produce no decision windows (every task lands on an idle server) are
    skipped and redrawn; a scenario so sparse that this keeps happening
    is a configuration error and raises.
    """

    def __init__(
        self,
        geometry: ScenarioGeometry,
        workload: WorkloadModel,
        sim: SimConfig,
        channel: ChannelParams,
        encoder: EncoderSpec,
        vehicles: int,
        seed: int,
        tasks_per_vehicle: int | None = None,
        max_regen: int = 200,
    ):
        self.geometry = geometry
        self.workload = workload
        self.sim = sim
        self.channel = channel
        self.encoder = encoder
        self.vehicles = vehicles
        self.tasks_per_vehicle = (
            sim.tasks_per_vehicle if tasks_per_vehicle is None else tasks_per_vehicle
        )
        self.max_regen = max_regen
        self._seed = seed
        self._seed_rng = np.random.default_rng(seed)
        self._loop = None
        self._point: DecisionPoint | None = None
        self.episodes_seen = 0
        self.last_result: EpisodeResult | None = None
        self.last_episode_seed: int | None = None

    def _draw_episode(self) -> list[Task]:
        ep_seed = int(self._seed_rng.integers(0, 2**31 - 1))
        self.last_episode_seed = ep_seed
        trace_seed, task_seed = [
            int(s.generate_state(1)[0]) for s in np.random.SeedSequence(ep_seed).spawn(2)
        ]
        trace = generate_trace(self.geometry, self.vehicles, trace_seed)
        tasks = spawn_tasks(
            trace, self.geometry, self.workload, self.tasks_per_vehicle, task_seed
        )
        return tasks

    def reset(self) -> Obs:
        for _ in range(self.max_regen):
            tasks = self._draw_episode()
            if not tasks:
                continue
            attach_comm_times(tasks, self.channel)
            loop = episode_loop(tasks, self.sim)
            try:
                point = next(loop)
            except StopIteration as stop:
                # ran to completion without ever consulting a scheduler
                self.last_result = stop.value
                continue
            self._loop = loop
            self._point = point
            self.episodes_seen += 1
            state, mask = encode_state(point.mecs, point.window, point.now, self.encoder)
            return state.as_vector(), mask
        raise RuntimeError(
            f"no decision windows in {self.max_regen} redraws; "
            "scenario has no contention"
        )

    def step(self, action: int) -> tuple[float, Obs | None, bool]:
        if self._point is None or self._loop is None:
            raise RuntimeError("step() before reset(), or episode already done")
        window = self._point.window
        # a pick outside the feasible window earns nothing; the engine
        # still needs a decision, so the first feasible task stands in
        visible = min(len(window.feasible), self.encoder.window_cap)
        if 0 <= action < visible:
            reward = decision_reward(window, action).r_total
            choice = action
        else:
            reward = 0.0
            choice = 0
        try:
            point = self._loop.send((choice, 0.0))
        except StopIteration as stop:
            self.last_result = stop.value
            self._loop = None
            self._point = None
            return reward, None, True
        self._point = point
        state, mask = encode_state(point.mecs, point.window, point.now, self.encoder)
        return reward, (state.as_vector(), mask), False

    def snapshot_score(self, net, episodes: int = 10) -> float:
        """Greedy scheduling quality of ``net``, as a score to maximize.

        Replays a fixed held-out trace set (derived from this
        environment's seed, disjoint from its training stream) under the
        masked-greedy policy of ``net`` and returns the negated mean
        scheduling objective. Trainers use this to pick the snapshot
        worth deploying: per-episode reward sums barely move with policy
        quality here, because every window pays its chosen task a similar
        amount and unchosen tasks come back in later windows, while the
        objective is the quantity schedulers actually compete on.
        """
        from ..experiments import objective
        from .policy import masked_argmax

        env = OffloadEnv(
            self.geometry, self.workload, self.sim, self.channel,
            self.encoder, self.vehicles, seed=self._seed + 1_000_003,
            tasks_per_vehicle=self.tasks_per_vehicle,
        )
        total = 0.0
        for _ in range(episodes):
            state, mask = env.reset()
            done = False
            while not done:
                action = masked_argmax(net.forward(state), mask)
                _, nxt, done = env.step(action)
                if not done:
                    state, mask = nxt
            total += objective(env.last_result, self.sim.lambda_weight)
        return -total / episodes


class ToyTwoActionEnv:
    """One fabricated two-task window per episode, for sanity training.

    Each window holds an urgent cheap task (gap 0, tiny processing time)
    and a lax expensive one (gap 5..15 s, processing 1..3 s), with the
    good slot's position randomized. Picking the urgent task scores about
    199 of the 200 available points, the other near 0, so a learner that
    reads the state at all converges fast and one that exploits a fixed
    position cannot beat 50%.
    """

    URGENT_PROC = 0.01

    def __init__(self, encoder: EncoderSpec | None = None, seed: int = 0):
        self.encoder = encoder if encoder is not None else EncoderSpec()
        if self.encoder.window_cap < 2:
            raise ValueError("toy environment needs a window cap of at least 2")
        self._rng = np.random.default_rng(seed)
        self._mecs = [MecState(id=j + 1) for j in range(self.encoder.num_mecs)]
        self._window: DecisionWindow | None = None
        self.best_action: int | None = None
        self._episode = 0

    def _make_task(self, tid: int, gap: float, proc: float) -> Task:
        return Task(
            id=tid,
            vehicle_id=tid,
            arrival=0.0,
            size=1e6,
            proc_time=proc,
            deadline=gap,
            remaining_in_range=gap,
        )

    def reset(self) -> Obs:
        best = int(self._rng.integers(0, 2))
        gap_big = float(self._rng.uniform(5.0, 15.0))
        proc_big = float(self._rng.uniform(1.0, 3.0))
        urgent = self._make_task(0, 0.0, self.URGENT_PROC)
        lax = self._make_task(1, gap_big, proc_big)
        slots = [urgent, lax] if best == 0 else [lax, urgent]
        self._episode += 1
        self._window = DecisionWindow(
            index=self._episode, queued=list(slots), feasible=list(slots),
            earliest_avail=0.0,
        )
        self.best_action = best
        state, mask = encode_state(self._mecs, self._window, 0.0, self.encoder)
        return state.as_vector(), mask

    def step(self, action: int) -> tuple[float, Obs | None, bool]:
        if self._window is None:
            raise RuntimeError("step() before reset(), or episode already done")
        if 0 <= action < len(self._window.feasible):
            reward = decision_reward(self._window, action).r_total
        else:
            reward = 0.0
        self._window = None
        return reward, None, True
