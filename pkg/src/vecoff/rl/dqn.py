"""Value-based training of the window scheduler.

Classic replay-buffer Q-learning with a target network and masked
epsilon-greedy exploration. Rewards enter the learner divided by
REWARD_SCALE so temporal-difference errors stay in the Huber loss's
quadratic zone; the greedy policy is invariant to that scaling, and the
reported reward curves are always in raw units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .encoding import EncoderSpec
from .nets import Adam, Mlp
from .policy import Policy, masked_argmax

REWARD_SCALE = 100.0
HUBER_DELTA = 1.0


class TrainingDiverged(RuntimeError):
    """A loss or value estimate stopped being finite."""


@dataclass
class DqnParams:
    episodes: int = 2500
    lr: float = 1e-4
    gamma: float = 0.9
    batch_size: int = 64
    replay_capacity: int = 50_000
    target_sync: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_anneal_frac: float = 0.6
    explore_full_frac: float = 0.5
    warmup: int = 128
    updates_per_step: int = 1
    hidden: tuple[int, ...] = (128, 128)
    eval_every: int = 50
    eval_episodes: int = 10

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("episodes must be positive")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        if not (0.0 <= self.eps_end <= self.eps_start <= 1.0):
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if not (0.0 < self.eps_anneal_frac <= 1.0):
            raise ValueError("eps_anneal_frac must be in (0, 1]")
        if not (0.0 <= self.explore_full_frac <= 1.0):
            raise ValueError("explore_full_frac must be in [0, 1]")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must hold at least one batch")


@dataclass
class TrainResult:
    """What a training run hands back.

    ``policy`` holds the best greedy snapshot seen during evaluation
    (the final weights when evaluation never ran); ``reward_curve`` is
    the raw per-episode training return, ``eval_curve`` pairs of
    (episode, snapshot score) under whichever score the environment
    defines (its ``snapshot_score`` when present, mean greedy return
    otherwise).
    """

    policy: Policy
    reward_curve: list[float]
    eval_curve: list[tuple[int, float]] = field(default_factory=list)
    best_eval: float | None = None


class ReplayBuffer:
    """Fixed-capacity circular transition store on preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim), dtype=np.float64)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float64)
        self.next_masks = np.zeros((capacity, action_dim), dtype=bool)
        self.dones = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._head = 0

    def push(
        self,
        state: np.ndarray,
        action: int,
        reward: float,
        next_state: np.ndarray | None,
        next_mask: np.ndarray | None,
        done: bool,
    ) -> None:
        i = self._head
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        if next_state is None:
            self.next_states[i] = 0.0
            self.next_masks[i] = False
        else:
            self.next_states[i] = next_state
            self.next_masks[i] = next_mask
        self.dones[i] = done
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, size=batch)


def _masked_max(q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise max over masked-in entries; rows with no entries give 0."""
    neg = np.where(mask, q, -np.inf)
    any_valid = mask.any(axis=1)
    out = np.zeros(q.shape[0])
    if any_valid.any():
        out[any_valid] = neg[any_valid].max(axis=1)
    return out


def _greedy_episode(env, net: Mlp) -> float:
    state, mask = env.reset()
    total = 0.0
    done = False
    while not done:
        action = masked_argmax(net.forward(state), mask)
        reward, nxt, done = env.step(action)
        total += reward
        if not done:
            state, mask = nxt
    return total


def train_dqn(
    env,
    params: DqnParams,
    seed: int = 0,
    on_snapshot: "Callable[[int, Mlp], None] | None" = None,
) -> TrainResult:
    """Train a Q-network on ``env`` and return the greedy policy.

    ``env`` follows the reset/step contract of the environments in this
    package and exposes its EncoderSpec as ``env.encoder``. The random
    arm of the epsilon-greedy explorer splits its draws: a
    ``explore_full_frac`` share samples the whole padded action space,
    where slots without a feasible task pay zero, so part of the early
    reward mass is forfeit and the training curve climbs as the network
    learns to point at real work; the rest samples the feasible slots
    only, which keeps comparing real candidates against each other. The
    greedy arm and the returned policy are masked and never pick an
    empty slot. Empty-slot picks shape the training curve but are not
    replayed, since no masked computation ever reads their values.

    Every ``eval_every`` episodes the online network is scored and the
    best-scoring snapshot becomes the returned policy. Environments that
    provide ``snapshot_score`` (a held-out greedy quality probe) define
    the score themselves; otherwise it is the mean greedy return over
    ``eval_episodes`` fresh episodes. ``on_snapshot``, when given,
    receives a clone of the online network at every evaluation point,
    for checkpointing or offline snapshot selection. Raises
    TrainingDiverged if values stop being finite.
    """
    enc: EncoderSpec = env.encoder
    rng = np.random.default_rng(seed)
    online = Mlp([enc.state_dim, *params.hidden, enc.action_dim], rng=rng)
    target = online.clone()
    opt = Adam(online.params(), lr=params.lr)
    buffer = ReplayBuffer(params.replay_capacity, enc.state_dim, enc.action_dim)

    anneal_steps = max(1, int(params.eps_anneal_frac * params.episodes))
    reward_curve: list[float] = []
    eval_curve: list[tuple[int, float]] = []
    best_eval: float | None = None
    best_net = online.clone()
    decision_steps = 0

    for ep in range(params.episodes):
        frac = min(1.0, ep / anneal_steps)
        eps = params.eps_start + (params.eps_end - params.eps_start) * frac
        state, mask = env.reset()
        done = False
        ep_reward = 0.0
        while not done:
            if rng.random() < eps:
                if rng.random() < params.explore_full_frac:
                    action = int(rng.integers(0, enc.action_dim))
                else:
                    action = int(rng.choice(np.flatnonzero(mask)))
            else:
                action = masked_argmax(online.forward(state), mask)
            reward, nxt, done = env.step(action)
            ep_reward += reward
            next_state, next_mask = (None, None) if nxt is None else nxt
            # Non-actions are not replayed: the greedy arm, the bootstrap
            # max, and the deployed policy are all masked, so empty-slot
            # values are never read and fitting them only bleeds trunk
            # capacity from the comparisons that matter.
            if mask[action]:
                buffer.push(
                    state, action, reward / REWARD_SCALE, next_state, next_mask, done
                )
            decision_steps += 1
            if buffer.size >= max(params.warmup, params.batch_size):
                for _ in range(params.updates_per_step):
                    _learn_step(online, target, opt, buffer, params, rng)
            if decision_steps % params.target_sync == 0:
                target = online.clone()
            if not done:
                state, mask = nxt
        reward_curve.append(ep_reward)

        if params.eval_every and (ep + 1) % params.eval_every == 0:
            scorer = getattr(env, "snapshot_score", None)
            if scorer is not None:
                score = float(scorer(online, params.eval_episodes))
            else:
                score = float(
                    np.mean([_greedy_episode(env, online) for _ in range(params.eval_episodes)])
                )
            eval_curve.append((ep + 1, score))
            if on_snapshot is not None:
                on_snapshot(ep + 1, online.clone())
            if best_eval is None or score > best_eval:
                best_eval = score
                best_net = online.clone()

    final_net = best_net if best_eval is not None else online
    policy = Policy(
        algorithm="dqn",
        encoder=enc,
        networks={"q": final_net},
        metadata={
            "episodes": params.episodes,
            "reward_scale": REWARD_SCALE,
            "seed": seed,
        },
    )
    return TrainResult(
        policy=policy,
        reward_curve=reward_curve,
        eval_curve=eval_curve,
        best_eval=best_eval,
    )


def _learn_step(
    online: Mlp,
    target: Mlp,
    opt: Adam,
    buffer: ReplayBuffer,
    params: DqnParams,
    rng: np.random.Generator,
) -> float:
    idx = buffer.sample(params.batch_size, rng)
    s = buffer.states[idx]
    a = buffer.actions[idx]
    r = buffer.rewards[idx]
    s2 = buffer.next_states[idx]
    m2 = buffer.next_masks[idx]
    d = buffer.dones[idx]

    q_next = _masked_max(target.forward(s2), m2)
    bootstrap = np.where(d, 0.0, params.gamma * q_next)
    target_q = r + bootstrap

    q, cache = online.forward(s, want_cache=True)
    rows = np.arange(len(idx))
    err = q[rows, a] - target_q
    if not np.all(np.isfinite(err)):
        raise TrainingDiverged("temporal-difference error is not finite")
    # Huber gradient: linear outside the delta band, quadratic inside
    derr = np.clip(err, -HUBER_DELTA, HUBER_DELTA)
    grad_out = np.zeros_like(q)
    grad_out[rows, a] = derr / len(idx)
    grads = online.backward(cache, grad_out)
    opt.step(grads)

    quad = np.minimum(np.abs(err), HUBER_DELTA)
    loss = float(np.mean(0.5 * quad**2 + HUBER_DELTA * (np.abs(err) - quad)))
    if not np.isfinite(loss):
        raise TrainingDiverged("loss is not finite")
    return loss
