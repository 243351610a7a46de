"""Actor-critic training of the window scheduler.

Clipped-surrogate policy optimization with generalized advantage
estimation, masked action distributions, and separate optimizers for the
actor and critic. Gradients are hand-derived against the network's
logits: the score term is (one-hot - probs) scaled by the active
surrogate branch, the entropy bonus differentiates to -p (log p + H),
and masked-out logits receive exactly zero gradient because they carry
zero probability and never enter the log-partition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dqn import REWARD_SCALE, TrainingDiverged, TrainResult
from .encoding import EncoderSpec
from .nets import Adam, Mlp
from .policy import Policy, masked_argmax


@dataclass
class PpoParams:
    episodes: int = 2500
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    gamma: float = 0.95
    gae_lambda: float = 0.95
    clip: float = 0.2
    rollout: int = 2048
    epochs: int = 10
    minibatch: int = 64
    entropy_coef: float = 0.01
    hidden: tuple[int, ...] = (128, 128)
    eval_every: int = 50
    eval_episodes: int = 10

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("episodes must be positive")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.clip <= 0.0:
            raise ValueError("clip must be positive")
        if self.rollout < 1 or self.minibatch < 1:
            raise ValueError("rollout and minibatch must be positive")


def _masked_softmax_rows(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise softmax over masked-in entries. Every row needs one."""
    neg = np.where(mask, logits, -np.inf)
    z = neg - neg.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sample_from(probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right").clip(0, len(probs) - 1))


def _greedy_episode(env, actor: Mlp) -> float:
    state, mask = env.reset()
    total = 0.0
    done = False
    while not done:
        probs = _masked_softmax_rows(actor.forward(state)[None, :], mask[None, :])[0]
        reward, nxt, done = env.step(masked_argmax(probs, mask))
        total += reward
        if not done:
            state, mask = nxt
    return total


def train_ppo(env, params: PpoParams, seed: int = 0) -> TrainResult:
    """Train an actor-critic pair on ``env``; returns the best snapshot.

    Episode accounting matches the value-based trainer: the run ends when
    ``params.episodes`` environment episodes have completed, regardless
    of how rollout boundaries fall.
    """
    enc: EncoderSpec = env.encoder
    rng = np.random.default_rng(seed)
    actor = Mlp([enc.state_dim, *params.hidden, enc.action_dim], rng=rng)
    critic = Mlp([enc.state_dim, *params.hidden, 1], rng=rng)
    opt_actor = Adam(actor.params(), lr=params.lr_actor)
    opt_critic = Adam(critic.params(), lr=params.lr_critic)

    reward_curve: list[float] = []
    eval_curve: list[tuple[int, float]] = []
    best_eval: float | None = None
    best_actor = actor.clone()
    best_critic = critic.clone()

    state, mask = env.reset()
    ep_reward = 0.0

    while len(reward_curve) < params.episodes:
        # one rollout, cut wherever the step budget lands
        n = params.rollout
        states = np.zeros((n, enc.state_dim))
        masks = np.zeros((n, enc.action_dim), dtype=bool)
        actions = np.zeros(n, dtype=np.int64)
        logprobs = np.zeros(n)
        rewards = np.zeros(n)
        dones = np.zeros(n, dtype=bool)
        values = np.zeros(n)
        t = 0
        while t < n:
            probs = _masked_softmax_rows(actor.forward(state)[None, :], mask[None, :])[0]
            if not np.all(np.isfinite(probs[mask])):
                raise TrainingDiverged("action probabilities are not finite")
            action = _sample_from(probs, rng)
            value = float(critic.forward(state)[0])
            reward, nxt, done = env.step(action)
            states[t] = state
            masks[t] = mask
            actions[t] = action
            logprobs[t] = np.log(probs[action])
            rewards[t] = reward / REWARD_SCALE
            dones[t] = done
            values[t] = value
            ep_reward += reward
            t += 1
            if done:
                reward_curve.append(ep_reward)
                ep_reward = 0.0
                ep = len(reward_curve)
                if params.eval_every and ep % params.eval_every == 0:
                    scorer = getattr(env, "snapshot_score", None)
                    if scorer is not None:
                        score = float(scorer(actor, params.eval_episodes))
                    else:
                        score = float(np.mean(
                            [_greedy_episode(env, actor) for _ in range(params.eval_episodes)]
                        ))
                    eval_curve.append((ep, score))
                    if best_eval is None or score > best_eval:
                        best_eval = score
                        best_actor = actor.clone()
                        best_critic = critic.clone()
                if ep >= params.episodes:
                    break
                state, mask = env.reset()
            else:
                state, mask = nxt

        states, masks, actions = states[:t], masks[:t], actions[:t]
        logprobs, rewards, dones, values = logprobs[:t], rewards[:t], dones[:t], values[:t]
        bootstrap = 0.0 if dones[-1] else float(critic.forward(state)[0])
        advantages = _gae(rewards, values, dones, bootstrap, params.gamma, params.gae_lambda)
        returns = advantages + values
        norm_adv = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

        for _ in range(params.epochs):
            order = rng.permutation(t)
            for lo in range(0, t, params.minibatch):
                mb = order[lo : lo + params.minibatch]
                _update_actor(
                    actor, opt_actor, states[mb], masks[mb], actions[mb],
                    logprobs[mb], norm_adv[mb], params,
                )
                _update_critic(critic, opt_critic, states[mb], returns[mb])

    final_actor = best_actor if best_eval is not None else actor
    final_critic = best_critic if best_eval is not None else critic
    policy = Policy(
        algorithm="ppo",
        encoder=enc,
        networks={"actor": final_actor, "critic": final_critic},
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


def _gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap: float,
    gamma: float,
    lam: float,
) -> np.ndarray:
    """Generalized advantage estimates, episodes cut at done flags."""
    n = len(rewards)
    adv = np.zeros(n)
    next_value = bootstrap
    running = 0.0
    for i in range(n - 1, -1, -1):
        cont = 0.0 if dones[i] else 1.0
        delta = rewards[i] + gamma * next_value * cont - values[i]
        running = delta + gamma * lam * cont * running
        adv[i] = running
        next_value = values[i]
    return adv


def _update_actor(
    actor: Mlp,
    opt: Adam,
    states: np.ndarray,
    masks: np.ndarray,
    actions: np.ndarray,
    logprobs_old: np.ndarray,
    advantages: np.ndarray,
    params: PpoParams,
) -> None:
    b = len(actions)
    logits, cache = actor.forward(states, want_cache=True)
    probs = _masked_softmax_rows(logits, masks)
    rows = np.arange(b)
    p_a = probs[rows, actions]
    if np.any(p_a <= 0.0) or not np.all(np.isfinite(p_a)):
        raise TrainingDiverged("chosen-action probability collapsed to zero")
    ratio = np.exp(np.log(p_a) - logprobs_old)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - params.clip, 1.0 + params.clip) * advantages
    # gradient flows only where the unclipped branch is the active minimum
    active = surr1 <= surr2
    g_logp = np.where(active, -advantages * ratio, 0.0) / b

    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    grad_logits = g_logp[:, None] * (onehot - probs)

    if params.entropy_coef > 0.0:
        plogp = np.where(probs > 0.0, probs * np.log(np.where(probs > 0.0, probs, 1.0)), 0.0)
        entropy = -plogp.sum(axis=1)
        # d(-c H)/dz = c * p (log p + H)
        logp_safe = np.where(probs > 0.0, np.log(np.where(probs > 0.0, probs, 1.0)), 0.0)
        grad_logits += (
            params.entropy_coef
            * probs
            * (logp_safe + entropy[:, None])
            * np.where(probs > 0.0, 1.0, 0.0)
        ) / b

    grads = actor.backward(cache, grad_logits)
    opt.step(grads)


def _update_critic(critic: Mlp, opt: Adam, states: np.ndarray, returns: np.ndarray) -> None:
    v, cache = critic.forward(states, want_cache=True)
    v = v.reshape(-1)
    err = v - returns
    if not np.all(np.isfinite(err)):
        raise TrainingDiverged("value estimates are not finite")
    grad_out = (2.0 * err / len(err)).reshape(-1, 1)
    grads = critic.backward(cache, grad_out)
    opt.step(grads)
