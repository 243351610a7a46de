"""Learning schedulers: state encoding, reward shaping, numpy networks,
value-based and policy-gradient training, and policy persistence."""

from .encoding import EncoderSpec, StateVector, encode_state
from .reward import RewardBreakdown, decision_reward
from .nets import Adam, Mlp
from .policy import (
    Policy,
    PolicyContractError,
    PolicyFormatError,
    PolicyScheduler,
    load_policy,
    save_policy,
)
from .dqn import DqnParams, TrainResult, TrainingDiverged, train_dqn
from .ppo import PpoParams, train_ppo
from .envs import OffloadEnv, ToyTwoActionEnv

__all__ = [
    "EncoderSpec",
    "StateVector",
    "encode_state",
    "RewardBreakdown",
    "decision_reward",
    "Adam",
    "Mlp",
    "Policy",
    "PolicyContractError",
    "PolicyFormatError",
    "PolicyScheduler",
    "load_policy",
    "save_policy",
    "DqnParams",
    "TrainResult",
    "TrainingDiverged",
    "train_dqn",
    "PpoParams",
    "train_ppo",
    "OffloadEnv",
    "ToyTwoActionEnv",
]
