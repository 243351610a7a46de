"""Trained policy container, file format, and greedy deployment.

A policy file is a versioned JSON document: the algorithm tag, the
encoder contract (server count, window cap, normalization constants),
and each network's layer shapes with row-major weight arrays. JSON keeps
the format inspectable; writing with sorted keys and fixed separators
makes save -> load -> save byte-identical, which the test suite holds it
to. A policy can only drive a simulation whose shape matches its encoder
contract; mismatches raise instead of silently mis-encoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..domain import MecState
from ..engine import DecisionWindow
from .encoding import EncoderSpec, encode_state
from .nets import Mlp

POLICY_FORMAT_VERSION = 1

_ALGORITHMS = ("dqn", "ppo")
# which networks each algorithm carries
_REQUIRED_NETS = {"dqn": ("q",), "ppo": ("actor", "critic")}


class PolicyFormatError(ValueError):
    """The file is not a policy container this package can read."""


class PolicyContractError(ValueError):
    """The policy's encoder contract does not match the simulation."""


@dataclass
class Policy:
    """A trained scheduler: encoder contract plus one or two networks."""

    algorithm: str
    encoder: EncoderSpec
    networks: dict[str, Mlp]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.algorithm not in _ALGORITHMS:
            raise PolicyFormatError(f"unknown algorithm {self.algorithm!r}")
        required = _REQUIRED_NETS[self.algorithm]
        missing = [n for n in required if n not in self.networks]
        if missing:
            raise PolicyFormatError(f"{self.algorithm} policy missing networks {missing}")


def policy_to_dict(policy: Policy) -> dict[str, Any]:
    nets = {}
    for name, net in policy.networks.items():
        layers = net.layers()
        nets[name] = {
            "activation": net.activation,
            "layer_shapes": [[int(w.shape[0]), int(w.shape[1])] for w, _ in layers],
            "layers": [
                {"weights": w.tolist(), "biases": b.tolist()} for w, b in layers
            ],
        }
    return {
        "format_version": POLICY_FORMAT_VERSION,
        "algorithm": policy.algorithm,
        "num_mecs": policy.encoder.num_mecs,
        "window_cap": policy.encoder.window_cap,
        "normalization": {
            "time_scale": policy.encoder.time_scale,
            "proc_scale": policy.encoder.proc_scale,
        },
        "networks": nets,
        "metadata": policy.metadata,
    }


def policy_from_dict(d: Mapping[str, Any]) -> Policy:
    try:
        version = d["format_version"]
    except (TypeError, KeyError):
        raise PolicyFormatError("not a policy container: missing format_version")
    if version != POLICY_FORMAT_VERSION:
        raise PolicyFormatError(
            f"unsupported policy format version {version!r}, "
            f"this build reads version {POLICY_FORMAT_VERSION}"
        )
    try:
        enc = EncoderSpec(
            num_mecs=d["num_mecs"],
            window_cap=d["window_cap"],
            time_scale=d["normalization"]["time_scale"],
            proc_scale=d["normalization"]["proc_scale"],
        )
        networks = {}
        for name, spec in d["networks"].items():
            layers = [
                (
                    np.array(layer["weights"], dtype=np.float64),
                    np.array(layer["biases"], dtype=np.float64),
                )
                for layer in spec["layers"]
            ]
            declared = [tuple(s) for s in spec["layer_shapes"]]
            actual = [w.shape for w, _ in layers]
            if declared != actual:
                raise PolicyFormatError(
                    f"network {name}: declared shapes {declared} but arrays are {actual}"
                )
            networks[name] = Mlp.from_weights(layers, activation=spec["activation"])
        return Policy(
            algorithm=d["algorithm"],
            encoder=enc,
            networks=networks,
            metadata=dict(d.get("metadata", {})),
        )
    except PolicyFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PolicyFormatError(f"malformed policy container: {exc}") from exc


def save_policy(policy: Policy, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(policy), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_policy(path: str) -> Policy:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PolicyFormatError(f"{path}: not JSON: {exc}") from exc
    return policy_from_dict(d)


def masked_argmax(values: np.ndarray, mask: np.ndarray) -> int:
    """Highest-value index among masked-in entries (first on ties)."""
    if not mask.any():
        raise ValueError("mask admits no action")
    scores = np.where(mask, values, -np.inf)
    return int(np.argmax(scores))


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Probabilities over masked-in entries; masked-out entries get 0."""
    if not mask.any():
        raise ValueError("mask admits no action")
    z = np.where(mask, logits, -np.inf)
    z = z - z[mask].max()
    e = np.where(mask, np.exp(z), 0.0)
    return e / e.sum()


class PolicyScheduler:
    """Deploy a trained policy greedily inside the engine.

    A value policy picks the highest masked action value; an actor-critic
    policy picks the most probable masked action and also evaluates its
    critic, keeping the state value in ``last_value`` for monitoring.
    """

    def __init__(self, policy: Policy):
        self.policy = policy
        self.name = policy.algorithm
        self.last_value: float | None = None

    def select(self, window: DecisionWindow, mecs: Sequence[MecState], now: float) -> int:
        enc = self.policy.encoder
        if len(mecs) != enc.num_mecs:
            raise PolicyContractError(
                f"policy was trained for {enc.num_mecs} servers, "
                f"simulation runs {len(mecs)}"
            )
        state, mask = encode_state(mecs, window, now, enc)
        x = state.as_vector()
        if self.policy.algorithm == "dqn":
            q = self.policy.networks["q"].forward(x)
            return masked_argmax(q, mask)
        probs = masked_softmax(self.policy.networks["actor"].forward(x), mask)
        self.last_value = float(self.policy.networks["critic"].forward(x)[0])
        return masked_argmax(probs, mask)
