"""Fixed-width state encoding of a decision window.

A learning scheduler sees the M server availabilities followed by up to
``window_cap`` task slots, each a (arrival offset, remaining coverage,
processing time) triple plus a validity flag. Offsets are relative to the
current clock and divided by scale constants so typical values sit near
unit magnitude. Slots fill in arrival order; when the feasible set
overflows the cap, the surplus tasks are simply not offered this
invocation (they stay queued and reappear in later windows). The action
mask marks which slots hold real tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..domain import ConfigError, MecState
from ..engine import DecisionWindow


@dataclass
class EncoderSpec:
    """Contract between a trained policy and the simulator shape."""

    num_mecs: int = 2
    window_cap: int = 16
    time_scale: float = 10.0
    proc_scale: float = 1.0

    def __post_init__(self) -> None:
        violations = []
        if not isinstance(self.num_mecs, int) or self.num_mecs < 1:
            violations.append(f"num_mecs must be an integer >= 1, got {self.num_mecs!r}")
        if not isinstance(self.window_cap, int) or self.window_cap < 1:
            violations.append(f"window_cap must be an integer >= 1, got {self.window_cap!r}")
        if self.time_scale <= 0:
            violations.append(f"time_scale must be positive, got {self.time_scale}")
        if self.proc_scale <= 0:
            violations.append(f"proc_scale must be positive, got {self.proc_scale}")
        if violations:
            raise ConfigError(violations)

    @property
    def state_dim(self) -> int:
        return self.num_mecs + 4 * self.window_cap

    @property
    def action_dim(self) -> int:
        return self.window_cap

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_mecs": self.num_mecs,
            "window_cap": self.window_cap,
            "time_scale": self.time_scale,
            "proc_scale": self.proc_scale,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EncoderSpec":
        return cls(**d)


@dataclass
class StateVector:
    """Structured view of one encoded state.

    ``mec_avail`` has shape (M,), ``slots`` (window_cap, 3), ``flags``
    (window_cap,). ``as_vector`` flattens them in that order, which is the
    layout every network in this package consumes.
    """

    mec_avail: np.ndarray
    slots: np.ndarray
    flags: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.mec_avail, self.slots.ravel(), self.flags])


def encode_state(
    mecs: Sequence[MecState],
    window: DecisionWindow,
    now: float,
    enc: EncoderSpec,
) -> tuple[StateVector, np.ndarray]:
    """Encode one decision point. Pure: touches neither window nor servers.

    Returns the state and the boolean action mask (True where a slot holds
    a selectable task).
    """
    if len(mecs) != enc.num_mecs:
        raise ValueError(
            f"encoder expects {enc.num_mecs} servers, simulation has {len(mecs)}"
        )
    feas = window.feasible
    if not feas:
        raise ValueError("cannot encode an empty window")
    mec_avail = np.array(
        [(m.available_at - now) / enc.time_scale for m in mecs], dtype=np.float64
    )
    slots = np.zeros((enc.window_cap, 3), dtype=np.float64)
    flags = np.zeros(enc.window_cap, dtype=np.float64)
    for i, t in enumerate(feas[: enc.window_cap]):
        slots[i, 0] = (t.arrival - now) / enc.time_scale
        slots[i, 1] = (t.deadline - now) / enc.time_scale
        slots[i, 2] = t.proc_time / enc.proc_scale
        flags[i] = 1.0
    return StateVector(mec_avail=mec_avail, slots=slots, flags=flags), flags > 0.0
