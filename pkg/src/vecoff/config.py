"""One bundle for every knob an experiment needs.

The sections mirror the package layout: simulation, road geometry,
workload, radio channel, swarm search, the two trainers, and the state
encoder. A config round-trips through canonical JSON, and
``cross_validate`` checks the constraints that span sections, chiefly
that the encoder contract agrees with the simulator shape.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

from .domain import ChannelParams, ConfigError, SimConfig, dumps, validate_config
from .heuristics import PsoParams
from .mobility import ScenarioGeometry, WorkloadModel
from .rl.dqn import DqnParams
from .rl.encoding import EncoderSpec
from .rl.ppo import PpoParams

_SECTIONS = (
    "sim", "geometry", "workload", "channel", "pso", "dqn", "ppo", "encoder",
)


@dataclass
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    geometry: ScenarioGeometry = field(default_factory=ScenarioGeometry)
    workload: WorkloadModel = field(default_factory=WorkloadModel)
    channel: ChannelParams = field(default_factory=ChannelParams)
    pso: PsoParams = field(default_factory=PsoParams)
    dqn: DqnParams = field(default_factory=DqnParams)
    ppo: PpoParams = field(default_factory=PpoParams)
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    # density of the episodes both trainers practice on; 100 vehicles
    # gives training episodes in the 40-60 decision range, the same
    # regime the comparison matrix evaluates at its middle density
    train_vehicles: int = 100

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "sim": self.sim.to_dict(),
            "geometry": self.geometry.to_dict(),
            "workload": self.workload.to_dict(),
            "channel": self.channel.to_dict(),
            "pso": self.pso.to_dict(),
            "dqn": _params_to_dict(self.dqn),
            "ppo": _params_to_dict(self.ppo),
            "encoder": self.encoder.to_dict(),
            "train_vehicles": self.train_vehicles,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = set(_SECTIONS) | {"train_vehicles"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError([f"unknown config section(s): {', '.join(unknown)}"])
        kwargs: dict[str, Any] = {}
        loaders = {
            "sim": SimConfig.from_dict,
            "geometry": ScenarioGeometry.from_dict,
            "workload": WorkloadModel.from_dict,
            "channel": ChannelParams.from_dict,
            "pso": PsoParams.from_dict,
            "dqn": lambda s: _params_from_dict(DqnParams, s),
            "ppo": lambda s: _params_from_dict(PpoParams, s),
            "encoder": EncoderSpec.from_dict,
        }
        for name, loader in loaders.items():
            if name in d:
                kwargs[name] = loader(d[name])
        if "train_vehicles" in d:
            kwargs["train_vehicles"] = d["train_vehicles"]
        return cls(**kwargs)


def _params_to_dict(params: Any) -> dict[str, Any]:
    d = dataclasses.asdict(params)
    if "hidden" in d:
        d["hidden"] = list(d["hidden"])
    return d


def _params_from_dict(cls: type, d: dict[str, Any]) -> Any:
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ConfigError(
            [f"unknown {cls.__name__} field(s): {', '.join(unknown)}"]
        )
    kwargs = dict(d)
    if "hidden" in kwargs:
        kwargs["hidden"] = tuple(kwargs["hidden"])
    return cls(**kwargs)


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def cross_validate(config: ExperimentConfig) -> ExperimentConfig:
    """Check constraints that span sections; collects every violation."""
    violations: list[str] = []
    try:
        validate_config(config.sim)
    except ConfigError as exc:
        violations.extend(exc.violations)
    if config.encoder.num_mecs != config.sim.num_mecs:
        violations.append(
            f"encoder expects {config.encoder.num_mecs} servers but the "
            f"simulation runs {config.sim.num_mecs}"
        )
    if config.encoder.window_cap != config.sim.window_cap:
        violations.append(
            f"encoder window cap {config.encoder.window_cap} differs from "
            f"simulation window cap {config.sim.window_cap}"
        )
    if not isinstance(config.train_vehicles, int) or config.train_vehicles < 1:
        violations.append(
            f"train_vehicles must be an integer >= 1, got {config.train_vehicles!r}"
        )
    if violations:
        raise ConfigError(violations)
    return config


def save_config(config: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(config.to_dict()))


def load_config(path: str) -> ExperimentConfig:
    import json

    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not JSON: {exc}"]) from exc
    return cross_validate(ExperimentConfig.from_dict(d))
