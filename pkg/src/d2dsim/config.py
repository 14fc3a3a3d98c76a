"""Simulation configuration and its JSON form."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .geometry import ChannelParams, DeploymentConfig, ScenarioKind
from .modeselect import MsPolicy
from .powerctl import PcScheme, PowerParams, UmConfig


class ConfigError(ValueError):
    pass


def _build(cls, data: dict | None, where: str):
    data = dict(data or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


@dataclass
class SimConfig:
    scenario: ScenarioKind = ScenarioKind.PROXIMITY
    mode_selection: MsPolicy = MsPolicy.HMS
    power_control: PcScheme = PcScheme.UTILITY_MAX
    omega: float = 1.0
    drops: int = 100
    seed: int = 1
    out_dir: str = "out"
    # Only explicitly set deployment keys; the rest follow the scenario.
    deployment_overrides: dict = field(default_factory=dict)
    channel: ChannelParams = field(default_factory=ChannelParams)
    power: PowerParams = field(default_factory=PowerParams)
    um: UmConfig = field(default_factory=UmConfig)

    @property
    def deployment(self) -> DeploymentConfig:
        return DeploymentConfig.for_scenario(self.scenario, **self.deployment_overrides)

    @property
    def um_config(self) -> UmConfig:
        return dataclasses.replace(self.um, omega=self.omega)

    def validate(self) -> "SimConfig":
        if self.drops < 1:
            raise ConfigError("drops must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            self.deployment.validate()
            self.channel.validate()
            self.power.validate()
            self.um_config.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        data = dict(data)
        known = {"scenario", "mode_selection", "power_control", "omega", "drops", "seed",
                 "out_dir", "deployment", "channel", "power", "um"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(
                scenario=ScenarioKind.parse(data.get("scenario", "proximity")),
                mode_selection=MsPolicy.parse(data.get("mode_selection", "hms")),
                power_control=PcScheme.parse(data.get("power_control", "um")),
                omega=float(data.get("omega", 1.0)),
                drops=int(data.get("drops", 100)),
                seed=int(data.get("seed", 1)),
                out_dir=str(data.get("out_dir", "out")),
                deployment_overrides=dict(data.get("deployment", {})),
                channel=_build(ChannelParams, data.get("channel"), "channel"),
                power=_build(PowerParams, data.get("power"), "power"),
                um=_build(UmConfig, data.get("um"), "um"),
            )
            _build(DeploymentConfig, cfg.deployment_overrides, "deployment")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        return cfg

    @classmethod
    def load(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        """Fully resolved echo, suitable for summary.json."""
        um = dataclasses.asdict(self.um_config)
        return {
            "scenario": self.scenario.value,
            "mode_selection": self.mode_selection.value,
            "power_control": self.power_control.value,
            "omega": self.omega,
            "drops": self.drops,
            "seed": self.seed,
            "deployment": dataclasses.asdict(self.deployment),
            "channel": dataclasses.asdict(self.channel),
            "power": dataclasses.asdict(self.power),
            "um": um,
        }


# Deployment keys whose default depends on the scenario; left out of the
# default file so that editing "scenario" alone is enough.
SCENARIO_KEYS = ("min_bs_ue_m", "cellular_ues_per_cell", "d2d_triplets_per_cell")


def write_default_config(path) -> None:
    data = SimConfig().to_dict()
    for key in SCENARIO_KEYS:
        data["deployment"].pop(key)
    Path(path).write_text(json.dumps(data, indent=2) + "\n")
