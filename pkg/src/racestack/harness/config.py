"""Run configuration: one flat `section.key = value` text file, overridable by
CLI flags. Rates are expressed in Hz and must divide the plant rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..control.lowlevel import AllocatorConfig, PiVelocityConfig, YawPidConfig
from ..control.mpc import MpcConfig
from ..raceline import GgsParams
from ..sensors import OdometryNoise, PerceptionConfig
from ..slam.association import DaConfig
from ..vehicle import VehicleParams


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    track_path: str | None = None
    fixture: str | None = "fs_spain_like"   # used when track_path is None
    seed: int = 1
    laps: int = 1
    max_duration: float = 90.0              # s simulated time cap
    out_dir: str = "runs/out"
    slam_variant: str = "graph"             # graph | ekf
    raceline_enabled: bool = True
    telemetry_verbosity: int = 1
    background_slam: bool = False

    plant_rate: float = 1000.0
    control_rate: float = 200.0
    mpc_rate: float = 40.0
    perception_rate: float = 10.0

    vehicle: VehicleParams = field(default_factory=VehicleParams)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    odometry: OdometryNoise = field(default_factory=OdometryNoise)
    da: DaConfig = field(default_factory=DaConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    ggs: GgsParams = field(default_factory=GgsParams)
    allocator: AllocatorConfig = field(default_factory=AllocatorConfig)
    pi: PiVelocityConfig = field(default_factory=PiVelocityConfig)
    yaw_pid: YawPidConfig = field(default_factory=YawPidConfig)

    def __post_init__(self):
        for name in ("control_rate", "mpc_rate", "perception_rate"):
            ratio = self.plant_rate / getattr(self, name)
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigError(f"plant_rate must be an integer multiple of {name}")
        if self.slam_variant not in ("graph", "ekf"):
            raise ConfigError("slam_variant must be graph or ekf")


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_value(text: str):
    text = text.strip()
    if text.lower() in _BOOL:
        return _BOOL[text.lower()]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_config_file(path) -> dict:
    """Flat `section.key = value` pairs; '#' starts a comment."""
    pairs: dict = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {i}: expected key = value, got {raw!r}")
        key, val = line.split("=", 1)
        pairs[key.strip()] = _parse_value(val)
    return pairs


_SECTION_BUILDERS = {
    "perception": PerceptionConfig,
    "odometry": OdometryNoise,
    "da": DaConfig,
    "mpc": MpcConfig,
    "ggs": GgsParams,
    "allocator": AllocatorConfig,
    "pi": PiVelocityConfig,
    "yaw_pid": YawPidConfig,
}


def build_run_config(pairs: dict, overrides: dict | None = None) -> RunConfig:
    """Assemble a RunConfig from flat pairs; overrides win over file values."""
    merged = dict(pairs)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    top: dict = {}
    sections: dict = {name: {} for name in _SECTION_BUILDERS}
    vehicle_pairs: dict = {}
    for key, val in merged.items():
        if "." in key:
            section, sub = key.split(".", 1)
            if section == "vehicle":
                vehicle_pairs[sub] = val
            elif section in sections:
                sections[section][sub] = val
            else:
                raise ConfigError(f"unknown config section {section!r}")
        else:
            top[key] = val

    kwargs = dict(top)
    if vehicle_pairs:
        kwargs["vehicle"] = VehicleParams.from_config(
            {k: str(v) for k, v in vehicle_pairs.items()})
    for name, builder in _SECTION_BUILDERS.items():
        if sections[name]:
            try:
                kwargs[name] = builder(**sections[name])
            except TypeError as exc:
                raise ConfigError(f"bad key in section {name!r}: {exc}") from exc
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    pairs = read_config_file(path) if path else {}
    return build_run_config(pairs, overrides)
