"""Stack-wide configuration file.

One TOML file configures the whole stack:

    [shell]                 # see kinematics.ShellConfig
    strip_length_mm = 150.0
    strip_count = 18
    attach_radius_mm = 40.0
    pulley_radius_mm = 8.0
    max_compression_mm = 52.5

    [device]                # see devicesim.DeviceConfig
    max_speed_rad_s = 7.0
    supply_v = 7.5
    seed = 0

    [engine]
    tick_ms = 10
    led_pixels = 60
    ramp_s = 0.5

    [service]
    control_port = 7421
    browser_port = 7422
    telemetry_every = 5

    [behaviors.slow]        # default params per registered behavior
    amplitude = 0.7

Every section and key is optional; unknown keys are rejected so typos fail
loudly. The servo slew limit the engine enforces is derived from the shell
and device sections, not configured directly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .devicesim import DeviceConfig
from .engine import EngineConfig
from .errors import ConfigError
from .kinematics import ShellConfig

ENV_VAR = "LANTERN_CONFIG"


@dataclass(frozen=True)
class ServiceConfig:
    control_port: int = 7421
    browser_port: int = 7422
    telemetry_every: int = 5

    def __post_init__(self):
        for name in ("control_port", "browser_port"):
            port = getattr(self, name)
            if not 0 < port < 65536:
                raise ConfigError(f"service.{name} must be in 1..65535")
        if self.telemetry_every < 1:
            raise ConfigError("service.telemetry_every must be >= 1")


@dataclass(frozen=True)
class StackConfig:
    shell: ShellConfig = field(default_factory=ShellConfig)
    device: DeviceConfig = field(default_factory=DeviceConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    behavior_params: dict = field(default_factory=dict)


_SECTIONS = {
    "shell": ShellConfig,
    "device": DeviceConfig,
    "engine": EngineConfig,
    "service": ServiceConfig,
}


def _build_section(name: str, cls, data: dict):
    known = {f.name for f in dataclasses.fields(cls)}
    if name == "engine":
        known -= {"servo_slew_per_s"}  # derived, not configurable
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key {name}.{sorted(unknown)[0]}")
    return cls(**data)


def load_config(path=None) -> StackConfig:
    """Parse and validate a stack config file; None gives all defaults."""
    if path is None:
        cfg = StackConfig()
    else:
        text = Path(path).read_text()
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        unknown = set(doc) - set(_SECTIONS) - {"behaviors"}
        if unknown:
            raise ConfigError(f"unknown section [{sorted(unknown)[0]}]")
        sections = {}
        for name, cls in _SECTIONS.items():
            data = doc.get(name, {})
            if not isinstance(data, dict):
                raise ConfigError(f"[{name}] must be a table")
            sections[name] = _build_section(name, cls, data)
        behaviors = doc.get("behaviors", {})
        if not isinstance(behaviors, dict) or not all(
            isinstance(v, dict) for v in behaviors.values()
        ):
            raise ConfigError("[behaviors.<id>] must be tables of params")
        cfg = StackConfig(
            shell=sections["shell"],
            device=sections["device"],
            engine=sections["engine"],
            service=sections["service"],
            behavior_params={k: dict(v) for k, v in behaviors.items()},
        )
    # physical servo speed expressed in compression units; the engine clamps
    # command steps against this
    slew = cfg.device.max_speed_rad_s * cfg.shell.pulley_radius_mm / cfg.shell.max_compression_mm
    return dataclasses.replace(
        cfg, engine=dataclasses.replace(cfg.engine, servo_slew_per_s=slew)
    )


def validate_file(path) -> list[str]:
    """Problems found in a config file; empty means valid."""
    try:
        load_config(path)
    except ConfigError as exc:
        return [str(exc)]
    except OSError as exc:
        return [str(exc)]
    return []
