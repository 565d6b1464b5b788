"""Deterministic simulated hardware.

The servo is a slew-limited position tracker (no torque or inertia model):
each applied frame moves the position toward the commanded angle by at most
max_speed * dt. Shell geometry is always recomputed from the actual servo
position, so every snapshot satisfies the kinematic round-trip invariants.
Vibration amplitude and LED colors take effect instantly. Power is
bookkeeping only: the supply voltage is carried, current draw is not
modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kinematics, perception
from .engine import ActuatorFrame, Engine, Event
from .errors import ConfigError


@dataclass(frozen=True)
class DeviceConfig:
    max_speed_rad_s: float = 7.0
    supply_v: float = 7.5
    seed: int = 0

    def __post_init__(self):
        if self.max_speed_rad_s <= 0:
            raise ConfigError("device.max_speed_rad_s must be > 0")
        if self.supply_v <= 0:
            raise ConfigError("device.supply_v must be > 0")


@dataclass(frozen=True)
class ServoModel:
    max_speed_rad_s: float
    max_angle_rad: float
    position_rad: float


@dataclass(frozen=True)
class DeviceState:
    servo: ServoModel
    vibration_amplitude: float
    led: tuple[tuple[int, int, int], ...]
    geometry: kinematics.ShellGeometry
    supply_v: float
    seed: int


class DeviceSim:
    def __init__(self, shell: kinematics.ShellConfig | None = None,
                 cfg: DeviceConfig | None = None, tick_ms: int = 10):
        self.shell = shell or kinematics.ShellConfig()
        self.cfg = cfg or DeviceConfig()
        self.tick_ms = tick_ms
        self.max_angle_rad = kinematics.max_servo_angle(self.shell)
        self.position_rad = 0.0
        self.vibration = 0.0
        self.led: tuple = ((0, 0, 0),)
        self._last_t_ms: int | None = None
        self._cached: DeviceState | None = None

    def slew_per_s_compression(self) -> float:
        """Servo speed expressed in normalized compression per second."""
        return self.cfg.max_speed_rad_s / self.max_angle_rad

    def apply(self, frame: ActuatorFrame) -> DeviceState:
        if self._last_t_ms is None:
            dt = self.tick_ms / 1000.0
        else:
            dt = max(0.0, (frame.t_ms - self._last_t_ms) / 1000.0)
        self._last_t_ms = frame.t_ms

        target = frame.servo_compression * self.max_angle_rad
        step = self.cfg.max_speed_rad_s * dt
        delta = target - self.position_rad
        if delta > step:
            delta = step
        elif delta < -step:
            delta = -step
        self.position_rad += delta
        self.vibration = frame.vibration_amplitude
        self.led = frame.led
        self._cached = None
        return self.snapshot()

    def snapshot(self) -> DeviceState:
        if self._cached is not None:
            return self._cached
        compression = kinematics.height_to_compression(
            kinematics.servo_to_height(self.position_rad, self.shell), self.shell
        )
        self._cached = DeviceState(
            servo=ServoModel(
                max_speed_rad_s=self.cfg.max_speed_rad_s,
                max_angle_rad=self.max_angle_rad,
                position_rad=self.position_rad,
            ),
            vibration_amplitude=self.vibration,
            led=self.led,
            geometry=kinematics.geometry_at(compression, self.shell),
            supply_v=self.cfg.supply_v,
            seed=self.cfg.seed,
        )
        return self._cached


class SensorReplay:
    """Feeds pre-recognized gesture events into the engine at their trace
    timestamps on the simulated clock."""

    def __init__(self, events):
        self._events = sorted(events, key=lambda e: e.t_ms)
        self._next = 0

    @classmethod
    def from_trace(cls, path, gesture_cfg: perception.GestureConfig | None = None):
        samples = perception.load_imu_trace(path)
        return cls(perception.detect_tilt_flip(samples, gesture_cfg))

    def exhausted(self) -> bool:
        return self._next >= len(self._events)

    def pump(self, engine: Engine) -> int:
        """Inject every event due by the end of the next tick; returns count."""
        due = engine.clock_ms + engine.cfg.tick_ms
        n = 0
        while self._next < len(self._events) and self._events[self._next].t_ms <= due:
            ev = self._events[self._next]
            engine.inject(Event(kind=ev.kind, data={"zone": ev.zone} if ev.zone is not None else {}))
            self._next += 1
            n += 1
        return n
