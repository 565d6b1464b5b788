"""Event-driven behavior engine.

The engine owns a fixed-step simulated clock (default 10 ms ticks), a
registry of behavior factories, and per-channel ownership. Exactly one
behavior can hold a channel at a time; in particular the servo is never
sampled for two behaviors in the same tick. Starting over a busy channel
either fails with Busy or, with preempt, ramps the incumbent down for
ramp_s before the newcomer takes over.

All mutation happens on whoever calls tick(); the engine itself is
single-owner. Remote callers go through the service layer, which serializes
requests onto the control loop between ticks. Everything is deterministic:
the same registry, request trace and event trace produce bit-identical
frame streams.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .behaviors import BLACK, LED, RGB, SERVO, VIBRATION, BehaviorSpec, BehaviorView, Setpoints
from .errors import ConfigError

CSV_HEADER = "t_ms,compression,height_mm,bulge_mm,vib,led0_r,led0_g,led0_b,active"

# Default command slew in compression units per second: the stock servo's
# 7 rad/s through the default 8 mm pulley and 52.5 mm stroke.
DEFAULT_SLEW_PER_S = 7.0 * 8.0 / 52.5


@dataclass(frozen=True)
class EngineConfig:
    tick_ms: int = 10
    led_pixels: int = 60
    ramp_s: float = 0.5
    servo_slew_per_s: float = DEFAULT_SLEW_PER_S

    def __post_init__(self):
        if self.tick_ms <= 0:
            raise ConfigError("engine.tick_ms must be a positive integer")
        if self.led_pixels <= 0:
            raise ConfigError("engine.led_pixels must be > 0")
        if self.ramp_s <= 0:
            raise ConfigError("engine.ramp_s must be > 0")


@dataclass(frozen=True)
class Event:
    kind: str
    data: Mapping = field(default_factory=dict)
    t_ms: int = 0  # arrival stamp on the simulated clock
    seq: int = 0


@dataclass(frozen=True)
class ActuatorFrame:
    t_ms: int
    servo_compression: float
    vibration_amplitude: float
    led: tuple[RGB, ...]
    active_behavior: str | None


@dataclass
class BehaviorEntry:
    """Registry row: how to build a behavior and what it claims."""

    id: str
    factory: Callable[[dict], BehaviorSpec]
    defaults: dict = field(default_factory=dict)
    channels: frozenset[str] = frozenset({SERVO})
    description: str = ""


@dataclass(frozen=True)
class StartResult:
    status: str  # ok | busy | not_found | invalid
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class _Active:
    # times are derived from integer tick counts, never accumulated as
    # floats: phase boundaries and pulse spacings stay bit-exact over hours
    __slots__ = ("spec", "phase", "total_ticks", "phase_ticks", "phase_carry_s",
                 "entry", "mode", "mode_ticks", "ramp_from", "last_out")

    def __init__(self, spec: BehaviorSpec, ramp_from: Setpoints):
        self.spec = spec
        self.phase = spec.start_phase
        self.total_ticks = 0
        self.phase_ticks = 0
        self.phase_carry_s = 0.0
        self.entry = ramp_from
        self.mode = "ramp_in"
        self.mode_ticks = 0
        self.ramp_from = ramp_from
        self.last_out = ramp_from

    def t_total_s(self, tick_ms: int) -> float:
        return self.total_ticks * tick_ms / 1000.0

    def t_phase_s(self, tick_ms: int) -> float:
        return self.phase_ticks * tick_ms / 1000.0 + self.phase_carry_s

    def mode_t_s(self, tick_ms: int) -> float:
        return self.mode_ticks * tick_ms / 1000.0

    def phase_def(self):
        for p in self.spec.phases:
            if p.name == self.phase:
                return p
        raise AssertionError(f"phase {self.phase} vanished")

    def transition(self, target: str, carry_s: float = 0.0):
        self.phase = target
        self.phase_ticks = 0
        self.phase_carry_s = carry_s
        self.entry = self.last_out


class Engine:
    def __init__(self, cfg: EngineConfig | None = None, device=None):
        self.cfg = cfg or EngineConfig()
        self.device = device
        self.clock_ms = 0
        self._entries: dict[str, BehaviorEntry] = {}
        self._active: dict[str, _Active] = {}
        self._owner: dict[str, str] = {}
        self._pending: BehaviorSpec | None = None
        self._events: deque[Event] = deque()
        self._param_queue: deque[tuple[str, str, object]] = deque()
        self._seq = 0
        self._last = Setpoints(servo=0.0, vibration=0.0, led=BLACK)
        self._frame_listeners: list[Callable[[ActuatorFrame], None]] = []
        self._phase_listeners: list[Callable[[str, str], None]] = []

    # -- registry ------------------------------------------------------

    def register(self, entry: BehaviorEntry):
        if entry.id in self._entries:
            raise ConfigError(f"behavior id {entry.id!r} already registered")
        self._entries[entry.id] = entry

    def list(self) -> list[dict]:
        out = []
        for entry in self._entries.values():
            active = self._active.get(entry.id)
            out.append({
                "id": entry.id,
                "channels": sorted(entry.channels),
                "params": dict(active.spec.params) if active else dict(entry.defaults),
                "active": active is not None,
                "phase": active.phase if active else None,
                "notes": list(active.spec.notes) if active else [],
                "description": entry.description,
            })
        return out

    def owners(self) -> dict[str, str]:
        return dict(self._owner)

    def active_ids(self) -> list[str]:
        return list(self._active)

    def idle(self) -> bool:
        return not self._active and self._pending is None

    def add_frame_listener(self, cb: Callable[[ActuatorFrame], None]):
        self._frame_listeners.append(cb)

    def add_phase_listener(self, cb: Callable[[str, str], None]):
        """cb(behavior_id, phase_name) on every phase entry."""
        self._phase_listeners.append(cb)

    # -- requests (serialized with tick by the caller) -----------------

    def start(self, behavior_id: str, params: dict | None = None,
              preempt: bool = False) -> StartResult:
        entry = self._entries.get(behavior_id)
        if entry is None:
            return StartResult("not_found", f"unknown behavior {behavior_id!r}")
        if behavior_id in self._active and not preempt:
            return StartResult("busy", f"{behavior_id} is already running")
        try:
            spec = entry.factory({**entry.defaults, **(params or {})})
        except ConfigError as exc:
            return StartResult("invalid", str(exc))

        claimed = set(self._owner)
        if self._pending is not None:
            claimed |= self._pending.channels
        conflicts = spec.channels & claimed
        if not conflicts:
            self._activate(spec)
            return StartResult("ok")
        if not preempt:
            return StartResult("busy", f"channels busy: {sorted(conflicts)}")
        for owner_id in {self._owner[ch] for ch in conflicts & set(self._owner)}:
            self._begin_ramp_down(self._active[owner_id])
        self._pending = spec
        return StartResult("ok")

    def stop(self, behavior_id: str) -> StartResult:
        if behavior_id not in self._entries:
            return StartResult("not_found", f"unknown behavior {behavior_id!r}")
        if self._pending is not None and self._pending.id == behavior_id:
            self._pending = None
        active = self._active.get(behavior_id)
        if active is not None:
            self._begin_ramp_down(active)
        return StartResult("ok")

    def set_param(self, behavior_id: str, key: str, value) -> StartResult:
        if behavior_id not in self._entries:
            return StartResult("not_found", f"unknown behavior {behavior_id!r}")
        self._param_queue.append((behavior_id, key, value))
        return StartResult("ok")

    def inject(self, event: Event):
        self._seq += 1
        self._events.append(
            Event(kind=event.kind, data=event.data, t_ms=self.clock_ms, seq=self._seq)
        )

    # -- control loop ---------------------------------------------------

    def tick(self) -> ActuatorFrame:
        cfg = self.cfg
        tick_s = cfg.tick_ms / 1000.0
        self.clock_ms += cfg.tick_ms

        while self._param_queue:
            behavior_id, key, value = self._param_queue.popleft()
            active = self._active.get(behavior_id)
            if active is not None:
                active.spec.params[key] = value
            elif behavior_id in self._entries:
                self._entries[behavior_id].defaults[key] = value

        while self._events:
            event = self._events.popleft()
            for active in list(self._active.values()):
                if active.mode == "ramp_down":
                    continue
                target = active.phase_def().on_event.get(event.kind)
                if target is not None:
                    active.transition(target)
                    self._notify_phase(active)

        for active in list(self._active.values()):
            active.total_ticks += 1
            active.phase_ticks += 1
            active.mode_ticks += 1
            # chained short phases can expire within one tick
            while True:
                phase = active.phase_def()
                if phase.terminal and active.mode != "ramp_down":
                    self._begin_ramp_down(active)
                    break
                t_phase = active.t_phase_s(cfg.tick_ms)
                if phase.duration_s is None or t_phase < phase.duration_s:
                    break
                active.transition(phase.after, carry_s=t_phase - phase.duration_s)
                self._notify_phase(active)

        for active in list(self._active.values()):
            if active.mode == "ramp_down" and active.mode_t_s(cfg.tick_ms) >= cfg.ramp_s:
                self._release(active)
        if self._pending is not None:
            if not (self._pending.channels & set(self._owner)):
                self._activate(self._pending)
                self._pending = None

        servo = 0.0
        vibration = 0.0
        led: RGB = BLACK
        for active in self._active.values():
            out = self._sample(active)
            active.last_out = out
            spec = active.spec
            if SERVO in spec.channels and out.servo is not None:
                servo = out.servo
            if VIBRATION in spec.channels and out.vibration is not None:
                vibration = out.vibration
            if LED in spec.channels and out.led is not None:
                led = out.led

        # hardware-protection clamp: per-tick command change stays within the
        # servo's physical slew plus the ramp allowance
        max_step = (cfg.servo_slew_per_s + 1.0 / cfg.ramp_s) * tick_s
        prev = self._last.servo
        servo = min(1.0, max(0.0, min(prev + max_step, max(prev - max_step, servo))))
        vibration = min(1.0, max(0.0, vibration))

        self._last = Setpoints(servo=servo, vibration=vibration, led=led)
        frame = ActuatorFrame(
            t_ms=self.clock_ms,
            servo_compression=servo,
            vibration_amplitude=vibration,
            led=(led,) * cfg.led_pixels,
            active_behavior=self._primary_active(),
        )
        if self.device is not None:
            self.device.apply(frame)
        for cb in self._frame_listeners:
            cb(frame)
        return frame

    def run_for(self, duration_ms: int) -> list[ActuatorFrame]:
        """Convenience for tests/scripts: tick for a simulated duration."""
        return [self.tick() for _ in range(duration_ms // self.cfg.tick_ms)]

    # -- internals -------------------------------------------------------

    def _primary_active(self) -> str | None:
        for channel in (SERVO, VIBRATION, LED):
            owner = self._owner.get(channel)
            if owner is not None:
                return owner
        return None

    def _activate(self, spec: BehaviorSpec):
        active = _Active(spec, ramp_from=self._last)
        self._active[spec.id] = active
        for channel in spec.channels:
            self._owner[channel] = spec.id
        self._notify_phase(active)

    def _begin_ramp_down(self, active: _Active):
        if active.mode != "ramp_down":
            active.mode = "ramp_down"
            active.mode_ticks = 0
            active.ramp_from = active.last_out

    def _release(self, active: _Active):
        for channel, owner in list(self._owner.items()):
            if owner == active.spec.id:
                del self._owner[channel]
        del self._active[active.spec.id]

    def _sample(self, active: _Active) -> Setpoints:
        spec = active.spec
        tick_ms = self.cfg.tick_ms
        if active.mode == "ramp_down":
            w = min(1.0, active.mode_t_s(tick_ms) / self.cfg.ramp_s)
            servo = None
            if SERVO in spec.channels:
                servo = (active.ramp_from.servo or 0.0) * (1.0 - w)
            return Setpoints(servo=servo, vibration=0.0 if VIBRATION in spec.channels else None,
                             led=BLACK if LED in spec.channels else None)
        view = BehaviorView(
            phase=active.phase,
            t_phase_s=active.t_phase_s(tick_ms),
            t_total_s=active.t_total_s(tick_ms),
            params=spec.params,
            entry=active.entry,
        )
        raw = spec.sampler(view)
        if active.mode == "ramp_in":
            w = min(1.0, active.mode_t_s(tick_ms) / self.cfg.ramp_s)
            if w >= 1.0:
                active.mode = "run"
            if raw.servo is not None:
                base = active.ramp_from.servo or 0.0
                raw = Setpoints(
                    servo=base + (raw.servo - base) * w,
                    vibration=raw.vibration,
                    led=raw.led,
                )
        return raw

    def _notify_phase(self, active: _Active):
        for cb in self._phase_listeners:
            cb(active.spec.id, active.phase)


def frame_csv_row(frame: ActuatorFrame, geometry) -> str:
    """One telemetry CSV line; geometry comes from the device snapshot."""
    led0 = frame.led[0] if frame.led else BLACK
    return (
        f"{frame.t_ms},{frame.servo_compression:.9g},{geometry.height_mm:.6f},"
        f"{geometry.bulge_radius_mm:.6f},{frame.vibration_amplitude:.9g},"
        f"{led0[0]},{led0[1]},{led0[2]},{frame.active_behavior or ''}"
    )


class TraceWriter:
    """Streams engine frames + device geometry into the telemetry CSV."""

    def __init__(self, fh):
        self.fh = fh
        self.fh.write(CSV_HEADER + "\n")

    def write(self, frame: ActuatorFrame, device) -> None:
        self.fh.write(frame_csv_row(frame, device.snapshot().geometry) + "\n")
