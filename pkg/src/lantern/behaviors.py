"""Built-in behaviors.

A behavior is a phase machine plus a sampler. The sampler is a pure function
of the runtime view (current phase, time in phase, live params, channel
values captured at phase entry) so that construction stays side-effect free
and the engine alone owns execution state. Params are read at sample time,
which is what makes live set_param work.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import perception, profiles
from .errors import ConfigError

SERVO = "servo"
VIBRATION = "vibration"
LED = "led"
CHANNELS = (SERVO, VIBRATION, LED)

RGB = tuple[int, int, int]
BLACK: RGB = (0, 0, 0)


@dataclass(frozen=True)
class Setpoints:
    """Per-channel command values; None means the channel is not driven."""

    servo: float | None = None
    vibration: float | None = None
    led: RGB | None = None


IDLE = Setpoints(servo=0.0, vibration=0.0, led=BLACK)


@dataclass(frozen=True)
class Phase:
    name: str
    duration_s: float | None = None  # elapsed -> move to `after`
    after: str | None = None
    on_event: Mapping[str, str] = field(default_factory=dict)
    terminal: bool = False


@dataclass
class BehaviorView:
    """What a sampler gets to see each tick."""

    phase: str
    t_phase_s: float
    t_total_s: float
    params: Mapping[str, object]
    entry: Setpoints  # channel values at the moment this phase was entered


Sampler = Callable[[BehaviorView], Setpoints]


@dataclass
class BehaviorSpec:
    id: str
    channels: frozenset[str]
    params: dict
    phases: tuple[Phase, ...]
    sampler: Sampler
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ConfigError("behavior id must be non-empty")
        if not self.channels or not self.channels <= set(CHANNELS):
            raise ConfigError(f"behavior {self.id}: channels must be a non-empty "
                              f"subset of {CHANNELS}")
        if not self.phases:
            raise ConfigError(f"behavior {self.id}: needs at least one phase")
        names = [p.name for p in self.phases]
        if len(set(names)) != len(names):
            raise ConfigError(f"behavior {self.id}: duplicate phase names")
        known = set(names)
        for p in self.phases:
            targets = set(p.on_event.values())
            if p.after is not None:
                targets.add(p.after)
            if not targets <= known:
                raise ConfigError(
                    f"behavior {self.id}: phase {p.name} references unknown "
                    f"phases {sorted(targets - known)}"
                )
            if p.duration_s is not None and p.after is None and not p.terminal:
                raise ConfigError(
                    f"behavior {self.id}: phase {p.name} has a duration but "
                    f"no successor"
                )
        reachable = {names[0]}
        frontier = [names[0]]
        by_name = {p.name: p for p in self.phases}
        while frontier:
            p = by_name[frontier.pop()]
            for nxt in set(p.on_event.values()) | ({p.after} - {None}):
                if nxt not in reachable:
                    reachable.add(nxt)
                    frontier.append(nxt)
        if reachable != known:
            raise ConfigError(
                f"behavior {self.id}: unreachable phases {sorted(known - reachable)}"
            )

    @property
    def start_phase(self) -> str:
        return self.phases[0].name


def _breath_from_params(params: Mapping, defaults: profiles.BreathPattern
                        ) -> profiles.BreathPattern:
    return profiles.BreathPattern(
        inhale_s=float(params.get("inhale_s", defaults.inhale_s)),
        hold_in_s=float(params.get("hold_in_s", defaults.hold_in_s)),
        exhale_s=float(params.get("exhale_s", defaults.exhale_s)),
        hold_out_s=float(params.get("hold_out_s", defaults.hold_out_s)),
        amplitude=float(params.get("amplitude", defaults.amplitude)),
        easing=str(params.get("easing", defaults.easing)),
    )


def named_breathing(kind: str, params: dict | None = None) -> BehaviorSpec:
    """Continuous breathing on the servo channel only."""
    if kind not in ("slow", "bunny", "dragon"):
        raise ConfigError(f"unknown breathing kind {kind!r}")
    params = dict(params or {})
    defaults = profiles.NAMED_BREATHS[kind]

    def sample(view: BehaviorView) -> Setpoints:
        p = _breath_from_params(view.params, defaults)
        return Setpoints(servo=profiles.breath_value(view.t_total_s, p))

    return BehaviorSpec(
        id=kind,
        channels=frozenset({SERVO}),
        params=params,
        phases=(Phase("run"),),
        sampler=sample,
    )


def postop_breathing(params: dict | None = None) -> BehaviorSpec:
    """Guided post-operative sets: three normal breaths, then one deep breath.

    The deep inhale is clamped to the 3-5 s protocol window; repetitions come
    from params (default 3).
    """
    params = dict(params or {})
    params.setdefault("reps", 3)
    notes = []
    deep_in = float(params.get("deep_inhale_s", profiles.DEEP_INHALE_DEFAULT_S))
    clamped = min(profiles.DEEP_INHALE_MAX_S, max(profiles.DEEP_INHALE_MIN_S, deep_in))
    if clamped != deep_in:
        notes.append(f"deep_inhale_s {deep_in:g} clamped to {clamped:g}")
    params["deep_inhale_s"] = clamped
    reps = int(params["reps"])
    if reps < 1:
        raise ConfigError("postop reps must be >= 1")

    def patterns(view_params: Mapping):
        normal = _breath_from_params(view_params, profiles.NAMED_BREATHS["normal"])
        deep_inhale = min(
            profiles.DEEP_INHALE_MAX_S,
            max(profiles.DEEP_INHALE_MIN_S,
                float(view_params.get("deep_inhale_s", profiles.DEEP_INHALE_DEFAULT_S))),
        )
        deep = profiles.BreathPattern(
            inhale_s=deep_inhale,
            exhale_s=float(view_params.get("deep_exhale_s", profiles.DEEP_EXHALE_DEFAULT_S)),
            amplitude=float(view_params.get("deep_amplitude", 1.0)),
        )
        return normal, deep

    normal0, deep0 = patterns(params)
    rep_s = 3.0 * normal0.period_s + deep0.period_s

    def sample(view: BehaviorView) -> Setpoints:
        if view.phase == "done":
            return Setpoints(servo=0.0)
        normal, deep = patterns(view.params)
        normal_part = 3.0 * normal.period_s
        tau = math.fmod(view.t_phase_s, normal_part + deep.period_s)
        if tau < normal_part:
            return Setpoints(servo=profiles.breath_value(tau, normal))
        return Setpoints(servo=profiles.breath_value(tau - normal_part, deep))

    return BehaviorSpec(
        id="postop",
        channels=frozenset({SERVO}),
        params=params,
        phases=(
            Phase("exercise", duration_s=reps * rep_s, after="done"),
            Phase("done", terminal=True),
        ),
        sampler=sample,
        notes=tuple(notes),
    )


DAWN_BREATH_SHAPE = profiles.BreathPattern(inhale_s=4.0, exhale_s=6.0, amplitude=1.0)


def circadian_lamp(params: dict | None = None) -> BehaviorSpec:
    """Wake-up lamp: dawn color ramp with accelerating breath, then an alarm
    heartbeat until a Flip or TwoTilts gesture dismisses it.

    Requires an `alarm_s` param (seconds from start to the alarm).
    """
    params = dict(params or {})
    if "alarm_s" not in params:
        raise ConfigError("circadian lamp needs an alarm_s param")
    alarm_s = float(params["alarm_s"])
    if alarm_s <= 0:
        raise ConfigError("alarm_s must be > 0")
    params.setdefault("bpm_start", 6.0)
    params.setdefault("bpm_end", 12.0)
    params.setdefault("amplitude", 0.6)
    params.setdefault("pulse_period_s", 5.0)
    params.setdefault("dismiss_s", 2.0)
    ramp = profiles.ColorRamp(duration_s=alarm_s)

    def breath_cycles(view: BehaviorView, t: float) -> float:
        """Accumulated breath cycles; linear tempo ramp, then constant.

        Integrated in closed form so the wave stays continuous across the
        dawn/alarm boundary.
        """
        b0 = float(view.params["bpm_start"]) / 60.0
        b1 = float(view.params["bpm_end"]) / 60.0
        if t <= alarm_s:
            return b0 * t + (b1 - b0) * t * t / (2.0 * alarm_s)
        ramp_total = (b0 + b1) / 2.0 * alarm_s
        return ramp_total + b1 * (t - alarm_s)

    def sample(view: BehaviorView) -> Setpoints:
        amp = float(view.params["amplitude"])
        if view.phase == "dawn":
            u = min(1.0, view.t_phase_s / alarm_s)
            breath = profiles.breath_value_norm(
                breath_cycles(view, view.t_total_s), DAWN_BREATH_SHAPE
            )
            return Setpoints(
                servo=amp * breath,
                vibration=0.0,
                led=profiles.ramp_color(u, ramp),
            )
        if view.phase == "alarm":
            env = profiles.single_pulse(period_s=float(view.params["pulse_period_s"]))
            breath = profiles.breath_value_norm(
                breath_cycles(view, view.t_total_s), DAWN_BREATH_SHAPE
            )
            return Setpoints(
                servo=amp * breath,
                vibration=profiles.pulse_value(view.t_phase_s, env),
                led=ramp.end_rgb,
            )
        if view.phase == "dismissed":
            w = min(1.0, view.t_phase_s / float(view.params["dismiss_s"]))
            led = tuple(
                profiles.round_half_up(c * (1.0 - w)) for c in (view.entry.led or BLACK)
            )
            return Setpoints(
                servo=(view.entry.servo or 0.0) * (1.0 - w),
                vibration=(view.entry.vibration or 0.0) * (1.0 - w),
                led=led,
            )
        return IDLE

    dismiss_s = float(params["dismiss_s"])
    return BehaviorSpec(
        id="circadian",
        channels=frozenset({SERVO, VIBRATION, LED}),
        params=params,
        phases=(
            Phase("dawn", duration_s=alarm_s, after="alarm"),
            Phase("alarm", on_event={perception.FLIP: "dismissed",
                                     perception.TWO_TILTS: "dismissed"}),
            Phase("dismissed", duration_s=dismiss_s, after="off"),
            Phase("off", terminal=True),
        ),
        sampler=sample,
    )


def soft_toy_purr(params: dict | None = None) -> BehaviorSpec:
    """Slow breathing plus fading 20 Hz purr bursts on the vibration motor."""
    params = dict(params or {})

    def purr_spec(view_params: Mapping) -> profiles.PurrSpec:
        return profiles.PurrSpec(
            carrier_hz=float(view_params.get("carrier_hz", 20.0)),
            burst_period_s=float(view_params.get("burst_period_s", 10.0)),
            burst_duty=float(view_params.get("burst_duty", 0.5)),
            fade_fraction=float(view_params.get("fade_fraction", 0.25)),
        )

    def sample(view: BehaviorView) -> Setpoints:
        p = _breath_from_params(view.params, profiles.NAMED_BREATHS["slow"])
        return Setpoints(
            servo=profiles.breath_value(view.t_total_s, p),
            vibration=profiles.purr_value(view.t_total_s, purr_spec(view.params)),
        )

    return BehaviorSpec(
        id="purr",
        channels=frozenset({SERVO, VIBRATION}),
        params=params,
        phases=(Phase("run"),),
        sampler=sample,
    )


FALLBACK_CYCLE_S = 4.0
BASS_PULSE_S = 0.05
LOUDNESS_FLOOR = 0.2


def beat_synced_speaker(
    params: dict | None, pcm: np.ndarray, rate_hz: int
) -> BehaviorSpec:
    """Expansion cycles locked to the detected tempo, vibration pulses on
    bass onsets, range scaled by windowed loudness.

    An undetectable tempo falls back to a 4 s cycle and is flagged in the
    spec's notes so telemetry consumers can see it.
    """
    params = dict(params or {})
    pcm = np.asarray(pcm, dtype=np.float64)
    if pcm.size == 0:
        raise ConfigError("speaker behavior needs a non-empty audio buffer")
    result = perception.detect_onsets(pcm, rate_hz)
    notes = []
    if result.tempo_bpm is None:
        cycle_s = float(params.get("fallback_cycle_s", FALLBACK_CYCLE_S))
        notes.append("tempo undetectable; falling back to default cycle")
        anchor_s = 0.0
    else:
        cycle_s = 60.0 / result.tempo_bpm
        anchor_s = result.onsets[0].t_ms / 1000.0 if result.onsets else 0.0
    params.setdefault("loudness_floor", LOUDNESS_FLOOR)
    params.setdefault("pulse_s", BASS_PULSE_S)
    track_s = len(pcm) / rate_hz
    bass_times = [o.t_ms / 1000.0 for o in result.bass_onsets]
    shape = profiles.BreathPattern(inhale_s=0.5, exhale_s=0.5, amplitude=1.0)

    def sample(view: BehaviorView) -> Setpoints:
        t = view.t_total_s
        if view.phase == "done":
            return Setpoints(servo=0.0, vibration=0.0)
        floor = float(view.params["loudness_floor"])
        loud = floor + (1.0 - floor) * result.rms_at(t)
        u = (t - anchor_s) / cycle_s
        servo = loud * profiles.breath_value_norm(u, shape)
        vib = 0.0
        i = bisect_right(bass_times, t)
        if i > 0 and t - bass_times[i - 1] < float(view.params["pulse_s"]):
            vib = 1.0
        return Setpoints(servo=servo, vibration=vib)

    spec = BehaviorSpec(
        id="speaker",
        channels=frozenset({SERVO, VIBRATION}),
        params=params,
        phases=(
            Phase("play", duration_s=track_s, after="done"),
            Phase("done", terminal=True),
        ),
        sampler=sample,
        notes=tuple(notes),
    )
    return spec
