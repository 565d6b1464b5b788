"""Setpoint waveform generators.

Everything in this module is a deterministic pure function of (t, spec):
breathing compression curves, pulse envelopes for the vibration motor,
purr bursts, and LED color ramps. Behaviors compose these; the engine
samples them once per control tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError

EASINGS = ("sinusoidal", "linear")


@dataclass(frozen=True)
class BreathPattern:
    """One breathing cycle: inhale, optional holds, exhale.

    amplitude is the peak compression fraction reached at the end of the
    inhale. Sinusoidal easing is C1 within each phase and starts/ends at
    zero slope.
    """

    inhale_s: float
    hold_in_s: float = 0.0
    exhale_s: float = 0.0
    hold_out_s: float = 0.0
    amplitude: float = 1.0
    easing: str = "sinusoidal"

    def __post_init__(self):
        for name in ("inhale_s", "hold_in_s", "exhale_s", "hold_out_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"breath {name} must be >= 0")
        if self.period_s <= 0:
            raise ConfigError("breath pattern period must be > 0")
        if not 0.0 < self.amplitude <= 1.0:
            raise ConfigError("breath amplitude must be in (0, 1]")
        if self.easing not in EASINGS:
            raise ConfigError(f"unknown easing {self.easing!r}")

    @property
    def period_s(self) -> float:
        return self.inhale_s + self.hold_in_s + self.exhale_s + self.hold_out_s


def _ease_up(u: float, easing: str) -> float:
    if easing == "sinusoidal":
        return 0.5 * (1.0 - math.cos(math.pi * u))
    return u


def breath_value(t_s: float, p: BreathPattern) -> float:
    """Compression in [0, amplitude] at time t; periodic with p.period_s."""
    if t_s < 0:
        raise DomainError(f"t_s must be >= 0, got {t_s}")
    return breath_value_norm(math.fmod(t_s, p.period_s) / p.period_s, p)


def breath_value_norm(u: float, p: BreathPattern) -> float:
    """Compression at normalized cycle position u in [0, 1).

    Separated from breath_value so callers that accumulate breathing phase
    (tempo ramps) can sample the same shape.
    """
    tau = (u - math.floor(u)) * p.period_s
    if tau < p.inhale_s:
        return p.amplitude * _ease_up(tau / p.inhale_s, p.easing)
    tau -= p.inhale_s
    if tau < p.hold_in_s:
        return p.amplitude
    tau -= p.hold_in_s
    if tau < p.exhale_s:
        return p.amplitude * (1.0 - _ease_up(tau / p.exhale_s, p.easing))
    return 0.0


# Named pattern defaults. Only the post-op deep-inhale bound of 3-5 s is
# fixed by the exercise protocol; the rest are physiologically plausible
# choices and every field can be overridden through behavior params.
NAMED_BREATHS = {
    "slow": BreathPattern(inhale_s=4.0, exhale_s=6.0, amplitude=0.7),
    "bunny": BreathPattern(inhale_s=0.4, exhale_s=0.4, amplitude=0.3),
    "dragon": BreathPattern(inhale_s=5.0, hold_in_s=2.0, exhale_s=7.0, amplitude=1.0),
    "normal": BreathPattern(inhale_s=2.0, exhale_s=2.0, amplitude=0.5),
}

DEEP_INHALE_MIN_S = 3.0
DEEP_INHALE_MAX_S = 5.0
DEEP_INHALE_DEFAULT_S = 4.0
DEEP_EXHALE_DEFAULT_S = 6.0


@dataclass(frozen=True)
class PulseEnvelope:
    """Sparse periodic pulse train: (offset_s, amplitude, duration_s) events."""

    events: tuple[tuple[float, float, float], ...]
    period_s: float

    def __post_init__(self):
        if self.period_s <= 0:
            raise ConfigError("pulse period must be > 0")
        prev_end = 0.0
        last_offset = -1.0
        for offset, amp, dur in self.events:
            if offset < last_offset:
                raise ConfigError("pulse events must be sorted by offset")
            if offset < prev_end:
                raise ConfigError("pulse events must not overlap")
            if not 0.0 <= amp <= 1.0:
                raise ConfigError("pulse amplitude must be in [0, 1]")
            if dur <= 0:
                raise ConfigError("pulse duration must be > 0")
            if offset + dur > self.period_s:
                raise ConfigError("pulse event extends past the period")
            prev_end = offset + dur
            last_offset = offset


def pulse_value(t_s: float, env: PulseEnvelope) -> float:
    """Amplitude at time t: the enclosing event's amplitude, else 0."""
    if t_s < 0:
        raise DomainError(f"t_s must be >= 0, got {t_s}")
    tau = math.fmod(t_s, env.period_s)
    for offset, amp, dur in env.events:
        if offset <= tau < offset + dur:
            return amp
        if tau < offset:
            break
    return 0.0


def lub_dub(bpm: float = 60.0) -> PulseEnvelope:
    """Two-pulse heartbeat: strong lub at 0 s, softer dub 0.15 s later."""
    if bpm <= 0:
        raise ConfigError("heartbeat bpm must be > 0")
    return PulseEnvelope(
        events=((0.0, 1.0, 0.08), (0.15, 0.7, 0.06)), period_s=60.0 / bpm
    )


def single_pulse(period_s: float = 5.0, amplitude: float = 0.8,
                 duration_s: float = 0.2) -> PulseEnvelope:
    """One soft thump per period; used by the lamp alarm."""
    return PulseEnvelope(events=((0.0, amplitude, duration_s),), period_s=period_s)


@dataclass(frozen=True)
class PurrSpec:
    """Rectified-sine purr gated by a trapezoidal burst window.

    The carrier is |sin(pi * carrier_hz * t)|, whose rectified envelope
    repeats at exactly carrier_hz. Each burst lasts burst_duty of the burst
    period, with linear fades of fade_fraction of the burst on both ends.
    """

    carrier_hz: float = 20.0
    burst_period_s: float = 10.0
    burst_duty: float = 0.5
    fade_fraction: float = 0.25

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.burst_period_s <= 0:
            raise ConfigError("purr carrier and burst period must be > 0")
        if not 0.0 < self.burst_duty <= 1.0:
            raise ConfigError("purr burst_duty must be in (0, 1]")
        if not 0.0 <= self.fade_fraction <= 0.5:
            raise ConfigError("purr fade_fraction must be in [0, 0.5]")
        if self.carrier_hz * self.burst_period_s <= 10:
            raise ConfigError("purr carrier period must be << burst period")


def purr_gate(t_s: float, spec: PurrSpec) -> float:
    """Trapezoidal burst gate in [0, 1]; rising edge at each period start."""
    tau = math.fmod(t_s, spec.burst_period_s)
    burst = spec.burst_duty * spec.burst_period_s
    fade = spec.fade_fraction * burst
    if tau >= burst:
        return 0.0
    if fade > 0.0 and tau < fade:
        return tau / fade
    if fade > 0.0 and tau > burst - fade:
        return (burst - tau) / fade
    return 1.0


def purr_value(t_s: float, spec: PurrSpec) -> float:
    """Vibration amplitude in [0, 1] at time t."""
    if t_s < 0:
        raise DomainError(f"t_s must be >= 0, got {t_s}")
    gate = purr_gate(t_s, spec)
    if gate == 0.0:
        return 0.0
    return abs(math.sin(math.pi * spec.carrier_hz * t_s)) * gate


@dataclass(frozen=True)
class ColorRamp:
    """Linear per-channel RGB ramp; endpoints are reproduced bit-exactly."""

    duration_s: float = 1800.0
    start_rgb: tuple[int, int, int] = (139, 0, 0)
    end_rgb: tuple[int, int, int] = (255, 214, 70)
    brightness_curve: str = "linear"

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ConfigError("color ramp duration must be > 0")
        for rgb in (self.start_rgb, self.end_rgb):
            if len(rgb) != 3 or any(not 0 <= c <= 255 for c in rgb):
                raise ConfigError("rgb components must be integers in 0..255")
        if self.brightness_curve != "linear":
            raise ConfigError(f"unknown brightness curve {self.brightness_curve!r}")


def round_half_up(x: float) -> int:
    # round() would round half-to-even; half-up keeps the ramp bit-exact
    # across implementations.
    return math.floor(x + 0.5)


def ramp_color(u: float, r: ColorRamp) -> tuple[int, int, int]:
    """Interpolated color at ramp progress u in [0, 1]."""
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"ramp progress must be in [0, 1], got {u}")
    return tuple(
        round_half_up(a + (b - a) * u) for a, b in zip(r.start_rgb, r.end_rgb)
    )
