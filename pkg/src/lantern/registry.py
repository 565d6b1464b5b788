"""Built-in behavior registry and sim assembly."""

from __future__ import annotations

from . import behaviors, perception
from .behaviors import LED, SERVO, VIBRATION
from .config import StackConfig
from .devicesim import DeviceSim
from .engine import BehaviorEntry, Engine
from .errors import ConfigError


def _speaker_factory(params: dict) -> behaviors.BehaviorSpec:
    params = dict(params)
    audio = params.pop("audio", None)
    if not audio:
        raise ConfigError("speaker needs an audio=<wav path> param")
    pcm, rate = perception.load_wav(audio)
    return behaviors.beat_synced_speaker(params, pcm, rate)


def builtin_entries(behavior_params: dict | None = None) -> list[BehaviorEntry]:
    """Registry rows for the stock behaviors, with config param overrides."""
    overrides = behavior_params or {}

    def entry(behavior_id, factory, channels, description, defaults=None):
        merged = dict(defaults or {})
        merged.update(overrides.get(behavior_id, {}))
        return BehaviorEntry(
            id=behavior_id,
            factory=factory,
            defaults=merged,
            channels=frozenset(channels),
            description=description,
        )

    return [
        entry("slow", lambda p: behaviors.named_breathing("slow", p), {SERVO},
              "calm 6 breaths/min cycle"),
        entry("bunny", lambda p: behaviors.named_breathing("bunny", p), {SERVO},
              "short quick breaths"),
        entry("dragon", lambda p: behaviors.named_breathing("dragon", p), {SERVO},
              "slow deep inhales and exhales"),
        entry("postop", behaviors.postop_breathing, {SERVO},
              "3 normal breaths + 1 deep breath per repetition"),
        entry("circadian", behaviors.circadian_lamp, {SERVO, VIBRATION, LED},
              "dawn ramp, alarm heartbeat, gesture dismissal",
              defaults={"alarm_s": 1800.0}),
        entry("purr", behaviors.soft_toy_purr, {SERVO, VIBRATION},
              "slow breathing with fading purr bursts"),
        entry("speaker", _speaker_factory, {SERVO, VIBRATION},
              "beat-synced expansion, bass pulses (needs audio=path.wav)"),
    ]


def build_sim(stack: StackConfig | None = None) -> tuple[Engine, DeviceSim]:
    """Engine wired to a fresh device sim with all built-ins registered."""
    stack = stack or StackConfig()
    device = DeviceSim(stack.shell, stack.device, tick_ms=stack.engine.tick_ms)
    engine = Engine(stack.engine, device=device)
    for e in builtin_entries(stack.behavior_params):
        engine.register(e)
    return engine, device
