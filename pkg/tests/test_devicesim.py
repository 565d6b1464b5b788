import math

import pytest

from lantern.devicesim import DeviceConfig, DeviceSim, SensorReplay
from lantern.engine import ActuatorFrame, Engine, EngineConfig
from lantern.kinematics import geometry_at
from lantern.perception import GestureEvent


def frame(t_ms, servo=0.0, vib=0.0, led=((0, 0, 0),)):
    return ActuatorFrame(
        t_ms=t_ms,
        servo_compression=servo,
        vibration_amplitude=vib,
        led=led,
        active_behavior=None,
    )


class TestServoSlew:
    def test_idle_frame_keeps_state(self):
        dev = DeviceSim()
        before = dev.snapshot()
        after = dev.apply(frame(10))
        assert after == before

    def test_step_command_advances_at_max_speed(self):
        dev = DeviceSim()
        max_step = dev.cfg.max_speed_rad_s * 0.01
        positions = []
        for k in range(1, 120):
            dev.apply(frame(10 * k, servo=1.0))
            positions.append(dev.position_rad)
        deltas = [b - a for a, b in zip([0.0] + positions, positions)]
        # full speed until the target, then parked
        assert deltas[0] == pytest.approx(max_step)
        assert max(deltas) <= max_step + 1e-12
        assert positions[-1] == pytest.approx(dev.max_angle_rad)

    def test_slew_measured_over_random_commands(self):
        import random

        rng = random.Random(7)
        dev = DeviceSim()
        max_step = dev.cfg.max_speed_rad_s * 0.01
        prev = dev.position_rad
        for k in range(1, 500):
            dev.apply(frame(10 * k, servo=rng.random()))
            assert abs(dev.position_rad - prev) <= max_step + 1e-12
            prev = dev.position_rad

    def test_geometry_tracks_position(self):
        dev = DeviceSim()
        dev.apply(frame(10, servo=1.0))
        state = dev.snapshot()
        c = state.servo.position_rad / dev.max_angle_rad
        expected = geometry_at(c, dev.shell)
        assert state.geometry.compression == pytest.approx(c, abs=1e-12)
        assert state.geometry.height_mm == pytest.approx(expected.height_mm, abs=1e-9)
        assert state.geometry.bulge_radius_mm == pytest.approx(
            expected.bulge_radius_mm, abs=1e-9
        )

    def test_instant_vibration_and_led(self):
        dev = DeviceSim()
        state = dev.apply(frame(10, vib=0.7, led=((1, 2, 3),)))
        assert state.vibration_amplitude == 0.7
        assert state.led == ((1, 2, 3),)


class TestDeterminism:
    def test_same_frames_same_states(self):
        def run():
            dev = DeviceSim(cfg=DeviceConfig(seed=42))
            states = []
            for k in range(1, 200):
                servo = 0.5 * (1 - math.cos(0.05 * k))
                states.append(dev.apply(frame(10 * k, servo=servo)))
            return states

        assert run() == run()

    def test_breathing_geometry_periodicity(self):
        import numpy as np

        from lantern.analysis import dominant_period_s
        from lantern.profiles import NAMED_BREATHS, breath_value

        dev = DeviceSim()
        pattern = NAMED_BREATHS["slow"]
        bulges = []
        for k in range(1, 4000):
            servo = breath_value(k * 0.01, pattern)
            state = dev.apply(frame(10 * k, servo=servo))
            bulges.append(state.geometry.bulge_radius_mm)
        period = dominant_period_s(np.array(bulges), 0.01)
        assert period == pytest.approx(pattern.period_s, abs=0.02)


class TestSensorReplay:
    def test_events_arrive_at_trace_timestamps(self):
        engine = Engine(EngineConfig())
        seen = []
        engine.add_frame_listener(lambda f: None)
        replay = SensorReplay([
            GestureEvent(kind="Flip", t_ms=55.0),
            GestureEvent(kind="Tilt", t_ms=230.0),
        ])
        arrivals = []
        orig_inject = engine.inject

        def spy(event):
            arrivals.append((event.kind, engine.clock_ms))
            orig_inject(event)

        engine.inject = spy
        for _ in range(50):
            replay.pump(engine)
            engine.tick()
        assert replay.exhausted()
        assert arrivals == [("Flip", 50), ("Tilt", 220)]

    def test_from_trace(self, tmp_path):
        from conftest import flip_trace

        from lantern.perception import save_imu_trace

        path = tmp_path / "flip.trace"
        save_imu_trace(path, flip_trace())
        replay = SensorReplay.from_trace(path)
        assert not replay.exhausted()
