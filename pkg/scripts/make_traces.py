#!/usr/bin/env python3
"""Generate the demo inputs: scripted IMU gesture traces and click-track
wavs for the beat-synced speaker.

    python scripts/make_traces.py out_dir/
"""

import math
import sys
from pathlib import Path

import numpy as np

from lantern.perception import ImuSample, save_imu_trace, save_wav

RATE_IMU = 50.0
RATE_AUDIO = 44100


def rest(t0, duration_ms, accel=(0.0, 0.0, 1.0)):
    dt = 1000.0 / RATE_IMU
    return [ImuSample(t_ms=t0 + i * dt, accel_g=accel)
            for i in range(int(duration_ms / dt))]


def rotation(t0, duration_ms, angle_rad):
    dt = 1000.0 / RATE_IMU
    n = int(duration_ms / dt)
    return [
        ImuSample(
            t_ms=t0 + i * dt,
            accel_g=(math.sin(angle_rad * i / (n - 1)), 0.0,
                     math.cos(angle_rad * i / (n - 1))),
        )
        for i in range(n)
    ]


def flip_trace(start_ms=0.0):
    out = rest(start_ms, 1000.0)
    out += rotation(out[-1].t_ms + 20.0, 1000.0, math.pi)
    out += rest(out[-1].t_ms + 20.0, 1500.0, accel=(0.0, 0.0, -1.0))
    return out


def tip_and_return(t0, peak_deg=30.0):
    dt = 1000.0 / RATE_IMU
    n = int(400.0 / dt)
    out = []
    for i in range(2 * n):
        a = math.radians(peak_deg) * (i / (n - 1) if i < n else (2 * n - 1 - i) / n)
        out.append(ImuSample(t_ms=t0 + i * dt,
                             accel_g=(math.sin(a), 0.0, math.cos(a))))
    return out


def two_tilt_trace(start_ms=0.0):
    out = rest(start_ms, 1000.0)
    for _ in range(2):
        out += tip_and_return(out[-1].t_ms + 20.0)
        out += rest(out[-1].t_ms + 20.0, 1500.0)
    return out


def click_wav(bpm, duration_s=60.0, tone_hz=None):
    n = int(duration_s * RATE_AUDIO)
    x = np.zeros(n)
    click_n = int(0.010 * RATE_AUDIO)
    t = np.arange(click_n) / RATE_AUDIO
    burst = np.ones(click_n) if tone_hz is None else np.sin(2 * math.pi * tone_hz * t)
    k = 0
    while True:
        start = int(round(k * 60.0 / bpm * RATE_AUDIO))
        if start + click_n > n:
            break
        x[start:start + click_n] = burst
        k += 1
    return x


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_inputs")
    out_dir.mkdir(parents=True, exist_ok=True)
    save_imu_trace(out_dir / "flip.trace", flip_trace())
    # a flip timed to land during the default 10 s demo alarm window
    save_imu_trace(out_dir / "flip_at_12s.trace", flip_trace(start_ms=12_000.0))
    save_imu_trace(out_dir / "two_tilts.trace", two_tilt_trace())
    for bpm in (60, 120, 180):
        save_wav(out_dir / f"clicks_{bpm}.wav", click_wav(bpm), RATE_AUDIO)
    save_wav(out_dir / "bass_1hz.wav", click_wav(60, tone_hz=60.0), RATE_AUDIO)
    print(f"wrote demo inputs to {out_dir}/")


if __name__ == "__main__":
    main()
