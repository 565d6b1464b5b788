"""Shared builders for constructed sensor signals.

Every synthetic signal here is built analytically, so the construction
itself is the oracle the detectors get checked against.
"""

import math

import numpy as np
import pytest

from lantern.perception import ImuSample

REST_G = (0.0, 0.0, 1.0)


def imu_rest(t0_ms, duration_ms, rate_hz=50.0, accel=REST_G):
    """Samples at rest; default orientation is +z up."""
    dt = 1000.0 / rate_hz
    n = int(duration_ms / dt)
    return [ImuSample(t_ms=t0_ms + i * dt, accel_g=accel) for i in range(n)]


def imu_rotation(t0_ms, duration_ms, angle_to_rad, rate_hz=50.0):
    """Gravity vector rotating in the x-z plane from +z by angle_to_rad."""
    dt = 1000.0 / rate_hz
    n = int(duration_ms / dt)
    out = []
    for i in range(n):
        a = angle_to_rad * i / max(1, n - 1)
        out.append(
            ImuSample(
                t_ms=t0_ms + i * dt,
                accel_g=(math.sin(a), 0.0, math.cos(a)),
            )
        )
    return out


def flip_trace(rate_hz=50.0):
    """Rest 1 s, rotate to upside-down over 1 s, hold inverted 1.5 s."""
    samples = imu_rest(0.0, 1000.0, rate_hz)
    samples += imu_rotation(1000.0, 1000.0, math.pi, rate_hz)
    last_t = samples[-1].t_ms
    samples += imu_rest(last_t + 1000.0 / rate_hz, 1500.0, rate_hz, accel=(0.0, 0.0, -1.0))
    return samples


def tip_and_return(t0_ms, rate_hz=50.0, peak_deg=30.0):
    """0.4 s out to peak_deg, 0.4 s back to rest."""
    dt = 1000.0 / rate_hz
    out = []
    n = int(400.0 / dt)
    for i in range(n):
        a = math.radians(peak_deg) * i / (n - 1)
        out.append(ImuSample(t_ms=t0_ms + i * dt, accel_g=(math.sin(a), 0.0, math.cos(a))))
    for i in range(n):
        a = math.radians(peak_deg) * (1.0 - (i + 1) / n)
        out.append(
            ImuSample(t_ms=t0_ms + (n + i) * dt, accel_g=(math.sin(a), 0.0, math.cos(a)))
        )
    return out


def two_tilt_trace(gap_s=3.0, rate_hz=50.0):
    """Rest, a tip-and-return, a gap, and a second tip-and-return."""
    samples = imu_rest(0.0, 1000.0, rate_hz)
    t = samples[-1].t_ms + 1000.0 / rate_hz
    first = tip_and_return(t, rate_hz)
    samples += first
    t = first[-1].t_ms + 1000.0 / rate_hz
    rest_ms = gap_s * 1000.0 - 800.0
    middle = imu_rest(t, rest_ms, rate_hz)
    samples += middle
    t = middle[-1].t_ms + 1000.0 / rate_hz
    samples += tip_and_return(t, rate_hz)
    samples += imu_rest(samples[-1].t_ms + 1000.0 / rate_hz, 1000.0, rate_hz)
    return samples


def click_track(bpm, duration_s=60.0, rate_hz=44100, click_s=0.010, tone_hz=None):
    """Clicks every beat; either full-scale noise-free square bursts or a
    sine burst at tone_hz (for bass material)."""
    n = int(duration_s * rate_hz)
    x = np.zeros(n)
    period_s = 60.0 / bpm
    click_n = int(click_s * rate_hz)
    t_click = np.arange(click_n) / rate_hz
    burst = (
        np.ones(click_n)
        if tone_hz is None
        else np.sin(2.0 * math.pi * tone_hz * t_click)
    )
    k = 0
    while True:
        start = int(round(k * period_s * rate_hz))
        if start + click_n > n:
            break
        x[start:start + click_n] = burst
        k += 1
    return x


def click_times_s(bpm, duration_s=60.0, rate_hz=44100, click_s=0.010):
    period_s = 60.0 / bpm
    n = int(duration_s * rate_hz)
    click_n = int(click_s * rate_hz)
    out = []
    k = 0
    while True:
        start = int(round(k * period_s * rate_hz))
        if start + click_n > n:
            break
        out.append(start / rate_hz)
        k += 1
    return out


@pytest.fixture
def noise_rng():
    return np.random.default_rng(20260810)
