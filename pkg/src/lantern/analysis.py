"""Telemetry trace analysis.

Offline measurements over a recorded CSV: dominant period by autocorrelation
(with parabolic peak interpolation for sub-tick resolution), local extrema of
the compression curve, inhale durations (preceding trough to peak), and
vibration pulse timing. The acceptance checks lean on these, so they must
stay independent of how the traces were generated.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sp_signal


@dataclass
class Trace:
    t_ms: np.ndarray
    compression: np.ndarray
    height_mm: np.ndarray
    bulge_mm: np.ndarray
    vib: np.ndarray
    led0: np.ndarray  # shape (n, 3) ints
    active: list[str]

    @property
    def tick_s(self) -> float:
        if len(self.t_ms) < 2:
            return 0.0
        return float(self.t_ms[1] - self.t_ms[0]) / 1000.0

    @property
    def t_s(self) -> np.ndarray:
        return self.t_ms / 1000.0


def load_trace(source) -> Trace:
    """Parse a telemetry CSV from a path or file object."""
    if hasattr(source, "read"):
        fh = source
    else:
        fh = io.StringIO(Path(source).read_text())
    reader = csv.DictReader(fh)
    cols: dict[str, list] = {name: [] for name in reader.fieldnames or []}
    for row in reader:
        for k, v in row.items():
            cols[k].append(v)
    as_f = lambda name: np.array([float(v) for v in cols[name]])
    led = np.stack(
        [as_f("led0_r"), as_f("led0_g"), as_f("led0_b")], axis=1
    ).astype(int) if cols else np.zeros((0, 3), dtype=int)
    return Trace(
        t_ms=as_f("t_ms"),
        compression=as_f("compression"),
        height_mm=as_f("height_mm"),
        bulge_mm=as_f("bulge_mm"),
        vib=as_f("vib"),
        led0=led,
        active=cols.get("active", []),
    )


def _lag_correlation(x: np.ndarray) -> np.ndarray:
    """Pearson correlation between the signal and itself shifted by each lag.

    Exactly 1.0 at a true period regardless of waveform asymmetry, which the
    plain (biased or unbiased) autocorrelation estimators do not guarantee
    on finite traces.
    """
    n = len(x)
    cross = sp_signal.correlate(x, x, mode="full", method="fft")[n - 1:]
    ones = np.arange(n, 0, -1, dtype=np.float64)  # overlap length per lag
    csum = np.concatenate(([0.0], np.cumsum(x)))
    csum2 = np.concatenate(([0.0], np.cumsum(x * x)))
    lags = np.arange(n)
    head_sum = csum[n - lags]
    head_sq = csum2[n - lags]
    tail_sum = csum[-1] - csum[lags]
    tail_sq = csum2[-1] - csum2[lags]
    num = cross - head_sum * tail_sum / ones
    var_head = head_sq - head_sum * head_sum / ones
    var_tail = tail_sq - tail_sum * tail_sum / ones
    denom = np.sqrt(np.maximum(var_head, 0.0) * np.maximum(var_tail, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 1e-12, num / denom, 0.0)
    return r


def dominant_period_s(x: np.ndarray, tick_s: float,
                      min_period_s: float = 0.05) -> float | None:
    """Fundamental period of a (roughly) periodic signal, or None.

    Earliest strong peak of the lag-correlation function, refined by
    parabolic interpolation for sub-tick resolution.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 8 or tick_s <= 0:
        return None
    x = x - x.mean()
    if not np.any(x):
        return None
    r = _lag_correlation(x)
    min_lag = max(2, int(round(min_period_s / tick_s)))
    max_lag = n // 2
    if max_lag <= min_lag:
        return None
    window = r[min_lag:max_lag]
    peaks, _ = sp_signal.find_peaks(window)
    if len(peaks):
        # the fundamental is the earliest peak comparable to the strongest
        # one; later comparable peaks are its multiples
        best = float(window[peaks].max())
        lag = min_lag + int(min(p for p in peaks if window[p] >= 0.8 * best))
    else:
        lag = min_lag + int(np.argmax(window))

    if 1 <= lag < n - 1:
        a, b, c = r[lag - 1], r[lag], r[lag + 1]
        denom = a - 2 * b + c
        offset = 0.5 * (a - c) / denom if denom != 0 else 0.0
        if abs(offset) <= 1:
            return (lag + offset) * tick_s
    return lag * tick_s


def local_maxima(x: np.ndarray, prominence: float = 0.05) -> list[int]:
    """Indices of local maxima whose prominence exceeds the given fraction
    of the signal range."""
    x = np.asarray(x, dtype=np.float64)
    span = float(x.max(initial=0.0) - x.min(initial=0.0))
    if len(x) < 3 or span == 0:
        return []
    peaks, _ = sp_signal.find_peaks(x, prominence=prominence * span)
    return list(peaks)


def local_minima(x: np.ndarray, prominence: float = 0.05) -> list[int]:
    return local_maxima(-np.asarray(x, dtype=np.float64), prominence)


def rise_durations_s(x: np.ndarray, t_s: np.ndarray,
                     prominence: float = 0.05) -> list[tuple[float, float]]:
    """(peak_time, rise_duration) for each maximum, measured from the last
    preceding sample at the local baseline."""
    x = np.asarray(x, dtype=np.float64)
    peaks = local_maxima(x, prominence)
    out = []
    for p in peaks:
        i = p
        while i > 0 and x[i - 1] < x[i]:
            i -= 1
        out.append((float(t_s[p]), float(t_s[p] - t_s[i])))
    return out


def activity_edges_s(x: np.ndarray, t_s: np.ndarray,
                     block_s: float = 0.1) -> list[float]:
    """Rising edges of coarse on/off activity (block-maximum envelope).

    Useful for oscillating signals whose carrier touches zero inside a
    burst: the block max bridges those zero crossings so only the burst
    gate itself produces edges.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2:
        return []
    tick = float(t_s[1] - t_s[0])
    block = max(1, int(round(block_s / tick)))
    n_blocks = len(x) // block
    if n_blocks < 2:
        return []
    blocks = x[: n_blocks * block].reshape(n_blocks, block).max(axis=1)
    active = blocks > 0.0
    edges = np.flatnonzero(active[1:] & ~active[:-1]) + 1
    times = [float(t_s[i * block]) for i in edges]
    if active[0]:
        times.insert(0, float(t_s[0]))
    return times


def pulse_times_s(vib: np.ndarray, t_s: np.ndarray,
                  threshold: float = 0.5) -> list[float]:
    """Rising-edge times of the vibration channel relative to its peak."""
    vib = np.asarray(vib, dtype=np.float64)
    peak = float(vib.max(initial=0.0))
    if peak <= 0:
        return []
    level = threshold * peak
    above = vib >= level
    edges = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    times = [float(t_s[i]) for i in edges]
    if above[0]:
        times.insert(0, float(t_s[0]))
    return times


@dataclass
class TraceReport:
    rows: int
    duration_s: float
    compression_min: float
    compression_max: float
    period_s: float | None
    maxima_times_s: list[float] = field(default_factory=list)
    rise_durations_s: list[float] = field(default_factory=list)
    pulse_times_s: list[float] = field(default_factory=list)
    pulse_spacing_s: list[float] = field(default_factory=list)
    led_first: tuple[int, int, int] = (0, 0, 0)
    led_last: tuple[int, int, int] = (0, 0, 0)
    behaviors_seen: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def analyze_trace(trace: Trace, prominence: float = 0.05) -> TraceReport:
    t_s = trace.t_s
    rises = rise_durations_s(trace.compression, t_s, prominence)
    pulses = pulse_times_s(trace.vib, t_s)
    behaviors = []
    for name in trace.active:
        if name and (not behaviors or behaviors[-1] != name):
            behaviors.append(name)
    n = len(trace.t_ms)
    return TraceReport(
        rows=n,
        duration_s=float(t_s[-1] - t_s[0]) + trace.tick_s if n else 0.0,
        compression_min=float(trace.compression.min(initial=0.0)),
        compression_max=float(trace.compression.max(initial=0.0)),
        period_s=dominant_period_s(trace.compression, trace.tick_s),
        maxima_times_s=[t for t, _ in rises],
        rise_durations_s=[d for _, d in rises],
        pulse_times_s=pulses,
        pulse_spacing_s=[b - a for a, b in zip(pulses, pulses[1:])],
        led_first=tuple(int(c) for c in trace.led0[0]) if n else (0, 0, 0),
        led_last=tuple(int(c) for c in trace.led0[-1]) if n else (0, 0, 0),
        behaviors_seen=behaviors,
    )
