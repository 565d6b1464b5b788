"""Sensor stream interpretation: IMU gestures and audio onsets.

The gesture detector turns a 6-DoF IMU stream into discrete Tilt / TwoTilts /
Flip events. Orientation is measured against a gravity reference captured
from the first half second of the stream, so the device can start in any
resting pose. Detection is causal: an event's timestamp never precedes the
samples that justified it.

The onset detector is energy based: frame the signal, compare each frame's
energy against a trailing mean, apply a refractory window. The bass path
low-passes the signal first and runs the identical detector, which is what
drives the "pulse on bass-heavy beats" behavior. Tempo is the folded
reciprocal of the median inter-onset interval.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sp_signal

from .errors import DomainError, StreamError

Vec3 = tuple[float, float, float]

TILT = "Tilt"
TWO_TILTS = "TwoTilts"
FLIP = "Flip"
TOUCH_START = "TouchStart"
TOUCH_END = "TouchEnd"

GESTURE_KINDS = (TILT, TWO_TILTS, FLIP, TOUCH_START, TOUCH_END)


@dataclass(frozen=True)
class ImuSample:
    t_ms: float
    accel_g: Vec3
    gyro_dps: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class GestureEvent:
    kind: str
    t_ms: float
    zone: int | None = None


@dataclass(frozen=True)
class OnsetEvent:
    t_ms: float
    band: str  # "full" | "bass"
    strength: float


@dataclass(frozen=True)
class GestureConfig:
    """Detection thresholds; the tilt/flip magnitudes are deliberate defaults
    since "gentle" is not a number."""

    tilt_enter_deg: float = 25.0
    tilt_exit_deg: float = 10.0
    tilt_window_s: float = 2.0
    double_tilt_window_s: float = 5.0
    flip_hold_s: float = 0.5
    refractory_s: float = 0.3
    calibration_s: float = 0.5


class GestureDetector:
    """Streaming tilt/flip recognizer; one instance per IMU stream.

    push() accepts samples in timestamp order and returns any events they
    complete. Instances hold per-stream state and are not shareable across
    streams, but separate instances are independent.
    """

    def __init__(self, cfg: GestureConfig | None = None):
        self.cfg = cfg or GestureConfig()
        self._t_last: float | None = None
        self._calib_sum = [0.0, 0.0, 0.0]
        self._calib_n = 0
        self._calib_until: float | None = None
        self._ref: Vec3 | None = None
        # tilt state: None = armed, float = time the 25 deg excursion began,
        # "blocked" = waiting to fall below the exit angle before re-arming
        self._excursion_t: float | str | None = None
        self._last_tilt_t: float | None = None
        self._inverted_since: float | None = None
        self._flip_fired = False
        self._last_emit: dict[str, float] = {}

    def push(self, sample: ImuSample) -> list[GestureEvent]:
        t = sample.t_ms
        if self._t_last is not None and t <= self._t_last:
            raise StreamError(f"non-monotone IMU timestamps: {t} after {self._t_last}")
        self._t_last = t

        if self._ref is None:
            if self._calib_until is None:
                self._calib_until = t + self.cfg.calibration_s * 1000.0
            for i in range(3):
                self._calib_sum[i] += sample.accel_g[i]
            self._calib_n += 1
            if t < self._calib_until:
                return []
            norm = math.sqrt(sum(c * c for c in self._calib_sum))
            if norm == 0.0:
                raise StreamError("gravity reference is zero during calibration")
            self._ref = tuple(c / norm for c in self._calib_sum)
            return []

        ax, ay, az = sample.accel_g
        mag = math.sqrt(ax * ax + ay * ay + az * az)
        if mag == 0.0:
            return []
        dot = (ax * self._ref[0] + ay * self._ref[1] + az * self._ref[2]) / mag
        angle = math.degrees(math.acos(min(1.0, max(-1.0, dot))))

        events: list[GestureEvent] = []
        events.extend(self._update_tilt(t, angle))
        events.extend(self._update_flip(t, dot))
        return events

    def _emit(self, kind: str, t: float) -> GestureEvent | None:
        last = self._last_emit.get(kind)
        if last is not None and t - last < self.cfg.refractory_s * 1000.0:
            return None
        self._last_emit[kind] = t
        return GestureEvent(kind=kind, t_ms=t)

    def _update_tilt(self, t: float, angle: float) -> list[GestureEvent]:
        cfg = self.cfg
        out: list[GestureEvent] = []
        if self._excursion_t is None:
            if angle > cfg.tilt_enter_deg:
                self._excursion_t = t
        elif self._excursion_t == "blocked":
            if angle < cfg.tilt_exit_deg:
                self._excursion_t = None
        else:
            if angle < cfg.tilt_exit_deg:
                # tip-and-return completed inside the window -> a Tilt
                if t - self._excursion_t <= cfg.tilt_window_s * 1000.0:
                    ev = self._emit(TILT, t)
                    if ev is not None:
                        out.append(ev)
                        if (
                            self._last_tilt_t is not None
                            and t - self._last_tilt_t <= cfg.double_tilt_window_s * 1000.0
                        ):
                            two = self._emit(TWO_TILTS, t)
                            if two is not None:
                                out.append(two)
                            self._last_tilt_t = None
                        else:
                            self._last_tilt_t = t
                self._excursion_t = None
            elif t - self._excursion_t > cfg.tilt_window_s * 1000.0:
                # held tilted too long; ignore until it comes back down
                self._excursion_t = "blocked"
        return out

    def _update_flip(self, t: float, dot: float) -> list[GestureEvent]:
        out: list[GestureEvent] = []
        if dot < 0.0:
            if self._inverted_since is None:
                self._inverted_since = t
                self._flip_fired = False
            elif (
                not self._flip_fired
                and t - self._inverted_since >= self.cfg.flip_hold_s * 1000.0
            ):
                ev = self._emit(FLIP, t)
                if ev is not None:
                    out.append(ev)
                self._flip_fired = True
        else:
            self._inverted_since = None
            self._flip_fired = False
        return out


def detect_tilt_flip(
    stream, cfg: GestureConfig | None = None
) -> list[GestureEvent]:
    """Run the streaming detector over a whole sample sequence."""
    det = GestureDetector(cfg)
    events: list[GestureEvent] = []
    for sample in stream:
        events.extend(det.push(sample))
    return events


def load_imu_trace(path) -> list[ImuSample]:
    """Read a scripted sensor trace: `t_ms ax ay az gx gy gz` per line.

    Blank lines and `#` comments are skipped.
    """
    samples = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 7:
            raise StreamError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise StreamError(f"{path}:{lineno}: {exc}") from exc
        samples.append(
            ImuSample(t_ms=vals[0], accel_g=tuple(vals[1:4]), gyro_dps=tuple(vals[4:7]))
        )
    return samples


def save_imu_trace(path, samples) -> None:
    lines = []
    for s in samples:
        lines.append(
            " ".join(
                format(v, ".6g")
                for v in (s.t_ms, *s.accel_g, *s.gyro_dps)
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class OnsetConfig:
    frame: int = 1024
    hop: int = 512
    trailing_frames: int = 43
    threshold_ratio: float = 1.5
    refractory_s: float = 0.25
    bass_cutoff_hz: float = 150.0
    bass_order: int = 4
    tempo_lo_bpm: float = 60.0
    tempo_hi_bpm: float = 180.0
    min_onsets_for_tempo: int = 4
    # relative floor keeps the detector gain-invariant while ignoring
    # numerical dust in near-silent frames
    energy_floor_rel: float = 1e-6


@dataclass(frozen=True)
class OnsetResult:
    onsets: tuple[OnsetEvent, ...]
    bass_onsets: tuple[OnsetEvent, ...]
    tempo_bpm: float | None  # None = NoTempo, callers fall back
    rms: np.ndarray = field(repr=False, default=None)
    hop_s: float = 0.0

    def rms_at(self, t_s: float) -> float:
        """Normalized loudness (0..1 of track max) at time t."""
        if self.rms is None or len(self.rms) == 0:
            return 0.0
        i = min(len(self.rms) - 1, max(0, int(t_s / self.hop_s)))
        return float(self.rms[i])


def _frame_energies(x: np.ndarray, frame: int, hop: int) -> np.ndarray:
    n = 1 + (len(x) - frame) // hop
    view = np.lib.stride_tricks.sliding_window_view(x, frame)[::hop][:n]
    return np.einsum("ij,ij->i", view, view)


def _pick_onsets(
    energies: np.ndarray, hop_s: float, band: str, cfg: OnsetConfig
) -> list[OnsetEvent]:
    floor = cfg.energy_floor_rel * float(energies.max(initial=0.0))
    csum = np.concatenate(([0.0], np.cumsum(energies)))
    out: list[OnsetEvent] = []
    last_t = -math.inf
    peak = float(energies.max(initial=0.0)) or 1.0
    for i, e in enumerate(energies):
        w = min(i, cfg.trailing_frames)
        mean = (csum[i] - csum[i - w]) / w if w else 0.0
        t_s = i * hop_s
        if e <= floor or e <= cfg.threshold_ratio * mean:
            continue
        if t_s - last_t < cfg.refractory_s:
            continue
        last_t = t_s
        out.append(OnsetEvent(t_ms=t_s * 1000.0, band=band, strength=float(e) / peak))
    return out


def _fold_bpm(bpm: float, lo: float, hi: float) -> float:
    while bpm < lo:
        bpm *= 2.0
    while bpm > hi:
        bpm /= 2.0
    return bpm


def detect_onsets(
    pcm: np.ndarray, rate_hz: int, cfg: OnsetConfig | None = None
) -> OnsetResult:
    """Full-band and bass-band onsets plus a tempo estimate for a mono buffer."""
    cfg = cfg or OnsetConfig()
    if rate_hz < 8000:
        raise DomainError(f"sample rate must be >= 8000 Hz, got {rate_hz}")
    x = np.asarray(pcm, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("pcm buffer must be mono (1-D)")
    if len(x) < 2 * rate_hz:
        raise DomainError("audio must be at least 2 s long")

    hop_s = cfg.hop / rate_hz
    energies = _frame_energies(x, cfg.frame, cfg.hop)
    onsets = _pick_onsets(energies, hop_s, "full", cfg)

    sos = sp_signal.butter(
        cfg.bass_order, cfg.bass_cutoff_hz, btype="low", fs=rate_hz, output="sos"
    )
    bass = sp_signal.sosfilt(sos, x)
    bass_energies = _frame_energies(bass, cfg.frame, cfg.hop)
    bass_onsets = _pick_onsets(bass_energies, hop_s, "bass", cfg)

    tempo = None
    if len(onsets) >= cfg.min_onsets_for_tempo:
        times = np.array([o.t_ms for o in onsets]) / 1000.0
        median_ioi = float(np.median(np.diff(times)))
        if median_ioi > 0:
            tempo = _fold_bpm(60.0 / median_ioi, cfg.tempo_lo_bpm, cfg.tempo_hi_bpm)

    rms = np.sqrt(energies / cfg.frame)
    peak = float(rms.max(initial=0.0))
    if peak > 0:
        rms = rms / peak
    return OnsetResult(
        onsets=tuple(onsets),
        bass_onsets=tuple(bass_onsets),
        tempo_bpm=tempo,
        rms=rms,
        hop_s=hop_s,
    )


def load_wav(path) -> tuple[np.ndarray, int]:
    """Mono float64 samples in [-1, 1] plus the sample rate."""
    with wave.open(str(path), "rb") as w:
        rate = w.getframerate()
        channels = w.getnchannels()
        width = w.getsampwidth()
        raw = w.readframes(w.getnframes())
    if width == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif width == 4:
        data = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
    else:
        raise DomainError(f"unsupported wav sample width {width}")
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return data, rate


def save_wav(path, pcm: np.ndarray, rate_hz: int) -> None:
    """Write mono float samples in [-1, 1] as 16-bit PCM."""
    scaled = np.clip(np.asarray(pcm, dtype=np.float64), -1.0, 1.0)
    ints = (scaled * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate_hz)
        w.writeframes(ints.tobytes())
