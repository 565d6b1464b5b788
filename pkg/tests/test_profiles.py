import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lantern.errors import ConfigError, DomainError
from lantern.profiles import (
    NAMED_BREATHS,
    BreathPattern,
    ColorRamp,
    PulseEnvelope,
    PurrSpec,
    breath_value,
    breath_value_norm,
    lub_dub,
    pulse_value,
    purr_gate,
    purr_value,
    ramp_color,
    single_pulse,
)


class TestBreathValue:
    def test_starts_at_zero(self):
        p = BreathPattern(inhale_s=2.0, exhale_s=2.0)
        assert breath_value(0.0, p) == 0.0

    def test_peak_at_inhale_end(self):
        p = BreathPattern(inhale_s=2.0, exhale_s=3.0, amplitude=0.6)
        assert breath_value(2.0, p) == pytest.approx(0.6)

    def test_sinusoidal_midpoint(self):
        p = BreathPattern(inhale_s=2.0, exhale_s=2.0, amplitude=1.0)
        assert breath_value(1.0, p) == pytest.approx(0.5)

    def test_linear_easing(self):
        p = BreathPattern(inhale_s=4.0, exhale_s=4.0, easing="linear")
        assert breath_value(1.0, p) == pytest.approx(0.25)

    def test_holds(self):
        p = BreathPattern(inhale_s=1.0, hold_in_s=2.0, exhale_s=1.0, hold_out_s=2.0)
        assert breath_value(2.0, p) == pytest.approx(1.0)
        assert breath_value(5.0, p) == 0.0

    def test_periodicity(self):
        p = BreathPattern(inhale_s=1.5, exhale_s=2.5, amplitude=0.8)
        for t in np.linspace(0, 4, 37):
            assert breath_value(t, p) == pytest.approx(breath_value(t + 4.0, p), abs=1e-12)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            breath_value(-0.1, BreathPattern(inhale_s=1.0, exhale_s=1.0))

    def test_degenerate_pattern(self):
        with pytest.raises(ConfigError):
            BreathPattern(inhale_s=0.0)

    @given(st.floats(min_value=0, max_value=100))
    def test_range(self, t):
        p = BreathPattern(inhale_s=3.0, hold_in_s=1.0, exhale_s=4.0, amplitude=0.7)
        v = breath_value(t, p)
        assert 0.0 <= v <= 0.7 + 1e-12

    def test_dense_grid_extrema(self):
        p = BreathPattern(inhale_s=4.0, exhale_s=6.0, amplitude=0.7)
        grid = np.array([breath_value(t, p) for t in np.arange(0, 20.0, 0.005)])
        assert grid.max() == pytest.approx(0.7, abs=1e-9)
        assert grid.min() == pytest.approx(0.0, abs=1e-9)

    def test_norm_wraps_negative_positions(self):
        p = BreathPattern(inhale_s=1.0, exhale_s=1.0)
        assert breath_value_norm(-0.75, p) == pytest.approx(breath_value_norm(0.25, p))


class TestPulseValue:
    def test_inside_first_event(self):
        env = lub_dub()
        assert pulse_value(0.04, env) == 1.0

    def test_between_events(self):
        env = lub_dub()
        assert pulse_value(0.1, env) == 0.0

    def test_lub_dub_sample_point(self):
        # lub 0.0 s/1.0/0.08 s, dub 0.15 s/0.7/0.06 s, period 1 s
        assert pulse_value(0.16, lub_dub()) == 0.7

    def test_periodic(self):
        env = single_pulse(period_s=5.0)
        assert pulse_value(5.05, env) == pulse_value(0.05, env)

    def test_overlap_rejected(self):
        with pytest.raises(ConfigError):
            PulseEnvelope(events=((0.0, 1.0, 0.2), (0.1, 0.5, 0.2)), period_s=1.0)

    def test_event_past_period_rejected(self):
        with pytest.raises(ConfigError):
            PulseEnvelope(events=((0.9, 1.0, 0.2),), period_s=1.0)


class TestPurrValue:
    def test_gap_is_silent(self):
        spec = PurrSpec()
        assert purr_value(7.0, spec) == 0.0

    def test_plateau_peak(self):
        spec = PurrSpec()
        # plateau spans [1.25, 3.75] s; pick a carrier crest inside it:
        # |sin(pi*20*t)| = 1 at t = (k + 0.5)/20
        t = (40 + 0.5) / 20.0
        assert purr_gate(t, spec) == 1.0
        assert purr_value(t, spec) == pytest.approx(1.0)

    def test_gate_rising_edges(self):
        # direct evaluation of the gate over 30 s: rising edges at 0/10/20 s
        spec = PurrSpec()
        dt = 0.01
        gate = np.array([purr_gate(t, spec) for t in np.arange(0.0, 30.0, dt)])
        rising = np.flatnonzero((gate[1:] > 0) & (gate[:-1] == 0)) + 1
        edges = list(rising * dt)
        assert len(edges) == 3
        for edge, expected in zip(edges, (0.0, 10.0, 20.0)):
            assert edge == pytest.approx(expected, abs=2 * dt)

    def test_amplitude_bounded(self):
        spec = PurrSpec()
        vals = [purr_value(t, spec) for t in np.arange(0, 20, 0.003)]
        assert max(vals) <= 1.0

    def test_plateau_spectral_peak_at_carrier(self):
        spec = PurrSpec()
        rate = 1000.0
        t = np.arange(1.25, 3.75, 1.0 / rate)
        x = np.array([purr_value(ti, spec) for ti in t])
        x = x - x.mean()
        spectrum = np.abs(np.fft.rfft(x))
        freqs = np.fft.rfftfreq(len(x), 1.0 / rate)
        peak_hz = freqs[np.argmax(spectrum)]
        assert peak_hz == pytest.approx(20.0, rel=0.05)

    def test_carrier_burst_invariant(self):
        with pytest.raises(ConfigError):
            PurrSpec(carrier_hz=1.0, burst_period_s=5.0)


class TestRampColor:
    def test_endpoints_exact(self):
        r = ColorRamp()
        assert ramp_color(0.0, r) == (139, 0, 0)
        assert ramp_color(1.0, r) == (255, 214, 70)

    def test_midpoint(self):
        # hand-computed linear midpoint with round-half-up
        assert ramp_color(0.5, ColorRamp()) == (197, 107, 35)

    def test_domain(self):
        with pytest.raises(DomainError):
            ramp_color(1.5, ColorRamp())

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_channels_between_endpoints(self, u):
        r = ColorRamp()
        for c, lo, hi in zip(ramp_color(u, r), r.start_rgb, r.end_rgb):
            assert min(lo, hi) <= c <= max(lo, hi)

    @given(st.integers(min_value=0, max_value=1000))
    def test_monotone_per_channel(self, i):
        r = ColorRamp()
        a = ramp_color(i / 1001.0, r)
        b = ramp_color((i + 1) / 1001.0, r)
        assert all(y >= x for x, y in zip(a, b))

    def test_bad_components(self):
        with pytest.raises(ConfigError):
            ColorRamp(start_rgb=(300, 0, 0))


def test_breath_period_autocorrelation():
    # period detected within one sample on a dense grid
    from lantern.analysis import dominant_period_s

    p = BreathPattern(inhale_s=4.0, exhale_s=6.0, amplitude=0.7)
    tick = 0.01
    xs = np.array([breath_value(t, p) for t in np.arange(0, 60, tick)])
    period = dominant_period_s(xs, tick)
    assert period == pytest.approx(10.0, abs=tick)


def test_breath_dense_grid_extrema_all_named_patterns():
    for name, p in NAMED_BREATHS.items():
        grid = np.array(
            [breath_value(t, p) for t in np.arange(0, 2 * p.period_s, p.period_s / 400)]
        )
        assert grid.max() == pytest.approx(p.amplitude, abs=1e-9), name
        assert grid.min() == pytest.approx(0.0, abs=1e-9), name
