"""Feature extraction against independent brute-force oracles.

Every numeric operation is checked against a separately coded
straight-line reimplementation (naive DFT, sequential accumulation,
per-index loops) so the vectorized code cannot hide a formula error.
"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from touchinfer.features import (
    EmptySequence,
    LengthMismatch,
    SequenceTooShort,
    SeqStats,
    TooShort,
    ZeroEnergy,
    baseline_shift,
    dac,
    derivative,
    energy_interval_length,
    extract,
    feature_layout,
    layout_sections,
    stats,
    fft_features,
)
from touchinfer.model import CHANNEL_GROUPS, LabeledTrace

from conftest import make_trace


# ---------------------------------------------------------------- oracles

def oracle_stats(values):
    """Sequential accumulation, no numpy."""
    mx = mn = values[0]
    total = 0.0
    energy = 0.0
    for v in values:
        if v > mx:
            mx = v
        if v < mn:
            mn = v
        total += v
        energy += v * v
    return mx, mn, total / len(values), energy


def oracle_dac(x, y, z):
    out = []
    for i in range(1, len(x)):
        out.append(math.sqrt(
            (x[i] - x[i - 1]) ** 2 + (y[i] - y[i - 1]) ** 2 + (z[i] - z[i - 1]) ** 2
        ))
    return out


def oracle_dft(values):
    """O(n^2) direct transform."""
    n = len(values)
    return [
        sum(values[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n))
        for k in range(n)
    ]


def oracle_energy_interval(values, fraction):
    """Brute force over all centered windows."""
    energy = sum(v * v for v in values)
    assert energy > 0
    coe = sum(i * v * v for i, v in enumerate(values)) / energy
    center = math.ceil(coe - 0.5)
    n = len(values)
    h = 0
    while True:
        lo = max(0, center - h)
        hi = min(n - 1, center + h)
        if sum(v * v for v in values[lo:hi + 1]) >= fraction * energy:
            return 2 * h + 1
        h += 1


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------- baseline shift

def test_baseline_shift_examples():
    assert baseline_shift([5, 7, 6]).tolist() == [0, 2, 1]
    assert baseline_shift([0, 0, 0]).tolist() == [0, 0, 0]
    assert baseline_shift([-3]).tolist() == [0]


def test_baseline_shift_empty():
    with pytest.raises(EmptySequence):
        baseline_shift([])


@given(st.lists(st.integers(-2**20, 2**20), min_size=1, max_size=50),
       st.integers(-2**20, 2**20))
def test_baseline_shift_cancels_offsets(grid, offset_grid):
    # dyadic grid values keep the float arithmetic exact
    seq = np.asarray(grid, dtype=np.float64) / 1024.0
    offset = offset_grid / 1024.0
    assert np.array_equal(baseline_shift(seq + offset), baseline_shift(seq))


# -------------------------------------------------------------- derivative

def test_derivative_examples():
    assert derivative([2, 5, 3]).tolist() == [3, -2]
    assert derivative([1, 1, 1, 1]).tolist() == [0, 0, 0]
    assert derivative([4]).tolist() == []
    with pytest.raises(EmptySequence):
        derivative([])


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=60))
def test_derivative_inverts_cumulative_sum(xs):
    seq = np.asarray(xs)
    recon = derivative(np.cumsum(seq))
    assert np.allclose(recon, seq[1:], rtol=1e-9, atol=1e-9)


# --------------------------------------------------------------------- dac

def test_dac_examples():
    assert dac([0, 3], [0, 4], [0, 0]).tolist() == [5]
    assert dac([2, 2, 2], [1, 1, 1], [7, 7, 7]).tolist() == [0, 0]
    with pytest.raises(LengthMismatch):
        dac([1, 2], [1, 2, 3], [1, 2])
    with pytest.raises(EmptySequence):
        dac([], [], [])


def test_dac_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        x, y, z = (rng.normal(size=50) for _ in range(3))
        got = dac(x, y, z)
        want = oracle_dac(list(x), list(y), list(z))
        assert all(close(g, w, 1e-12) for g, w in zip(got, want))
        assert len(got) == 49 and np.all(got >= 0)


# ------------------------------------------------------------------- stats

def test_stats_examples():
    assert stats([1, 2, 3]) == SeqStats(3, 1, 2, 14)
    assert stats([-1, -1]) == SeqStats(-1, -1, -1, 2)
    with pytest.raises(EmptySequence):
        stats([])


def test_stats_matches_accumulation_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        seq = rng.normal(scale=10, size=100)
        got = stats(seq)
        mx, mn, mean, energy = oracle_stats(list(seq))
        assert got.max == mx and got.min == mn
        assert close(got.mean, mean, 1e-12)
        assert close(got.energy, energy, 1e-12)


def test_stats_invariant_min_le_mean_le_max():
    rng = np.random.default_rng(12)
    for _ in range(50):
        s = stats(rng.normal(size=30))
        assert s.min <= s.mean <= s.max
        assert s.energy >= 0


# ------------------------------------------------------------ fft features

def test_fft_features_constant_is_pure_dc():
    assert fft_features([2, 2, 2, 2]) == SeqStats(8, 0, 2, 64)


def test_fft_features_nyquist_tone():
    got = fft_features([1, -1, 1, -1])
    assert close(got.max, 4, 1e-12) and close(got.min, 0, 1e-12)
    assert close(got.mean, 1, 1e-12) and close(got.energy, 16, 1e-12)


def test_fft_features_too_short():
    with pytest.raises(TooShort):
        fft_features([1.0])
    with pytest.raises(TooShort):
        fft_features([])


def test_fft_features_matches_naive_dft():
    rng = np.random.default_rng(13)
    for _ in range(100):
        seq = rng.normal(scale=5, size=37)
        mags = [abs(c) for c in oracle_dft(list(seq))]
        want = oracle_stats(mags)
        got = fft_features(seq)
        for g, w in zip((got.max, got.min, got.mean, got.energy), want):
            assert close(g, w, 1e-9)


# -------------------------------------------------- energy interval length

def test_energy_interval_examples():
    assert energy_interval_length([0, 0, 1, 0, 0]) == 1
    assert energy_interval_length([1, 1, 1, 1, 1]) == 5
    assert energy_interval_length([0, 2, 0, 0]) == 1


def test_energy_interval_window_can_overhang_the_edge():
    # all energy at the ends pushes the centered window past the boundary
    assert energy_interval_length([1, 0, 0, 0, 0, 1]) == 7


def test_energy_interval_errors():
    with pytest.raises(EmptySequence):
        energy_interval_length([])
    with pytest.raises(ZeroEnergy):
        energy_interval_length([0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        energy_interval_length([1.0, 2.0], fraction=0.0)
    with pytest.raises(ValueError):
        energy_interval_length([1.0, 2.0], fraction=1.5)


def test_energy_interval_matches_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(1, 60))
        seq = rng.normal(size=n)
        frac = float(rng.uniform(0.05, 1.0))
        assert energy_interval_length(seq, frac) == oracle_energy_interval(list(seq), frac)


@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=40),
       st.floats(0.05, 0.95), st.floats(0.0, 0.049))
def test_energy_interval_monotone_in_fraction(xs, frac, bump):
    seq = np.asarray(xs)
    if float(np.sum(seq * seq)) <= 0:
        seq = seq + 1.0
        if float(np.sum(seq * seq)) <= 0:
            return
    assert energy_interval_length(seq, frac) <= energy_interval_length(seq, frac + bump)


# ----------------------------------------------------------------- extract

def test_extract_phase1_shape_and_sections():
    vec = extract(make_trace(np.random.default_rng(0)), phase=1)
    assert len(vec.values) == 164
    assert [size for _, size in layout_sections(1)] == [48, 48, 6, 48, 14]
    assert vec.layout == feature_layout(1)


def test_extract_phase2_shape_and_sections():
    vec = extract(make_trace(np.random.default_rng(0)), phase=2)
    assert len(vec.values) == 150
    assert [size for _, size in layout_sections(2)] == [48, 48, 6, 48]
    assert vec.layout == feature_layout(2)


def test_layout_names_unique_and_stable():
    for phase in (1, 2):
        layout = feature_layout(phase)
        assert len(set(layout)) == len(layout)
        assert layout == feature_layout(phase)
    assert feature_layout(2) == feature_layout(1)[:150]


def test_extract_constant_trace_is_all_zero_time_and_fft():
    trace = make_trace(np.random.default_rng(1))
    sequences = {ch: np.full(len(seq), 3.7) for ch, seq in trace.sequences.items()}
    const = LabeledTrace(trace.label, trace.meta, trace.interval_ms, sequences)
    vec = extract(const, phase=1)
    assert np.all(vec.values == 0.0)


def test_extract_is_pure():
    rng = np.random.default_rng(2)
    trace = make_trace(rng)
    a = extract(trace, phase=1)
    b = extract(trace, phase=1)
    assert np.array_equal(a.values, b.values)
    assert a.layout == b.layout


def test_extract_baseline_invariance_bitwise():
    rng = np.random.default_rng(3)
    for _ in range(10):
        trace = make_trace(rng)
        # quantize to a dyadic grid so adding the offset is exact float math
        base = {ch: np.round(seq * 1024) / 1024 + 0.0
                for ch, seq in trace.sequences.items()}
        shifted = {ch: seq + 256.0 for ch, seq in base.items()}
        t0 = LabeledTrace(trace.label, trace.meta, trace.interval_ms, base)
        t1 = LabeledTrace(trace.label, trace.meta, trace.interval_ms, shifted)
        for phase in (1, 2):
            a, b = extract(t0, phase), extract(t1, phase)
            assert a.values.tobytes() == b.values.tobytes()


def test_extract_rejects_too_short_sequences():
    trace = make_trace(np.random.default_rng(4))
    sequences = dict(trace.sequences)
    for ch in CHANNEL_GROUPS["rotation"]:
        sequences[ch] = np.array([1.0])
    short = LabeledTrace(trace.label, trace.meta, trace.interval_ms, sequences)
    with pytest.raises(SequenceTooShort):
        extract(short, phase=1)


def test_extract_rejects_bad_phase():
    with pytest.raises(ValueError):
        extract(make_trace(np.random.default_rng(5)), phase=3)


def test_extract_dac_section_uses_both_acceleration_groups():
    layout = feature_layout(1)
    dac_names = layout[96:102]
    assert list(dac_names) == [
        "dac_accel_max", "dac_accel_min", "dac_accel_mean",
        "dac_gravity_max", "dac_gravity_min", "dac_gravity_mean",
    ]


def test_extract_energy_interval_section_names():
    layout = feature_layout(1)
    tail = layout[150:]
    assert len(tail) == 14
    assert tail[0] == "ei_raw_MX" and tail[5] == "ei_raw_MGZ"
    assert tail[6] == "ei_deriv_MX" and tail[11] == "ei_deriv_MGZ"
    assert tail[12] == "ei_dac_accel" and tail[13] == "ei_dac_gravity"
