import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from touchinfer.model import (
    CHANNEL_GROUPS,
    SENSOR_CHANNELS,
    Channel,
    HandMode,
    LabeledTrace,
    SensorEvent,
    TouchAction,
    TraceError,
    TraceMeta,
    label_from_wire,
    label_to_wire,
    trace_from_line,
    trace_to_line,
)

from conftest import make_trace, traces

CANONICAL = [
    "OX", "OY", "OZ", "MX", "MY", "MZ", "MGX", "MGY", "MGZ",
    "rAlpha", "rBeta", "rGama", "interval",
]


def test_channel_vocabulary_exact():
    assert [c.value for c in Channel] == CANONICAL
    assert len(SENSOR_CHANNELS) == 12
    assert Channel.INTERVAL not in SENSOR_CHANNELS


def test_channel_groups_cover_sensor_channels():
    grouped = [c for chans in CHANNEL_GROUPS.values() for c in chans]
    assert sorted(grouped, key=lambda c: c.value) == sorted(
        SENSOR_CHANNELS, key=lambda c: c.value
    )
    assert all(len(chans) == 3 for chans in CHANNEL_GROUPS.values())


@given(st.sampled_from(CANONICAL))
def test_channel_round_trips_through_string(name):
    assert Channel(name).value == name


@given(st.one_of(st.sampled_from(list(TouchAction)), st.integers(0, 9)))
def test_label_wire_round_trip(label):
    assert label_from_wire(label_to_wire(label)) == label


@pytest.mark.parametrize("bad", ["click", "digit:x", "digit:10", "action:tap", "pin:3"])
def test_label_from_wire_rejects_junk(bad):
    with pytest.raises(TraceError):
        label_from_wire(bad)


def test_sensor_event_validates():
    ev = SensorEvent("s", 12.5, Channel.MX, 0.01)
    assert ev.value == 0.01
    with pytest.raises(TraceError):
        SensorEvent("s", -1.0, Channel.MX, 0.0)
    with pytest.raises(TraceError):
        SensorEvent("s", 0.0, Channel.MX, float("nan"))
    with pytest.raises(TraceError):
        SensorEvent("s", 0.0, "MX", 0.0)


def test_trace_requires_all_twelve_channels():
    trace = make_trace(np.random.default_rng(0))
    seqs = dict(trace.sequences)
    del seqs[Channel.MX]
    with pytest.raises(TraceError, match="MX"):
        LabeledTrace(trace.label, trace.meta, trace.interval_ms, seqs)


def test_trace_rejects_group_length_mismatch():
    trace = make_trace(np.random.default_rng(1))
    seqs = dict(trace.sequences)
    seqs[Channel.MX] = np.append(seqs[Channel.MX], 0.0)
    with pytest.raises(TraceError, match="acceleration"):
        LabeledTrace(trace.label, trace.meta, trace.interval_ms, seqs)


def test_trace_rejects_empty_and_nonfinite():
    trace = make_trace(np.random.default_rng(2))
    seqs = dict(trace.sequences)
    for bad in (np.array([]), np.array([1.0, np.inf])):
        seqs2 = dict(seqs)
        for ch in CHANNEL_GROUPS["rotation"]:
            seqs2[ch] = bad
        with pytest.raises(TraceError):
            LabeledTrace(trace.label, trace.meta, trace.interval_ms, seqs2)


def test_trace_sequences_are_read_only():
    trace = make_trace(np.random.default_rng(3))
    with pytest.raises(ValueError):
        trace.sequences[Channel.OX][0] = 99.0


@given(traces())
def test_trace_serde_round_trip_is_identity(trace):
    assert trace_from_line(trace_to_line(trace)) == trace


@given(traces())
def test_trace_serialization_is_deterministic(trace):
    assert trace_to_line(trace) == trace_to_line(trace)


def test_trace_from_line_rejects_malformed():
    good = trace_to_line(make_trace(np.random.default_rng(4)))
    for bad in ["not json", "[1,2]", good.replace('"MX"', '"QX"', 1),
                good.replace("action:click", "action:wiggle")]:
        with pytest.raises(TraceError):
            trace_from_line(bad)


def test_meta_defaults():
    meta = TraceMeta(user_id="u", device="d", browser="b")
    assert meta.hand_mode is HandMode.UNKNOWN
    assert meta.collected_at == 0.0
