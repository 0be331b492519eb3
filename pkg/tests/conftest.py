"""Shared builders and hypothesis strategies for the test suite."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from touchinfer.model import (
    CHANNEL_GROUPS,
    DIGITS,
    HandMode,
    LabeledTrace,
    TouchAction,
    TraceMeta,
)

finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)

labels = st.one_of(st.sampled_from(list(TouchAction)), st.sampled_from(DIGITS))


def make_trace(rng: np.random.Generator, label=TouchAction.CLICK,
               motion_n: int = 24, orientation_n: int = 18) -> LabeledTrace:
    """A random but structurally valid trace (group lengths differ on purpose)."""
    lengths = {
        "orientation": orientation_n,
        "acceleration": motion_n,
        "gravity": motion_n,
        "rotation": motion_n,
    }
    sequences = {}
    for group, chans in CHANNEL_GROUPS.items():
        for ch in chans:
            sequences[ch] = rng.normal(0.0, 1.0, size=lengths[group])
    meta = TraceMeta(user_id="u0", device="synth", browser="none",
                     hand_mode=HandMode.UNKNOWN, collected_at=0.0)
    return LabeledTrace(label=label, meta=meta, interval_ms=50.0, sequences=sequences)


@st.composite
def traces(draw) -> LabeledTrace:
    label = draw(labels)
    motion_n = draw(st.integers(min_value=2, max_value=40))
    orientation_n = draw(st.integers(min_value=2, max_value=40))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    rng = np.random.default_rng(seed)
    trace = make_trace(rng, label=label, motion_n=motion_n, orientation_n=orientation_n)
    hand = draw(st.sampled_from(list(HandMode)))
    meta = TraceMeta(
        user_id=draw(st.text(min_size=1, max_size=8)),
        device=draw(st.sampled_from(["iphone5", "nexus5", "lab-rig"])),
        browser=draw(st.sampled_from(["safari", "chrome"])),
        hand_mode=hand,
        collected_at=draw(st.floats(min_value=0, max_value=1e7, allow_nan=False)),
    )
    interval = draw(st.floats(min_value=1.0, max_value=200.0, allow_nan=False))
    return LabeledTrace(label=trace.label, meta=meta, interval_ms=interval,
                        sequences=dict(trace.sequences))
