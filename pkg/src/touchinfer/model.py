"""Domain types shared by every stage of the pipeline.

A trace is one labeled recording of the 12 sensor sequences a browser
page can observe (orientation angles, acceleration with and without
gravity, rotation rate) plus the reading interval reported by the
motion event. Channel names are the exact wire vocabulary; note that
the orientation names are deliberately crossed (OX carries the gamma
angle, OY beta, OZ alpha) to stay bit-compatible with the historical
collector script this toolkit ingests from.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np


class Channel(str, Enum):
    """The 13 canonical channel names (case-sensitive wire strings)."""

    OX = "OX"          # orientation gamma, degrees
    OY = "OY"          # orientation beta, degrees
    OZ = "OZ"          # orientation alpha, degrees
    MX = "MX"          # acceleration x, m/s^2
    MY = "MY"          # acceleration y, m/s^2
    MZ = "MZ"          # acceleration z, m/s^2
    MGX = "MGX"        # acceleration incl. gravity x, m/s^2
    MGY = "MGY"        # acceleration incl. gravity y, m/s^2
    MGZ = "MGZ"        # acceleration incl. gravity z, m/s^2
    R_ALPHA = "rAlpha"  # rotation rate alpha, deg/s
    R_BETA = "rBeta"    # rotation rate beta, deg/s
    R_GAMA = "rGama"    # rotation rate gamma, deg/s (historical spelling)
    INTERVAL = "interval"  # reading interval, ms

    def __str__(self) -> str:
        return self.value


# The 12 per-sample channels stored in a trace; interval is scalar metadata.
SENSOR_CHANNELS: tuple[Channel, ...] = tuple(
    c for c in Channel if c is not Channel.INTERVAL
)

# Readings arrive as triples per DOM event, one group per event kind.
CHANNEL_GROUPS: dict[str, tuple[Channel, Channel, Channel]] = {
    "orientation": (Channel.OX, Channel.OY, Channel.OZ),
    "acceleration": (Channel.MX, Channel.MY, Channel.MZ),
    "gravity": (Channel.MGX, Channel.MGY, Channel.MGZ),
    "rotation": (Channel.R_ALPHA, Channel.R_BETA, Channel.R_GAMA),
}


class TouchAction(str, Enum):
    CLICK = "click"
    HOLD = "hold"
    SCROLL_UP = "scroll_up"
    SCROLL_DOWN = "scroll_down"
    SCROLL_RIGHT = "scroll_right"
    SCROLL_LEFT = "scroll_left"
    ZOOM_IN = "zoom_in"
    ZOOM_OUT = "zoom_out"

    def __str__(self) -> str:
        return self.value


SCROLL_ACTIONS: tuple[TouchAction, ...] = (
    TouchAction.SCROLL_UP,
    TouchAction.SCROLL_DOWN,
    TouchAction.SCROLL_RIGHT,
    TouchAction.SCROLL_LEFT,
)

# Stage-1 classifiers see the four scrolls as one class.
SCROLL_COLLAPSED = "scroll"

# A label is either a touch action or a digit 0-9.
Label = Union[TouchAction, int]

DIGITS: tuple[int, ...] = tuple(range(10))

_ACTION_INDEX = {action: i for i, action in enumerate(TouchAction)}


def label_order_key(label) -> tuple:
    """Canonical display order for confusion tables and reports.

    Actions keep enum order with the collapsed scroll class in the
    slot of the first scroll; digits follow in ascending order; any
    other string label sorts last, lexicographically.
    """
    if isinstance(label, TouchAction):
        return (0, _ACTION_INDEX[label], "")
    if label == SCROLL_COLLAPSED:
        return (0, _ACTION_INDEX[TouchAction.SCROLL_UP], "")
    if isinstance(label, int) and not isinstance(label, bool):
        return (1, label, "")
    return (2, 0, str(label))


class HandMode(str, Enum):
    ONE = "one"
    TWO = "two"
    UNKNOWN = "unknown"

    def __str__(self) -> str:
        return self.value


class TraceError(ValueError):
    """A trace or event violates a structural invariant."""


def label_to_wire(label: Label) -> str:
    """Encode a label as its wire string, e.g. ``action:click`` or ``digit:7``."""
    if isinstance(label, TouchAction):
        return f"action:{label.value}"
    if isinstance(label, int) and not isinstance(label, bool) and 0 <= label <= 9:
        return f"digit:{label}"
    raise TraceError(f"not a valid label: {label!r}")


def label_from_wire(text: str) -> Label:
    kind, sep, value = text.partition(":")
    if not sep:
        raise TraceError(f"label missing kind prefix: {text!r}")
    if kind == "action":
        try:
            return TouchAction(value)
        except ValueError:
            raise TraceError(f"unknown touch action: {value!r}") from None
    if kind == "digit":
        if value in "0123456789" and len(value) == 1:
            return int(value)
        raise TraceError(f"digit labels must be 0-9, got {value!r}")
    raise TraceError(f"unknown label kind: {kind!r}")


def encode_label_token(label) -> str:
    """Persistence form of a class label: wire form for real labels,
    raw pass-through for internal string classes (e.g. collapsed scroll)."""
    if isinstance(label, (TouchAction, int)) and not isinstance(label, bool):
        return label_to_wire(label)
    if isinstance(label, str) and ":" not in label:
        return label
    raise TraceError(f"cannot encode label {label!r}")


def decode_label_token(text: str):
    return label_from_wire(text) if ":" in text else text


@dataclass(frozen=True)
class SensorEvent:
    """One timestamped reading on one channel of one session."""

    session_id: str
    timestamp_ms: float
    channel: Channel
    value: float

    def __post_init__(self) -> None:
        if not isinstance(self.channel, Channel):
            raise TraceError(f"not a channel: {self.channel!r}")
        if not math.isfinite(self.timestamp_ms) or self.timestamp_ms < 0:
            raise TraceError(f"bad timestamp: {self.timestamp_ms!r}")
        if not math.isfinite(self.value):
            raise TraceError(f"non-finite value: {self.value!r}")


@dataclass(frozen=True)
class TraceMeta:
    """Who/what produced a trace. collected_at is ms since session start."""

    user_id: str
    device: str
    browser: str
    hand_mode: HandMode = HandMode.UNKNOWN
    collected_at: float = 0.0


@dataclass(frozen=True, eq=False)
class LabeledTrace:
    """A segmented, labeled recording: the unit of classification.

    Invariants, enforced on construction: exactly the 12 sensor channels
    are present, every sequence is non-empty and finite, and within each
    sensor group all three sequences have equal length (readings arrive
    as triples per DOM event).
    """

    label: Label
    meta: TraceMeta
    interval_ms: float
    sequences: dict[Channel, np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        label_to_wire(self.label)  # validates the label variant
        got = set(self.sequences)
        want = set(SENSOR_CHANNELS)
        if got != want:
            missing = sorted(c.value for c in want - got)
            extra = sorted(str(c) for c in got - want)
            raise TraceError(f"channel set mismatch: missing={missing} extra={extra}")
        frozen: dict[Channel, np.ndarray] = {}
        for ch in SENSOR_CHANNELS:
            arr = np.asarray(self.sequences[ch], dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise TraceError(f"{ch.value}: sequence must be non-empty and 1-D")
            if not np.all(np.isfinite(arr)):
                raise TraceError(f"{ch.value}: non-finite sample")
            arr = arr.copy()
            arr.flags.writeable = False
            frozen[ch] = arr
        for group, (a, b, c) in CHANNEL_GROUPS.items():
            la, lb, lc = len(frozen[a]), len(frozen[b]), len(frozen[c])
            if not (la == lb == lc):
                raise TraceError(f"{group} group lengths differ: {la}, {lb}, {lc}")
        object.__setattr__(self, "sequences", frozen)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledTrace):
            return NotImplemented
        return (
            self.label == other.label
            and self.meta == other.meta
            and self.interval_ms == other.interval_ms
            and all(
                np.array_equal(self.sequences[ch], other.sequences[ch])
                for ch in SENSOR_CHANNELS
            )
        )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Fixed-layout numeric vector: 164 names for phase 1, 150 for phase 2."""

    phase: int
    values: np.ndarray
    layout: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.phase not in (1, 2):
            raise ValueError(f"phase must be 1 or 2, got {self.phase!r}")
        expected = 164 if self.phase == 1 else 150
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (expected,):
            raise ValueError(f"phase {self.phase} needs {expected} values, got {values.shape}")
        if len(self.layout) != expected:
            raise ValueError(f"layout has {len(self.layout)} names, expected {expected}")
        if len(set(self.layout)) != len(self.layout):
            raise ValueError("layout names must be unique")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layout", tuple(self.layout))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.phase == other.phase
            and self.layout == other.layout
            and np.array_equal(self.values, other.values)
        )


def trace_to_line(trace: LabeledTrace) -> str:
    """Serialize one trace as a dataset-file line (no trailing newline).

    Key order is fixed (label, meta, interval, seq) so equal traces
    serialize to identical bytes.
    """
    record = {
        "label": label_to_wire(trace.label),
        "meta": {
            "user": trace.meta.user_id,
            "device": trace.meta.device,
            "browser": trace.meta.browser,
            "hand": trace.meta.hand_mode.value,
            "collected_at": trace.meta.collected_at,
        },
        "interval": trace.interval_ms,
        "seq": {ch.value: trace.sequences[ch].tolist() for ch in SENSOR_CHANNELS},
    }
    return json.dumps(record, separators=(",", ":"))


def trace_from_line(line: str) -> LabeledTrace:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceError(f"bad trace record: {exc}") from None
    if not isinstance(record, dict):
        raise TraceError("trace record must be a JSON object")
    try:
        meta_rec = record["meta"]
        meta = TraceMeta(
            user_id=str(meta_rec["user"]),
            device=str(meta_rec["device"]),
            browser=str(meta_rec["browser"]),
            hand_mode=HandMode(meta_rec["hand"]),
            collected_at=float(meta_rec["collected_at"]),
        )
        seq = record["seq"]
        if not isinstance(seq, dict):
            raise TraceError("seq must be an object")
        sequences = {}
        for name, values in seq.items():
            try:
                ch = Channel(name)
            except ValueError:
                raise TraceError(f"unknown channel: {name!r}") from None
            sequences[ch] = np.asarray(values, dtype=np.float64)
        return LabeledTrace(
            label=label_from_wire(record["label"]),
            meta=meta,
            interval_ms=float(record["interval"]),
            sequences=sequences,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TraceError):
            raise
        raise TraceError(f"bad trace record: {exc}") from None
