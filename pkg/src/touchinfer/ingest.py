"""Streaming ingest: wire parsing, session assembly, storage, TCP server.

Clients speak newline-delimited JSON over plain TCP. The first line of
a connection is a hello record naming the session; after that, data
records carry single channel readings and marker records bracket
labeled touch segments. An End marker cuts one LabeledTrace holding
exactly the in-window readings of all 12 sensor channels.

The same SessionState drives both the socket server and the offline
replay assembler, so a recorded session file pushed through a loopback
client persists byte-identical traces to offline assembly.
"""

from __future__ import annotations

import json
import math
import queue
import socketserver
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .model import (
    Channel,
    HandMode,
    Label,
    LabeledTrace,
    SENSOR_CHANNELS,
    SensorEvent,
    TraceError,
    TraceMeta,
    label_from_wire,
    trace_from_line,
    trace_to_line,
)


class IngestError(ValueError):
    pass


class MalformedRecord(IngestError):
    pass


class UnknownChannel(IngestError):
    pass


class NonFiniteValue(IngestError):
    pass


class NoOpenSegment(IngestError):
    pass


class EmptySegment(IngestError):
    pass


class StorageFailure(IngestError):
    pass


class BindFailure(IngestError):
    pass


# ------------------------------------------------------------ wire records


class MarkerKind(str, Enum):
    START = "start"
    END = "end"


@dataclass(frozen=True)
class SegmentMarker:
    kind: MarkerKind
    label: Label
    ts_ms: float


@dataclass(frozen=True)
class Hello:
    session: str
    device: str
    browser: str
    hand: HandMode


_CHANNEL_BY_NAME = {c.value: c for c in Channel}


def _number(obj, key, *, allow_negative=False) -> float:
    value = obj.get(key)
    if type(value) not in (int, float):
        raise MalformedRecord(f"{key!r} must be a number, got {value!r}")
    value = float(value)
    # json.loads happily produces NaN/Infinity, so check explicitly
    if not math.isfinite(value):
        raise NonFiniteValue(f"{key!r} is not finite: {value!r}")
    if value < 0 and not allow_negative:
        raise MalformedRecord(f"{key!r} must be non-negative, got {value!r}")
    return value


def parse_event(line: str, session_id: str = "") -> Union[SensorEvent, SegmentMarker, Hello]:
    """Decode one wire line into a data event, marker, or hello.

    Data records carry no session field on the wire; the caller stamps
    the surrounding session's id onto the decoded event.
    """
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedRecord(f"bad JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedRecord(f"expected an object, got {type(obj).__name__}")

    if "ch" in obj:
        name = obj.get("ch")
        if name not in _CHANNEL_BY_NAME:
            raise UnknownChannel(f"unknown channel {name!r}")
        ts = _number(obj, "t")
        value = _number(obj, "v", allow_negative=True)
        return SensorEvent(
            session_id=session_id, timestamp_ms=ts,
            channel=_CHANNEL_BY_NAME[name], value=value,
        )

    if "marker" in obj:
        kind = obj.get("marker")
        if kind not in (MarkerKind.START.value, MarkerKind.END.value):
            raise MalformedRecord(f"bad marker kind {kind!r}")
        ts = _number(obj, "t")
        raw_label = obj.get("label")
        if not isinstance(raw_label, str):
            raise MalformedRecord(f"marker label must be a string, got {raw_label!r}")
        try:
            label = label_from_wire(raw_label)
        except TraceError as exc:
            raise MalformedRecord(str(exc)) from None
        return SegmentMarker(kind=MarkerKind(kind), label=label, ts_ms=ts)

    if "session" in obj:
        for key in ("session", "device", "browser", "hand"):
            if not isinstance(obj.get(key), str):
                raise MalformedRecord(f"hello field {key!r} missing or not a string")
        try:
            hand = HandMode(obj["hand"])
        except ValueError:
            raise MalformedRecord(f"bad hand mode {obj['hand']!r}") from None
        return Hello(
            session=obj["session"], device=obj["device"],
            browser=obj["browser"], hand=hand,
        )

    raise MalformedRecord(f"unrecognized record: {sorted(obj)}")


# ------------------------------------------------------------ session state

_TOLERATED = (
    "malformed_records", "unknown_channels", "nonfinite_values",
    "out_of_order", "start_while_open", "no_open_segment",
    "empty_segments", "invalid_traces", "unexpected_hello",
    "label_mismatch",
)


def _zero_counters() -> dict[str, int]:
    return dict.fromkeys(_TOLERATED, 0)


@dataclass
class SessionState:
    """Per-connection buffers, the open segment, and tolerated-anomaly counts."""

    session_id: str
    device: str
    browser: str
    hand: HandMode
    buffers: dict = field(default_factory=lambda: {c: [] for c in SENSOR_CHANNELS})
    interval_events: list = field(default_factory=list)
    open_segment: Optional[tuple] = None  # (label, start ts)
    counters: dict = field(default_factory=_zero_counters)

    @classmethod
    def from_hello(cls, hello: Hello) -> "SessionState":
        return cls(
            session_id=hello.session, device=hello.device,
            browser=hello.browser, hand=hello.hand,
        )

    def add_event(self, event: SensorEvent) -> None:
        if event.channel is Channel.INTERVAL:
            self.interval_events.append(event)
            return
        buffer = self.buffers[event.channel]
        if buffer and event.timestamp_ms < buffer[-1].timestamp_ms:
            self.counters["out_of_order"] += 1
        buffer.append(event)

    def apply_marker(self, marker: SegmentMarker) -> Optional[LabeledTrace]:
        """Start opens a segment (discarding a stale one); End cuts a trace."""
        if marker.kind is MarkerKind.START:
            if self.open_segment is not None:
                self.counters["start_while_open"] += 1
            self.open_segment = (marker.label, marker.ts_ms)
            return None
        return assemble_trace(self, marker)

    def process_line(self, line: str) -> Optional[LabeledTrace]:
        """Tolerant wrapper: malformed or out-of-protocol lines are counted."""
        try:
            event = parse_event(line, self.session_id)
        except MalformedRecord:
            self.counters["malformed_records"] += 1
            return None
        except UnknownChannel:
            self.counters["unknown_channels"] += 1
            return None
        except NonFiniteValue:
            self.counters["nonfinite_values"] += 1
            return None
        if isinstance(event, Hello):
            self.counters["unexpected_hello"] += 1
            return None
        if isinstance(event, SensorEvent):
            self.add_event(event)
            return None
        try:
            return self.apply_marker(event)
        except NoOpenSegment:
            self.counters["no_open_segment"] += 1
        except EmptySegment:
            self.counters["empty_segments"] += 1
        except TraceError:
            self.counters["invalid_traces"] += 1
        return None


def assemble_trace(session: SessionState, end_marker: SegmentMarker) -> LabeledTrace:
    """Cut the open segment at the End marker into a LabeledTrace.

    The trace holds readings with start <= t <= end for all 12 sensor
    channels; its interval is the latest interval reading at or before
    the end marker and collected_at is the End timestamp. The open
    segment is cleared whether or not assembly succeeds.
    """
    if session.open_segment is None:
        raise NoOpenSegment(f"End at t={end_marker.ts_ms} without a Start")
    label, start_ts = session.open_segment
    session.open_segment = None
    if label != end_marker.label:
        session.counters["label_mismatch"] += 1
    end_ts = end_marker.ts_ms

    sequences = {}
    for channel in SENSOR_CHANNELS:
        values = [
            e.value for e in session.buffers[channel]
            if start_ts <= e.timestamp_ms <= end_ts
        ]
        if not values:
            raise EmptySegment(f"no {channel.value} readings in [{start_ts}, {end_ts}]")
        sequences[channel] = values

    interval_ms = 0.0
    for event in session.interval_events:
        if event.timestamp_ms <= end_ts:
            interval_ms = event.value
    meta = TraceMeta(
        user_id=session.session_id,
        device=session.device,
        browser=session.browser,
        hand_mode=session.hand,
        collected_at=end_ts,
    )
    return LabeledTrace(
        label=end_marker.label, meta=meta,
        interval_ms=interval_ms, sequences=sequences,
    )


def assemble_session(lines) -> tuple[list[LabeledTrace], dict]:
    """Offline replay of one recorded session (hello first line).

    Returns the traces an ideal server would persist plus the anomaly
    counters; a trailing open segment counts as disconnect_mid_segment.
    """
    it = iter(lines)
    try:
        first = next(it)
    except StopIteration:
        raise MalformedRecord("empty session: no hello line") from None
    hello = parse_event(first)
    if not isinstance(hello, Hello):
        raise MalformedRecord("first line of a session must be a hello record")
    state = SessionState.from_hello(hello)
    traces = []
    for line in it:
        if not line.strip():
            continue
        trace = state.process_line(line)
        if trace is not None:
            traces.append(trace)
    counters = dict(state.counters)
    counters["disconnect_mid_segment"] = int(state.open_segment is not None)
    return traces, counters


# ----------------------------------------------------------------- storage


class TraceStore:
    """Append-only newline-delimited trace file.

    Record ids are line numbers; they assume this store object is the
    only writer of the file while it is open.
    """

    def __init__(self, path) -> None:
        self.path = Path(path)
        self._count: Optional[int] = None

    def append(self, trace: LabeledTrace) -> int:
        """Append one trace; returns its zero-based record id."""
        line = trace_to_line(trace)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self._count is None:
                self._count = 0
                if self.path.exists():
                    with self.path.open("r", encoding="utf-8") as fh:
                        self._count = sum(1 for _ in fh)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            self._count += 1
            return self._count - 1
        except OSError as exc:
            raise StorageFailure(f"cannot append to {self.path}: {exc}") from None

    def load_all(self) -> list[LabeledTrace]:
        if not self.path.exists():
            return []
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot read {self.path}: {exc}") from None
        return [trace_from_line(line) for line in text.splitlines() if line.strip()]


# ------------------------------------------------------------------ server


class _IngestHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: IngestServer = self.server.owner  # type: ignore[attr-defined]
        try:
            raw = self.rfile.readline()
        except OSError:
            return
        if not raw:
            return
        try:
            hello = parse_event(raw.decode("utf-8"))
        except (IngestError, UnicodeDecodeError):
            server.bump("bad_hello")
            return
        if not isinstance(hello, Hello):
            server.bump("bad_hello")
            return
        state = SessionState.from_hello(hello)
        server.bump("sessions")
        try:
            for raw in self.rfile:
                try:
                    line = raw.decode("utf-8")
                except UnicodeDecodeError:
                    state.counters["malformed_records"] += 1
                    continue
                if not line.strip():
                    continue
                trace = state.process_line(line)
                if trace is not None:
                    server.enqueue(trace)
        except OSError:
            pass  # client vanished; fall through to the same bookkeeping
        finally:
            if state.open_segment is not None:
                state.counters["disconnect_mid_segment"] = 1
            server.merge(state.counters)


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = False  # server_close() then joins handler threads


class IngestServer:
    """Running ingest server; use as a context manager or call stop()."""

    def __init__(self, store: TraceStore, host: str = "127.0.0.1", port: int = 0) -> None:
        self.store = store
        try:
            self._server = _TcpServer((host, port), _IngestHandler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from None
        self._server.owner = self
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._stats: dict[str, int] = {"sessions": 0, "traces": 0, "bad_hello": 0,
                                       "storage_failures": 0}
        self._writer = threading.Thread(target=self._drain, daemon=True)
        self._accept = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._writer.start()
        self._accept.start()

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def bump(self, key: str, amount: int = 1) -> None:
        with self._lock:
            self._stats[key] = self._stats.get(key, 0) + amount

    def merge(self, counters: dict) -> None:
        with self._lock:
            for key, value in counters.items():
                if value:
                    self._stats[key] = self._stats.get(key, 0) + value

    def enqueue(self, trace: LabeledTrace) -> None:
        self._queue.put(trace)

    def _drain(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            try:
                self.store.append(item)
                self.bump("traces")
            except StorageFailure:
                self.bump("storage_failures")

    def stats(self) -> dict[str, int]:
        with self._lock:
            return dict(self._stats)

    def stop(self) -> None:
        """Stop accepting, join handlers, then drain the persist queue."""
        self._server.shutdown()
        self._server.server_close()
        self._accept.join()
        self._queue.put(None)
        self._writer.join()

    def __enter__(self) -> "IngestServer":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def serve(store: TraceStore, host: str = "127.0.0.1", port: int = 0) -> IngestServer:
    """Start an ingest server; port 0 picks a free port (see .port)."""
    return IngestServer(store, host=host, port=port)
