"""Time- and frequency-domain feature extraction.

A trace becomes a fixed-layout vector in five sections:

  time_raw         48  max/min/mean/energy of each baseline-shifted sequence
  time_derivative  48  same four stats of each first-difference sequence
  time_dac          6  max/min/mean of the two acceleration-change sequences
                       (plain acceleration and acceleration incl. gravity)
  frequency        48  max/min/mean/energy of the DFT magnitudes (all bins,
                       no padding) of each baseline-shifted sequence
  energy_interval  14  phase 1 only: shortest centered window holding 70%
                       of the energy, for the 6 acceleration/gravity axes,
                       their derivatives, and the two DAC sequences

Phase 1 totals 164 features, phase 2 the first 150. Layout names and
order are frozen; changing them is a breaking change.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .model import (
    CHANNEL_GROUPS,
    SENSOR_CHANNELS,
    Channel,
    FeatureVector,
    Label,
    LabeledTrace,
    label_from_wire,
    label_to_wire,
)


class FeatureError(ValueError):
    pass


class EmptySequence(FeatureError):
    pass


class LengthMismatch(FeatureError):
    pass


class TooShort(FeatureError):
    pass


class ZeroEnergy(FeatureError):
    pass


class SequenceTooShort(FeatureError):
    """A trace sequence has fewer than 2 samples; nothing to extract."""


@dataclass(frozen=True)
class SeqStats:
    max: float
    min: float
    mean: float
    energy: float


STAT_NAMES = ("max", "min", "mean", "energy")

# The six axes whose energy concentration feeds the phase-1 extras.
_ACCEL_GRAVITY = CHANNEL_GROUPS["acceleration"] + CHANNEL_GROUPS["gravity"]


def _as_array(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.float64)
    if arr.ndim != 1:
        raise FeatureError("sequence must be 1-D")
    return arr


def baseline_shift(seq) -> np.ndarray:
    """Subtract the initial value so every sequence starts at zero."""
    arr = _as_array(seq)
    if arr.size == 0:
        raise EmptySequence("cannot shift an empty sequence")
    return arr - arr[0]


def derivative(seq) -> np.ndarray:
    """First differences d_i = v_i - v_{i-1}; length n-1."""
    arr = _as_array(seq)
    if arr.size == 0:
        raise EmptySequence("cannot differentiate an empty sequence")
    return np.diff(arr)


def dac(x, y, z) -> np.ndarray:
    """Per-step Euclidean norm of consecutive triple differences."""
    ax, ay, az = _as_array(x), _as_array(y), _as_array(z)
    if not (ax.size == ay.size == az.size):
        raise LengthMismatch(f"axis lengths differ: {ax.size}, {ay.size}, {az.size}")
    if ax.size == 0:
        raise EmptySequence("cannot compute change of an empty triple")
    return np.sqrt(np.diff(ax) ** 2 + np.diff(ay) ** 2 + np.diff(az) ** 2)


def stats(seq) -> SeqStats:
    """Exact max, min, arithmetic mean, and energy (sum of squares)."""
    arr = _as_array(seq)
    if arr.size == 0:
        raise EmptySequence("no stats of an empty sequence")
    return SeqStats(
        max=float(np.max(arr)),
        min=float(np.min(arr)),
        mean=float(np.mean(arr)),
        energy=float(np.sum(arr * arr)),
    )


def fft_features(seq) -> SeqStats:
    """Stats of the magnitudes of the full-length DFT (no padding)."""
    arr = _as_array(seq)
    if arr.size < 2:
        raise TooShort("frequency features need at least 2 samples")
    return stats(np.abs(np.fft.fft(arr)))


def energy_interval_length(seq, fraction: float = 0.7) -> int:
    """Length of the shortest centered window holding `fraction` of the energy.

    The center is the energy-weighted mean index (0-based), rounded to the
    nearest index with ties toward the lower one. The window grows
    symmetrically; parts clipped at the boundaries still count only their
    in-range energy, so the returned odd length 2h+1 can exceed the
    sequence length when the center sits off-middle.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    arr = _as_array(seq)
    if arr.size == 0:
        raise EmptySequence("no energy interval of an empty sequence")
    squares = arr * arr
    energy = float(np.sum(squares))
    if energy <= 0.0:
        raise ZeroEnergy("sequence has zero energy")
    coe = float(np.sum(np.arange(arr.size) * squares)) / energy
    center = math.ceil(coe - 0.5)
    n = arr.size
    target = fraction * energy
    for h in range(max(center, n - 1 - center) + 1):
        lo = max(0, center - h)
        hi = min(n - 1, center + h)
        if float(np.sum(squares[lo:hi + 1])) >= target:
            return 2 * h + 1
    return 2 * max(center, n - 1 - center) + 1  # full coverage, energy == E


def _stats_or_zero(arr: np.ndarray) -> SeqStats:
    # derivative of a 1-sample sequence is empty; keep the layout total fixed
    if arr.size == 0:
        return SeqStats(0.0, 0.0, 0.0, 0.0)
    return stats(arr)


def _interval_or_zero(arr: np.ndarray) -> int:
    # extract maps zero-energy (all-constant) sequences to window length 0
    try:
        return energy_interval_length(arr)
    except (ZeroEnergy, EmptySequence):
        return 0


def feature_layout(phase: int) -> tuple[str, ...]:
    """The frozen feature-name list for a phase."""
    _check_phase(phase)
    names: list[str] = []
    for prefix in ("raw", "deriv"):
        for ch in SENSOR_CHANNELS:
            names.extend(f"{prefix}_{ch.value}_{stat}" for stat in STAT_NAMES)
    for kind in ("accel", "gravity"):
        names.extend(f"dac_{kind}_{stat}" for stat in STAT_NAMES[:3])
    for ch in SENSOR_CHANNELS:
        names.extend(f"fft_{ch.value}_{stat}" for stat in STAT_NAMES)
    if phase == 1:
        names.extend(f"ei_raw_{ch.value}" for ch in _ACCEL_GRAVITY)
        names.extend(f"ei_deriv_{ch.value}" for ch in _ACCEL_GRAVITY)
        names.extend(["ei_dac_accel", "ei_dac_gravity"])
    return tuple(names)


def layout_sections(phase: int) -> tuple[tuple[str, int], ...]:
    """(section name, size) pairs in layout order."""
    _check_phase(phase)
    sections = (
        ("time_raw", 48),
        ("time_derivative", 48),
        ("time_dac", 6),
        ("frequency", 48),
    )
    if phase == 1:
        sections += (("energy_interval", 14),)
    return sections


def layout_digest(layout: Iterable[str]) -> str:
    """Stable hash of a layout name list, for model/matrix compatibility checks."""
    return hashlib.sha256("\n".join(layout).encode("utf-8")).hexdigest()


def _check_phase(phase: int) -> None:
    if phase not in (1, 2):
        raise ValueError(f"phase must be 1 or 2, got {phase!r}")


def extract(trace: LabeledTrace, phase: int) -> FeatureVector:
    """Transform one trace into its fixed-layout feature vector."""
    _check_phase(phase)
    for ch in SENSOR_CHANNELS:
        if trace.sequences[ch].size < 2:
            raise SequenceTooShort(f"{ch.value}: need at least 2 samples")

    shifted = {ch: baseline_shift(trace.sequences[ch]) for ch in SENSOR_CHANNELS}
    derivs = {ch: derivative(shifted[ch]) for ch in SENSOR_CHANNELS}
    dacs = {
        "accel": dac(*(shifted[c] for c in CHANNEL_GROUPS["acceleration"])),
        "gravity": dac(*(shifted[c] for c in CHANNEL_GROUPS["gravity"])),
    }

    out: list[float] = []
    for ch in SENSOR_CHANNELS:
        s = stats(shifted[ch])
        out.extend((s.max, s.min, s.mean, s.energy))
    for ch in SENSOR_CHANNELS:
        s = _stats_or_zero(derivs[ch])
        out.extend((s.max, s.min, s.mean, s.energy))
    for kind in ("accel", "gravity"):
        s = _stats_or_zero(dacs[kind])
        out.extend((s.max, s.min, s.mean))
    for ch in SENSOR_CHANNELS:
        s = fft_features(shifted[ch])
        out.extend((s.max, s.min, s.mean, s.energy))
    if phase == 1:
        out.extend(float(_interval_or_zero(shifted[ch])) for ch in _ACCEL_GRAVITY)
        out.extend(float(_interval_or_zero(derivs[ch])) for ch in _ACCEL_GRAVITY)
        out.extend(float(_interval_or_zero(dacs[kind])) for kind in ("accel", "gravity"))

    return FeatureVector(phase=phase, values=np.asarray(out), layout=feature_layout(phase))


# ------------------------------------------------------------ matrix files
# The extracted corpus travels between CLI stages as a newline-delimited
# file: one header record with the layout, then one record per vector.

def write_matrix(fp: IO[str], phase: int, rows: Iterable[tuple[Label, np.ndarray]]) -> int:
    layout = feature_layout(phase)
    header = {
        "kind": "feature-matrix",
        "phase": phase,
        "layout": list(layout),
        "digest": layout_digest(layout),
    }
    fp.write(json.dumps(header, separators=(",", ":")) + "\n")
    count = 0
    for label, values in rows:
        record = {"label": label_to_wire(label), "features": np.asarray(values).tolist()}
        fp.write(json.dumps(record, separators=(",", ":")) + "\n")
        count += 1
    return count


def read_matrix(fp: IO[str]) -> tuple[int, tuple[str, ...], list[Label], np.ndarray]:
    """Returns (phase, layout, labels, matrix of shape (n, len(layout)))."""
    header_line = fp.readline()
    if not header_line:
        raise FeatureError("empty matrix file")
    header = json.loads(header_line)
    if header.get("kind") != "feature-matrix":
        raise FeatureError("not a feature-matrix file")
    phase = int(header["phase"])
    layout = tuple(str(n) for n in header["layout"])
    if header.get("digest") != layout_digest(layout):
        raise FeatureError("matrix header digest mismatch")
    labels: list[Label] = []
    vectors: list[list[float]] = []
    for line in fp:
        if not line.strip():
            continue
        record = json.loads(line)
        features = record["features"]
        if len(features) != len(layout):
            raise FeatureError(
                f"row has {len(features)} features, layout has {len(layout)}"
            )
        labels.append(label_from_wire(record["label"]))
        vectors.append(features)
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.size == 0:
        matrix = matrix.reshape(0, len(layout))
    return phase, layout, labels, matrix
