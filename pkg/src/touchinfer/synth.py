"""Synthetic trace generation for desk-scale pipeline verification.

Every class gets a deterministic signature waveform: a narrow pulse for
click, an energy-matched plateau for hold, direction-signed ramps for
the four scrolls, a bipolar pulse pair for the zooms (zoom_out is a
damped negation of zoom_in), and keypad-position-dependent tilt pulses
for digits. Signatures are scaled by `separation` and buried in
Gaussian noise under a half-sine envelope, so low separation induces
the classic confusion pairs (click/hold, zoom_in/zoom_out) while high
separation makes the classes cleanly recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import (
    CHANNEL_GROUPS,
    DIGITS,
    SENSOR_CHANNELS,
    Channel,
    HandMode,
    Label,
    LabeledTrace,
    TouchAction,
    TraceMeta,
    label_to_wire,
)


class SynthError(ValueError):
    pass


class LabelNotInSpec(SynthError):
    pass


def _standard_keypad() -> dict[int, tuple[int, int]]:
    # phone keypad: 1..9 on a 3x3 block, 0 centered on the fourth row
    grid = {d: ((d - 1) // 3, (d - 1) % 3) for d in range(1, 10)}
    grid[0] = (3, 1)
    return grid


@dataclass(frozen=True)
class DeviceProfile:
    """Sampling rates and noise levels of one device/browser combination."""

    name: str
    motion_hz: float
    orientation_hz: float
    noise_sigma: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_NOISE)
    )
    keypad_grid: dict[int, tuple[int, int]] = field(
        default_factory=_standard_keypad
    )

    def __post_init__(self) -> None:
        if self.motion_hz <= 0 or self.orientation_hz <= 0:
            raise SynthError("sampling rates must be positive")
        if set(self.noise_sigma) != set(CHANNEL_GROUPS):
            raise SynthError(f"noise_sigma must cover groups {sorted(CHANNEL_GROUPS)}")


DEFAULT_NOISE: dict[str, float] = {
    "orientation": 0.30,
    "acceleration": 0.25,
    "gravity": 0.25,
    "rotation": 0.30,
}

IPHONE5 = DeviceProfile(name="iphone5", motion_hz=20.0, orientation_hz=20.0)
NEXUS5 = DeviceProfile(name="nexus5", motion_hz=60.0, orientation_hz=44.0)

PROFILES: dict[str, DeviceProfile] = {"iphone5": IPHONE5, "nexus5": NEXUS5}


@dataclass(frozen=True)
class GenSpec:
    classes: tuple[Label, ...]
    per_class: int
    separation: float
    seed: int
    profile: DeviceProfile = NEXUS5
    duration_ms: float = 750.0

    def __post_init__(self) -> None:
        if not self.classes:
            raise SynthError("class set is empty")
        if self.per_class < 1:
            raise SynthError(f"per_class must be >= 1, got {self.per_class}")
        if not self.separation > 0:
            raise SynthError(f"separation must be > 0, got {self.separation}")
        if self.duration_ms <= 0:
            raise SynthError("duration_ms must be positive")
        for label in self.classes:
            label_to_wire(label)  # validates each entry


# --------------------------------------------------------------- waveforms

def _pulse(u: np.ndarray) -> np.ndarray:
    return np.exp(-(((u - 0.5) / 0.10) ** 2))


def _plateau(u: np.ndarray) -> np.ndarray:
    rise = np.clip((u - 0.10) / 0.08, 0.0, 1.0)
    fall = np.clip((0.90 - u) / 0.08, 0.0, 1.0)
    return rise * fall


def _ramp(u: np.ndarray) -> np.ndarray:
    return u


def _bipolar(u: np.ndarray) -> np.ndarray:
    # asymmetric pair: strong positive lobe then weaker negative lobe
    first = np.exp(-(((u - 0.35) / 0.08) ** 2))
    second = np.exp(-(((u - 0.65) / 0.08) ** 2))
    return first - 0.6 * second


_WAVEFORMS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "pulse": _pulse,
    "plateau": _plateau,
    "ramp": _ramp,
    "bipolar": _bipolar,
}

Signature = dict[Channel, tuple[str, float]]

# Each action family owns a disjoint channel set, so at low separation
# the per-channel energy profile clusters families while the members of
# a pair (click/hold, zoom_in/zoom_out) stay mutually confusable.
_PRESS = (Channel.MZ, Channel.MGZ)
_VERTICAL = (Channel.OY, Channel.MY, Channel.MGY)
_HORIZONTAL = (Channel.OX, Channel.MX, Channel.MGX)
_TWIST = (Channel.R_BETA, Channel.R_ALPHA, Channel.R_GAMA)


def _scaled(channels, kind: str, amplitudes, sign: float = 1.0) -> Signature:
    return {
        ch: (kind, sign * amp) for ch, amp in zip(channels, amplitudes)
    }


# Reverse directions are damped negations (-0.8x), not exact mirrors:
# an exact mirror has identical energy, DFT magnitudes, and DAC, which
# no Euclidean 1-NN on raw features could ever separate.
ACTION_SIGNATURES: dict[TouchAction, Signature] = {
    # hold amplitudes chosen so plateau energy matches click's pulse
    # energy (0.75 a_h^2 = 0.125 a_c^2): the pair separates on shape,
    # not on the energy profile.
    TouchAction.CLICK: _scaled(_PRESS, "pulse", (1.0, 0.8)),
    TouchAction.HOLD: _scaled(_PRESS, "plateau", (0.41, 0.33)),
    TouchAction.SCROLL_UP: _scaled(_VERTICAL, "ramp", (1.0, 0.8, 0.6)),
    TouchAction.SCROLL_DOWN: _scaled(_VERTICAL, "ramp", (1.0, 0.8, 0.6), -0.8),
    TouchAction.SCROLL_RIGHT: _scaled(_HORIZONTAL, "ramp", (1.0, 0.8, 0.6)),
    TouchAction.SCROLL_LEFT: _scaled(_HORIZONTAL, "ramp", (1.0, 0.8, 0.6), -0.8),
    TouchAction.ZOOM_IN: _scaled(_TWIST, "bipolar", (1.0, 0.8, 0.6)),
    TouchAction.ZOOM_OUT: _scaled(_TWIST, "bipolar", (1.0, 0.8, 0.6), -0.85),
}


def digit_signature(digit: int, grid: dict[int, tuple[int, int]]) -> Signature:
    """Tilt pulses toward the touched key plus a shared press pulse."""
    row, col = grid[digit]
    dx = float(col - 1)
    dy = (row - 1.5) / 1.5
    signature: Signature = {
        Channel.MZ: ("pulse", 0.6),
        Channel.MGZ: ("pulse", 0.5),
    }
    for ch, amp in zip(_HORIZONTAL, (0.9, 0.7, 0.5, 0.35)):
        signature[ch] = ("pulse", amp * dx)
    for ch, amp in zip(_VERTICAL, (0.9, 0.7, 0.5, 0.35)):
        signature[ch] = ("pulse", amp * dy)
    return signature


def _class_code(label: Label) -> int:
    if isinstance(label, TouchAction):
        return list(TouchAction).index(label)
    return 100 + label


def _signature_for(label: Label, profile: DeviceProfile) -> Signature:
    if isinstance(label, TouchAction):
        return ACTION_SIGNATURES[label]
    return digit_signature(label, profile.keypad_grid)


def _group_of(channel: Channel) -> str:
    for group, chans in CHANNEL_GROUPS.items():
        if channel in chans:
            return group
    raise AssertionError(channel)


def gen_trace(label: Label, spec: GenSpec, draw_index: int) -> LabeledTrace:
    """Deterministic function of (spec.seed, label, draw_index)."""
    if label not in spec.classes:
        raise LabelNotInSpec(f"{label!r} not in the spec class set")
    profile = spec.profile
    n_motion = max(1, round(profile.motion_hz * spec.duration_ms / 1000.0))
    n_orientation = max(1, round(profile.orientation_hz * spec.duration_ms / 1000.0))
    rng = np.random.default_rng((spec.seed, _class_code(label), draw_index))
    signature = _signature_for(label, profile)

    sequences: dict[Channel, np.ndarray] = {}
    for ch in SENSOR_CHANNELS:
        group = _group_of(ch)
        n = n_orientation if group == "orientation" else n_motion
        u = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
        signal = np.zeros(n)
        if ch in signature:
            kind, amplitude = signature[ch]
            signal = _WAVEFORMS[kind](u) * amplitude * spec.separation
        # Half-sine envelope: segments open and close calm.  The feature
        # pipeline subtracts the first sample from every sequence, so edge
        # noise would otherwise smear one sample's jitter across the whole
        # trace and swamp the energy features at low separation.
        noise = rng.normal(0.0, profile.noise_sigma[group], size=n)
        sequences[ch] = signal + noise * np.sin(np.pi * u)

    meta = TraceMeta(
        user_id=f"synth-{spec.seed}",
        device=profile.name,
        browser="synthetic",
        hand_mode=HandMode.UNKNOWN,
        collected_at=0.0,
    )
    return LabeledTrace(
        label=label,
        meta=meta,
        interval_ms=1000.0 / profile.motion_hz,
        sequences=sequences,
    )


def gen_dataset(spec: GenSpec) -> list[LabeledTrace]:
    """per_class traces for every class, shuffled deterministically."""
    traces = [
        gen_trace(label, spec, draw)
        for label in spec.classes
        for draw in range(spec.per_class)
    ]
    order = np.random.default_rng((spec.seed, 0xD5)).permutation(len(traces))
    return [traces[i] for i in order]


def action_spec(per_class: int, separation: float, seed: int,
                profile: DeviceProfile = NEXUS5,
                duration_ms: float = 750.0) -> GenSpec:
    return GenSpec(tuple(TouchAction), per_class, separation, seed,
                   profile, duration_ms)


def digit_spec(per_class: int, separation: float, seed: int,
               profile: DeviceProfile = NEXUS5,
               duration_ms: float = 750.0) -> GenSpec:
    return GenSpec(DIGITS, per_class, separation, seed, profile, duration_ms)
