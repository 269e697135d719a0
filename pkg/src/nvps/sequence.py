"""Pulse sequences: ordered drive segments that make up one experimental shot."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .levelmodel import LEVEL_NAMES, N_LEVELS

SEGMENT_KINDS = ("pump", "wait", "mw", "fs_pulse", "resonant_cw", "record")

# Allowed parameter names per kind, with defaults.
_PARAMS = {
    "pump": {"k_pump": 1e7},
    "wait": {},
    "mw": {"rabi": None, "angle": None},
    "fs_pulse": {"p_exc": 1.0},
    "resonant_cw": {"rabi": 0.0, "detuning": 0.0, "t2_star": math.inf},
    "record": {},
}


class SequenceError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    kind: str
    duration: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise SequenceError(f"unknown segment kind {self.kind!r}")
        allowed = _PARAMS[self.kind]
        extra = set(self.params) - set(allowed)
        if extra:
            raise SequenceError(f"{self.kind}: unknown parameters {sorted(extra)}")
        full = dict(allowed)
        full.update(self.params)
        object.__setattr__(self, "params", full)
        object.__setattr__(self, "duration", float(self.duration))

    def __getitem__(self, key):
        return self.params[key]

    @property
    def mw_angle(self) -> float:
        """Rotation angle of an mw segment (explicit angle wins over rabi*duration)."""
        if self.params["angle"] is not None:
            return float(self.params["angle"])
        if self.params["rabi"] is None:
            return 0.0
        return float(self.params["rabi"]) * self.duration

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "duration": self.duration}
        d.update({k: v for k, v in self.params.items() if v is not None})
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        d = dict(d)
        kind = d.pop("kind")
        duration = d.pop("duration", 0.0)
        return cls(kind, duration, d)


def pump(duration, k_pump=1e7):
    return Segment("pump", duration, {"k_pump": k_pump})


def wait(duration):
    return Segment("wait", duration)


def mw(duration=0.0, rabi=None, angle=None):
    return Segment("mw", duration, {"rabi": rabi, "angle": angle})


def pi_pulse():
    """Ideal, instantaneous g0 <-> g+ inversion."""
    return mw(0.0, angle=math.pi)


def fs_pulse(p_exc=1.0):
    return Segment("fs_pulse", 0.0, {"p_exc": p_exc})


def resonant_cw(duration, rabi, detuning=0.0, t2_star=math.inf):
    return Segment("resonant_cw", duration, {"rabi": rabi, "detuning": detuning, "t2_star": t2_star})


def record(window):
    return Segment("record", window)


def initial_distribution(initial) -> np.ndarray:
    """Population vector for ``"thermal"``, a level name, or an explicit 7-vector."""
    if isinstance(initial, str):
        if initial == "thermal":
            p = np.zeros(N_LEVELS)
            p[:3] = 1.0 / 3.0
            return p
        if initial in LEVEL_NAMES:
            p = np.zeros(N_LEVELS)
            p[LEVEL_NAMES.index(initial)] = 1.0
            return p
        raise SequenceError(f"unknown initial state {initial!r}")
    p = np.asarray(initial, dtype=float)
    if p.shape != (N_LEVELS,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise SequenceError("initial population must be 7 non-negative numbers summing to 1")
    return p


@dataclass(frozen=True)
class PulseSequence:
    """One shot's worth of segments, repeated ``shots`` times.

    ``sync`` is the index of the segment whose start defines the time origin
    of a shot. ``None`` picks the single fs_pulse, or the first record
    window if there is no fs_pulse.
    """

    segments: tuple
    shots: int = 1
    sync: int | None = None
    initial: object = "thermal"

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not isinstance(self.initial, str):
            object.__setattr__(self, "initial", tuple(float(x) for x in self.initial))

    @property
    def shot_duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def segment_starts(self) -> list[float]:
        out, t = [], 0.0
        for s in self.segments:
            out.append(t)
            t += s.duration
        return out

    def sync_index(self) -> int:
        if self.sync is not None:
            return self.sync
        fs = [i for i, s in enumerate(self.segments) if s.kind == "fs_pulse"]
        if fs:
            return fs[0]
        rec = [i for i, s in enumerate(self.segments) if s.kind == "record"]
        return rec[0] if rec else 0

    @property
    def sync_offset(self) -> float:
        return self.segment_starts()[self.sync_index()] if self.segments else 0.0

    def record_windows(self) -> list[tuple[float, float]]:
        return [(t, t + s.duration) for t, s in zip(self.segment_starts(), self.segments) if s.kind == "record"]

    def replace(self, **kw) -> "PulseSequence":
        d = {"segments": self.segments, "shots": self.shots, "sync": self.sync, "initial": self.initial}
        d.update(kw)
        return PulseSequence(**d)

    def to_dict(self) -> dict:
        init = self.initial if isinstance(self.initial, str) else list(self.initial)
        return {
            "segments": [s.to_dict() for s in self.segments],
            "shots": self.shots,
            "sync": self.sync,
            "initial": init,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSequence":
        return cls(
            segments=tuple(Segment.from_dict(s) for s in d["segments"]),
            shots=int(d.get("shots", 1)),
            sync=d.get("sync"),
            initial=d.get("initial", "thermal"),
        )


def validate_sequence(seq: PulseSequence) -> list[tuple[str, str]]:
    out = []
    if not isinstance(seq.shots, (int, np.integer)) or seq.shots < 0:
        out.append(("shots", "must be a non-negative integer"))
    for i, s in enumerate(seq.segments):
        if not (math.isfinite(s.duration) and s.duration >= 0):
            out.append((f"segments[{i}].duration", "must be finite and >= 0"))
        if s.kind == "fs_pulse":
            if s.duration != 0:
                out.append((f"segments[{i}].duration", "fs_pulse is instantaneous"))
            if not 0.0 <= s["p_exc"] <= 1.0:
                out.append((f"segments[{i}].p_exc", "must lie in [0, 1]"))
        if s.kind == "pump" and not s["k_pump"] >= 0:
            out.append((f"segments[{i}].k_pump", "must be >= 0"))
        if s.kind == "resonant_cw" and not s["t2_star"] > 0:
            out.append((f"segments[{i}].t2_star", "must be > 0"))
    n_fs = sum(s.kind == "fs_pulse" for s in seq.segments)
    if seq.sync is None and n_fs > 1:
        out.append(("sync", "more than one fs_pulse; sync segment is ambiguous"))
    if seq.sync is not None and not 0 <= seq.sync < len(seq.segments):
        out.append(("sync", "index out of range"))
    try:
        initial_distribution(seq.initial)
    except SequenceError as exc:
        out.append(("initial", str(exc)))
    return out


def check_sequence(seq: PulseSequence) -> PulseSequence:
    bad = validate_sequence(seq)
    if bad:
        raise SequenceError("; ".join(f"{f}: {m}" for f, m in bad))
    return seq
