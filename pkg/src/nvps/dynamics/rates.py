"""Rate-matrix assembly and compilation of pulse sequences into constant-rate phases.

Convention: ``R[to, from]`` holds the rate of ``from -> to``; the diagonal
makes columns sum to zero, so populations obey ``dP/dt = R @ P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..levelmodel import N_LEVELS, Level, LevelModel, check
from ..sequence import PulseSequence, check_sequence, initial_distribution, pump, wait

# Event kinds shared by the scalar and batched samplers.
PHOTON, ISC, SINGLET_DECAY, PUMP, STATE_CHANGE = range(5)
EVENT_KINDS = ("photon-emission", "isc-shelving", "singlet-decay", "pump-excitation", "state-change")


def base_channels(model: LevelModel) -> list[tuple[int, int, float, int]]:
    """Spontaneous edges as ``(from, to, rate, kind)``."""
    ch = []
    for g, e in zip((Level.G0, Level.GP, Level.GM), (Level.E0, Level.EP, Level.EM)):
        ch.append((e, g, model.k_radiative, PHOTON))
    ch.append((Level.E0, Level.S, model.k_isc0, ISC))
    ch.append((Level.EP, Level.S, model.k_isc1, ISC))
    ch.append((Level.EM, Level.S, model.k_isc1, ISC))
    for g, beta in zip((Level.G0, Level.GP, Level.GM), model.singlet_branching):
        ch.append((Level.S, g, model.k_singlet * beta, SINGLET_DECAY))
    return ch


def cw_transition_rate(rabi: float, detuning: float, t2: float) -> float:
    """Incoherent g0 <-> e0 rate reproducing the Bloch steady state of a resonant drive."""
    gamma2 = 1.0 / t2
    return 0.5 * rabi**2 * gamma2 / (detuning**2 + gamma2**2)


def segment_channels(model: LevelModel, segment) -> list[tuple[int, int, float, int]]:
    ch = base_channels(model)
    if segment.kind == "pump":
        k = segment["k_pump"]
        for g, e in zip((Level.G0, Level.GP, Level.GM), (Level.E0, Level.EP, Level.EM)):
            ch.append((g, e, k, PUMP))
    elif segment.kind == "resonant_cw":
        t2 = 1.0 / (0.5 / model.t1_ms0 + 1.0 / segment["t2_star"])
        w = cw_transition_rate(segment["rabi"], segment["detuning"], t2)
        ch.append((Level.G0, Level.E0, w, PUMP))
        ch.append((Level.E0, Level.G0, w, STATE_CHANGE))
    return [c for c in ch if c[2] > 0]


def generator(channels) -> np.ndarray:
    R = np.zeros((N_LEVELS, N_LEVELS))
    for f, t, k, _ in channels:
        R[t, f] += k
        R[f, f] -= k
    return R


def rate_matrix(model: LevelModel, k_pump: float = 0.0) -> np.ndarray:
    """Generator of the free (or incoherently pumped) level system."""
    seg = pump(0.0, k_pump) if k_pump > 0 else wait(0.0)
    return generator(segment_channels(model, seg))


def mw_map(angle: float) -> np.ndarray:
    """Population map of a g0 <-> g+ rotation by ``angle`` (ground decoherence ignored)."""
    M = np.eye(N_LEVELS)
    p = math.sin(angle / 2.0) ** 2
    M[Level.G0, Level.G0] = M[Level.GP, Level.GP] = 1.0 - p
    M[Level.GP, Level.G0] = M[Level.G0, Level.GP] = p
    return M


def fs_map(p_exc: float) -> np.ndarray:
    M = np.eye(N_LEVELS)
    for g, e in zip((Level.G0, Level.GP, Level.GM), (Level.E0, Level.EP, Level.EM)):
        M[g, g] = 1.0 - p_exc
        M[e, g] = p_exc
    return M


@dataclass(frozen=True)
class Phase:
    start: float
    duration: float
    channels: tuple
    generator: np.ndarray
    pre_map: np.ndarray | None
    map_kind: int | None
    record: bool

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class CompiledSequence:
    phases: tuple
    duration: float
    sync_offset: float
    record_windows: tuple
    initial: np.ndarray


def compile_sequence(model: LevelModel, seq: PulseSequence) -> CompiledSequence:
    check(model)
    check_sequence(seq)
    phases = []
    t = 0.0
    for seg in seq.segments:
        pre, kind = None, None
        if seg.kind == "fs_pulse":
            pre, kind = fs_map(seg["p_exc"]), PUMP
        elif seg.kind == "mw":
            pre, kind = mw_map(seg.mw_angle), STATE_CHANGE
        ch = tuple(segment_channels(model, seg))
        phases.append(Phase(t, seg.duration, ch, generator(ch), pre, kind, seg.kind == "record"))
        t += seg.duration
    return CompiledSequence(
        phases=tuple(phases),
        duration=t,
        sync_offset=seq.sync_offset,
        record_windows=tuple(seq.record_windows()),
        initial=initial_distribution(seq.initial),
    )
