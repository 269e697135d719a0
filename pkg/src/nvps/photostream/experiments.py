"""Shot-by-shot pulsed experiments on the level model, producing tag streams."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..dynamics.kmc import simulate_shots
from ..dynamics.master import integrate_master
from ..dynamics.rates import compile_sequence
from ..levelmodel import EXCITED, LevelModel
from ..sequence import PulseSequence, SequenceError, mw
from .detector import DetectorConfig, dark_counts, dead_time_mask, thin_and_jitter
from .tags import TagStream

CHUNK = 1 << 16


def derive_rng(seed: int, stream: int = 0, chunk: int = 0) -> np.random.Generator:
    """Counter-based generator for one (stream, chunk) cell of a master seed."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must be an integer in [0, 2**64)")
    return np.random.Generator(np.random.Philox(key=[int(seed), (int(stream) << 32) + int(chunk)]))


def _chunk_bounds(n: int, size: int = CHUNK):
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def run_sequence(model: LevelModel, seq: PulseSequence, det: DetectorConfig, seed: int,
                 threads: int = 1, stream_id: int = 0) -> TagStream:
    """Simulate ``seq.shots`` shots and return the detected tag stream.

    Shots are processed in fixed chunks of ``CHUNK`` with one counter-based
    generator each, so the output does not depend on ``threads``.
    """
    det.check()
    comp = compile_sequence(model, seq)
    if not comp.record_windows:
        raise SequenceError("sequence has no record window")
    period = comp.duration
    if not period > 0:
        raise SequenceError("shot duration must be positive")
    windows = np.array(comp.record_windows)

    def work(bounds):
        a, b = bounds
        rng = derive_rng(seed, stream_id, a // CHUNK)
        batch = simulate_shots(comp, b - a, rng)
        order = np.lexsort((batch.photon_time, batch.photon_shot))
        shot = batch.photon_shot[order] + a
        t_abs = shot * period + batch.photon_time[order]
        keep, t_abs = thin_and_jitter(t_abs, det, rng)
        shot = shot[keep]
        shot_ids = np.arange(a, b)
        w_abs = (shot_ids[:, None, None] * period + windows[None, :, :]).reshape(-1, 2)
        widx, t_dark = dark_counts(w_abs, det.dark_rate, rng)
        shot_dark = shot_ids[widx // len(windows)]
        return np.concatenate((shot, shot_dark)), np.concatenate((t_abs, t_dark))

    chunks = _chunk_bounds(seq.shots)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    shots = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    tags = np.concatenate([p[1] for p in parts]) if parts else np.empty(0)
    return _assemble(tags, shots, seq.shots, period, comp.sync_offset, det, seed,
                     {"sequence": seq.to_dict()})


def _assemble(tags, shots, n_shots, period, sync_offset, det, seed, meta) -> TagStream:
    inside = (tags >= shots * period) & (tags < (shots + 1) * period)
    tags, shots = tags[inside], shots[inside]
    order = np.argsort(tags, kind="stable")
    tags, shots = tags[order], shots[order]
    keep = dead_time_mask(tags, det.dead_time)
    return TagStream(tags[keep], shots[keep].astype(np.int64), n_shots, period, sync_offset, det, seed, meta)


# -- Rabi sweeps -----------------------------------------------------------------


@dataclass
class RabiSweep:
    durations: np.ndarray
    counts: np.ndarray
    gate: tuple | None
    shots: int
    mw_rabi: float
    meta: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(self.counts)


def mw_index(seq: PulseSequence) -> int:
    idx = [i for i, s in enumerate(seq.segments) if s.kind == "mw"]
    if not idx:
        raise SequenceError("sequence has no mw segment to sweep")
    return idx[0]


def with_mw_duration(seq: PulseSequence, duration: float, rabi: float) -> PulseSequence:
    i = mw_index(seq)
    segs = list(seq.segments)
    segs[i] = mw(duration, rabi=rabi)
    return seq.replace(segments=tuple(segs))


def record_span(seq: PulseSequence) -> tuple[float, float]:
    """Record window containing the sync instant, relative to sync."""
    sync = seq.sync_offset
    for a, b in seq.record_windows():
        if b > sync:
            return a - sync, b - sync
    raise SequenceError("no record window at or after the sync instant")


def check_gate(seq: PulseSequence, gate) -> None:
    if gate is None:
        return
    delay, width = gate
    if not (delay >= 0 and width > 0):
        raise SequenceError("gate needs delay >= 0 and width > 0")
    lo, hi = record_span(seq)
    if delay < lo or delay + width > hi + 1e-15:
        raise SequenceError(f"gate [{delay:g}, {delay + width:g}) s lies outside the record window [{lo:g}, {hi:g}) s")


def gate_count(rel: np.ndarray, gate) -> int:
    if gate is None:
        return int(rel.size)
    delay, width = gate
    return int(np.count_nonzero((rel >= delay) & (rel < delay + width)))


def run_rabi_sweeps(model, base_seq, mw_durations, gates: dict, det, seed, mw_rabi, threads=1) -> dict:
    """Run one stream per MW duration and count detections in every named gate."""
    durations = np.asarray(mw_durations, dtype=float)
    if durations.size == 0:
        raise SequenceError("empty MW duration grid")
    if np.any(durations < 0):
        raise SequenceError("MW durations must be >= 0")
    mw_index(base_seq)
    for g in gates.values():
        check_gate(base_seq, g)
    counts = {name: np.zeros(durations.size, dtype=np.int64) for name in gates}
    for k, d in enumerate(durations):
        seq = with_mw_duration(base_seq, d, mw_rabi)
        stream = run_sequence(model, seq, det, seed, threads=threads, stream_id=k + 1)
        rel = stream.relative()
        for name, g in gates.items():
            counts[name][k] = gate_count(rel, g)
    return {
        name: RabiSweep(durations, counts[name], gates[name], base_seq.shots, mw_rabi)
        for name in gates
    }


def run_rabi_sweep(model, base_seq, mw_durations, gate, det, seed, mw_rabi=2 * math.pi * 10e6, threads=1) -> RabiSweep:
    """Detections per MW pulse length within ``gate = (delay, width)`` after sync, or all if None."""
    return run_rabi_sweeps(model, base_seq, mw_durations, {"gate": gate}, det, seed, mw_rabi, threads)["gate"]


# -- noise-free expectations -------------------------------------------------------


def excited_at_sync(model: LevelModel, seq: PulseSequence) -> np.ndarray:
    """Excited-state populations (e0, e+, e-) right after the sync pulse."""
    t = seq.sync_offset
    traj = integrate_master(model, seq, np.asarray(compile_sequence(model, seq).initial), [t])
    return traj.populations[0, [int(e) for e in EXCITED]]


def expected_gated_photons(model: LevelModel, seq: PulseSequence, gate) -> float:
    """Mean radiative photons per shot emitted in the gate (None = all), free decay after sync."""
    p = excited_at_sync(model, seq)
    life = np.array([model.t1_ms0, model.t1_ms1, model.t1_ms1])
    if gate is None:
        frac = np.ones(3)
    else:
        d, w = gate
        frac = np.exp(-d / life) - np.exp(-(d + w) / life)
    return float(model.k_radiative * np.sum(p * life * frac))


@dataclass
class GateTradeoff:
    delays: np.ndarray
    width: float
    visibility: np.ndarray
    bright: np.ndarray  # photons/shot with no MW rotation
    dark: np.ndarray    # photons/shot after a pi rotation


def gate_tradeoff(model: LevelModel, base_seq: PulseSequence, delays, width: float) -> GateTradeoff:
    """Noise-free Rabi visibility and throughput as a function of gate delay."""
    delays = np.asarray(delays, dtype=float)
    s0 = with_mw_duration(base_seq, 0.0, 0.0)
    i = mw_index(base_seq)
    segs = list(base_seq.segments)
    segs[i] = mw(0.0, angle=math.pi)
    s1 = base_seq.replace(segments=tuple(segs))
    n0 = np.array([expected_gated_photons(model, s0, (d, width)) for d in delays])
    n1 = np.array([expected_gated_photons(model, s1, (d, width)) for d in delays])
    return GateTradeoff(delays, width, (n0 - n1) / (n0 + n1), n0, n1)
