"""Continuous resonant excitation of the mS=0 transition as a quantum-trajectory tag stream."""

from __future__ import annotations

import numpy as np

from ..dynamics.bloch import TwoLevelParams
from ..dynamics.trajectory import RADIATIVE, WaitingTimeSampler, sample_jumps
from ..levelmodel import LevelModel
from .detector import DetectorConfig, dark_counts, thin_and_jitter
from .experiments import _assemble, derive_rng
from .tags import TagStream


def cw_resonant_stream(params: TwoLevelParams, duration: float, det: DetectorConfig, seed: int,
                       shelving: LevelModel | None = None) -> TagStream:
    """One continuous acquisition of ``duration`` seconds under resonant drive.

    By default the emitter is a closed two-level system. Passing a
    LevelModel as ``shelving`` lets a fraction k_isc0*t1 of excited-state
    decays go dark for a singlet dwell (1/k_singlet) before returning to the
    ground state.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    det.check()
    frac, dwell = 0.0, 300e-9
    if shelving is not None:
        frac = shelving.k_isc0 / (shelving.k_isc0 + shelving.k_radiative)
        dwell = 1.0 / shelving.k_singlet
    sampler = WaitingTimeSampler(params, shelving_fraction=frac, shelf_lifetime=dwell)
    rng = derive_rng(seed)
    times, chans = sample_jumps(sampler, duration, rng)
    emitted = times[chans == RADIATIVE]
    _, tags = thin_and_jitter(emitted, det, rng)
    _, dark = dark_counts(np.array([[0.0, duration]]), det.dark_rate, rng)
    tags = np.concatenate((tags, dark))
    meta = {"experiment": "cw_resonant", "params": params.to_dict(), "emitted": int(emitted.size),
            "shelving_fraction": frac}
    return _assemble(tags, np.zeros(tags.size, dtype=np.int64), 1, duration, 0.0, det, seed, meta)
