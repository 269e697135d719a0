"""Pulse-sequence experiments and detector-filtered photon tag streams."""

from ..sequence import PulseSequence, Segment, fs_pulse, mw, pi_pulse, pump, record, resonant_cw, wait
from .cw import cw_resonant_stream
from .detector import IDEAL, DetectorConfig
from .experiments import (
    GateTradeoff,
    RabiSweep,
    derive_rng,
    expected_gated_photons,
    gate_tradeoff,
    run_rabi_sweep,
    run_rabi_sweeps,
    run_sequence,
)
from .tags import TagStream, read_binary, read_csv, write_binary, write_csv
