"""Deterministic population dynamics of the level model (rate-equation master equation)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..levelmodel import LEVEL_NAMES, N_LEVELS, LevelModel
from ..sequence import PulseSequence, wait
from .rates import compile_sequence, rate_matrix


@dataclass(frozen=True)
class PopulationTrajectory:
    times: np.ndarray
    populations: np.ndarray  # shape (len(times), 7)

    def level(self, name: str) -> np.ndarray:
        return self.populations[:, LEVEL_NAMES.index(name)]


def _as_sequence(drive) -> PulseSequence:
    if drive is None:
        return PulseSequence(segments=())
    if isinstance(drive, PulseSequence):
        return drive
    return PulseSequence(segments=tuple(drive))


def integrate_master(model: LevelModel, drive, initial, grid) -> PopulationTrajectory:
    """Solve ``dP/dt = R P`` on a piecewise-constant drive.

    ``drive`` is a PulseSequence, a list of segments, or None (free
    evolution). Instantaneous maps (fs pulse, MW rotation) act at the start
    of their segment, so a grid point coinciding with a pulse sees the
    population after the pulse. Past the end of the drive the system
    evolves freely.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("time grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("time grid must start at t >= 0")
    p0 = np.asarray(initial, dtype=float)
    if p0.shape != (N_LEVELS,) or np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-9:
        raise ValueError("initial population must be 7 non-negative entries summing to 1")

    seq = _as_sequence(drive)
    tail = max(grid[-1] - seq.shot_duration, 0.0) + 1.0
    comp = compile_sequence(model, seq.replace(segments=seq.segments + (wait(tail),)))

    out = np.empty((grid.size, N_LEVELS))
    p = p0.copy()
    i = 0
    for ph in comp.phases:
        if ph.pre_map is not None:
            p = ph.pre_map @ p
        if ph.duration <= 0:
            continue
        j = np.searchsorted(grid, ph.end, side="left")
        if j > i:
            dt = grid[i:j] - ph.start
            R = ph.generator
            # one propagator per grid step when the grid is uniform inside the phase
            steps = np.diff(np.concatenate(([0.0], dt)))
            if np.allclose(steps[1:], steps[1] if steps.size > 1 else 0.0, rtol=1e-12, atol=0):
                U0 = expm(R * steps[0])
                q = U0 @ p
                out[i] = q
                if steps.size > 1:
                    U = expm(R * steps[1])
                    for k in range(1, steps.size):
                        q = U @ q
                        out[i + k] = q
            else:
                for k, tau in enumerate(dt):
                    out[i + k] = expm(R * tau) @ p
            i = j
        p = expm(ph.generator * ph.duration) @ p
        if i >= grid.size:
            break
    out[(out < 0) & (out > -1e-12)] = 0.0
    return PopulationTrajectory(grid.copy(), out)


def steady_state(model: LevelModel, k_pump: float) -> np.ndarray:
    """Stationary populations under a constant incoherent pump."""
    R = rate_matrix(model, k_pump)
    A = np.vstack([R, np.ones(N_LEVELS)])
    b = np.zeros(N_LEVELS + 1)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(A, b, rcond=None)
    return p
