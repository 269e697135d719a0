"""Single-photon detector model: efficiency, timing jitter, dark counts, dead time."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 0.1
    dark_rate: float = 100.0
    jitter_sigma: float = 0.3e-9
    dead_time: float = 0.0

    def violations(self) -> list[tuple[str, str]]:
        out = []
        if not 0.0 <= self.efficiency <= 1.0:
            out.append(("efficiency", "must lie in [0, 1]"))
        for name in ("dark_rate", "jitter_sigma", "dead_time"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                out.append((name, "must be finite and >= 0"))
        return out

    def check(self) -> "DetectorConfig":
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(f"{f}: {m}" for f, m in bad))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        return cls(**d)


IDEAL = DetectorConfig(efficiency=1.0, dark_rate=0.0, jitter_sigma=0.0, dead_time=0.0)


def thin_and_jitter(times: np.ndarray, det: DetectorConfig, rng: np.random.Generator):
    """Efficiency thinning then Gaussian jitter. Returns (kept mask, jittered kept times)."""
    keep = rng.random(times.size) < det.efficiency
    t = times[keep]
    if det.jitter_sigma > 0:
        t = t + rng.normal(0.0, det.jitter_sigma, t.size)
    return keep, t


def dark_counts(windows: np.ndarray, rate: float, rng: np.random.Generator):
    """Poisson dark counts inside each ``[start, end)`` row of ``windows``.

    Returns (window index, time) per count.
    """
    if rate <= 0 or windows.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    width = windows[:, 1] - windows[:, 0]
    n = rng.poisson(rate * width)
    idx = np.repeat(np.arange(len(windows)), n)
    t = windows[idx, 0] + rng.random(idx.size) * width[idx]
    return idx, t


@numba.njit(cache=True)
def _dead_time_mask(t, dead):
    keep = np.ones(t.size, dtype=np.bool_)
    last = -np.inf
    for i in range(t.size):
        if t[i] - last < dead:
            keep[i] = False
        else:
            last = t[i]
    return keep


def dead_time_mask(sorted_times: np.ndarray, dead_time: float) -> np.ndarray:
    """Non-paralyzable dead time: drop any tag within ``dead_time`` of the last kept one."""
    if dead_time <= 0 or sorted_times.size < 2:
        return np.ones(sorted_times.size, dtype=bool)
    return _dead_time_mask(np.ascontiguousarray(sorted_times, dtype=np.float64), float(dead_time))
