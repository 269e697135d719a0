"""Kinetic Monte Carlo sampling of the level model.

Two samplers share the compiled phases from :mod:`.rates`:

* :func:`sample_jump_trajectory` walks one shot and logs every event. It is
  the readable reference.
* :func:`simulate_shots` advances many shots at once with numpy and keeps
  only what the photon-stream layer needs (radiative jumps inside record
  windows, optionally the level occupied at given observation times).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..levelmodel import LEVEL_NAMES, N_LEVELS, LevelModel
from ..sequence import PulseSequence
from .rates import EVENT_KINDS, PHOTON, CompiledSequence, compile_sequence


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    from_level: str
    to_level: str


@dataclass
class EventList:
    events: list = field(default_factory=list)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def photon_times(self) -> np.ndarray:
        return np.array([e.time for e in self.events if e.kind == "photon-emission"])


def _channel_tables(channels):
    """Per-level cumulative rate tables padded to a common width."""
    per = [[] for _ in range(N_LEVELS)]
    for f, t, k, kind in channels:
        per[f].append((t, k, kind))
    width = max(1, max(len(p) for p in per))
    cum = np.full((N_LEVELS, width), np.inf)
    target = np.zeros((N_LEVELS, width), dtype=np.int8)
    kinds = np.full((N_LEVELS, width), -1, dtype=np.int8)
    total = np.zeros(N_LEVELS)
    for lv, chans in enumerate(per):
        acc = 0.0
        for c, (t, k, kind) in enumerate(chans):
            acc += k
            cum[lv, c] = acc
            target[lv, c] = t
            kinds[lv, c] = kind
        total[lv] = acc
    return total, cum, target, kinds


def sample_jump_trajectory(model: LevelModel, sequence: PulseSequence, seed: int) -> EventList:
    """One KMC realization of ``sequence`` with every jump logged."""
    comp = compile_sequence(model, sequence)
    rng = np.random.default_rng(seed)
    state = int(rng.choice(N_LEVELS, p=comp.initial))
    events = EventList()
    for ph in comp.phases:
        t = ph.start
        if ph.pre_map is not None:
            new = int(rng.choice(N_LEVELS, p=ph.pre_map[:, state]))
            if new != state:
                events.events.append(Event(t, EVENT_KINDS[ph.map_kind], LEVEL_NAMES[state], LEVEL_NAMES[new]))
                state = new
        if ph.duration <= 0:
            continue
        total, cum, target, kinds = _channel_tables(ph.channels)
        while total[state] > 0:
            t += rng.exponential(1.0 / total[state])
            if t >= ph.end:
                break
            c = int(np.searchsorted(cum[state], rng.random() * total[state], side="right"))
            new = int(target[state, c])
            events.events.append(Event(t, EVENT_KINDS[kinds[state, c]], LEVEL_NAMES[state], LEVEL_NAMES[new]))
            state = new
    return events


@dataclass
class ShotBatch:
    photon_shot: np.ndarray
    photon_time: np.ndarray  # within-shot time, s
    final_state: np.ndarray
    observed: np.ndarray | None = None  # (n_shots, n_obs) level indices


def _sample_categorical(rng, columns: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Draw the next level for each shot from ``columns[:, state]`` (column-stochastic)."""
    cum = np.cumsum(columns, axis=0)[:, state].T
    u = rng.random(state.size)[:, None]
    idx = (u >= cum).sum(axis=1)
    return np.minimum(idx, N_LEVELS - 1).astype(np.int8)


def dark_prefix(comp: CompiledSequence) -> tuple[int, np.ndarray]:
    """Index of the first recording phase and the exact populations at its start.

    Nothing before the first record window is observable, so a shot's state
    entering it is a single draw from these populations.
    """
    p = comp.initial.copy()
    for j, ph in enumerate(comp.phases):
        if ph.record:
            return j, p
        if ph.pre_map is not None:
            p = ph.pre_map @ p
        if ph.duration > 0:
            p = expm(ph.generator * ph.duration) @ p
    return len(comp.phases), p


def simulate_shots(comp: CompiledSequence, n_shots: int, rng: np.random.Generator, observe=None,
                   collapse_prefix: bool = True) -> ShotBatch:
    """Advance ``n_shots`` independent shots through ``comp`` in lock step.

    With ``collapse_prefix`` (and no ``observe``) the unrecorded phases
    before the first record window are replaced by one exact draw from the
    master-equation populations, which is equal in distribution and skips
    the bulk of the work in long polarization pumps.
    """
    first = 0
    init = comp.initial
    if collapse_prefix and observe is None:
        first, init = dark_prefix(comp)
        init = np.clip(init, 0.0, None)
        init = init / init.sum()
    state = _sample_categorical(rng, init[:, None], np.zeros(n_shots, dtype=np.int64))
    obs_t = None if observe is None else np.asarray(observe, dtype=float)
    observed = None if obs_t is None else np.full((n_shots, obs_t.size), -1, dtype=np.int8)
    p_shot, p_time = [], []

    for ph in comp.phases[first:]:
        if ph.pre_map is not None:
            state = _sample_categorical(rng, ph.pre_map, state.astype(np.int64))
        if ph.duration <= 0:
            continue
        total, cum, target, kinds = _channel_tables(ph.channels)
        t = np.full(n_shots, ph.start)
        active = np.arange(n_shots)
        if obs_t is not None:
            lo_ph, hi_ph = np.searchsorted(obs_t, [ph.start, ph.end], side="left")
            ph_obs = obs_t[lo_ph:hi_ph]
        while active.size:
            s = state[active]
            rate = total[s]
            with np.errstate(divide="ignore"):
                tn = t[active] + rng.standard_exponential(active.size) / rate
            if obs_t is not None and ph_obs.size:
                _observe(observed, lo_ph, ph_obs, active, s, t[active], np.minimum(tn, ph.end))
            go = tn < ph.end
            a, sg, tg = active[go], s[go], tn[go]
            if a.size == 0:
                break
            u = rng.random(a.size) * rate[go]
            c = (u[:, None] >= cum[sg]).sum(axis=1)
            c = np.minimum(c, cum.shape[1] - 1)
            if ph.record:
                hit = kinds[sg, c] == PHOTON
                p_shot.append(a[hit])
                p_time.append(tg[hit])
            state[a] = target[sg, c]
            t[a] = tg
            active = a

    if obs_t is not None:
        at_end = obs_t >= comp.duration
        if at_end.any():
            observed[:, at_end] = state[:, None]

    shots = np.concatenate(p_shot) if p_shot else np.empty(0, dtype=np.int64)
    times = np.concatenate(p_time) if p_time else np.empty(0)
    return ShotBatch(shots.astype(np.int64), times, state, observed)


def _observe(observed, offset, ph_obs, shots, s, t0, t1):
    """Fill the level of each shot for observation times inside ``[t0, t1)``."""
    lo = np.searchsorted(ph_obs, t0, side="left")
    hi = np.searchsorted(ph_obs, t1, side="left")
    n = hi - lo
    m = n > 0
    if not m.any():
        return
    n, lo, shots, s = n[m], lo[m], shots[m], s[m]
    rows = np.repeat(shots, n)
    starts = np.repeat(lo - np.concatenate(([0], np.cumsum(n)[:-1])), n)
    cols = starts + np.arange(n.sum()) + offset
    observed[rows, cols] = np.repeat(s, n)


def occupancy_counts(comp: CompiledSequence, n_shots: int, rng, times) -> np.ndarray:
    """Number of shots in each level at each time, shape (len(times), 7)."""
    batch = simulate_shots(comp, n_shots, rng, observe=times)
    out = np.zeros((len(times), N_LEVELS), dtype=np.int64)
    for j in range(len(times)):
        out[j] = np.bincount(batch.observed[:, j], minlength=N_LEVELS)
    return out


def sample_shots(model: LevelModel, sequence: PulseSequence, n_shots: int, seed: int, observe=None) -> ShotBatch:
    """Convenience wrapper: compile, seed and run one batch."""
    comp = compile_sequence(model, sequence)
    return simulate_shots(comp, n_shots, np.random.default_rng(seed), observe=observe)
