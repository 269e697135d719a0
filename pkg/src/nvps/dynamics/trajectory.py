"""Monte Carlo wave-function unraveling of the driven two-level emitter.

Jump operators are ``sqrt(1/t1)|g><e|`` (radiative, emits a photon) and
``sqrt(2/t2_star)|e><e|`` (pure dephasing, no photon). The projector form of
the dephasing channel gives the same master equation as a sigma_z jump and
coherence decay 1/t2_star, but every jump leaves a known pure state
(|g> after emission, |e> after dephasing). Between jumps the state follows
the non-Hermitian Hamiltonian deterministically, so the trajectory is a
renewal process: waiting times are drawn from two tabulated no-jump
survival curves and the channel of each jump is independent of its time
(both channels have rates proportional to |c_e|^2).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .bloch import TwoLevelParams

GROUND, EXCITED, SHELVED = 0, 1, 2
RADIATIVE, DEPHASING, SHELVING = 0, 1, 2

_TAIL = 1e-13


class WaitingTimeSampler:
    """Inverse-CDF sampler of no-jump waiting times from |g> and |e>.

    ``shelving_fraction`` diverts that share of excited-state decays into a
    dark metastable level with mean dwell ``shelf_lifetime`` before returning
    to |g>; zero disables it.
    """

    def __init__(self, params: TwoLevelParams, shelving_fraction: float = 0.0,
                 shelf_lifetime: float = 300e-9, points_per_scale: int = 2000,
                 max_points: int = 2_000_000):
        self.params = params
        self.shelving_fraction = shelving_fraction
        self.shelf_lifetime = shelf_lifetime
        gd = 0.0 if math.isinf(params.t2_star) else 2.0 / params.t2_star
        self.k_decay = 1.0 / params.t1
        self.k_dephase = gd
        k = self.k_decay + gd
        p_dec = self.k_decay / k
        self.channel_probs = np.array([
            p_dec * (1.0 - shelving_fraction),  # radiative
            gd / k,                             # dephasing
            p_dec * shelving_fraction,          # shelving
        ])
        om, de = params.rabi, params.detuning
        self._A = np.array([[0.0, -0.5j * om], [-0.5j * om, 1j * de - 0.5 * k]])

        scales = [params.t1]
        if om:
            scales.append(2 * math.pi / abs(om))
        if gd:
            scales.append(params.t2_star)
        dt = min(scales) / points_per_scale
        slow = -np.linalg.eigvals(self._A).real.min()
        t_max = 40.0 / (2 * slow) if slow > 0 else 40.0 * params.t1
        n = int(min(max_points, math.ceil(t_max / dt) + 1))
        self.t = np.linspace(0.0, t_max, n)
        U = expm(self.t[:, None, None] * self._A)
        c_g = U[:, :, 0]
        c_e = U[:, :, 1]
        surv_g = np.sum(np.abs(c_g) ** 2, axis=1)
        surv_e = np.sum(np.abs(c_e) ** 2, axis=1)
        self.cdf = [np.maximum.accumulate(1.0 - surv_g), np.maximum.accumulate(1.0 - surv_e)]

    def survival(self, start: int) -> np.ndarray:
        return 1.0 - self.cdf[start]

    def draw(self, start: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Waiting times for shots starting in ``start`` (GROUND/EXCITED) given uniforms ``u``."""
        out = np.empty(u.size)
        for s in (GROUND, EXCITED):
            m = start == s
            if not m.any():
                continue
            F = self.cdf[s]
            w = np.interp(u[m], F, self.t)
            # draws beyond the tabulated range: no further jump (only when the
            # survival never decays, e.g. an undriven ground state)
            w[u[m] > F[-1]] = np.inf if F[-1] < 1.0 - _TAIL else self.t[-1]
            out[m] = w
        return out


def sample_jumps(sampler: WaitingTimeSampler, duration: float, rng: np.random.Generator,
                 start: int = GROUND, block: int = 1 << 20):
    """Jump times and channels of one continuous trajectory on ``[0, duration)``."""
    times, chans = [], []
    t, state = 0.0, start
    cum = np.cumsum(sampler.channel_probs)
    reset = np.array([GROUND, EXCITED, SHELVED])
    while t < duration:
        ch = np.minimum(np.searchsorted(cum, rng.random(block), side="right"), 2)
        before = np.empty(block, dtype=np.int64)
        before[0] = state
        before[1:] = reset[ch[:-1]]
        u = rng.random(block)
        shelved = before == SHELVED
        w = sampler.draw(np.where(shelved, GROUND, before), u)
        if shelved.any():
            w[shelved] += rng.exponential(sampler.shelf_lifetime, shelved.sum())
        tj = t + np.cumsum(w)
        keep = tj < duration
        n = int(keep.sum()) if keep.all() else int(np.argmin(keep))
        times.append(tj[:n])
        chans.append(ch[:n])
        if n < block:
            break
        t = tj[-1]
        state = int(reset[ch[-1]])
    if not times:
        return np.empty(0), np.empty(0, dtype=np.int64)
    return np.concatenate(times), np.concatenate(chans)
