"""Optical Bloch equations for a resonantly driven two-level transition.

The rotating-frame Hamiltonian is ``H = (rabi/2)(|e><g| + |g><e|) - detuning |e><e|``
with radiative decay 1/t1 and pure dephasing 1/t2_star on the coherence.
All frequencies are angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TwoLevelParams:
    t1: float
    t2_star: float = math.inf
    rabi: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        if not (self.t1 > 0 and math.isfinite(self.t1)):
            raise ValueError(f"t1 must be positive and finite, got {self.t1}")
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be positive or inf, got {self.t2_star}")
        if not (math.isfinite(self.rabi) and math.isfinite(self.detuning)):
            raise ValueError("rabi and detuning must be finite")

    @property
    def gamma1(self) -> float:
        return 1.0 / self.t1

    @property
    def gamma2(self) -> float:
        """Homogeneous coherence decay rate 1/(2 t1) + 1/t2_star."""
        return 0.5 / self.t1 + (0.0 if math.isinf(self.t2_star) else 1.0 / self.t2_star)

    @property
    def t2(self) -> float:
        return 1.0 / self.gamma2

    @property
    def saturation(self) -> float:
        return self.rabi**2 * self.t1 * self.t2

    def to_dict(self) -> dict:
        return {"t1": self.t1, "t2_star": self.t2_star, "rabi": self.rabi, "detuning": self.detuning}


@dataclass(frozen=True)
class BlochTrajectory:
    times: np.ndarray
    rho_gg: np.ndarray
    rho_ee: np.ndarray
    coherence: np.ndarray  # rho_eg, complex


def _bloch_matrix(p: TwoLevelParams) -> np.ndarray:
    """Linear generator for x = (rho_gg, rho_ee, Re rho_eg, Im rho_eg)."""
    g1, g2, om, de = p.gamma1, p.gamma2, p.rabi, p.detuning
    return np.array([
        [0.0, g1, 0.0, om],
        [0.0, -g1, 0.0, -om],
        [0.0, 0.0, -g2, -de],
        [-om / 2, om / 2, de, -g2],
    ])


def max_step(p: TwoLevelParams) -> float:
    """Largest allowed RK4 step: 1/50 of the fastest time scale."""
    scales = [p.t1, p.t2]
    if p.rabi:
        scales.append(2 * math.pi / abs(p.rabi))
    if p.detuning:
        scales.append(2 * math.pi / abs(p.detuning))
    return min(scales) / 50.0


def _rk4_propagator(A: np.ndarray, h: float) -> np.ndarray:
    # one classical RK4 step of a linear autonomous system, as a matrix
    hA = h * A
    I = np.eye(A.shape[0])
    return I + hA @ (I + hA @ (I / 2 + hA @ (I / 6 + hA / 24)))


def bloch_integrate(params: TwoLevelParams, initial, grid) -> BlochTrajectory:
    """Integrate the optical Bloch equations onto ``grid`` with fixed-step RK4.

    ``initial`` is ``"ground"``, ``"excited"``, or a tuple
    ``(rho_gg, rho_ee, rho_eg)`` with complex coherence.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("time grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if isinstance(initial, str) and initial == "ground":
        x = np.array([1.0, 0.0, 0.0, 0.0])
    elif isinstance(initial, str) and initial == "excited":
        x = np.array([0.0, 1.0, 0.0, 0.0])
    else:
        gg, ee, eg = initial
        x = np.array([gg, ee, complex(eg).real, complex(eg).imag], dtype=float)
        if abs(gg + ee - 1.0) > 1e-9:
            raise ValueError("initial populations must sum to 1")

    A = _bloch_matrix(params)
    hmax = max_step(params)
    out = np.empty((grid.size, 4))
    out[0] = x
    cache = {}
    for i in range(1, grid.size):
        span = grid[i] - grid[i - 1]
        n = max(1, math.ceil(span / hmax - 1e-9))
        h = span / n
        if h <= 0 or h < 8 * np.spacing(grid[i]):
            raise IntegrationError(f"step size underflow at t={grid[i]:.3e} s (h={h:.3e} s)")
        key = (n, span)
        M = cache.get(key)
        if M is None:
            M = np.linalg.matrix_power(_rk4_propagator(A, h), n)
            if len(cache) < 64:
                cache[key] = M
        x = M @ x
        out[i] = x
    return BlochTrajectory(grid.copy(), out[:, 0], out[:, 1], out[:, 2] + 1j * out[:, 3])


def steady_state_excited(params: TwoLevelParams) -> float:
    """Closed-form stationary excited population."""
    s = params.saturation
    return 0.5 * s / (1.0 + (params.detuning * params.t2) ** 2 + s)


def g2_numeric(params: TwoLevelParams, tau_grid) -> np.ndarray:
    """g2(tau) from quantum regression: rho_ee(tau | start in ground) / rho_ee(steady state)."""
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    if params.rabi == 0:
        raise ValueError("g2 is undefined without drive (no steady-state emission)")
    order = np.argsort(tau)
    ts = tau[order]
    uniq, inv = np.unique(ts, return_inverse=True)
    grid = uniq if uniq[0] == 0 else np.concatenate(([0.0], uniq))
    traj = bloch_integrate(params, "ground", grid)
    ree = traj.rho_ee[-uniq.size:]
    out = np.empty_like(tau)
    out[order] = ree[inv] / steady_state_excited(params)
    return out


def excitation_spectrum(params: TwoLevelParams, detuning_grid) -> np.ndarray:
    """Stationary excited population versus laser detuning (rad/s)."""
    d = np.asarray(detuning_grid, dtype=float)
    s = params.saturation
    return 0.5 * s / (1.0 + (d * params.t2) ** 2 + s)


def spectrum_fwhm(params: TwoLevelParams) -> float:
    """Power-broadened FWHM of the excitation line in rad/s (2*gamma2 when weakly driven)."""
    return 2.0 * math.sqrt(1.0 + params.saturation) / params.t2
