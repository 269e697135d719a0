"""Closed-form photon-coherence figures of merit and the resonant g2 formula."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..dynamics.bloch import TwoLevelParams


@dataclass(frozen=True)
class CoherenceSummary:
    t1: float
    t2_star: float
    t2: float
    gamma2: float
    delta_nu: float
    delta_tau: float
    fourier_product: float
    ratio_2t1_t2: float
    hom_depth: float

    def to_dict(self) -> dict:
        return {k: (("inf" if math.isinf(v) else v) if isinstance(v, float) else v) for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def coherence_summary(t1: float, t2_star: float) -> CoherenceSummary:
    """Linewidth, Fourier product, 2T1/T2 and HOM dip depth for lifetime ``t1`` and pure dephasing ``t2_star``."""
    if not (t1 > 0 and math.isfinite(t1)):
        raise ValueError("t1 must be positive and finite")
    if not t2_star > 0:
        raise ValueError("t2_star must be positive (or inf)")
    inv_star = 0.0 if math.isinf(t2_star) else 1.0 / t2_star
    gamma2 = 1.0 / (2.0 * t1) + inv_star
    t2 = 1.0 / gamma2
    delta_nu = 1.0 / (2.0 * math.pi * t2)
    delta_tau = 2.0 * t1
    # the ratio is formed from rates so that t2_star = inf gives exactly 1
    ratio = 1.0 + 2.0 * t1 * inv_star
    return CoherenceSummary(
        t1=t1,
        t2_star=t2_star,
        t2=t2,
        gamma2=gamma2,
        delta_nu=delta_nu,
        delta_tau=delta_tau,
        fourier_product=ratio / (2.0 * math.pi),
        ratio_2t1_t2=ratio,
        hom_depth=1.0 / ratio,
    )


def envelope_rate(t1: float, t2_star: float) -> float:
    """Decay rate 3/(4 t1) + 1/(2 t2_star) of the Rabi oscillations in g2."""
    return 0.75 / t1 + (0.0 if math.isinf(t2_star) else 0.5 / t2_star)


def g2_closed_form(params: TwoLevelParams, tau) -> np.ndarray:
    """Strong-drive resonant g2(tau) = 1 - exp(-a tau) (a/rabi sin(rabi tau) + cos(rabi tau))."""
    if params.rabi == 0:
        raise ValueError("closed-form g2 is singular at zero Rabi frequency; use g2_numeric")
    if params.detuning != 0:
        raise ValueError("closed-form g2 holds on resonance only")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    a = envelope_rate(params.t1, params.t2_star)
    om = params.rabi
    return 1.0 - np.exp(-a * tau) * (a / om * np.sin(om * tau) + np.cos(om * tau))


def isc_difference(t1_ms0: float, t1_ms1: float) -> float:
    """Spin-dependent intersystem-crossing rate difference implied by two lifetimes."""
    if not (t1_ms0 > 0 and t1_ms1 > 0):
        raise ValueError("lifetimes must be positive")
    return 1.0 / t1_ms1 - 1.0 / t1_ms0
