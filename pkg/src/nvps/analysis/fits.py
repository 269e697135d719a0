"""Model fits to decay histograms, g2 curves and Rabi sweeps.

Every fit runs in nanosecond units internally (times in ns, angular
frequencies in rad/ns) so that all parameters are of order one; results
are reported in SI units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coherence import envelope_rate
from .lm import levenberg_marquardt

NS = 1e-9


class FitError(RuntimeError):
    """A fit could not be carried out or did not converge."""

    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class InsufficientDataError(FitError):
    pass


class DegenerateFitError(FitError):
    pass


@dataclass
class FitResult:
    model: str
    names: tuple
    values: np.ndarray
    errors: np.ndarray
    chi2: float
    dof: int
    iterations: int
    converged: bool
    grad_norm: float
    message: str = ""
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def error(self, name):
        return float(self.errors[self.names.index(name)])

    def to_dict(self) -> dict:
        def num(v):
            v = float(v)
            return "inf" if math.isinf(v) else v
        return {
            "model": self.model,
            "parameter_order": list(self.names),
            "parameters": {n: num(v) for n, v in zip(self.names, self.values)},
            "uncertainties": {n: num(e) for n, e in zip(self.names, self.errors)},
            "covariance_diagonal": {n: num(e * e) for n, e in zip(self.names, self.errors)},
            "diagnostics": {
                "chi2": float(self.chi2),
                "dof": int(self.dof),
                "iterations": int(self.iterations),
                "converged": bool(self.converged),
                "grad_norm": float(self.grad_norm),
                "message": self.message,
            },
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        names = tuple(d.get("parameter_order", d["parameters"]))
        val = np.array([float(d["parameters"][n]) for n in names])
        err = np.array([float(d["uncertainties"][n]) for n in names])
        g = d["diagnostics"]
        return cls(d["model"], names, val, err, g["chi2"], g["dof"], g["iterations"], g["converged"],
                   g["grad_norm"], g.get("message", ""), d.get("extra", {}))


def _run(model, names, p0, resid, jac, n_points, to_si, require_convergence=True, **lm_kw):
    res = levenberg_marquardt(resid, jac, p0, **lm_kw)
    err = np.sqrt(np.clip(np.diag(res.covariance), 0, None))
    values, errors = to_si(res.params, err)
    fit = FitResult(model, names, values, errors, res.chi2, n_points - len(p0), res.iterations,
                    res.converged, res.grad_norm, res.message)
    if require_convergence and not res.converged:
        raise FitError(f"{model} fit did not converge: {res.message}", fit)
    return fit


# -- exponential decay ---------------------------------------------------------------


def exp_model(t, amplitude, tau, background):
    return amplitude * np.exp(-t / tau) + background


def fit_exponential(hist, fit_start: float = 0.0, max_iter: int = 200) -> FitResult:
    """Poisson-weighted fit of ``A exp(-t/tau) + B`` to histogram bins with center >= fit_start."""
    t = hist.centers / NS
    y = hist.counts.astype(float)
    m = t >= fit_start / NS
    t, y = t[m], y[m]
    if np.count_nonzero(y > 0) < 5:
        raise InsufficientDataError("need at least 5 occupied bins past fit_start")
    sigma = np.sqrt(np.maximum(y, 1.0))
    t0 = t[0]
    x = t - t0

    tail = y[-max(3, y.size // 10):]
    b0 = float(np.median(tail))
    sig = y - b0
    pos = sig > max(1.0, 0.05 * sig.max())
    if np.count_nonzero(pos) >= 2:
        slope, icpt = np.polyfit(x[pos], np.log(sig[pos]), 1, w=np.sqrt(sig[pos]))
        tau0 = -1.0 / slope if slope < 0 else (x[-1] - x[0]) / 3
        a0 = math.exp(icpt)
    else:
        tau0, a0 = (x[-1] - x[0]) / 3, max(y[0] - b0, 1.0)

    def resid(p):
        return (y - exp_model(x, *p)) / sigma

    def jac(p):
        a, tau, _ = p
        e = np.exp(-x / tau)
        return -np.column_stack((e, a * x * e / tau**2, np.ones_like(x))) / sigma[:, None]

    def to_si(p, e):
        # amplitude is referred back to t = 0 of the histogram axis
        a, tau, b = p
        shift = math.exp(t0 / tau)
        return (np.array([a * shift, tau * NS, b]),
                np.array([e[0] * shift, e[1] * NS, e[2]]))

    return _run("exponential", ("amplitude", "tau", "background"), [a0, tau0, b0],
                resid, jac, x.size, to_si, max_iter=max_iter)


# -- g2 with Rabi oscillations ---------------------------------------------------------


def dominant_frequency(t, y, max_freq=None, decaying: bool = False) -> float:
    """Angular frequency of the strongest non-DC Fourier component (parabolic peak refinement).

    ``decaying`` swaps the Hann window for its falling half, which keeps the
    early samples where a damped oscillation has most of its weight.
    """
    y = np.asarray(y, float) - np.mean(y)
    n = y.size
    pad = 8 * int(2 ** math.ceil(math.log2(n)))
    win = np.hanning(2 * n)[n:] if decaying else np.hanning(n)
    amp = np.abs(np.fft.rfft(y * win, pad))
    freqs = np.fft.rfftfreq(pad, t[1] - t[0])
    top = amp.size if max_freq is None else max(3, int(np.searchsorted(freqs, max_freq)))
    k = int(np.argmax(amp[1:top]) + 1)
    if 1 <= k < amp.size - 1:
        a, b, c = amp[k - 1], amp[k], amp[k + 1]
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den != 0 else 0.0
    else:
        shift = 0.0
    return 2 * math.pi * (freqs[k] + shift * (freqs[1] - freqs[0]))


def _g2_cf(x, a, om):
    # trial steps with a < 0 may overflow; the optimizer rejects non-finite chi2
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(-a * x)
        s, c = np.sin(om * x), np.cos(om * x)
        return 1.0 - e * (a / om * s + c), e, s, c


def _g2_cf_and_grad(x, a, om):
    """Closed-form g2 and its derivatives in (a, om), even in x."""
    x = np.abs(x)
    g, e, sn, cs = _g2_cf(x, a, om)
    with np.errstate(over="ignore", invalid="ignore"):
        dg_da = x * e * (a / om * sn + cs) - e * sn / om
        dg_dom = -e * (-a / om**2 * sn + a * x / om * cs - x * sn)
    return g, dg_da, dg_dom


def response_kernel(jitter_sigma: float, bin_width: float, n_gh: int = 16, n_gl: int = 4):
    """Offsets (ns) and weights of the timing response seen by a binned g2.

    A coincidence delay is smeared by the jitter of both tags (a Gaussian of
    width sqrt(2)*sigma) and then averaged over its bin. Both are applied as
    a quadrature sum around each bin center.
    """
    xh, wh = np.polynomial.hermite_e.hermegauss(n_gh)
    wh = wh / wh.sum()
    xl, wl = np.polynomial.legendre.leggauss(n_gl)
    wl = wl / wl.sum()
    sd = math.sqrt(2.0) * jitter_sigma / NS
    off = (sd * xh[:, None] + 0.5 * bin_width / NS * xl[None, :]).ravel()
    w = (wh[:, None] * wl[None, :]).ravel()
    return off, w


def g2_model(tau, t1, t2_star, omega, jitter_sigma: float = 0.0, bin_width: float = 0.0):
    """Closed-form g2 at delays ``tau`` (s), optionally seen through detector jitter and binning."""
    x = np.asarray(tau, float) / NS
    a = envelope_rate(t1 / NS, t2_star / NS)
    om = omega * NS
    if jitter_sigma <= 0 and bin_width <= 0:
        return _g2_cf_and_grad(x, a, om)[0]
    off, w = response_kernel(jitter_sigma, bin_width)
    return _g2_cf_and_grad(x[:, None] + off[None, :], a, om)[0] @ w


def fit_g2(curve, t1_fixed: float, jitter_sigma: float | None = None, max_iter: int = 200) -> FitResult:
    """Fit the resonant closed-form g2 with the lifetime held at ``t1_fixed``.

    Free parameters are the pure dephasing rate and the Rabi frequency;
    the result reports ``t2_star`` (inf when the dephasing rate is <= 0),
    ``omega`` and ``dephasing_rate``.

    With ``jitter_sigma`` (single-detector timing jitter, s) the model is
    convolved with the pair-delay response and averaged over each bin before
    comparison; otherwise the closed form is evaluated at the bin centers. Jitter
    damps the oscillation by a constant factor that a plain fit would
    mistake for extra dephasing.
    """
    if not t1_fixed > 0:
        raise ValueError("t1_fixed must be positive")
    x = np.asarray(curve.tau, float) / NS
    y = np.asarray(curve.g2, float)
    s = np.asarray(curve.errors, float)
    ok = np.isfinite(s) & (s > 0)
    x, y, s = x[ok], y[ok], s[ok]
    if x.size < 10:
        raise InsufficientDataError("g2 curve has fewer than 10 usable bins")

    dof = x.size
    chi2_flat = float(np.sum(((y - 1.0) / s) ** 2))
    if chi2_flat < dof + 5.0 * math.sqrt(2.0 * dof):
        raise DegenerateFitError("g2 curve is consistent with a flat line; no oscillation to fit")

    a1 = 0.75 / (t1_fixed / NS)
    # The Fourier peak of g2 - 1 can sit at zero frequency when the
    # antibunching dip outweighs a strongly damped oscillation; the
    # derivative of the closed form is a pure damped sine at the Rabi
    # frequency, so its peak is the second candidate.
    dx = x[1] - x[0]
    cands = [dominant_frequency(x, y, decaying=True),
             dominant_frequency(x[:-1], np.diff(y) / dx, max_freq=0.25 / dx, decaying=True)]
    cands = [c for c in cands if c > 0]
    if not cands:
        raise DegenerateFitError("no oscillation frequency found in the g2 curve")

    def sq(g, om):
        return float(np.sum(((y - _g2_cf(np.abs(x), a1 + 0.5 * g, om)[0]) / s) ** 2))

    # coarse scan of the dephasing rate seeds the optimizer
    grid = np.concatenate(([0.0], a1 * np.geomspace(1e-3, 10, 40)))
    gam0, om0 = min(((g, om) for om in cands for g in grid), key=lambda p: sq(*p))
    periods = (x[-1] - x[0]) * om0 / (2 * math.pi)
    if periods < 3:
        raise DegenerateFitError(f"curve covers only {periods:.2f} Rabi periods (need >= 3)")

    if jitter_sigma:
        off, w = response_kernel(jitter_sigma, curve.bin_width)
        xs = x[:, None] + off[None, :]
    else:
        w = None

    def model(p):
        a = a1 + 0.5 * p[0]
        if w is None:
            return _g2_cf_and_grad(x, a, p[1])
        return tuple(v @ w for v in _g2_cf_and_grad(xs, a, p[1]))

    def resid_for(p):
        return (y - model(p)[0]) / s

    def jac(p):
        _, dg_da, dg_dom = model(p)
        return -np.column_stack((0.5 * dg_da, dg_dom)) / s[:, None]

    def to_si(p, e):
        return p / NS, e / NS

    fit = _run("g2_resonant", ("dephasing_rate", "omega"), [gam0, om0], resid_for, jac, x.size, to_si,
               max_iter=max_iter)
    gam, gam_err = fit.values[0], fit.errors[0]
    t2s = 1.0 / gam if gam > 0 else math.inf
    t2s_err = gam_err / gam**2 if gam > 0 else math.inf
    fit.names = ("t2_star", "omega", "dephasing_rate")
    fit.values = np.array([t2s, fit.values[1], gam])
    fit.errors = np.array([t2s_err, fit.errors[1], gam_err])
    fit.extra = {"t1_fixed": t1_fixed, "envelope_rate": envelope_rate(t1_fixed, t2s),
                 "omega_initial": om0 / NS, "jitter_sigma": float(jitter_sigma or 0.0)}
    return fit


# -- Rabi oscillation visibility --------------------------------------------------


def damped_cosine(t, c0, c1, om, phi, gamma):
    return c0 + c1 * np.cos(om * t + phi) * np.exp(-gamma * t)


def rabi_visibility(sweep, max_iter: int = 200, reweight: int = 2) -> tuple[float, FitResult]:
    """Fit ``C0 + C1 cos(W t + phi) exp(-g t)`` to a sweep and return ``|C1|/C0``.

    ``sweep`` needs ``durations`` (s) and ``counts``; an ``mw_rabi``
    attribute, when present, seeds the frequency. The first pass uses
    sigma = sqrt(max(count, 1)); ``reweight`` further passes take sigma from
    the fitted model, which removes the downward pull that observed-count
    weights exert on sparse (gated) data. A sweep whose scatter about its
    mean is consistent with Poisson noise raises :class:`DegenerateFitError`.
    """
    x = np.asarray(sweep.durations, float) / NS
    y = np.asarray(sweep.counts, float)
    if x.size < 6:
        raise InsufficientDataError("need at least 6 sweep points")
    if not np.any(y > 0):
        raise DegenerateFitError("sweep has no counts")
    sigma = np.sqrt(np.maximum(y, 1.0))
    om0 = getattr(sweep, "mw_rabi", None)
    om0 = om0 * NS if om0 else dominant_frequency(x, y)
    if (x[-1] - x[0]) * om0 / (2 * math.pi) < 2 * (1 - 1e-9):
        raise InsufficientDataError("sweep must cover at least two oscillation periods")
    # a sweep consistent with a constant rate has no oscillation to fit
    dof = x.size - 1
    if np.sum((y - y.mean()) ** 2) / max(y.mean(), 1.0) < dof + 5.0 * math.sqrt(2.0 * dof):
        raise DegenerateFitError("sweep is consistent with a constant count rate; no oscillation to fit")
    # linear seed for amplitude and phase at the nominal frequency
    A = np.column_stack((np.ones_like(x), np.cos(om0 * x), np.sin(om0 * x)))
    (c0, ca, sb), *_ = np.linalg.lstsq(A / sigma[:, None], y / sigma, rcond=None)
    p0 = [c0, math.hypot(ca, sb), om0, math.atan2(-sb, ca), 0.0]

    def to_si(p, e):
        scale = np.array([1.0, 1.0, 1 / NS, 1.0, 1 / NS])
        return p * scale, e * scale

    floor = max(0.5, 1e-3 * float(y.mean()))
    for rep in range(reweight + 1):
        sig = sigma

        def resid(p, sig=sig):
            return (y - damped_cosine(x, *p)) / sig

        def jac(p, sig=sig):
            _, c1_, om, ph, g = p
            e = np.exp(-g * x)
            cs, sn = np.cos(om * x + ph), np.sin(om * x + ph)
            return -np.column_stack((
                np.ones_like(x),
                cs * e,
                -c1_ * x * sn * e,
                -c1_ * sn * e,
                -c1_ * x * cs * e,
            )) / sig[:, None]

        fit = _run("damped_cosine", ("c0", "c1", "omega", "phi", "decay_rate"), p0,
                   resid, jac, x.size, to_si, max_iter=max_iter)
        p0 = fit.values / np.array([1.0, 1.0, 1 / NS, 1.0, 1 / NS])
        sigma = np.sqrt(np.maximum(damped_cosine(x, *p0), floor))
    c0f, c1f = fit.values[0], fit.values[1]
    if not c0f > 0:
        raise DegenerateFitError("fitted mean count is not positive")
    vis = abs(c1f) / c0f
    # first-order error propagation of |C1|/C0
    vis_err = vis * math.hypot(fit.errors[1] / max(abs(c1f), 1e-300), fit.errors[0] / c0f)
    fit.extra = {"visibility": vis, "visibility_error": vis_err, "reweight_passes": reweight}
    return vis, fit
