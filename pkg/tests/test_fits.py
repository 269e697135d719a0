import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import curve_fit, least_squares

from nvps.analysis import (
    DegenerateFitError,
    FitError,
    FitResult,
    InsufficientDataError,
    fit_exponential,
    fit_g2,
    g2_model,
    levenberg_marquardt,
    rabi_visibility,
)
from nvps.analysis.fits import dominant_frequency, exp_model, response_kernel
from nvps.correlate import Histogram
from nvps.photostream.experiments import derive_rng

NS = 1e-9
T1 = 12e-9


def _hist(counts, width=1e-9):
    counts = np.asarray(counts)
    return Histogram(np.arange(counts.size + 1) * width, counts, 0, 0, 1)


def _curve(tau, g2, err, bw):
    return SimpleNamespace(tau=tau, g2=g2, errors=err, bin_width=bw)


# -- optimizer ---------------------------------------------------------------------


def _gauss_problem(seed):
    rng = derive_rng(seed)
    x = np.linspace(-5, 5, 80)
    y = 3.0 * np.exp(-0.5 * ((x - 0.7) / 1.3) ** 2) + 0.2 + rng.normal(0, 0.05, x.size)
    s = np.full(x.size, 0.05)

    def f(p):
        return p[0] * np.exp(-0.5 * ((x - p[1]) / p[2]) ** 2) + p[3]

    def resid(p):
        return (y - f(p)) / s

    def jac(p):
        a, m, w, _ = p
        e = np.exp(-0.5 * ((x - m) / w) ** 2)
        return -np.column_stack((e, a * e * (x - m) / w**2, a * e * (x - m) ** 2 / w**3, np.ones_like(x))) / s[:, None]

    return resid, jac


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_lm_agrees_with_scipy_least_squares(seed):
    resid, jac = _gauss_problem(seed)
    p0 = [2.0, 0.0, 1.0, 0.0]
    ours = levenberg_marquardt(resid, jac, p0)
    ref = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    assert ours.converged
    assert np.allclose(ours.params, ref.x, rtol=1e-6, atol=1e-9)
    ref_cov = np.linalg.inv(ref.jac.T @ ref.jac)
    assert np.allclose(ours.covariance, ref_cov, rtol=1e-4)


def test_lm_flags_non_convergence():
    resid, jac = _gauss_problem(0)
    res = levenberg_marquardt(resid, jac, [2.0, 0.0, 1.0, 0.0], max_iter=2)
    assert not res.converged


# -- exponential -------------------------------------------------------------------


@given(st.floats(5e-9, 30e-9), st.floats(10.0, 1e4), st.floats(0.0, 20.0), st.integers(0, 20))
def test_exponential_recovers_noiseless_parameters(tau, amp, bg, start):
    h = _hist(exp_model(_hist(np.zeros(100)).centers, amp, tau, bg))
    f = fit_exponential(h, fit_start=start * NS)
    assert f.converged
    assert f["tau"] == pytest.approx(tau, rel=1e-6)
    assert f["amplitude"] == pytest.approx(amp, rel=1e-6)
    assert f["background"] == pytest.approx(bg, abs=1e-6 * amp)
    assert np.all(f.errors >= 0)


def test_exponential_time_shift_equivariance():
    rng = derive_rng(1)
    c = rng.poisson(exp_model(np.arange(100) + 0.5, 800.0, 12.0, 3.0))
    a = fit_exponential(Histogram(np.arange(101) * NS, c, 0, 0, 1))
    shift = 17 * NS
    b = fit_exponential(Histogram(np.arange(101) * NS + shift, c, 0, 0, 1))
    assert b["tau"] == pytest.approx(a["tau"], rel=1e-9)
    assert b["background"] == pytest.approx(a["background"], rel=1e-9)
    assert b["amplitude"] == pytest.approx(a["amplitude"] * math.exp(shift / a["tau"]), rel=1e-9)


@pytest.mark.parametrize("seed", [3, 4])
def test_exponential_agrees_with_curve_fit(seed):
    t = np.arange(100) + 0.5
    c = derive_rng(seed).poisson(exp_model(t, 500.0, 8.0, 2.0)).astype(float)
    f = fit_exponential(_hist(c), fit_start=1 * NS)
    m = t >= 1
    popt, pcov = curve_fit(exp_model, t[m] - t[m][0], c[m], p0=[400, 10, 1], sigma=np.sqrt(np.maximum(c[m], 1)),
                           absolute_sigma=True, xtol=1e-14, ftol=1e-14)
    assert f["tau"] / NS == pytest.approx(popt[1], rel=1e-6)
    assert f.error("tau") / NS == pytest.approx(math.sqrt(pcov[1, 1]), rel=1e-4)


def test_exponential_needs_occupied_bins():
    c = np.zeros(50)
    c[[2, 7, 30]] = 1
    with pytest.raises(InsufficientDataError):
        fit_exponential(_hist(c))


# -- g2 ----------------------------------------------------------------------------


def _g2_data(t2s, om, bw=0.2e-9, tau_max=160e-9, jitter=0.0, noise=0.0, seed=0):
    tau = (np.arange(int(round(tau_max / bw))) + 0.5) * bw
    g = g2_model(tau, T1, t2s, om, jitter, bw if jitter else 0.0)
    err = np.full(tau.size, 0.01)
    if noise:
        g = g + derive_rng(seed).normal(0, noise, tau.size)
        err = np.full(tau.size, noise)
    return _curve(tau, g, err, bw)


@pytest.mark.parametrize("om_mhz", [25, 50, 75])
def test_g2_fit_recovers_noiseless_parameters(om_mhz):
    om = 2 * math.pi * om_mhz * 1e6
    f = fit_g2(_g2_data(80e-9, om), T1)
    assert f["t2_star"] == pytest.approx(80e-9, rel=1e-6)
    assert f["omega"] == pytest.approx(om, rel=1e-6)
    assert f.converged and f.grad_norm < 1e-6


def test_g2_fit_with_instrument_response():
    om = 2 * math.pi * 75e6
    c = _g2_data(80e-9, om, jitter=0.3e-9)
    f = fit_g2(c, T1, jitter_sigma=0.3e-9)
    assert f["t2_star"] == pytest.approx(80e-9, rel=1e-5)
    assert f["omega"] == pytest.approx(om, rel=1e-6)
    # ignoring the response mistakes the blur for dephasing
    assert fit_g2(c, T1)["t2_star"] < 0.9 * 80e-9


def test_g2_fit_is_idempotent():
    om = 2 * math.pi * 50e6
    c = _g2_data(60e-9, om, noise=0.03, seed=5)
    f1 = fit_g2(c, T1)
    refit = _curve(c.tau, g2_model(c.tau, T1, f1["t2_star"], f1["omega"]), c.errors, c.bin_width)
    f2 = fit_g2(refit, T1)
    assert f2["t2_star"] == pytest.approx(f1["t2_star"], rel=1e-9)
    assert f2["omega"] == pytest.approx(f1["omega"], rel=1e-9)


def test_g2_fit_without_dephasing_reports_infinite_t2_star():
    c = _g2_data(math.inf, 2 * math.pi * 50e6)
    f = fit_g2(c, T1)
    assert math.isinf(f["t2_star"]) or f["t2_star"] > 1e-3
    assert abs(f["dephasing_rate"]) < 1e-3 * 0.75 / T1
    d = json.loads(f.to_json())
    assert d["parameters"]["t2_star"] == "inf" or d["parameters"]["t2_star"] > 1e-3


def test_flat_g2_is_degenerate():
    tau = (np.arange(500) + 0.5) * 0.2e-9
    g = 1 + derive_rng(6).normal(0, 0.02, tau.size)
    with pytest.raises(DegenerateFitError):
        fit_g2(_curve(tau, g, np.full(tau.size, 0.02), 0.2e-9), T1)


def test_g2_needs_three_periods():
    c = _g2_data(80e-9, 2 * math.pi * 25e6, tau_max=100e-9)
    with pytest.raises(DegenerateFitError, match="periods"):
        fit_g2(c, T1)


def test_g2_fit_input_checks():
    c = _g2_data(80e-9, 2 * math.pi * 50e6)
    with pytest.raises(ValueError):
        fit_g2(c, 0.0)
    with pytest.raises(InsufficientDataError):
        fit_g2(_curve(c.tau[:5], c.g2[:5], c.errors[:5], c.bin_width), T1)


def test_response_kernel_weights_and_moments():
    off, w = response_kernel(0.3e-9, 0.2e-9)
    assert w.sum() == pytest.approx(1.0)
    assert off @ w == pytest.approx(0.0, abs=1e-12)
    var = (off**2) @ w
    assert var == pytest.approx(2 * 0.3**2 + 0.2**2 / 12, rel=1e-9)


def test_dominant_frequency():
    t = np.linspace(0, 200, 1000)
    assert dominant_frequency(t, np.cos(0.3 * t + 0.4)) == pytest.approx(0.3, rel=2e-3)


# -- Rabi visibility ---------------------------------------------------------------


def test_rabi_visibility_noiseless():
    om = 2 * math.pi * 10e6
    d = np.linspace(0, 200e-9, 25)
    counts = 1000.0 * (1 + 0.30 * np.cos(om * d))
    vis, f = rabi_visibility(SimpleNamespace(durations=d, counts=counts, mw_rabi=om))
    assert vis == pytest.approx(0.30, abs=1e-6)
    assert f["omega"] == pytest.approx(om, rel=1e-6)
    assert f.extra["visibility_error"] >= 0


def test_rabi_visibility_without_frequency_hint():
    om = 2 * math.pi * 10e6
    d = np.linspace(0, 400e-9, 60)
    counts = derive_rng(8).poisson(500 * (1 + 0.5 * np.cos(om * d + 0.3)))
    vis, _ = rabi_visibility(SimpleNamespace(durations=d, counts=counts))
    assert vis == pytest.approx(0.5, abs=0.05)


def test_rabi_visibility_errors():
    om = 2 * math.pi * 10e6
    with pytest.raises(InsufficientDataError):
        rabi_visibility(SimpleNamespace(durations=np.linspace(0, 1e-7, 4), counts=np.ones(4), mw_rabi=om))
    with pytest.raises(InsufficientDataError):
        rabi_visibility(SimpleNamespace(durations=np.linspace(0, 1e-7, 20), counts=np.ones(20), mw_rabi=om))
    with pytest.raises(DegenerateFitError):
        rabi_visibility(SimpleNamespace(durations=np.linspace(0, 4e-7, 20), counts=np.zeros(20), mw_rabi=om))
    # about one count per point: noise only
    sparse = derive_rng(9).poisson(1.0, 20)
    with pytest.raises(DegenerateFitError):
        rabi_visibility(SimpleNamespace(durations=np.linspace(0, 4e-7, 20), counts=sparse, mw_rabi=om))


# -- result container --------------------------------------------------------------


def test_fit_result_json_round_trip():
    h = _hist(exp_model(_hist(np.zeros(60)).centers, 100.0, 10e-9, 1.0))
    f = fit_exponential(h)
    f.extra = {"note": "x"}
    g = FitResult.from_dict(json.loads(f.to_json()))
    assert g.names == f.names and np.array_equal(g.values, f.values) and np.array_equal(g.errors, f.errors)
    assert (g.chi2, g.dof, g.converged, g.extra) == (f.chi2, f.dof, f.converged, f.extra)
    d = f.to_dict()
    assert d["covariance_diagonal"]["tau"] == pytest.approx(f.error("tau") ** 2)


def test_fit_error_carries_result():
    assert issubclass(DegenerateFitError, FitError) and issubclass(InsufficientDataError, FitError)
    e = FitError("x", result=1)
    assert e.result == 1
