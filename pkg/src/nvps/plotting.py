"""Figures for the CLI ``--plot`` option.

Uses the object-oriented Agg API (no pyplot global state) and strips PNG
metadata so that identical data give identical bytes.
"""

from __future__ import annotations

import math

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .analysis.fits import damped_cosine, exp_model, g2_model

_META = {"Software": None}
NS = 1e-9


def _figure(nrows=1, ncols=1, size=(5.0, 3.6)):
    fig = Figure(figsize=size, dpi=120)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=_META)


def plot_decay(hists: dict, fits: dict, path) -> None:
    fig, ax = _figure()
    ax = ax[0, 0]
    styles = {"ms0": ("s", "C0", r"$m_S=0$"), "ms1": ("o", "C3", r"$m_S=\pm1$")}
    for name, h in hists.items():
        mk, col, lab = styles.get(name, ("o", None, name))
        c = h.counts
        ok = c > 0
        ax.semilogy(h.centers[ok] / NS, c[ok], mk, ms=3, mfc="none", color=col, label=lab)
        f = fits[name]
        t = h.centers
        ax.semilogy(t / NS, exp_model(t, f["amplitude"], f["tau"], f["background"]), "-", color=col, lw=1,
                    label=rf"$\tau$ = {f['tau'] / NS:.2f} ns")
    ax.set_xlabel("time after excitation (ns)")
    ax.set_ylabel("counts per bin")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def plot_rabi(sweeps: dict, fits: dict, path) -> None:
    fig, axes = _figure(1, 2, size=(8.0, 3.4))
    for ax, name in zip(axes[0], ("gated", "ungated")):
        sw, f = sweeps[name], fits[name]
        ax.errorbar(sw.durations / NS, sw.counts, yerr=sw.errors, fmt="o", ms=3,
                    mfc="k" if name == "gated" else "none", color="k")
        t = np.linspace(sw.durations[0], sw.durations[-1], 400)
        ax.plot(t / NS, damped_cosine(t, *f.values), "-", color="C0", lw=1)
        ax.set_title(f"{name}: visibility {f.extra['visibility']:.2f}", fontsize=9)
        ax.set_xlabel("MW pulse length (ns)")
    axes[0, 0].set_ylabel("detected photons")
    _save(fig, path)


def plot_g2(curves: dict, fits: dict, t1: dict, jitter, path) -> None:
    n = len(curves)
    fig, axes = _figure(n, 1, size=(5.0, 1.8 * n + 0.6))
    # lowest Rabi frequency at the bottom
    for ax, label in zip(axes[::-1, 0], curves):
        c, f = curves[label], fits[label]
        ax.plot(c.tau / NS, c.g2, ".", ms=2, color="0.4")
        tau = np.linspace(0.0, c.tau[-1], 1500)
        model = g2_model(tau, t1[label], f["t2_star"], f["omega"], jitter or 0.0, c.bin_width if jitter else 0.0)
        t2s = f["t2_star"]
        lab = "inf" if math.isinf(t2s) else f"{t2s / NS:.0f} ns"
        ax.plot(tau / NS, model, "-", color="C3", lw=1, label=rf"{label}, $T_2^*$ = {lab}")
        ax.axhline(1.0, color="0.7", lw=0.5)
        ax.legend(frameon=False, fontsize=8, loc="lower right")
        ax.set_ylabel(r"$g^{(2)}(\tau)$")
    axes[-1, 0].set_xlabel(r"$\tau$ (ns)")
    _save(fig, path)
