"""Reduction of tag streams: TCSPC decay histograms, gated counts and g2(tau)."""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .photostream.tags import TagStream, header_lines, read_header


class EmptyStreamError(ValueError):
    pass


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    total_shots: int
    meta: dict = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(self.counts)

    def to_csv(self, path, meta: dict | None = None) -> None:
        m = {"kind": "histogram", "underflow": self.underflow, "overflow": self.overflow,
             "total_shots": self.total_shots, "bin_width_s": float(self.bin_edges[1] - self.bin_edges[0]),
             **self.meta, **(meta or {})}
        _write_table(path, m, self.centers, self.counts, self.errors)


@dataclass
class G2Curve:
    tau: np.ndarray  # bin centers, s
    g2: np.ndarray
    errors: np.ndarray
    coincidences: np.ndarray
    rate: float
    duration: float
    bin_width: float
    method: str
    warnings: list = field(default_factory=list)

    def to_csv(self, path, meta: dict | None = None) -> None:
        m = {"kind": "g2", "rate_hz": self.rate, "duration_s": self.duration, "bin_width_s": self.bin_width,
             "method": self.method, "warnings": self.warnings, **(meta or {})}
        _write_table(path, m, self.tau, self.g2, self.errors)

    @classmethod
    def from_csv(cls, path) -> "G2Curve":
        text = Path(path).read_text()
        m = read_header(text)
        x, y, e = _read_table(text)
        return cls(x, y, e, np.full(x.size, np.nan), m["rate_hz"], m["duration_s"], m["bin_width_s"],
                   m["method"], m.get("warnings", []))


def _write_table(path, meta, x, y, e):
    buf = io.StringIO()
    buf.write(header_lines(meta))
    buf.write("bin_center_s,value,error\n")
    for a, b, c in zip(np.asarray(x, float).tolist(), np.asarray(y, float).tolist(), np.asarray(e, float).tolist()):
        buf.write(f"{a!r},{b!r},{c!r}\n")
    Path(path).write_text(buf.getvalue())


def _read_table(text):
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")][1:]
    arr = np.array([r.split(",") for r in rows], dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def _bin_index(x: np.ndarray, width: float) -> np.ndarray:
    # ties at an edge land in the upper bin
    return np.floor(x / width).astype(np.int64)


def decay_histogram(stream: TagStream, bin_width: float, range_: float) -> Histogram:
    """Histogram of (tag - sync) over all shots on ``[0, range_)``."""
    if not (bin_width > 0 and range_ > 0):
        raise ValueError("bin_width and range must be positive")
    if len(stream) == 0:
        raise EmptyStreamError("stream has no tags")
    nbins = int(round(range_ / bin_width))
    edges = np.arange(nbins + 1) * bin_width
    rel = stream.relative()
    idx = _bin_index(rel, bin_width)
    under = int(np.count_nonzero(idx < 0))
    over = int(np.count_nonzero(idx >= nbins))
    ok = (idx >= 0) & (idx < nbins)
    counts = np.bincount(idx[ok], minlength=nbins).astype(np.int64)
    if under + over == rel.size:
        warnings.warn("all tags fall outside the histogram range", stacklevel=2)
    return Histogram(edges, counts, under, over, stream.n_shots)


def gated_counts(stream: TagStream, delay: float, width: float) -> tuple[int, float]:
    """Tags with (tag - sync) in ``[delay, delay + width)`` and their Poisson error."""
    if delay < 0 or width < 0:
        raise ValueError("delay and width must be >= 0")
    rel = stream.relative()
    n = int(np.count_nonzero((rel >= delay) & (rel < delay + width)))
    return n, math.sqrt(n)


class PairCounter:
    """All-pairs coincidence counting inside a sliding ``tau_max`` window.

    Works on sorted timestamps by comparing each tag with its k-th successor
    for k = 1, 2, ... until no successor lies inside the window, so the cost
    is O(N * k_mean). ``pairs_examined`` counts every (i, i+k) comparison.
    """

    def __init__(self):
        self.pairs_examined = 0

    def count(self, t: np.ndarray, tau_max: float, bin_width: float) -> np.ndarray:
        nbins = int(round(tau_max / bin_width))
        hist = np.zeros(nbins, dtype=np.int64)
        # a tag whose k-th successor is outside the window is done for good
        active = np.arange(t.size)
        k = 1
        while active.size:
            active = active[active + k < t.size]
            d = t[active + k] - t[active]
            self.pairs_examined += d.size
            inside = d < tau_max
            active = active[inside]
            idx = _bin_index(d[inside], bin_width)
            hist += np.bincount(idx[idx < nbins], minlength=nbins)
            k += 1
        return hist


def brute_force_pairs(t: np.ndarray, tau_max: float, bin_width: float) -> np.ndarray:
    """Exhaustive O(N^2) reference for :class:`PairCounter`."""
    nbins = int(round(tau_max / bin_width))
    d = t[None, :] - t[:, None]
    d = d[np.triu_indices(t.size, 1)]
    d = d[(d >= 0) & (d < tau_max)]
    idx = _bin_index(d, bin_width)
    return np.bincount(idx[idx < nbins], minlength=nbins)


def start_stop_counts(t: np.ndarray, tau_max: float, bin_width: float) -> np.ndarray:
    nbins = int(round(tau_max / bin_width))
    d = np.diff(t)
    idx = _bin_index(d[d < tau_max], bin_width)
    return np.bincount(idx[idx < nbins], minlength=nbins)


def g2_estimate(stream: TagStream, tau_max: float, bin_width: float,
                method: str = "all-pairs-windowed", counter: PairCounter | None = None) -> G2Curve:
    """Normalized intensity autocorrelation of a cw stream for tau >= 0.

    Positive delays only are counted (the autocorrelation is symmetric).
    Counts are normalized by the expected uncorrelated coincidences,
    ``N^2 / T^2 * (T - tau) * bin_width``. The start-stop variant is also
    divided by the Poisson probability ``exp(-rate*tau)`` that no other tag
    intervened.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    if tau_max < 10 * bin_width * (1 - 1e-9):
        raise ValueError("tau_max must span at least 10 bins")
    if len(stream) == 0:
        raise EmptyStreamError("stream has no tags")
    t = np.sort(stream.tags)
    T = stream.duration
    n = t.size
    rate = n / T
    notes = []
    if method == "all-pairs-windowed":
        counts = (counter or PairCounter()).count(t, tau_max, bin_width)
    elif method == "start-stop":
        counts = start_stop_counts(t, tau_max, bin_width)
        if 1.0 / rate < 10 * tau_max:
            notes.append(
                f"start-stop bias regime: mean inter-tag time {1 / rate:.3g} s < 10*tau_max; "
                "pile-up correction is approximate"
            )
    else:
        raise ValueError(f"unknown method {method!r}")
    nbins = counts.size
    tau = (np.arange(nbins) + 0.5) * bin_width
    expected = rate * rate * np.clip(T - tau, 0.0, None) * bin_width
    if method == "start-stop":
        expected = expected * np.exp(-rate * tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = np.where(expected > 0, counts / expected, 0.0)
        err = np.where(expected > 0, np.sqrt(np.maximum(counts, 1)) / expected, np.inf)
    if notes:
        for msg in notes:
            warnings.warn(msg, stacklevel=2)
    return G2Curve(tau, g2, err, counts, rate, T, bin_width, method, notes)
