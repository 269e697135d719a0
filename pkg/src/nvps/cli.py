"""Command-line front end: presets for the decay, gated Rabi and g2 experiments.

Usage::

    nvps simulate-decay --config run.json --seed 1 --out out/
    nvps simulate-rabi --preset fig3 --seed 1 --set shots=200000
    nvps simulate-g2 --preset fig4 --seed 1 --set rabi_hz=[75e6]
    nvps report --decay-fit out/fit.json --g2-fit out/rabi_75MHz/fit.json
    nvps show-config --preset fig2

Every output file is a pure function of the resolved configuration and the
seed; ``--threads`` only changes wall time.

Exit codes: 0 ok, 2 configuration error, 3 runtime fault, 4 degenerate
analysis (nothing to fit).
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DegenerateFitError,
    FitResult,
    InsufficientDataError,
    coherence_summary,
    fit_exponential,
    fit_g2,
    g2_model,
    isc_difference,
    rabi_visibility,
)
from .correlate import EmptyStreamError, decay_histogram, g2_estimate
from .dynamics import TwoLevelParams
from .levelmodel import LevelModel, ModelValidationError, default_nv_model, validate
from .photostream import (
    DetectorConfig,
    PulseSequence,
    cw_resonant_stream,
    fs_pulse,
    gate_tradeoff,
    mw,
    pi_pulse,
    pump,
    record,
    run_rabi_sweeps,
    run_sequence,
    wait,
    write_binary,
    write_csv,
)
from .photostream.experiments import check_gate, expected_gated_photons, with_mw_duration
from .photostream.tags import header_lines
from .sequence import SequenceError, validate_sequence

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_DEGENERATE = 0, 2, 3, 4

_MODEL = {
    "t1_ms0": 12.0e-9,
    "t1_ms1": 7.8e-9,
    "isc0_fraction": 0.02,
    "singlet_lifetime": 300e-9,
    "singlet_branching": [0.8, 0.1, 0.1],
}
_DETECTOR = {"efficiency": 0.1, "dark_rate": 100.0, "jitter_sigma": 0.3e-9, "dead_time": 0.0}

PRESETS = {
    "fig2": {
        "command": "simulate-decay",
        "model": _MODEL,
        "detector": _DETECTOR,
        "shots": 1_000_000,
        "sequence": {"pump": 3e-6, "k_pump": 1e7, "wait": 1e-6, "p_exc": 1.0, "record": 100e-9},
        "histogram": {"bin_width": 1e-9, "range": 100e-9, "fit_start": 1e-9},
        "format": "csv",
    },
    "fig3": {
        "command": "simulate-rabi",
        "model": _MODEL,
        "detector": _DETECTOR,
        "shots": 2_000_000,
        "sequence": {"pump": 3e-6, "k_pump": 1e7, "wait": 1e-6, "p_exc": 1.0, "record": 150e-9},
        "mw": {"rabi_hz": 10e6, "durations": {"start": 0.0, "stop": 200e-9, "points": 25}},
        "gate": {"delay": 100e-9, "width": 10e-9},
        "tradeoff": {"start": 0.0, "stop": 140e-9, "points": 15},
        "format": "csv",
    },
    "fig4": {
        "command": "simulate-g2",
        "detector": _DETECTOR,
        "two_level": {"t1": 12e-9, "t2_star": 80e-9, "detuning": 0.0},
        "rabi_hz": [25e6, 50e6, 75e6],
        "duration": 0.5,
        "shelving": False,
        "model": _MODEL,
        "g2": {"tau_max": 160e-9, "bin_width": 0.2e-9, "method": "all-pairs-windowed"},
        "fit": {"instrument_response": True},
        "format": "binary-tags",
    },
}
DEFAULT_PRESET = {"simulate-decay": "fig2", "simulate-rabi": "fig3", "simulate-g2": "fig4"}


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# -- configuration ---------------------------------------------------------------


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_value(text: str):
    """JSON where possible (numbers, lists, true/null), else the raw string."""
    low = text.strip().lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        try:
            return float(text)
        except ValueError:
            return text


def apply_set(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError([f"--set expects key=value, got {assignment!r}"])
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        nxt = node.get(p)
        if not isinstance(nxt, dict):
            nxt = node[p] = {}
        node = nxt
    node[parts[-1]] = parse_value(value)


def resolve_config(command: str, config_path=None, preset=None, sets=(), seed=None) -> dict:
    """Preset, then config file, then ``--set`` overrides, then ``--seed``."""
    user = {}
    if config_path is not None:
        p = Path(config_path)
        if not p.is_file():
            raise ConfigError([f"config file not found: {p}"])
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config file is not valid JSON: {exc}"]) from None
        if not isinstance(user, dict):
            raise ConfigError(["config file must hold a JSON object"])
    name = preset or user.get("preset") or DEFAULT_PRESET.get(command)
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {sorted(PRESETS)}"])
    cfg = deep_merge(PRESETS[name], user)
    cfg["preset"] = name
    for s in sets:
        apply_set(cfg, s)
    if seed is not None:
        cfg["seed"] = seed
    return cfg


@dataclass
class RunConfig:
    raw: dict
    seed: int
    model: LevelModel
    detector: DetectorConfig
    out: Path
    fmt: str


_LEVEL_FIELDS = ("k_radiative", "k_isc0", "k_isc1", "k_singlet", "singlet_branching", "zero_field_splitting")


def build_model(section: dict) -> LevelModel:
    section = dict(section)
    unknown = set(section) - set(_MODEL) - set(_LEVEL_FIELDS)
    if unknown:
        raise ConfigError([f"model: unknown keys {sorted(unknown)}"])
    base = default_nv_model(**{k: section[k] for k in _MODEL if k in section})
    over = {k: section[k] for k in _LEVEL_FIELDS if k in section}
    if "singlet_branching" in over:
        over["singlet_branching"] = tuple(over["singlet_branching"])
    model = base.with_overrides(**over)
    bad = validate(model)
    if bad:
        raise ConfigError([f"model.{f}: {m}" for f, m in bad])
    return model


def _num(cfg, key, errors, positive=True, integer=False):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{key} must be a number")
        return None
    if integer and v != int(v):
        errors.append(f"{key} must be an integer")
    if positive and not v > 0:
        errors.append(f"{key} must be positive")
    return v


def run_config(cfg: dict, out) -> RunConfig:
    errors = []
    seed = cfg.get("seed")
    if seed is None:
        errors.append("seed is required (pass --seed or set it in the config)")
    elif isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**63:
        errors.append("seed must be a non-negative integer")
    fmt = cfg.get("format", "csv")
    if fmt not in ("csv", "binary-tags"):
        errors.append("format must be 'csv' or 'binary-tags'")
    try:
        model = build_model(cfg.get("model", {}))
    except ConfigError as exc:
        errors.extend(exc.violations)
        model = None
    except (TypeError, ValueError) as exc:
        errors.append(f"model: {exc}")
        model = None
    try:
        det = DetectorConfig.from_dict(cfg.get("detector", {}))
        errors.extend(f"detector.{f}: {m}" for f, m in det.violations())
    except TypeError as exc:
        errors.append(f"detector: {exc}")
        det = None
    if errors:
        raise ConfigError(errors)
    return RunConfig(cfg, int(seed), model, det, Path(out), fmt)


def _grid(section, name, errors) -> np.ndarray:
    if isinstance(section, list):
        return np.asarray(section, dtype=float)
    if isinstance(section, dict) and {"start", "stop", "points"} <= set(section):
        n = section["points"]
        if not isinstance(n, int) or n < 0:
            errors.append(f"{name}.points must be a non-negative integer")
            return np.empty(0)
        return np.linspace(float(section["start"]), float(section["stop"]), n)
    errors.append(f"{name} must be a list or {{start, stop, points}}")
    return np.empty(0)


def _shots(cfg, errors) -> int:
    n = cfg.get("shots")
    if isinstance(n, float) and n == int(n):
        n = int(n)
    if isinstance(n, bool) or not isinstance(n, int):
        errors.append("shots must be an integer")
        return 0
    if n <= 0:
        errors.append("shots must be positive")
    return n


def _base_segments(sq: dict, errors) -> list:
    try:
        return [pump(float(sq["pump"]), k_pump=float(sq["k_pump"])), wait(float(sq["wait"]))]
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"sequence: {exc}")
        return []


def _check_seq(seq, errors, label="sequence"):
    errors.extend(f"{label}.{f}: {m}" for f, m in validate_sequence(seq))


# -- output helpers ------------------------------------------------------------------


def _meta(rc: RunConfig, command: str, **extra) -> dict:
    return {"command": command, "config": rc.raw, "version": __version__, **extra}


def write_table(path, meta: dict, columns: dict) -> None:
    """CSV with a '#'-prefixed JSON header; floats written with repr for exact round trips."""
    buf = io.StringIO()
    buf.write(header_lines(meta))
    names = list(columns)
    buf.write(",".join(names) + "\n")
    cols = [np.asarray(columns[n]).tolist() for n in names]
    for row in zip(*cols):
        buf.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _jsonable(o):
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return "inf" if math.isinf(o) and o > 0 else o
    return o


# -- commands -----------------------------------------------------------------------


def cmd_simulate_decay(rc: RunConfig, threads: int = 1, plot: bool = False) -> dict:
    cfg = rc.raw
    errors = []
    shots = _shots(cfg, errors)
    sq = cfg.get("sequence", {})
    segs = _base_segments(sq, errors)
    h = cfg.get("histogram", {})
    for k in ("bin_width", "range"):
        _num(h, k, errors)
    if errors:
        raise ConfigError(errors)
    tail = [fs_pulse(p_exc=float(sq.get("p_exc", 1.0))), record(float(sq["record"]))]
    branches = {
        "ms0": PulseSequence(tuple(segs + tail), shots=shots),
        "ms1": PulseSequence(tuple(segs + [pi_pulse()] + tail), shots=shots),
    }
    for name, seq in branches.items():
        _check_seq(seq, errors, f"sequence[{name}]")
    if errors:
        raise ConfigError(errors)

    rc.out.mkdir(parents=True, exist_ok=True)
    hists, fits, counts = {}, {}, {}
    for k, (name, seq) in enumerate(branches.items()):
        stream = run_sequence(rc.model, seq, rc.detector, rc.seed, threads=threads, stream_id=k)
        if rc.fmt == "binary-tags":
            write_binary(stream, rc.out / f"tags_{name}.bin")
        hist = decay_histogram(stream, float(h["bin_width"]), float(h["range"]))
        hist.to_csv(rc.out / f"histogram_{name}.csv", _meta(rc, "simulate-decay", branch=name))
        hists[name] = hist
        counts[name] = int(len(stream))
        fits[name] = fit_exponential(hist, float(h.get("fit_start", 0.0)))

    tau0, tau1 = fits["ms0"]["tau"], fits["ms1"]["tau"]
    summary = {
        "tau_ms0": tau0,
        "tau_ms0_error": fits["ms0"].error("tau"),
        "tau_ms1": tau1,
        "tau_ms1_error": fits["ms1"].error("tau"),
        "counts_ms0": counts["ms0"],
        "counts_ms1": counts["ms1"],
        "count_ratio": counts["ms0"] / counts["ms1"] if counts["ms1"] else math.inf,
        "isc_difference": isc_difference(tau0, tau1),
        "fits": {k: f.to_dict() for k, f in fits.items()},
        "version": __version__,
        "config": rc.raw,
    }
    write_json(rc.out / "fit.json", summary)
    if plot:
        from .plotting import plot_decay
        plot_decay(hists, fits, rc.out / "decay.png")
    return summary


def cmd_simulate_rabi(rc: RunConfig, threads: int = 1, plot: bool = False) -> dict:
    cfg = rc.raw
    errors = []
    shots = _shots(cfg, errors)
    sq = cfg.get("sequence", {})
    segs = _base_segments(sq, errors)
    m = cfg.get("mw", {})
    rabi_hz = _num(m, "rabi_hz", errors)
    durations = _grid(m.get("durations"), "mw.durations", errors)
    if durations.size == 0 and not any(e.startswith("mw.durations") for e in errors):
        errors.append("mw.durations is empty")
    if np.any(durations < 0):
        errors.append("mw.durations must be >= 0")
    g = cfg.get("gate", {})
    _num(g, "delay", errors, positive=False)
    _num(g, "width", errors)
    delays = _grid(cfg.get("tradeoff", {"start": 0.0, "stop": 0.0, "points": 0}), "tradeoff", errors)
    if errors:
        raise ConfigError(errors)
    om = 2 * math.pi * float(rabi_hz)
    base = PulseSequence(tuple(segs + [mw(0.0, rabi=om), fs_pulse(p_exc=float(sq.get("p_exc", 1.0))),
                                       record(float(sq["record"]))]), shots=shots)
    _check_seq(base, errors)
    gate = (float(g["delay"]), float(g["width"]))
    try:
        check_gate(base, gate)
    except SequenceError as exc:
        errors.append(f"gate: {exc}")
    if errors:
        raise ConfigError(errors)

    rc.out.mkdir(parents=True, exist_ok=True)
    sweeps = run_rabi_sweeps(rc.model, base, durations, {"gated": gate, "ungated": None}, rc.detector,
                             rc.seed, om, threads=threads)
    results = {}
    for name, sw in sweeps.items():
        fname = "sweep.csv" if name == "gated" else "sweep_ungated.csv"
        write_table(rc.out / fname, _meta(rc, "simulate-rabi", gate=sw.gate, selection=name),
                    {"mw_duration_s": sw.durations, "counts": sw.counts, "error": sw.errors})
        vis, fit = rabi_visibility(sw)
        results[name] = (vis, fit)

    # noise-free reference: bright (no rotation) vs dark (pi rotation) expected photons
    s0 = with_mw_duration(base, 0.0, om)
    s1 = with_mw_duration(base, math.pi / om, om)

    def analytic(gt):
        n0, n1 = expected_gated_photons(rc.model, s0, gt), expected_gated_photons(rc.model, s1, gt)
        return (n0 - n1) / (n0 + n1)

    if delays.size:
        tr = gate_tradeoff(rc.model, base, delays, gate[1])
        write_table(rc.out / "gate_tradeoff.csv", _meta(rc, "simulate-rabi", gate_width_s=gate[1]),
                    {"gate_delay_s": tr.delays, "visibility": tr.visibility,
                     "bright_photons_per_shot": tr.bright, "dark_photons_per_shot": tr.dark})

    vg, vu = results["gated"][0], results["ungated"][0]
    summary = {
        "gated": vg,
        "gated_error": results["gated"][1].extra["visibility_error"],
        "ungated": vu,
        "ungated_error": results["ungated"][1].extra["visibility_error"],
        "ratio": vg / vu if vu else math.inf,
        "gate": {"delay_s": gate[0], "width_s": gate[1]},
        "analytic": {"gated": analytic(gate), "ungated": analytic(None)},
        "fits": {k: v[1].to_dict() for k, v in results.items()},
        "version": __version__,
        "config": rc.raw,
    }
    write_json(rc.out / "visibility.json", summary)
    if plot:
        from .plotting import plot_rabi
        plot_rabi(sweeps, {k: v[1] for k, v in results.items()}, rc.out / "rabi.png")
    return summary


def _mhz_label(hz: float) -> str:
    v = hz / 1e6
    return f"{v:g}MHz"


def cmd_simulate_g2(rc: RunConfig, threads: int = 1, plot: bool = False) -> dict:
    cfg = rc.raw
    errors = []
    tl = cfg.get("two_level", {})
    rabis = cfg.get("rabi_hz")
    if isinstance(rabis, (int, float)) and not isinstance(rabis, bool):
        rabis = [rabis]
    if not isinstance(rabis, list) or not rabis:
        errors.append("rabi_hz must be a number or a non-empty list")
        rabis = []
    elif not all(isinstance(r, (int, float)) and r > 0 for r in rabis):
        errors.append("rabi_hz values must be positive")
    _num(cfg, "duration", errors)
    gs = cfg.get("g2", {})
    _num(gs, "tau_max", errors)
    _num(gs, "bin_width", errors)
    if gs.get("method", "all-pairs-windowed") not in ("all-pairs-windowed", "start-stop"):
        errors.append("g2.method must be 'all-pairs-windowed' or 'start-stop'")
    params = []
    if not errors:
        for r in rabis:
            try:
                params.append(TwoLevelParams(float(tl.get("t1", 12e-9)), float(tl.get("t2_star", math.inf)),
                                             2 * math.pi * float(r), 2 * math.pi * float(tl.get("detuning", 0.0))))
            except (TypeError, ValueError) as exc:
                errors.append(f"two_level: {exc}")
                break
    if errors:
        raise ConfigError(errors)

    shelving = rc.model if cfg.get("shelving") else None
    jitter = rc.detector.jitter_sigma if cfg.get("fit", {}).get("instrument_response", True) else None
    rc.out.mkdir(parents=True, exist_ok=True)
    summary = {"runs": {}, "version": __version__, "config": rc.raw}
    curves, fits = {}, {}
    multi = len(params) > 1
    # outputs are named by Rabi frequency; the seed stream is the list position
    for k, (r, p) in enumerate(zip(rabis, params)):
        label = _mhz_label(r)
        d = rc.out / f"rabi_{label}" if multi else rc.out
        d.mkdir(parents=True, exist_ok=True)
        stream = cw_resonant_stream(p, float(cfg["duration"]), rc.detector, rc.seed + k, shelving=shelving)
        if rc.fmt == "binary-tags":
            write_binary(stream, d / "tags.bin")
        else:
            write_csv(stream, d / "tags.csv")
        curve = g2_estimate(stream, float(gs["tau_max"]), float(gs["bin_width"]),
                            method=gs.get("method", "all-pairs-windowed"))
        meta = _meta(rc, "simulate-g2", rabi_hz=r, n_tags=len(stream))
        curve.to_csv(d / "g2.csv", meta)
        fit = fit_g2(curve, p.t1, jitter_sigma=jitter)
        fit.extra["rabi_hz_nominal"] = r
        fit.extra["n_tags"] = len(stream)
        (d / "fit.json").write_text(fit.to_json())
        tau = np.linspace(0.0, float(gs["tau_max"]), 2001)
        t2s, om = fit["t2_star"], fit["omega"]
        cols = {"tau_s": tau, "closed_form": g2_model(tau, p.t1, t2s, om)}
        if jitter:
            cols["with_instrument_response"] = g2_model(tau, p.t1, t2s, om, jitter, curve.bin_width)
        write_table(d / "closed_form.csv", {**meta, "t2_star_s": t2s, "omega_rad_s": om}, cols)
        summary["runs"][label] = {"t2_star": t2s, "omega": om, "rabi_hz_fitted": om / (2 * math.pi),
                                  "g2_first_bin": float(curve.g2[0]), "n_tags": len(stream)}
        curves[label], fits[label] = curve, fit
    write_json(rc.out / "g2_summary.json", summary)
    if plot:
        from .plotting import plot_g2
        plot_g2(curves, fits, {l: p.t1 for l, p in zip(curves, params)}, jitter, rc.out / "g2.png")
    return summary


def _load_fit(path, what):
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"{what} fit file not found: {p}"])
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{what} fit file is not valid JSON: {exc}"]) from None


def _as_float(v):
    return math.inf if v == "inf" else float(v)


def cmd_report(out, decay_fit=None, g2_fit=None, t1=None, t2_star=None) -> dict:
    """Coherence figures of merit from fitted (or given) lifetime and dephasing time."""
    sources = {}
    errors = []
    if t1 is None:
        if decay_fit is None:
            errors.append("need a decay fit file (--decay-fit) or --t1")
        else:
            d = _load_fit(decay_fit, "decay")
            if "tau_ms0" not in d:
                errors.append(f"{decay_fit}: no tau_ms0 entry")
            else:
                t1 = _as_float(d["tau_ms0"])
                sources["t1"] = str(decay_fit)
    else:
        sources["t1"] = "given"
    if t2_star is None:
        if g2_fit is None:
            errors.append("need a g2 fit file (--g2-fit) or --t2-star")
        else:
            g = _load_fit(g2_fit, "g2")
            try:
                t2_star = _as_float(g["parameters"]["t2_star"])
                sources["t2_star"] = str(g2_fit)
            except (KeyError, TypeError, ValueError):
                errors.append(f"{g2_fit}: no parameters.t2_star entry")
    else:
        sources["t2_star"] = "given"
    if errors:
        raise ConfigError(errors)
    try:
        summary = coherence_summary(float(t1), float(t2_star))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    d = {**summary.to_dict(), "sources": sources, "version": __version__}
    write_json(out / "coherence_summary.json", d)
    return d


COMMANDS = {
    "simulate-decay": cmd_simulate_decay,
    "simulate-rabi": cmd_simulate_rabi,
    "simulate-g2": cmd_simulate_g2,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvps", description="Spin-selective photon emission simulator.")
    ap.add_argument("--version", action="version", version=f"nvps {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "show-config"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (merged over the preset)")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--seed", type=int)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config leaf, e.g. detector.efficiency=0.2")
        if name != "show-config":
            p.add_argument("--out", default=".", help="output directory")
            p.add_argument("--threads", type=int, default=1)
            p.add_argument("--plot", action="store_true", help="also render PNG figures")
    p = sub.add_parser("report")
    p.add_argument("--decay-fit")
    p.add_argument("--g2-fit")
    p.add_argument("--t1", type=parse_value)
    p.add_argument("--t2-star", type=parse_value)
    p.add_argument("--out", default=".")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            cmd_report(args.out, args.decay_fit, args.g2_fit, args.t1, args.t2_star)
            return EXIT_OK
        cfg = resolve_config(args.command, args.config, args.preset, args.set, args.seed)
        if args.command == "show-config":
            sys.stdout.write(json.dumps(_jsonable(cfg), indent=2, sort_keys=True) + "\n")
            return EXIT_OK
        want = PRESETS[cfg["preset"]]["command"]
        if want != args.command:
            raise ConfigError([f"preset {cfg['preset']!r} is for {want}, not {args.command}"])
        if args.threads < 1:
            raise ConfigError(["--threads must be >= 1"])
        rc = run_config(cfg, args.out)
        COMMANDS[args.command](rc, threads=args.threads, plot=args.plot)
        return EXIT_OK
    except (ConfigError, ModelValidationError) as exc:
        violations = getattr(exc, "violations", [str(exc)])
        for v in violations:
            sys.stderr.write(f"config error: {v if isinstance(v, str) else ': '.join(v)}\n")
        return EXIT_CONFIG
    except (DegenerateFitError, InsufficientDataError, EmptyStreamError) as exc:
        sys.stderr.write(f"degenerate analysis: {exc}\n")
        return EXIT_DEGENERATE
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime fault
        sys.stderr.write(f"runtime fault: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
