import json
import math

import pytest

from nvps.cli import EXIT_CONFIG, EXIT_DEGENERATE, EXIT_OK, main

DECAY = ["simulate-decay", "--set", "shots=20000"]
RABI = ["simulate-rabi", "--set", "shots=20000", "--set", "gate.delay=20e-9", "--set", "gate.width=30e-9",
        "--set", "mw.durations.points=13"]
G2 = ["simulate-g2", "--set", "duration=0.05", "--set", "rabi_hz=[75e6]"]


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_simulate_decay_outputs(tmp_path):
    assert main(DECAY + ["--seed", "1", "--out", str(tmp_path)]) == EXIT_OK
    assert {"histogram_ms0.csv", "histogram_ms1.csv", "fit.json"} <= set(_files(tmp_path))
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert 9e-9 < fit["tau_ms0"] < 15e-9 and 6e-9 < fit["tau_ms1"] < 10e-9
    assert fit["count_ratio"] > 1
    assert fit["isc_difference"] == pytest.approx(1 / fit["tau_ms1"] - 1 / fit["tau_ms0"])
    assert fit["config"]["seed"] == 1
    head = (tmp_path / "histogram_ms0.csv").read_text().splitlines()
    assert head[0].startswith("#")


@pytest.mark.parametrize("argv", [DECAY, RABI], ids=["decay", "rabi"])
def test_output_is_independent_of_thread_count(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--seed", "2", "--out", str(a), "--threads", "1"]) == EXIT_OK
    assert main(argv + ["--seed", "2", "--out", str(b), "--threads", "3"]) == EXIT_OK
    assert _files(a) == _files(b)


def test_simulate_rabi_outputs(tmp_path):
    assert main(RABI + ["--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
    files = _files(tmp_path)
    assert {"sweep.csv", "sweep_ungated.csv", "gate_tradeoff.csv", "visibility.json"} <= set(files)
    v = json.loads(files["visibility.json"])
    assert v["analytic"]["gated"] > v["analytic"]["ungated"]
    assert v["ratio"] == pytest.approx(v["gated"] / v["ungated"])


def test_simulate_g2_outputs_and_report(tmp_path):
    argv = ["simulate-g2", "--set", "duration=0.05", "--set", "rabi_hz=[50e6, 75e6]", "--set", "format=csv"]
    assert main(argv + ["--seed", "4", "--out", str(tmp_path)]) == EXIT_OK
    files = _files(tmp_path)
    for sub in ("rabi_50MHz", "rabi_75MHz"):
        assert {f"{sub}/tags.csv", f"{sub}/g2.csv", f"{sub}/fit.json", f"{sub}/closed_form.csv"} <= set(files)
    assert "g2_summary.json" in files
    fit = json.loads(files["rabi_75MHz/fit.json"])
    assert fit["parameters"]["omega"] == pytest.approx(2 * math.pi * 75e6, rel=0.05)

    dec = tmp_path / "dec"
    assert main(DECAY + ["--seed", "1", "--out", str(dec)]) == EXIT_OK
    rep = tmp_path / "rep"
    assert main(["report", "--decay-fit", str(dec / "fit.json"), "--g2-fit", str(tmp_path / "rabi_75MHz/fit.json"),
                 "--out", str(rep)]) == EXIT_OK
    s = json.loads((rep / "coherence_summary.json").read_text())
    assert 0 < s["hom_depth"] <= 1
    assert s["sources"]["t1"].endswith("fit.json")


def test_report_from_values(tmp_path):
    assert main(["report", "--t1", "12e-9", "--t2-star", "80e-9", "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "coherence_summary.json").read_text())
    assert s["hom_depth"] == pytest.approx(0.76923, abs=1e-4)
    assert main(["report", "--t1", "12e-9", "--t2-star", "inf", "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "coherence_summary.json").read_text())
    assert s["fourier_product"] == pytest.approx(1 / (2 * math.pi), rel=1e-12)


def test_show_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"shots": 5, "detector": {"efficiency": 0.5}}))
    assert main(["show-config", "--preset", "fig2", "--config", str(cfg), "--set", "shots=7", "--seed", "9"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["shots"] == 7
    assert out["detector"]["efficiency"] == 0.5
    assert out["detector"]["dark_rate"] == 100.0
    assert out["seed"] == 9


@pytest.mark.parametrize("argv", [
    DECAY + ["--set", "shots=0", "--seed", "1"],
    DECAY,  # no seed
    ["simulate-decay", "--preset", "fig3", "--seed", "1"],
    DECAY + ["--set", "format=hdf5", "--seed", "1"],
    DECAY + ["--set", "detector.efficiency=2", "--seed", "1"],
    DECAY + ["--set", "model.t1_ms0=-1", "--seed", "1"],
    RABI + ["--set", "gate.delay=145e-9", "--seed", "1"],
    ["report", "--decay-fit", "/nonexistent/fit.json", "--t2-star", "1e-8"],
    ["report", "--t1", "12e-9"],
], ids=["zero-shots", "no-seed", "preset-mismatch", "format", "efficiency", "lifetime", "gate", "missing-file",
        "missing-t2"])
def test_configuration_errors_exit_2(tmp_path, argv, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_dark_only_run_is_degenerate(tmp_path, capsys):
    argv = DECAY + ["--set", "detector.efficiency=0", "--seed", "1", "--out", str(tmp_path)]
    assert main(argv) == EXIT_DEGENERATE
    assert "degenerate" in capsys.readouterr().err


def test_plot_adds_figures_without_changing_data(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(DECAY + ["--seed", "5", "--out", str(a)]) == EXIT_OK
    assert main(DECAY + ["--seed", "5", "--out", str(b), "--plot"]) == EXIT_OK
    fa, fb = _files(a), _files(b)
    pngs = [k for k in fb if k.endswith(".png")]
    assert pngs and all(fb[k][:8] == b"\x89PNG\r\n\x1a\n" for k in pngs)
    assert {k: v for k, v in fb.items() if not k.endswith(".png")} == fa
    c = tmp_path / "c"
    assert main(DECAY + ["--seed", "5", "--out", str(c), "--plot"]) == EXIT_OK
    assert _files(c) == fb


@pytest.mark.parametrize("argv", [RABI, G2], ids=["rabi", "g2"])
def test_plot_for_other_commands(tmp_path, argv):
    assert main(argv + ["--seed", "6", "--out", str(tmp_path), "--plot"]) == EXIT_OK
    assert any(p.suffix == ".png" for p in tmp_path.rglob("*"))
