import argparse
import json

import pandas as pd
import pytest

from src.cli import _sweep_frame, build_parser, parse_a_range, parse_int_list, run, stability_growth_failures
from src.schemas import SweepSchema, validate
from src.instability_lab import log_stability_lower_bound
from src.export import read_json


def _io(tmp_path):
    return ["--out", str(tmp_path / "out"), "--log-dir", str(tmp_path / "reports")]


def test_parse_a_range():
    vals = parse_a_range("1:3:0.25")
    assert len(vals) == 9 and vals[0] == 1.0 and vals[-1] == 3.0
    assert parse_a_range("1:2:0.3") == [1.0, 1.3, 1.6, 1.9]
    assert parse_a_range("2:2:1") == [2.0]
    for bad in ("1:3", "3:1:0.5", "1:3:0", "a:b:c"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_a_range(bad)
    assert parse_int_list("1, 2,3") == [1, 2, 3]


def test_stability_growth_check_per_half_step(calibration_certs):
    a_rate = parse_a_range("1:3:0.25")
    lbs = {a: log_stability_lower_bound(calibration_certs[a]) for a in a_rate}
    assert stability_growth_failures(lbs, 1.45) == []
    flat = dict(lbs)
    flat[2.5] = flat[2.0] + 0.5
    fails = stability_growth_failures(flat, 1.45)
    assert [(f["a1"], f["a2"]) for f in fails] == [(2.0, 2.5)]
    assert fails[0]["log_floor"] == pytest.approx(1.45 * 2.25 - 0.6931471805599453)


def test_sweep_frame_columns(calibration_certs):
    certs = [calibration_certs[a] for a in parse_a_range("1:3:0.5")]
    df = validate(_sweep_frame(certs), SweepSchema)
    assert df["bound_fraction"].between(0.0, 1.0).all()
    expected = [log_stability_lower_bound(c) for c in certs]
    assert df["log_stability_ratio"].tolist() == pytest.approx(expected, rel=1e-15)
    assert df["log_stability_ratio"].is_monotonic_increasing


def test_bad_flags_exit_2(tmp_path):
    for argv in (["certify"], ["certify", "--a", "-1"], ["sweep", "--a-range", "3:1:0.5"], ["nope"]):
        with pytest.raises(SystemExit) as ei:
            run(argv + _io(tmp_path))
        assert ei.value.code == 2


def test_hypothesis_violation_exits_2(tmp_path):
    assert run(["frames-stft", "--m", "1", "--a-values", "2,3"] + _io(tmp_path)) == 2


def test_certify_writes_json(tmp_path):
    assert run(["certify", "--a", "2"] + _io(tmp_path)) == 0
    doc = read_json(tmp_path / "out" / "certificate_a2.json")
    assert doc["data"]["a"] == 2.0 and doc["data"]["pass_w12"] is True
    assert doc["meta"]["command"] == "certify"
    assert "runtime" not in doc["meta"]["config"]
    assert not (tmp_path / "out" / "failures.json").exists()
    hist = json.loads((tmp_path / "reports" / "metrics" / "run_history.json").read_text())
    assert hist[-1]["label"] == "certify" and hist[-1]["failures_count"] == 0


def test_certify_csv_format(tmp_path):
    argv = ["certify", "--a", "1", "--format", "csv", "--grid", "custom", "--grid-step", "0.0625"]
    assert run(argv + _io(tmp_path)) == 0
    df = pd.read_csv(tmp_path / "out" / "certificate_a1.csv", comment="#")
    assert len(df) == 1 and bool(df["pass_l2"].iloc[0])


def test_pair_demo_custom_grid(tmp_path):
    argv = ["pair-demo", "--a", "1", "--grid", "custom", "--grid-step", "0.25", "--x-half", "4", "--y-half", "3"]
    assert run(argv + _io(tmp_path)) == 0
    out = tmp_path / "out"
    plus = pd.read_csv(out / "pair_demo_plus.csv", comment="#")
    diff = pd.read_csv(out / "pair_demo_diff.csv", comment="#")
    assert len(plus) == 33 * 25
    assert list(plus.columns) == ["x", "y", "value"]
    assert (diff["value"] < 0).any() and (diff["value"] > 0).any()
    prof = pd.read_csv(out / "signal_profile.csv", comment="#")
    assert list(prof.columns) == ["t", "f_plus", "f_minus"]
    header = [l for l in (out / "pair_demo_plus.csv").read_text().splitlines() if l.startswith("#")]
    assert any(l.startswith("# field=plus") for l in header)


def test_escape_command(tmp_path):
    assert run(["escape", "--radius", "2", "--L", "1.5"] + _io(tmp_path)) == 0
    doc = read_json(tmp_path / "out" / "escape_r2.json")
    assert doc["data"]["shift"] == pytest.approx(6.0)
    assert doc["data"]["inside_fraction"] < 1e-6


def test_subspace_command(tmp_path):
    assert run(["subspace", "--k-values", "1,2", "--q", "0.5"] + _io(tmp_path)) == 0
    df = pd.read_csv(tmp_path / "out" / "subspace.csv", comment="#")
    assert df["dim"].tolist() == [3, 5]


def test_parser_lists_every_command():
    ap = build_parser()
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    assert set(sub.choices) == {"pair-demo", "certify", "sweep", "frames-stft", "frames-wavelet",
                                "escape", "subspace", "report"}


@pytest.mark.slow
def test_sweep_bytes_independent_of_threads(tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("GIL_THREADS", threads)
        d = tmp_path / f"t{threads}"
        assert run(["sweep", "--a-range", "1:1.5:0.25", "--out", str(d), "--log-dir", str(tmp_path / "reports")]) in (0, 1)
        outs.append(((d / "sweep.csv").read_bytes(), (d / "rate_fit.json").read_bytes()))
    assert outs[0] == outs[1]
    df = pd.read_csv(tmp_path / "t1" / "sweep.csv", comment="#")
    assert list(df.columns) == ["a", "measured_l2", "measured_w12", "bound_l2", "bound_w12",
                                "bound_fraction", "log_stability_ratio"]
    assert (df["bound_fraction"] <= 1.0).all()
    assert df["log_stability_ratio"].is_monotonic_increasing


@pytest.mark.slow
def test_frames_stft_command(tmp_path):
    assert run(["frames-stft", "--a-values", "2,3,4,6,8"] + _io(tmp_path)) == 0
    doc = read_json(tmp_path / "out" / "stft_report.json")
    assert doc["data"]["truncation_rel_change"] < 1e-8
    assert doc["data"]["order_slope"] <= doc["data"]["order_limit"]
