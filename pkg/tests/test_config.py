import json
import os

import numpy as np
import pandas as pd
import pytest

from src import TOOL_NAME, __version__
from src.config import CONFIG, artifact_config, config_hash, load_config, resolve_threads, section
from src.errors import HypothesisError, LabError, OutOfRangeError, require
from src.export import metadata, read_json, write_csv, write_json
from src.run_logger import RunLogger


def test_load_config_merges_over_defaults(tmp_path):
    p = tmp_path / "lab.yaml"
    p.write_text("certify:\n  c2: 6.0\nstft:\n  n_range: 20\n")
    cfg = load_config(p)
    assert cfg["certify"]["c2"] == 6.0
    assert cfg["certify"]["c_w12"] == CONFIG["certify"]["c_w12"]
    assert cfg["stft"]["n_range"] == 20 and cfg["stft"]["support_pad"] == 8.0
    assert CONFIG["certify"]["c2"] == 5.1812


def test_load_config_falls_back_to_defaults(tmp_path):
    assert load_config(tmp_path / "missing.yaml") == CONFIG
    p = tmp_path / "list.yaml"
    p.write_text("- 1\n- 2\n")
    assert load_config(p) == CONFIG
    assert section(None, "grid") is CONFIG["grid"]
    assert section({}, "grid") is CONFIG["grid"]


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("GIL_THREADS", "3")
    assert resolve_threads() == 3
    monkeypatch.setenv("GIL_THREADS", "0")
    assert resolve_threads() == (os.cpu_count() or 1)
    monkeypatch.delenv("GIL_THREADS")
    assert resolve_threads({"runtime": {"threads": 2}}) == 2


def test_config_hash_and_artifact_config():
    a = {"x": 1, "y": [1, 2]}
    b = {"y": [1, 2], "x": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"x": 2, "y": [1, 2]})
    assert config_hash({"bad": object()}) == "NA"
    conf = artifact_config()
    assert "runtime" not in conf and "certify" in conf
    m = metadata(None, "certify", a=2.0)
    assert m["tool"] == TOOL_NAME and m["version"] == __version__
    assert m["config_hash"] == config_hash(conf)


def test_write_csv_header_and_roundtrip(tmp_path):
    df = pd.DataFrame({"a": [1.0, 2.5], "ratio": [0.1, 0.2]})
    p = write_csv(df, tmp_path / "sub" / "t.csv", {"command": "sweep", "args": {"a": [1, 2]}})
    lines = p.read_text().splitlines()
    assert lines[0] == '# args={"a":[1,2]}'
    assert lines[1] == "# command=sweep"
    back = pd.read_csv(p, comment="#")
    assert back.equals(df)


def test_write_json_handles_numpy_and_nonfinite(tmp_path):
    payload = {"v": np.float64(1.5), "n": np.int64(3), "z": 1 + 2j, "arr": np.arange(3), "inf": float("inf"),
               "ok": np.bool_(True)}
    p = write_json(payload, tmp_path / "x.json", {"command": "t"})
    doc = read_json(p)
    assert doc["data"] == {"v": 1.5, "n": 3, "z": [1.0, 2.0], "arr": [0, 1, 2], "inf": "inf", "ok": True}
    assert doc["meta"]["command"] == "t"
    assert p.read_text().endswith("}\n")


def test_error_codes():
    with pytest.raises(LabError) as ei:
        require(False, "p_outside_[1,2]:3.0")
    assert str(ei.value) == "invalid_parameter:p_outside_[1,2]:3.0"
    e = HypothesisError("m=1<=sp+1=1", m=1)
    assert e.to_dict() == {"code": "hypothesis_violation", "detail": "m=1<=sp+1=1", "m": 1}
    o = OutOfRangeError("ratio_overflow", log_estimate=900.0)
    assert o.log_estimate == 900.0 and o.to_dict()["log_estimate"] == 900.0


def test_run_logger_dump(tmp_path):
    log = RunLogger(label="certify", log_dir=str(tmp_path))
    with log.section("work"):
        log.note("hello")
    with log.section("broken", swallow=True):
        raise ValueError("boom")
    log.add_failure("certify.l2", {"a": 1.0})
    log.add_meta(status=1)
    path = log.dump()
    text = open(path, encoding="utf-8").read()
    assert "hello" in text and "[FAIL] certify.l2" in text and "boom" in text
    manifest = json.loads((tmp_path / "metrics" / f"run_manifest_{log.run_id}.json").read_text())
    assert manifest["errors_count"] == 1 and manifest["failures_count"] == 1
    assert [p["name"] for p in manifest["phases"]] == ["work", "broken"]
    assert manifest["meta"]["status"] == 1
    assert "numpy" in manifest["env"]["packages"]


def test_run_logger_reraises_and_rotates(tmp_path, monkeypatch):
    monkeypatch.setenv("LAB_MAX_LOGS", "2")
    for i in range(4):
        log = RunLogger(label="escape", log_dir=str(tmp_path), run_id=f"r{i}")
        if i == 0:
            with pytest.raises(KeyError):
                with log.section("s"):
                    raise KeyError("x")
        log.dump()
    assert len(list((tmp_path / "logs").glob("*.log"))) == 2
    hist = json.loads((tmp_path / "metrics" / "run_history.json").read_text())
    assert [h["run_id"] for h in hist] == ["r0", "r1", "r2", "r3"]
