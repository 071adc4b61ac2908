# src/export.py
"""
Artifact writers. Every file starts with the tool/version/command/config block; nothing
time- or thread-dependent goes in, so identical configs give identical bytes.
"""
from __future__ import annotations
import json
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src import TOOL_NAME, __version__
from src.config import artifact_config, config_hash

FIELD_FLOAT_FORMAT = "%.17g"


def metadata(cfg: Optional[Dict[str, Any]], command: str, **extra: Any) -> Dict[str, Any]:
    conf = artifact_config(cfg)
    meta = {"tool": TOOL_NAME, "version": __version__, "command": command,
            "config": conf, "config_hash": config_hash(conf)}
    meta.update(extra)
    return meta


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def write_csv(df: pd.DataFrame, path: str | Path, meta: Dict[str, Any],
              float_format: Optional[str] = None) -> Path:
    """`# key=value` header lines, then the table; read back with pd.read_csv(path, comment="#")."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="") as f:
        for key in sorted(meta):
            val = meta[key]
            text = json.dumps(_jsonable(val), sort_keys=True, separators=(",", ":")) if isinstance(val, (dict, list)) else str(val)
            f.write(f"# {key}={text}\n")
        df.to_csv(f, index=False, float_format=float_format, lineterminator="\n")
    return p


def write_json(payload: Any, path: str | Path, meta: Dict[str, Any]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    doc = {"meta": _jsonable(meta), "data": _jsonable(payload)}
    with open(p, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return p


def read_json(path: str | Path) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
