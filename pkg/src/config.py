# -*- coding: utf-8 -*-
"""
config.py: lab defaults, YAML overrides, thread resolution
"""
from __future__ import annotations
import copy
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

try:
    import yaml
except Exception:
    yaml = None

CONF_PATH = Path("config") / "lab.yaml"

CONFIG: Dict[str, Any] = {
    # === Paths ===
    "paths": {
        "reports": "reports",
        "out": "reports/artifacts",
    },

    # === Sampling grid ===
    "grid": {
        "base_inv_step": 32,        # h = 1/(32 * 2^ceil(log2 max(a,1)))
        "x_pad": 6.0,               # x in [-2a-pad, 2a+pad]
        "y_half": 6.0,              # y in [-y_half, y_half]
        "richardson": True,
        "block_rows": 64,
    },

    # === Closed forms ===
    "analytic": {
        "singular_tol": 1e-14,
        "fd_step": 1e-5,
    },

    # === Reference quadrature (1-D, time domain) ===
    "quadrature": {
        "t_step": 2.0 ** -8,
        "t_pad": 8.0,
        "stft_t_step": 1.0 / 16,
    },

    # === Certificates ===
    "certify": {
        "pass_rtol": 1e-6,
        "c2": 5.1812,               # 1.05 * max dy_l2 / (a^2 e^{-pi a^2/2}) over a in [0.75, 3]
        "c_w12": 4.4399,            # 1.05 * max w12 * e^{1.5 a^2} over a in [0.75, 3]
        "k_envelope": 1.5,
        "logdomain_a": 8.0,
        "calibration_a": [0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0],
    },

    # === Rate sweep ===
    "sweep": {
        "a_min_exclusive": 0.5,
        "k_floor": 1.45,
        "k_ceiling": 1.65,
        "r2_floor": 0.999,
    },

    # === STFT frame ===
    "stft": {
        "x0": 1.0, "y0": 1.0, "s": 0.0, "p": 1.0,
        "n_range": 12, "k_range": 12,
        "quad_step": 1.0 / 64,
        "support_pad": 8.0,
    },

    # === Wavelet system ===
    "wavelet": {
        "alpha": 2.0, "beta": 0.5, "m": 3, "s": 1.0, "p": 1.0,
        "j_max": 14, "k_max": 64,
        "support_pad": 8.0,
        "quad_step": 1.0 / 64,
    },

    # === Penalty tails and calibration ===
    "penalty": {
        "tail_error_rel": 1e-6,
        "tail_warn_rel": 1e-8,
        "calibration_a": 2.0,
        "calibration_safety": 1.1,
        "coeff_floor": 1e-300,
    },

    # === Escape witness ===
    "escape": {
        "shift_pad": 4.0,
        "max_fraction": 1e-6,
        "box_half": 8.0,
        "box_step": 1.0 / 16,
    },

    # === Runtime ===
    "runtime": {
        "threads": 0,               # 0 = auto; GIL_THREADS overrides
    },
}

RUNTIME_ONLY = ("runtime",)


def _merge(base: Dict[str, Any], over: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: Optional[str | Path] = None) -> Dict[str, Any]:
    p = Path(path) if path else CONF_PATH
    if yaml is None or not p.exists():
        return copy.deepcopy(CONFIG)
    try:
        over = yaml.safe_load(p.read_text()) or {}
    except Exception:
        return copy.deepcopy(CONFIG)
    if not isinstance(over, dict):
        return copy.deepcopy(CONFIG)
    return _merge(CONFIG, over)


def section(cfg: Optional[Dict[str, Any]], name: str) -> Dict[str, Any]:
    return (cfg if cfg is not None else CONFIG).get(name, CONFIG[name])


def _getenv_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, "").strip())
    except Exception:
        return default


def resolve_threads(cfg: Optional[Dict[str, Any]] = None) -> int:
    n = _getenv_int("GIL_THREADS", int(section(cfg, "runtime").get("threads", 0)))
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def config_hash(obj: Any) -> str:
    try:
        b = json.dumps(obj, sort_keys=True).encode()
        return hashlib.sha1(b).hexdigest()
    except Exception:
        return "NA"


def artifact_config(cfg: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Resolved config as embedded in artifacts, minus the runtime section."""
    src = cfg if cfg is not None else CONFIG
    return {k: copy.deepcopy(v) for k, v in src.items() if k not in RUNTIME_ONLY}
