# src/run_logger.py
"""
Run logger for lab commands.

Features:
- Mirrors `logging` records of the `src` package into a per-run buffer.
- Records environment snapshot, section timings, exceptions with tracebacks, and failed checks.
- Snapshots RSS memory before/after when psutil is installed.
- Rotates logs/manifests to keep storage bounded.

Writes (under log_dir, default "reports"):
  logs/<label>_<run_id>.log
  metrics/run_manifest_<run_id>.json
  metrics/run_history.json (rolling)

Config via environment variables (all optional):
  LAB_MAX_LOGS=50          # keep this many *.log
  LAB_MAX_MANIFESTS=200    # keep this many manifests
  LAB_LOG_LEVEL=INFO       # level of the mirrored `src` logger
"""
from __future__ import annotations
import datetime as dt
import glob
import io
import json
import logging
import os
import platform
import sys
import time
import traceback
from contextlib import contextmanager
from typing import Any, Dict, List, Optional

try:
    import psutil
except Exception:
    psutil = None

from src import TOOL_NAME, __version__


def _getenv_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, "").strip())
    except Exception:
        return default


def _utc_stamp() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y%m%d_%H%M%S_%fZ")


def _rss_mb() -> Optional[float]:
    try:
        if psutil:
            return round(psutil.Process(os.getpid()).memory_info().rss / (1024 ** 2), 2)
    except Exception:
        pass
    return None


def _env_snapshot() -> Dict[str, Any]:
    snap = {
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "cwd": os.getcwd(),
        "tool": TOOL_NAME,
        "version": __version__,
        "packages": {},
    }
    for mod in ("numpy", "scipy", "pandas", "pandera", "yaml"):
        try:
            m = __import__(mod)
            snap["packages"][mod] = getattr(m, "__version__", "unknown")
        except Exception:
            pass
    return snap


def _rotate_dir(pattern: str, keep: int) -> None:
    try:
        files = sorted(glob.glob(pattern), key=lambda p: os.path.getmtime(p), reverse=True)
        for old in files[keep:]:
            try:
                os.remove(old)
            except Exception:
                pass
    except Exception:
        pass


class _BufferHandler(logging.Handler):
    def __init__(self, buf: io.StringIO):
        super().__init__()
        self.buf = buf
        self.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self.buf.write(self.format(record) + "\n")
        except Exception:
            pass


class RunLogger:
    """
    Collects one CLI run: sections, meta, failures, log records. `dump()` writes the
    log file, manifest and history entry and returns the log path.
    """

    def __init__(self, label: str = "run", log_dir: str = "reports", run_id: Optional[str] = None):
        self.label = label
        self.run_id = run_id or f"{label}_{_utc_stamp()}"
        self.log_dir = os.path.join(log_dir, "logs")
        self.met_dir = os.path.join(log_dir, "metrics")
        self.buf = io.StringIO()
        self.errors: List[Dict[str, Any]] = []
        self.failures: List[Dict[str, Any]] = []
        self.phases: List[Dict[str, Any]] = []
        self.kv: Dict[str, Any] = {}
        self.started_utc = dt.datetime.now(dt.timezone.utc).isoformat()
        self.pre_rss = _rss_mb()
        self.env = _env_snapshot()
        self.max_logs = _getenv_int("LAB_MAX_LOGS", 50)
        self.max_manifests = _getenv_int("LAB_MAX_MANIFESTS", 200)

        self._handler = _BufferHandler(self.buf)
        self._logger = logging.getLogger("src")
        self._prev_level = self._logger.level
        self._logger.addHandler(self._handler)
        self._logger.setLevel(os.getenv("LAB_LOG_LEVEL", "INFO").upper())

        os.makedirs(self.log_dir, exist_ok=True)
        os.makedirs(self.met_dir, exist_ok=True)

    @contextmanager
    def section(self, name: str, swallow: bool = False):
        t0 = time.time()
        self._write(f"\n=== [SECTION START] {name} ===\n")
        err = None
        try:
            yield
        except Exception as e:
            err = repr(e)
            tb = traceback.format_exc()
            self._write("\n--- EXCEPTION (section) ---\n" + tb + "\n")
            self.errors.append({"section": name, "error": err, "traceback": tb})
            if not swallow:
                raise
        finally:
            t1 = time.time()
            self.phases.append({"name": name, "secs": round(t1 - t0, 3), "error": err})
            self._write(f"=== [SECTION END] {name} ({round(t1 - t0, 3)}s) ===\n")

    def add_meta(self, **kwargs: Any) -> None:
        self.kv.update(kwargs or {})

    def add_failure(self, check: str, detail: Any = None, **extra: Any) -> None:
        row = {"check": check, "detail": detail}
        row.update(extra)
        self.failures.append(row)
        self._write(f"[FAIL] {check}: {detail}\n")

    def note(self, msg: str) -> None:
        self._write(msg.rstrip("\n") + "\n")

    def _write(self, s: str) -> None:
        try:
            self.buf.write(s)
        except Exception:
            pass

    def close(self) -> None:
        self._logger.removeHandler(self._handler)
        self._logger.setLevel(self._prev_level)

    def dump(self) -> str:
        self.close()
        post_rss = _rss_mb()
        summary = {
            "run_id": self.run_id,
            "label": self.label,
            "started_utc": self.started_utc,
            "ended_utc": dt.datetime.now(dt.timezone.utc).isoformat(),
            "errors_count": len(self.errors),
            "failures_count": len(self.failures),
            "phases": self.phases,
            "rss_mb": {"pre": self.pre_rss, "post": post_rss},
            "env": self.env,
            "meta": self.kv,
            "failures": self.failures,
        }
        manifest_path = os.path.join(self.met_dir, f"run_manifest_{self.run_id}.json")
        with open(manifest_path, "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, default=str)

        hist_path = os.path.join(self.met_dir, "run_history.json")
        try:
            with open(hist_path, encoding="utf-8") as f:
                hist = json.load(f)
        except Exception:
            hist = []
        hist.append({k: summary[k] for k in ("run_id", "label", "started_utc", "ended_utc", "errors_count", "failures_count")})
        with open(hist_path, "w", encoding="utf-8") as f:
            json.dump(hist[-200:], f, indent=2)

        log_path = os.path.join(self.log_dir, f"{self.label}_{self.run_id}.log")
        with open(log_path, "w", encoding="utf-8") as f:
            f.write(self.buf.getvalue())
            f.write("\n\n=== SUMMARY JSON ===\n")
            f.write(json.dumps(summary, indent=2, default=str))
            if self.errors:
                f.write("\n--- ERROR LIST ---\n")
                for i, e in enumerate(self.errors, 1):
                    f.write(json.dumps({"i": i, **e}, indent=2) + "\n")

        _rotate_dir(os.path.join(self.log_dir, "*.log"), self.max_logs)
        _rotate_dir(os.path.join(self.met_dir, "run_manifest_*.json"), self.max_manifests)
        return log_path
