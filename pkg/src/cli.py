# src/cli.py
"""
Command-line front end.

  python -m src.cli pair-demo --a 2
  python -m src.cli certify --a 2
  python -m src.cli sweep --a-range 1:3:0.25
  python -m src.cli frames-stft | frames-wavelet | escape --radius 2 | subspace --k-values 1,2,3 --q 0.5
  python -m src.cli report

Exit status: 0 when every embedded check passes, 1 with <out>/failures.json otherwise,
2 for usage errors and violated hypotheses.
"""
from __future__ import annotations
import argparse
import dataclasses
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src import analytic_gabor as ag
from src import frames as fr
from src import instability_lab as lab
from src import schemas
from src.config import load_config, resolve_threads, section
from src.core_signals import GaussianMixture, make_pair, quotient_distance, signal_profile
from src.errors import HypothesisError, InvalidParameterError, LabError
from src.export import FIELD_FLOAT_FORMAT, metadata, write_csv, write_json
from src.numeric_transform import GridSpec, MagnitudeField, sample_pair_fields
from src.run_logger import RunLogger

RANGE_TOL = 1e-12
PLUMBING_ARGS = ("out", "log_dir", "config", "format", "handler")

Failures = List[Dict[str, Any]]


# ---------- argument parsing ----------

def parse_a_range(text: str) -> List[float]:
    """'start:stop:step', both endpoints included within 1e-12."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"a-range must be start:stop:step, got {text!r}")
    if not (step > 0 and stop >= start):
        raise argparse.ArgumentTypeError(f"a-range needs step > 0 and stop >= start, got {text!r}")
    n = int(math.floor((stop - start) / step + RANGE_TOL))
    return [round(start + i * step, 12) for i in range(n + 1)]


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", choices=("default", "custom"), default="default")
    p.add_argument("--grid-step", type=_positive, default=None, help="node spacing for --grid custom")
    p.add_argument("--x-half", type=_positive, default=None, help="half width in x for --grid custom")
    p.add_argument("--y-half", type=_positive, default=None, help="half width in y for --grid custom")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gabor-instability-lab",
                                 description="Instability certificates for Gabor phase retrieval on Gaussian pairs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default: config paths.out)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--config", default=None, help="YAML overrides (default: config/lab.yaml)")
    common.add_argument("--log-dir", default=None, help="RunLogger root (default: config paths.reports)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pair-demo", parents=[common], help="field dumps of |V f_a^+|, |V f_a^-| and their difference")
    p.add_argument("--a", type=_positive, default=2.0)
    p.add_argument("--profile-a", type=_positive, default=5.0)
    _add_grid_flags(p)
    p.set_defaults(handler=cmd_pair_demo)

    p = sub.add_parser("certify", parents=[common], help="bound certificate for one a")
    p.add_argument("--a", type=_positive, required=True)
    _add_grid_flags(p)
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser("sweep", parents=[common], help="certificates over an a-range plus the rate fit")
    p.add_argument("--a-range", type=parse_a_range, required=True)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("frames-stft", parents=[common], help="STFT penalties and their pair difference")
    for flag in ("--x0", "--y0"):
        p.add_argument(flag, type=_positive, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n-range", type=int, default=None)
    p.add_argument("--k-range", type=int, default=None)
    p.add_argument("--a-values", type=parse_float_list, default=[2.0, 3.0, 4.0, 6.0, 8.0])
    p.set_defaults(handler=cmd_frames_stft)

    p = sub.add_parser("frames-wavelet", parents=[common], help="Hermite-wavelet penalties and decay checks")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--j-max", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--a-values", type=parse_float_list, default=[2.0, 3.0, 4.0, 6.0])
    p.set_defaults(handler=cmd_frames_wavelet)

    p = sub.add_parser("escape", parents=[common], help="non-compactness witness")
    p.add_argument("--radius", type=_positive, default=2.0)
    p.add_argument("--L", type=_positive, default=1.0)
    p.set_defaults(handler=cmd_escape)

    p = sub.add_parser("subspace", parents=[common], help="per-H_k dimension, conditioning and stability bound")
    p.add_argument("--k-values", type=parse_int_list, default=[1, 2, 3, 4])
    p.add_argument("--q", type=_positive, default=0.5)
    p.set_defaults(handler=cmd_subspace)

    p = sub.add_parser("report", parents=[common], help="full verification battery into one JSON report")
    p.add_argument("--points", type=int, default=10_000, help="quasi-random points per a in the pointwise suite")
    p.set_defaults(handler=cmd_report)
    return ap


# ---------- helpers ----------

def _grid_for(args: argparse.Namespace, a: float, cfg: dict) -> GridSpec:
    if getattr(args, "grid", "default") == "default":
        return GridSpec.default_for(a, cfg)
    g = section(cfg, "grid")
    step = args.grid_step or GridSpec.default_step(a, cfg)
    return GridSpec.box(args.x_half or 2.0 * a + float(g["x_pad"]), args.y_half or float(g["y_half"]), step)


def _meta(args: argparse.Namespace, cfg: dict, **extra: Any) -> Dict[str, Any]:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in PLUMBING_ARGS and k != "command"}
    return metadata(cfg, args.command, args=params, **extra)


def _say(tag: str, msg: str) -> None:
    print(f"[{tag}] {msg}")


def _field_frame(f: MagnitudeField, values: Optional[np.ndarray] = None) -> pd.DataFrame:
    df = f.to_frame()
    if values is not None:
        df["value"] = values.ravel()
    return df


# ---------- commands ----------

def cmd_pair_demo(args, cfg, out: Path, log: RunLogger) -> Failures:
    a = args.a
    grid = _grid_for(args, a, cfg)
    plus, minus = sample_pair_fields(a, grid, workers=resolve_threads(cfg), cfg=cfg)
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    g = ag.pair_gap(a, X, Y)
    diff = g["gap"] * np.exp(g["log_scale"])
    meta = _meta(args, cfg, grid=grid.to_dict())
    for name, df, nonneg in (("plus", _field_frame(plus), True), ("minus", _field_frame(minus), True),
                             ("diff", _field_frame(plus, diff), False)):
        df = schemas.validate(df, schemas.field_schema(False, nonneg))
        path = write_csv(df, out / f"pair_demo_{name}.csv", dict(meta, field=name), float_format=FIELD_FLOAT_FORMAT)
        _say("pair-demo", f"wrote {path}")
    t = np.linspace(-10.0, 10.0, 2001)
    fp, fm = signal_profile(args.profile_a, t)
    prof = schemas.validate(pd.DataFrame({"t": t, "f_plus": fp, "f_minus": fm}), schemas.ProfileSchema)
    write_csv(prof, out / "signal_profile.csv", dict(meta, profile_a=args.profile_a))
    return []


def _write_certificate(args, cfg, out: Path, cert: lab.BoundCertificate) -> Path:
    meta = _meta(args, cfg)
    if args.format == "csv":
        row = {k: v for k, v in cert.to_dict().items() if k != "grid"}
        return write_csv(pd.DataFrame([row]), out / f"certificate_a{cert.a:g}.csv", meta)
    return write_json(cert.to_dict(), out / f"certificate_a{cert.a:g}.json", meta)


def cmd_certify(args, cfg, out: Path, log: RunLogger) -> Failures:
    cert = lab.certify(args.a, _grid_for(args, args.a, cfg), cfg=cfg)
    path = _write_certificate(args, cfg, out, cert)
    _say("certify", f"a={args.a:g} pass={cert.passed} -> {path}")
    return cert.failures()


def _sweep_frame(certs: Sequence[lab.BoundCertificate]) -> pd.DataFrame:
    return pd.DataFrame([{
        "a": c.a, "measured_l2": c.measured_l2, "measured_w12": c.measured_w12,
        "bound_l2": c.bound_l2, "bound_w12": c.bound_w12,
        "bound_fraction": c.measured_w12 / c.bound_w12 if c.bound_w12 > 0 else 0.0,
        "log_stability_ratio": lab.log_stability_lower_bound(c),
    } for c in certs])


def cmd_sweep(args, cfg, out: Path, log: RunLogger) -> Failures:
    a_values = lab.check_sweep_values(args.a_range, cfg)
    with log.section("sweep"):
        certs = lab.sweep(a_values, cfg=cfg)
    fit = lab.sweep_rate(a_values, cfg=cfg, certificates=certs)
    meta = _meta(args, cfg)
    df = schemas.validate(_sweep_frame(certs), schemas.SweepSchema)
    write_csv(df, out / "sweep.csv", meta)
    write_json(fit.to_dict(), out / "rate_fit.json", meta)
    _say("sweep", f"{len(certs)} a-values k_hat={fit.k_hat:.5f} r2={fit.r_squared:.6f}")
    fails = [f for c in certs for f in c.failures()]
    if not lab.rate_fit_ok(fit, cfg):
        fails.append({"check": "sweep.rate_fit", "k_hat": fit.k_hat, "r_squared": fit.r_squared})
    return fails


def _stft_spec(args, cfg) -> fr.StftFrameSpec:
    return fr.StftFrameSpec.from_config(cfg, x0=args.x0, y0=args.y0, s=args.s, p=args.p,
                                        n_range=args.n_range, k_range=args.k_range)


def stft_checks(spec: fr.StftFrameSpec, m: int, a_values: Sequence[float], cfg: dict) -> Dict[str, Any]:
    phi = GaussianMixture.gaussian()
    base = fr.stft_penalty(phi, spec, cfg)
    wider = fr.stft_penalty(phi, dataclasses.replace(spec, n_range=spec.n_range + 4, k_range=spec.k_range + 4), cfg)
    rel = abs(wider.value - base.value) / base.value
    reports = [fr.stft_penalty_difference(a, spec, m, cfg=cfg) for a in a_values]
    slope = None
    if len(a_values) >= 4:
        slope = fr.loglog_slope(1.0 + np.asarray(a_values), [r.difference for r in reports])
    order_limit = spec.s * spec.p - m + 1 + 0.5
    fails: Failures = []
    if rel >= 1e-8:
        fails.append({"check": "stft.truncation_stability", "rel_change": rel})
    fails += [{"check": "stft.penalty_difference", "a": r.a, "difference": r.difference, "bound": r.envelope_bound}
              for r in reports if not r.passed]
    if slope is not None and slope > order_limit:
        fails.append({"check": "stft.order", "slope": slope, "limit": order_limit})
    return {"spec": spec.to_dict(), "m": m, "penalty_phi": base.value, "tail_phi": base.tail,
            "truncation_rel_change": rel, "reports": [r.to_dict() for r in reports],
            "order_slope": slope, "order_limit": order_limit, "failures": fails}


def cmd_frames_stft(args, cfg, out: Path, log: RunLogger) -> Failures:
    spec = _stft_spec(args, cfg)
    res = stft_checks(spec, args.m, args.a_values, cfg)
    meta = _meta(args, cfg)
    coeffs = schemas.validate(fr.stft_coefficient_frame(GaussianMixture.gaussian(), spec), schemas.StftCoeffSchema)
    write_csv(coeffs, out / "stft_coefficients.csv", meta)
    write_json(res, out / "stft_report.json", meta)
    _say("frames-stft", f"penalty(phi)={res['penalty_phi']:.12g} order_slope={res['order_slope']}")
    return res["failures"]


def _wavelet_spec(args, cfg) -> fr.WaveletSpec:
    return fr.WaveletSpec.from_config(cfg, alpha=args.alpha, beta=args.beta, m=args.m, s=args.s, p=args.p,
                                      j_max=args.j_max, k_max=args.k_max)


def wavelet_checks(spec: fr.WaveletSpec, a_values: Sequence[float], cfg: dict,
                   penalty_spec: Optional[fr.WaveletSpec] = None) -> Dict[str, Any]:
    pspec = penalty_spec or spec
    phi = GaussianMixture.gaussian()
    fails: Failures = []
    pen = fr.besov_penalty(phi, spec, cfg)
    k_slope = fr.decay_slope(0, [4, 8, 16, 32], spec, cfg)
    j_slope = fr.level_decay_slope(2, [4, 5, 6, 7, 8], spec, cfg)
    if k_slope > -(spec.m + 1) + 0.3:
        fails.append({"check": "wavelet.k_decay", "slope": k_slope})
    if j_slope > -(spec.m + 0.5) + 0.3:
        fails.append({"check": "wavelet.j_decay", "slope": j_slope})
    taylor = {}
    for w in (2.0, 4.0):
        ratio, bound, ok = fr.taylor_remainder_ratio(w, spec.m)
        taylor[f"w={w:g}"] = {"ratio": ratio, "bound": bound, "ok": ok}
        if not ok:
            fails.append({"check": "wavelet.taylor", "w": w, "ratio": ratio, "bound": bound})
    reports, slope = [], None
    if 2 * pspec.m - pspec.sigma * pspec.p + 1.5 > 0:
        reports = [fr.wavelet_penalty_difference(a, pspec, cfg=cfg) for a in a_values]
        fails += [{"check": "wavelet.penalty_difference", "a": r.a, "difference": r.difference,
                   "bound": r.envelope_bound} for r in reports if not r.passed]
        if len(a_values) >= 4:
            slope = fr.loglog_slope(a_values, [r.difference for r in reports])
            if slope > -pspec.m + 0.5:
                fails.append({"check": "wavelet.order", "slope": slope, "limit": -pspec.m + 0.5})
    return {"spec": spec.to_dict(), "penalty_spec": pspec.to_dict(), "penalty_phi": pen.value, "tail_phi": pen.tail,
            "k_slope": k_slope, "j_slope": j_slope, "taylor": taylor,
            "reports": [r.to_dict() for r in reports], "order_slope": slope,
            "quotient_distance": quotient_distance(*make_pair(a_values[0])) if a_values else None,
            "failures": fails}


def cmd_frames_wavelet(args, cfg, out: Path, log: RunLogger) -> Failures:
    spec = _wavelet_spec(args, cfg)
    res = wavelet_checks(spec, args.a_values, cfg)
    meta = _meta(args, cfg)
    coeffs = schemas.validate(fr.wavelet_coefficient_frame(GaussianMixture.gaussian(), spec), schemas.WaveletCoeffSchema)
    write_csv(coeffs, out / "wavelet_coefficients.csv", meta)
    write_json(res, out / "wavelet_report.json", meta)
    _say("frames-wavelet", f"penalty(phi)={res['penalty_phi']:.12g} k_slope={res['k_slope']:.3f} j_slope={res['j_slope']:.3f}")
    return res["failures"]


def cmd_escape(args, cfg, out: Path, log: RunLogger) -> Failures:
    e = lab.escape_energy(args.radius, args.L, cfg)
    payload = {k: v for k, v in e.items() if k != "signal"}
    payload["signal"] = e["signal"].to_list()
    write_json(payload, out / f"escape_r{args.radius:g}.json", _meta(args, cfg))
    _say("escape", f"radius={args.radius:g} shift={e['shift']:g} inside={e['inside_fraction']:.3e}")
    limit = float(section(cfg, "escape")["max_fraction"])
    if e["inside_fraction"] >= limit:
        return [{"check": "escape.inside_fraction", "radius": args.radius, "fraction": e["inside_fraction"]}]
    return []


def cmd_subspace(args, cfg, out: Path, log: RunLogger) -> Failures:
    df = schemas.validate(lab.subspace_profile(args.k_values, args.q, cfg), schemas.SubspaceSchema)
    write_csv(df, out / "subspace.csv", _meta(args, cfg))
    _say("subspace", f"k={args.k_values} q={args.q:g}")
    return []


def stability_growth_failures(log_bounds: Dict[float, float], k_floor: float) -> Failures:
    """Consecutive half-integer a values whose log stability bound grows by less than k_floor*(a2^2-a1^2) - ln 2."""
    half = sorted(a for a in log_bounds if float(2 * a).is_integer())
    fails: Failures = []
    for a1, a2 in zip(half, half[1:]):
        floor = k_floor * (a2 * a2 - a1 * a1) - math.log(2.0)
        growth = log_bounds[a2] - log_bounds[a1]
        if growth < floor:
            fails.append({"check": "rate.stability_growth", "a1": a1, "a2": a2,
                          "log_growth": growth, "log_floor": floor})
    return fails


def cmd_report(args, cfg, out: Path, log: RunLogger) -> Failures:
    fails: Failures = []
    rep: Dict[str, Any] = {}
    with log.section("quotient"):
        q = {f"{a:g}": quotient_distance(*make_pair(a)) for a in (0.5, 1.0, 2.0, 4.0, 8.0)}
        rep["quotient_distance"] = q
        fails += [{"check": "quotient", "a": k, "value": v} for k, v in q.items()
                  if abs(v - lab.QUOTIENT_PAIR) > 1e-12 * lab.QUOTIENT_PAIR]
    with log.section("certificates"):
        certs = lab.sweep(section(cfg, "certify")["calibration_a"], cfg=cfg)
        rep["certificates"] = [c.to_dict() for c in certs]
        fails += [f for c in certs for f in c.failures()]
    with log.section("rate"):
        a_rate = parse_a_range("1:3:0.25")
        rate_certs = lab.sweep(a_rate, cfg=cfg)
        fits = {w: lab.sweep_rate(a_rate, cfg=cfg, which=w, certificates=rate_certs) for w in ("w12", "l2")}
        rep["rate_fit"] = {w: f.to_dict() for w, f in fits.items()}
        if not lab.rate_fit_ok(fits["w12"], cfg):
            fails.append({"check": "rate.w12", "k_hat": fits["w12"].k_hat, "r_squared": fits["w12"].r_squared})
        if fits["l2"].k_hat < float(section(cfg, "sweep")["k_floor"]):
            fails.append({"check": "rate.l2", "k_hat": fits["l2"].k_hat})
        lbs = dict(zip(a_rate, (lab.log_stability_lower_bound(c) for c in rate_certs)))
        rep["log_stability_lower_bound"] = {f"{a:g}": v for a, v in lbs.items()}
        vals = list(lbs.values())
        if any(b <= a for a, b in zip(vals, vals[1:])):
            fails.append({"check": "rate.stability_monotone"})
        fails += stability_growth_failures(lbs, float(section(cfg, "sweep")["k_floor"]))
    with log.section("pointwise"):
        rep["pointwise"] = [lab.pointwise_suite(a, args.points, cfg=cfg) for a in (0.5, 1.0, 2.0, 3.0)]
        rep["derivatives"] = [lab.derivative_agreement(a, cfg=cfg) for a in (1.0, 2.0)]
        fails += [{"check": "pointwise", **r} for r in rep["pointwise"] if r["violations"] or r["skip_rate"] >= 1e-3]
        fails += [{"check": "derivatives", **r} for r in rep["derivatives"] if r["max_rel_error"] > 1e-5]
    with log.section("frames"):
        st = stft_checks(fr.StftFrameSpec.from_config(cfg), 3, [2.0, 3.0, 4.0, 6.0, 8.0], cfg)
        wv = wavelet_checks(fr.WaveletSpec.from_config(cfg), [2.0, 3.0, 4.0, 6.0], cfg,
                            penalty_spec=fr.WaveletSpec.from_config(cfg, s=0.0, m=2, beta=1.0))
        rep["stft"], rep["wavelet"] = st, wv
        decay = {}
        for m in (1, 2, 3):
            ws = fr.WaveletSpec.from_config(cfg, m=m, beta=0.5)
            decay[m] = {"k_slope": fr.decay_slope(0, [4, 8, 16, 32], ws, cfg),
                        "j_slope": fr.level_decay_slope(2, [4, 5, 6, 7, 8], ws, cfg)}
            if decay[m]["k_slope"] > -(m + 1) + 0.3 or decay[m]["j_slope"] > -(m + 0.5) + 0.3:
                fails.append({"check": "wavelet.decay", "m": m, **decay[m]})
        rep["wavelet_decay"] = decay
        fails += st["failures"] + wv["failures"]
    with log.section("escape"):
        esc = {f"{r:g}": lab.escape_energy(r, 1.0, cfg)["inside_fraction"] for r in (1.0, 2.0, 5.0, 10.0)}
        rep["escape_inside_fraction"] = esc
        limit = float(section(cfg, "escape")["max_fraction"])
        fails += [{"check": "escape", "radius": r, "fraction": v} for r, v in esc.items() if v >= limit]
    rep["failures"] = fails
    write_json(rep, out / "report.json", _meta(args, cfg))
    _say("report", f"{len(fails)} failed checks")
    return fails


# ---------- entry point ----------

def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = load_config(args.config)
    paths = section(cfg, "paths")
    out = Path(args.out or paths["out"])
    out.mkdir(parents=True, exist_ok=True)
    log = RunLogger(label=args.command.replace("-", "_"), log_dir=args.log_dir or paths["reports"])
    log.add_meta(command=args.command, out=str(out))
    status = 0
    try:
        with log.section(args.command):
            failures = args.handler(args, cfg, out, log)
        if failures:
            for f in failures:
                log.add_failure(f.get("check", "check"), f)
            write_json({"failures": failures}, out / "failures.json", _meta(args, cfg))
            _say(args.command, f"{len(failures)} failed checks -> {out / 'failures.json'}")
            status = 1
    except (InvalidParameterError, HypothesisError) as e:
        _say("error", str(e))
        status = 2
    except LabError as e:
        log.add_failure(e.code, e.to_dict())
        write_json({"failures": [e.to_dict()]}, out / "failures.json", _meta(args, cfg))
        _say("error", str(e))
        status = 1
    finally:
        log.add_meta(status=status)
        log.dump()
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
