# src/instability_lab.py
"""
Certificates for the Gaussian pair f_a^{+-}: measured L2 / gradient / W^{1,2} distances of the
Gabor magnitudes against the explicit envelopes, the fitted exponential rate, the inverse
stability constant, and the small operator diagnostics (escape witness, equicontinuity).
"""
from __future__ import annotations
import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, special, stats
from scipy.stats import qmc

from src import analytic_gabor as ag
from src.config import section, resolve_threads
from src.core_signals import (
    GaussianMixture, PHI_NORM, SQRT_HALF, as_a, check_positive, gram_matrix, in_span,
    make_pair, quotient_distance, subspace_basis, subspace_dim,
)
from src.errors import DegenerateFitError, InvalidParameterError, OutOfRangeError, require
from src.numeric_transform import GridSpec, PairNorms, pair_norms

logger = logging.getLogger(__name__)

PI = math.pi
QUOTIENT_PAIR = 2.0 ** 0.75      # dist(f_a^+, f_a^-) for every a


# ---------- explicit envelopes ----------

def bound_l2(a: float) -> float:
    a = as_a(a)
    return 2.0 * math.sqrt(1.0 + 2.0 * a * a * PI) * math.exp(-0.5 * a * a * PI)


def bound_dx(a: float) -> float:
    a = as_a(a)
    e = math.exp(-a * a * PI)
    inner = 200.0 * a ** 4 * PI ** 3 * e
    outer = 6.25 * PI * ((2.0 + 1.5 * math.sqrt(PI)) + a * a * PI * (14.0 + math.sqrt(PI))) * e
    return math.sqrt(inner + outer)


def bound_dy(a: float, c2: Optional[float] = None, cfg: Optional[dict] = None) -> float:
    a = as_a(a)
    c2 = float(section(cfg, "certify")["c2"]) if c2 is None else float(c2)
    return c2 * a * a * math.exp(-0.5 * a * a * PI)


def bound_w12(a: float, c2: Optional[float] = None, cfg: Optional[dict] = None) -> float:
    return bound_l2(a) + math.hypot(bound_dx(a), bound_dy(a, c2, cfg))


def envelope_w12(a: float, cfg: Optional[dict] = None) -> float:
    c = section(cfg, "certify")
    return float(c["c_w12"]) * math.exp(-float(c["k_envelope"]) * as_a(a) ** 2)


def _within(measured: float, bound: float, rtol: float) -> bool:
    return measured <= bound * (1.0 + rtol)


def _log_within(log_measured: float, log_bound: float, rtol: float) -> bool:
    return log_measured <= log_bound + math.log1p(rtol)


# ---------- certificates ----------

@dataclass
class BoundCertificate:
    a: float
    measured_l2: float
    measured_dx_l2: float
    measured_dy_l2: float
    measured_w12: float
    bound_l2: float
    bound_dx: float
    bound_dy: float
    bound_w12: float
    envelope_w12: float
    pass_l2: bool
    pass_dx: bool
    pass_dy: bool
    pass_w12: bool
    pass_envelope: bool
    singular_node_count: int
    log_measured_w12: float
    grid: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.pass_l2 and self.pass_dx and self.pass_dy and self.pass_w12 and self.pass_envelope

    def failures(self) -> List[Dict[str, float]]:
        checks = {
            "l2": (self.pass_l2, self.measured_l2, self.bound_l2),
            "dx": (self.pass_dx, self.measured_dx_l2, self.bound_dx),
            "dy": (self.pass_dy, self.measured_dy_l2, self.bound_dy),
            "w12": (self.pass_w12, self.measured_w12, self.bound_w12),
            "envelope": (self.pass_envelope, self.measured_w12, self.envelope_w12),
        }
        return [{"check": f"certify.{name}", "a": self.a, "measured": m, "bound": b}
                for name, (ok, m, b) in checks.items() if not ok]

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def certificate_from_norms(n: PairNorms, cfg: Optional[dict] = None) -> BoundCertificate:
    c = section(cfg, "certify")
    rtol = float(c["pass_rtol"])
    a = n.a
    b_l2, b_dx, b_dy = bound_l2(a), bound_dx(a), bound_dy(a, cfg=cfg)
    b_w12 = b_l2 + math.hypot(b_dx, b_dy)
    env = envelope_w12(a, cfg)
    # log comparisons stay meaningful once squared distances underflow
    log_env = math.log(float(c["c_w12"])) - float(c["k_envelope"]) * a * a
    return BoundCertificate(
        a=a,
        measured_l2=n.l2, measured_dx_l2=n.dx_l2, measured_dy_l2=n.dy_l2, measured_w12=n.w12,
        bound_l2=b_l2, bound_dx=b_dx, bound_dy=b_dy, bound_w12=b_w12, envelope_w12=env,
        pass_l2=_within(n.l2, b_l2, rtol) if b_l2 > 0 else n.log_l2 < -700,
        pass_dx=_within(n.dx_l2, b_dx, rtol) if b_dx > 0 else n.log_dx_l2 < -700,
        pass_dy=_within(n.dy_l2, b_dy, rtol) if b_dy > 0 else n.log_dy_l2 < -700,
        pass_w12=_within(n.w12, b_w12, rtol) if b_w12 > 0 else n.log_w12 < -700,
        pass_envelope=_log_within(n.log_w12, log_env, rtol),
        singular_node_count=n.singular_nodes,
        log_measured_w12=n.log_w12,
        grid=n.grid.to_dict(),
    )


def certify(a: float, grid: Optional[GridSpec] = None, cfg: Optional[dict] = None,
            workers: Optional[int] = None) -> BoundCertificate:
    a = as_a(a)
    workers = resolve_threads(cfg) if workers is None else workers
    cert = certificate_from_norms(pair_norms(a, grid, workers=workers, cfg=cfg), cfg)
    logger.info("certify a=%g l2=%.6g/%.6g dx=%.6g/%.6g dy=%.6g/%.6g pass=%s",
                a, cert.measured_l2, cert.bound_l2, cert.measured_dx_l2, cert.bound_dx,
                cert.measured_dy_l2, cert.bound_dy, cert.passed)
    return cert


def sweep(a_values: Sequence[float], grid_policy: Optional[Callable[[float], GridSpec]] = None,
          cfg: Optional[dict] = None, workers: Optional[int] = None) -> List[BoundCertificate]:
    """Certificates in input order; parallel over a, each a single-threaded."""
    a_list = [as_a(a) for a in a_values]
    policy = grid_policy or (lambda a: GridSpec.default_for(a, cfg))
    workers = resolve_threads(cfg) if workers is None else workers

    def one(a: float) -> BoundCertificate:
        return certify(a, policy(a), cfg=cfg, workers=1)

    if workers <= 1 or len(a_list) <= 1:
        return [one(a) for a in a_list]
    with ThreadPoolExecutor(max_workers=min(workers, len(a_list))) as ex:
        return list(ex.map(one, a_list))


# ---------- rate fit ----------

@dataclass
class RateFit:
    k_hat: float
    log_c_hat: float
    r_squared: float
    a_values: List[float]
    stderr: float = float("nan")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def fit_rate(a_values: Sequence[float], distances: Optional[Sequence[float]] = None,
             log_distances: Optional[Sequence[float]] = None) -> RateFit:
    """log d = log C - k a^2 by least squares; pass log_distances when d underflows."""
    a = np.asarray(a_values, dtype=float)
    if log_distances is None:
        require(distances is not None, "distances_or_log_distances_required")
        d = np.asarray(distances, dtype=float)
        require(d.shape == a.shape, f"length_mismatch:{d.shape}!={a.shape}")
        require(bool(np.all(d > 0)), "distances_must_be_positive")
        y = np.log(d)
    else:
        y = np.asarray(log_distances, dtype=float)
        require(y.shape == a.shape, f"length_mismatch:{y.shape}!={a.shape}")
    if len(np.unique(a)) < 2:
        raise DegenerateFitError(f"a_values_not_distinct:{a.tolist()}")
    order = np.argsort(a, kind="stable")
    a, y = a[order], y[order]
    res = stats.linregress(a * a, y)
    return RateFit(k_hat=float(-res.slope), log_c_hat=float(res.intercept),
                   r_squared=float(res.rvalue ** 2), a_values=[float(v) for v in a],
                   stderr=float(res.stderr))


def check_sweep_values(a_values: Sequence[float], cfg: Optional[dict] = None) -> List[float]:
    floor = float(section(cfg, "sweep")["a_min_exclusive"])
    vals = [float(a) for a in a_values]
    for a in vals:
        require(a > floor, f"a_below_sweep_floor:{a}<={floor}")
    if len(set(vals)) < 3:
        raise DegenerateFitError(f"need_3_distinct_a:{vals}")
    return vals


def sweep_rate(a_values: Sequence[float], grid_policy: Optional[Callable[[float], GridSpec]] = None,
               cfg: Optional[dict] = None, workers: Optional[int] = None, which: str = "w12",
               certificates: Optional[List[BoundCertificate]] = None) -> RateFit:
    require(which in ("w12", "l2"), f"unknown_distance:{which}")
    vals = check_sweep_values(a_values, cfg)
    certs = certificates if certificates is not None else sweep(vals, grid_policy, cfg, workers)
    if which == "w12":
        logs = [c.log_measured_w12 for c in certs]
    else:
        logs = [math.log(c.measured_l2) if c.measured_l2 > 0 else -math.inf for c in certs]
    fit = fit_rate([c.a for c in certs], log_distances=logs)
    logger.info("rate fit (%s) over %d a-values: k_hat=%.5f r2=%.6f", which, len(certs), fit.k_hat, fit.r_squared)
    return fit


def rate_fit_ok(fit: RateFit, cfg: Optional[dict] = None) -> bool:
    s = section(cfg, "sweep")
    return float(s["k_floor"]) <= fit.k_hat <= float(s["k_ceiling"]) and fit.r_squared >= float(s["r2_floor"])


# ---------- stability constant ----------

def stability_constant_lower_bound(a: float, grid: Optional[GridSpec] = None, cfg: Optional[dict] = None,
                                   certificate: Optional[BoundCertificate] = None,
                                   workers: Optional[int] = None) -> float:
    """dist(f_a^+, f_a^-) / || |V f_a^+| - |V f_a^-| ||_{W^{1,2}}, a lower bound for 1/c_1."""
    a = as_a(a)
    plus, minus = make_pair(a)
    dist = quotient_distance(plus, minus)
    cert = certificate or certify(a, grid, cfg, workers)
    if cert.measured_w12 <= 0 or not math.isfinite(dist / cert.measured_w12):
        raise OutOfRangeError(f"w12_underflow:a={a}", log_estimate=math.log(dist) - cert.log_measured_w12, a=a)
    return dist / cert.measured_w12


def log_stability_lower_bound(cert: BoundCertificate) -> float:
    return math.log(QUOTIENT_PAIR) - cert.log_measured_w12


# ---------- operator diagnostics ----------

def escape_witness(radius: float, L: float, cfg: Optional[dict] = None) -> Tuple[GaussianMixture, float]:
    """A translate of norm L whose transform keeps < 1e-6 of its energy inside B_radius(0)."""
    radius, L = check_positive("radius", radius), check_positive("L", L)
    e = escape_energy(radius, L, cfg)
    return e["signal"], e["inside_fraction"]


def escape_energy(radius: float, L: float, cfg: Optional[dict] = None) -> Dict[str, object]:
    radius, L = check_positive("radius", radius), check_positive("L", L)
    ec = section(cfg, "escape")
    s = radius + float(ec["shift_pad"])
    coeff = L / PHI_NORM
    sig = GaussianMixture.shifted(s, coeff)
    total = SQRT_HALF * L * L

    def slab(x: float) -> float:
        return 0.5 * math.exp(-PI * (x - s) ** 2) * special.erf(math.sqrt(PI) * math.sqrt(max(radius * radius - x * x, 0.0)))

    inside, _ = integrate.quad(slab, -radius, radius, epsabs=0.0, epsrel=1e-10, limit=200)
    inside *= coeff * coeff

    half, step = float(ec["box_half"]), float(ec["box_step"])
    n = 2 * int(round(half / step)) + 1
    xs = np.linspace(s - half, s + half, n)
    ys = np.linspace(-half, half, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    dens = 0.5 * coeff * coeff * np.exp(-PI * ((X - s) ** 2 + Y ** 2))
    dens = np.where(X * X + Y * Y >= radius * radius, dens, 0.0)
    outside = float(integrate.trapezoid(integrate.trapezoid(dens, ys, axis=1), xs))

    frac_in, frac_out = inside / total, outside / total
    if frac_in >= float(ec["max_fraction"]):
        logger.warning("escape witness radius=%g keeps fraction %.3e inside", radius, frac_in)
    return {"signal": sig, "shift": s, "inside_fraction": frac_in, "outside_fraction": frac_out,
            "partition_error": abs(frac_in + frac_out - 1.0), "norm": L}


def atom_inner_product(p: ag.TFPoint, q: ag.TFPoint) -> complex:
    """<phi_{x,y}, phi_{x',y'}> with phi_{x,y}(t) = e^{2 pi i y t} phi(t - x)."""
    dx, dy = p.x - q.x, p.y - q.y
    mag = SQRT_HALF * math.exp(-0.5 * PI * (dx * dx + dy * dy))
    return mag * cmath.exp(1j * PI * dy * (p.x + q.x))


def equicontinuity_modulus(p: ag.TFPoint, q: ag.TFPoint, L: float) -> float:
    L = check_positive("L", L)
    d2 = 2.0 * (SQRT_HALF - atom_inner_product(p, q).real)
    return L * math.sqrt(max(d2, 0.0))


# ---------- point suites ----------

def _halton_box(n: int, x_half: float, y_half: float, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    pts = qmc.Halton(d=2, seed=seed).random(n)
    return (2.0 * pts[:, 0] - 1.0) * x_half, (2.0 * pts[:, 1] - 1.0) * y_half


def pointwise_suite(a: float, n_points: int = 10_000, seed: int = 0, cfg: Optional[dict] = None) -> Dict[str, float]:
    """Counts of pointwise envelope violations at quasi-random points; singular points are skipped."""
    a = as_a(a)
    tol = float(section(cfg, "analytic")["singular_tol"])
    x, y = _halton_box(n_points, 2.0 * a + 3.0, 3.0, seed)
    g = ag.pair_gap(a, x, y, with_gradient=True, singular_tol=tol)
    scale = np.exp(g["log_scale"])
    gap = np.abs(g["gap"]) * scale
    ddx = np.abs(g["gap_dx"]) * scale
    ddy = np.abs(g["gap_dy"]) * scale
    b = ag.pointwise_bound_arrays(a, x, y)
    r = ag.bound_ratio_arrays(a, x, y, singular_tol=tol)
    skip = g["singular"]
    slack = 1.0 + 1e-12
    live = ~skip
    viol = {
        "mag": int(np.sum(gap > np.minimum(b["mag_left"], b["mag_right"]) * slack)),
        "dx": int(np.sum(live & (ddx > np.minimum(b["dx_left"], b["dx_right"]) * slack))),
        "dy": int(np.sum(live & (ddy > np.minimum(b["dy_left"], b["dy_right"]) * slack))),
        "cos_sum": int(np.sum(np.nan_to_num(r["cos_sum"]) > 2.0 * slack)),
        "sin": int(np.sum(np.nan_to_num(r["sin_plus"]) > slack) + np.sum(np.nan_to_num(r["sin_minus"]) > slack)),
    }
    out = {"a": a, "n_points": n_points, "skipped": int(skip.sum()), "skip_rate": float(skip.mean())}
    out.update({f"violations_{k}": v for k, v in viol.items()})
    out["violations"] = sum(viol.values())
    return out


def derivative_agreement(a: float, n_points: int = 1000, seed: int = 0, h: float = 1e-5,
                         cfg: Optional[dict] = None) -> Dict[str, float]:
    """Max relative error of analytic gradients of |V f_a^{+-}| against central differences."""
    a = as_a(a)
    tol = float(section(cfg, "analytic")["singular_tol"])
    x, y = _halton_box(n_points, 2.0 * a + 2.0, 2.0, seed)
    f = ag.pair_fields(a, x, y, with_derivatives=True, singular_tol=tol)
    worst, skipped = 0.0, 0
    for key in ("plus", "minus"):
        def mag(xx, yy, key=key):
            return ag.pair_fields(a, xx, yy, with_derivatives=False)[f"mag_{key}"]
        fdx = (mag(x + h, y) - mag(x - h, y)) / (2 * h)
        fdy = (mag(x, y + h) - mag(x, y - h)) / (2 * h)
        sing = f[f"singular_{key}"]
        skipped += int(sing.sum())
        err = np.hypot(fdx - f[f"dx_{key}"], fdy - f[f"dy_{key}"])
        ref = np.hypot(f[f"dx_{key}"], f[f"dy_{key}"])
        live = ~sing & (ref > 0) & (f[f"mag_{key}"] > 1e-6)
        if live.any():
            worst = max(worst, float(np.max(err[live] / ref[live])))
    return {"a": a, "n_points": n_points, "max_rel_error": worst, "skipped": skipped}


# ---------- discretized subspaces ----------

def subspace_profile(k_values: Sequence[int], q: float, cfg: Optional[dict] = None,
                     workers: Optional[int] = None) -> pd.DataFrame:
    """Per H_k: dimension, Gram conditioning, and the inverse-stability lower bound of its pair."""
    q = check_positive("q", q)
    rows = []
    for k in k_values:
        k = int(k)
        dim = subspace_dim(k, q)
        basis = subspace_basis(k, q)
        cond = float(np.linalg.cond(gram_matrix(basis)))
        a = k * q
        plus, minus = make_pair(a)
        require(in_span(plus, basis) and in_span(minus, basis), f"pair_outside_span:k={k}")
        cert = certify(a, cfg=cfg, workers=workers)
        rows.append({
            "k": k, "a": a, "dim": dim, "gram_cond": cond,
            "quotient_distance": quotient_distance(plus, minus),
            "measured_w12": cert.measured_w12,
            "log_inverse_stability_lb": log_stability_lower_bound(cert),
        })
    return pd.DataFrame(rows)
