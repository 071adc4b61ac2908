# src/frames.py
"""
Frame coefficients of Gaussian mixtures and the weighted l^p penalties built on them.

STFT system   g_{n,k}(t) = e^{2 pi i k y0 t} g(t - n x0), weight ((1+|x|)(1+|y|))^s
Wavelets      psi_{j,k}(t) = alpha^{j/2} psi(alpha^j t - beta k), chi_{0,k}(t) = phi(t - beta k),
              psi = normalized m-th derivative of phi (exactly m vanishing moments)

Penalty differences |P(f_a^+) - P(f_a^-)| are summed term by term as
|u+v|^p - |u-v|^p = Y^{p/2} expm1((p/2) log1p(D/Y)),  Y = |u-v|^2,  D = 4 Re(u conj v),
so that tiny differences of large penalties keep their relative accuracy.
"""
from __future__ import annotations
import functools
import logging
import math
from dataclasses import dataclass, asdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, special, stats

from src.config import section
from src.core_signals import GaussianMixture, SQRT_HALF, as_a, gaussian_overlap, make_pair
from src.errors import (
    CoefficientFloorError, DegenerateFitError, HypothesisError, InvalidParameterError,
    TruncationError, require,
)

logger = logging.getLogger(__name__)

PI = math.pi
PHI = GaussianMixture.gaussian()


# ---------- windows and specs ----------

@dataclass(frozen=True)
class SampledWindow:
    """A Schwartz window given as a vectorized callable; coefficients come from quadrature."""
    func: Callable[[np.ndarray], np.ndarray]
    name: str = "sampled"
    step: float = 1.0 / 64

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))


Window = Union[GaussianMixture, SampledWindow]


@dataclass(frozen=True)
class StftFrameSpec:
    x0: float = 1.0
    y0: float = 1.0
    s: float = 0.0
    p: float = 1.0
    window: Window = PHI
    n_range: int = 12
    k_range: int = 12
    support_pad: float = 8.0

    def __post_init__(self):
        require(self.x0 > 0 and self.y0 > 0, f"lattice_steps_must_be_positive:{self.x0},{self.y0}")
        require(1.0 <= self.p <= 2.0, f"p_outside_[1,2]:{self.p}")
        require(self.s >= 0, f"s_negative:{self.s}")
        require(self.n_range >= 1 and self.k_range >= 1, f"truncation_below_1:{self.n_range},{self.k_range}")
        if isinstance(self.window, GaussianMixture):
            require(not self.window.is_zero, "zero_window")

    @classmethod
    def from_config(cls, cfg: Optional[dict] = None, **over) -> "StftFrameSpec":
        c = section(cfg, "stft")
        kw = dict(x0=float(c["x0"]), y0=float(c["y0"]), s=float(c["s"]), p=float(c["p"]),
                  n_range=int(c["n_range"]), k_range=int(c["k_range"]), support_pad=float(c["support_pad"]))
        kw.update({k: v for k, v in over.items() if v is not None})
        return cls(**kw)

    def n_bound(self, sig: GaussianMixture) -> int:
        """n-truncation, widened so the lattice covers the signal support."""
        reach = sig.max_abs_shift() + self.support_pad
        return max(int(self.n_range), int(math.ceil(reach / self.x0)))

    def to_dict(self) -> Dict[str, object]:
        d = {k: v for k, v in asdict(self).items() if k != "window"}
        w = self.window
        d["window"] = w.to_list() if isinstance(w, GaussianMixture) else w.name
        return d


@dataclass(frozen=True)
class WaveletSpec:
    alpha: float = 2.0
    beta: float = 0.5
    m: int = 3
    s: float = 1.0
    p: float = 1.0
    j_max: int = 14
    k_max: int = 64
    support_pad: float = 8.0
    quad_step: float = 1.0 / 64

    def __post_init__(self):
        require(self.alpha > 1, f"alpha_must_exceed_1:{self.alpha}")
        require(self.beta > 0, f"beta_must_be_positive:{self.beta}")
        require(int(self.m) == self.m and self.m >= 1, f"m_must_be_positive_int:{self.m}")
        require(self.s >= 0, f"s_negative:{self.s}")
        require(1.0 <= self.p <= 2.0, f"p_outside_[1,2]:{self.p}")
        require(self.j_max >= 0 and self.k_max >= 1, f"truncation:{self.j_max},{self.k_max}")

    @property
    def sigma(self) -> float:
        return self.s + 0.5 - 1.0 / self.p

    @classmethod
    def from_config(cls, cfg: Optional[dict] = None, **over) -> "WaveletSpec":
        c = section(cfg, "wavelet")
        kw = dict(alpha=float(c["alpha"]), beta=float(c["beta"]), m=int(c["m"]), s=float(c["s"]),
                  p=float(c["p"]), j_max=int(c["j_max"]), k_max=int(c["k_max"]),
                  support_pad=float(c["support_pad"]), quad_step=float(c["quad_step"]))
        kw.update({k: v for k, v in over.items() if v is not None})
        return cls(**kw)

    def to_dict(self) -> Dict[str, object]:
        d = asdict(self)
        d["sigma"] = self.sigma
        return d


@dataclass
class PenaltySum:
    value: float
    tail: float
    tail_ok: bool
    n_terms: int = 0

    def __float__(self) -> float:
        return float(self.value)


@dataclass
class PenaltyReport:
    a: float
    penalty_plus: float
    penalty_minus: float
    difference: float
    envelope_bound: float
    passed: bool
    tail_ok: bool = True
    frame: str = ""

    def to_dict(self) -> Dict[str, object]:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


# ---------- shared helpers ----------

def _check_tail(head: float, tail: float, what: str, cfg: Optional[dict]) -> bool:
    pc = section(cfg, "penalty")
    if tail > float(pc["tail_error_rel"]) * head:
        raise TruncationError(f"{what}:tail={tail:.3e}:head={head:.3e}", tail=tail, head=head)
    if tail > float(pc["tail_warn_rel"]) * head:
        logger.warning("%s tail %.3e exceeds %.0e of head %.6g", what, tail, float(pc["tail_warn_rel"]), head)
        return False
    return True


def _geometric_tail(outer: float, inner: float) -> float:
    if outer <= 0:
        return 0.0
    if inner <= 0:
        return math.inf
    r = outer / inner
    return outer * r / (1.0 - r) if r < 1 else math.inf


def power_gap(u: np.ndarray, v: np.ndarray, p: float) -> np.ndarray:
    """|u+v|^p - |u-v|^p elementwise, free of cancellation."""
    u, v = np.asarray(u), np.asarray(v)
    q = 0.5 * p
    Y = np.abs(u - v) ** 2
    X = np.abs(u + v) ** 2
    D = 4.0 * np.real(u * np.conj(v))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = Y ** q * np.expm1(q * np.log1p(D / Y))
    return np.where(Y > 0, g, X ** q)


def loglog_slope(x: Sequence[float], c: Sequence[float], floor: float = 1e-300) -> float:
    """Least-squares slope of log|c| against log x."""
    x = np.asarray(x, dtype=float)
    c = np.abs(np.asarray(c))
    if x.size < 4 or len(np.unique(x)) < 2:
        raise DegenerateFitError(f"need_4_distinct_points:{x.tolist()}")
    if np.any(c <= floor):
        raise CoefficientFloorError(f"coefficients_below_{floor:g}:{c.min():.3e}", min_coeff=float(c.min()))
    return float(stats.linregress(np.log(x), np.log(c)).slope)


# ---------- STFT frame ----------

def _mixture_lattice(f: GaussianMixture, g: GaussianMixture, xn: np.ndarray, yk: np.ndarray) -> np.ndarray:
    out = np.zeros((xn.size, yk.size), dtype=complex)
    for c, s in f.terms:
        for d, r in g.terms:
            out += c * np.conj(d) * gaussian_overlap(s, r + xn[:, None], yk[None, :])
    return out


def _sampled_lattice(f: GaussianMixture, g: SampledWindow, xn: np.ndarray, yk: np.ndarray, pad: float) -> np.ndarray:
    lo, hi = f.extent()
    n = int(math.ceil((hi - lo + 2 * pad) / g.step)) + 1
    t = np.linspace(lo - pad, hi + pad, n)
    ft = np.zeros(n, dtype=complex)
    for c, s in f.terms:
        ft += c * np.exp(-PI * (t - s) ** 2)
    modes = np.exp(-2j * PI * yk[:, None] * t[None, :])
    out = np.empty((xn.size, yk.size), dtype=complex)
    for i, x in enumerate(xn):
        prod = ft * np.conj(g(t - x))
        out[i] = integrate.trapezoid(prod[None, :] * modes, t, axis=1)
    return out


def stft_coefficients(f: GaussianMixture, spec: StftFrameSpec, n_bound: Optional[int] = None,
                      k_bound: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(n, k, C) with C[i, j] = <f, g_{n_i, k_j}> on the symmetric truncated lattice."""
    N = spec.n_bound(f) if n_bound is None else int(n_bound)
    K = spec.k_range if k_bound is None else int(k_bound)
    n = np.arange(-N, N + 1)
    k = np.arange(-K, K + 1)
    if f.is_zero:
        return n, k, np.zeros((n.size, k.size), dtype=complex)
    xn, yk = n * spec.x0, k * spec.y0
    if isinstance(spec.window, GaussianMixture):
        C = _mixture_lattice(f, spec.window, xn, yk)
    else:
        C = _sampled_lattice(f, spec.window, xn, yk, spec.support_pad)
    return n, k, C


def stft_coeff(f: GaussianMixture, n: int, k: int, spec: StftFrameSpec) -> complex:
    _, _, C = stft_coefficients_at(f, np.array([n]), np.array([k]), spec)
    return complex(C[0, 0])


def stft_coefficients_at(f: GaussianMixture, n: np.ndarray, k: np.ndarray, spec: StftFrameSpec):
    xn, yk = np.asarray(n) * spec.x0, np.asarray(k) * spec.y0
    if f.is_zero:
        return n, k, np.zeros((xn.size, yk.size), dtype=complex)
    if isinstance(spec.window, GaussianMixture):
        return n, k, _mixture_lattice(f, spec.window, xn, yk)
    return n, k, _sampled_lattice(f, spec.window, xn, yk, spec.support_pad)


def _stft_weights(n: np.ndarray, k: np.ndarray, spec: StftFrameSpec) -> np.ndarray:
    wx = (1.0 + np.abs(n * spec.x0)) ** (spec.s * spec.p)
    wy = (1.0 + np.abs(k * spec.y0)) ** (spec.s * spec.p)
    return wx[:, None] * wy[None, :]


def _ring_tail(terms: np.ndarray) -> float:
    """Geometric tail from the outermost lattice ring and the one inside it."""
    N, K = (terms.shape[0] - 1) // 2, (terms.shape[1] - 1) // 2
    if N < 2 or K < 2:
        return math.inf if terms.sum() > 0 else 0.0
    outer_mask = np.zeros(terms.shape, dtype=bool)
    outer_mask[[0, -1], :] = True
    outer_mask[:, [0, -1]] = True
    inner_mask = np.zeros(terms.shape, dtype=bool)
    inner_mask[[1, -2], 1:-1] = True
    inner_mask[1:-1, [1, -2]] = True
    return _geometric_tail(math.fsum(terms[outer_mask]), math.fsum(terms[inner_mask]))


def stft_penalty(f: GaussianMixture, spec: StftFrameSpec, cfg: Optional[dict] = None) -> PenaltySum:
    """sum_{n,k} |<f, g_{n,k}>|^p w(n x0, k y0)^p over the truncated lattice, with a tail estimate."""
    if f.is_zero:
        return PenaltySum(0.0, 0.0, True, 0)
    n, k, C = stft_coefficients(f, spec)
    terms = np.abs(C) ** spec.p * _stft_weights(n, k, spec)
    head = math.fsum(terms.ravel())
    tail = _ring_tail(terms)
    ok = _check_tail(head, tail, "stft_penalty", cfg)
    return PenaltySum(head, tail, ok, int(terms.size))


def frame_energy(f: GaussianMixture, spec: StftFrameSpec) -> float:
    """sum |<f, g_{n,k}>|^2 on the truncated lattice."""
    _, _, C = stft_coefficients(f, spec)
    return math.fsum((np.abs(C) ** 2).ravel())


def _stft_pair(a: float, spec: StftFrameSpec, cfg: Optional[dict]) -> Tuple[PenaltySum, PenaltySum, float]:
    plus, _ = make_pair(a)
    N = spec.n_bound(plus)
    _, _, Cu = stft_coefficients(GaussianMixture.shifted(-a), spec, n_bound=N)
    n, k, Cv = stft_coefficients(GaussianMixture.shifted(a), spec, n_bound=N)
    W = _stft_weights(n, k, spec)
    tp = np.abs(Cu + Cv) ** spec.p * W
    tm = np.abs(Cu - Cv) ** spec.p * W
    out = []
    for name, terms in (("plus", tp), ("minus", tm)):
        head = math.fsum(terms.ravel())
        tail = _ring_tail(terms)
        out.append(PenaltySum(head, tail, _check_tail(head, tail, f"stft_penalty_{name}:a={a}", cfg), int(terms.size)))
    diff = abs(math.fsum((power_gap(Cu, Cv, spec.p) * W).ravel()))
    return out[0], out[1], diff


def _penalty_key(cfg: Optional[dict]) -> Tuple[Tuple[str, float], ...]:
    return tuple(sorted((k, float(v)) for k, v in section(cfg, "penalty").items()))


@functools.lru_cache(maxsize=64)
def _stft_calibration(spec: StftFrameSpec, m: int, penalty: Tuple[Tuple[str, float], ...]) -> float:
    pc = dict(penalty)
    a_ref = pc["calibration_a"]
    _, _, diff = _stft_pair(a_ref, spec, {"penalty": pc})
    return pc["calibration_safety"] * diff / (1.0 + a_ref) ** (spec.s * spec.p - m + 1)


def stft_penalty_difference(a: float, spec: StftFrameSpec, m: int, c_fit: Optional[float] = None,
                            cfg: Optional[dict] = None) -> PenaltyReport:
    a = as_a(a)
    if not m > spec.s * spec.p + 1:
        raise HypothesisError(f"m={m}<=sp+1={spec.s * spec.p + 1}", m=m)
    if c_fit is None:
        c_fit = _stft_calibration(spec, int(m), _penalty_key(cfg))
    pp, pm, diff = _stft_pair(a, spec, cfg)
    bound = c_fit * (1.0 + a) ** (spec.s * spec.p - m + 1)
    rtol = float(section(cfg, "certify")["pass_rtol"])
    return PenaltyReport(a=a, penalty_plus=pp.value, penalty_minus=pm.value, difference=diff,
                         envelope_bound=bound, passed=diff <= bound * (1.0 + rtol),
                         tail_ok=pp.tail_ok and pm.tail_ok, frame="stft")


def stft_coefficient_frame(f: GaussianMixture, spec: StftFrameSpec) -> pd.DataFrame:
    n, k, C = stft_coefficients(f, spec)
    N, K = np.meshgrid(n, k, indexing="ij")
    return pd.DataFrame({"n": N.ravel(), "k": K.ravel(), "re": C.real.ravel(), "im": C.imag.ravel()})


# ---------- Hermite wavelets ----------

def gaussian_derivative(l: int, t):
    """l-th derivative of exp(-pi t^2)."""
    t = np.asarray(t, dtype=float)
    return (-1.0) ** l * PI ** (0.5 * l) * special.eval_hermite(l, math.sqrt(PI) * t) * np.exp(-PI * t * t)


def hermite_norm(m: int) -> float:
    return 1.0 / math.sqrt((2.0 * PI) ** (m - 0.5) * special.gamma(m + 0.5))


def hermite_wavelet(m: int, t):
    require(int(m) == m and m >= 1, f"m_must_be_positive_int:{m}")
    out = hermite_norm(int(m)) * gaussian_derivative(int(m), t)
    return float(out) if np.ndim(out) == 0 else out


def wavelet_atom(j: int, k, spec: WaveletSpec, t):
    b = spec.alpha ** j
    return math.sqrt(b) * hermite_wavelet(spec.m, b * np.asarray(t, dtype=float) - spec.beta * k)


def wavelet_moment(m: int, l: int, step: float = 1.0 / 256, half: float = 12.0) -> float:
    n = 2 * int(round(half / step)) + 1
    t = np.linspace(-half, half, n)
    return float(integrate.trapezoid(t ** l * hermite_wavelet(m, t), t))


def _real_if_possible(z: complex):
    return float(z.real) if z.imag == 0 else z


def wavelet_coeff(f: GaussianMixture, j: int, k: int, spec: WaveletSpec):
    """<f, psi_{j,k}> by trapezoid quadrature around each term's product peak."""
    require(int(j) == j and j >= 0, f"j_must_be_nonnegative_int:{j}")
    b = spec.alpha ** j
    w = spec.beta * k / b
    half = 10.0 / math.sqrt(1.0 + b * b)
    step = min(spec.quad_step, 1.0 / (16.0 * b))
    n = 2 * int(math.ceil(half / step)) + 1
    total = 0j
    for c, s in f.terms:
        center = (s + b * b * w) / (1.0 + b * b)
        t = np.linspace(center - half, center + half, n)
        total += c * integrate.trapezoid(np.exp(-PI * (t - s) ** 2) * wavelet_atom(j, k, spec, t), t)
    return _real_if_possible(complex(total))


def _closed_level(s: float, j: int, k: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    b = spec.alpha ** j
    kappa = b * b / (1.0 + b * b)
    u = s - spec.beta * np.asarray(k, dtype=float) / b
    lead = hermite_norm(spec.m) * b ** (0.5 - spec.m) / math.sqrt(1.0 + b * b)
    z = math.sqrt(PI * kappa) * u
    return lead * (-1.0) ** spec.m * (PI * kappa) ** (0.5 * spec.m) * special.eval_hermite(spec.m, z) * np.exp(-z * z)


def wavelet_coeff_exact(f: GaussianMixture, j: int, k, spec: WaveletSpec):
    """Closed form of <f, psi_{j,k}>; k may be an array."""
    require(int(j) == j and j >= 0, f"j_must_be_nonnegative_int:{j}")
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.zeros(k_arr.shape, dtype=complex)
    for c, s in f.terms:
        out += c * _closed_level(s, int(j), k_arr, spec)
    if np.all(out.imag == 0):
        out = out.real
    return out[0] if np.ndim(k) == 0 else out


def scaling_coeff(f: GaussianMixture, k, spec: WaveletSpec):
    """<f, chi_{0,k}> with chi = phi."""
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.zeros(k_arr.shape, dtype=complex)
    for c, s in f.terms:
        out += c * SQRT_HALF * np.exp(-0.5 * PI * (s - spec.beta * k_arr) ** 2)
    if np.all(out.imag == 0):
        out = out.real
    return out[0] if np.ndim(k) == 0 else out


def _level_k(lo: float, hi: float, j: int, spec: WaveletSpec) -> np.ndarray:
    b = spec.alpha ** j
    return np.arange(math.ceil((lo - spec.support_pad) * b / spec.beta),
                     math.floor((hi + spec.support_pad) * b / spec.beta) + 1)


def _scaling_k(lo: float, hi: float, spec: WaveletSpec) -> np.ndarray:
    k = _level_k(lo, hi, 0, spec)
    return np.arange(min(int(k[0]), -spec.k_max), max(int(k[-1]), spec.k_max) + 1)


def _level_tail(levels: List[float]) -> float:
    if len(levels) < 2:
        return math.inf if levels and levels[-1] > 0 else 0.0
    return _geometric_tail(levels[-1], levels[-2])


def _check_besov_hypothesis(spec: WaveletSpec) -> None:
    if spec.s > spec.m + 1:
        raise HypothesisError(f"s={spec.s}>m+1={spec.m + 1}", s=spec.s, m=spec.m)


def besov_penalty(f: GaussianMixture, spec: WaveletSpec, cfg: Optional[dict] = None) -> PenaltySum:
    """sum_k |<f,chi_{0,k}>|^p + sum_{j<=j_max} alpha^{j sigma p} sum_k |<f,psi_{j,k}>|^p."""
    _check_besov_hypothesis(spec)
    if f.is_zero:
        return PenaltySum(0.0, 0.0, True, 0)
    lo, hi = f.extent()
    p = spec.p
    ks = _scaling_k(lo, hi, spec)
    scaling = math.fsum(np.abs(scaling_coeff(f, ks, spec)) ** p)
    levels, count = [], ks.size
    for j in range(spec.j_max + 1):
        k = _level_k(lo, hi, j, spec)
        c = wavelet_coeff_exact(f, j, k, spec)
        levels.append(spec.alpha ** (j * spec.sigma * p) * math.fsum(np.abs(c) ** p))
        count += k.size
    head = math.fsum([scaling] + levels)
    tail = _level_tail(levels)
    ok = _check_tail(head, tail, "besov_penalty", cfg)
    return PenaltySum(head, tail, ok, count)


def _wavelet_pair(a: float, spec: WaveletSpec, cfg: Optional[dict]) -> Tuple[PenaltySum, PenaltySum, float]:
    u, v = GaussianMixture.shifted(-a), GaussianMixture.shifted(a)
    p = spec.p
    ks = _scaling_k(-a, a, spec)
    cu, cv = scaling_coeff(u, ks, spec), scaling_coeff(v, ks, spec)
    heads = {"plus": [math.fsum(np.abs(cu + cv) ** p)], "minus": [math.fsum(np.abs(cu - cv) ** p)]}
    gaps = [math.fsum(power_gap(cu, cv, p))]
    count = ks.size
    for j in range(spec.j_max + 1):
        k = _level_k(-a, a, j, spec)
        wj = spec.alpha ** (j * spec.sigma * p)
        cu, cv = wavelet_coeff_exact(u, j, k, spec), wavelet_coeff_exact(v, j, k, spec)
        heads["plus"].append(wj * math.fsum(np.abs(cu + cv) ** p))
        heads["minus"].append(wj * math.fsum(np.abs(cu - cv) ** p))
        gaps.append(wj * math.fsum(power_gap(cu, cv, p)))
        count += k.size
    out = []
    for name in ("plus", "minus"):
        parts = heads[name]
        head = math.fsum(parts)
        tail = _level_tail(parts[1:])
        out.append(PenaltySum(head, tail, _check_tail(head, tail, f"besov_penalty_{name}:a={a}", cfg), count))
    return out[0], out[1], abs(math.fsum(gaps))


@functools.lru_cache(maxsize=64)
def _wavelet_calibration(spec: WaveletSpec, penalty: Tuple[Tuple[str, float], ...]) -> float:
    pc = dict(penalty)
    a_ref = pc["calibration_a"]
    _, _, diff = _wavelet_pair(a_ref, spec, {"penalty": pc})
    return pc["calibration_safety"] * diff * a_ref ** spec.m


def wavelet_penalty_difference(a: float, spec: WaveletSpec, c_fit: Optional[float] = None,
                               cfg: Optional[dict] = None) -> PenaltyReport:
    a = as_a(a)
    if not 2 * spec.m - spec.sigma * spec.p + 1.5 > 0:
        raise HypothesisError(f"2m-sigma*p+3/2<=0:m={spec.m}:sigma={spec.sigma}:p={spec.p}")
    if c_fit is None:
        c_fit = _wavelet_calibration(spec, _penalty_key(cfg))
    pp, pm, diff = _wavelet_pair(a, spec, cfg)
    bound = c_fit * a ** (-spec.m)
    rtol = float(section(cfg, "certify")["pass_rtol"])
    return PenaltyReport(a=a, penalty_plus=pp.value, penalty_minus=pm.value, difference=diff,
                         envelope_bound=bound, passed=diff <= bound * (1.0 + rtol),
                         tail_ok=pp.tail_ok and pm.tail_ok, frame="wavelet")


# ---------- decay checks ----------

def decay_slope(j_fixed: int, k_values: Sequence[int], spec: WaveletSpec, cfg: Optional[dict] = None) -> float:
    """Slope of log|<phi, psi_{j,k}>| against log(beta |k|)."""
    floor = float(section(cfg, "penalty")["coeff_floor"])
    k = np.asarray(k_values, dtype=float)
    c = wavelet_coeff_exact(PHI, j_fixed, k, spec)
    return loglog_slope(spec.beta * np.abs(k), c, floor)


def scaling_decay_slope(k_values: Sequence[int], spec: WaveletSpec, cfg: Optional[dict] = None) -> float:
    floor = float(section(cfg, "penalty")["coeff_floor"])
    k = np.asarray(k_values, dtype=float)
    return loglog_slope(spec.beta * np.abs(k), scaling_coeff(PHI, k, spec), floor)


def level_decay_slope(k_fixed: int, j_values: Sequence[int], spec: WaveletSpec, cfg: Optional[dict] = None) -> float:
    """Slope of log|<phi, psi_{j,k}>| against j log(alpha) at fixed k."""
    floor = float(section(cfg, "penalty")["coeff_floor"])
    j = np.asarray(j_values, dtype=int)
    if j.size < 4 or len(np.unique(j)) < 2:
        raise DegenerateFitError(f"need_4_distinct_levels:{j.tolist()}")
    c = np.abs(np.array([wavelet_coeff_exact(PHI, int(jj), k_fixed, spec) for jj in j]))
    if np.any(c <= floor):
        raise CoefficientFloorError(f"coefficients_below_{floor:g}", min_coeff=float(c.min()))
    return float(stats.linregress(j * math.log(spec.alpha), np.log(c)).slope)


def taylor_remainder_ratio(w: float, m: int, samples: int = 100) -> Tuple[float, float, bool]:
    """
    max over t in [w/2, 3w/2] of |phi(t) - p_{w,m}(t)| / |t - w|^m, where p_{w,m} is the
    degree m-1 Taylor polynomial of phi at w; returned with the local bound e^{-pi w^2/8}.
    """
    require(w > 0 and m >= 1, f"w={w},m={m}")
    t = np.linspace(0.5 * w, 1.5 * w, samples)
    t = t[t != w]
    poly = np.zeros_like(t)
    for l in range(m):
        poly += float(gaussian_derivative(l, w)) / math.factorial(l) * (t - w) ** l
    ratio = float(np.max(np.abs(np.exp(-PI * t * t) - poly) / np.abs(t - w) ** m))
    bound = math.exp(-PI * w * w / 8.0)
    return ratio, bound, ratio <= bound


def wavelet_coefficient_frame(f: GaussianMixture, spec: WaveletSpec, j_values: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """Rows j = -1 hold scaling coefficients <f, chi_{0,k}>."""
    lo, hi = f.extent()
    ks = _scaling_k(lo, hi, spec)
    frames = [pd.DataFrame({"j": -1, "k": ks, "coeff": np.real(scaling_coeff(f, ks, spec))})]
    for j in (range(min(spec.j_max, 6) + 1) if j_values is None else j_values):
        k = _level_k(lo, hi, int(j), spec)
        frames.append(pd.DataFrame({"j": int(j), "k": k, "coeff": np.real(wavelet_coeff_exact(f, int(j), k, spec))}))
    return pd.concat(frames, ignore_index=True)
