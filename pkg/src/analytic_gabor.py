# src/analytic_gabor.py
"""
Closed-form Gabor transforms with the Gaussian window phi(t) = exp(-pi t^2):

    V phi(x,y)   = 2^{-1/2} e^{-pi i x y} e^{-pi/2 (x^2+y^2)}
    V u_s(x,y)   = e^{-2 pi i s y} V phi(x-s, y)

For the pair f_a^{+-} = u_{-a} +- u_a write A = e^{-pi/2((x+a)^2+y^2)}, B = e^{-pi/2((x-a)^2+y^2)},
theta = 2 pi a y. Then |V f_a^{+-}| = 2^{-1/2} sqrt(Q+-), Q+- = A^2 + B^2 +- 2AB cos(theta).
All array kernels factor out e^L with L = max(log A, log B), so nothing underflows before
it has to (a up to ~25 stays meaningful).
"""
from __future__ import annotations
import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple, Union

import numpy as np

from src.core_signals import GaussianMixture, SQRT_HALF, as_a, gaussian_overlap
from src.errors import InvalidParameterError, SingularPointError

SINGULAR_TOL = 1e-14
SQRT2 = math.sqrt(2.0)
PI = math.pi


@dataclass(frozen=True)
class TFPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidParameterError(f"non_finite_point:({self.x},{self.y})")


class PairSign(str, Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def factor(self) -> int:
        return 1 if self is PairSign.PLUS else -1

    @classmethod
    def parse(cls, v: Union[str, "PairSign", int]) -> "PairSign":
        if isinstance(v, PairSign):
            return v
        if v in (1, "+", "plus"):
            return cls.PLUS
        if v in (-1, "-", "minus"):
            return cls.MINUS
        raise InvalidParameterError(f"unknown_sign:{v}")


@dataclass(frozen=True)
class PointwiseBoundSet:
    mag_left: float
    mag_right: float
    dx_left: float
    dx_right: float
    dy_left: float
    dy_right: float

    @property
    def mag(self) -> float:
        return min(self.mag_left, self.mag_right)

    @property
    def dx(self) -> float:
        return min(self.dx_left, self.dx_right)

    @property
    def dy(self) -> float:
        return min(self.dy_left, self.dy_right)


# ---------- single-atom transforms ----------

def gabor_of_gaussian(p: TFPoint) -> complex:
    return SQRT_HALF * cmath.exp(-1j * PI * p.x * p.y) * math.exp(-0.5 * PI * (p.x ** 2 + p.y ** 2))


def gabor_of_shifted(a: float, p: TFPoint) -> complex:
    a = float(a)
    return (SQRT_HALF * cmath.exp(-1j * PI * a * p.y) * cmath.exp(-1j * PI * p.x * p.y)
            * math.exp(-0.5 * PI * ((p.x - a) ** 2 + p.y ** 2)))


def gabor_of_mixture(sig: GaussianMixture, x, y):
    """V_phi sig at (x, y); scalars give a complex, arrays broadcast."""
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return complex(sum(c * gaussian_overlap(s, float(x), float(y)) for c, s in sig.terms))
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = np.zeros(x.shape, dtype=complex)
    for c, s in sig.terms:
        out += c * gaussian_overlap(s, x, y)
    return out


def gabor_of_pair(sign: Union[PairSign, str], a: float, p: TFPoint) -> complex:
    sign = PairSign.parse(sign)
    a = as_a(a)
    return gabor_of_shifted(-a, p) + sign.factor * gabor_of_shifted(a, p)


# ---------- scaled array kernels ----------

def _scaled_terms(a: float, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lA = -0.5 * PI * ((x + a) ** 2 + y ** 2)
    lB = -0.5 * PI * ((x - a) ** 2 + y ** 2)
    L = np.maximum(lA, lB)
    Ap = np.exp(lA - L)
    Bp = np.exp(lB - L)
    theta = 2.0 * PI * a * y
    return x, y, lA, lB, L, Ap, Bp, theta


def _scaled_q(Ap, Bp, theta):
    # cancellation-free forms of A'^2 + B'^2 +- 2A'B' cos(theta)
    d2 = (Ap - Bp) ** 2
    qp = d2 + 4.0 * Ap * Bp * np.cos(0.5 * theta) ** 2
    qm = d2 + 4.0 * Ap * Bp * np.sin(0.5 * theta) ** 2
    return qp, qm


def pair_fields(a: float, x, y, with_derivatives: bool = True,
                singular_tol: float = SINGULAR_TOL) -> Dict[str, np.ndarray]:
    """
    Magnitudes of V f_a^{+-} and, optionally, their analytic partials.
    Returned arrays are unscaled; singular partials are 0 and flagged in
    `singular_plus` / `singular_minus`.
    """
    x, y, lA, lB, L, Ap, Bp, theta = _scaled_terms(a, x, y)
    qp, qm = _scaled_q(Ap, Bp, theta)
    rp, rm = np.sqrt(qp), np.sqrt(qm)
    eL = np.exp(L)
    out = {"mag_plus": SQRT_HALF * rp * eL, "mag_minus": SQRT_HALF * rm * eL}
    if not with_derivatives:
        return out

    # eta = |1 +- e^{-i theta + 2 pi a x}| = sqrt(Q') e^{L - lA}
    with np.errstate(over="ignore"):
        shift = np.exp(L - lA)
    sing_p = (rp * shift < singular_tol) | (rp == 0)
    sing_m = (rm * shift < singular_tol) | (rm == 0)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    ab = Ap * Bp
    base_x = -PI * (x + a) * Ap ** 2 - PI * (x - a) * Bp ** 2
    cross_x = 2.0 * PI * x * ab * cos_t
    cross_y = 2.0 * PI * a * ab * sin_t
    with np.errstate(divide="ignore", invalid="ignore"):
        dxp = np.where(sing_p, 0.0, (base_x - cross_x) / rp)
        dxm = np.where(sing_m, 0.0, (base_x + cross_x) / rm)
        dyp = np.where(sing_p, 0.0, (-PI * y * qp - cross_y) / rp)
        dym = np.where(sing_m, 0.0, (-PI * y * qm + cross_y) / rm)
    scale = SQRT_HALF * eL
    out.update({
        "dx_plus": dxp * scale, "dx_minus": dxm * scale,
        "dy_plus": dyp * scale, "dy_minus": dym * scale,
        "singular_plus": sing_p, "singular_minus": sing_m,
    })
    return out


def pair_gap(a: float, x, y, with_gradient: bool = False,
             singular_tol: float = SINGULAR_TOL) -> Dict[str, np.ndarray]:
    """
    D = |V f_a^+| - |V f_a^-| = 2AB cos(theta) / (|V f_a^+| + |V f_a^-|), evaluated without
    subtracting the two magnitudes. Everything is returned in units of e^L together with
    L itself ("log_scale"), so callers can square and integrate in the log domain.
    Gradient: dD = -D (2 pi (x,y) + dS/S) - (0, 4 pi a AB sin(theta)/S), S = sum of magnitudes;
    at nodes where either magnitude is singular the gradient falls back to the difference of
    the (zero-filled) partials.
    """
    x, y, lA, lB, L, Ap, Bp, theta = _scaled_terms(a, x, y)
    qp, qm = _scaled_q(Ap, Bp, theta)
    rp, rm = np.sqrt(qp), np.sqrt(qm)
    S = SQRT_HALF * (rp + rm)
    ab = Ap * Bp
    D = 2.0 * ab * np.cos(theta) / S
    out = {"gap": D, "log_scale": L}
    if not with_gradient:
        return out

    with np.errstate(over="ignore"):
        shift = np.exp(L - lA)
    sing_p = (rp * shift < singular_tol) | (rp == 0)
    sing_m = (rm * shift < singular_tol) | (rm == 0)
    sing = sing_p | sing_m
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    base_x = -PI * (x + a) * Ap ** 2 - PI * (x - a) * Bp ** 2
    cross_x = 2.0 * PI * x * ab * cos_t
    cross_y = 2.0 * PI * a * ab * sin_t
    with np.errstate(divide="ignore", invalid="ignore"):
        dxp = np.where(sing_p, 0.0, SQRT_HALF * (base_x - cross_x) / rp)
        dxm = np.where(sing_m, 0.0, SQRT_HALF * (base_x + cross_x) / rm)
        dyp = np.where(sing_p, 0.0, SQRT_HALF * (-PI * y * qp - cross_y) / rp)
        dym = np.where(sing_m, 0.0, SQRT_HALF * (-PI * y * qm + cross_y) / rm)
        gx = -D * (2.0 * PI * x + (dxp + dxm) / S)
        gy = -D * (2.0 * PI * y + (dyp + dym) / S) - 4.0 * PI * a * ab * sin_t / S
    out["gap_dx"] = np.where(sing, dxp - dxm, gx)
    out["gap_dy"] = np.where(sing, dyp - dym, gy)
    out["singular"] = sing
    return out


def pointwise_bound_arrays(a: float, x, y) -> Dict[str, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eB = np.exp(-0.5 * PI * ((x - a) ** 2 + y ** 2))
    eA = np.exp(-0.5 * PI * ((x + a) ** 2 + y ** 2))
    dx_fac = SQRT2 * PI * (3.0 * a + np.abs(x))
    dy_fac = SQRT2 * (np.abs(PI * y) + 2.0 * PI * a)
    return {
        "mag_left": SQRT2 * eB, "mag_right": SQRT2 * eA,
        "dx_left": dx_fac * eB, "dx_right": dx_fac * eA,
        "dy_left": dy_fac * eB, "dy_right": dy_fac * eA,
    }


def bound_ratio_arrays(a: float, x, y, singular_tol: float = SINGULAR_TOL) -> Dict[str, np.ndarray]:
    """
    cos_sum  = |cos t + E| / |1 + e^{-it} E| + |E - cos t| / |1 - e^{-it} E|   (<= 2)
    sin_plus = |sin t| / |1 + e^{-it} E|,  sin_minus = |sin t| / |1 - e^{-it} E|   (<= 1)
    with E = e^{2 pi a x}, t = 2 pi a y. For x > 0 numerator and denominator are divided
    by E first. NaN marks singular points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = 2.0 * PI * a * y
    c, s = np.cos(t), np.sin(t)
    pos = x > 0
    E = np.exp(-2.0 * PI * a * np.abs(x))            # E or 1/E, always <= 1
    # x <= 0: num/den as written; x > 0: divided by e^{2 pi a x}
    one = np.where(pos, E, 1.0)
    ee = np.where(pos, 1.0, E)
    den_p = np.abs(one + np.exp(-1j * t) * ee)
    den_m = np.abs(one - np.exp(-1j * t) * ee)
    with np.errstate(divide="ignore", invalid="ignore"):
        num_p = np.abs(c * one + ee)
        num_m = np.abs(ee - c * one)
        sin_scaled = np.abs(s) * one
        sing_p = den_p < singular_tol
        sing_m = den_m < singular_tol
        cos_sum = np.where(sing_p | sing_m, np.nan, num_p / den_p + num_m / den_m)
        sin_p = np.where(sing_p, np.nan, sin_scaled / den_p)
        sin_m = np.where(sing_m, np.nan, sin_scaled / den_m)
    return {"cos_sum": cos_sum, "sin_plus": sin_p, "sin_minus": sin_m}


def pair_zero_points(a: float, y_min: float, y_max: float) -> Dict[str, np.ndarray]:
    """Isolated zeros on the line x = 0: |V f_a^-| at y = n/a, |V f_a^+| at y = (n + 1/2)/a."""
    a = as_a(a)
    n = np.arange(math.floor(y_min * a) - 1, math.ceil(y_max * a) + 2)
    ym = n / a
    yp = (n + 0.5) / a
    return {"minus": ym[(ym >= y_min) & (ym <= y_max)], "plus": yp[(yp >= y_min) & (yp <= y_max)]}


# ---------- scalar operations ----------

def magnitude_diff(a: float, p: TFPoint) -> float:
    a = as_a(a)
    g = pair_gap(a, p.x, p.y)
    return float(abs(g["gap"]) * math.exp(float(g["log_scale"])))


def _partial(kind: str, sign, a: float, p: TFPoint, singular_tol: float) -> float:
    sign = PairSign.parse(sign)
    a = as_a(a)
    f = pair_fields(a, p.x, p.y, singular_tol=singular_tol)
    key = "plus" if sign is PairSign.PLUS else "minus"
    if bool(f[f"singular_{key}"]):
        raise SingularPointError(f"{kind}:{key}:a={a}:({p.x},{p.y})", a=a, x=p.x, y=p.y)
    return float(f[f"{kind}_{key}"])


def d_dx_magnitude(sign, a: float, p: TFPoint, singular_tol: float = SINGULAR_TOL) -> float:
    return _partial("dx", sign, a, p, singular_tol)


def d_dy_magnitude(sign, a: float, p: TFPoint, singular_tol: float = SINGULAR_TOL) -> float:
    return _partial("dy", sign, a, p, singular_tol)


def pointwise_bounds(a: float, p: TFPoint) -> PointwiseBoundSet:
    a = as_a(a)
    b = pointwise_bound_arrays(a, p.x, p.y)
    return PointwiseBoundSet(**{k: float(v) for k, v in b.items()})


def bound_ratio_terms(a: float, p: TFPoint) -> Tuple[float, float, float]:
    a = as_a(a)
    r = bound_ratio_arrays(a, p.x, p.y)
    return float(r["cos_sum"]), float(r["sin_plus"]), float(r["sin_minus"])


def fd_partials(sign, a: float, p: TFPoint, h: float = 1e-5) -> Tuple[float, float]:
    """Central differences of |gabor_of_pair|; the derivative oracle."""
    def m(x, y):
        return abs(gabor_of_pair(sign, a, TFPoint(x, y)))
    dx = (m(p.x + h, p.y) - m(p.x - h, p.y)) / (2 * h)
    dy = (m(p.x, p.y + h) - m(p.x, p.y - h)) / (2 * h)
    return dx, dy
