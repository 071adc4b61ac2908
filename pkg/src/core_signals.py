# src/core_signals.py
"""
Finite Gaussian mixtures  f(t) = sum_i c_i * exp(-pi (t - s_i)^2)  and their exact L2 algebra.

Every signal the lab works with (the window phi, the translates u_{+-a}, the pair f_a^{+-})
is such a mixture, so inner products, norms and the phase-quotient distance are closed forms.
"""
from __future__ import annotations
import cmath
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from src.errors import InvalidParameterError, require

SHIFT_MERGE_TOL = 1e-12
QUOTIENT_CLAMP_REL = 1e-14
SQRT_HALF = 2.0 ** -0.5
PHI_NORM = 2.0 ** -0.25          # ||phi||_{L2}

Number = Union[int, float, complex]


@dataclass(frozen=True)
class GaussianMixture:
    terms: Tuple[Tuple[complex, float], ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[Number, float]]) -> "GaussianMixture":
        merged: List[List] = []
        for c, s in sorted(((complex(c), float(s)) for c, s in terms), key=lambda t: t[1]):
            require(math.isfinite(s), f"non_finite_shift={s}")
            if merged and abs(merged[-1][1] - s) <= SHIFT_MERGE_TOL:
                merged[-1][0] += c
            else:
                merged.append([c, s])
        return cls(tuple((c, s) for c, s in merged if c != 0))

    @classmethod
    def gaussian(cls) -> "GaussianMixture":
        return cls(((1 + 0j, 0.0),))

    @classmethod
    def shifted(cls, s: float, coeff: Number = 1.0) -> "GaussianMixture":
        return cls.from_terms([(coeff, s)])

    @classmethod
    def zero(cls) -> "GaussianMixture":
        return cls(())

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=complex)

    @property
    def shifts(self) -> np.ndarray:
        return np.array([s for _, s in self.terms], dtype=float)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def extent(self) -> Tuple[float, float]:
        if self.is_zero:
            return 0.0, 0.0
        return float(self.shifts.min()), float(self.shifts.max())

    def max_abs_shift(self) -> float:
        return float(np.abs(self.shifts).max()) if self.terms else 0.0

    def scaled(self, c: Number) -> "GaussianMixture":
        return GaussianMixture.from_terms((c * ci, s) for ci, s in self.terms)

    def translated(self, a: float) -> "GaussianMixture":
        return GaussianMixture.from_terms((ci, s + a) for ci, s in self.terms)

    def reflected(self) -> "GaussianMixture":
        return GaussianMixture.from_terms((ci, -s) for ci, s in self.terms)

    def __add__(self, other: "GaussianMixture") -> "GaussianMixture":
        return GaussianMixture.from_terms(list(self.terms) + list(other.terms))

    def __neg__(self) -> "GaussianMixture":
        return self.scaled(-1)

    def __sub__(self, other: "GaussianMixture") -> "GaussianMixture":
        return self + (-other)

    def __mul__(self, c: Number) -> "GaussianMixture":
        return self.scaled(c)

    __rmul__ = __mul__

    def to_list(self) -> List[List[float]]:
        return [[c.real, c.imag, s] for c, s in self.terms]


@dataclass(frozen=True)
class SeparationParam:
    a: float

    def __post_init__(self):
        require(math.isfinite(self.a) and self.a > 0, f"a_must_be_positive:{self.a}")

    @classmethod
    def discretized(cls, k: int, q: float) -> "SeparationParam":
        """a_k = k q, the separation of the pair living in H_k."""
        require(k >= 1 and q > 0, f"k={k},q={q}")
        return cls(k * q)

    def __float__(self) -> float:
        return float(self.a)


def as_a(a: Union[float, SeparationParam]) -> float:
    return SeparationParam(float(a)).a


def evaluate(sig: GaussianMixture, t):
    """sum_i c_i exp(-pi (t - s_i)^2); scalar in, complex out; arrays broadcast."""
    if np.ndim(t) == 0:
        return complex(sum(c * math.exp(-math.pi * (float(t) - s) ** 2) for c, s in sig.terms))
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for c, s in sig.terms:
        out += c * np.exp(-math.pi * (t - s) ** 2)
    return out


def make_pair(a: Union[float, SeparationParam]) -> Tuple[GaussianMixture, GaussianMixture]:
    a = as_a(a)
    plus = GaussianMixture.from_terms([(1, -a), (1, a)])
    minus = GaussianMixture.from_terms([(1, -a), (-1, a)])
    return plus, minus


def gaussian_overlap(p, q, omega=0.0):
    """int exp(-pi(t-p)^2) exp(-pi(t-q)^2) exp(-2 pi i omega t) dt, broadcasting over arrays."""
    if np.ndim(p) == 0 and np.ndim(q) == 0 and np.ndim(omega) == 0:
        p, q, omega = float(p), float(q), float(omega)
        mag = SQRT_HALF * math.exp(-0.5 * math.pi * ((p - q) ** 2 + omega ** 2))
        return mag * cmath.exp(-1j * math.pi * omega * (p + q))
    p, q, omega = np.asarray(p, float), np.asarray(q, float), np.asarray(omega, float)
    mag = SQRT_HALF * np.exp(-0.5 * np.pi * ((p - q) ** 2 + omega ** 2))
    return mag * np.exp(-1j * np.pi * omega * (p + q))


def inner_product(f: GaussianMixture, g: GaussianMixture) -> complex:
    """Exact <f, g> = int f conj(g) dt."""
    if f.is_zero or g.is_zero:
        return 0j
    w = gaussian_overlap(f.shifts[:, None], g.shifts[None, :]).real
    prod = (f.coeffs[:, None] * np.conj(g.coeffs)[None, :]) * w
    return complex(math.fsum(prod.real.ravel()), math.fsum(prod.imag.ravel()))


def norm(f: GaussianMixture) -> float:
    return math.sqrt(max(inner_product(f, f).real, 0.0))


def quotient_distance(f: GaussianMixture, g: GaussianMixture) -> float:
    """inf over |tau| = 1 of ||f - tau g||, attained at tau = <f,g>/|<f,g>|."""
    nf2 = inner_product(f, f).real
    ng2 = inner_product(g, g).real
    d2 = nf2 + ng2 - 2.0 * abs(inner_product(f, g))
    # below this the radicand is rounding noise from the cancellation
    if d2 <= QUOTIENT_CLAMP_REL * (nf2 + ng2):
        return 0.0
    return math.sqrt(d2)


def subspace_dim(k: int, q: float) -> int:
    require(isinstance(k, (int, np.integer)) and k >= 1, f"k_must_be_at_least_1:{k}")
    require(q > 0, f"q_must_be_positive:{q}")
    return 2 * int(k) + 1


def subspace_basis(k: int, q: float) -> List[GaussianMixture]:
    n = subspace_dim(k, q)
    return [GaussianMixture.shifted((i - k) * q) for i in range(n)]


def gram_matrix(basis: Sequence[GaussianMixture]) -> np.ndarray:
    n = len(basis)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[i, j] = inner_product(basis[i], basis[j])
    return G


def in_span(sig: GaussianMixture, basis: Sequence[GaussianMixture]) -> bool:
    allowed = {round(b.terms[0][1], 9) for b in basis if len(b.terms) == 1}
    return all(round(s, 9) in allowed for _, s in sig.terms)


def signal_profile(a: Union[float, SeparationParam], t) -> Tuple[np.ndarray, np.ndarray]:
    plus, minus = make_pair(a)
    t = np.asarray(t, dtype=float)
    return evaluate(plus, t).real, evaluate(minus, t).real


def check_positive(name: str, v: float) -> float:
    if not (math.isfinite(v) and v > 0):
        raise InvalidParameterError(f"{name}_must_be_positive:{v}")
    return float(v)
