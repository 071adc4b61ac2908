import cmath
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.core_signals import (
    PHI_NORM, GaussianMixture, SeparationParam, evaluate, gram_matrix, in_span, inner_product,
    make_pair, norm, quotient_distance, signal_profile, subspace_basis, subspace_dim,
)
from src.errors import InvalidParameterError

PHI = GaussianMixture.gaussian()


def _quad_inner(f, g, a):
    t = np.arange(-a - 8.0, a + 8.0 + 2 ** -9, 2 ** -8)
    return trapezoid(evaluate(f, t) * np.conj(evaluate(g, t)), t)


def test_evaluate_examples():
    assert evaluate(PHI, 0.0) == pytest.approx(1.0)
    plus, minus = make_pair(1.0)
    assert evaluate(plus, 0.0).real == pytest.approx(2 * math.exp(-math.pi), rel=1e-12)
    for a in (0.3, 1.0, 2.5):
        assert abs(evaluate(make_pair(a)[1], 0.0)) == 0.0


def test_make_pair_structure():
    plus, minus = make_pair(2.0)
    assert plus.to_list() == [[1.0, 0.0, -2.0], [1.0, 0.0, 2.0]]
    assert minus.to_list() == [[1.0, 0.0, -2.0], [-1.0, 0.0, 2.0]]
    assert plus + minus == GaussianMixture.shifted(-2.0, 2)
    assert plus - minus == GaussianMixture.shifted(2.0, 2)


def test_terms_merge_and_zeros_drop():
    s = GaussianMixture.shifted(1.0) + GaussianMixture.shifted(1.0 + 1e-13)
    assert len(s.terms) == 1 and s.terms[0][0] == 2
    assert (GaussianMixture.shifted(1.0) - GaussianMixture.shifted(1.0)).is_zero
    assert inner_product(GaussianMixture.zero(), PHI) == 0


def test_inner_product_closed_forms():
    assert inner_product(PHI, PHI).real == pytest.approx(2 ** -0.5, rel=1e-14)
    assert norm(PHI) == pytest.approx(2 ** -0.25, rel=1e-14)
    for a in (0.5, 1.0, 2.0):
        u_a, u_m = GaussianMixture.shifted(a), GaussianMixture.shifted(-a)
        assert inner_product(u_a, u_m).real == pytest.approx(2 ** -0.5 * math.exp(-2 * math.pi * a * a), rel=1e-12)
        plus, minus = make_pair(a)
        assert abs(inner_product(plus, minus)) < 1e-15


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 4.0])
def test_inner_product_matches_quadrature(a):
    plus, minus = make_pair(a)
    sigs = [PHI, GaussianMixture.shifted(a), plus, minus]
    for f in sigs:
        for g in sigs:
            exact = inner_product(f, g)
            quad = _quad_inner(f, g, a)
            assert abs(exact - quad) <= 1e-10 * max(abs(exact), 1e-300) or abs(exact - quad) < 1e-15


def test_inner_product_hermitian_and_positive():
    f = GaussianMixture.from_terms([(1 + 2j, 0.3), (-0.5j, -1.1)])
    g = GaussianMixture.from_terms([(2.0, 0.0), (1j, 0.7)])
    assert inner_product(f, g) == pytest.approx(inner_product(g, f).conjugate(), abs=1e-15)
    ff = inner_product(f, f)
    assert abs(ff.imag) < 1e-15 and ff.real > 0


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 4.0, 8.0])
def test_pair_quotient_distance_constant(a):
    plus, minus = make_pair(a)
    assert quotient_distance(plus, minus) == pytest.approx(2 ** 0.75, rel=1e-12)


def test_quotient_distance_phase_invariance():
    plus, minus = make_pair(1.0)
    f = GaussianMixture.from_terms([(1 + 1j, -0.4), (0.5, 0.9)])
    assert quotient_distance(f, f) == 0.0
    assert quotient_distance(PHI, PHI.scaled(1j)) == 0.0
    assert quotient_distance(f.scaled(3.0), f.scaled(-3j)) == 0.0
    assert quotient_distance(PHI, PHI.scaled(1.001)) == pytest.approx(0.001 * PHI_NORM, rel=1e-6)
    base = quotient_distance(f, minus)
    for k in range(16):
        tau = cmath.exp(2j * math.pi * k / 16)
        assert quotient_distance(f, minus.scaled(tau)) == pytest.approx(base, rel=1e-12)
    assert quotient_distance(minus, f) == pytest.approx(base, rel=1e-12)


def test_subspace_dim_and_basis():
    assert subspace_dim(1, 0.5) == 3
    assert subspace_dim(5, 0.25) == 11
    with pytest.raises(InvalidParameterError):
        subspace_dim(0, 0.5)
    basis = subspace_basis(2, 0.5)
    G = gram_matrix(basis)
    assert np.allclose(G, G.conj().T)
    assert np.linalg.eigvalsh(G).min() > 0
    assert in_span(make_pair(1.0)[0], basis)
    assert not in_span(make_pair(1.25)[0], basis)


def test_separation_param():
    assert SeparationParam.discretized(3, 0.5).a == 1.5
    with pytest.raises(InvalidParameterError):
        SeparationParam(0.0)
    with pytest.raises(InvalidParameterError):
        SeparationParam(float("nan"))


def test_signal_profile_shapes():
    t = np.linspace(-6, 6, 121)
    fp, fm = signal_profile(2.0, t)
    assert fp.shape == t.shape == fm.shape
    assert np.allclose(fp, fp[::-1])
    assert np.allclose(fm, -fm[::-1])
