import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.analytic_gabor import TFPoint, gabor_of_mixture
from src.core_signals import GaussianMixture, make_pair, norm
from src.errors import DegenerateFitError, InvalidParameterError, OutOfRangeError
from src.instability_lab import (
    QUOTIENT_PAIR, atom_inner_product, bound_dx, bound_dy, bound_l2, bound_w12,
    certificate_from_norms, certify, derivative_agreement, envelope_w12, equicontinuity_modulus,
    escape_energy, escape_witness, fit_rate, log_stability_lower_bound, pointwise_suite, rate_fit_ok,
    stability_constant_lower_bound, subspace_profile, sweep_rate,
)
from src.numeric_transform import GridSpec, PairNorms
from src.schemas import SubspaceSchema, validate

RATE_A = [1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0]


def test_bound_values():
    assert bound_l2(1.0) == pytest.approx(2 * math.sqrt(1 + 2 * math.pi) * math.exp(-math.pi / 2), rel=1e-14)
    assert bound_l2(1.0) == pytest.approx(1.12202, rel=1e-5)
    assert bound_l2(2.0) == pytest.approx(0.0190928, rel=1e-5)
    assert bound_dy(1.0, c2=1.0) == pytest.approx(math.exp(-math.pi / 2))
    assert bound_w12(1.0) == pytest.approx(bound_l2(1.0) + math.hypot(bound_dx(1.0), bound_dy(1.0)))
    assert envelope_w12(2.0) == pytest.approx(4.4399 * math.exp(-6.0))
    for a in (1.0, 2.0, 4.0):
        assert bound_dx(a) > bound_dx(a + 0.5)


def test_certify_a1_passes_and_matches_reference(calibration):
    cert = certify(1.0, workers=1)
    ref = calibration["certificates"]["1.0"]
    assert cert.passed and cert.failures() == []
    assert cert.measured_l2 == pytest.approx(ref["l2"], rel=1e-3)
    assert cert.measured_dx_l2 == pytest.approx(ref["dx"], rel=1e-3)
    assert cert.measured_dy_l2 == pytest.approx(ref["dy"], rel=1e-3)
    assert cert.measured_w12 == pytest.approx(ref["w12"], rel=1e-3)
    assert cert.singular_node_count > 0
    d = cert.to_dict()
    assert d["grid"]["nx"] == 513 and d["pass_w12"] is True


def test_certificate_failures_listed():
    g = GridSpec.box(8.0, 6.0, 1 / 16)
    fake = PairNorms(a=1.0, grid=g, l2=5.0, dx_l2=0.1, dy_l2=0.1, w12=5.0 + math.hypot(0.1, 0.1),
                     log_l2=math.log(5.0), log_dx_l2=math.log(0.1), log_dy_l2=math.log(0.1),
                     log_w12=math.log(5.0 + math.hypot(0.1, 0.1)), singular_nodes=0,
                     richardson=True, log_domain=False)
    cert = certificate_from_norms(fake)
    assert not cert.passed
    checks = {f["check"] for f in cert.failures()}
    assert checks == {"certify.l2", "certify.envelope"}


def test_fit_rate_synthetic():
    a = np.array([1.0, 1.5, 2.0, 2.5, 3.0])
    fit = fit_rate(a, np.exp(-a ** 2))
    assert fit.k_hat == pytest.approx(1.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, rel=1e-12)
    again = fit_rate(a[::-1], log_distances=-(a[::-1] ** 2))
    assert again.k_hat == pytest.approx(1.0, rel=1e-12)
    assert again.a_values == sorted(again.a_values)


def test_fit_rate_errors():
    with pytest.raises(DegenerateFitError):
        fit_rate([2.0, 2.0, 2.0], [0.1, 0.2, 0.3])
    with pytest.raises(DegenerateFitError):
        sweep_rate([2.0, 2.0, 2.0])
    with pytest.raises(InvalidParameterError):
        sweep_rate([0.5, 1.0, 2.0])
    with pytest.raises(InvalidParameterError):
        fit_rate([1.0, 2.0], [0.1, -0.1])
    with pytest.raises(InvalidParameterError):
        sweep_rate([1.0, 2.0, 3.0], which="linf")


def test_stability_lower_bound_a1():
    cert = certify(1.0, workers=1)
    ratio = stability_constant_lower_bound(1.0, certificate=cert)
    assert ratio > 1
    assert ratio >= QUOTIENT_PAIR / bound_w12(1.0)
    assert math.log(ratio) == pytest.approx(log_stability_lower_bound(cert), rel=1e-12)


def test_stability_lower_bound_underflow_is_reported():
    cert = certify(1.0, GridSpec.box(8.0, 6.0, 1 / 16), workers=1)
    cert.measured_w12 = 0.0
    cert.log_measured_w12 = -800.0
    with pytest.raises(OutOfRangeError) as ei:
        stability_constant_lower_bound(1.0, certificate=cert)
    assert ei.value.log_estimate == pytest.approx(math.log(QUOTIENT_PAIR) + 800.0)


@pytest.mark.parametrize("radius", [0.001, 1.0, 2.0, 5.0, 10.0])
def test_escape_witness(radius):
    sig, frac = escape_witness(radius, 1.0)
    assert frac < 1e-6
    assert sig.shifts[0] == pytest.approx(radius + 4.0)
    assert norm(sig) == pytest.approx(1.0, rel=1e-12)
    e = escape_energy(radius, 3.0)
    assert e["partition_error"] < 1e-9
    assert norm(e["signal"]) == pytest.approx(3.0, rel=1e-12)


def test_escape_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        escape_witness(0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        escape_witness(1.0, -2.0)


def test_atom_inner_product_matches_quadrature():
    t = np.arange(-12.0, 12.0 + 2 ** -9, 2 ** -8)
    for p, q in [(TFPoint(0.3, 0.7), TFPoint(-0.5, 1.2)), (TFPoint(1.0, -0.4), TFPoint(0.2, 0.9))]:
        fp = np.exp(2j * np.pi * p.y * t) * np.exp(-np.pi * (t - p.x) ** 2)
        fq = np.exp(2j * np.pi * q.y * t) * np.exp(-np.pi * (t - q.x) ** 2)
        quad = trapezoid(fp * np.conj(fq), t)
        assert abs(atom_inner_product(p, q) - quad) < 1e-12


def test_equicontinuity_examples():
    assert equicontinuity_modulus(TFPoint(0, 0), TFPoint(1, 0), 1.0) == pytest.approx(1.05841, rel=1e-5)
    assert equicontinuity_modulus(TFPoint(0.4, -2.0), TFPoint(0.4, -2.0), 5.0) == 0.0
    with pytest.raises(InvalidParameterError):
        equicontinuity_modulus(TFPoint(0, 0), TFPoint(1, 0), 0.0)


def test_equicontinuity_dominates_sampled_signals():
    L = 2.0
    plus, minus = make_pair(1.0)
    sigs = [GaussianMixture.gaussian(), GaussianMixture.shifted(1.0), plus, minus]
    sigs = [s.scaled(L / norm(s)) for s in sigs]
    rng = np.random.default_rng(7)
    for _ in range(50):
        x, y, dx, dy = rng.uniform(-2, 2), rng.uniform(-2, 2), rng.normal(0, 0.3), rng.normal(0, 0.3)
        p, q = TFPoint(x, y), TFPoint(x + dx, y + dy)
        mod = equicontinuity_modulus(p, q, L)
        for s in sigs:
            assert abs(gabor_of_mixture(s, p.x, p.y) - gabor_of_mixture(s, q.x, q.y)) <= mod * (1 + 1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 3.0])
def test_pointwise_suite_clean(a):
    res = pointwise_suite(a, n_points=10_000)
    assert res["violations"] == 0
    assert res["skip_rate"] < 1e-3


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_derivative_agreement(a):
    res = derivative_agreement(a)
    assert res["max_rel_error"] < 1e-5


def test_subspace_profile():
    df = subspace_profile([1, 2, 3], 0.5, workers=1)
    validate(df, SubspaceSchema)
    assert df["dim"].tolist() == [3, 5, 7]
    assert np.allclose(df["quotient_distance"], 2 ** 0.75, rtol=1e-12)
    assert df["log_inverse_stability_lb"].is_monotonic_increasing
    assert df["gram_cond"].is_monotonic_increasing
    with pytest.raises(InvalidParameterError):
        subspace_profile([1], 0.0)


@pytest.mark.slow
def test_calibration_certificates_pass(calibration_certs, calibration):
    for a, cert in calibration_certs.items():
        assert cert.passed, cert.failures()
    for key, ref in calibration["certificates"].items():
        cert = calibration_certs[float(key)]
        assert cert.measured_l2 == pytest.approx(ref["l2"], rel=1e-3)
        assert cert.measured_w12 == pytest.approx(ref["w12"], rel=1e-3)


@pytest.mark.slow
def test_rate_fit_over_sweep(calibration_certs, calibration):
    certs = [calibration_certs[a] for a in RATE_A]
    fit = sweep_rate(RATE_A, certificates=certs)
    assert 1.45 <= fit.k_hat <= 1.65
    assert fit.r_squared >= 0.999
    assert rate_fit_ok(fit)
    assert fit.k_hat == pytest.approx(calibration["rate"]["k_hat_w12"], abs=1e-2)
    l2 = sweep_rate(RATE_A, certificates=certs, which="l2")
    assert l2.k_hat >= 1.45


@pytest.mark.slow
def test_stability_grows(calibration_certs):
    certs = [calibration_certs[a] for a in RATE_A]
    ratios = [stability_constant_lower_bound(c.a, certificate=c) for c in certs]
    assert all(r2 > r1 for r1, r2 in zip(ratios, ratios[1:]))
    assert ratios[4] / ratios[0] >= math.exp(1.45 * 3.0)
    half = [(c.a, r) for c, r in zip(certs, ratios) if (2 * c.a).is_integer()]
    assert [a for a, _ in half] == [1.0, 1.5, 2.0, 2.5, 3.0]
    for (a1, r1), (a2, r2) in zip(half, half[1:]):
        assert r2 / r1 >= math.exp(1.45 * (a2 * a2 - a1 * a1)) / 2
    for c, r in zip(certs, ratios):
        assert r >= math.exp(1.45 * c.a ** 2) * QUOTIENT_PAIR / 4.4399
