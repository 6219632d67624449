"""Distribution types, samplers, densities, and the m(alpha) mapping."""

import math

import numpy as np
import pytest
from scipy import special
from scipy.integrate import quad

from quspeckle import (
    HKParams,
    NakagamiParams,
    EnvelopeField,
    ParameterDomainError,
    RngState,
    nakagami_moment_m,
    nakagami_pseudo_m,
    pdf_nakagami,
    sample_hk,
    sample_nakagami,
)
from quspeckle.estimators import nakagami_mle

from oracles import cdf_nakagami, pdf_rayleigh


def _xstat(intensities):
    log_i = np.log(intensities)
    return np.mean(intensities * log_i) / np.mean(intensities) - np.mean(log_i)


class TestParamTypes:
    @pytest.mark.parametrize("eps,sigma,alpha", [
        (-0.1, 1.0, 1.0), (0.0, 0.0, 1.0), (0.0, -1.0, 1.0), (0.0, 1.0, 0.0),
        (0.0, 1.0, -2.0), (math.nan, 1.0, 1.0), (0.0, 1.0, math.inf),
    ])
    def test_hk_rejects_bad_params(self, eps, sigma, alpha):
        with pytest.raises(ParameterDomainError):
            HKParams(eps, sigma, alpha)

    def test_hk_derived_quantities(self):
        p = HKParams(epsilon=2.0, sigma=1.0, alpha=10.0)
        assert p.coherent_power == 4.0
        assert p.mean_intensity == 6.0
        assert p.coherent_to_diffuse_ratio == pytest.approx(2.0 / math.sqrt(2.0))

    @pytest.mark.parametrize("m,omega", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -1.0)])
    def test_nakagami_rejects_bad_params(self, m, omega):
        with pytest.raises(ParameterDomainError):
            NakagamiParams(m, omega)

    def test_envelope_field_invariants(self):
        field = EnvelopeField(np.ones((4, 6), dtype=np.float32))
        assert field.height == 4 and field.width == 6
        assert field.values.size == field.height * field.width
        with pytest.raises(ParameterDomainError):
            EnvelopeField(np.full((3, 3), -1.0))
        with pytest.raises(ParameterDomainError):
            EnvelopeField(np.full((3, 3), np.nan))
        with pytest.raises(ParameterDomainError):
            EnvelopeField(np.ones(9))


class TestSampleHK:
    def test_zero_sigma_limit_gives_zero_amplitudes(self):
        # sigma = 0 itself is outside the domain; in the limit every draw
        # collapses onto the coherent amplitude, here eps = 0.
        with pytest.raises(ParameterDomainError):
            HKParams(0.0, 0.0, 4.0)
        tiny = sample_hk(HKParams(0.0, 1e-160, 4.0), 5, RngState(3))
        assert tiny.shape == (5,)
        assert np.all(tiny < 1e-150)

    def test_determinism(self):
        p = HKParams(0.0, 1.0, 2.0)
        a = sample_hk(p, 1000, RngState(99))
        b = sample_hk(p, 1000, RngState(99))
        assert np.array_equal(a, b)
        c = sample_hk(p, 1000, RngState(100))
        assert not np.array_equal(a, c)

    def test_diffuse_moments_and_x_statistic(self):
        a = sample_hk(HKParams(0.0, 1.0, 4.0), 10**6, RngState(11))
        intensity = a**2
        assert np.mean(intensity) == pytest.approx(2.0, rel=0.01)
        assert _xstat(intensity) == pytest.approx(1.25, rel=0.02)

    def test_coherent_mean_intensity(self):
        a = sample_hk(HKParams(2.0, 1.0, 10.0), 10**6, RngState(12))
        assert np.mean(a**2) == pytest.approx(6.0, rel=0.01)

    def test_intensity_variance_identity(self):
        for alpha, seed in [(0.5, 21), (4.0, 22)]:
            a = sample_hk(HKParams(0.0, 1.3, alpha), 10**6, RngState(seed))
            intensity = a**2
            omega = 2 * 1.3**2
            assert np.mean(intensity) == pytest.approx(omega, rel=0.02)
            expected_var = omega**2 * (alpha + 2) / alpha
            assert np.var(intensity) == pytest.approx(expected_var, rel=0.02)

    def test_scale_equivariance_exact_for_power_of_two(self):
        base = sample_hk(HKParams(1.0, 0.75, 2.0), 4096, RngState(5))
        scaled = sample_hk(HKParams(2.0, 1.5, 2.0), 4096, RngState(5))
        assert np.array_equal(scaled, 2.0 * base)

    def test_scale_equivariance_general(self):
        c = 3.7
        base = sample_hk(HKParams(0.5, 1.2, 0.8), 4096, RngState(6))
        scaled = sample_hk(HKParams(0.5 * c, 1.2 * c, 0.8), 4096, RngState(6))
        np.testing.assert_allclose(scaled, c * base, rtol=1e-14)

    def test_count_validation(self):
        with pytest.raises(ParameterDomainError):
            sample_hk(HKParams(0.0, 1.0, 1.0), 0, RngState(0))


class TestSampleNakagami:
    def test_rayleigh_case_mean_intensity(self):
        a = sample_nakagami(NakagamiParams(1.0, 1.0), 10**6, RngState(31))
        assert np.mean(a**2) == pytest.approx(1.0, rel=0.01)

    def test_cdf_against_analytic(self):
        a = sample_nakagami(NakagamiParams(0.5, 2.0), 10**6, RngState(32))
        a_sorted = np.sort(a)
        empirical = np.arange(1, a_sorted.size + 1) / a_sorted.size
        ks = np.max(np.abs(empirical - cdf_nakagami(a_sorted, 0.5, 2.0)))
        assert ks < 0.005

    def test_determinism(self):
        p = NakagamiParams(0.8, 1.5)
        assert np.array_equal(
            sample_nakagami(p, 512, RngState(7)), sample_nakagami(p, 512, RngState(7))
        )


class TestPdfNakagami:
    def test_negative_amplitude_is_zero(self):
        assert pdf_nakagami(NakagamiParams(2.0, 1.0), -1.0) == 0.0

    def test_known_point(self):
        # m=2, omega=1, x=1: 2*2^2/Gamma(2) * exp(-2) = 8 e^-2
        value = pdf_nakagami(NakagamiParams(2.0, 1.0), 1.0)
        assert value == pytest.approx(8.0 * math.exp(-2.0), rel=1e-12)

    def test_normalization(self):
        p = NakagamiParams(1.5, 0.8)
        total, _ = quad(lambda x: pdf_nakagami(p, x), 0.0, 20.0, limit=200)
        assert abs(total - 1.0) < 1e-6

    def test_m1_is_rayleigh_pointwise(self):
        xs = np.linspace(0.01, 4.0, 200)
        p = NakagamiParams(1.0, 1.7)
        np.testing.assert_allclose(
            pdf_nakagami(p, xs), pdf_rayleigh(xs, 1.7), rtol=1e-12
        )


class TestPseudoM:
    def test_rayleigh_limit(self):
        assert nakagami_pseudo_m(1e6) == pytest.approx(1.0, abs=1e-3)

    def test_matches_mle_on_large_sample(self):
        a = sample_hk(HKParams(0.0, 1.0, 2.0), 10**7, RngState(41))
        params, result = nakagami_mle(a)
        assert result.valid
        assert params.m == pytest.approx(nakagami_pseudo_m(2.0), rel=0.005)

    def test_monotonic(self):
        grid = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0]
        values = [nakagami_pseudo_m(a) for a in grid]
        assert all(x < y for x, y in zip(values, values[1:]))

    def test_moment_variant(self):
        assert nakagami_moment_m(2.0) == pytest.approx(0.5)
        np.testing.assert_allclose(
            nakagami_moment_m(np.array([1.0, 6.0])), [1 / 3, 0.75]
        )

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            nakagami_pseudo_m(0.0)
        with pytest.raises(ParameterDomainError):
            nakagami_moment_m(-1.0)

    def test_mle_fixed_point_equation(self):
        # the returned m satisfies the defining log-moment equation
        for alpha in (0.3, 1.0, 7.0):
            m = nakagami_pseudo_m(alpha)
            gap = math.log(alpha) - special.digamma(alpha) + np.euler_gamma
            assert abs(math.log(m) - special.digamma(m) - gap) < 1e-9
