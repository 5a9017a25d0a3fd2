# -*- coding: utf-8 -*-
"""
Tests for the hadamard module (Hadamard 係数・輸送方程式・摂動的一致性)

Usage:
    pytest tests/test_hadamard.py -v
"""
import math

import pytest

from modules.errors import ParameterError
from modules.hadamard import (
    RHO2_NORM,
    SERIES_THRESHOLD,
    agreement_remainder,
    crosses_cut,
    delta_phi2_first_order,
    hadamard_coefficients,
    rho2_spectral,
    scalar_v_coefficient,
    transport_ladder,
    transport_residual,
    u_coeff,
    v0_coeff,
    v1_coinciding,
)
from modules.model import MassSpectrum, ModelParams, background_spectrum
from modules.pauli import Mat2C

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def spectrum():
    params = ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0)
    return background_spectrum(params), params.mu


class TestCoefficients:
    """U, V₀, [V₁]"""

    def test_u_is_rotation(self):
        u = u_coeff(0.37, SQRT2)
        assert (u * u.transpose() - Mat2C.identity()).max_abs() < 1e-14
        angle = SQRT2 * 0.37
        assert u.entry(0, 1) == pytest.approx(-math.sin(angle), abs=1e-15)
        assert u.entry(1, 0) == pytest.approx(math.sin(angle), abs=1e-15)

    def test_v0_at_coinciding_point(self, spectrum):
        """V₀(0) = −½[(M²+μ²)I + δM²σ₃]"""
        ms, mu = spectrum
        v0 = v0_coeff(0.0, ms, mu)
        expected = Mat2C(c_I=-0.5 * (ms.M_sq + mu * mu), c_3=-0.5 * ms.dM_sq)
        assert v0.allclose(expected, rtol=1e-14, atol=1e-15)

    def test_v0_series_is_continuous(self, spectrum):
        """テイラー展開への切り替え点の前後で連続"""
        ms, mu = spectrum
        x_switch = SERIES_THRESHOLD / (2.0 * mu)
        below = v0_coeff(x_switch * (1 - 1e-9), ms, mu)
        above = v0_coeff(x_switch * (1 + 1e-9), ms, mu)
        assert below.allclose(above, rtol=1e-8, atol=1e-12)

    def test_v1_symmetric_phase(self):
        """μ=0, δM²=0 で [V₁] = −M⁴/8·I"""
        ms = MassSpectrum.symmetric(2.0)
        v1 = v1_coinciding(ms, 0.0)
        assert v1.c_I == pytest.approx(-0.5, rel=1e-14)
        assert v1.c_3 == 0.0

    def test_v1_condensed_phase(self, spectrum):
        ms, mu = spectrum
        v1 = v1_coinciding(ms, mu)
        m_mu = ms.M_sq + mu * mu
        assert v1.c_I == pytest.approx(-(m_mu**2 + ms.dM_sq**2) / 8.0, rel=1e-14)
        assert v1.c_3 == pytest.approx(-(ms.M_sq + mu * mu / 3.0) * ms.dM_sq / 4.0, rel=1e-14)
        assert v1.is_hermitian()

    def test_coefficient_bundle(self, spectrum):
        ms, mu = spectrum
        coeffs = hadamard_coefficients(ms, mu, xi=2.0)
        assert coeffs.V1_coinciding == v1_coinciding(ms, mu)
        assert coeffs.U(0.2) == u_coeff(0.2, mu)
        with pytest.raises(ParameterError):
            hadamard_coefficients(ms, mu, xi=0.0)

    def test_length_scale_term(self, spectrum):
        """ξ = 1 では消え、一般には −log(ξ²)·V₀(0)/8π²"""
        ms, mu = spectrum
        assert hadamard_coefficients(ms, mu, xi=1.0).length_scale_term().max_abs() == 0.0
        term = hadamard_coefficients(ms, mu, xi=3.0).length_scale_term()
        expected = v0_coeff(0.0, ms, mu) * (-math.log(9.0) / (8.0 * math.pi**2))
        assert (term - expected).max_abs() < 1e-15

    def test_length_scale_term_scalar_limit(self):
        """μ = δM² = 0 ではスカラー場の局所項 log(ξ)·M²/8π² に一致する"""
        M, xi = 0.8, 3.0
        term = hadamard_coefficients(MassSpectrum.symmetric(M * M), 0.0, xi=xi).length_scale_term()
        assert term.c_I == pytest.approx(math.log(xi) * M * M / (8.0 * math.pi**2), rel=1e-14)
        assert abs(term.c_3) < 1e-15


class TestTransport:
    """第1輸送方程式の残差と収束次数"""

    def test_second_order_convergence(self, spectrum):
        ms, mu = spectrum
        rows = transport_ladder(0.7, ms, mu, [0.1, 0.05, 0.025, 0.0125])
        assert all(row["residual"] > 0 for row in rows)
        for row in rows[1:]:
            assert row["observed_order"] >= 1.9
        assert math.isnan(rows[0]["observed_order"])

    def test_wrong_u_does_not_converge(self, spectrum):
        """μ をずらした U は h → 0 で残差が消えない"""
        ms, mu = spectrum
        wrong = lambda t: u_coeff(t, 1.01 * mu)  # noqa: E731
        rows = transport_ladder(0.7, ms, mu, [0.1, 0.05, 0.025], u_func=wrong)
        assert rows[-1]["residual"] > 1e-3
        assert rows[-1]["observed_order"] < 0.5

    def test_invalid_step(self, spectrum):
        ms, mu = spectrum
        with pytest.raises(ParameterError):
            transport_residual(0.7, ms, mu, 0.0)


class TestSpectralDensity:
    """2粒子スペクトル密度 ρ₂"""

    def test_values(self):
        assert rho2_spectral(8.0, 1.0) == pytest.approx(RHO2_NORM * math.sqrt(0.5), rel=1e-14)
        assert rho2_spectral(4.0, 1.0) == 0.0
        assert rho2_spectral(3.0, 0.0) == RHO2_NORM

    def test_below_threshold(self):
        with pytest.raises(ParameterError):
            rho2_spectral(3.9, 1.0)

    def test_cut(self):
        assert crosses_cut(1.5, 0.5)
        assert not crosses_cut(0.5, 0.5)
        assert not crosses_cut(-2.0, 0.5)


class TestDeltaPhi2:
    """ΔΦ²₍₁₎ の一次の検査"""

    def test_vanishes_at_zero_momentum(self):
        assert delta_phi2_first_order(0.0, 0.5, 0.1) == 0

    def test_linear_in_mass_shift(self):
        a = delta_phi2_first_order(0.3, 0.5, 0.1)
        b = delta_phi2_first_order(0.3, 0.5, 0.2)
        assert b == pytest.approx(2.0 * a, rel=1e-12)

    def test_real_below_cut(self):
        value = delta_phi2_first_order(-0.4, 0.5, 0.1)
        assert value.imag == 0.0
        # p² < 0 では積分が正なので δm²·(−p²)·(正) > 0
        assert value.real > 0

    def test_absorptive_part_above_cut(self):
        """p² > 4m² では −iπ·留数の虚部が出る"""
        p_sq, m, dm, a = 2.0, 0.5, 0.1, 0.3
        value = delta_phi2_first_order(p_sq, m, dm, a=a)
        expected_imag = math.pi * dm * p_sq * rho2_spectral(p_sq, m) / (p_sq + a)
        assert value.imag == pytest.approx(expected_imag, rel=1e-12)
        assert math.isfinite(value.real)

    def test_invalid(self):
        with pytest.raises(ParameterError):
            delta_phi2_first_order(0.3, 0.5, 0.1, a=-1.0)
        with pytest.raises(ParameterError):
            delta_phi2_first_order(0.3, 0.0, 0.1, a=0.0)


class TestAgreement:
    """スカラー Hadamard 係数の質量についての線形性"""

    def test_series_matches_bessel(self):
        """小さい σ の級数と Bessel 関数の式が一致する"""
        m_sq, c = 0.7, 1.0
        sigma = 1e-8 / (2 * m_sq)
        series = scalar_v_coefficient(m_sq, sigma * 0.999, c)
        bessel = scalar_v_coefficient(m_sq, sigma * 1.001, c)
        assert series == pytest.approx(bessel, rel=1e-6)

    def test_remainder_vanishes_at_coinciding_point(self):
        assert abs(agreement_remainder(0.5, 0.1, 0.0)) < 1e-15

    @pytest.mark.parametrize("sign", [1.0, -1.0])
    def test_remainder_is_first_order_in_sigma(self, sign):
        sigmas = [sign * 0.4, sign * 0.2, sign * 0.1]
        values = [abs(agreement_remainder(0.5, 0.1, s, c=1.0)) for s in sigmas]
        assert values[0] > values[1] > values[2] > 0
        assert values[1] / values[2] == pytest.approx(2.0, rel=0.1)
