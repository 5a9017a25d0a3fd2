# -*- coding: utf-8 -*-
"""
Tests for the thermal module (熱的質量・臨界密度・臨界温度・虚時間核)

Usage:
    pytest tests/test_thermal.py -v
"""
import math

import numpy as np
import pytest
from scipy import integrate

from modules.errors import BracketError, ParameterError
from modules.model import MassSpectrum, ModelParams, background_spectrum
from modules.quadrature import QuadratureConfig
from modules.thermal import (
    convexity_bounds,
    convexity_check,
    critical_density,
    critical_temperature,
    free_critical_density,
    kernel_profile,
    kms_kernel_imag_time,
    massless_thermal_mass,
    max_virtual_mass_sq,
    thermal_expectations,
    thermal_mass_shifts,
    thermal_masses,
)

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def on_shell_params():
    return ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0)


@pytest.fixture
def gapped():
    params = ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0, m_v=0.5)
    return background_spectrum(params), params.mu


class TestMasslessThermalMass:
    """φ⁴ 理論の熱的質量"""

    @pytest.mark.parametrize("beta", [0.5, 1.0, 4.0])
    def test_high_temperature_limit(self, beta):
        """M=0 で λT²/12"""
        value = massless_thermal_mass(1.0, 0.0, beta)
        assert value == pytest.approx(1.0 / (12.0 * beta**2), rel=1e-8)

    def test_linear_in_coupling(self):
        assert massless_thermal_mass(0.3, 0.5, 2.0) == pytest.approx(
            0.3 * massless_thermal_mass(1.0, 0.5, 2.0), rel=1e-12
        )

    def test_local_term(self):
        """ξ を与えると λ·log(Mξ)M²/8π² が加わる"""
        M, xi = 0.8, 3.0
        shifted = massless_thermal_mass(1.0, M, 1.0, xi=xi)
        plain = massless_thermal_mass(1.0, M, 1.0)
        assert shifted - plain == pytest.approx(math.log(M * xi) * M * M / (8 * math.pi**2), rel=1e-10)

    def test_zero_temperature(self):
        assert massless_thermal_mass(1.0, 0.5, math.inf) == 0.0

    def test_invalid_arguments(self):
        with pytest.raises(ParameterError):
            massless_thermal_mass(1.0, -1.0, 1.0)
        with pytest.raises(ParameterError):
            massless_thermal_mass(1.0, 1.0, 1.0, xi=0.0)
        with pytest.raises(ParameterError):
            massless_thermal_mass(1.0, 1.0, 0.0)


class TestThermalMasses:
    """熱的質量 m²_{β,1}, m²_{β,2}"""

    def test_degenerate_limit_matches_scalar(self):
        """μ=0, M₁=M₂ では両成分が質量 M のスカラーの熱的質量になる"""
        ms = MassSpectrum.symmetric(1.0)
        m1, m2 = thermal_masses(ms, 0.0, 2.0)
        scalar = massless_thermal_mass(1.0, 1.0, 2.0)
        assert m1 == pytest.approx(scalar, rel=1e-9)
        assert m2 == pytest.approx(scalar, rel=1e-9)

    def test_positive(self, gapped):
        ms, mu = gapped
        m1, m2 = thermal_masses(ms, mu, 1.0)
        assert m1 > 0
        assert m2 > 0

    def test_zero_temperature(self, gapped):
        ms, mu = gapped
        assert thermal_masses(ms, mu, math.inf) == (0.0, 0.0)

    def test_scheme_independence(self, gapped):
        """適応求積と Gauss–Laguerre が一致する"""
        ms, mu = gapped
        quad = QuadratureConfig()
        adaptive = thermal_masses(ms, mu, 1.0, quad)
        laguerre = thermal_masses(ms, mu, 1.0, quad.with_scheme("laguerre"))
        np.testing.assert_allclose(laguerre, adaptive, rtol=1e-5)

    def test_gapless_infrared_is_finite(self, on_shell_params):
        ms = background_spectrum(on_shell_params)
        m1, m2 = thermal_masses(ms, on_shell_params.mu, 1.0)
        assert math.isfinite(m1) and math.isfinite(m2)


class TestCriticalDensity:
    """臨界電荷密度と臨界温度"""

    def test_monotone_in_temperature(self, on_shell_params):
        ms = background_spectrum(on_shell_params)
        values = [critical_density(ms, on_shell_params.mu, beta) for beta in (0.5, 1.0, 2.0, 4.0)]
        assert all(v > 0 for v in values)
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_expectations_consistent(self, on_shell_params):
        """ρ_cr = j̃ + 2μ⟨:|ψ|²:⟩、全電荷 = ρ_cr + 2μφ²"""
        ms = background_spectrum(on_shell_params)
        mu = on_shell_params.mu
        obs = thermal_expectations(ms, mu, 1.0)
        assert obs.rho_cr == pytest.approx(critical_density(ms, mu, 1.0), rel=1e-8)
        assert obs.condensate_charge == pytest.approx(2.0 * mu * ms.phi**2, rel=1e-14)
        assert obs.total_charge == pytest.approx(obs.rho_cr + obs.condensate_charge, rel=1e-14)
        assert obs.psi_sq == pytest.approx(obs.m_b1_sq + obs.m_b2_sq, rel=1e-8)
        assert set(obs.to_dict()) >= {"rho_cr", "psi_sq", "j_tilde", "total_charge"}

    def test_round_trip(self, on_shell_params):
        """T_cr(ρ_cr(β)) = 1/β"""
        ms = background_spectrum(on_shell_params)
        rho = critical_density(ms, on_shell_params.mu, 1.0)
        assert critical_temperature(on_shell_params, rho) == pytest.approx(1.0, rel=1e-7)

    def test_round_trip_gapped(self):
        params = ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0, m_v=0.5)
        ms = background_spectrum(params)
        rho = critical_density(ms, params.mu, 0.5)
        assert critical_temperature(params, rho) == pytest.approx(2.0, rel=1e-7)

    @pytest.mark.parametrize("rho", [0.0, -1.0])
    def test_non_positive_target(self, on_shell_params, rho):
        with pytest.raises(BracketError):
            critical_temperature(on_shell_params, rho)


class TestFreeCriticalDensity:
    """自由複素場の μ = ±m での臨界密度"""

    def test_matches_direct_integral(self):
        m, beta = 1.0, 0.7

        def integrand(p):
            energy = math.sqrt(p * p + m * m)
            lower = p * p / (energy + m)
            if p == 0.0:
                return 2.0 * m / (beta * math.pi**2)
            return 2.0 / (2 * math.pi**2) * p * p * (1 / math.expm1(beta * lower) - 1 / math.expm1(beta * (energy + m)))

        expected, _ = integrate.quad(integrand, 0.0, 80.0, epsabs=1e-13, epsrel=1e-11, limit=200)
        assert free_critical_density(m, 1, beta) == pytest.approx(expected, rel=1e-7)

    def test_sign_symmetry(self):
        assert free_critical_density(1.0, -1, 1.3) == pytest.approx(-free_critical_density(1.0, 1, 1.3), rel=1e-14)

    def test_condensate_term(self):
        """調和振幅 c で 2m|c|² が加わる"""
        base = free_critical_density(1.5, 1, 2.0)
        with_c = free_critical_density(1.5, 1, 2.0, c=0.5 + 0.5j)
        assert with_c - base == pytest.approx(2.0 * 1.5 * 0.5, rel=1e-10)

    def test_zero_temperature(self):
        assert free_critical_density(1.0, 1, math.inf) == 0.0
        assert free_critical_density(1.0, -1, math.inf, c=1.0) == -2.0

    def test_invalid(self):
        with pytest.raises(ParameterError):
            free_critical_density(1.0, 0, 1.0)
        with pytest.raises(ParameterError):
            free_critical_density(0.0, 1, 1.0)


class TestConvexity:
    """仮想質量の凸性条件"""

    def test_strict_inequality(self, gapped):
        ms, mu = gapped
        bound = max_virtual_mass_sq(1.0, ms, mu, 1.0)
        assert bound > 0
        assert convexity_check(0.5 * bound, 1.0, ms, mu, 1.0)
        assert not convexity_check(bound, 1.0, ms, mu, 1.0)
        assert not convexity_check(2.0 * bound, 1.0, ms, mu, 1.0)

    def test_bounds_from_thermal_masses(self, gapped):
        ms, mu = gapped
        m1, m2 = thermal_masses(ms, mu, 1.0)
        b1, b2 = convexity_bounds(0.5, ms, mu, 1.0)
        assert b1 == pytest.approx(0.5 * (3 * m1 + m2), rel=1e-12)
        assert b2 == pytest.approx(0.5 * (3 * m2 + m1), rel=1e-12)

    def test_decreases_with_beta(self, gapped):
        """温度が下がると上限も下がる"""
        ms, mu = gapped
        bounds = [max_virtual_mass_sq(1.0, ms, mu, beta) for beta in (0.5, 1.0, 2.0)]
        assert bounds[0] > bounds[1] > bounds[2]

    def test_mass_shifts(self, gapped):
        """二次項の係数は凸性の上限のちょうど半分"""
        ms, mu = gapped
        m1, m2 = thermal_masses(ms, mu, 1.0)
        shift_1, shift_2 = thermal_mass_shifts(2.0, ms, mu, 1.0)
        assert shift_1 == pytest.approx(3 * m1 + m2, rel=1e-12)
        assert shift_2 == pytest.approx(3 * m2 + m1, rel=1e-12)
        assert 2.0 * min(shift_1, shift_2) == pytest.approx(max_virtual_mass_sq(2.0, ms, mu, 1.0), rel=1e-12)


class TestImaginaryTimeKernel:
    """虚時間 KMS 核 G(u, x)"""

    def test_kms_symmetry(self, gapped):
        """G(β−u, x) = G(u, x)ᵀ"""
        ms, mu = gapped
        beta, u, r = 1.0, 0.3, 1.0
        g = kms_kernel_imag_time(u, r, ms, mu, beta, method="shell")
        reflected = kms_kernel_imag_time(beta - u, r, ms, mu, beta, method="shell")
        scale = g.max_abs()
        np.testing.assert_allclose(reflected.to_matrix(), g.transpose().to_matrix(), atol=1e-9 * scale)

    def test_matsubara_periodic(self, gapped):
        ms, mu = gapped
        a = kms_kernel_imag_time(0.0, 2.0, ms, mu, 1.0, method="matsubara")
        b = kms_kernel_imag_time(1.0, 2.0, ms, mu, 1.0, method="matsubara")
        assert a.allclose(b, rtol=1e-12, atol=1e-15)

    def test_scalar_methods_agree(self):
        """対称相では殻和と松原和が一致する"""
        ms = MassSpectrum.symmetric(1.0)
        shell = kms_kernel_imag_time(0.4, 1.5, ms, 0.0, 1.0, method="shell")
        matsubara = kms_kernel_imag_time(0.4, 1.5, ms, 0.0, 1.0, method="matsubara")
        assert shell.c_I == pytest.approx(matsubara.c_I, rel=1e-6)

    def test_mixed_methods_agree(self, gapped):
        ms, mu = gapped
        shell = kms_kernel_imag_time(0.4, 1.5, ms, mu, 1.0, method="shell")
        matsubara = kms_kernel_imag_time(0.4, 1.5, ms, mu, 1.0, method="matsubara")
        scale = matsubara.max_abs()
        assert abs(shell.c_I - matsubara.c_I) < 1e-6 * scale
        assert abs(shell.c_3 - matsubara.c_3) < 1e-6 * scale
        assert abs(abs(shell.c_2) - abs(matsubara.c_2)) < 1e-6 * scale

    def test_vacuum_subtracted_at_origin(self, gapped):
        """熱的部分は x=0 でも有限"""
        ms, mu = gapped
        value = kms_kernel_imag_time(0.5, 0.0, ms, mu, 1.0, vacuum_subtracted=True)
        assert math.isfinite(value.c_I.real)
        assert value.c_I.real > 0

    def test_kernel_profile(self, gapped):
        """半径グリッド上の核は点ごとの評価と一致する"""
        ms, mu = gapped
        r_grid = [1.0, 2.0, 4.0]
        profile = kernel_profile(0.5, r_grid, ms, mu, 1.0)
        assert len(profile) == 3
        for r, g in zip(r_grid, profile):
            assert g == kms_kernel_imag_time(0.5, r, ms, mu, 1.0, method="matsubara")

    def test_kernel_profile_vacuum_subtracted(self, gapped):
        """熱的部分は全核から真空部分を除いたもので、全核とは異なる"""
        ms, mu = gapped
        r_grid = [1.0, 2.0]
        full = kernel_profile(0.5, r_grid, ms, mu, 1.0, method="shell")
        thermal = kernel_profile(0.5, r_grid, ms, mu, 1.0, method="shell", vacuum_subtracted=True)
        for r, f, t in zip(r_grid, full, thermal):
            assert t == kms_kernel_imag_time(0.5, r, ms, mu, 1.0, vacuum_subtracted=True, method="shell")
            assert abs(f.c_I - t.c_I) > 1e-6 * f.max_abs()
        with pytest.raises(ParameterError):
            kernel_profile(0.5, r_grid, ms, mu, 1.0, vacuum_subtracted=True)

    def test_invalid_arguments(self, gapped, on_shell_params):
        ms, mu = gapped
        with pytest.raises(ParameterError):
            kms_kernel_imag_time(1.5, 1.0, ms, mu, 1.0)
        with pytest.raises(ParameterError):
            kms_kernel_imag_time(0.5, 0.0, ms, mu, 1.0)
        with pytest.raises(ParameterError):
            kms_kernel_imag_time(0.5, 1.0, ms, mu, 1.0, method="fft")
        with pytest.raises(ParameterError):
            kms_kernel_imag_time(0.5, 1.0, ms, mu, 1.0, vacuum_subtracted=True, method="matsubara")
        with pytest.raises(ParameterError):
            kms_kernel_imag_time(0.5, 1.0, ms, mu, math.inf)
        gapless = background_spectrum(on_shell_params)
        with pytest.raises(ParameterError):
            kms_kernel_imag_time(0.5, 1.0, gapless, on_shell_params.mu, 1.0)
