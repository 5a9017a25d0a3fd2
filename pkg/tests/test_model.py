# -*- coding: utf-8 -*-
"""
Tests for the model module (凝縮背景・質量スペクトル・分散関係)

Usage:
    pytest tests/test_model.py -v
"""
import math

import numpy as np
import pytest

from modules.errors import ParameterError
from modules.model import (
    MassSpectrum,
    ModelParams,
    background_spectrum,
    condensate_amplitude,
    delta_omega_sq,
    mass_spectrum,
    omega_pm,
    omega_pm_sq_array,
    sound_speed,
    sound_speed_closed_form,
    w_squares,
)

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def on_shell():
    """m=1, μ=√2, λ=1 (φ=1, M₁²=2, M₂²=0)"""
    return ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0)


class TestModelParams:
    """ModelParams のバリデーション"""

    def test_negative_beta(self):
        """β ≤ 0 はエラー"""
        with pytest.raises(ParameterError, match="beta must be positive"):
            ModelParams(m=1.0, mu=1.0, lam=1.0, beta=-1.0)

    @pytest.mark.parametrize("field,kwargs", [
        ("m", {"m": 0.0}),
        ("lambda", {"lam": -0.1}),
        ("m_v", {"m_v": -1.0}),
    ])
    def test_invalid_fields(self, field, kwargs):
        """不正な入力はフィールド名付きのエラー"""
        base = {"m": 1.0, "mu": 1.0, "lam": 1.0, "beta": 1.0}
        base.update(kwargs)
        with pytest.raises(ParameterError) as info:
            ModelParams(**base)
        assert info.value.details["field"] == field

    def test_with_beta_and_dict(self, on_shell):
        """with_beta と to_dict"""
        hot = on_shell.with_beta(0.5)
        assert hot.temperature == 2.0
        assert hot.to_dict()["lambda"] == 1.0


class TestCondensate:
    """凝縮振幅と質量スペクトル"""

    def test_marginal_case(self):
        """μ² = m² では φ = 0"""
        assert condensate_amplitude(ModelParams(m=1.0, mu=1.0, lam=0.5, beta=1.0)) == 0.0

    def test_on_shell_amplitude(self, on_shell):
        """(m=1, μ=√2, λ=1) → φ=1"""
        assert condensate_amplitude(on_shell) == pytest.approx(1.0, rel=1e-14)

    def test_amplitude_squared(self):
        """(m=1, μ=2, λ=0.3) → φ²=10"""
        phi = condensate_amplitude(ModelParams(m=1.0, mu=2.0, lam=0.3, beta=1.0))
        assert phi**2 == pytest.approx(10.0, rel=1e-13)

    def test_on_shell_masses(self, on_shell):
        """凝縮条件上では M₁² = 2(μ²−m²)、M₂² = 0"""
        ms = background_spectrum(on_shell)
        assert ms.M2_sq == 0.0
        assert ms.M1_sq == pytest.approx(2.0, rel=1e-14)
        assert ms.is_gapless

    def test_symmetric_point(self):
        """φ=0 なら縮退 M₁² = M₂² = m² − μ²"""
        ms = mass_spectrum(ModelParams(m=1.0, mu=0.5, lam=1.0, beta=1.0), 0.0)
        assert ms.M1_sq == ms.M2_sq == pytest.approx(0.75)
        assert ms.dM_sq == 0.0
        assert ms.is_degenerate

    def test_virtual_mass_split(self, on_shell):
        """m_v = 0.1 で M₁² = 2.01、M₂² = 0.01"""
        params = ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0, m_v=0.1)
        ms = mass_spectrum(params, 1.0)
        assert ms.M1_sq == pytest.approx(2.01, rel=1e-12)
        assert ms.M2_sq == pytest.approx(0.01, rel=1e-9)

    def test_unstable_linearization(self):
        """M₂² < 0 になる φ は拒否"""
        with pytest.raises(ParameterError, match="unstable"):
            mass_spectrum(ModelParams(m=1.0, mu=2.0, lam=0.3, beta=1.0), 0.0)

    def test_virtual_mass_restores_stability(self):
        """M₂² < 0 < M₂² + m_v² なら受け入れる (判定は m_v² を足した後)"""
        ms = mass_spectrum(ModelParams(m=1.0, mu=2.0, lam=0.3, beta=1.0, m_v=2.0), 0.0)
        assert ms.M2_sq == pytest.approx(1.0, rel=1e-14)
        assert ms.M1_sq == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(ParameterError, match="unstable"):
            mass_spectrum(ModelParams(m=1.0, mu=2.0, lam=0.3, beta=1.0, m_v=1.5), 0.0)

    def test_spectrum_invariants(self):
        """M ± δM² が M₁², M₂² を再現する"""
        ms = MassSpectrum(phi=0.3, M1_sq=2.5, M2_sq=0.7)
        assert ms.M_sq + ms.dM_sq == pytest.approx(2.5, rel=1e-15)
        assert ms.M_sq - ms.dM_sq == pytest.approx(0.7, abs=1e-15)
        with pytest.raises(ParameterError):
            MassSpectrum(phi=0.0, M1_sq=0.5, M2_sq=1.0)


class TestDispersion:
    """2分枝分散関係 ω±"""

    def test_vieta_identities_random(self):
        """ランダムな 10⁴ 点で Vieta の和と積が rtol 1e−12 で成り立つ"""
        rng = np.random.default_rng(2024)
        worst_sum = worst_product = 0.0
        for _ in range(100):
            m = rng.uniform(0.2, 2.0)
            params = ModelParams(
                m=m, mu=rng.uniform(0.0, 3.0), lam=rng.uniform(0.1, 2.0), beta=1.0, m_v=rng.uniform(0.0, 0.5)
            )
            ms = background_spectrum(params)
            p_sq = rng.uniform(0.0, 9.0, size=100)
            plus, minus = omega_pm_sq_array(ms, params.mu, p_sq)
            w_sq = p_sq + ms.M_sq
            target_sum = 2.0 * (w_sq + 2.0 * params.mu**2)
            target_product = (p_sq + ms.M1_sq) * (p_sq + ms.M2_sq)
            worst_sum = max(worst_sum, float(np.max(np.abs(plus + minus - target_sum) / target_sum)))
            mask = target_product > 0
            worst_product = max(
                worst_product,
                float(np.max(np.abs(plus * minus - target_product)[mask] / target_product[mask])),
            )
        assert worst_sum < 1e-12
        assert worst_product < 1e-12

    def test_degenerate_closed_form(self):
        """δM² = 0 なら ω± = √(w²+μ²) ± μ"""
        ms = MassSpectrum.symmetric(0.75)
        mu = 0.5
        for p in (0.0, 0.3, 1.7):
            plus, minus = omega_pm(ms, mu, p)
            root = math.sqrt(p * p + 0.75 + mu * mu)
            assert plus == pytest.approx(root + mu, rel=1e-12)
            assert minus == pytest.approx(root - mu, rel=1e-12)

    def test_gapless_at_zero_momentum(self, on_shell):
        """M₂=0, p=0 で ω₋=0、ω₊² = M₁² + 4μ²"""
        ms = background_spectrum(on_shell)
        plus, minus = omega_pm(ms, on_shell.mu, 0.0)
        assert minus == 0.0
        assert plus**2 == pytest.approx(ms.M1_sq + 4.0 * on_shell.mu**2, rel=1e-12)

    def test_gapped_branch(self):
        """M₂ > 0 なら ω₋(0) > 0"""
        ms = background_spectrum(ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0, m_v=0.5))
        assert omega_pm(ms, SQRT2, 0.0)[1] > 0.2

    def test_monotone_in_momentum(self, on_shell):
        """ω±(p) は |p| について狭義単調増加"""
        ms = background_spectrum(on_shell)
        p = np.linspace(0.0, 5.0, 200)
        plus, minus = omega_pm_sq_array(ms, on_shell.mu, p * p)
        assert np.all(np.diff(plus) > 0)
        assert np.all(np.diff(minus) > 0)

    def test_vector_momentum(self, on_shell):
        """3成分ベクトルと大きさで同じ値"""
        ms = background_spectrum(on_shell)
        assert omega_pm(ms, on_shell.mu, (0.6, 0.8, 0.0)) == pytest.approx(omega_pm(ms, on_shell.mu, 1.0))

    def test_helpers(self, on_shell):
        """w², w₁², w₂² と δω²"""
        ms = background_spectrum(on_shell)
        w_sq, w1_sq, w2_sq = w_squares(ms, 1.0)
        assert w1_sq >= w_sq >= w2_sq
        plus, minus = omega_pm_sq_array(ms, on_shell.mu, 1.0)
        assert delta_omega_sq(ms, on_shell.mu, 1.0) == pytest.approx(float(plus - minus) / 2.0, rel=1e-12)


class TestSoundSpeed:
    """ゴールドストーン分枝の音速"""

    @pytest.mark.parametrize("m,mu,expected_sq", [
        (1.0, SQRT2, 1.0 / 5.0),
        (1.0, 2.0, 3.0 / 11.0),
    ])
    def test_known_values(self, m, mu, expected_sq):
        """c_s² = 1/5 (μ=√2)、3/11 (μ=2)"""
        params = ModelParams(m=m, mu=mu, lam=0.3, beta=1.0)
        c_s = sound_speed(background_spectrum(params), mu)
        assert c_s**2 == pytest.approx(expected_sq, rel=1e-8)

    @pytest.mark.parametrize("m,mu", [(1.0, 1.2), (0.5, 0.9), (2.0, 3.5)])
    def test_matches_closed_form(self, m, mu):
        """外挿値が閉じた式 √((μ²−m²)/(3μ²−m²)) と 1% 以内で一致"""
        params = ModelParams(m=m, mu=mu, lam=0.7, beta=1.0)
        c_s = sound_speed(background_spectrum(params), mu)
        assert c_s == pytest.approx(sound_speed_closed_form(params), rel=1e-2)

    def test_vanishes_near_threshold(self):
        """μ → m⁺ で c_s → 0"""
        params = ModelParams(m=1.0, mu=1.0 + 1e-6, lam=1.0, beta=1.0)
        assert sound_speed_closed_form(params) < 2e-3

    def test_gapped_rejected(self):
        """ギャップのある相では音速はない"""
        ms = background_spectrum(ModelParams(m=1.0, mu=SQRT2, lam=1.0, beta=1.0, m_v=0.5))
        with pytest.raises(ParameterError):
            sound_speed(ms, SQRT2)
