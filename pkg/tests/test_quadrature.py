# -*- coding: utf-8 -*-
"""
Tests for the quadrature module (動径積分・Gauss 求積・正弦変換)

Usage:
    pytest tests/test_quadrature.py -v
"""
import math

import numpy as np
import pytest

from modules.errors import ParameterError, QuadratureError
from modules.quadrature import (
    QuadratureConfig,
    gauss_legendre,
    gauss_legendre_panels,
    quad_checked,
    radial_integral,
    sine_transform,
)


def thermal_moment(p):
    return p**2 * np.exp(-2.0 * p)


class TestConfig:
    """QuadratureConfig"""

    def test_defaults(self):
        quad = QuadratureConfig()
        assert quad.scheme == "adaptive"
        assert quad.tolerance(1.0) == pytest.approx(1e-10)
        assert quad.tolerance(0.0) == quad.atol
        assert quad.with_scheme("laguerre").rtol == quad.rtol

    @pytest.mark.parametrize(
        "kwargs",
        [{"rtol": 0.0}, {"atol": -1.0}, {"p_cutoff": 0.0}, {"max_subdivisions": 0}, {"scheme": "simpson"},
         {"laguerre_nodes": 4}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            QuadratureConfig(**kwargs)


class TestRadialIntegral:
    """∫₀^∞ p² e^{−2p} dp = 1/4"""

    @pytest.mark.parametrize("scheme", ["adaptive", "laguerre"])
    def test_thermal_moment(self, scheme):
        result = radial_integral(thermal_moment, 2.0, 1.0, QuadratureConfig(scheme=scheme))
        assert result.value == pytest.approx(0.25, rel=1e-9)
        assert result.scheme == scheme

    def test_infrared_panel(self):
        plain = radial_integral(thermal_moment, 2.0, 1.0, QuadratureConfig())
        panel = radial_integral(thermal_moment, 2.0, 1.0, QuadratureConfig(), infrared_panel=True)
        assert panel.value == pytest.approx(plain.value, rel=1e-10)

    def test_cutoff_extension(self):
        """既定のカットオフ 20/β ではテールが大きすぎるので広げる"""
        result = radial_integral(thermal_moment, 2.0, 1.0, QuadratureConfig())
        assert result.cutoff > 10.0

    def test_explicit_cutoff_is_kept(self):
        result = radial_integral(thermal_moment, 2.0, 1.0, QuadratureConfig(p_cutoff=8.0))
        assert result.cutoff == 8.0


class TestGaussRules:
    def test_legendre_is_exact_for_polynomials(self):
        assert gauss_legendre(lambda x: x**3, 0.0, 1.0) == pytest.approx(0.25, rel=1e-14)
        assert gauss_legendre(lambda x: x**3, 1.0, 0.0) == 0.0

    def test_panels(self):
        value = gauss_legendre_panels(np.exp, [0.0, 2.0, 1.0, 1.0])
        assert value == pytest.approx(math.e**2 - 1.0, rel=1e-13)


class TestSineTransform:
    """1/(p² + M²) の3次元フーリエ変換は湯川関数 e^{−Mr}/(4πr)"""

    @pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
    def test_yukawa(self, r):
        value, _ = sine_transform(lambda p: 1.0 / (p * p + 1.0), r, QuadratureConfig())
        assert value == pytest.approx(math.exp(-r) / (4.0 * math.pi * r), rel=1e-7)

    def test_invalid_radius(self):
        with pytest.raises(ParameterError):
            sine_transform(lambda p: 1.0, 0.0, QuadratureConfig())


class TestQuadChecked:
    def test_divergent_integral(self):
        with pytest.raises(QuadratureError):
            quad_checked(lambda x: 1.0 / x, 0.0, 1.0, QuadratureConfig(max_subdivisions=20))
