# -*- coding: utf-8 -*-
"""
Hadamard Module

凝縮背景の演算子 D の Hadamard 係数 U, V₀, [V₁]、輸送方程式の残差、
および摂動的一致性の一次の検査 (ΔΦ²₍₁₎ とスペクトル密度 ρ₂) を扱うモジュール。

σ(x, y) = ½η(x−y, x−y)、計量符号 (−,+,+,+)。
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ParameterError, QuadratureError
from .model import MassSpectrum
from .pauli import Mat2C
from .quadrature import QuadratureConfig

logger = logging.getLogger(__name__)

# 除去可能特異点をテイラー展開に切り替える閾値 |2μx⁰|
SERIES_THRESHOLD = 1e-2

RHO2_NORM = 1.0 / (16.0 * math.pi**2)


@dataclass(frozen=True)
class HadamardCoeffs:
    """U(x⁰), V₀(x⁰), [V₁] と長さスケール ξ"""

    ms: MassSpectrum
    mu: float
    V1_coinciding: Mat2C
    xi: float = 1.0

    def U(self, x0: float) -> Mat2C:
        return u_coeff(x0, self.mu)

    def V0(self, x0: float) -> Mat2C:
        return v0_coeff(x0, self.ms, self.mu)

    def length_scale_term(self) -> Mat2C:
        """
        一致点での ξ 依存の有限項 −log(ξ²)·V₀(x, x)/8π²

        log(σ/ξ²) の ξ を変えると滑らかな部分 W(x, x) がこの分だけずれる。
        μ = δM² = 0 では M²·log(ξ)/8π² (スカラー場の c_M·M² で ξ → ξ/M としたもの)。
        """
        return self.V0(0.0) * (-2.0 * math.log(self.xi) / (8.0 * math.pi**2))


def hadamard_coefficients(ms: MassSpectrum, mu: float, xi: float = 1.0) -> HadamardCoeffs:
    if not xi > 0:
        raise ParameterError(f"xi must be positive: {xi}", field="xi")
    return HadamardCoeffs(ms=ms, mu=mu, V1_coinciding=v1_coinciding(ms, mu), xi=xi)


def u_coeff(x0: float, mu: float) -> Mat2C:
    """U(x⁰) = cos(μx⁰)I − iσ₂ sin(μx⁰)。成分は [[cos, −sin], [sin, cos]]"""
    angle = mu * x0
    return Mat2C(c_I=math.cos(angle), c_2=-1j * math.sin(angle))


def _sinc(z: float) -> float:
    if abs(z) < SERIES_THRESHOLD:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2**3 / 5040.0
    return math.sin(z) / z


def _cosc(z: float) -> float:
    """(cos z − 1)/z"""
    if abs(z) < SERIES_THRESHOLD:
        z2 = z * z
        return z * (-0.5 + z2 / 24.0 - z2 * z2 / 720.0 + z2**3 / 40320.0)
    return (math.cos(z) - 1.0) / z


def v0_coeff(x0: float, ms: MassSpectrum, mu: float) -> Mat2C:
    """
    V₀(x) = −½U(x⁰)·[(M²+μ²)I + δM²(sinc(2μx⁰)σ₃ + ((cos(2μx⁰)−1)/(2μx⁰))σ₁)]

    |2μx⁰| < 1e−2 では4項のテイラー展開を使う。
    """
    z = 2.0 * mu * x0
    bracket = Mat2C(
        c_I=ms.M_sq + mu * mu,
        c_1=ms.dM_sq * _cosc(z),
        c_3=ms.dM_sq * _sinc(z),
    )
    return u_coeff(x0, mu) * bracket * (-0.5)


def v1_coinciding(ms: MassSpectrum, mu: float) -> Mat2C:
    """[V₁] = −(1/8)((M²+μ²)²+δM⁴)I − (1/4)(M²+μ²/3)δM²σ₃ (対角・定数)"""
    m_mu = ms.M_sq + mu * mu
    return Mat2C(
        c_I=-0.125 * (m_mu**2 + ms.dM_sq**2),
        c_3=-0.25 * (ms.M_sq + mu * mu / 3.0) * ms.dM_sq,
    )


def transport_residual(
    x0: float,
    ms: MassSpectrum,
    mu: float,
    h: float,
    u_func: Optional[Callable[[float], Mat2C]] = None,
) -> float:
    """
    第1輸送方程式 2x⁰∂₀U + 2iμx⁰σ₂U の残差

    ∂₀U は中心差分で評価する。厳密な U では O(h²)。
    ms は並進不変な形では現れないが、呼び出し規約をそろえるため受け取る。

    Args:
        x0: 時間座標
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        h: 差分幅 (> 0)
        u_func: 検査する U (既定は u_coeff)

    Returns:
        残差行列の成分の最大絶対値
    """
    if not h > 0:
        raise ParameterError(f"h must be positive: {h}", field="h")
    u = u_func or (lambda t: u_coeff(t, mu))
    derivative = (u(x0 + h) - u(x0 - h)) / (2.0 * h)
    residual = derivative * (2.0 * x0) + Mat2C.sigma(2, 2j * mu * x0) * u(x0)
    return residual.max_abs()


def transport_ladder(
    x0: float, ms: MassSpectrum, mu: float, h_values: Sequence[float],
    u_func: Optional[Callable[[float], Mat2C]] = None,
) -> List[Dict[str, float]]:
    """差分幅の列に対する残差と観測収束次数"""
    rows: List[Dict[str, float]] = []
    previous = None
    for h in h_values:
        residual = transport_residual(x0, ms, mu, h, u_func)
        order = float("nan")
        if previous is not None and residual > 0 and previous[1] > 0:
            order = math.log(previous[1] / residual) / math.log(previous[0] / h)
        rows.append({"h": h, "residual": residual, "observed_order": order})
        previous = (h, residual)
    return rows


def rho2_spectral(M_sq: float, m: float) -> float:
    """
    2粒子スペクトル密度 ρ₂ = (1/16π²)√(1−4m²/M²)

    Raises:
        ParameterError: M² < 4m² (2粒子しきい値より下)
    """
    if M_sq < 4.0 * m * m:
        raise ParameterError(
            f"M_sq below the two-particle threshold: {M_sq} < 4m^2 = {4 * m * m}", field="M_sq"
        )
    if m == 0.0:
        return RHO2_NORM
    return RHO2_NORM * math.sqrt(1.0 - 4.0 * m * m / M_sq)


def crosses_cut(p_sq: float, m: float) -> bool:
    """分母 M² − p² が積分区間 [4m², ∞) で零になるか"""
    return p_sq > 4.0 * m * m


def delta_phi2_first_order(
    p_sq: float,
    m: float,
    delta_m_sq: float,
    a: float = 0.0,
    quad: Optional[QuadratureConfig] = None,
) -> complex:
    """
    ΔΦ²₍₁₎(p) = δm²·(−p²)·∫_{4m²}^∞ dM² ρ₂(M²)/(M²+a)·1/(M²−p²+iε)

    p² = 0 では前因子により厳密に 0。p² > 4m² では分母が切断を横切るので
    主値 (QUADPACK の Cauchy 重み) と −iπ·留数に分けて評価し、警告を出す。

    Raises:
        ParameterError: a < 0、または m = a = 0 (赤外発散)
        QuadratureError: 積分の非収束
    """
    quad = quad or QuadratureConfig()
    if a < 0:
        raise ParameterError(f"a must be non-negative: {a}", field="a")
    if m < 0:
        raise ParameterError(f"m must be non-negative: {m}", field="m")
    if p_sq == 0.0:
        return 0j
    if m == 0.0 and a == 0.0:
        raise ParameterError("the dispersion integral diverges for m = a = 0", field="a")

    threshold = 4.0 * m * m

    def weight(M_sq: float) -> float:
        return rho2_spectral(max(M_sq, threshold), m) / (M_sq + a)

    def checked(*args, **kwargs) -> float:
        result = integrate.quad(
            *args, epsabs=quad.atol, epsrel=quad.rtol, limit=quad.max_subdivisions,
            full_output=1, **kwargs,
        )
        if len(result) > 3 and result[1] > 10.0 * quad.tolerance(result[0]):
            raise QuadratureError(
                f"dispersion integral did not converge: {result[3]}", error_estimate=result[1]
            )
        return result[0]

    if not crosses_cut(p_sq, m):
        value = checked(lambda M_sq: weight(M_sq) / (M_sq - p_sq), threshold, np.inf)
    else:
        logger.warning(
            "p_sq=%.6g crosses the two-particle cut at 4m^2=%.6g; using principal value", p_sq, threshold
        )
        upper = 2.0 * p_sq - threshold + max(p_sq, 1.0)
        principal = checked(weight, threshold, upper, weight="cauchy", wvar=p_sq)
        principal += checked(lambda M_sq: weight(M_sq) / (M_sq - p_sq), upper, np.inf)
        value = principal - 1j * math.pi * weight(p_sq)
    return complex(delta_m_sq * (-p_sq) * value)


def scalar_v_coefficient(m_sq: float, sigma: float, c: float = 1.0 / (8.0 * math.pi**2)) -> float:
    """
    質量 m のスカラー場の Hadamard 係数 V(σ) = c·m²·2I₁(z)/z、z = √(2m²σ)

    級数 Σ_k (m²σ/2)^k/(k!(k+1)!) と同じ。σ < 0 では J₁ を使う。
    """
    y = 2.0 * m_sq * sigma
    z = math.sqrt(abs(y))
    if z < 1e-4:
        return c * m_sq * (1.0 + y / 8.0 + y * y / 192.0)
    if y > 0:
        return c * m_sq * 2.0 * special.iv(1, z) / z
    return c * m_sq * 2.0 * special.jv(1, z) / z


def _scalar_v_derivative(m_sq: float, sigma: float, c: float) -> float:
    # ∂V/∂m² = c·I₀(√(2m²σ))
    y = 2.0 * m_sq * sigma
    z = math.sqrt(abs(y))
    return c * (special.iv(0, z) if y >= 0 else special.jv(0, z))


def agreement_remainder(
    m_sq: float, delta_m_sq: float, sigma: float, c: float = 1.0 / (8.0 * math.pi**2)
) -> float:
    """
    V(m²+δm²) − V(m²) − ∂V/∂m²·δm² (分離 σ)

    一致点 σ → 0 で V は m² について線形になるので O(σ) で 0 に近づく。
    """
    return (
        scalar_v_coefficient(m_sq + delta_m_sq, sigma, c)
        - scalar_v_coefficient(m_sq, sigma, c)
        - _scalar_v_derivative(m_sq, sigma, c) * delta_m_sq
    )
