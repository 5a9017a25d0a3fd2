# -*- coding: utf-8 -*-
"""
Model Module

模型パラメータ、凝縮背景場、線形化質量スペクトル、2分枝分散関係を扱うモジュール。

単位は自然単位系 (ħ=c=k_B=1)。エネルギー単位 E を一つ固定し、
質量・化学ポテンシャルは E、β は 1/E、運動量は E、λ は無次元。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParameterError

logger = logging.getLogger(__name__)

# 根号内の丸め誤差を吸収する相対許容値
RADICAND_ATOL = 1e-10
# 質量二乗がゼロとみなされる相対許容値
MASS_ATOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """物理入力 m, μ, λ, β と任意の仮想質量 m_v"""

    m: float
    mu: float
    lam: float
    beta: float
    m_v: float = 0.0

    def __post_init__(self):
        """初期化後のバリデーション"""
        if not self.m > 0:
            raise ParameterError(f"m must be positive: {self.m}", field="m")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive: {self.lam}", field="lambda")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive: {self.beta}", field="beta")
        if not (self.m_v >= 0 and math.isfinite(self.m_v)):
            raise ParameterError(f"m_v must be non-negative: {self.m_v}", field="m_v")
        if not math.isfinite(self.mu):
            raise ParameterError(f"mu must be finite: {self.mu}", field="mu")

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(m=self.m, mu=self.mu, lam=self.lam, beta=beta, m_v=self.m_v)

    def to_dict(self) -> Dict[str, Any]:
        """辞書形式に変換"""
        return {"m": self.m, "mu": self.mu, "lambda": self.lam, "beta": self.beta, "m_v": self.m_v}


@dataclass(frozen=True)
class MassSpectrum:
    """凝縮振幅 φ と揺らぎの質量 M₁² ≥ M₂² ≥ 0"""

    phi: float
    M1_sq: float
    M2_sq: float
    M_sq: float = field(init=False)
    dM_sq: float = field(init=False)

    def __post_init__(self):
        if not self.phi >= 0:
            raise ParameterError(f"phi must be non-negative: {self.phi}", field="phi")
        if not self.M2_sq >= 0:
            raise ParameterError(
                f"M2_sq must be non-negative (unstable linearization): {self.M2_sq}",
                field="M2_sq",
            )
        if not self.M1_sq >= self.M2_sq:
            raise ParameterError(
                f"M1_sq must be >= M2_sq: {self.M1_sq} < {self.M2_sq}", field="M1_sq"
            )
        object.__setattr__(self, "M_sq", 0.5 * (self.M1_sq + self.M2_sq))
        object.__setattr__(self, "dM_sq", 0.5 * (self.M1_sq - self.M2_sq))

    @classmethod
    def symmetric(cls, mass_sq: float) -> "MassSpectrum":
        """φ=0, M₁=M₂ の対称相スペクトル"""
        return cls(phi=0.0, M1_sq=mass_sq, M2_sq=mass_sq)

    @property
    def M1(self) -> float:
        return math.sqrt(self.M1_sq)

    @property
    def M2(self) -> float:
        return math.sqrt(self.M2_sq)

    @property
    def is_gapless(self) -> bool:
        return self.M2_sq == 0.0

    @property
    def is_degenerate(self) -> bool:
        return self.dM_sq == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "phi": self.phi,
            "M1_sq": self.M1_sq,
            "M2_sq": self.M2_sq,
            "M_sq": self.M_sq,
            "dM_sq": self.dM_sq,
        }


@dataclass(frozen=True)
class Momentum3:
    """空間運動量 (大きさ、または3成分ベクトル)"""

    p: Union[float, Tuple[float, float, float]]

    @classmethod
    def of(cls, value: "MomentumLike") -> "Momentum3":
        if isinstance(value, Momentum3):
            return value
        if np.ndim(value) == 0:
            return cls(float(value))
        vec = tuple(float(v) for v in value)
        if len(vec) != 3:
            raise ParameterError(f"3成分の運動量ベクトルが必要です: {value}")
        return cls(vec)

    @property
    def sq(self) -> float:
        if isinstance(self.p, tuple):
            return float(sum(c * c for c in self.p))
        return float(self.p) ** 2

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.sq)


MomentumLike = Union[float, Sequence[float], Momentum3]


def momentum_sq(p: MomentumLike) -> float:
    """|p|²"""
    return Momentum3.of(p).sq


def w_squares(ms: MassSpectrum, p: MomentumLike) -> Tuple[float, float, float]:
    """(w², w₁², w₂²) = |p|² + (M², M₁², M₂²)"""
    p_sq = momentum_sq(p)
    return p_sq + ms.M_sq, p_sq + ms.M1_sq, p_sq + ms.M2_sq


def delta_omega_sq(ms: MassSpectrum, mu: float, p: MomentumLike) -> float:
    """δω² = √(4μ⁴ + 4μ²w² + δM⁴) = (ω₊² − ω₋²)/2"""
    w_sq = momentum_sq(p) + ms.M_sq
    return math.sqrt(4 * mu**4 + 4 * mu**2 * w_sq + ms.dM_sq**2)


def condensate_amplitude(params: ModelParams) -> float:
    """
    並進不変な実の凝縮振幅 φ を返す

    μ² ≤ m² では凝縮のない相として φ=0 を返す (エラーではない)。

    Args:
        params: 模型パラメータ

    Returns:
        φ = √((μ²−m²)/λ) または 0
    """
    excess = params.mu**2 - params.m**2
    if excess <= 0:
        return 0.0
    return math.sqrt(excess / params.lam)


def mass_spectrum(params: ModelParams, phi: float) -> MassSpectrum:
    """
    凝縮背景 φ の周りの揺らぎの質量

    M₁² = (m²−μ²) + 3λφ², M₂² = (m²−μ²) + λφ²。m_v > 0 なら両方に m_v² を加える。
    m_v はここでしか参照しない。

    Args:
        params: 模型パラメータ
        phi: 凝縮振幅 (≥ 0)

    Returns:
        MassSpectrum

    Raises:
        ParameterError: φ < 0、または M₂² < 0 (線形化が不安定)
    """
    if not phi >= 0:
        raise ParameterError(f"phi must be non-negative: {phi}", field="phi")
    base = params.m**2 - params.mu**2
    quartic = params.lam * phi**2
    M2_sq = base + quartic
    # 凝縮条件を満たすとき M₂² は解析的に 0。桁落ちを丸める
    scale = max(params.m**2, params.mu**2, quartic)
    if abs(M2_sq) <= MASS_ATOL * scale:
        M2_sq = 0.0
    M1_sq = M2_sq + 2.0 * quartic
    v_sq = params.m_v**2
    if v_sq > 0:
        M1_sq += v_sq
        M2_sq += v_sq
    if M2_sq < 0:
        raise ParameterError(
            f"unstable linearization: M2_sq = {M2_sq:.6g} < 0 "
            f"(phi={phi}, mu={params.mu}, m={params.m}, m_v={params.m_v})",
            field="phi",
        )
    return MassSpectrum(phi=phi, M1_sq=M1_sq, M2_sq=M2_sq)


def background_spectrum(params: ModelParams) -> MassSpectrum:
    """凝縮条件を満たす背景 φ での質量スペクトル"""
    return mass_spectrum(params, condensate_amplitude(params))


def omega_pm_sq_array(ms: MassSpectrum, mu: float, p_sq: Any) -> Tuple[np.ndarray, np.ndarray]:
    """
    ω₊², ω₋² を |p|² の配列に対して評価する

    ω₋² は Vieta 積 ω₊²ω₋² = w₁²w₂² から求める (ω₋→0 付近の桁落ち回避)。

    Raises:
        ParameterError: 根号内が −atol を超えて負 (入力の破損)
    """
    p_sq = np.asarray(p_sq, dtype=float)
    w_sq = p_sq + ms.M_sq
    w1_sq = p_sq + ms.M1_sq
    w2_sq = p_sq + ms.M2_sq
    s = w_sq + 2.0 * mu**2
    product = w1_sq * w2_sq
    direct = s * s - product
    if np.any(direct < -RADICAND_ATOL * s * s):
        raise ParameterError(
            f"negative dispersion radicand: min={float(np.min(direct)):.6g}", field="spectrum"
        )
    # (w²+2μ²)² − w₁²w₂² = 4μ⁴ + 4μ²w² + δM⁴ は桁落ちしない
    radicand = 4.0 * mu**4 + 4.0 * mu**2 * w_sq + ms.dM_sq**2
    omega_plus_sq = s + np.sqrt(radicand)
    with np.errstate(invalid="ignore", divide="ignore"):
        omega_minus_sq = np.where(omega_plus_sq > 0, product / omega_plus_sq, 0.0)
    return omega_plus_sq, omega_minus_sq


def omega_pm(ms: MassSpectrum, mu: float, p: MomentumLike) -> Tuple[float, float]:
    """
    2分枝分散関係 ω±(p)

    ω±² = w² + 2μ² ± √((w²+2μ²)² − w₁²w₂²)

    Args:
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        p: 空間運動量

    Returns:
        (ω₊, ω₋) ただし ω₊ ≥ ω₋ ≥ 0
    """
    plus_sq, minus_sq = omega_pm_sq_array(ms, mu, momentum_sq(p))
    return math.sqrt(float(plus_sq)), math.sqrt(max(float(minus_sq), 0.0))


def sound_speed(
    ms: MassSpectrum, mu: float, p_start: Optional[float] = None, levels: int = 6
) -> float:
    """
    ゴールドストーン分枝の音速 c_s = lim_{p→0} ω₋(p)/p

    半減していく p 列での ω₋/p を p² についてRichardson外挿する。

    Raises:
        ParameterError: ギャップのある相 (M₂² > 0)
    """
    scale = max(ms.M1_sq, mu**2, 1e-300)
    if ms.M2_sq > MASS_ATOL * scale:
        raise ParameterError(
            f"sound speed requires a gapless spectrum: M2_sq = {ms.M2_sq:.6g}", field="M2_sq"
        )
    if p_start is None:
        p_start = 1e-2 * math.sqrt(scale)
    ps = p_start / 2.0 ** np.arange(levels)
    plus_sq, _ = omega_pm_sq_array(ms, mu, ps**2)
    # M₂=0 では ω₋²/p² = (p²+M₁²)/ω₊²
    ratios = np.sqrt((ps**2 + ms.M1_sq) / plus_sq)

    table = [list(ratios)]
    for j in range(1, levels):
        prev = table[-1]
        factor = 4.0**j - 1.0
        table.append([prev[k] + (prev[k] - prev[k - 1]) / factor for k in range(1, len(prev))])
    c_s = float(table[-1][-1])
    logger.debug("sound speed extrapolated: %.15g (levels=%d)", c_s, levels)
    return c_s


def sound_speed_closed_form(params: ModelParams) -> float:
    """凝縮条件上の音速 √((μ²−m²)/(3μ²−m²))"""
    excess = params.mu**2 - params.m**2
    if excess <= 0:
        return 0.0
    return math.sqrt(excess / (3 * params.mu**2 - params.m**2))
