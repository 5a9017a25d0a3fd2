# -*- coding: utf-8 -*-
"""
Propagators Module

運動量空間の運動行列 D̂, D̄̂、4種類の伝播関数 (遅延・先進・Feynman・交換子)、
およびクラスター展開で使う熱的スペクトル重みを扱うモジュール。

規約:
    計量符号 (−,+,+,+)、p·x = −p₀x⁰ + p·x、平面波 e^{i(p·x − p₀t)}。
    D̂  = (p₀²−w²)I − δM²σ₃ − 2μp₀σ₂
    D̄̂ = (p₀²−w²)I + δM²σ₃ + 2μp₀σ₂
    D̂D̄̂ = (p₀²−ω₊²)(p₀²−ω₋²)I
    交換子 Δ = Δ_R − Δ_A、[ψ(x), ψ(y)] = iΔ(x−y)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from .errors import ParameterError, PoleProximityError, QuadratureError
from .model import MassSpectrum, MomentumLike, momentum_sq, omega_pm
from .pauli import Mat2C, sum_matrices

logger = logging.getLogger(__name__)

# ε の既定値 (代表エネルギーに対する比)
DEFAULT_EPS_RATIO = 1e-6

BRANCHES = ("+", "-")
SIGNS = {"+": 1, "-": -1}


class PropagatorKind(Enum):
    """伝播関数の種類"""

    RETARDED = "retarded"
    ADVANCED = "advanced"
    FEYNMAN = "feynman"
    COMMUTATOR = "commutator"


@dataclass(frozen=True)
class Shell:
    """質量殻 p₀ = σ·ω_{σ′} 上のデルタ関数の重み"""

    sigma: int
    branch: str
    p0: float
    weight: Mat2C


@dataclass(frozen=True)
class CommutatorShells:
    """交換子関数 Δ_R − Δ_A のデルタ殻表現"""

    p_sq: float
    shells: Tuple[Shell, ...]

    def smear(self, test_fn: Callable[[float], complex]) -> Mat2C:
        return smear_shells(self.shells, test_fn)


@dataclass(frozen=True)
class SpectralShell:
    """λ_{σσ′}: 殻周波数、ボース因子、行列重み λ·D̄̂(σω)"""

    sigma: int
    branch: str
    omega: float
    bose: float
    coefficient: float
    matrix: Mat2C


@dataclass(frozen=True)
class SpectralWeights:
    """KMS 2点関数の正・負振動数部分への分解 (4つの λ_{σσ′})"""

    p_sq: float
    beta: float
    shells: Dict[Tuple[int, str], SpectralShell] = field(default_factory=dict)

    def weight(self, sigma: int, branch: str) -> SpectralShell:
        return self.shells[(sigma, branch)]

    def recombine(self, sigma: int) -> Mat2C:
        """λ_{σ+} + λ_{σ−} = λ_σ"""
        return self.shells[(sigma, "+")].matrix + self.shells[(sigma, "-")].matrix

    def coinciding_matrix(self) -> Mat2C:
        """一致点での運動量ごとの2点行列 Σ λ_{σσ′}"""
        return sum_matrices([s.matrix for s in self.shells.values()])

    def thermal_matrix(self) -> Mat2C:
        """真空部分 (β→∞ の極限) を差し引いた熱的部分"""
        vacuum = sum_matrices([s.matrix / s.bose for s in self.shells.values() if s.sigma > 0])
        return self.coinciding_matrix() - vacuum


def bose_factor(x: Union[float, np.ndarray], beta: float) -> Union[float, np.ndarray]:
    """
    1/(1 − e^{−βx})。正負どちらの x でも安定に評価する

    β=∞ では x>0 で 1、x<0 で 0。
    """
    if math.isinf(beta):
        return np.where(np.asarray(x) > 0, 1.0, 0.0) if np.ndim(x) else (1.0 if x > 0 else 0.0)
    with np.errstate(divide="ignore"):
        value = -1.0 / np.expm1(-beta * np.asarray(x, dtype=float))
    return value if np.ndim(x) else float(value)


def occupation(x: Union[float, np.ndarray], beta: float) -> Union[float, np.ndarray]:
    """ボース分布 n(x) = 1/(e^{βx} − 1) (x > 0)"""
    if math.isinf(beta):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
    with np.errstate(over="ignore", divide="ignore"):
        value = 1.0 / np.expm1(beta * np.asarray(x, dtype=float))
    return value if np.ndim(x) else float(value)


def kinetic_matrix(
    p0: complex, p: MomentumLike, ms: MassSpectrum, mu: float, conjugate: bool = False
) -> Mat2C:
    """
    運動行列 D̂(p) または D̄̂(p)

    Args:
        p0: エネルギー成分 (複素数可)
        p: 空間運動量
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        conjugate: True なら D̄̂ を返す

    Returns:
        Mat2C
    """
    w_sq = momentum_sq(p) + ms.M_sq
    sign = 1.0 if conjugate else -1.0
    return Mat2C(
        c_I=p0 * p0 - w_sq,
        c_2=sign * 2.0 * mu * p0,
        c_3=sign * ms.dM_sq,
    )


def characteristic_energy(p: MomentumLike, ms: MassSpectrum, mu: float) -> float:
    return max(math.sqrt(ms.M1_sq), abs(mu), math.sqrt(momentum_sq(p)), 1e-300)


def _check_pole_distance(p0: complex, omegas: Tuple[float, float], eps: float) -> None:
    if complex(p0).imag != 0.0:
        return
    x = abs(complex(p0).real)
    for omega in omegas:
        if abs(x - omega) < 0.5 * eps:
            raise PoleProximityError(
                f"p0={x:.6g} lies within eps/2 of the shell omega={omega:.6g}; regulate before evaluating",
                p0=x,
                omega=omega,
                eps=eps,
            )


def propagator_matrix(
    kind: PropagatorKind,
    p0: complex,
    p: MomentumLike,
    ms: MassSpectrum,
    mu: float,
    epsilon: Optional[float] = None,
    guard: bool = True,
) -> Union[Mat2C, CommutatorShells]:
    """
    運動量空間の伝播関数

    遅延: D̄̂/(ω₊²−ω₋²)·[1/((p₀+iε)²−ω₊²) − 1/((p₀+iε)²−ω₋²)]
    先進: ε → −ε
    Feynman: (p₀+iε)² → p₀²+iε として i を掛ける
    交換子: 殻 ±ω± 上のデルタ重み (CommutatorShells)

    部分分数の差は (ω₊²−ω₋²)/((z²−ω₊²)(z²−ω₋²)) と等しいので積の形で評価する。
    縮退点 ω₊=ω₋ でもそのまま使える。

    Raises:
        ParameterError: ε ≤ 0
        PoleProximityError: 実の p₀ が殻から ε/2 以内 (guard=True のとき)
    """
    kind = PropagatorKind(kind)
    if kind is PropagatorKind.COMMUTATOR:
        return commutator_shells(p, ms, mu)

    omega_plus, omega_minus = omega_pm(ms, mu, p)
    if epsilon is None:
        epsilon = DEFAULT_EPS_RATIO * characteristic_energy(p, ms, mu)
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive: {epsilon}", field="epsilon")
    if guard:
        _check_pole_distance(p0, (omega_plus, omega_minus), epsilon)

    d_bar = kinetic_matrix(p0, p, ms, mu, conjugate=True)
    if kind is PropagatorKind.RETARDED:
        z_sq = (p0 + 1j * epsilon) ** 2
        scale = 1.0
    elif kind is PropagatorKind.ADVANCED:
        z_sq = (p0 - 1j * epsilon) ** 2
        scale = 1.0
    else:
        z_sq = p0 * p0 + 1j * epsilon
        scale = 1j
    denominator = (z_sq - omega_plus**2) * (z_sq - omega_minus**2)
    return d_bar * (scale / denominator)


def commutator_shells(p: MomentumLike, ms: MassSpectrum, mu: float) -> CommutatorShells:
    """
    Δ_R − Δ_A のデルタ殻重み

    p₀ = σω_{σ′} の殻で −2πi·σ·s_{σ′}·D̄̂(σω_{σ′})/(2ω_{σ′}(ω₊²−ω₋²))、s₊=+1, s₋=−1。

    Raises:
        ParameterError: ω₋ = 0 (赤外殻)
    """
    p_sq = momentum_sq(p)
    omegas = dict(zip(BRANCHES, omega_pm(ms, mu, p)))
    if omegas["-"] == 0.0:
        raise ParameterError("commutator shells are singular at omega_minus = 0", field="p")
    split = omegas["+"] ** 2 - omegas["-"] ** 2
    shells: List[Shell] = []
    for sigma in (1, -1):
        for branch in BRANCHES:
            omega = omegas[branch]
            p0 = sigma * omega
            if split == 0.0:
                # 縮退 (μ=0, δM²=0): スカラー Klein–Gordon の殻
                weight = Mat2C.identity(-2j * math.pi * sigma / (2 * omega)) if branch == "+" else Mat2C.zero()
            else:
                factor = -2j * math.pi * sigma * SIGNS[branch] / (2 * omega * split)
                weight = kinetic_matrix(p0, p_sq**0.5, ms, mu, conjugate=True) * factor
            shells.append(Shell(sigma=sigma, branch=branch, p0=p0, weight=weight))
    return CommutatorShells(p_sq=p_sq, shells=tuple(shells))


def spectral_weights(p: MomentumLike, ms: MassSpectrum, mu: float, beta: float) -> SpectralWeights:
    """
    KMS 2点関数 ω̂ = iΔ̂·(1−e^{−βp₀})⁻¹ の殻分解

    λ_{σσ′} = σ·s_{σ′}/(2ω_{σ′}(ω₊²−ω₋²))·(1−e^{−βσω_{σ′}})⁻¹、行列因子 D̄̂(σω_{σ′})。
    対角成分は正で、熱的質量の積分と一致する。

    Raises:
        ParameterError: ω₋ = 0 (p=0 のギャップレス殻)、または β ≤ 0
    """
    if not beta > 0:
        raise ParameterError(f"beta must be positive: {beta}", field="beta")
    p_sq = momentum_sq(p)
    omegas = dict(zip(BRANCHES, omega_pm(ms, mu, p)))
    if omegas["-"] == 0.0:
        raise ParameterError(
            "spectral weights are singular at omega_minus = 0 (infrared shell)", field="p"
        )
    split = omegas["+"] ** 2 - omegas["-"] ** 2
    shells: Dict[Tuple[int, str], SpectralShell] = {}
    for sigma in (1, -1):
        for branch in BRANCHES:
            omega = omegas[branch]
            bose = bose_factor(sigma * omega, beta)
            if split == 0.0:
                coefficient = sigma / (2 * omega) if branch == "+" else 0.0
                matrix = Mat2C.identity(coefficient * bose)
            else:
                coefficient = sigma * SIGNS[branch] / (2 * omega * split)
                matrix = kinetic_matrix(sigma * omega, p_sq**0.5, ms, mu, conjugate=True) * (coefficient * bose)
            shells[(sigma, branch)] = SpectralShell(
                sigma=sigma, branch=branch, omega=omega, bose=bose, coefficient=coefficient, matrix=matrix
            )
    return SpectralWeights(p_sq=p_sq, beta=beta, shells=shells)


def commutator_time_kernel(t: float, p: MomentumLike, ms: MassSpectrum, mu: float) -> Mat2C:
    """
    運動量 p ごとの実時間交換子 Δ̂(t, p) = ∫dp₀/(2π) e^{−ip₀t}(Δ̂_R − Δ̂_A)

    Δ̂(t) = Σ_s s/(ω₊²−ω₋²)·[−A_s sin(ω_s t)/ω_s − 2iμσ₂ cos(ω_s t)]、
    A_s = (ω_s²−w²)I + δM²σ₃。Δ̂(0)=0、∂_tΔ̂(0) = −I。
    """
    w_sq = momentum_sq(p) + ms.M_sq
    omega_plus, omega_minus = omega_pm(ms, mu, p)
    split = omega_plus**2 - omega_minus**2
    if split == 0.0:
        w = math.sqrt(w_sq)
        return Mat2C.identity(-math.sin(w * t) / w if w > 0 else -t)
    total = Mat2C.zero()
    for s, omega in ((1, omega_plus), (-1, omega_minus)):
        a_s = Mat2C(c_I=omega**2 - w_sq, c_3=ms.dM_sq)
        sin_term = math.sin(omega * t) / omega if omega > 0 else t
        total = total + (a_s * (-sin_term) + Mat2C.sigma(2, -2j * mu * math.cos(omega * t))) * (s / split)
    return total


def smear_shells(shells: Tuple[Shell, ...], test_fn: Callable[[float], complex]) -> Mat2C:
    """デルタ殻構造をテスト関数で積分する Σ weight·f(p₀)"""
    return sum_matrices([s.weight * complex(test_fn(s.p0)) for s in shells])


def smear_propagator(
    kind: PropagatorKind,
    test_fn: Callable[[float], float],
    p: MomentumLike,
    ms: MassSpectrum,
    mu: float,
    epsilon: float,
    window: Tuple[float, float],
    limit: int = 500,
) -> Mat2C:
    """
    ∫ dp₀ f(p₀)·Δ̂(p₀) を窓 [a, b] 上で適応求積する (ε を有限に保ったまま)

    殻の位置は分割点として QUADPACK に渡す。
    """
    kind = PropagatorKind(kind)
    if kind is PropagatorKind.COMMUTATOR:
        return commutator_shells(p, ms, mu).smear(test_fn)
    a, b = window
    omega_plus, omega_minus = omega_pm(ms, mu, p)
    points = [x for x in (-omega_plus, -omega_minus, omega_minus, omega_plus) if a < x < b]

    def channel(k: int, part: str) -> float:
        def integrand(p0: float) -> float:
            value = propagator_matrix(kind, p0, p, ms, mu, epsilon, guard=False)
            c = value.coefficients()[k] * test_fn(p0)
            return c.real if part == "re" else c.imag

        result = integrate.quad(integrand, a, b, points=points or None, limit=limit, full_output=1)
        if len(result) > 3 and result[1] > 1e-6 * max(1.0, abs(result[0])):
            raise QuadratureError(
                f"smearing did not converge ({kind.value}, channel {k}, {part})",
                error_estimate=result[1],
            )
        return result[0]

    coeffs = [channel(k, "re") + 1j * channel(k, "im") for k in range(4)]
    return Mat2C(*coeffs)
