# -*- coding: utf-8 -*-
"""
Thermal Module

KMS 熱平衡状態に関する積分をまとめたモジュール。

- 熱的質量 m²_{β,1}, m²_{β,2} と ⟨:|ψ|²:⟩, ⟨j̃⟩, 臨界電荷密度 ρ_cr
- 臨界温度 T_cr (ρ_cr(1/T) = ρ の根)
- 自由複素場の臨界密度、無質量 φ⁴ の熱的質量
- 凸性条件 (仮想質量の上限)
- 虚時間 KMS 核 G(u, x)

3次元の運動量積分はすべて等方性を使って1次元の動径積分に落とす:
    ∫d³p/(2π)³ F(|p|) = (1/2π²) ∫₀^∞ p² F(p) dp
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .errors import BracketError, ParameterError, SolverError
from .model import (
    MassSpectrum,
    ModelParams,
    background_spectrum,
    omega_pm_sq_array,
)
from .pauli import Mat2C
from .propagators import occupation
from .quadrature import QuadratureConfig, radial_integral, sine_transform

logger = logging.getLogger(__name__)

RADIAL_NORM = 1.0 / (2.0 * math.pi**2)

KERNEL_METHODS = ("auto", "shell", "matsubara")


@dataclass
class ThermalObservables:
    """熱的期待値の一式"""

    psi_sq: float
    j_tilde: float
    rho_cr: float
    m_b1_sq: float
    m_b2_sq: float
    condensate_charge: float
    total_charge: float = field(init=False)
    errors: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.total_charge = self.rho_cr + self.condensate_charge

    def to_dict(self) -> Dict[str, Any]:
        """辞書形式に変換"""
        return {
            "psi_sq": self.psi_sq,
            "j_tilde": self.j_tilde,
            "rho_cr": self.rho_cr,
            "m_b1_sq": self.m_b1_sq,
            "m_b2_sq": self.m_b2_sq,
            "condensate_charge": self.condensate_charge,
            "total_charge": self.total_charge,
        }


# ----------------------------------------------------------------------
# 被積分関数
# ----------------------------------------------------------------------
@dataclass
class _Branches:
    """運動量グリッド上の分散関係と混合係数"""

    omega_plus: np.ndarray
    omega_minus: np.ndarray
    delta_omega_sq: np.ndarray
    w_sq: np.ndarray
    w1_sq: np.ndarray
    w2_sq: np.ndarray


def _branches(ms: MassSpectrum, mu: float, p: np.ndarray) -> _Branches:
    p_sq = np.asarray(p, dtype=float) ** 2
    plus_sq, minus_sq = omega_pm_sq_array(ms, mu, p_sq)
    w_sq = p_sq + ms.M_sq
    return _Branches(
        omega_plus=np.sqrt(plus_sq),
        omega_minus=np.sqrt(np.maximum(minus_sq, 0.0)),
        delta_omega_sq=np.sqrt(4.0 * mu**4 + 4.0 * mu**2 * w_sq + ms.dM_sq**2),
        w_sq=w_sq,
        w1_sq=p_sq + ms.M1_sq,
        w2_sq=p_sq + ms.M2_sq,
    )


def _mixing_weights(ms: MassSpectrum, mu: float, b: _Branches) -> Tuple[np.ndarray, ...]:
    """
    熱的質量の分枝ごとの重み (c1₊, c1₋, c2₊, c2₋)

    c1₊ = (δω²+2μ²+δM²)/δω²,  c1₋ = (δω²−2μ²−δM²)/δω²
    c2₊ = (δω²+2μ²−δM²)/δω²,  c2₋ = (δω²−2μ²+δM²)/δω²
    差の形は桁落ちしない有理式に書き換えて評価する。完全縮退 (δω²=0) では 1。
    """
    d = b.delta_omega_sq
    dm = ms.dM_sq
    mu_sq = mu * mu
    degenerate = d == 0.0
    safe_d = np.where(degenerate, 1.0, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        num_1p = d + 2 * mu_sq + dm
        num_1m = 4 * mu_sq * b.w2_sq / np.where(num_1p == 0, 1.0, num_1p)
        # δω² − δM² = 4μ²(μ²+w²)/(δω²+δM²)
        num_2p = 2 * mu_sq + 4 * mu_sq * (mu_sq + b.w_sq) / np.where(d + dm == 0, 1.0, d + dm)
        if dm >= 2 * mu_sq:
            num_2m = d - 2 * mu_sq + dm
        else:
            num_2m = 4 * mu_sq * b.w1_sq / (d + 2 * mu_sq - dm)
    weights = [num / safe_d for num in (num_1p, num_1m, num_2p, num_2m)]
    return tuple(np.where(degenerate, 1.0, w) for w in weights)


def observable_integrands(
    ms: MassSpectrum, mu: float, beta: float, p: Sequence[float]
) -> Dict[str, np.ndarray]:
    """
    各熱的観測量の動径被積分関数 (1/2π²)·p²·F(p)

    Returns:
        m_b1_sq, m_b2_sq, psi_sq, j_tilde, rho_cr をキーとする配列の辞書
    """
    p = np.asarray(p, dtype=float)
    b = _branches(ms, mu, p)
    n_plus = occupation(b.omega_plus, beta)
    n_minus = occupation(b.omega_minus, beta)
    c1p, c1m, c2p, c2m = _mixing_weights(ms, mu, b)
    measure = RADIAL_NORM * p * p
    with np.errstate(divide="ignore", invalid="ignore"):
        half_plus = n_plus / (2.0 * b.omega_plus)
        half_minus = n_minus / (2.0 * b.omega_minus)
        m1 = measure * (c1p * half_plus + c1m * half_minus)
        m2 = measure * (c2p * half_plus + c2m * half_minus)
        psi = m1 + m2
        if mu == 0.0:
            j_tilde = np.zeros_like(p)
        else:
            j_tilde = measure * 4.0 * mu * (b.omega_minus * n_minus - b.omega_plus * n_plus) / b.delta_omega_sq
    return {
        "m_b1_sq": m1,
        "m_b2_sq": m2,
        "psi_sq": psi,
        "j_tilde": j_tilde,
        "rho_cr": j_tilde + 2.0 * mu * psi,
    }


def _energy_scale(ms: MassSpectrum, mu: float) -> float:
    return max(math.sqrt(ms.M1_sq), abs(mu), 1e-12)


def _integrate(
    key: str, ms: MassSpectrum, mu: float, beta: float, quad: QuadratureConfig
) -> Tuple[float, float]:
    if math.isinf(beta):
        return 0.0, 0.0
    result = radial_integral(
        lambda p: observable_integrands(ms, mu, beta, p)[key],
        beta,
        _energy_scale(ms, mu),
        quad,
        infrared_panel=ms.is_gapless,
        label=key,
    )
    return result.value, result.error


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise ParameterError(f"beta must be positive: {beta}", field="beta")


# ----------------------------------------------------------------------
# 公開演算
# ----------------------------------------------------------------------
def thermal_masses(
    ms: MassSpectrum, mu: float, beta: float, quad: Optional[QuadratureConfig] = None
) -> Tuple[float, float]:
    """
    熱的質量 m²_{β,1} = ω(:ψ₁²:), m²_{β,2} = ω(:ψ₂²:)

    m²_{β,1} = (1/2π²)∫p²[(δω²+2μ²+δM²)/δω²·n(ω₊)/(2ω₊) + (δω²−2μ²−δM²)/δω²·n(ω₋)/(2ω₋)]dp
    m²_{β,2} は δM² → −δM²。

    Args:
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        beta: 逆温度 (math.inf 可)
        quad: 数値積分設定

    Returns:
        (m_b1_sq, m_b2_sq)

    Raises:
        QuadratureError: 積分が収束しない場合 (誤差見積もり付き)
    """
    quad = quad or QuadratureConfig()
    _check_beta(beta)
    m1, _ = _integrate("m_b1_sq", ms, mu, beta, quad)
    m2, _ = _integrate("m_b2_sq", ms, mu, beta, quad)
    return m1, m2


def critical_density(
    ms: MassSpectrum, mu: float, beta: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """ρ_cr = ⟨j̃⟩ + 2μ⟨:|ψ|²:⟩ を1本の積分で評価する"""
    quad = quad or QuadratureConfig()
    _check_beta(beta)
    return _integrate("rho_cr", ms, mu, beta, quad)[0]


def thermal_expectations(
    ms: MassSpectrum, mu: float, beta: float, quad: Optional[QuadratureConfig] = None
) -> ThermalObservables:
    """
    熱的観測量の一式を評価する

    ρ_cr = j̃ + 2μ⟨:|ψ|²:⟩、凝縮電荷 2μφ²、全電荷 = ρ_cr + 2μφ²。
    """
    quad = quad or QuadratureConfig()
    _check_beta(beta)
    values: Dict[str, float] = {}
    errors: Dict[str, float] = {}
    for key in ("psi_sq", "j_tilde", "m_b1_sq", "m_b2_sq"):
        values[key], errors[key] = _integrate(key, ms, mu, beta, quad)
    rho = values["j_tilde"] + 2.0 * mu * values["psi_sq"]
    logger.debug("thermal expectations at beta=%.6g: rho_cr=%.10g", beta, rho)
    return ThermalObservables(
        psi_sq=values["psi_sq"],
        j_tilde=values["j_tilde"],
        rho_cr=rho,
        m_b1_sq=values["m_b1_sq"],
        m_b2_sq=values["m_b2_sq"],
        condensate_charge=2.0 * mu * ms.phi**2,
        errors=errors,
    )


def critical_temperature(
    params: ModelParams,
    rho_target: float,
    quad: Optional[QuadratureConfig] = None,
    expansions: int = 4,
) -> float:
    """
    ρ_cr(1/T) = rho_target を満たす臨界温度 T_cr

    質量スペクトルは params から (φ, m_v を含めて) 一度だけ決め、β だけを動かす。
    粗い見積もり T_est の周りで [T_est/100, 100·T_est] を挟み込み、Brent 法で解く。

    Raises:
        BracketError: rho_target ≤ 0、または挟み込み区間を確立できない
        SolverError: Brent 法が200反復で収束しない
    """
    quad = quad or QuadratureConfig()
    if not rho_target > 0:
        raise BracketError(f"rho_target must be positive: {rho_target}", rho_target=rho_target)
    ms = background_spectrum(params)
    mu = params.mu

    def residual(temperature: float) -> float:
        return critical_density(ms, mu, 1.0 / temperature, quad) - rho_target

    t_est = math.sqrt(3.0 * rho_target / abs(mu)) if mu != 0 else rho_target ** (1.0 / 3.0)
    lo, hi = t_est / 100.0, t_est * 100.0
    f_lo, f_hi = residual(lo), residual(hi)
    for _ in range(expansions):
        if f_lo < 0:
            break
        lo /= 10.0
        f_lo = residual(lo)
    for _ in range(expansions):
        if f_hi > 0:
            break
        hi *= 10.0
        f_hi = residual(hi)
    if not (f_lo < 0 < f_hi):
        raise BracketError(
            f"could not bracket T_cr for rho_target={rho_target:.6g} in [{lo:.3g}, {hi:.3g}]",
            lo=lo,
            hi=hi,
            f_lo=f_lo,
            f_hi=f_hi,
        )
    try:
        root, info = optimize.brentq(
            residual, lo, hi, xtol=1e-14 * t_est, rtol=4 * np.finfo(float).eps,
            maxiter=200, full_output=True, disp=False,
        )
    except (RuntimeError, ValueError) as e:
        raise SolverError(f"Brent solver failed: {e}") from e
    if not info.converged:
        raise SolverError(
            f"Brent solver did not converge after {info.iterations} iterations: {info.flag}",
            iterations=info.iterations,
        )
    logger.info("T_cr = %.12g (rho_target=%.6g, %d iterations)", root, rho_target, info.iterations)
    return float(root)


def free_critical_density(
    m: float,
    mu_sign: int,
    beta: float,
    quad: Optional[QuadratureConfig] = None,
    c: complex = 0.0,
) -> float:
    """
    自由複素場の相境界 μ = ±m での臨界電荷密度

    ∫d⁴p·2|p₀|δ(p²+m²)(B(|p₀|∓m) − B(|p₀|±m)) を p₀ の積分で落とすと
        ρ = ±(2/2π²)∫p²[n(E−m) − n(E+m)]dp,  E = √(p²+m²)
    調和振幅 c を与えると凝縮項 ±2m|c|² を加える。
    E−m は p²/(E+m) として評価する。

    Args:
        m: 質量
        mu_sign: +1 (μ=m) または −1 (μ=−m)
        beta: 逆温度
        quad: 数値積分設定
        c: 凝縮の調和振幅

    Returns:
        全電荷密度 (c=0 なら臨界密度)
    """
    quad = quad or QuadratureConfig()
    _check_beta(beta)
    if mu_sign not in (1, -1):
        raise ParameterError(f"mu_sign must be +1 or -1: {mu_sign}", field="mu_sign")
    if not m > 0:
        raise ParameterError(f"m must be positive: {m}", field="m")
    condensate = 2.0 * m * abs(c) ** 2
    if math.isinf(beta):
        return mu_sign * condensate

    def integrand(p: np.ndarray) -> np.ndarray:
        energy = np.sqrt(p * p + m * m)
        lower = p * p / (energy + m)
        return 2.0 * RADIAL_NORM * p * p * (occupation(lower, beta) - occupation(energy + m, beta))

    result = radial_integral(integrand, beta, m, quad, infrared_panel=True, label="free_rho_cr")
    return mu_sign * (result.value + condensate)


def massless_thermal_mass(
    lam: float,
    M: float,
    beta: float,
    xi: Optional[float] = None,
    quad: Optional[QuadratureConfig] = None,
) -> float:
    """
    φ⁴ 理論の熱的質量

    M_β² = λ(c_M·M² + (1/2π²)∫p²/√(p²+M²)·n(√(p²+M²))dp)、c_M = log(Mξ)/8π²。
    ξ の既定値は 1/M (c_M = 0)。M = 0 では c_M·M² → 0。

    M → 0 で M_β² → λT²/12。表示式の λ の付け方に合わせており、
    M_β² = 3λW_β(0,0) の形とは正規化が異なる。
    """
    quad = quad or QuadratureConfig()
    _check_beta(beta)
    if not M >= 0:
        raise ParameterError(f"M must be non-negative: {M}", field="M")
    if xi is not None and not xi > 0:
        raise ParameterError(f"xi must be positive: {xi}", field="xi")
    if M == 0.0 or xi is None:
        local = 0.0
    else:
        local = math.log(M * xi) / (8.0 * math.pi**2) * M * M
    if math.isinf(beta):
        return lam * local

    def integrand(p: np.ndarray) -> np.ndarray:
        energy = np.sqrt(p * p + M * M)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(energy > 0, p * p / energy, 0.0)
        return RADIAL_NORM * ratio * occupation(energy, beta)

    result = radial_integral(
        integrand, beta, max(M, 1e-12), quad, infrared_panel=M == 0.0, label="massless_thermal_mass"
    )
    return lam * (local + result.value)


def convexity_bounds(
    lam: float, ms: MassSpectrum, mu: float, beta: float, quad: Optional[QuadratureConfig] = None
) -> Tuple[float, float]:
    """(λ(3m²_{β,1}+m²_{β,2}), λ(3m²_{β,2}+m²_{β,1}))"""
    m1, m2 = thermal_masses(ms, mu, beta, quad)
    return lam * (3.0 * m1 + m2), lam * (3.0 * m2 + m1)


def thermal_mass_shifts(
    lam: float, ms: MassSpectrum, mu: float, beta: float, quad: Optional[QuadratureConfig] = None
) -> Tuple[float, float]:
    """四次相互作用の正規順序化で生じる二次項の係数 ½λ(3m²₁+m²₂), ½λ(3m²₂+m²₁)"""
    b1, b2 = convexity_bounds(lam, ms, mu, beta, quad)
    return 0.5 * b1, 0.5 * b2


def max_virtual_mass_sq(
    lam: float, ms: MassSpectrum, mu: float, beta: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """ポテンシャルの凸性を保つ m_v² の上限 (排他的)"""
    return min(convexity_bounds(lam, ms, mu, beta, quad))


def convexity_check(
    m_v_sq: float,
    lam: float,
    ms: MassSpectrum,
    mu: float,
    beta: float,
    quad: Optional[QuadratureConfig] = None,
) -> bool:
    """m_v² < λ(3m²_{β,1}+m²_{β,2}) かつ m_v² < λ(3m²_{β,2}+m²_{β,1}) (厳密不等式)"""
    b1, b2 = convexity_bounds(lam, ms, mu, beta, quad)
    return bool(m_v_sq < b1 and m_v_sq < b2)


# ----------------------------------------------------------------------
# 虚時間核
# ----------------------------------------------------------------------
def _shell_channels(
    ms: MassSpectrum,
    mu: float,
    beta: float,
    u: float,
    p: np.ndarray,
    vacuum_subtracted: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    殻和 Σ_{σσ′} λ_{σσ′}·D̄̂(σω)·e^{−σωu} の I, σ₂, σ₃ 成分 (いずれも実数)

    正の殻: e^{−uω}/(1−e^{−βω})、負の殻: e^{−(β−u)ω}/(1−e^{−βω})。
    真空を差し引く場合、正の殻は e^{−uω}·n(ω) になる。
    """
    b = _branches(ms, mu, p)
    split = 2.0 * b.delta_omega_sq
    c_i = np.zeros_like(b.w_sq)
    c_2 = np.zeros_like(b.w_sq)
    c_3 = np.zeros_like(b.w_sq)
    degenerate = mu == 0.0 and ms.dM_sq == 0.0
    for s, omega in ((1, b.omega_plus), (-1, b.omega_minus)):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            denom = -np.expm1(-beta * omega)
            shift = beta if vacuum_subtracted else 0.0
            positive = np.exp(-(u + shift) * omega) / denom
            negative = np.exp(-(beta - u) * omega) / denom
        if degenerate:
            if s == 1:
                c_i = c_i + (positive + negative) / (2.0 * omega)
            continue
        if s == 1:
            # ω₊² − w² = 2μ² + δω²
            identity_num = 2 * mu * mu + b.delta_omega_sq
        else:
            # w² − ω₋² = δω² − 2μ² = (4μ²w² + δM⁴)/(δω² + 2μ²)
            identity_num = (4 * mu * mu * b.w_sq + ms.dM_sq**2) / (b.delta_omega_sq + 2 * mu * mu)
        c_i = c_i + identity_num / (2 * omega * split) * (positive + negative)
        c_3 = c_3 + s * ms.dM_sq / (2 * omega * split) * (positive + negative)
        c_2 = c_2 + s * mu / split * (positive - negative)
    return c_i, c_2, c_3


def _check_kernel_args(u: float, beta: float, ms: MassSpectrum, need_gap: bool) -> None:
    _check_beta(beta)
    if math.isinf(beta):
        raise ParameterError("imaginary-time kernel requires a finite beta", field="beta")
    if not 0.0 <= u <= beta:
        raise ParameterError(f"u must lie in [0, beta]: u={u}, beta={beta}", field="u")
    if need_gap and not ms.M2_sq > 0:
        raise ParameterError(
            "imaginary-time kernel requires a gapped spectrum (M2_sq > 0)", field="M2_sq"
        )


def _radius(x: Any) -> float:
    if np.ndim(x) == 0:
        return abs(float(x))
    vec = np.asarray(x, dtype=float)
    if vec.shape != (3,):
        raise ParameterError(f"x must be a 3-vector or a radius: {x}", field="x")
    return float(np.linalg.norm(vec))


def kms_kernel_imag_time(
    u: float,
    x: Any,
    ms: MassSpectrum,
    mu: float,
    beta: float,
    quad: Optional[QuadratureConfig] = None,
    vacuum_subtracted: bool = False,
    method: str = "auto",
) -> Mat2C:
    """
    虚時間に解析接続した KMS 2点関数 G(u, x)

    method:
        shell      -- 殻重みに e^{∓uω} を掛け、動径 sin 変換 (QAWF) で x 依存を評価
        matsubara  -- 松原和 (1/β)Σ_n e^{−iν_n u} と湯川関数の部分分数で厳密に評価
        auto       -- 全核で u ∈ {0, β} のとき matsubara、それ以外は shell

    G は I, σ₂, σ₃ 成分のみを持ち、係数は実数 (非対角成分は純虚数)。
    KMS 対称性 G(β−u, x) = G(u, x)ᵀ。

    Args:
        u: 虚時間 (0 ≤ u ≤ β)
        x: 3次元位置ベクトルまたは半径
        ms: 質量スペクトル (全核では M₂² > 0)
        mu: 化学ポテンシャル
        beta: 逆温度
        quad: 数値積分設定
        vacuum_subtracted: True なら真空 (β=∞) 部分を差し引いた熱的部分
        method: 評価方法

    Raises:
        ParameterError: u が [0, β] の外、全核で x=0、ギャップのないスペクトル
        QuadratureError: 積分の非収束
    """
    quad = quad or QuadratureConfig()
    if method not in KERNEL_METHODS:
        raise ParameterError(f"method must be one of {KERNEL_METHODS}: {method}", field="method")
    _check_kernel_args(u, beta, ms, need_gap=not vacuum_subtracted)
    r = _radius(x)
    if not vacuum_subtracted and r == 0.0:
        raise ParameterError(
            "the full kernel is singular at x = 0; use vacuum_subtracted=True", field="x"
        )
    if method == "auto":
        method = "matsubara" if (not vacuum_subtracted and u in (0.0, beta)) else "shell"
    if method == "matsubara":
        if vacuum_subtracted:
            raise ParameterError("the Matsubara method evaluates the full kernel only", field="method")
        return _matsubara_kernel(u, r, ms, mu, beta)
    return _shell_kernel(u, r, ms, mu, beta, quad, vacuum_subtracted)


def _shell_kernel(
    u: float,
    r: float,
    ms: MassSpectrum,
    mu: float,
    beta: float,
    quad: QuadratureConfig,
    vacuum_subtracted: bool,
) -> Mat2C:
    coeffs = []
    for index, name in enumerate(("I", "2", "3")):

        def channel(p, k=index):
            return _shell_channels(ms, mu, beta, u, np.atleast_1d(p), vacuum_subtracted)[k]

        if r == 0.0:
            result = radial_integral(
                lambda p: RADIAL_NORM * p * p * channel(p),
                beta,
                _energy_scale(ms, mu),
                quad,
                infrared_panel=ms.is_gapless,
                label=f"kernel_{name}",
            )
            coeffs.append(result.value)
        else:
            value, _ = sine_transform(lambda p: float(channel(p)[0]), r, quad, label=f"kernel_{name}")
            coeffs.append(value)
    c_i, c_2, c_3 = coeffs
    return Mat2C(c_I=c_i, c_2=c_2, c_3=c_3)


def _matsubara_kernel(u: float, r: float, ms: MassSpectrum, mu: float, beta: float) -> Mat2C:
    """
    松原和による全核

    各 ν_n = 2πn/β で Ĝ = N(q)/((q+a)(q+b))、q = |p|²、
    N(q) = (q+M²+ν²)I − δM²σ₃ − 2iμνσ₂、a, b = M²+ν² ∓ √(δM⁴−4μ²ν²)。
    部分分数と ∫d³p/(2π)³ e^{ipx}/(q+a) = e^{−√a r}/(4πr) で空間変換する。
    a ≈ b では二重極の式 I·Y + N(−a)e^{−κr}/(8πκ) を使う。
    """
    nu_max = math.sqrt(ms.M1_sq) + 4.0 * abs(mu) + 60.0 / r
    n_max = int(math.ceil(nu_max * beta / (2.0 * math.pi))) + 1
    n = np.arange(-n_max, n_max + 1)
    nu = 2.0 * math.pi * n / beta
    centre = ms.M_sq + nu * nu
    s = np.sqrt((ms.dM_sq**2 - 4.0 * mu * mu * nu * nu).astype(complex))
    a = centre - s
    b = centre + s
    kappa_a = np.sqrt(a)
    kappa_b = np.sqrt(b)
    yukawa_a = np.exp(-kappa_a * r) / (4.0 * math.pi * r)
    yukawa_b = np.exp(-kappa_b * r) / (4.0 * math.pi * r)

    # N(−x) の成分: I は M²+ν²−x、σ₃ は −δM²、σ₂ は −2iμν
    c3_num = -ms.dM_sq
    c2_num = -2j * mu * nu
    near = np.abs(s) <= 1e-6 * np.abs(centre)
    gap = np.where(near, 1.0, b - a)
    with np.errstate(invalid="ignore", divide="ignore"):
        split_i = ((centre - a) * yukawa_a - (centre - b) * yukawa_b) / gap
        split_k = (yukawa_a - yukawa_b) / gap
        double = np.exp(-kappa_a * r) / (8.0 * math.pi * kappa_a)
    term_i = np.where(near, yukawa_a + (centre - a) * double, split_i)
    term_k = np.where(near, double, split_k)
    phase = np.exp(-1j * nu * u)
    c_i = np.sum(phase * term_i) / beta
    c_2 = np.sum(phase * c2_num * term_k) / beta
    c_3 = np.sum(phase * c3_num * term_k) / beta
    return Mat2C(c_I=c_i.real, c_2=c_2.real, c_3=c_3.real)


def kernel_profile(
    u: float,
    r_grid: Sequence[float],
    ms: MassSpectrum,
    mu: float,
    beta: float,
    quad: Optional[QuadratureConfig] = None,
    method: str = "matsubara",
    vacuum_subtracted: bool = False,
) -> List[Mat2C]:
    """半径グリッド上の核 G(u, r) (vacuum_subtracted=True なら熱的部分)"""
    return [
        kms_kernel_imag_time(u, r, ms, mu, beta, quad, vacuum_subtracted=vacuum_subtracted, method=method)
        for r in r_grid
    ]
