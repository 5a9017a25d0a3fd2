# -*- coding: utf-8 -*-
"""
Goldstone Module

凝縮相における U(1) 対称性の破れの数値的な検査を扱うモジュール。

- 線形化運動方程式の平面波解 (PlaneWaveMode) とその重ね合わせ (FieldConfiguration)
- 電流の発散 ∂J の線形次数・完全次数での恒等式
- 正則化電荷 Q_R との交換子 i·ω([Q_R, φ_n(0)]) (ツリーレベル)
- 周波数窓で平滑化したスペクトル検査 (ゴールドストーンの定理の数値版)

場の成分: χ = φ + ψ₁ + iψ₂、□ = −∂ₜ² + ∇²。
線形化方程式: (□ − M₁²)ψ₁ − 2μψ̇₂ = 0、(□ − M₂²)ψ₂ + 2μψ̇₁ = 0。
ω([Q_R, φ_n(0)]) の極限は t_{nm}φ_m、t = [[0, −1], [1, 0]]。

マスター Ward 恒等式そのものは扱わない。その数値的な帰結は
divergence_residual(order="full") が凝縮条件上で 0 になることとして確認する。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvariantViolation, ParameterError
from .model import MassSpectrum, Momentum3, MomentumLike, omega_pm, omega_pm_sq_array
from .propagators import BRANCHES, SIGNS, kinetic_matrix
from .quadrature import QuadratureConfig, fourier_config, quad_checked

logger = logging.getLogger(__name__)

# 平面波振幅の残差 ‖D̂v‖ の相対許容値
MODE_RESIDUAL_RTOL = 1e-10
# 時間平滑化幅の既定値 ε = EPS_FACTOR / M₁
EPS_FACTOR = 0.1
# g の外側半径 (R を単位とする)
OUTER_RADIUS = 1.25
PROFILES = ("smoothstep", "linear", "sharp")
WINDOW_KINDS = ("bspline", "gaussian", "notch")
# スペクトル検査で使う ĝ(k) ∝ e^{−k²/2} の打ち切り
GAUSSIAN_K_MAX = 12.0
GAUSSIAN_NORM = (2.0 * math.pi) ** 1.5 / (2.0 * math.pi**2)
BALL_ATOL = 1e-11
QAWF_CYCLES = 400


# ---------------------------------------------------------------------------
# 平面波解
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneWaveMode:
    """
    線形化方程式の平面波解 v·e^{i(p·x − ωt)}

    Attributes:
        branch: "+" または "-"
        p: 空間運動量
        omega: ω_branch(p)
        amplitude: D̂(ω, p) の零ベクトル (‖v‖=1、最初の非零成分が正の実数)
        degenerate: 固有空間が縮退していたか (μ=0 かつ δM²=0 のときのみ)
        residual: ‖D̂v‖ の最大成分
    """

    branch: str
    p: Momentum3
    omega: float
    amplitude: np.ndarray
    degenerate: bool = False
    residual: float = 0.0

    def wave_vector(self) -> np.ndarray:
        """3成分の運動量。大きさだけが与えられていれば x 方向にとる"""
        if isinstance(self.p.p, tuple):
            return np.array(self.p.p, dtype=float)
        return np.array([float(self.p.p), 0.0, 0.0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "branch": self.branch,
            "p": self.p.magnitude,
            "omega": self.omega,
            "amplitude_re": [float(a.real) for a in self.amplitude],
            "amplitude_im": [float(a.imag) for a in self.amplitude],
            "degenerate": self.degenerate,
            "residual": self.residual,
        }


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    vector = vector / np.linalg.norm(vector)
    for component in vector:
        if abs(component) > 1e-14:
            return vector * (np.conj(component) / abs(component))
    return vector


def plane_wave_mode(branch: str, p: MomentumLike, ms: MassSpectrum, mu: float) -> PlaneWaveMode:
    """
    分枝 branch・運動量 p の平面波振幅を求める

    2×2 の斉次系 D̂(ω, p)v = 0 の解として (−D₁₂, D₁₁) と (D₂₂, −D₂₁) の
    ノルムが大きい方を採る。M₂=0, p=0 の "-" 分枝は ψ₂ 方向の定数零モード。

    Args:
        branch: "+" または "-"
        p: 空間運動量
        ms: 質量スペクトル
        mu: 化学ポテンシャル

    Returns:
        PlaneWaveMode

    Raises:
        ParameterError: branch が不正
        InvariantViolation: 残差が 1e−10·‖D̂‖ を超えた
    """
    if branch not in BRANCHES:
        raise ParameterError(f"branch must be one of {BRANCHES}: {branch}", field="branch")
    momentum = Momentum3.of(p)
    omega_plus, omega_minus = omega_pm(ms, mu, momentum)
    omega = omega_plus if branch == "+" else omega_minus
    d = kinetic_matrix(omega, momentum, ms, mu)
    d11, d12, d21, d22 = d.entry(0, 0), d.entry(0, 1), d.entry(1, 0), d.entry(1, 1)

    candidates = [np.array([-d12, d11], dtype=complex), np.array([d22, -d21], dtype=complex)]
    best = max(candidates, key=np.linalg.norm)
    scale = max(d.max_abs(), momentum.sq + ms.M1_sq, 1e-300)
    degenerate = bool(np.linalg.norm(best) <= 1e-12 * scale)
    if degenerate:
        logger.warning(
            "degenerate eigenspace at p=%.6g (omega_plus = omega_minus); using the coordinate basis",
            momentum.magnitude,
        )
        best = np.array([1.0, 0.0] if branch == "+" else [0.0, 1.0], dtype=complex)
    amplitude = _fix_phase(best)

    residual = float(np.max(np.abs(d.apply(amplitude))))
    if residual > MODE_RESIDUAL_RTOL * max(d.max_abs(), 1e-300) and not degenerate:
        raise InvariantViolation(
            f"plane-wave amplitude does not solve the linearized equations: residual {residual:.3g}",
            branch=branch,
            p=momentum.magnitude,
        )
    return PlaneWaveMode(
        branch=branch, p=momentum, omega=omega, amplitude=amplitude,
        degenerate=degenerate, residual=residual,
    )


@dataclass(frozen=True)
class FieldSample:
    """配置 (t, x) での ψ, ψ̇, □ψ (各 shape (2, N))"""

    t: np.ndarray
    x: np.ndarray
    psi: np.ndarray
    psi_dot: np.ndarray
    box_psi: np.ndarray


@dataclass(frozen=True)
class FieldConfiguration:
    """
    平面波解の重ね合わせ ψ(t, x) = Re Σ_k c_k v_k e^{i(p_k·x − ω_k t)}

    時間微分と □ はスペクトル的に (−iω と ω²−|p|² を掛けて) 評価する。
    """

    ms: MassSpectrum
    mu: float
    modes: Tuple[PlaneWaveMode, ...]
    coefficients: Tuple[complex, ...]

    def __post_init__(self):
        """初期化後のバリデーション"""
        if not self.modes:
            raise ParameterError("a field configuration needs at least one mode", field="modes")
        if len(self.modes) != len(self.coefficients):
            raise ParameterError(
                f"modes and coefficients differ in length: {len(self.modes)} != {len(self.coefficients)}",
                field="coefficients",
            )

    @classmethod
    def from_modes(
        cls,
        ms: MassSpectrum,
        mu: float,
        modes: Sequence[PlaneWaveMode],
        coefficients: Optional[Sequence[complex]] = None,
    ) -> "FieldConfiguration":
        if coefficients is None:
            coefficients = [1.0] * len(modes)
        return cls(ms=ms, mu=mu, modes=tuple(modes), coefficients=tuple(complex(c) for c in coefficients))

    def sample(self, t: Any, x: Any) -> FieldSample:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape != (t.size, 3):
            raise ParameterError(f"x must have shape ({t.size}, 3): {x.shape}", field="x")
        psi = np.zeros((2, t.size))
        psi_dot = np.zeros((2, t.size))
        box_psi = np.zeros((2, t.size))
        for mode, c in zip(self.modes, self.coefficients):
            k = mode.wave_vector()
            wave = c * np.exp(1j * (x @ k - mode.omega * t))
            column = mode.amplitude[:, None] * wave[None, :]
            psi += column.real
            psi_dot += (-1j * mode.omega * column).real
            box_psi += ((mode.omega**2 - float(k @ k)) * column).real
        return FieldSample(t=t, x=x, psi=psi, psi_dot=psi_dot, box_psi=box_psi)

    def equation_residual(self, t: Any, x: Any) -> float:
        """線形化方程式の残差の最大値 (M₁²+4μ² と場の大きさで規格化)"""
        s = self.sample(t, x)
        r1 = s.box_psi[0] - self.ms.M1_sq * s.psi[0] - 2.0 * self.mu * s.psi_dot[1]
        r2 = s.box_psi[1] - self.ms.M2_sq * s.psi[1] + 2.0 * self.mu * s.psi_dot[0]
        scale = _field_scale(self.ms, self.mu, s)
        return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))) / scale)


def _field_scale(ms: MassSpectrum, mu: float, s: FieldSample) -> float:
    amplitude = float(np.max(np.abs(s.psi)))
    curvature = float(np.max(np.abs(s.box_psi)))
    return max((ms.M1_sq + 4.0 * mu * mu) * amplitude, curvature, 1e-300)


def random_configuration(
    ms: MassSpectrum,
    mu: float,
    rng: np.random.Generator,
    n_modes: int = 3,
    p_max: float = 2.0,
    amplitude: float = 0.3,
) -> FieldConfiguration:
    """ランダムな方向・大きさ・分枝の平面波を重ね合わせた配置"""
    modes: List[PlaneWaveMode] = []
    coefficients: List[complex] = []
    for _ in range(n_modes):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        p = tuple(float(v) for v in direction * rng.uniform(0.1, p_max))
        branch = BRANCHES[int(rng.integers(2))]
        modes.append(plane_wave_mode(branch, p, ms, mu))
        coefficients.append(amplitude * complex(rng.normal(), rng.normal()))
    return FieldConfiguration.from_modes(ms, mu, modes, coefficients)


def sample_points(rng: np.random.Generator, n_points: int = 64, extent: float = 10.0) -> Tuple[np.ndarray, np.ndarray]:
    """[−extent, extent] の時空点"""
    t = rng.uniform(-extent, extent, size=n_points)
    x = rng.uniform(-extent, extent, size=(n_points, 3))
    return t, x


# ---------------------------------------------------------------------------
# 電流の発散
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceResidual:
    """∂J の数値評価と閉じた式、およびその相対差"""

    order: str
    divergence: np.ndarray
    closed_form: np.ndarray
    deviation: float
    scale: float

    @property
    def max_divergence(self) -> float:
        return float(np.max(np.abs(self.divergence)) / self.scale)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "deviation": self.deviation,
            "max_divergence": self.max_divergence,
            "scale": self.scale,
            "n_points": int(self.divergence.size),
        }


def divergence_residual(
    config: FieldConfiguration,
    ms: MassSpectrum,
    mu: float,
    lam: float,
    phi: float,
    order: str = "linearized",
    points: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    seed: int = 0,
) -> DivergenceResidual:
    """
    ∂^μJ_μ = −2 Im[χ̄(□ψ + 2iμψ̇ − N)] を配置上で評価する

    order="linearized": N = 0。閉じた式 2ψ₁ψ₂(M₁²−M₂²) − 2φM₂²ψ₂ と比べる。
    order="full": 相互作用の非線形項 N₁ = λφ(3ψ₁²+ψ₂²) + λψ₁|ψ|²、
    N₂ = 2λφψ₁ψ₂ + λψ₂|ψ|² を運動方程式に含める。閉じた式は
    2ψ₁ψ₂(M₁²−M₂²−2λφ²) − 2φM₂²ψ₂ で、凝縮条件上では恒等的に 0。

    Args:
        config: 線形化方程式の解からなる配置
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        lam: 結合定数 λ
        phi: 凝縮振幅
        order: "linearized" または "full"
        points: (t, x)。省略時は seed から64点を生成
        seed: 標本点の乱数シード

    Returns:
        DivergenceResidual
    """
    if order not in ("linearized", "full"):
        raise ParameterError(f"order must be 'linearized' or 'full': {order}", field="order")
    if points is None:
        points = sample_points(np.random.default_rng(seed))
    s = config.sample(*points)
    psi1, psi2 = s.psi
    box = s.box_psi[0] + 1j * s.box_psi[1]
    dot = s.psi_dot[0] + 1j * s.psi_dot[1]
    force = box + 2j * mu * dot

    closed = 2.0 * psi1 * psi2 * (ms.M1_sq - ms.M2_sq) - 2.0 * phi * ms.M2_sq * psi2
    if order == "full":
        modulus_sq = psi1**2 + psi2**2
        n1 = lam * phi * (3.0 * psi1**2 + psi2**2) + lam * psi1 * modulus_sq
        n2 = 2.0 * lam * phi * psi1 * psi2 + lam * psi2 * modulus_sq
        force = force + n1 + 1j * n2
        closed = closed - 4.0 * lam * phi**2 * psi1 * psi2

    chi_bar = phi + psi1 - 1j * psi2
    divergence = -2.0 * np.imag(chi_bar * force)
    amplitude = float(np.max(np.abs(s.psi)))
    scale = max((ms.M1_sq + 4.0 * mu * mu) * amplitude * (abs(phi) + amplitude), 1e-300)
    deviation = float(np.max(np.abs(divergence - closed)) / scale)
    logger.debug("divergence residual (%s): deviation=%.3g", order, deviation)
    return DivergenceResidual(
        order=order, divergence=divergence, closed_form=closed, deviation=deviation, scale=scale
    )


# ---------------------------------------------------------------------------
# 周波数窓と交換子の殻係数
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyWindow:
    """
    時間平滑化関数 f のフーリエ変換 f̂(ν) = ∫dt f(t)e^{−iνt}

    bspline: 台 (−ε, ε) の3次 B スプライン、f̂ = sinc⁴(νε/4)
    gaussian: 幅 width のガウス関数、f̂ = e^{−(ν·width)²/2}
    notch: f̂ = (ν·width)²e^{−(ν·width)²/2} (f̂(0) = 0)
    """

    kind: str
    width: float

    def __post_init__(self):
        """初期化後のバリデーション"""
        if self.kind not in WINDOW_KINDS:
            raise ParameterError(f"window must be one of {WINDOW_KINDS}: {self.kind}", field="window")
        if not self.width > 0:
            raise ParameterError(f"window width must be positive: {self.width}", field="window_width")

    def __call__(self, nu: Any) -> Any:
        x = np.asarray(nu, dtype=float) * self.width
        if self.kind == "bspline":
            value = np.sinc(x / (4.0 * math.pi)) ** 4
        elif self.kind == "gaussian":
            value = np.exp(-0.5 * x * x)
        else:
            value = x * x * np.exp(-0.5 * x * x)
        return value if np.ndim(nu) else float(value)

    @property
    def at_zero(self) -> float:
        return float(self(0.0))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "width": self.width, "f_hat_0": self.at_zero}


def bspline_window(eps: float) -> FrequencyWindow:
    return FrequencyWindow("bspline", eps)


def gaussian_window(width: float) -> FrequencyWindow:
    return FrequencyWindow("gaussian", width)


def notch_window(width: float) -> FrequencyWindow:
    return FrequencyWindow("notch", width)


def default_eps(ms: MassSpectrum) -> float:
    if not ms.M1 > 0:
        raise ParameterError("eps must be given explicitly when M1 = 0", field="eps")
    return EPS_FACTOR / ms.M1


@dataclass(frozen=True)
class _ShellTerms:
    omegas: Dict[str, np.ndarray]
    coefficients: Dict[Tuple[int, int, str], np.ndarray]


def _shell_terms(p_sq: Any, ms: MassSpectrum, mu: float) -> _ShellTerms:
    p_sq = np.asarray(p_sq, dtype=float)
    plus_sq, minus_sq = omega_pm_sq_array(ms, mu, p_sq)
    omegas = {"+": np.sqrt(plus_sq), "-": np.sqrt(np.maximum(minus_sq, 0.0))}
    squares = {"+": plus_sq, "-": minus_sq}
    w1_sq = p_sq + ms.M1_sq
    w2_sq = p_sq + ms.M2_sq
    split = plus_sq - minus_sq
    coefficients: Dict[Tuple[int, int, str], np.ndarray] = {}
    for sigma in (1, -1):
        for branch in BRANCHES:
            s = SIGNS[branch]
            if ms.dM_sq == 0.0 and mu == 0.0:
                # スカラー Klein–Gordon: K₂ = cos(wt)
                c2 = np.full_like(p_sq, 0.5 if branch == "+" else 0.0)
                c1 = np.zeros_like(p_sq, dtype=complex)
            else:
                c2 = s * (squares[branch] - w1_sq - 4.0 * mu * mu) / (2.0 * split)
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(omegas[branch] > 0, w2_sq / np.where(omegas[branch] > 0, omegas[branch], 1.0), 0.0)
                c1 = 1j * sigma * s * mu * ratio / split
            coefficients[(1, sigma, branch)] = c1 + 0j
            coefficients[(2, sigma, branch)] = c2 + 0j
    return _ShellTerms(omegas=omegas, coefficients=coefficients)


def commutator_shell_coefficients(p: MomentumLike, ms: MassSpectrum, mu: float) -> List[Dict[str, Any]]:
    """
    平滑化した交換子核の殻ごとの重み

    K_n(t, p) = −∂ₜΔ₂ₙ + 2μΔ₁ₙ = Σ_{σ,s} c^n_{σs} e^{iσω_s t} として
    c²_{σs} = s(ω_s² − w₁² − 4μ²)/(2Ω)、c¹_{σs} = iσsμw₂²/(ω_sΩ)、Ω = ω₊² − ω₋²。
    f で平滑化すると Σ c^n_{σs} f̂(σω_s) になる。

    Returns:
        殻ごとの {sigma, branch, p0, n1, n2}
    """
    terms = _shell_terms(Momentum3.of(p).sq, ms, mu)
    records = []
    for sigma in (1, -1):
        for branch in BRANCHES:
            records.append({
                "sigma": sigma,
                "branch": branch,
                "p0": sigma * float(terms.omegas[branch]),
                "n1": complex(terms.coefficients[(1, sigma, branch)]),
                "n2": complex(terms.coefficients[(2, sigma, branch)]),
            })
    return records


def smeared_kernel(
    window: Callable[[Any], Any], p_sq: Any, ms: MassSpectrum, mu: float
) -> Tuple[np.ndarray, np.ndarray]:
    """F_n(p) = Re Σ_{σ,s} c^n_{σs} f̂(σω_s) を n = 1, 2 について返す"""
    terms = _shell_terms(p_sq, ms, mu)
    totals = {1: 0j, 2: 0j}
    for (n, sigma, branch), c in terms.coefficients.items():
        totals[n] = totals[n] + c * window(sigma * terms.omegas[branch])
    return np.real(totals[1]), np.real(totals[2])


# ---------------------------------------------------------------------------
# 正則化電荷との交換子
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChargeCommutatorResult:
    """
    i·ω([Q_R, φ_n(0)]) (n = 1, 2) の評価結果

    Attributes:
        R: 空間カットオフの半径
        value: 2成分の値
        f_support: 時間平滑化の幅 ε
        g: 空間プロファイルの記述
        pre_asymptotic: R が因果的なしきい値 ε より小さい
        error: 積分誤差の見積もり
    """

    R: float
    value: np.ndarray
    f_support: float
    g: Dict[str, Any]
    pre_asymptotic: bool
    error: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "R": self.R,
            "value_n1": float(self.value[0]),
            "value_n2": float(self.value[1]),
            "f_support": self.f_support,
            "g": dict(self.g),
            "pre_asymptotic": self.pre_asymptotic,
            "error": self.error,
        }


def _ball_value(
    kernel: Callable[[float], float], radius: float, quad: QuadratureConfig
) -> Tuple[float, float]:
    """
    半径 radius の球で平均した値 (2/π)∫₀^∞ F(p)[sin(pL)/p − L cos(pL)] dp

    [0, π/L] は通常の適応求積、その先は QAWF の sin/cos 重みで積分する。
    """
    a = math.pi / radius
    # 各項は O(1) なので QAWF の絶対誤差には下限を置く
    fourier = fourier_config(QuadratureConfig(rtol=quad.rtol, atol=max(quad.atol, BALL_ATOL)))

    def low(p: float) -> float:
        if p == 0.0:
            return 0.0
        return kernel(p) * (math.sin(p * radius) / p - radius * math.cos(p * radius))

    head, e1 = quad_checked(low, 0.0, a, quad, label="ball_head")
    sin_tail, e2 = quad_checked(
        lambda p: kernel(p) / p, a, np.inf, fourier, label="ball_sin", weight="sin", wvar=radius, limlst=QAWF_CYCLES
    )
    cos_tail, e3 = quad_checked(
        kernel, a, np.inf, fourier, label="ball_cos", weight="cos", wvar=radius, limlst=QAWF_CYCLES
    )
    value = 2.0 / math.pi * (head + sin_tail - radius * cos_tail)
    return value, 2.0 / math.pi * (e1 + e2 + radius * e3)


def _profile_nodes(R: float, profile: str, nodes: int) -> List[Tuple[float, float]]:
    """g を球の混合 Σ w_j θ(L_j − r) に分解したときの (L_j, w_j)"""
    if profile == "sharp":
        return [(R, 1.0)]
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (x + 1.0)
    weights = 0.5 * w * (6.0 * u * (1.0 - u) if profile == "smoothstep" else np.ones_like(u))
    radii = R * (1.0 + (OUTER_RADIUS - 1.0) * u)
    return list(zip(radii.tolist(), weights.tolist()))


def charge_commutator(
    R: float,
    eps: Optional[float],
    ms: MassSpectrum,
    mu: float,
    phi: float,
    quad: Optional[QuadratureConfig] = None,
    profile: str = "smoothstep",
    nodes: int = 12,
) -> ChargeCommutatorResult:
    """
    ツリーレベルの i·ω([Q_R, φ_n(0)])、Q_R = −½∫d⁴x f(x⁰)g(x/R)J⁰(x)

    J⁰ の φ について線形な部分 −2φψ̇₂ + 4μφψ₁ と自由な交換子関数から
    φ∫d³x g(x/R) X_n(x)、X_n は F_n(p) のフーリエ変換。j̃ と :|ψ|²: の部分は
    1点関数の交換子にはツリーレベルで寄与しない。

    X_n は |x| < ε に台を持つ (因果性) ので R ≥ ε では値は R にも g の形にもよらず、
    凝縮相では (0, φ) = t_{nm}φ_m に一致する。

    Args:
        R: 空間カットオフ半径 (g = 1 on |x| < R)
        eps: 時間平滑化の幅 (None なら 0.1/M₁)
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        phi: 凝縮振幅
        quad: 数値積分設定
        profile: "smoothstep" | "linear" | "sharp" (R と 1.25R の間の落ち方)
        nodes: プロファイル積分の Gauss–Legendre 点数

    Returns:
        ChargeCommutatorResult
    """
    quad = quad or QuadratureConfig()
    if not R > 0:
        raise ParameterError(f"R must be positive: {R}", field="R")
    if profile not in PROFILES:
        raise ParameterError(f"profile must be one of {PROFILES}: {profile}", field="profile")
    eps = default_eps(ms) if eps is None else eps
    if not eps > 0:
        raise ParameterError(f"eps must be positive: {eps}", field="eps")
    pre_asymptotic = R < eps
    if pre_asymptotic:
        logger.warning("R=%.6g is below the causal threshold eps=%.6g; result is pre-asymptotic", R, eps)

    g = {"profile": profile, "inner": R, "outer": R if profile == "sharp" else OUTER_RADIUS * R}
    if phi == 0.0:
        return ChargeCommutatorResult(R=R, value=np.zeros(2), f_support=eps, g=g, pre_asymptotic=pre_asymptotic)

    window = bspline_window(eps)
    value = np.zeros(2)
    error = 0.0
    for n in (1, 2):

        def kernel(p: float, n: int = n) -> float:
            return float(smeared_kernel(window, p * p, ms, mu)[n - 1])

        for radius, weight in _profile_nodes(R, profile, nodes):
            v, e = _ball_value(kernel, radius, quad)
            value[n - 1] += weight * v
            error += weight * e
    value *= phi
    logger.debug("charge commutator R=%.6g: (%.12g, %.12g)", R, value[0], value[1])
    return ChargeCommutatorResult(
        R=R, value=value, f_support=eps, g=g, pre_asymptotic=pre_asymptotic, error=abs(phi) * error
    )


def charge_commutator_scan(
    R_grid: Sequence[float],
    eps: Optional[float],
    ms: MassSpectrum,
    mu: float,
    phi: float,
    quad: Optional[QuadratureConfig] = None,
    profile: str = "smoothstep",
    threads: int = 1,
) -> List[ChargeCommutatorResult]:
    """R の列に対する charge_commutator (結果は R_grid の順)"""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda R: charge_commutator(R, eps, ms, mu, phi, quad, profile), R_grid))


# ---------------------------------------------------------------------------
# 平滑化したスペクトル検査
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralCheckReport:
    """
    ∫d⁴p f̂(p₀)ĝ(p)Ĝ_n(p₀, p/R) の R 依存性と t_{nm}φ_m f̂(0) への収束

    ĝ はガウス関数 g(x) = e^{−|x|²/2} のフーリエ変換 (∫d³p ĝ/(2π)³ = 1)。
    """

    window: Dict[str, Any]
    R_grid: Tuple[float, ...]
    values: np.ndarray
    target: np.ndarray
    errors: np.ndarray
    rates: Tuple[float, ...]
    monotone: bool
    converged: bool
    gapless: bool

    @property
    def limit_estimate(self) -> np.ndarray:
        return self.values[-1]

    def rows(self) -> List[Dict[str, float]]:
        rows = []
        for i, R in enumerate(self.R_grid):
            rows.append({
                "R": R,
                "value_n1": float(self.values[i, 0]),
                "value_n2": float(self.values[i, 1]),
                "error_n2": float(self.errors[i]),
                "observed_rate": self.rates[i - 1] if i > 0 else float("nan"),
            })
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": dict(self.window),
            "target": [float(v) for v in self.target],
            "limit_estimate": [float(v) for v in self.limit_estimate],
            "monotone": self.monotone,
            "converged": self.converged,
            "gapless": self.gapless,
            "rates": list(self.rates),
        }


def _spectral_value(
    window: FrequencyWindow, R: float, ms: MassSpectrum, mu: float, phi: float, quad: QuadratureConfig
) -> np.ndarray:
    reference = window.at_zero

    def integrand(n: int) -> Callable[[float], float]:
        def f(k: float) -> float:
            kernel = smeared_kernel(window, (k / R) ** 2, ms, mu)[n - 1]
            offset = reference if n == 2 else 0.0
            return k * k * math.exp(-0.5 * k * k) * (float(kernel) - offset)

        return f

    deviation = np.array([
        quad_checked(integrand(n), 0.0, GAUSSIAN_K_MAX, quad, label=f"spectral_n{n}")[0] for n in (1, 2)
    ])
    return phi * (GAUSSIAN_NORM * deviation + np.array([0.0, reference]))


def goldstone_spectral_check(
    f_hat: FrequencyWindow,
    R_grid: Sequence[float],
    ms: MassSpectrum,
    mu: float,
    phi: float,
    quad: Optional[QuadratureConfig] = None,
    tolerance: float = 1e-3,
    threads: int = 1,
) -> SpectralCheckReport:
    """
    平滑化したゴールドストーン検査

    S_n(R) = φ∫d³k/(2π)³ ĝ(k) F_n(k/R) を R の列で評価し、t_{nm}φ_m·f̂(0) = (0, φf̂(0))
    への収束を調べる。ギャップレスな凝縮相では p₀ = 0 の重みが p → 0 で残るので収束する。
    ギャップがあると (m_v > 0) 極限は f̂(ω₋(0)) 程度に落ちる。

    Args:
        f_hat: 周波数窓
        R_grid: 単調増加する R の列
        ms: 質量スペクトル
        mu: 化学ポテンシャル
        phi: 凝縮振幅 (> 0)
        quad: 数値積分設定
        tolerance: 最後の R での |誤差| の許容値 (φ 単位)
        threads: 並列数

    Returns:
        SpectralCheckReport (収束しないときは converged=False と警告ログ)
    """
    quad = quad or QuadratureConfig()
    grid = tuple(float(R) for R in R_grid)
    if not grid or any(R <= 0 for R in grid) or any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ParameterError(f"R_grid must be positive and strictly increasing: {grid}", field="R_grid")
    if not phi > 0:
        raise ParameterError(f"phi must be positive for the spectral check: {phi}", field="phi")
    if not ms.is_gapless:
        logger.warning("spectral check on a gapped spectrum (M2_sq=%.6g): no zero-frequency weight", ms.M2_sq)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        values = np.array(list(pool.map(lambda R: _spectral_value(f_hat, R, ms, mu, phi, quad), grid)))

    target = np.array([0.0, phi * f_hat.at_zero])
    errors = np.abs(values[:, 1] - target[1])
    floor = 1e-13 * phi
    monotone = all(b < a or b <= floor for a, b in zip(errors[:-1], errors[1:]))
    rates = tuple(
        math.log(a / b) / math.log(R2 / R1) if a > floor and b > floor else float("nan")
        for a, b, R1, R2 in zip(errors[:-1], errors[1:], grid[:-1], grid[1:])
    )
    converged = monotone and errors[-1] <= tolerance * phi
    if not converged:
        logger.warning(
            "spectral check did not converge to %.6g: last error %.3g (monotone=%s)",
            target[1], errors[-1], monotone,
        )
    return SpectralCheckReport(
        window=f_hat.to_dict(),
        R_grid=grid,
        values=values,
        target=target,
        errors=errors,
        rates=rates,
        monotone=monotone,
        converged=bool(converged),
        gapless=ms.is_gapless,
    )
