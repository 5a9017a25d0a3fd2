# -*- coding: utf-8 -*-
"""
Quadrature Module

熱的な運動量積分を1次元の動径積分に落として評価するための数値積分設定と補助関数。

スキーム:
    adaptive  -- scipy.integrate.quad (QUADPACK) + 小さい p の Gauss–Legendre パネル
    laguerre  -- 重み e^{−βp} に合わせた Gauss–Laguerre 求積
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .errors import ParameterError, QuadratureError

logger = logging.getLogger(__name__)

SCHEMES = ("adaptive", "laguerre")

# 赤外パネルの Gauss–Legendre 次数
PANEL_NODES = 48

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureConfig:
    """すべての積分を支配する許容誤差・カットオフ・分割上限"""

    rtol: float = 1e-10
    atol: float = 1e-14
    p_cutoff: Optional[float] = None
    max_subdivisions: int = 200
    scheme: str = "adaptive"
    laguerre_nodes: int = 160

    def __post_init__(self):
        """初期化後のバリデーション"""
        if not self.rtol > 0:
            raise ParameterError(f"rtol must be positive: {self.rtol}", field="rtol")
        if not self.atol > 0:
            raise ParameterError(f"atol must be positive: {self.atol}", field="atol")
        if self.p_cutoff is not None and not self.p_cutoff > 0:
            raise ParameterError(f"p_cutoff must be positive: {self.p_cutoff}", field="p_cutoff")
        if self.max_subdivisions < 1:
            raise ParameterError(
                f"max_subdivisions must be >= 1: {self.max_subdivisions}", field="max_subdivisions"
            )
        if self.scheme not in SCHEMES:
            raise ParameterError(
                f"scheme must be one of {SCHEMES}: {self.scheme}", field="scheme"
            )
        if not 8 <= self.laguerre_nodes <= 400:
            raise ParameterError(
                f"laguerre_nodes must be in [8, 400]: {self.laguerre_nodes}", field="laguerre_nodes"
            )

    def with_scheme(self, scheme: str) -> "QuadratureConfig":
        return QuadratureConfig(
            rtol=self.rtol,
            atol=self.atol,
            p_cutoff=self.p_cutoff,
            max_subdivisions=self.max_subdivisions,
            scheme=scheme,
            laguerre_nodes=self.laguerre_nodes,
        )

    def tolerance(self, value: float) -> float:
        """値に対する許容誤差 max(atol, rtol·|value|)"""
        return max(self.atol, self.rtol * abs(value))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rtol": self.rtol,
            "atol": self.atol,
            "p_cutoff": self.p_cutoff,
            "max_subdivisions": self.max_subdivisions,
            "scheme": self.scheme,
            "laguerre_nodes": self.laguerre_nodes,
        }


@dataclass(frozen=True)
class IntegralResult:
    """積分値と誤差見積もり (テール寄与を含む)"""

    value: float
    error: float
    cutoff: float
    scheme: str


def resolve_cutoff(quad: QuadratureConfig, beta: float, energy_scale: float) -> float:
    """p_cutoff = max(20/β, 10·scale)。設定で明示されていればそれを使う"""
    if quad.p_cutoff is not None:
        return quad.p_cutoff
    return max(20.0 / beta, 10.0 * energy_scale)


@lru_cache(maxsize=16)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=8)
def _laguerre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.laguerre.laggauss(n)
    keep = weights > 0
    # e^{x}·w は大きなノードでもオーバーフローしないよう対数で組む
    scaled = np.exp(nodes[keep] + np.log(weights[keep]))
    return nodes[keep], scaled


def gauss_legendre(f: Integrand, a: float, b: float, n: int = PANEL_NODES) -> float:
    """[a, b] 上の固定次数 Gauss–Legendre 求積 (f はベクトル化されていること)"""
    if b <= a:
        return 0.0
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    return float(half * np.sum(w * f(nodes)))


def gauss_legendre_panels(f: Integrand, breaks: Sequence[float], n: int = PANEL_NODES) -> float:
    """区切り点で分けたパネルごとの Gauss–Legendre 和"""
    edges = sorted(set(float(b) for b in breaks))
    return sum(gauss_legendre(f, lo, hi, n) for lo, hi in zip(edges[:-1], edges[1:]))


def gauss_laguerre(f: Integrand, rate: float, n: int) -> float:
    """∫₀^∞ f(p) dp を p = x/rate の Gauss–Laguerre 求積で評価する"""
    x, scaled = _laguerre(n)
    return float(np.sum(scaled * f(x / rate)) / rate)


def quad_checked(
    f: Callable[[float], float],
    a: float,
    b: float,
    quad: QuadratureConfig,
    label: str = "",
    **kwargs: Any,
) -> Tuple[float, float]:
    """
    scipy.integrate.quad を呼び、非収束を QuadratureError として報告する

    QUADPACK が警告を出しても誤差見積もりが許容範囲内なら受理する。

    Returns:
        (値, 誤差見積もり)

    Raises:
        QuadratureError: 誤差見積もりが許容誤差の10倍を超えた場合
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        result = integrate.quad(
            f,
            a,
            b,
            epsabs=quad.atol,
            epsrel=quad.rtol,
            limit=quad.max_subdivisions,
            full_output=1,
            **kwargs,
        )
    value, error = float(result[0]), float(result[1])
    if len(result) > 3:
        message = result[3]
        if not math.isfinite(value) or error > 10.0 * quad.tolerance(value):
            raise QuadratureError(
                f"quadrature did not converge{' (' + label + ')' if label else ''}: {message}",
                error_estimate=error,
                value=value,
            )
        logger.debug("quad warning accepted (%s): err=%.3g, %s", label, error, message)
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite integral ({label})", error_estimate=error)
    return value, error


def radial_integral(
    f: Integrand,
    beta: float,
    energy_scale: float,
    quad: QuadratureConfig,
    infrared_panel: bool = False,
    label: str = "",
) -> IntegralResult:
    """
    ∫₀^∞ f(p) dp を熱的な指数減衰を前提に評価する

    adaptive: [0, p_cut] を QUADPACK で積分し、カットオフ外の寄与は
    f(p_cut)/β の指数テールとして誤差に加える。テールが許容値を超える
    場合はカットオフを倍々に広げる。infrared_panel=True なら [0, p₀] を
    Gauss–Legendre パネルで別に積分する (ギャップレス分枝の小さい p 領域)。

    laguerre: p = x/β として Gauss–Laguerre 求積。

    Args:
        f: ベクトル化された被積分関数
        beta: 逆温度 (指数減衰の速さ)
        energy_scale: 質量・化学ポテンシャルの代表値
        quad: 数値積分設定
        infrared_panel: 小さい p の専用パネルを使うか
        label: ログ・エラー用の名前

    Returns:
        IntegralResult
    """
    if quad.scheme == "laguerre":
        value = gauss_laguerre(f, beta, quad.laguerre_nodes)
        if not math.isfinite(value):
            raise QuadratureError(f"non-finite Gauss–Laguerre sum ({label})")
        return IntegralResult(value=value, error=float("nan"), cutoff=math.inf, scheme="laguerre")

    cutoff = resolve_cutoff(quad, beta, energy_scale)
    p_ir = 0.0
    total = 0.0
    if infrared_panel:
        p_ir = min(0.1 * energy_scale, 0.1 / beta, cutoff)
        total += gauss_legendre(f, 0.0, p_ir)

    def scalar(p: float) -> float:
        return float(f(np.array([p]))[0])

    for _ in range(6):
        value, error = quad_checked(scalar, p_ir, cutoff, quad, label=label)
        edge = abs(scalar(cutoff))
        tail = edge / beta * (1.0 + 2.0 / (beta * cutoff))
        if tail <= quad.tolerance(total + value) or quad.p_cutoff is not None:
            break
        logger.debug("extending cutoff for %s: %.4g -> %.4g (tail %.3g)", label, cutoff, 2 * cutoff, tail)
        cutoff *= 2.0
    total += value
    return IntegralResult(value=total, error=error + tail, cutoff=cutoff, scheme="adaptive")


def sine_transform(
    h: Callable[[float], float],
    r: float,
    quad: QuadratureConfig,
    label: str = "",
) -> Tuple[float, float]:
    """
    球対称な3次元フーリエ変換 (1/(2π²r)) ∫₀^∞ p sin(pr) h(p) dp

    scipy.integrate.quad の weight='sin' (QAWF) を使う。
    """
    if not r > 0:
        raise ParameterError(f"r must be positive for the sine transform: {r}", field="r")
    value, error = quad_checked(
        lambda p: p * h(p), 0.0, np.inf, fourier_config(quad), label=label, weight="sin", wvar=r
    )
    norm = 1.0 / (2.0 * math.pi**2 * r)
    return value * norm, error * norm


def fourier_config(quad: QuadratureConfig) -> QuadratureConfig:
    # QAWF は epsabs のみを見るので下限を持たせる
    return QuadratureConfig(
        rtol=quad.rtol,
        atol=max(quad.atol, 1e-13),
        p_cutoff=quad.p_cutoff,
        max_subdivisions=quad.max_subdivisions,
        scheme="adaptive",
        laguerre_nodes=quad.laguerre_nodes,
    )
