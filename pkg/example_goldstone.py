#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ゴールドストーン検査のデモスクリプト

凝縮相の質量スペクトルから、分散関係・正則化電荷との交換子・
平滑化したスペクトル検査・カレントの発散までを順に実演します
"""

import logging
import sys
from pathlib import Path

import numpy as np

# プロジェクトルートをパスに追加
sys.path.insert(0, str(Path(__file__).parent))

from modules.goldstone import (
    bspline_window,
    charge_commutator,
    default_eps,
    divergence_residual,
    gaussian_window,
    goldstone_spectral_check,
    plane_wave_mode,
    random_configuration,
)
from modules.model import ModelParams, background_spectrum, omega_pm, sound_speed

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger("example_goldstone")


def print_section(title: str):
    """セクションの区切りを表示"""
    print("\n" + "=" * 70)
    print(f" {title}")
    print("=" * 70 + "\n")


def demo_spectrum(params: ModelParams):
    """凝縮背景と分散関係"""
    print_section("1. 凝縮背景と分散関係")
    ms = background_spectrum(params)
    print(f"φ = {ms.phi:.12g}, M₁² = {ms.M1_sq:.12g}, M₂² = {ms.M2_sq:.12g}")
    for p in (0.0, 0.1, 1.0):
        plus, minus = omega_pm(ms, params.mu, p)
        print(f"  p = {p:4.1f}:  ω₊ = {plus:.10f}  ω₋ = {minus:.10f}")
    if ms.is_gapless:
        print(f"音速 c_s = {sound_speed(ms, params.mu):.12f}")
    mode = plane_wave_mode("-", (0.3, 0.0, 0.0), ms, params.mu)
    print(f"ゴールドストーン分枝の平面波: ω = {mode.omega:.10f}, 振幅 = {np.round(mode.amplitude, 6)}")
    return ms


def demo_commutator(params: ModelParams, ms):
    """正則化電荷との交換子"""
    print_section("2. i·ω([Q_R, φ_n(0)]) の R 依存性")
    eps = default_eps(ms)
    for R in (0.5 * eps, 2.0 * eps, 10.0 * eps):
        result = charge_commutator(R, eps, ms, params.mu, ms.phi)
        flag = " (しきい値未満)" if result.pre_asymptotic else ""
        print(f"  R = {R:.4f}: ({result.value[0]:+.3e}, {result.value[1]:.12f}){flag}")


def demo_spectral(params: ModelParams, ms):
    """平滑化したスペクトル検査: ギャップレスとギャップありの比較"""
    print_section("3. 平滑化したスペクトル検査")
    R_grid = [k / ms.M1 for k in (10.0, 20.0, 40.0, 80.0)]
    report = goldstone_spectral_check(bspline_window(default_eps(ms)), R_grid, ms, params.mu, ms.phi)
    for row in report.rows():
        print(f"  R = {row['R']:8.3f}: S₂ = {row['value_n2']:.12f}  誤差 = {row['error_n2']:.3e}")
    print(f"収束: {report.converged}, 単調: {report.monotone}")

    gapped = background_spectrum(
        ModelParams(m=params.m, mu=params.mu, lam=params.lam, beta=params.beta, m_v=0.5)
    )
    wide = gaussian_window(20.0)
    for label, spectrum in (("ギャップレス", ms), ("ギャップあり", gapped)):
        check = goldstone_spectral_check(wide, R_grid, spectrum, params.mu, spectrum.phi)
        print(f"  {label}: S₂(R_max)/φ = {check.limit_estimate[1] / spectrum.phi:.4e}")


def demo_divergence(params: ModelParams, ms):
    """カレントの発散と閉じた式"""
    print_section("4. ∂J の閉じた式との比較")
    config = random_configuration(ms, params.mu, np.random.default_rng(0))
    for order in ("linearized", "full"):
        residual = divergence_residual(config, ms, params.mu, params.lam, ms.phi, order=order)
        print(f"  {order:10s}: 相対偏差 = {residual.deviation:.3e}, max|∂J| = {residual.max_divergence:.3e}")


def main():
    """メイン関数"""
    print("\n" + "🔬" * 35)
    print(" ゴールドストーン検査 デモンストレーション")
    print("🔬" * 35)

    params = ModelParams(m=1.0, mu=2.0**0.5, lam=1.0, beta=1.0)
    try:
        ms = demo_spectrum(params)
        demo_commutator(params, ms)
        demo_spectral(params, ms)
        demo_divergence(params, ms)
        print_section("デモ完了")
        print("✓ すべての検査を実行しました")
    except Exception as e:
        logger.exception("デモ中にエラーが発生しました: %s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
