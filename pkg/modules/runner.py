# -*- coding: utf-8 -*-
"""
Runner Module

CLI のサブコマンドを実装するモジュール。

各コマンドは RunConfig を受け取り、<出力ディレクトリ>/<コマンド名>/ に
CSV・manifest.json・プロットスクリプトを書き出して終了コードを返す。
途中で失敗した場合も、それまでに得られた行は status: partial として書き出し、
manifest にエラーレコードを残す。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, Optional, Sequence, TypeVar

import numpy as np

from .artifacts import RunArtifacts, STATUS_COMPLETE, STATUS_PARTIAL, error_record
from .config_manager import RunConfig
from .errors import EXIT_OK, InvariantViolation, ParameterError, exit_code_for
from .goldstone import (
    bspline_window,
    charge_commutator_scan,
    default_eps,
    divergence_residual,
    gaussian_window,
    goldstone_spectral_check,
    notch_window,
    random_configuration,
)
from .graphs import (
    cluster_decay_fit,
    cumulant_oracle,
    enumerate_connected,
    graph_records,
    graphsum_truncated,
    predicted_count,
    random_toy,
    symmetry_factor,
)
from .hadamard import (
    agreement_remainder,
    delta_phi2_first_order,
    hadamard_coefficients,
    transport_ladder,
    u_coeff,
    v0_coeff,
)
from .model import omega_pm_sq_array, sound_speed, sound_speed_closed_form
from .pauli import CHANNELS, Mat2C
from .propagators import commutator_time_kernel
from .thermal import (
    critical_density,
    critical_temperature,
    max_virtual_mass_sq,
    thermal_expectations,
    thermal_mass_shifts,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# 実行時に検査する許容値
VIETA_RTOL = 1e-12
ORACLE_RTOL = 1e-10
DIVERGENCE_RTOL = 1e-10
R_STABILITY_ATOL = 1e-8
MIN_TRANSPORT_ORDER = 1.9
AGREEMENT_SIGMAS = (1e-1, 1e-2, 1e-3, 1e-4)
TIME_KERNEL_STEP = 1e-5
TIME_KERNEL_ATOL = 1e-6


@dataclass
class RunResult:
    """1回のコマンド実行の結果"""

    command: str
    exit_code: int
    directory: Path
    manifest: Path
    error: Optional[Dict[str, Any]] = None

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int) -> Iterator[R]:
    """
    グリッド点に純粋関数を写す (結果は入力順)

    threads > 1 ならスレッドプールを使う。途中の点で例外が出た場合、
    それより前の結果はすでに yield されている。
    """
    if threads <= 1 or len(items) <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items)


# ---------------------------------------------------------------------------
# サブコマンド
# ---------------------------------------------------------------------------


def run_dispersion(config: RunConfig, out: RunArtifacts) -> None:
    """p グリッド上の ω±(p) と Vieta 恒等式の残差"""
    ms = config.spectrum()
    mu = config.model.mu
    out.summary["spectrum"] = ms.to_dict()
    if ms.phi == 0.0:
        out.warn(f"no condensate at mu={mu:.6g}, m={config.model.m:.6g}; spectrum is the symmetric one")

    table = out.table(
        "dispersion",
        {"p": "E", "omega_plus": "E", "omega_minus": "E", "vieta_sum_rel": "1", "vieta_product_rel": "1"},
    )
    with out.stage("dispersion"):
        p = np.asarray(config.grids.p)
        p_sq = p * p
        plus_sq, minus_sq = omega_pm_sq_array(ms, mu, p_sq)
        vieta_sum = 2.0 * (p_sq + ms.M_sq + 2.0 * mu * mu)
        vieta_product = (p_sq + ms.M1_sq) * (p_sq + ms.M2_sq)
        sum_rel = np.abs(plus_sq + minus_sq - vieta_sum) / vieta_sum
        with np.errstate(invalid="ignore", divide="ignore"):
            product_rel = np.where(
                vieta_product > 0, np.abs(plus_sq * minus_sq - vieta_product) / vieta_product, 0.0
            )
        for i in range(p.size):
            table.add({
                "p": float(p[i]),
                "omega_plus": math.sqrt(float(plus_sq[i])),
                "omega_minus": math.sqrt(max(float(minus_sq[i]), 0.0)),
                "vieta_sum_rel": float(sum_rel[i]),
                "vieta_product_rel": float(product_rel[i]),
            })
        worst = float(max(np.max(sum_rel), np.max(product_rel)))
        out.summary["vieta_max_rel"] = worst
        if worst > VIETA_RTOL:
            raise InvariantViolation(
                f"Vieta identities violated: max relative residual {worst:.3g} > {VIETA_RTOL}", residual=worst
            )

    if ms.phi > 0 and ms.is_gapless:
        with out.stage("sound_speed"):
            c_s = sound_speed(ms, mu)
            out.summary["sound_speed"] = c_s
            if config.model.m_v == 0.0:
                out.summary["sound_speed_closed_form"] = sound_speed_closed_form(config.model)
    out.flush_table(table)


def run_thermal_scan(config: RunConfig, out: RunArtifacts) -> None:
    """β グリッド上の熱的観測量と凸性の上限"""
    ms = config.spectrum()
    mu, lam = config.model.mu, config.model.lam
    quad = config.quadrature
    table = out.table(
        "thermal_scan",
        {
            "beta": "1/E",
            "T": "E",
            "psi_sq": "E^2",
            "j_tilde": "E^3",
            "rho_cr": "E^3",
            "m_b1_sq": "E^2",
            "m_b2_sq": "E^2",
            "condensate_charge": "E^3",
            "total_charge": "E^3",
            "mass_shift_1": "E^2",
            "mass_shift_2": "E^2",
            "m_v_sq_max": "E^2",
            "convex": "bool",
        },
    )
    m_v_sq = config.model.m_v**2

    def point(beta: float) -> Dict[str, Any]:
        obs = thermal_expectations(ms, mu, beta, quad)
        shift_1, shift_2 = thermal_mass_shifts(lam, ms, mu, beta, quad)
        bound = max_virtual_mass_sq(lam, ms, mu, beta, quad)
        return {
            "beta": beta,
            "T": 1.0 / beta,
            **obs.to_dict(),
            "mass_shift_1": shift_1,
            "mass_shift_2": shift_2,
            "m_v_sq_max": bound,
            "convex": m_v_sq < bound,
        }

    with out.stage("thermal_scan"):
        for row in ordered_map(point, config.grids.beta, config.threads):
            table.add(row)

    rho = [row["rho_cr"] for row in table.rows]
    decreasing = all(b < a for a, b in zip(rho[:-1], rho[1:]))
    out.summary["rho_cr_strictly_decreasing"] = decreasing
    if not decreasing:
        out.warn("rho_cr is not strictly decreasing in beta on this grid")
    if m_v_sq > 0 and not all(row["convex"] for row in table.rows):
        out.warn(f"m_v^2={m_v_sq:.6g} breaks convexity on part of the beta grid")
    out.flush_table(table)


def run_tc_solve(config: RunConfig, out: RunArtifacts) -> None:
    """
    目標電荷密度に対する臨界温度

    thermal.rho_target を省略すると model.beta での ρ_cr を目標にし、
    T_cr = 1/β への往復誤差を記録する。
    """
    ms = config.spectrum()
    params = config.model
    quad = config.quadrature
    round_trip = config.thermal.rho_target is None
    with out.stage("target"):
        target = critical_density(ms, params.mu, params.beta, quad) if round_trip else config.thermal.rho_target
    table = out.table(
        "tc_solve",
        {"rho_target": "E^3", "T_cr": "E", "beta_cr": "1/E", "rho_check": "E^3", "residual_rel": "1"},
    )
    with out.stage("solve"):
        t_cr = critical_temperature(params, target, quad)
        check = critical_density(ms, params.mu, 1.0 / t_cr, quad)
    table.add({
        "rho_target": target,
        "T_cr": t_cr,
        "beta_cr": 1.0 / t_cr,
        "rho_check": check,
        "residual_rel": abs(check - target) / target,
    })
    out.summary["T_cr"] = t_cr
    if round_trip:
        error = abs(t_cr * params.beta - 1.0)
        out.summary["round_trip_rel_error"] = error
        logger.info("往復検査: T_cr=%.12g, 1/beta=%.12g (相対誤差 %.3g)", t_cr, 1.0 / params.beta, error)
    out.flush_table(table)


def _spectral_window(config: RunConfig, eps: float, M1: float):
    settings = config.goldstone
    if settings.window == "bspline":
        return bspline_window(settings.window_width or eps)
    width = settings.window_width or 1.0 / M1
    return gaussian_window(width) if settings.window == "gaussian" else notch_window(width)


def run_goldstone(config: RunConfig, out: RunArtifacts) -> None:
    """正則化電荷との交換子、平滑化したスペクトル検査、カレントの発散"""
    ms = config.spectrum()
    mu, lam, phi = config.model.mu, config.model.lam, ms.phi
    settings = config.goldstone
    eps = settings.eps or default_eps(ms)
    R_grid = config.grids.R_grid(ms)
    out.summary["eps"] = eps
    out.summary["phi"] = phi

    # 同時刻の正準交換関係: Δ̂(0, p) = 0、∂_tΔ̂(0, p) = −I
    time_kernel = out.table(
        "goldstone_time_kernel",
        {"p": "E", "initial": "1/E", "velocity_residual": "1"},
        step=TIME_KERNEL_STEP,
    )
    identity = Mat2C.identity()
    with out.stage("time_kernel"):
        for p in config.grids.p:
            forward = commutator_time_kernel(TIME_KERNEL_STEP, p, ms, mu)
            backward = commutator_time_kernel(-TIME_KERNEL_STEP, p, ms, mu)
            velocity = (forward - backward) * (0.5 / TIME_KERNEL_STEP)
            time_kernel.add({
                "p": p,
                "initial": commutator_time_kernel(0.0, p, ms, mu).max_abs(),
                "velocity_residual": (velocity + identity).max_abs(),
            })
    kernel_residual = max(max(row["initial"], row["velocity_residual"]) for row in time_kernel.rows)
    out.summary["time_kernel_max_residual"] = kernel_residual
    if kernel_residual > TIME_KERNEL_ATOL:
        out.warn(f"commutator kernel misses the canonical initial data by {kernel_residual:.3g}")
    out.flush_table(time_kernel)

    commutator = out.table(
        "goldstone_commutator",
        {
            "R": "1/E",
            "value_n1": "E",
            "value_n2": "E",
            "target_n2": "E",
            "deviation": "E",
            "error": "E",
            "pre_asymptotic": "bool",
        },
        profile=settings.profile,
        f_support=eps,
    )
    with out.stage("charge_commutator"):
        results = charge_commutator_scan(
            R_grid, eps, ms, mu, phi, config.quadrature, settings.profile, config.threads
        )
        for result in results:
            deviation = float(np.max(np.abs(result.value - np.array([0.0, phi]))))
            commutator.add({
                "R": result.R,
                "value_n1": float(result.value[0]),
                "value_n2": float(result.value[1]),
                "target_n2": phi,
                "deviation": deviation,
                "error": result.error,
                "pre_asymptotic": result.pre_asymptotic,
            })
    beyond = [row for row in commutator.rows if not row["pre_asymptotic"]]
    if beyond:
        stability = max(row["value_n2"] for row in beyond) - min(row["value_n2"] for row in beyond)
        out.summary["R_stability"] = stability
        if stability > R_STABILITY_ATOL * max(phi, 1.0):
            out.warn(f"charge commutator varies by {stability:.3g} beyond the causal threshold")
        worst = max(row["deviation"] for row in beyond)
        if worst > settings.tolerance * max(phi, 1.0):
            out.flush_table(commutator, status=STATUS_PARTIAL)
            raise InvariantViolation(
                f"charge commutator deviates from (0, phi) by {worst:.3g} beyond R >= eps", deviation=worst
            )
    else:
        out.warn("every R in the grid lies below the causal threshold eps")
    out.flush_table(commutator)

    if phi > 0:
        window = _spectral_window(config, eps, ms.M1)
        spectral = out.table(
            "goldstone_spectral",
            {"R": "1/E", "value_n1": "E", "value_n2": "E", "error_n2": "E", "observed_rate": "1"},
            window=window.kind,
            window_width=window.width,
        )
        with out.stage("spectral_check"):
            report = goldstone_spectral_check(
                window, R_grid, ms, mu, phi, config.quadrature, settings.tolerance, config.threads
            )
            spectral.extend(report.rows())
        out.summary["spectral_check"] = report.to_dict()
        if not report.converged:
            out.warn("smeared spectral check did not converge to (0, phi f(0))")
        out.flush_table(spectral)
    else:
        out.warn("phi = 0: the smeared spectral check needs a condensate and was skipped")

    divergence = out.table(
        "goldstone_divergence",
        {"order": "-", "deviation": "1", "max_divergence": "E^4", "n_points": "1"},
    )
    with out.stage("divergence"):
        field_config = random_configuration(ms, mu, np.random.default_rng(config.seed))
        for order in ("linearized", "full"):
            residual = divergence_residual(field_config, ms, mu, lam, phi, order=order, seed=config.seed)
            divergence.add({
                "order": order,
                "deviation": residual.deviation,
                "max_divergence": residual.max_divergence,
                "n_points": int(residual.divergence.size),
            })
    out.flush_table(divergence)
    worst = max(row["deviation"] for row in divergence.rows)
    if worst > DIVERGENCE_RTOL:
        raise InvariantViolation(
            f"current divergence deviates from its closed form: {worst:.3g}", deviation=worst
        )


def run_graphs(config: RunConfig, out: RunArtifacts) -> None:
    """連結グラフの列挙とガウス玩具模型でのオラクル照合"""
    s = config.graphs
    with out.stage("enumerate"):
        graphs = enumerate_connected(s.n_vertices, s.degree_bound, s.max_multiplicity, limit=s.count_limit)
    enumeration = out.table(
        "graphs",
        {"index": "1", "n_edges": "1", "symmetry_factor": "1", "edges": "-", "degrees": "-"},
        n_vertices=s.n_vertices,
        degree_bound=s.degree_bound,
        max_multiplicity=s.max_multiplicity,
    )
    for index, graph in enumerate(graphs):
        enumeration.add({
            "index": index,
            "n_edges": len(graph.edges),
            "symmetry_factor": symmetry_factor(graph),
            "edges": " ".join(f"{a}-{b}" for a, b in graph.edges),
            "degrees": " ".join(str(d) for d in graph.degrees()),
        })
    out.summary["graph_count"] = len(graphs)
    out.summary["predicted_upper_bound"] = predicted_count(s.n_vertices, s.degree_bound, s.max_multiplicity)
    out.flush_table(enumeration)
    out.write_json("graphs.json", graph_records(graphs))
    logger.info("連結グラフ: %d個 (n_vertices=%d)", len(graphs), s.n_vertices)

    oracle = out.table(
        "graph_oracle",
        {"toy": "1", "k": "1", "n_observables": "1", "total_degree": "1", "graphsum": "1", "oracle": "1",
         "abs_error": "1"},
        seed=config.seed,
    )
    rng = np.random.default_rng(config.seed)
    toys = [random_toy(rng, s.k_max, s.degree_max) for _ in range(s.n_toys)]

    def check(toy) -> Dict[str, Any]:
        value = complex(graphsum_truncated(toy))
        reference = complex(cumulant_oracle(toy))
        return {
            "k": toy.k,
            "n_observables": len(toy.observables),
            "total_degree": sum(toy.degrees),
            "graphsum": value.real,
            "oracle": reference.real,
            "abs_error": abs(value - reference),
        }

    failures = 0
    with out.stage("oracle"):
        for index, row in enumerate(ordered_map(check, toys, config.threads)):
            oracle.add({"toy": index, **row})
            if row["abs_error"] > ORACLE_RTOL * max(abs(row["oracle"]), 1.0):
                failures += 1
    out.summary["oracle_failures"] = failures
    out.flush_table(oracle)
    if failures:
        raise InvariantViolation(f"graph sum disagrees with the cumulant oracle on {failures} toys", failures=failures)


def run_hadamard_check(config: RunConfig, out: RunArtifacts) -> None:
    """Hadamard 係数の表、輸送方程式の残差の収束、ΔΦ²₍₁₎ の走査"""
    h = config.hadamard
    ms = config.spectrum()
    mu = config.model.mu

    coefficients = out.table(
        "hadamard_coefficients",
        {"x0": "1/E", "U_11": "1", "U_21": "1", "V0_11": "E^2", "V0_12": "E^2", "V0_21": "E^2", "V0_22": "E^2"},
    )
    for x0 in (0.0, 0.25 * h.x0, 0.5 * h.x0, h.x0, 2.0 * h.x0):
        u = u_coeff(x0, mu).to_matrix().real
        v0 = v0_coeff(x0, ms, mu).to_matrix().real
        coefficients.add({
            "x0": x0,
            "U_11": float(u[0, 0]),
            "U_21": float(u[1, 0]),
            "V0_11": float(v0[0, 0]),
            "V0_12": float(v0[0, 1]),
            "V0_21": float(v0[1, 0]),
            "V0_22": float(v0[1, 1]),
        })
    out.flush_table(coefficients)

    bundle = hadamard_coefficients(ms, mu, h.xi)
    channels = out.table("hadamard_v1", {"channel": "-", "real": "E^4", "imag": "E^4"})
    for name, value in zip(CHANNELS, bundle.V1_coinciding.coefficients()):
        channels.add({"channel": name, "real": complex(value).real, "imag": complex(value).imag})
    out.flush_table(channels)

    length_scale = out.table("hadamard_length_scale", {"channel": "-", "real": "E^2", "imag": "E^2"}, xi=h.xi)
    for name, value in zip(CHANNELS, bundle.length_scale_term().coefficients()):
        length_scale.add({"channel": name, "real": complex(value).real, "imag": complex(value).imag})
    out.flush_table(length_scale)

    ladder = out.table("hadamard_transport", {"h": "1/E", "residual": "1", "observed_order": "1"}, x0=h.x0)
    with out.stage("transport"):
        ladder.extend(transport_ladder(h.x0, ms, mu, h.h_ladder))
    orders = [row["observed_order"] for row in ladder.rows if math.isfinite(row["observed_order"])]
    if orders:
        out.summary["min_observed_order"] = min(orders)
        if min(orders) < MIN_TRANSPORT_ORDER:
            out.warn(f"transport residual converges with order {min(orders):.3g} < {MIN_TRANSPORT_ORDER}")
    out.flush_table(ladder)

    phi2 = out.table(
        "hadamard_delta_phi2",
        {"p_sq": "E^2", "re": "E^2", "im": "E^2", "re_over_abs_p_sq": "1"},
        m=h.m,
        delta_m_sq=h.delta_m_sq,
        a=h.a,
    )

    def point(p_sq: float) -> Dict[str, Any]:
        value = delta_phi2_first_order(p_sq, h.m, h.delta_m_sq, h.a, config.quadrature)
        ratio = value.real / abs(p_sq) if p_sq != 0.0 else float("nan")
        return {"p_sq": p_sq, "re": value.real, "im": value.imag, "re_over_abs_p_sq": ratio}

    with out.stage("delta_phi2"):
        for row in ordered_map(point, h.p_sq_grid, config.threads):
            phi2.add(row)
    out.flush_table(phi2)

    agreement = out.table("hadamard_agreement", {"sigma": "1/E^2", "remainder": "E^2"}, m=h.m)
    for sigma in AGREEMENT_SIGMAS:
        agreement.add({"sigma": sigma, "remainder": agreement_remainder(h.m**2, h.delta_m_sq, sigma)})
    out.flush_table(agreement)


def run_decay_fit(config: RunConfig, out: RunArtifacts) -> None:
    """ギャップのある虚時間核の空間減衰率"""
    ms = config.spectrum()
    mu, beta = config.model.mu, config.model.beta
    settings = config.thermal
    if not ms.M2_sq > 0:
        raise ParameterError("decay-fit needs a gapped spectrum; set model.m_v > 0", field="model.m_v")
    fits = out.table(
        "decay_fit",
        {"u": "1/E", "rate": "E", "intercept": "1", "r_squared": "1", "lower_bound": "E", "ratio": "1"},
        method=settings.kernel_method,
        vacuum_subtracted=settings.vacuum_subtracted,
    )
    profile = out.table(
        "decay_profile",
        {"r": "1/E", "u": "1/E", "max_abs_G": "E^2"},
        vacuum_subtracted=settings.vacuum_subtracted,
    )

    def fit(u_fraction: float):
        return cluster_decay_fit(
            ms, mu, beta, u_fraction * beta, config.grids.r, config.quadrature,
            method=settings.kernel_method, min_r_squared=settings.min_r_squared,
            vacuum_subtracted=settings.vacuum_subtracted,
        )

    with out.stage("decay_fit"):
        for result in ordered_map(fit, settings.u_values, config.threads):
            row = result.to_dict()
            fits.add({k: row[k] for k in fits.columns})
            for r, magnitude in zip(result.r_grid, result.magnitudes):
                profile.add({"r": r, "u": result.u, "max_abs_G": magnitude})
    out.summary["min_rate"] = min(row["rate"] for row in fits.rows)
    out.summary["M2"] = ms.M2
    out.flush_table(fits)
    out.flush_table(profile)


COMMANDS: Dict[str, Callable[[RunConfig, RunArtifacts], None]] = {
    "dispersion": run_dispersion,
    "thermal-scan": run_thermal_scan,
    "tc-solve": run_tc_solve,
    "goldstone": run_goldstone,
    "graphs": run_graphs,
    "hadamard-check": run_hadamard_check,
    "decay-fit": run_decay_fit,
}


def run(command: str, config: RunConfig) -> RunResult:
    """
    サブコマンドを実行して成果物を書き出す

    Args:
        command: COMMANDS のいずれか
        config: 検証済みの設定

    Returns:
        RunResult (exit_code は 0 成功 / 2 設定 / 3 数値 / 4 不変条件)
    """
    if command not in COMMANDS:
        raise ParameterError(f"unknown command '{command}'; choose one of {sorted(COMMANDS)}", field="command")
    directory = Path(config.output.directory) / command
    artifacts = RunArtifacts(
        directory, command, config.config_hash(), config.seed, plot_scripts=config.output.plot_scripts
    )
    logger.info("コマンド開始: %s (出力先 %s)", command, directory)
    try:
        with artifacts.stage("total"):
            COMMANDS[command](config, artifacts)
    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            logger.exception("予期しないエラー: %s", e)
        else:
            logger.error("%s: %s", type(e).__name__, e)
        artifacts.flush_pending(status=STATUS_PARTIAL)
        manifest = artifacts.write_manifest(config.to_dict(), error=e)
        return RunResult(command, code, directory, manifest, error=error_record(e))
    artifacts.flush_pending(status=STATUS_COMPLETE)
    manifest = artifacts.write_manifest(config.to_dict())
    logger.info("コマンド終了: %s", command)
    return RunResult(command, EXIT_OK, directory, manifest)
