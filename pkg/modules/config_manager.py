# -*- coding: utf-8 -*-
"""
Config Manager Module

実行設定 (YAML) を読み込み、既定値を補い、検証済みの RunConfig を組み立てるモジュール。

厳格モード: 未知のキーは近いキー名を添えて拒否する。
最小形式 {m, mu, lambda, beta} をトップレベルに書いた文書は model 節と同じ扱い。
"""

import difflib
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .errors import ConfigError, ParameterError
from .model import MassSpectrum, ModelParams, background_spectrum
from .quadrature import QuadratureConfig
from .thermal import KERNEL_METHODS

logger = logging.getLogger(__name__)

MODEL_KEYS = ("m", "mu", "lambda", "beta", "m_v")
SECTION_KEYS: Dict[str, Tuple[str, ...]] = {
    "model": MODEL_KEYS,
    "quadrature": ("rtol", "atol", "p_cutoff", "max_subdivisions", "scheme", "laguerre_nodes"),
    "grids": ("p", "beta", "R", "r"),
    "goldstone": ("eps", "window", "window_width", "profile", "tolerance"),
    "graphs": (
        "n_vertices", "degree_bound", "max_multiplicity", "n_toys", "k_max", "degree_max", "count_limit",
    ),
    "hadamard": ("x0", "h_ladder", "p_sq_grid", "m", "delta_m_sq", "a", "xi"),
    "thermal": ("rho_target", "u_values", "vacuum_subtracted", "kernel_method", "min_r_squared"),
    "output": ("directory", "plot_scripts"),
}
SCALAR_KEYS = ("seed", "threads")
GRID_SPEC_KEYS = ("start", "stop", "num", "spacing")

DEFAULT_OUTPUT_DIR = "output"


# ---------------------------------------------------------------------------
# 設定のデータクラス
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridConfig:
    """
    走査グリッド

    R は None のとき質量スペクトルから (10, 20, 40, 80)/M₁ を使う。
    """

    p: Tuple[float, ...] = tuple(np.linspace(0.0, 3.0, 31).tolist())
    beta: Tuple[float, ...] = tuple(np.geomspace(0.5, 5.0, 50).tolist())
    R: Optional[Tuple[float, ...]] = None
    r: Tuple[float, ...] = tuple(np.linspace(10.0, 30.0, 11).tolist())

    def __post_init__(self):
        """初期化後のバリデーション"""
        _check_grid("p", self.p, minimum=0.0, inclusive=True)
        _check_grid("beta", self.beta, minimum=0.0)
        if self.R is not None:
            _check_grid("R", self.R, minimum=0.0)
        _check_grid("r", self.r, minimum=0.0)

    def R_grid(self, ms: MassSpectrum) -> Tuple[float, ...]:
        if self.R is not None:
            return self.R
        if not ms.M1 > 0:
            raise ParameterError("grids.R is required when M1 = 0", field="grids.R")
        return tuple(k / ms.M1 for k in (10.0, 20.0, 40.0, 80.0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": list(self.p),
            "beta": list(self.beta),
            "R": None if self.R is None else list(self.R),
            "r": list(self.r),
        }


def _check_grid(name: str, values: Tuple[float, ...], minimum: float, inclusive: bool = False) -> None:
    if not values:
        raise ParameterError(f"grid '{name}' must be nonempty", field=f"grids.{name}")
    if any(not math.isfinite(v) for v in values):
        raise ParameterError(f"grid '{name}' must be finite", field=f"grids.{name}")
    if any(b <= a for a, b in zip(values[:-1], values[1:])):
        raise ParameterError(f"grid '{name}' must be strictly increasing", field=f"grids.{name}")
    low = values[0]
    if low < minimum or (low == minimum and not inclusive):
        relation = ">=" if inclusive else ">"
        raise ParameterError(f"grid '{name}' values must be {relation} {minimum}", field=f"grids.{name}")


@dataclass(frozen=True)
class GoldstoneSettings:
    eps: Optional[float] = None
    window: str = "bspline"
    window_width: Optional[float] = None
    profile: str = "smoothstep"
    tolerance: float = 1e-3

    def __post_init__(self):
        """初期化後のバリデーション"""
        if self.eps is not None and not self.eps > 0:
            raise ParameterError(f"eps must be positive: {self.eps}", field="goldstone.eps")
        if self.window not in ("bspline", "gaussian", "notch"):
            raise ParameterError(f"unknown window: {self.window}", field="goldstone.window")
        if self.window_width is not None and not self.window_width > 0:
            raise ParameterError(
                f"window_width must be positive: {self.window_width}", field="goldstone.window_width"
            )
        if self.profile not in ("smoothstep", "linear", "sharp"):
            raise ParameterError(f"unknown profile: {self.profile}", field="goldstone.profile")
        if not self.tolerance > 0:
            raise ParameterError(f"tolerance must be positive: {self.tolerance}", field="goldstone.tolerance")


@dataclass(frozen=True)
class GraphSettings:
    n_vertices: int = 3
    degree_bound: int = 2
    max_multiplicity: Optional[int] = 1
    n_toys: int = 200
    k_max: int = 3
    degree_max: int = 4
    count_limit: int = 100_000

    def __post_init__(self):
        """初期化後のバリデーション"""
        for name in ("n_vertices", "degree_bound", "n_toys", "k_max", "degree_max", "count_limit"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1: {getattr(self, name)}", field=f"graphs.{name}")
        if self.max_multiplicity is not None and self.max_multiplicity < 1:
            raise ParameterError(
                f"max_multiplicity must be >= 1: {self.max_multiplicity}", field="graphs.max_multiplicity"
            )


@dataclass(frozen=True)
class HadamardSettings:
    x0: float = 0.7
    h_ladder: Tuple[float, ...] = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
    p_sq_grid: Tuple[float, ...] = (-0.4, -0.2, -0.1, -0.05, 0.0, 0.05, 0.1)
    m: float = 0.5
    delta_m_sq: float = 0.1
    a: float = 0.0
    xi: float = 1.0

    def __post_init__(self):
        """初期化後のバリデーション"""
        if not self.h_ladder or any(not h > 0 for h in self.h_ladder):
            raise ParameterError("h_ladder must contain positive step sizes", field="hadamard.h_ladder")
        if any(b >= a for a, b in zip(self.h_ladder[:-1], self.h_ladder[1:])):
            raise ParameterError("h_ladder must be strictly decreasing", field="hadamard.h_ladder")
        if any(b <= a for a, b in zip(self.p_sq_grid[:-1], self.p_sq_grid[1:])):
            raise ParameterError("p_sq_grid must be strictly increasing", field="hadamard.p_sq_grid")
        if self.m < 0:
            raise ParameterError(f"m must be non-negative: {self.m}", field="hadamard.m")
        if self.a < 0:
            raise ParameterError(f"a must be non-negative: {self.a}", field="hadamard.a")
        if not self.xi > 0:
            raise ParameterError(f"xi must be positive: {self.xi}", field="hadamard.xi")


@dataclass(frozen=True)
class ThermalSettings:
    """
    rho_target が None のとき tc-solve は model.beta での ρ_cr を目標にする。
    u_values は β を単位とした虚時間 (0 < u/β < 1)。
    """

    rho_target: Optional[float] = None
    u_values: Tuple[float, ...] = (0.25, 0.5)
    vacuum_subtracted: bool = False
    kernel_method: str = "matsubara"
    min_r_squared: float = 0.98

    def __post_init__(self):
        """初期化後のバリデーション"""
        if self.rho_target is not None and not self.rho_target > 0:
            raise ParameterError(f"rho_target must be positive: {self.rho_target}", field="thermal.rho_target")
        if not self.u_values or any(not 0.0 < u < 1.0 for u in self.u_values):
            raise ParameterError("u_values must lie strictly between 0 and 1", field="thermal.u_values")
        if self.kernel_method not in KERNEL_METHODS:
            raise ParameterError(
                f"kernel_method must be one of {KERNEL_METHODS}: {self.kernel_method}",
                field="thermal.kernel_method",
            )
        if self.vacuum_subtracted and self.kernel_method == "matsubara":
            raise ParameterError(
                "vacuum_subtracted kernels need kernel_method 'shell' or 'auto'",
                field="thermal.vacuum_subtracted",
            )
        if not 0.0 < self.min_r_squared <= 1.0:
            raise ParameterError(
                f"min_r_squared must be in (0, 1]: {self.min_r_squared}", field="thermal.min_r_squared"
            )


@dataclass(frozen=True)
class OutputSettings:
    directory: str = DEFAULT_OUTPUT_DIR
    plot_scripts: bool = True


@dataclass(frozen=True)
class RunConfig:
    """検証済みの実行設定"""

    model: ModelParams
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    grids: GridConfig = field(default_factory=GridConfig)
    goldstone: GoldstoneSettings = field(default_factory=GoldstoneSettings)
    graphs: GraphSettings = field(default_factory=GraphSettings)
    hadamard: HadamardSettings = field(default_factory=HadamardSettings)
    thermal: ThermalSettings = field(default_factory=ThermalSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        """初期化後のバリデーション"""
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer: {self.seed}", field="seed")
        if self.threads < 1:
            raise ParameterError(f"threads must be >= 1: {self.threads}", field="threads")

    def spectrum(self) -> MassSpectrum:
        """凝縮条件から導いた背景の質量スペクトル"""
        return background_spectrum(self.model)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "quadrature": self.quadrature.to_dict(),
            "grids": self.grids.to_dict(),
            "goldstone": _plain_dict(self.goldstone),
            "graphs": _plain_dict(self.graphs),
            "hadamard": _plain_dict(self.hadamard),
            "thermal": _plain_dict(self.thermal),
            "output": _plain_dict(self.output),
            "seed": self.seed,
            "threads": self.threads,
        }

    def config_hash(self) -> str:
        """正規化した JSON の sha256 (出力ディレクトリと並列数は含めない)"""
        canonical = self.to_dict()
        canonical.pop("output")
        canonical.pop("threads")
        text = json.dumps(canonical, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(
        self, directory: Optional[str] = None, seed: Optional[int] = None, threads: Optional[int] = None
    ) -> "RunConfig":
        data = self.to_dict()
        if directory is not None:
            data["output"]["directory"] = str(directory)
        if seed is not None:
            data["seed"] = int(seed)
        if threads is not None:
            data["threads"] = int(threads)
        return build_config(data)


def _plain_dict(settings: Any) -> Dict[str, Any]:
    return {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in settings.__dict__.items()
    }


# ---------------------------------------------------------------------------
# 解析
# ---------------------------------------------------------------------------


def _suggest(key: str, allowed: Tuple[str, ...]) -> str:
    matches = difflib.get_close_matches(key, allowed, n=1, cutoff=0.5)
    return f"; did you mean '{matches[0]}'?" if matches else ""


def _reject_unknown(data: Dict[str, Any], allowed: Tuple[str, ...], where: str, lines: Dict[str, int]) -> None:
    for key in data:
        if key not in allowed:
            path = f"{where}.{key}" if where else str(key)
            raise ConfigError(
                f"unknown key '{key}' in {where or 'document'}{_suggest(str(key), allowed)}",
                field=path,
                line=lines.get(path),
            )


def _key_lines(text: str) -> Dict[str, int]:
    """ドット区切りのキー → 1始まりの行番号"""
    lines: Dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node: Any, prefix: str) -> None:
        if not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
            lines[path] = key_node.start_mark.line + 1
            walk(value_node, path)

    walk(root, "")
    return lines


def expand_grid(name: str, spec: Any) -> Tuple[float, ...]:
    """
    グリッド指定をタプルに展開する

    Args:
        name: グリッド名 (エラー用)
        spec: 数値のリスト、または {start, stop, num, spacing: linear|log}

    Returns:
        値のタプル
    """
    if isinstance(spec, dict):
        unknown = [k for k in spec if k not in GRID_SPEC_KEYS]
        if unknown:
            raise ConfigError(
                f"unknown key '{unknown[0]}' in grid '{name}'{_suggest(str(unknown[0]), GRID_SPEC_KEYS)}",
                field=f"grids.{name}.{unknown[0]}",
            )
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as e:
            raise ConfigError(f"grid '{name}' is missing '{e.args[0]}'", field=f"grids.{name}")
        spacing = spec.get("spacing", "linear")
        if num < 1:
            raise ConfigError(f"grid '{name}' needs num >= 1", field=f"grids.{name}.num")
        if spacing == "linear":
            values = np.linspace(start, stop, num)
        elif spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"log grid '{name}' needs positive endpoints", field=f"grids.{name}")
            values = np.geomspace(start, stop, num)
        else:
            raise ConfigError(f"spacing must be 'linear' or 'log': {spacing}", field=f"grids.{name}.spacing")
        return tuple(float(v) for v in values)
    if isinstance(spec, (list, tuple)):
        return tuple(float(v) for v in spec)
    if isinstance(spec, (int, float)):
        return (float(spec),)
    raise ConfigError(f"grid '{name}' must be a list or a {{start, stop, num}} mapping", field=f"grids.{name}")


def _tuple_fields(data: Dict[str, Any], names: Tuple[str, ...]) -> Dict[str, Any]:
    out = dict(data)
    for name in names:
        if name in out and out[name] is not None:
            value = out[name]
            out[name] = tuple(float(v) for v in (value if isinstance(value, (list, tuple)) else [value]))
    return out


def build_config(data: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> RunConfig:
    """
    辞書から RunConfig を組み立てる (既定値の補完と検証)

    Raises:
        ConfigError: 未知のキー、型の誤り、不変条件の違反
    """
    lines = lines or {}
    if not isinstance(data, dict):
        raise ConfigError("the configuration document must be a mapping", line=1)
    data = dict(data)

    minimal = {k: data.pop(k) for k in MODEL_KEYS if k in data}
    if minimal:
        if "model" in data:
            raise ConfigError("model parameters given both at top level and in 'model'", field="model",
                              line=lines.get("model"))
        data["model"] = minimal
        lines = {**lines, **{f"model.{k}": lines[k] for k in minimal if k in lines}}

    _reject_unknown(data, tuple(SECTION_KEYS) + SCALAR_KEYS, "", lines)
    for section, allowed in SECTION_KEYS.items():
        body = data.get(section) or {}
        if not isinstance(body, dict):
            raise ConfigError(f"section '{section}' must be a mapping", field=section, line=lines.get(section))
        _reject_unknown(body, allowed, section, lines)
        data[section] = body

    try:
        model = data["model"]
        missing = [k for k in ("m", "mu", "lambda", "beta") if k not in model]
        if missing:
            raise ConfigError(f"model parameter '{missing[0]}' is required", field=f"model.{missing[0]}",
                              line=lines.get("model"))
        params = ModelParams(
            m=float(model["m"]),
            mu=float(model["mu"]),
            lam=float(model["lambda"]),
            beta=float(model["beta"]),
            m_v=float(model.get("m_v", 0.0)),
        )
        grids = GridConfig(**{name: expand_grid(name, spec) if spec is not None else None
                              for name, spec in data["grids"].items()})
        config = RunConfig(
            model=params,
            quadrature=QuadratureConfig(**data["quadrature"]),
            grids=grids,
            goldstone=GoldstoneSettings(**data["goldstone"]),
            graphs=GraphSettings(**data["graphs"]),
            hadamard=HadamardSettings(**_tuple_fields(data["hadamard"], ("h_ladder", "p_sq_grid"))),
            thermal=ThermalSettings(**_tuple_fields(data["thermal"], ("u_values",))),
            output=OutputSettings(**data["output"]),
            seed=int(data.get("seed", 0)),
            threads=int(data.get("threads", 1)),
        )
    except ConfigError:
        raise
    except ParameterError as e:
        path = _field_path(e.details.get("field"))
        raise ConfigError(e.message, field=path, line=lines.get(path) if path else None) from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value: {e}") from e
    return config


def _field_path(name: Optional[str]) -> Optional[str]:
    if not name:
        return None
    if "." in name:
        return name
    if name in ("beta", "m", "mu", "m_v"):
        return f"model.{name}"
    if name in ("lam", "lambda"):
        return "model.lambda"
    if name in SECTION_KEYS["quadrature"]:
        return f"quadrature.{name}"
    return name


def parse_config(text: str, defaults: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    YAML 文書を検証済みの RunConfig に変換する

    Args:
        text: YAML 文書
        defaults: 文書に書かれていないときに使う値 (環境変数由来など)

    Returns:
        RunConfig (既定値補完済み)

    Raises:
        ConfigError: 構文エラー (行・列付き)、未知のキー、不変条件の違反
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(
            f"YAML解析エラー: {getattr(e, 'problem', None) or e}",
            line=mark.line + 1 if mark is not None else None,
            column=mark.column + 1 if mark is not None else None,
        ) from e
    if data is None:
        raise ConfigError("the configuration document is empty", line=1)
    if defaults and isinstance(data, dict):
        data = _deep_merge(defaults, data)
    return build_config(data, _key_lines(text))


def _deep_merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """実行設定ファイルを管理するクラス"""

    def __init__(
        self,
        config_path: Optional[str] = "data/bec_config.yaml",
        defaults: Optional[Dict[str, Any]] = None,
    ):
        """
        ConfigManagerを初期化する

        Args:
            config_path: 設定ファイルのパス (存在すれば自動ロード)
            defaults: ファイルに書かれていない項目の既定値
        """
        self.config_path = Path(config_path) if config_path else None
        self.defaults = dict(defaults or {})
        self._config: Optional[RunConfig] = None

        if self.config_path is not None and self.config_path.exists():
            self.load_config()

    @property
    def is_loaded(self) -> bool:
        return self._config is not None

    def load_config(self) -> RunConfig:
        """
        設定ファイルを読み込む

        Returns:
            RunConfig

        Raises:
            ConfigError: ファイルがない、または内容が不正な場合
        """
        if self.config_path is None or not self.config_path.exists():
            raise ConfigError(f"設定ファイルが見つかりません: {self.config_path}")
        text = self.config_path.read_text(encoding="utf-8")
        self._config = parse_config(text, self.defaults)
        logger.info("設定を読み込みました: %s (hash %s)", self.config_path, self._config.config_hash()[:12])
        return self._config

    def get_config(self) -> RunConfig:
        """
        現在の設定を取得する

        Raises:
            RuntimeError: 設定が読み込まれていない場合
        """
        if self._config is None:
            raise RuntimeError("設定が読み込まれていません。load_config()を先に実行してください")
        return self._config

    def set_config(self, config: RunConfig) -> None:
        self._config = config

    def update_config(self, updates: Dict[str, Any]) -> RunConfig:
        """
        設定を部分的に更新する (入れ子の辞書は再帰的にマージ)

        Raises:
            RuntimeError: 設定が読み込まれていない場合
            ConfigError: 更新後の設定が不正な場合
        """
        current = self.get_config().to_dict()
        self._config = build_config(_deep_merge(current, updates))
        logger.info("設定を更新しました: %s", ", ".join(sorted(updates)))
        return self._config

    def validate_config(self) -> bool:
        """
        現在の設定が有効かどうかを検証する

        Returns:
            bool: 有効なら True
        """
        try:
            config = self.get_config()
            spectrum = config.spectrum()
            config.grids.R_grid(spectrum)
            logger.info("設定は有効です (phi=%.6g, M2_sq=%.6g)", spectrum.phi, spectrum.M2_sq)
            return True
        except (RuntimeError, ParameterError) as e:
            logger.error("バリデーションエラー: %s", e)
            return False

    def save_config(self, path: Optional[str] = None) -> Path:
        """設定を YAML として保存する"""
        target = Path(path) if path else self.config_path
        if target is None:
            raise ConfigError("保存先が指定されていません")
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8") as f:
            yaml.safe_dump(self.get_config().to_dict(), f, allow_unicode=True, sort_keys=False)
        logger.info("設定を保存しました: %s", target)
        return target


def list_templates(directory: str = "data/templates") -> List[str]:
    """シナリオテンプレートの名前一覧"""
    return sorted(p.stem for p in Path(directory).glob("*.yaml"))


def environment_defaults() -> Dict[str, Any]:
    """
    環境変数 BEC_OUTPUT_DIR, BEC_THREADS から設定の既定値を作る

    設定ファイルに値があればそちらが優先される。
    """
    defaults: Dict[str, Any] = {}
    directory = os.getenv("BEC_OUTPUT_DIR")
    if directory:
        defaults["output"] = {"directory": directory}
    threads = os.getenv("BEC_THREADS")
    if threads:
        try:
            defaults["threads"] = int(threads)
        except ValueError:
            raise ConfigError(f"BEC_THREADS must be an integer: {threads!r}", field="threads")
    return defaults
