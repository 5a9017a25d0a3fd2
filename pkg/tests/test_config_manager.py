#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Config Manager のテストケース

Usage:
    pytest tests/test_config_manager.py -v
"""

import sys
import tempfile
import unittest
from pathlib import Path

import pytest

# プロジェクトルートをパスに追加
sys.path.insert(0, str(Path(__file__).parent.parent))

from modules.config_manager import (
    ConfigManager,
    GridConfig,
    build_config,
    environment_defaults,
    expand_grid,
    list_templates,
    parse_config,
)
from modules.errors import ConfigError, ParameterError
from modules.model import ModelParams

ROOT = Path(__file__).parent.parent

MINIMAL = """\
m: 1.0
mu: 1.4142135623730951
lambda: 1.0
beta: 1.0
"""


class TestParseConfig:
    """YAML 文書の解析と検証"""

    def test_minimal_document(self):
        """トップレベルの {m, mu, lambda, beta} は model 節と同じ扱い"""
        config = parse_config(MINIMAL)
        assert config.model == ModelParams(m=1.0, mu=1.4142135623730951, lam=1.0, beta=1.0)
        assert config.seed == 0
        assert config.threads == 1
        assert config.grids == GridConfig()
        assert config.goldstone.window == "bspline"

    def test_minimal_and_section_are_equivalent(self):
        nested = "model:\n" + "".join(f"  {line}\n" for line in MINIMAL.splitlines())
        assert parse_config(nested).config_hash() == parse_config(MINIMAL).config_hash()

    def test_negative_beta(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(MINIMAL.replace("beta: 1.0", "beta: -1.0"))
        assert "beta must be positive" in str(excinfo.value)
        assert excinfo.value.field == "model.beta"
        assert excinfo.value.line == 4

    def test_unknown_key_suggestion(self):
        """未知のキーには近いキー名を添える"""
        text = "model:\n  mas: 1.0\n  mu: 1.5\n  lambda: 1.0\n  beta: 1.0\n"
        with pytest.raises(ConfigError) as excinfo:
            parse_config(text)
        assert "did you mean 'm'?" in str(excinfo.value)
        assert excinfo.value.field == "model.mas"
        assert excinfo.value.line == 2

    def test_unknown_section(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(MINIMAL + "quadratur:\n  rtol: 1.0e-8\n")
        assert "did you mean 'quadrature'?" in str(excinfo.value)

    def test_missing_parameter(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("m: 1.0\nmu: 1.5\nbeta: 1.0\n")
        assert "'lambda' is required" in str(excinfo.value)

    def test_yaml_syntax_error_has_location(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("m: 1.0\nmu: [1.5, 2.0\nbeta: 1.0\n")
        assert "YAML解析エラー" in str(excinfo.value)
        assert excinfo.value.line is not None
        assert excinfo.value.line >= 2

    def test_empty_document(self):
        with pytest.raises(ConfigError):
            parse_config("")

    def test_duplicate_model(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "model:\n  m: 2.0\n")

    def test_config_error_is_parameter_error(self):
        """設定エラーは終了コード 2"""
        with pytest.raises(ParameterError) as excinfo:
            parse_config(MINIMAL + "threads: 0\n")
        assert excinfo.value.exit_code == 2

    def test_defaults_are_overridden_by_document(self):
        config = parse_config(MINIMAL + "threads: 2\n", defaults={"threads": 8, "output": {"directory": "runs"}})
        assert config.threads == 2
        assert config.output.directory == "runs"

    def test_hash_ignores_output_and_threads(self):
        a = parse_config(MINIMAL)
        b = a.with_overrides(directory="elsewhere", threads=4)
        c = a.with_overrides(seed=7)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()


class TestExpandGrid:
    """グリッド指定の展開"""

    def test_linear(self):
        assert expand_grid("p", {"start": 0.0, "stop": 1.0, "num": 3}) == (0.0, 0.5, 1.0)

    def test_log(self):
        values = expand_grid("beta", {"start": 1.0, "stop": 100.0, "num": 3, "spacing": "log"})
        assert values == pytest.approx((1.0, 10.0, 100.0), rel=1e-14)

    def test_list_and_scalar(self):
        assert expand_grid("r", [1, 2, 3]) == (1.0, 2.0, 3.0)
        assert expand_grid("R", 2.5) == (2.5,)

    @pytest.mark.parametrize(
        "spec",
        [
            {"start": 0.0, "stop": 1.0},
            {"start": 0.0, "stop": 1.0, "num": 0},
            {"start": 0.0, "stop": 1.0, "num": 3, "spacing": "cubic"},
            {"start": 0.0, "stop": 1.0, "num": 3, "spacing": "log"},
            {"start": 0.0, "stop": 1.0, "nmu": 3},
            "0..1",
        ],
    )
    def test_invalid(self, spec):
        with pytest.raises(ConfigError):
            expand_grid("p", spec)

    def test_grid_must_increase(self):
        with pytest.raises(ConfigError):
            build_config({"m": 1.0, "mu": 1.5, "lambda": 1.0, "beta": 1.0, "grids": {"r": [3.0, 2.0, 1.0]}})

    def test_default_radius_grid(self):
        config = parse_config(MINIMAL)
        R = config.grids.R_grid(config.spectrum())
        assert R == pytest.approx(tuple(k / 2.0**0.5 for k in (10.0, 20.0, 40.0, 80.0)), rel=1e-14)


class TestConfigManager(unittest.TestCase):
    """ConfigManager クラスのテスト"""

    def setUp(self):
        """テスト用の一時ディレクトリを作成"""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.config_path = Path(self.temp_dir.name) / "bec_config.yaml"
        self.config_path.write_text(MINIMAL, encoding="utf-8")

    def tearDown(self):
        """一時ディレクトリを削除"""
        self.temp_dir.cleanup()

    def test_auto_load(self):
        """存在するファイルは初期化時に読み込まれる"""
        manager = ConfigManager(str(self.config_path))
        self.assertTrue(manager.is_loaded)
        self.assertEqual(manager.get_config().model.lam, 1.0)
        self.assertTrue(manager.validate_config())

    def test_missing_file(self):
        manager = ConfigManager(str(Path(self.temp_dir.name) / "none.yaml"))
        self.assertFalse(manager.is_loaded)
        with self.assertRaises(RuntimeError):
            manager.get_config()
        with self.assertRaises(ConfigError):
            manager.load_config()

    def test_update_config(self):
        """入れ子の更新は再帰的にマージされる"""
        manager = ConfigManager(str(self.config_path))
        config = manager.update_config({"model": {"m_v": 0.5}, "seed": 3})
        self.assertEqual(config.model.m_v, 0.5)
        self.assertEqual(config.model.m, 1.0)
        self.assertEqual(config.seed, 3)

    def test_update_rejects_invalid(self):
        manager = ConfigManager(str(self.config_path))
        with self.assertRaises(ConfigError):
            manager.update_config({"model": {"lambda": -1.0}})
        # 失敗した更新は現在の設定を変えない
        self.assertEqual(manager.get_config().model.lam, 1.0)

    def test_save_and_reload(self):
        manager = ConfigManager(str(self.config_path))
        manager.update_config({"graphs": {"n_vertices": 4}})
        saved = manager.save_config(str(Path(self.temp_dir.name) / "out" / "saved.yaml"))
        reloaded = ConfigManager(str(saved)).get_config()
        self.assertEqual(reloaded.config_hash(), manager.get_config().config_hash())
        self.assertEqual(reloaded.graphs.n_vertices, 4)

    def test_bundled_files_are_valid(self):
        """同梱の設定ファイルとテンプレートはすべて読み込める"""
        manager = ConfigManager(str(ROOT / "data" / "bec_config.yaml"))
        self.assertTrue(manager.validate_config())
        templates = list_templates(str(ROOT / "data" / "templates"))
        self.assertIn("on_shell", templates)
        for name in templates:
            ConfigManager(str(ROOT / "data" / "templates" / f"{name}.yaml")).get_config()


class TestEnvironmentDefaults:
    """環境変数からの既定値"""

    def test_values(self, monkeypatch):
        monkeypatch.setenv("BEC_OUTPUT_DIR", "/tmp/bec")
        monkeypatch.setenv("BEC_THREADS", "3")
        assert environment_defaults() == {"output": {"directory": "/tmp/bec"}, "threads": 3}

    def test_invalid_threads(self, monkeypatch):
        monkeypatch.delenv("BEC_OUTPUT_DIR", raising=False)
        monkeypatch.setenv("BEC_THREADS", "many")
        with pytest.raises(ConfigError):
            environment_defaults()


if __name__ == "__main__":
    unittest.main()
