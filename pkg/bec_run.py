#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
BEC 数値ツールキットのコマンドラインドライバ

Usage:
    python bec_run.py dispersion --config data/bec_config.yaml
    python bec_run.py thermal-scan --config data/templates/high_t.yaml --out output --threads 4
    python bec_run.py graphs --seed 7

終了コード:
    0 成功 / 1 予期しないエラー / 2 設定エラー / 3 数値的な非収束 / 4 不変条件の違反
"""
import argparse
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from modules.config_manager import ConfigManager, environment_defaults
from modules.errors import BECError, exit_code_for
from modules.runner import COMMANDS, run

load_dotenv()

DEFAULT_CONFIG = "data/bec_config.yaml"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"

logger = logging.getLogger("bec_run")


def setup_logging(level: str, log_dir: Optional[Path] = None) -> None:
    """
    ログ設定 (標準エラー + 出力先の logs/bec_run.log へのローテーション)

    Args:
        level: ログレベル名
        log_dir: ログファイルのディレクトリ (None ならファイルに書かない)
    """
    root = logging.getLogger()
    root.setLevel(level.upper())
    for handler in list(root.handlers):
        root.removeHandler(handler)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT)
    stream = logging.StreamHandler()
    stream.setFormatter(formatter)
    root.addHandler(stream)
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        handler = RotatingFileHandler(
            log_dir / "bec_run.log", maxBytes=1_000_000, backupCount=5, encoding="utf-8"
        )
        handler.setFormatter(formatter)
        root.addHandler(handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="有限温度の相対論的ボース・アインシュタイン凝縮の数値計算"
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="実行するサブコマンド")
    parser.add_argument(
        "--config", type=str, default=DEFAULT_CONFIG, help=f"設定ファイルのパス (デフォルト: {DEFAULT_CONFIG})"
    )
    parser.add_argument("--out", type=str, default=None, help="出力ディレクトリ (設定より優先)")
    parser.add_argument("--seed", type=int, default=None, help="乱数シード (符号なし64ビット)")
    parser.add_argument("--threads", type=int, default=None, help="並列スレッド数")
    parser.add_argument(
        "--log-level",
        type=str,
        default=os.getenv("BEC_LOG_LEVEL", "INFO"),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="ログレベル (デフォルト: 環境変数 BEC_LOG_LEVEL または INFO)",
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    メイン処理: 設定を読み込み、サブコマンドを実行する

    Returns:
        int: 終了コード
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        manager = ConfigManager(args.config, defaults=environment_defaults())
        base = manager.get_config() if manager.is_loaded else manager.load_config()
        config = base.with_overrides(directory=args.out, seed=args.seed, threads=args.threads)
    except BECError as e:
        logger.error("設定エラー: %s", e)
        print(json.dumps({"error": e.to_record()}, ensure_ascii=False), file=sys.stderr)
        return exit_code_for(e)

    out_dir = Path(config.output.directory)
    setup_logging(args.log_level, out_dir / "logs")
    logger.info("設定: %s (hash %s, seed %d, threads %d)", args.config, config.config_hash()[:12],
                config.seed, config.threads)

    result = run(args.command, config)
    if not result.ok:
        print(json.dumps({"error": result.error, "manifest": str(result.manifest)}, ensure_ascii=False),
              file=sys.stderr)
        return result.exit_code
    logger.info("✅ 完了: %s -> %s", args.command, result.directory)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
