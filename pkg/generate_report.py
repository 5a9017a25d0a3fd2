#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
実行結果レポート生成スクリプト

bec_run.py が書き出した出力ディレクトリ (manifest.json と CSV) を読み、
Markdown のサマリーを生成する。

Usage:
    python generate_report.py output/dispersion
    python generate_report.py output/goldstone --output reports/goldstone.md
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from modules.artifacts import MANIFEST_NAME, load_manifest, read_csv

PREVIEW_ROWS = 8


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, (dict, list)):
        return "`" + json.dumps(value, ensure_ascii=False, default=str) + "`"
    return str(value)


def _table_preview(path: Path, limit: int = PREVIEW_ROWS) -> List[str]:
    """CSV の先頭数行を Markdown の表にする"""
    frame = read_csv(path)
    if frame.empty:
        return ["(行なし)"]
    lines = [
        "| " + " | ".join(frame.columns) + " |",
        "|" + "|".join("---" for _ in frame.columns) + "|",
    ]
    for _, row in frame.head(limit).iterrows():
        lines.append("| " + " | ".join(_format_value(v) for v in row.tolist()) + " |")
    if len(frame) > limit:
        lines.append(f"\n... 他 {len(frame) - limit} 行")
    return lines


def generate_markdown_report(run_dir: Path, manifest: Dict[str, Any]) -> str:
    """
    Markdown 形式の実行レポートを生成

    Args:
        run_dir: コマンドの出力ディレクトリ
        manifest: manifest.json の内容

    Returns:
        Markdown 形式のレポート文字列
    """
    status = manifest.get("status", "unknown")
    icon = "✅" if status == "complete" else "❌"
    report_lines = [
        f"# 実行レポート: {manifest.get('command', '?')}",
        f"\n開始: {manifest.get('started_utc', '?')} / 終了: {manifest.get('finished_utc', '?')}\n",
        "---\n",
        "## 📋 概要",
        f"- **状態**: {icon} {status}",
        f"- **設定ハッシュ**: `{manifest.get('config_hash', '')}`",
        f"- **シード**: {manifest.get('seed')}",
    ]
    model = manifest.get("config", {}).get("model", {})
    if model:
        report_lines.append(
            "- **模型**: " + ", ".join(f"{k}={_format_value(v)}" for k, v in model.items())
        )
    timings = manifest.get("timings_sec", {})
    if "total" in timings:
        report_lines.append(f"- **所要時間**: {timings['total']:.3f}秒")
    versions = manifest.get("versions", {})
    if versions:
        report_lines.append("- **バージョン**: " + ", ".join(f"{k} {v}" for k, v in versions.items()))

    summary = manifest.get("summary", {})
    if summary:
        report_lines.extend(["\n### 主要な値\n"])
        for key, value in summary.items():
            report_lines.append(f"- **{key}**: {_format_value(value)}")

    report_lines.extend(["\n---\n", "## 📊 結果"])
    for output in manifest.get("outputs", []):
        if output.get("kind") != "csv":
            continue
        path = run_dir / output["file"]
        mark = "" if output.get("status") == "complete" else f" ⚠️ {output.get('status')}"
        report_lines.append(f"\n### {output['file']} ({output.get('rows', 0)}行){mark}\n")
        if path.exists():
            report_lines.extend(_table_preview(path))
        else:
            report_lines.append("ファイルが見つかりません")

    warnings = manifest.get("warnings", [])
    error = manifest.get("error")
    report_lines.extend(["\n---\n", "## ⚠️ 警告"])
    if error:
        report_lines.append(f"\n**エラー** ({error.get('type')}, 終了コード {error.get('exit_code')}): {error.get('message')}")
    if warnings:
        for message in warnings:
            report_lines.append(f"- {message}")
    elif not error:
        report_lines.append("警告はありません")

    report_lines.extend([
        "\n---\n",
        "\n*このレポートは自動生成されました*\n",
    ])
    return "\n".join(report_lines)


def main(argv: Optional[List[str]] = None) -> int:
    """メイン処理"""
    parser = argparse.ArgumentParser(description="bec_run.py の実行結果から Markdown レポートを生成します")
    parser.add_argument("run_dir", help="コマンドの出力ディレクトリ (manifest.json を含む)")
    parser.add_argument("--output", default=None, help="レポート出力先ファイル (デフォルト: 標準出力)")
    args = parser.parse_args(argv)

    run_dir = Path(args.run_dir)
    if not (run_dir / MANIFEST_NAME).exists():
        print(f"エラー: {MANIFEST_NAME} が見つかりません: {run_dir}", file=sys.stderr)
        print("まず bec_run.py でコマンドを実行してください。", file=sys.stderr)
        return 1

    report = generate_markdown_report(run_dir, load_manifest(run_dir))

    if args.output:
        output_path = Path(args.output)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(report, encoding="utf-8")
        print(f"✓ レポートを生成しました: {output_path}")
    else:
        print(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
