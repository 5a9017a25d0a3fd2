# -*- coding: utf-8 -*-
"""
Artifacts Module

実行結果の出力 (CSV テーブル・manifest.json・プロットスクリプト) を書き出すモジュール。

CSV の形式:
    # command: dispersion
    # config_hash: <sha256>
    # units: p=E, omega_plus=E, ...
    # status: complete
    p,omega_plus,...
    0,1.7320508075688772,...

ファイルはすべて同じディレクトリの一時ファイルに書いてから os.replace で置き換える。
"""

import hashlib
import json
import logging
import os
import platform
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import pandas as pd

from .errors import BECError, EXIT_UNEXPECTED

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"
TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "networkx", "PyYAML", "python-dotenv")

STATUS_COMPLETE = "complete"
STATUS_PARTIAL = "partial"
STATUS_FAILED = "failed"


def atomic_write_text(path: Path, text: str) -> None:
    """一時ファイル + os.replace によるテキストの原子的書き込み"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def render_csv(
    rows: Sequence[Dict[str, Any]],
    columns: Sequence[str],
    metadata_lines: Dict[str, Any],
) -> str:
    """
    メタデータ行付きの CSV テキストを組み立てる

    Args:
        rows: 行の辞書のリスト
        columns: 列の順序
        metadata_lines: '# key: value' として先頭に書く項目

    Returns:
        CSV テキスト (浮動小数点は17有効桁)
    """
    header = "".join(f"# {key}: {value}\n" for key, value in metadata_lines.items())
    frame = pd.DataFrame(list(rows), columns=list(columns))
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return header + body


def read_csv(path: Path) -> pd.DataFrame:
    """'#' 行を読み飛ばして CSV を読む"""
    return pd.read_csv(path, comment="#")


def read_csv_metadata(path: Path) -> Dict[str, str]:
    """CSV 先頭の '# key: value' 行を辞書で返す"""
    result: Dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            result[key.strip()] = value.strip()
    return result


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def package_versions() -> Dict[str, str]:
    """manifest に記録するパッケージのバージョン"""
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


@dataclass
class Table:
    """書き出し待ちの表 (行を順に追加し、最後に flush する)"""

    name: str
    units: Dict[str, str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)
    written: bool = False

    @property
    def columns(self) -> List[str]:
        return list(self.units)

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"

    def add(self, row: Dict[str, Any]) -> None:
        unknown = [k for k in row if k not in self.units]
        if unknown:
            raise KeyError(f"columns without units in table '{self.name}': {unknown}")
        self.rows.append(row)

    def extend(self, rows: Sequence[Dict[str, Any]]) -> None:
        for row in rows:
            self.add(row)


class RunArtifacts:
    """1回のコマンド実行の出力を管理するクラス"""

    def __init__(self, directory: Path, command: str, config_hash: str, seed: int, plot_scripts: bool = True):
        """
        Args:
            directory: 出力ディレクトリ (なければ作成)
            command: サブコマンド名
            config_hash: 設定の sha256
            seed: 乱数シード
            plot_scripts: プロットスクリプトを生成するか
        """
        self.directory = Path(directory)
        self.command = command
        self.config_hash = config_hash
        self.seed = seed
        self.plot_scripts = plot_scripts
        self.tables: Dict[str, Table] = {}
        self.outputs: List[Dict[str, Any]] = []
        self.timings: Dict[str, float] = {}
        self.warnings: List[str] = []
        self.summary: Dict[str, Any] = {}
        self.started = datetime.now(timezone.utc)
        self.directory.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, units: Dict[str, str], **notes: Any) -> Table:
        """名前付きの表を作る (同名なら既存を返す)"""
        if name not in self.tables:
            self.tables[name] = Table(name=name, units=dict(units), notes=dict(notes))
        return self.tables[name]

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """処理段階の所要時間を計測する"""
        start = time.perf_counter()
        logger.info("段階開始: %s", name)
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            logger.info("段階終了: %s (%.3f秒)", name, elapsed)

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        logger.warning(message)

    def flush_table(self, table: Table, status: str = STATUS_COMPLETE) -> Path:
        """表を CSV として書き出し、出力一覧に登録する"""
        path = self.directory / table.filename
        header = {
            "command": self.command,
            "config_hash": self.config_hash,
            "units": ", ".join(f"{k}={v}" for k, v in table.units.items()),
            **{k: v for k, v in table.notes.items()},
            "status": status,
        }
        atomic_write_text(path, render_csv(table.rows, table.columns, header))
        table.written = True
        self.outputs.append(
            {
                "file": table.filename,
                "kind": "csv",
                "rows": len(table.rows),
                "config_hash": self.config_hash,
                "sha256": file_sha256(path),
                "status": status,
            }
        )
        logger.info("CSVを書き出しました: %s (%d行, %s)", path, len(table.rows), status)
        if self.plot_scripts and status == STATUS_COMPLETE and table.rows:
            self.write_plot_script(table)
        return path

    def flush_pending(self, status: str = STATUS_PARTIAL) -> None:
        """未書き出しの表をすべて書き出す (失敗時は partial として)"""
        for table in self.tables.values():
            if not table.written:
                self.flush_table(table, status=status)

    def write_plot_script(self, table: Table) -> Path:
        """
        表をプロットする Python スクリプトを生成する

        第1列を横軸、残りの数値列を縦軸にとる。matplotlib は生成された
        スクリプトの側でだけ import する。
        """
        x = table.columns[0]
        ys = [c for c in table.columns[1:] if all(_is_number(r.get(c)) for r in table.rows)]
        script = PLOT_TEMPLATE.format(
            command=self.command, csv=table.filename, x=x, ys=repr(ys), png=f"{table.name}.png"
        )
        path = self.directory / f"plot_{table.name}.py"
        atomic_write_text(path, script)
        self.outputs.append(
            {
                "file": path.name,
                "kind": "plot_script",
                "config_hash": self.config_hash,
                "sha256": file_sha256(path),
                "status": STATUS_COMPLETE,
            }
        )
        return path

    def write_json(self, name: str, payload: Any, status: str = STATUS_COMPLETE) -> Path:
        """補助的な JSON 出力 (グラフの列挙結果など)"""
        path = self.directory / name
        atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
        self.outputs.append(
            {
                "file": name,
                "kind": "json",
                "config_hash": self.config_hash,
                "sha256": file_sha256(path),
                "status": status,
            }
        )
        return path

    def write_manifest(self, config: Dict[str, Any], error: Optional[BaseException] = None) -> Path:
        """
        manifest.json を書き出す

        Args:
            config: 正規化された設定の辞書
            error: 失敗時の例外 (エラーレコードとして記録する)

        Returns:
            manifest.json のパス
        """
        status = STATUS_COMPLETE if error is None else STATUS_FAILED
        manifest: Dict[str, Any] = {
            "command": self.command,
            "status": status,
            "started_utc": self.started.isoformat(timespec="seconds"),
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config_hash": self.config_hash,
            "seed": self.seed,
            "versions": package_versions(),
            "timings_sec": {k: round(v, 6) for k, v in self.timings.items()},
            "outputs": self.outputs,
            "warnings": self.warnings,
            "summary": self.summary,
            "config": config,
        }
        if error is not None:
            manifest["error"] = error_record(error)
        path = self.directory / MANIFEST_NAME
        atomic_write_text(path, json.dumps(manifest, ensure_ascii=False, indent=2, default=str) + "\n")
        logger.info("manifestを書き出しました: %s (%s)", path, status)
        return path


def error_record(error: BaseException) -> Dict[str, Any]:
    """機械可読なエラーレコード"""
    if isinstance(error, BECError):
        return error.to_record()
    return {
        "type": type(error).__name__,
        "message": str(error),
        "exit_code": EXIT_UNEXPECTED,
        "details": {},
    }


def load_manifest(directory: Path) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST_NAME
    with path.open(encoding="utf-8") as f:
        return json.load(f)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


PLOT_TEMPLATE = '''#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""{command}: {csv} のプロット (自動生成)"""
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

HERE = Path(__file__).resolve().parent
frame = pd.read_csv(HERE / "{csv}", comment="#")

fig, ax = plt.subplots(figsize=(6, 4))
for column in {ys}:
    ax.plot(frame["{x}"], frame[column], marker=".", label=column)
ax.set_xlabel("{x}")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "{png}", dpi=150)
'''
