# -*- coding: utf-8 -*-
"""
Errors Module

BEC数値ツールキット全体で使う例外階層と、CLI終了コードへの対応付け
"""

from typing import Any, Dict, Optional

# 終了コード
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INVARIANT = 4


class BECError(Exception):
    """ツールキットの基底例外"""

    exit_code = EXIT_UNEXPECTED

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details)

    def to_record(self) -> Dict[str, Any]:
        """機械可読なエラーレコードに変換"""
        return {
            "type": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": {k: _plain(v) for k, v in self.details.items()},
        }


class ParameterError(BECError, ValueError):
    """物理パラメータ・数値パラメータが不正"""

    exit_code = EXIT_CONFIG


class ConfigError(ParameterError):
    """設定ドキュメントの解析・検証エラー"""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        **details: Any,
    ):
        location = []
        if field is not None:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        full = f"{message} ({'; '.join(location)})" if location else message
        super().__init__(full, field=field, line=line, column=column, **details)
        self.field = field
        self.line = line
        self.column = column


class PoleProximityError(ParameterError):
    """伝播関数を質量殻の近傍 (ε/2 以内) で評価しようとした"""


class NumericalError(BECError, RuntimeError):
    """数値計算の非収束"""

    exit_code = EXIT_NUMERICAL


class QuadratureError(NumericalError):
    """数値積分が要求精度に達しなかった"""

    def __init__(self, message: str, error_estimate: float = float("nan"), **details: Any):
        super().__init__(message, error_estimate=error_estimate, **details)
        self.error_estimate = error_estimate


class BracketError(NumericalError):
    """根の挟み込み区間を確立できなかった"""


class SolverError(NumericalError):
    """根探索が収束しなかった"""


class FitError(NumericalError):
    """減衰率フィットが受理条件 (R², 単調性) を満たさない"""


class InvariantViolation(BECError):
    """実行時の不変条件チェックに失敗"""

    exit_code = EXIT_INVARIANT


class GraphLimitError(ParameterError):
    """グラフ列挙・Wick列挙の組合せ爆発ガード"""


def exit_code_for(exc: BaseException) -> int:
    """例外から終了コードを決める"""
    if isinstance(exc, BECError):
        return exc.exit_code
    return EXIT_UNEXPECTED


def _plain(value: Any) -> Any:
    # numpy スカラーなどをJSON化できる形にする
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if hasattr(value, "item"):
        try:
            return _plain(value.item())
        except (ValueError, TypeError):
            return repr(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return repr(value)
