# -*- coding: utf-8 -*-
"""
Pauli Matrix Module

複素2×2行列を (I, σ₁, σ₂, σ₃) 基底の係数で保持するモジュール。
運動行列 D̂, D̄̂、伝播関数、Hadamard係数はすべてこの型で表現する。
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

Number = Union[int, float, complex]

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI_BASIS = (SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3)

CHANNELS = ("I", "1", "2", "3")


@dataclass(frozen=True)
class Mat2C:
    """c_I·I + c_1·σ₁ + c_2·σ₂ + c_3·σ₃ を表す不変の複素2×2行列"""

    c_I: complex = 0j
    c_1: complex = 0j
    c_2: complex = 0j
    c_3: complex = 0j

    def __post_init__(self):
        for name in ("c_I", "c_1", "c_2", "c_3"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    # ------------------------------------------------------------------
    # 生成
    # ------------------------------------------------------------------
    @classmethod
    def identity(cls, scale: Number = 1.0) -> "Mat2C":
        return cls(c_I=scale)

    @classmethod
    def zero(cls) -> "Mat2C":
        return cls()

    @classmethod
    def sigma(cls, k: int, scale: Number = 1.0) -> "Mat2C":
        """k番目のパウリ行列 (k=0 は単位行列)"""
        coeffs = [0j, 0j, 0j, 0j]
        coeffs[k] = complex(scale)
        return cls(*coeffs)

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[Number]]) -> "Mat2C":
        """
        明示的な2×2成分からパウリ基底係数へ変換する

        c_k = tr(σ_k A)/2 は正確な線形変換なので丸め以外の誤差はない。
        """
        a = np.asarray(matrix, dtype=complex)
        if a.shape != (2, 2):
            raise ValueError(f"2×2行列が必要です: shape={a.shape}")
        return cls(
            c_I=(a[0, 0] + a[1, 1]) / 2,
            c_1=(a[0, 1] + a[1, 0]) / 2,
            c_2=1j * (a[0, 1] - a[1, 0]) / 2,
            c_3=(a[0, 0] - a[1, 1]) / 2,
        )

    # ------------------------------------------------------------------
    # 変換
    # ------------------------------------------------------------------
    def to_matrix(self) -> np.ndarray:
        """明示的な2×2成分"""
        return np.array(
            [
                [self.c_I + self.c_3, self.c_1 - 1j * self.c_2],
                [self.c_1 + 1j * self.c_2, self.c_I - self.c_3],
            ],
            dtype=complex,
        )

    def coefficients(self) -> Tuple[complex, complex, complex, complex]:
        return (self.c_I, self.c_1, self.c_2, self.c_3)

    def to_dict(self) -> Dict[str, float]:
        """CSV・JSON出力用に実部・虚部へ展開"""
        out: Dict[str, float] = {}
        for name, c in zip(CHANNELS, self.coefficients()):
            out[f"re_{name}"] = c.real
            out[f"im_{name}"] = c.imag
        return out

    def entry(self, i: int, j: int) -> complex:
        return complex(self.to_matrix()[i, j])

    # ------------------------------------------------------------------
    # 代数
    # ------------------------------------------------------------------
    def __add__(self, other: "Mat2C") -> "Mat2C":
        if not isinstance(other, Mat2C):
            return NotImplemented
        return Mat2C(*(a + b for a, b in zip(self.coefficients(), other.coefficients())))

    def __sub__(self, other: "Mat2C") -> "Mat2C":
        if not isinstance(other, Mat2C):
            return NotImplemented
        return Mat2C(*(a - b for a, b in zip(self.coefficients(), other.coefficients())))

    def __neg__(self) -> "Mat2C":
        return Mat2C(*(-a for a in self.coefficients()))

    def __mul__(self, other: Union["Mat2C", Number]) -> "Mat2C":
        if isinstance(other, Mat2C):
            # (a0 + a·σ)(b0 + b·σ) = a0 b0 + a·b + (a0 b + b0 a + i a×b)·σ
            a0, a1, a2, a3 = self.coefficients()
            b0, b1, b2, b3 = other.coefficients()
            return Mat2C(
                c_I=a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3,
                c_1=a0 * b1 + b0 * a1 + 1j * (a2 * b3 - a3 * b2),
                c_2=a0 * b2 + b0 * a2 + 1j * (a3 * b1 - a1 * b3),
                c_3=a0 * b3 + b0 * a3 + 1j * (a1 * b2 - a2 * b1),
            )
        if isinstance(other, (int, float, complex, np.number)):
            s = complex(other)
            return Mat2C(*(a * s for a in self.coefficients()))
        return NotImplemented

    def __rmul__(self, other: Number) -> "Mat2C":
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, other: Number) -> "Mat2C":
        if isinstance(other, (int, float, complex, np.number)):
            s = complex(other)
            return Mat2C(*(a / s for a in self.coefficients()))
        return NotImplemented

    def apply(self, vector: Sequence[Number]) -> np.ndarray:
        """2成分ベクトルへの作用"""
        return self.to_matrix() @ np.asarray(vector, dtype=complex)

    def transpose(self) -> "Mat2C":
        # σ₂ᵀ = −σ₂
        return Mat2C(self.c_I, self.c_1, -self.c_2, self.c_3)

    def conj(self) -> "Mat2C":
        """成分ごとの複素共役 (σ₂* = −σ₂)"""
        return Mat2C(
            self.c_I.conjugate(),
            self.c_1.conjugate(),
            -self.c_2.conjugate(),
            self.c_3.conjugate(),
        )

    def dagger(self) -> "Mat2C":
        return Mat2C(*(a.conjugate() for a in self.coefficients()))

    def det(self) -> complex:
        return self.c_I**2 - self.c_1**2 - self.c_2**2 - self.c_3**2

    def trace(self) -> complex:
        return 2 * self.c_I

    def inverse(self) -> "Mat2C":
        d = self.det()
        if d == 0:
            raise ZeroDivisionError("特異行列は逆行列を持ちません")
        return Mat2C(self.c_I / d, -self.c_1 / d, -self.c_2 / d, -self.c_3 / d)

    def norm(self) -> float:
        """フロベニウスノルム"""
        return float(np.linalg.norm(self.to_matrix()))

    def max_abs(self) -> float:
        """成分の最大絶対値"""
        return float(np.max(np.abs(self.to_matrix())))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_matrix(), self.to_matrix().conj().T, atol=atol, rtol=0.0))

    def allclose(self, other: "Mat2C", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        return bool(np.allclose(self.to_matrix(), other.to_matrix(), rtol=rtol, atol=atol))

    def __repr__(self) -> str:
        parts = ", ".join(f"{n}={c:.6g}" for n, c in zip(CHANNELS, self.coefficients()))
        return f"Mat2C({parts})"


def commutator(a: Mat2C, b: Mat2C) -> Mat2C:
    """[A, B] = AB − BA"""
    return a * b - b * a


def sum_matrices(items: Sequence[Mat2C]) -> Mat2C:
    total = Mat2C.zero()
    for item in items:
        total = total + item
    return total
