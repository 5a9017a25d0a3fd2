# -*- coding: utf-8 -*-
"""
Tests for Mat2C (パウリ基底の複素2×2行列)

Usage:
    pytest tests/test_pauli.py -v
"""
import numpy as np
import pytest

from modules.pauli import SIGMA_1, SIGMA_2, SIGMA_3, Mat2C, commutator, sum_matrices


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_matrix(rng) -> np.ndarray:
    return rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))


class TestConversion:
    """成分表示との相互変換"""

    def test_sigma_matrices(self):
        """σ_k の成分が標準形と一致する"""
        np.testing.assert_array_equal(Mat2C.sigma(1).to_matrix(), SIGMA_1)
        np.testing.assert_array_equal(Mat2C.sigma(2).to_matrix(), SIGMA_2)
        np.testing.assert_array_equal(Mat2C.sigma(3).to_matrix(), SIGMA_3)

    def test_from_matrix_inverts_to_matrix(self, rng):
        """from_matrix と to_matrix は互いに逆"""
        for _ in range(20):
            a = random_matrix(rng)
            np.testing.assert_allclose(Mat2C.from_matrix(a).to_matrix(), a, rtol=1e-14, atol=1e-14)

    def test_from_matrix_rejects_wrong_shape(self):
        """2×2 以外は ValueError"""
        with pytest.raises(ValueError):
            Mat2C.from_matrix(np.eye(3))

    def test_to_dict_channels(self):
        """CSV 用の辞書は実部・虚部に分かれる"""
        d = Mat2C(c_I=1.0, c_2=2j).to_dict()
        assert d["re_I"] == 1.0
        assert d["im_2"] == 2.0
        assert d["re_3"] == 0.0


class TestAlgebra:
    """積・逆行列・行列式"""

    def test_product_matches_numpy(self, rng):
        """パウリ基底の積は行列積と一致する"""
        for _ in range(20):
            a, b = random_matrix(rng), random_matrix(rng)
            product = Mat2C.from_matrix(a) * Mat2C.from_matrix(b)
            np.testing.assert_allclose(product.to_matrix(), a @ b, rtol=1e-13, atol=1e-13)

    def test_pauli_relations(self):
        """σ₁σ₂ = iσ₃、σ_k² = I"""
        assert (Mat2C.sigma(1) * Mat2C.sigma(2)).allclose(Mat2C.sigma(3, 1j))
        for k in (1, 2, 3):
            assert (Mat2C.sigma(k) * Mat2C.sigma(k)).allclose(Mat2C.identity())

    def test_inverse_and_det(self, rng):
        """A·A⁻¹ = I、det は numpy と一致"""
        a = random_matrix(rng)
        m = Mat2C.from_matrix(a)
        assert (m * m.inverse()).allclose(Mat2C.identity(), atol=1e-13)
        assert m.det() == pytest.approx(np.linalg.det(a), rel=1e-12)

    def test_singular_inverse_raises(self):
        """特異行列の逆は ZeroDivisionError"""
        with pytest.raises(ZeroDivisionError):
            (Mat2C.identity() + Mat2C.sigma(3)).inverse()

    def test_transpose_conj_dagger(self, rng):
        """転置・複素共役・エルミート共役"""
        a = random_matrix(rng)
        m = Mat2C.from_matrix(a)
        np.testing.assert_allclose(m.transpose().to_matrix(), a.T, atol=1e-14)
        np.testing.assert_allclose(m.conj().to_matrix(), a.conj(), atol=1e-14)
        np.testing.assert_allclose(m.dagger().to_matrix(), a.conj().T, atol=1e-14)

    def test_commutator_and_sum(self):
        """[σ₁, σ₂] = 2iσ₃、和のヘルパー"""
        assert commutator(Mat2C.sigma(1), Mat2C.sigma(2)).allclose(Mat2C.sigma(3, 2j))
        total = sum_matrices([Mat2C.sigma(1), Mat2C.sigma(1), Mat2C.identity()])
        assert total.allclose(Mat2C(c_I=1.0, c_1=2.0))

    def test_scalar_operations(self):
        """スカラー倍と除算"""
        m = Mat2C(c_I=2.0, c_3=4.0)
        assert (0.5 * m).allclose(m / 2)
        assert (-m).allclose(m * -1)
        assert m.trace() == 4.0
