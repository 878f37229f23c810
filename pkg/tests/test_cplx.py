import numpy as np
import pytest

from src.autodiff import Tensor, grad_check, ops
from src.cplx import CTensor, abs2, cabs2, ceye, chermitian, cmatmul, csolve
from src.errors import ShapeError


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


class TestMatmul:
    def test_scalar_product(self):
        out = cmatmul(CTensor.from_numpy([[1 + 1j]]), CTensor.from_numpy([[1 - 1j]]))
        np.testing.assert_array_equal(out.numpy(), [[2 + 0j]])

    def test_matches_schoolbook_product(self, rng):
        a, b = crandn(rng, 4, 4), crandn(rng, 4, 4)
        expected = np.zeros((4, 4), dtype=complex)
        for i in range(4):
            for j in range(4):
                for k in range(4):
                    expected[i, j] += a[i, k] * b[k, j]
        out = cmatmul(CTensor.from_numpy(a), CTensor.from_numpy(b)).numpy()
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_identity_and_associativity(self, rng):
        a, b, c = (CTensor.from_numpy(crandn(rng, 3, 3)) for _ in range(3))
        np.testing.assert_allclose((a @ ceye(3)).numpy(), a.numpy(), atol=1e-15)
        left = ((a @ b) @ c).numpy()
        right = (a @ (b @ c)).numpy()
        np.testing.assert_allclose(left, right, atol=1e-10)

    def test_inner_dimension_mismatch(self, rng):
        with pytest.raises(ShapeError):
            cmatmul(CTensor.from_numpy(crandn(rng, 2, 3)), CTensor.from_numpy(crandn(rng, 2, 3)))


class TestHermitian:
    def test_single_entry(self):
        np.testing.assert_array_equal(chermitian(CTensor.from_numpy([[1j]])).numpy(), [[-1j]])

    def test_involution(self, rng):
        a = CTensor.from_numpy(crandn(rng, 3, 2))
        np.testing.assert_array_equal(a.H.H.numpy(), a.numpy())

    def test_product_rule(self, rng):
        a, b = CTensor.from_numpy(crandn(rng, 3, 3)), CTensor.from_numpy(crandn(rng, 3, 3))
        np.testing.assert_allclose((a @ b).H.numpy(), (b.H @ a.H).numpy(), atol=1e-12)


class TestSolve:
    def test_identity(self, rng):
        b = crandn(rng, 3, 2)
        np.testing.assert_allclose(csolve(ceye(3), CTensor.from_numpy(b)).numpy(), b, atol=1e-15)

    def test_scalar_division(self):
        x = csolve(CTensor.from_numpy([[2.0]]), CTensor.from_numpy([[4 + 2j]]))
        np.testing.assert_allclose(x.numpy(), [[2 + 1j]], atol=1e-15)

    def test_hermitian_positive_definite_residual(self, rng):
        g = crandn(rng, 6, 6)
        a = g @ g.conj().T + np.eye(6)
        b = crandn(rng, 6, 2)
        x = csolve(CTensor.from_numpy(a), CTensor.from_numpy(b)).numpy()
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            csolve(ceye(3), CTensor.from_numpy(crandn(rng, 2, 1)))

    def test_gradient_through_solve(self, rng):
        g = crandn(rng, 3, 3)
        a_im = (g - g.T).imag * 0.3
        b = CTensor.from_numpy(crandn(rng, 3, 1))

        def builder(x):
            # x holds the real part of A; the imaginary part is fixed
            a = CTensor(ops.add(x, 3.0 * np.eye(3)), Tensor(a_im))
            return ops.reduce_sum(abs2(csolve(a, b)))

        assert grad_check(builder, rng.normal(size=(3, 3))).max_norm_error <= 1e-5


class TestAbs2:
    def test_unit_vectors(self):
        one = CTensor.from_numpy([[1.0]])
        assert cabs2(one, one).item() == 1.0
        assert cabs2(one, CTensor.from_numpy([[1j]])).item() == 1.0

    def test_orthogonal(self):
        a = CTensor.from_numpy([[1.0], [1j]])
        b = CTensor.from_numpy([[1.0], [-1j]])
        assert abs(cabs2(a, b).item()) <= 1e-15

    def test_matches_vdot(self, rng):
        a, b = crandn(rng, 5, 1), crandn(rng, 5, 1)
        expected = abs(np.vdot(a, b)) ** 2
        assert cabs2(CTensor.from_numpy(a), CTensor.from_numpy(b)).item() == pytest.approx(expected, rel=1e-12)

    def test_length_mismatch(self, rng):
        with pytest.raises(ShapeError):
            cabs2(CTensor.from_numpy(crandn(rng, 3, 1)), CTensor.from_numpy(crandn(rng, 2, 1)))

    def test_gradient(self, rng):
        b = CTensor.from_numpy(crandn(rng, 4, 1))

        def builder(x):
            a = CTensor(ops.slice_axis(x, 0, 4), ops.slice_axis(x, 4, 8))
            return ops.reduce_sum(cabs2(a, b))

        assert grad_check(builder, rng.normal(size=(8, 1))).max_norm_error <= 1e-5


class TestExports:
    def test_only_used_helpers_are_exported(self):
        import src.cplx

        assert set(src.cplx.__all__) == {
            "CTensor", "abs2", "cabs2", "cadd", "ceye", "chermitian", "cmatmul", "cmul_real", "csolve", "csub"
        }
        assert all(hasattr(src.cplx, name) for name in src.cplx.__all__)
