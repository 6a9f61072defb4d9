"""
Tests for convolution, differences and the fractional operators.
"""

import numpy as np
import pytest

from fracdelay.core.calculus import (
    causal_matrix_convolve,
    conv_diff_identity_residual,
    convolve,
    entry_norms,
    forward_difference,
    fractional_difference,
    fractional_difference_initial,
    fractional_sum,
    matrix_convolve,
)
from fracdelay.core.kernels import kernel_sequence
from fracdelay.core.models import OperatorSeq, Signal
from fracdelay.core.validation import DomainError, ShapeError


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestConvolve:
    """Tests for the scalar convolution."""

    def test_delta_is_identity(self, rng):
        """Test convolution with delta_0 returns the argument."""
        g = Signal.random(20, 2, seed=1)
        delta = np.zeros(21)
        delta[0] = 1.0
        np.testing.assert_array_equal(convolve(delta, g).values, g.values)

    def test_ones_gives_partial_sums(self):
        """Test convolution with ones is the running sum."""
        g = Signal(np.arange(10, dtype=float))
        out = convolve(np.ones(10), g)
        np.testing.assert_allclose(out.values[:, 0], np.cumsum(np.arange(10)))

    def test_fft_matches_direct(self, rng):
        """Test the FFT path against the direct sum."""
        a = rng.standard_normal(64)
        g = Signal.random(63, 3, seed=2)
        direct = convolve(a, g, method="direct").values
        fft = convolve(a, g, method="fft").values
        np.testing.assert_allclose(fft, direct, atol=1e-11)

    def test_horizon_mismatch(self):
        """Test mismatched horizons raise ShapeError."""
        with pytest.raises(ShapeError):
            convolve(np.ones(5), Signal.zeros(6))

    def test_unknown_method(self):
        """Test an unknown method raises DomainError."""
        with pytest.raises(DomainError):
            convolve(np.ones(5), Signal.zeros(4), method="spectral")

    def test_operator_sequence_kept(self):
        """Test an OperatorSeq argument yields an OperatorSeq."""
        P = OperatorSeq(np.ones((6, 2, 2)))
        out = convolve(np.ones(6), P)
        assert isinstance(out, OperatorSeq)
        np.testing.assert_allclose(out.values[:, 0, 0], np.arange(1, 7))


class TestMatrixConvolve:
    """Tests for operator-kernel convolution."""

    def test_identity_kernel(self):
        """Test delta_0 I returns the signal."""
        kernel = np.zeros((11, 2, 2), dtype=complex)
        kernel[0] = np.eye(2)
        g = Signal.random(10, 2, seed=3)
        np.testing.assert_allclose(matrix_convolve(kernel, g).values, g.values)

    def test_matches_loop(self, rng):
        """Test against an explicit double loop."""
        P = rng.standard_normal((8, 2, 2)) + 1j * rng.standard_normal((8, 2, 2))
        x = rng.standard_normal((8, 2))
        out = causal_matrix_convolve(P, x)
        for n in range(8):
            expected = sum(P[n - j] @ x[j] for j in range(n + 1))
            np.testing.assert_allclose(out[n], expected, atol=1e-13)

    def test_fft_matches_direct_for_matrices(self, rng):
        """Test the FFT path for matrix arguments."""
        P = rng.standard_normal((32, 3, 3))
        X = rng.standard_normal((32, 3, 3))
        np.testing.assert_allclose(causal_matrix_convolve(P, X, "fft"),
                                   causal_matrix_convolve(P, X, "direct"), atol=1e-11)

    def test_dimension_mismatch(self):
        """Test mismatched dimensions raise ShapeError."""
        with pytest.raises(ShapeError):
            matrix_convolve(np.zeros((5, 2, 2)), Signal.zeros(4, 3))


class TestDifferences:
    """Tests for forward differences and the fractional operators."""

    def test_second_difference_of_square(self):
        """Test the second difference of n^2 is 2."""
        u = Signal(np.arange(10, dtype=float) ** 2)
        out = forward_difference(u, 2)
        assert out.horizon == 7
        np.testing.assert_allclose(out.values[:, 0], 2.0)

    def test_order_above_horizon(self):
        """Test m > N raises ShapeError."""
        with pytest.raises(ShapeError):
            forward_difference(Signal.zeros(3), 4)

    def test_fractional_sum_order_one(self):
        """Test the order-one sum is the running sum."""
        u = Signal(np.arange(1.0, 8.0))
        np.testing.assert_allclose(fractional_sum(u, 1.0).values[:, 0], np.cumsum(np.arange(1.0, 8.0)))

    def test_fractional_sum_order_domain(self):
        """Test orders outside (0, 1] raise DomainError."""
        with pytest.raises(DomainError):
            fractional_sum(Signal.zeros(5), 1.5)

    def test_fractional_difference_horizon(self):
        """Test the output horizon is N - 3."""
        out = fractional_difference(Signal.ones(20), 2.5)
        assert out.horizon == 17

    def test_fractional_difference_short(self):
        """Test N < 3 raises ShapeError."""
        with pytest.raises(ShapeError):
            fractional_difference(Signal.ones(2), 2.5)

    def test_fractional_difference_alpha_domain(self):
        """Test alpha outside (2, 3) raises DomainError."""
        with pytest.raises(DomainError):
            fractional_difference(Signal.ones(10), 3.2)

    def test_linearity(self):
        """Test the fractional difference is linear."""
        u = Signal.random(30, 2, seed=4)
        v = Signal.random(30, 2, seed=5)
        lhs = fractional_difference(u + 2.0 * v, 2.3).values
        rhs = fractional_difference(u, 2.3).values + 2.0 * fractional_difference(v, 2.3).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestConvolutionRule:
    """Tests for the convolution rule of the fractional difference."""

    def test_boundary_terms(self):
        """Test C0, C1 and C2 for a constant sequence."""
        c0, c1, c2 = fractional_difference_initial(Signal.ones(5), 2.5)
        np.testing.assert_allclose(c0, [1.0])
        np.testing.assert_allclose(c1, [1.0 - 2.5])
        np.testing.assert_allclose(c2, [1.0 - 2.5 + 2.5 * 1.5 / 2.0])

    @pytest.mark.parametrize("alpha", [2.1, 2.5, 2.9])
    def test_rule_for_signals(self, alpha, rng):
        """Test the rule for a random scalar b and vector P."""
        b = rng.standard_normal(41)
        P = Signal.random(40, 2, seed=11)
        assert conv_diff_identity_residual(b, P, alpha) <= 1e-10

    def test_rule_for_operator_sequences(self, rng):
        """Test the rule for a random operator sequence."""
        b = kernel_sequence(0.5, 30)
        P = OperatorSeq(rng.standard_normal((31, 3, 3)))
        assert conv_diff_identity_residual(b, P, 2.7) <= 1e-10

    def test_short_horizon(self):
        """Test N < 6 raises ShapeError."""
        with pytest.raises(ShapeError):
            conv_diff_identity_residual(np.ones(5), Signal.ones(4), 2.5)


class TestEntryNorms:
    """Tests for entry_norms."""

    def test_shapes(self):
        """Test scalar, vector and matrix inputs."""
        assert entry_norms(np.array([-3.0, 4.0])).tolist() == [3.0, 4.0]
        assert entry_norms(np.array([[3.0, 4.0]])).tolist() == [5.0]
        assert entry_norms(np.array([2.0 * np.eye(2)])).tolist() == pytest.approx([2.0])
