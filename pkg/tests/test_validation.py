"""
Tests for the validation module.
"""

import numpy as np
import pytest

from fracdelay.core.validation import (
    CapacityError,
    DomainError,
    QuadratureError,
    ShapeError,
    SpectralHitError,
    ValidationError,
    check_increasing,
    is_valid_alpha,
    is_valid_matrix,
    validate_alpha,
    validate_delay,
    validate_exponent,
    validate_gamma,
    validate_horizon,
    validate_matrix,
    validate_order,
    validate_problem,
    validate_radius,
)


class TestAlphaValidation:
    """Tests for the order alpha."""

    def test_valid(self):
        """Test values inside (2, 3)."""
        assert validate_alpha(2.5) == 2.5
        assert validate_alpha("2.1") == 2.1

    @pytest.mark.parametrize("alpha", [2.0, 3.0, 1.5, float("nan"), float("inf")])
    def test_invalid(self, alpha):
        """Test the closed endpoints and non-finite values."""
        with pytest.raises(DomainError):
            validate_alpha(alpha)

    def test_not_a_number(self):
        """Test a non-numeric alpha."""
        with pytest.raises(DomainError):
            validate_alpha("two and a half")

    def test_is_valid_alpha(self):
        """Test is_valid_alpha helper function."""
        assert is_valid_alpha(2.9)
        assert not is_valid_alpha(3)


class TestOrderValidation:
    """Tests for kernel orders."""

    def test_valid(self):
        """Test positive orders."""
        assert validate_order(0.5) == 0.5
        assert validate_order(1.0, upper=1.0) == 1.0

    def test_invalid(self):
        """Test zero, negative and above-bound orders."""
        for beta in (0.0, -0.3, float("nan")):
            with pytest.raises(DomainError):
                validate_order(beta)
        with pytest.raises(DomainError):
            validate_order(1.2, upper=1.0)


class TestHorizonValidation:
    """Tests for horizons."""

    def test_valid(self):
        """Test integer horizons, numpy integers included."""
        assert validate_horizon(10) == 10
        assert validate_horizon(np.int64(7)) == 7

    def test_not_integer(self):
        """Test floats and booleans are rejected."""
        with pytest.raises(ShapeError):
            validate_horizon(10.0)
        with pytest.raises(ShapeError):
            validate_horizon(True)

    def test_bounds(self):
        """Test the minimum and the configured maximum."""
        with pytest.raises(ShapeError):
            validate_horizon(2, minimum=3)
        with pytest.raises(CapacityError):
            validate_horizon(11, max_horizon=10)


class TestProblemValidation:
    """Tests for A, gamma and lam."""

    def test_scalar_matrix(self):
        """Test scalars are promoted to 1x1 complex matrices."""
        M = validate_matrix(0.3)
        assert M.shape == (1, 1)
        assert M.dtype == complex

    def test_complex_entries(self):
        """Test complex entries are kept."""
        M = validate_matrix([[1j, 0], [0, 1]])
        assert M[0, 0] == 1j

    def test_non_square(self):
        """Test non-square and empty matrices."""
        with pytest.raises(ShapeError):
            validate_matrix([[1, 2, 3], [4, 5, 6]])
        with pytest.raises(ShapeError):
            validate_matrix(np.zeros((0, 0)))

    def test_non_finite(self):
        """Test NaN entries."""
        with pytest.raises(ValidationError):
            validate_matrix([[np.nan]])
        assert not is_valid_matrix([[np.inf]])

    def test_delay(self):
        """Test lam must be a positive integer."""
        assert validate_delay(3) == 3
        for lam in (0, -1, 1.5, True):
            with pytest.raises(DomainError):
                validate_delay(lam)

    def test_gamma(self):
        """Test gamma must be a finite real number."""
        assert validate_gamma(-0.5) == -0.5
        with pytest.raises(DomainError):
            validate_gamma(float("inf"))

    def test_problem_tuple(self):
        """Test the combined validator."""
        A, alpha, gamma, lam = validate_problem([[0.1]], 2.5, 0, 2)
        assert A.shape == (1, 1)
        assert (alpha, gamma, lam) == (2.5, 0.0, 2)


class TestNumericParameters:
    """Tests for exponents, radii and horizon lists."""

    def test_exponent(self):
        """Test p must lie in (1, inf)."""
        assert validate_exponent(2) == 2.0
        for p in (1.0, 0.5, float("inf")):
            with pytest.raises(DomainError):
                validate_exponent(p)

    def test_radius(self):
        """Test radii must be positive and finite."""
        assert validate_radius(0.95) == 0.95
        for r in (0.0, -1.0, float("nan")):
            with pytest.raises(DomainError):
                validate_radius(r)

    def test_check_increasing(self):
        """Test strictly increasing horizon lists."""
        assert check_increasing([16, 32, 64]) == (16, 32, 64)
        with pytest.raises(ValidationError):
            check_increasing([])
        with pytest.raises(ValidationError):
            check_increasing([32, 32])


class TestErrorHierarchy:
    """Tests for the exception classes."""

    def test_validation_errors_are_value_errors(self):
        """Test input errors derive from ValueError."""
        for cls in (DomainError, ShapeError, CapacityError):
            assert issubclass(cls, ValidationError)
            assert issubclass(cls, ValueError)

    def test_spectral_hit_carries_point(self):
        """Test SpectralHitError records the offending point."""
        err = QuadratureError("singular", point=0.95 + 0.1j)
        assert isinstance(err, SpectralHitError)
        assert err.point == 0.95 + 0.1j
        assert not isinstance(err, ValueError)
