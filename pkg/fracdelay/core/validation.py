"""
Input validation and error types for fracdelay.

All rejected inputs raise a subclass of ValidationError so that callers (the
CLI in particular) can map them to a single exit code. Singular symbols are a
different kind of failure and raise SpectralHitError.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np

# Order windows
ALPHA_MIN = 2.0
ALPHA_MAX = 3.0

DEFAULT_MAX_HORIZON = 100_000


class ValidationError(ValueError):
    """Raised when validation fails."""
    pass


class DomainError(ValidationError):
    """A parameter lies outside its mathematical domain."""
    pass


class ShapeError(ValidationError):
    """Horizon or dimension mismatch."""
    pass


class CapacityError(ValidationError):
    """A computation would exceed the configured size or double-precision range."""
    pass


class TransformConvergenceError(ValidationError):
    """A truncated z-transform was requested at a radius where it does not converge."""
    pass


class ConfigError(ValidationError):
    """Malformed or unknown keys in a run configuration."""
    pass


class SpectralHitError(ArithmeticError):
    """
    The symbol matrix is singular at a node.

    Attributes:
        point: The offending frequency t (real) or contour point z (complex)
    """

    def __init__(self, message: str, point: Optional[complex] = None):
        super().__init__(message)
        self.point = point


class QuadratureError(SpectralHitError):
    """Singular integrand at a contour quadrature node."""
    pass


def validate_alpha(alpha: float) -> float:
    """
    Validate a fractional difference order.

    Args:
        alpha: Order of the difference, must lie in the open interval (2, 3)

    Returns:
        alpha as float

    Raises:
        DomainError: If alpha is not a finite number in (2, 3)
    """
    try:
        alpha = float(alpha)
    except (TypeError, ValueError) as e:
        raise DomainError(f"alpha must be a real number, got {alpha!r}") from e

    if not (ALPHA_MIN < alpha < ALPHA_MAX):
        raise DomainError(f"alpha must lie in ({ALPHA_MIN:g}, {ALPHA_MAX:g}), got {alpha}")
    return alpha


def validate_order(beta: float, upper: Optional[float] = None) -> float:
    """
    Validate a positive kernel order.

    Args:
        beta: Kernel order, must be > 0
        upper: Optional inclusive upper bound

    Returns:
        beta as float

    Raises:
        DomainError: If beta is not positive or exceeds upper
    """
    try:
        beta = float(beta)
    except (TypeError, ValueError) as e:
        raise DomainError(f"order must be a real number, got {beta!r}") from e

    if not math.isfinite(beta) or beta <= 0.0:
        raise DomainError(f"order must be positive, got {beta}")
    if upper is not None and beta > upper:
        raise DomainError(f"order must not exceed {upper:g}, got {beta}")
    return beta


def validate_horizon(N: int, max_horizon: int = DEFAULT_MAX_HORIZON, minimum: int = 0) -> int:
    """
    Validate a horizon length.

    Raises:
        ShapeError: If N is not an integer or below minimum
        CapacityError: If N exceeds max_horizon
    """
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
        raise ShapeError(f"horizon must be an integer, got {type(N).__name__}")
    N = int(N)
    if N < minimum:
        raise ShapeError(f"horizon must be at least {minimum}, got {N}")
    if N > max_horizon:
        raise CapacityError(f"horizon {N} exceeds configured maximum {max_horizon}")
    return N


def validate_delay(lam: int) -> int:
    """
    Validate the delay lambda.

    Raises:
        DomainError: If lam is not a positive integer
    """
    if isinstance(lam, bool) or not isinstance(lam, (int, np.integer)):
        raise DomainError(f"delay must be a positive integer, got {lam!r}")
    if lam < 1:
        raise DomainError(f"delay must be >= 1, got {lam}")
    return int(lam)


def validate_gamma(gamma: float) -> float:
    """Validate the real delay coefficient."""
    try:
        gamma = float(gamma)
    except (TypeError, ValueError) as e:
        raise DomainError(f"gamma must be a real number, got {gamma!r}") from e
    if not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma}")
    return gamma


def validate_matrix(A, name: str = "A") -> np.ndarray:
    """
    Validate and normalize a square coefficient matrix.

    Scalars are promoted to 1x1 matrices.

    Returns:
        Complex (d, d) array

    Raises:
        ShapeError: If A is not square
        ValidationError: If A has non-finite entries
    """
    try:
        M = np.array(A, dtype=complex)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be a numeric matrix: {e}") from e

    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ShapeError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains non-finite entries")
    return M


def validate_finite(values: np.ndarray, name: str = "sequence") -> np.ndarray:
    """Raise ValidationError if any entry is NaN or infinite."""
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{name} contains non-finite entries")
    return values


def validate_exponent(p: float) -> float:
    """
    Validate an l^p exponent.

    Raises:
        DomainError: If p is not in the open interval (1, inf)
    """
    p = float(p)
    if not (1.0 < p < math.inf):
        raise DomainError(f"p must lie in (1, inf), got {p}")
    return p


def validate_radius(r: float) -> float:
    """Validate a contour or transform radius (positive, finite)."""
    r = float(r)
    if not math.isfinite(r) or r <= 0.0:
        raise DomainError(f"radius must be positive, got {r}")
    return r


def validate_problem(A, alpha: float, gamma: float, lam: int) -> Tuple[np.ndarray, float, float, int]:
    """
    Validate the parameter tuple of one delay equation at once.

    Returns:
        Tuple of validated (A, alpha, gamma, lam)

    Raises:
        ValidationError: If any field is invalid
    """
    return (validate_matrix(A), validate_alpha(alpha), validate_gamma(gamma),
            validate_delay(lam))


def is_valid_alpha(alpha: float) -> bool:
    """Check if alpha lies in (2, 3)."""
    try:
        validate_alpha(alpha)
        return True
    except ValidationError:
        return False


def is_valid_matrix(A) -> bool:
    """Check if A is a finite square matrix."""
    try:
        validate_matrix(A)
        return True
    except ValidationError:
        return False


def check_increasing(values: Sequence[int], name: str = "horizons") -> Tuple[int, ...]:
    """
    Validate a strictly increasing sequence of positive integers.

    Raises:
        ValidationError: If empty, non-integer or not strictly increasing
    """
    if len(values) == 0:
        raise ValidationError(f"{name} must not be empty")
    out = tuple(validate_horizon(v, minimum=1) for v in values)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValidationError(f"{name} must be strictly increasing, got {list(out)}")
    return out
