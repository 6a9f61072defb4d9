"""
Scalar kernel sequences.

k^beta(j) = Gamma(beta + j) / (Gamma(beta) Gamma(j + 1)) is generated from
its term ratio (beta + j) / (j + 1), never from Gamma calls, so horizons in
the thousands stay in range. h is the three-term sequence whose
convolution with the resolvent gives the solution kernel.
"""

import math
from typing import Tuple

import numpy as np

from fracdelay.core.logging import get_logger
from fracdelay.core.models import HSeq, KernelSeq
from fracdelay.core.validation import (
    CapacityError,
    DEFAULT_MAX_HORIZON,
    validate_alpha,
    validate_horizon,
    validate_order,
)

logger = get_logger(__name__)

H_CAPACITY = 1e300


def _ratio_products(order: float, N: int) -> np.ndarray:
    """1, then the cumulative products of (order + j - 1) / j for j = 1..N."""
    values = np.ones(N + 1)
    if N > 0:
        j = np.arange(1, N + 1, dtype=float)
        values[1:] = np.cumprod((order + j - 1.0) / j)
    return values


def kernel_sequence(beta: float, N: int,
                    max_horizon: int = DEFAULT_MAX_HORIZON) -> KernelSeq:
    """
    Fractional sum kernel k^beta on 0..N.

    Args:
        beta: Positive order
        N: Horizon
        max_horizon: Largest accepted N

    Returns:
        KernelSeq with values[0] = 1 and values[1] = beta

    Raises:
        DomainError: If beta <= 0
        CapacityError: If N > max_horizon

    Example:
        >>> kernel_sequence(0.5, 3).values
        array([1.    , 0.5   , 0.375 , 0.3125])
    """
    beta = validate_order(beta)
    N = validate_horizon(N, max_horizon=max_horizon)
    return KernelSeq(order=beta, values=_ratio_products(beta, N))


def grunwald_weights(alpha: float, N: int,
                     max_horizon: int = DEFAULT_MAX_HORIZON) -> KernelSeq:
    """
    Coefficients of (1 - w)^alpha on 0..N.

    c(0) = 1 and c(j+1) = c(j) (j - alpha) / (j + 1); this is the kernel of
    order -alpha, the convolution inverse of k^alpha.
    """
    alpha = float(alpha)
    N = validate_horizon(N, max_horizon=max_horizon)
    return KernelSeq(order=-alpha, values=_ratio_products(-alpha, N))


def h_sequence(alpha: float, N: int, max_horizon: int = DEFAULT_MAX_HORIZON,
               capacity: float = H_CAPACITY) -> HSeq:
    """
    The sequence h on 0..N.

    h(0) = 1, h(1) = alpha - 1, h(2) = alpha (alpha - 1) / 2 and
    h(n+3) = (alpha - 1) h(n+2) - ((alpha - 1)(alpha - 2) / 2) h(n+1).

    Raises:
        DomainError: If alpha is outside (2, 3)
        CapacityError: If |h(n)| reaches capacity before n = N
    """
    alpha = validate_alpha(alpha)
    N = validate_horizon(N, max_horizon=max_horizon)

    a1 = alpha - 1.0
    c = (alpha - 1.0) * (alpha - 2.0) / 2.0
    values = np.empty(N + 1)
    initial = (1.0, a1, alpha * a1 / 2.0)
    values[: min(N + 1, 3)] = initial[: min(N + 1, 3)]

    for n in range(3, N + 1):
        values[n] = a1 * values[n - 1] - c * values[n - 2]
        if abs(values[n]) >= capacity:
            raise CapacityError(f"h({n}) = {values[n]:.3e} exceeds capacity {capacity:g}; "
                                f"reduce the horizon below {n}")

    logger.debug("h sequence: alpha=%g N=%d last=%.6e", alpha, N, values[-1])
    return HSeq(alpha=alpha, values=values)


def h_roots(alpha: float) -> Tuple[float, float]:
    """
    Roots of z^2 + (1 - alpha) z + (alpha - 1)(alpha - 2)/2, largest first.

    Both are real for alpha in (2, 3); the largest exceeds 1.
    """
    alpha = validate_alpha(alpha)
    disc = math.sqrt((alpha - 1.0) * (3.0 - alpha))
    return ((alpha - 1.0) + disc) / 2.0, ((alpha - 1.0) - disc) / 2.0


def h_closed_form(alpha: float, N: int) -> np.ndarray:
    """h(n) = C+ z+^n + C- z-^n from the two roots; a cross-check of the recursion."""
    z_plus, z_minus = h_roots(alpha)
    N = validate_horizon(N)
    c_plus = (alpha - 1.0 - z_minus) / (z_plus - z_minus)
    c_minus = 1.0 - c_plus
    n = np.arange(N + 1, dtype=float)
    return c_plus * z_plus ** n + c_minus * z_minus ** n


def h_recursion_residual(h: HSeq) -> float:
    """
    Max relative residual of the defining three-term recursion.

    Measured against max(1, |h(n+3)|) at every n <= N - 3.
    """
    v = h.values
    if len(v) < 4:
        return 0.0
    a = h.alpha
    lhs = v[3:] + (1.0 - a) * v[2:-1] + ((a - 1.0) * (a - 2.0) / 2.0) * v[1:-2]
    return float(np.max(np.abs(lhs) / np.maximum(1.0, np.abs(v[3:]))))


def kernel_semigroup_residual(beta: float, gamma: float, N: int) -> float:
    """
    Max over n <= N of |(k^beta * k^gamma)(n) - k^(beta+gamma)(n)| / max(1, k^(beta+gamma)(n)).

    Raises:
        DomainError: If either order is not positive
    """
    kb = kernel_sequence(beta, N).values
    kg = kernel_sequence(gamma, N).values
    ks = kernel_sequence(beta + gamma, N).values
    conv = np.convolve(kb, kg)[: N + 1]
    return float(np.max(np.abs(conv - ks) / np.maximum(1.0, ks)))


def kernel_identity_residual(alpha: float, N: int) -> float:
    """Max |(k^(3-alpha) * k^(alpha-2))(n) - 1| over n <= N."""
    alpha = validate_alpha(alpha)
    conv = np.convolve(kernel_sequence(3.0 - alpha, N).values,
                       kernel_sequence(alpha - 2.0, N).values)[: N + 1]
    return float(np.max(np.abs(conv - 1.0)))


def h_root_ratio_error(alpha: float, n: int = 400) -> float:
    """|h(n+1)/h(n) - z+|, the convergence of the ratio to the largest root."""
    h = h_sequence(alpha, n + 1).values
    return abs(h[n + 1] / h[n] - h_roots(alpha)[0])
