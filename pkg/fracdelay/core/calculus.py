"""
Finite convolution, forward differences and the fractional sum and difference.

All operators act on finite-horizon sequences stored along axis 0. Indices
below 0 are never read; the fractional difference of order alpha in (2, 3)
consumes three trailing points, so its output horizon is N - 3.
"""

from typing import Tuple, Union

import numpy as np
from scipy.signal import fftconvolve

from fracdelay.core.kernels import kernel_sequence
from fracdelay.core.models import HSeq, KernelSeq, OperatorSeq, Signal
from fracdelay.core.validation import (
    DomainError,
    ShapeError,
    validate_alpha,
    validate_order,
)

Scalars = Union[np.ndarray, KernelSeq, HSeq, list]
Sequence = Union[Signal, OperatorSeq]

CONV_METHODS = ("direct", "fft")


def _scalars(a: Scalars) -> np.ndarray:
    if isinstance(a, (KernelSeq, HSeq)):
        return np.asarray(a.values)
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ShapeError(f"scalar sequence must be 1-D, got shape {arr.shape}")
    return arr


def _values(g: Sequence) -> np.ndarray:
    if isinstance(g, OperatorSeq):
        return g.nonnegative()
    return g.values


def _wrap(template: Sequence, values: np.ndarray) -> Sequence:
    if isinstance(template, OperatorSeq):
        return OperatorSeq(values, start=0)
    return Signal(values)


def causal_convolve(a: np.ndarray, x: np.ndarray, method: str = "direct") -> np.ndarray:
    """
    Cauchy product of a scalar sequence with an array along axis 0.

    The result has the length of x; entries of a beyond it are ignored.
    """
    L = x.shape[0]
    a = a[:L]
    if method == "fft":
        shape = (len(a),) + (1,) * (x.ndim - 1)
        return fftconvolve(a.reshape(shape), x, axes=0)[:L]
    if method != "direct":
        raise DomainError(f"unknown convolution method {method!r}; expected {CONV_METHODS}")

    dtype = np.result_type(a.dtype, x.dtype)
    out = np.zeros(x.shape, dtype=dtype)
    for k in np.flatnonzero(a):
        out[k:] += a[k] * x[: L - k]
    return out


def convolve(a: Scalars, g: Sequence, method: str = "direct") -> Sequence:
    """
    (a * g)(n) = sum_{j=0}^{n} a(n - j) g(j) on 0..N.

    Args:
        a: Scalar sequence on 0..N
        g: Signal, or OperatorSeq restricted to 0..N
        method: "direct" (exact O(N^2)) or "fft"

    Returns:
        Same kind as g, horizon N

    Raises:
        ShapeError: If the horizons differ
    """
    a = _scalars(a)
    x = _values(g)
    if len(a) != x.shape[0]:
        raise ShapeError(f"horizon mismatch: scalar sequence has {len(a) - 1}, "
                         f"argument has {x.shape[0] - 1}")
    return _wrap(g, causal_convolve(a, x, method))


def causal_matrix_convolve(P: np.ndarray, x: np.ndarray, method: str = "direct") -> np.ndarray:
    """
    Matrix-kernel Cauchy product (P * x)(n) = sum_j P(n - j) x(j).

    P has shape (L, d, d); x has shape (L, d) or (L, d, e). The result has
    the shape of x.
    """
    L = x.shape[0]
    P = P[:L]
    if method == "fft":
        if x.ndim == 2:
            return fftconvolve(P, x[:, None, :], axes=0)[:L].sum(axis=2)
        return fftconvolve(P[:, :, :, None], x[:, None, :, :], axes=0)[:L].sum(axis=2)
    if method != "direct":
        raise DomainError(f"unknown convolution method {method!r}; expected {CONV_METHODS}")

    out = np.zeros(x.shape, dtype=complex)
    for k in range(P.shape[0]):
        if not P[k].any():
            continue
        if x.ndim == 2:
            out[k:] += x[: L - k] @ P[k].T
        else:
            out[k:] += P[k] @ x[: L - k]
    return out


def matrix_convolve(P: Union[OperatorSeq, np.ndarray], g: Sequence,
                    method: str = "direct") -> Sequence:
    """
    Convolve an operator sequence with a signal or another operator sequence.

    Raises:
        ShapeError: On horizon or dimension mismatch
    """
    kernel = P.nonnegative() if isinstance(P, OperatorSeq) else np.asarray(P)
    x = _values(g)
    if kernel.shape[0] != x.shape[0]:
        raise ShapeError(f"horizon mismatch: kernel has {kernel.shape[0] - 1}, "
                         f"argument has {x.shape[0] - 1}")
    if kernel.shape[2] != x.shape[1]:
        raise ShapeError(f"dimension mismatch: kernel is {kernel.shape[1]}x{kernel.shape[2]}, "
                         f"argument has dimension {x.shape[1]}")
    return _wrap(g, causal_matrix_convolve(kernel, x, method))


def forward_difference(u: Sequence, m: int = 1) -> Sequence:
    """
    m-fold forward difference, horizon N - m.

    Raises:
        ShapeError: If m < 1 or m > N
    """
    x = _values(u)
    N = x.shape[0] - 1
    if m < 1 or m > N:
        raise ShapeError(f"difference order must lie in 1..{N}, got {m}")
    return _wrap(u, np.diff(x, n=m, axis=0))


def fractional_sum(u: Sequence, beta: float, method: str = "direct") -> Sequence:
    """
    Fractional sum (k^beta * u) of order beta in (0, 1].

    Raises:
        DomainError: If beta is outside (0, 1]
    """
    beta = validate_order(beta, upper=1.0)
    N = _values(u).shape[0] - 1
    return convolve(kernel_sequence(beta, N), u, method)


def fractional_difference_values(x: np.ndarray, alpha: float,
                                 method: str = "direct") -> np.ndarray:
    """Third difference of (k^(3-alpha) * x) along axis 0; length shrinks by 3."""
    N = x.shape[0] - 1
    w = causal_convolve(kernel_sequence(3.0 - alpha, N).values, x, method)
    return np.diff(w, n=3, axis=0)


def fractional_difference(u: Sequence, alpha: float, method: str = "direct") -> Sequence:
    """
    Riemann-Liouville difference of order alpha in (2, 3).

    Matrix sequences are differenced entrywise (columnwise action).

    Args:
        u: Signal or OperatorSeq on 0..N, N >= 3
        alpha: Order in (2, 3)

    Returns:
        Same kind as u on 0..N-3

    Raises:
        DomainError: If alpha is outside (2, 3)
        ShapeError: If N < 3
    """
    alpha = validate_alpha(alpha)
    x = _values(u)
    if x.shape[0] < 4:
        raise ShapeError(f"fractional difference needs N >= 3, got N = {x.shape[0] - 1}")
    return _wrap(u, fractional_difference_values(x, alpha, method))


def fractional_difference_initial(P: Sequence, alpha: float) -> Tuple[np.ndarray, ...]:
    """
    Boundary terms of the convolution rule for the fractional difference.

    For b * P the rule reads
    D(b*P)(n) = (b * DP)(n) + b(n+3) C0 + b(n+2) C1 + b(n+1) C2
    with C0 = P(0), C1 = P(1) - alpha P(0) and
    C2 = P(2) - alpha P(1) + alpha (alpha - 1)/2 P(0).
    """
    x = _values(P)
    if x.shape[0] < 3:
        raise ShapeError("boundary terms need P(0), P(1) and P(2)")
    c0 = x[0]
    c1 = x[1] - alpha * x[0]
    c2 = x[2] - alpha * x[1] + alpha * (alpha - 1.0) / 2.0 * x[0]
    return c0, c1, c2


def conv_diff_identity_residual(b: Scalars, P: Sequence, alpha: float,
                                method: str = "direct") -> float:
    """
    Relative residual of the convolution rule for the fractional difference.

    Compares D(b*P)(n) with (b * DP)(n) plus the three boundary terms over
    0 <= n <= N - 3, relative to max(1, sup of the left side).

    Raises:
        ShapeError: If the horizons differ or N < 6
    """
    alpha = validate_alpha(alpha)
    b = _scalars(b)
    x = _values(P)
    N = x.shape[0] - 1
    if len(b) != N + 1:
        raise ShapeError(f"horizon mismatch: b has {len(b) - 1}, P has {N}")
    if N < 6:
        raise ShapeError(f"identity check needs N >= 6, got {N}")

    lhs = fractional_difference_values(causal_convolve(b, x, method), alpha, method)
    rhs = causal_convolve(b[: N - 2], fractional_difference_values(x, alpha, method), method)
    c0, c1, c2 = fractional_difference_initial(P, alpha)
    n = np.arange(N - 2)
    shape = (-1,) + (1,) * (x.ndim - 1)
    rhs = rhs + (b[n + 3].reshape(shape) * c0 + b[n + 2].reshape(shape) * c1
                 + b[n + 1].reshape(shape) * c2)

    diff = entry_norms(lhs - rhs)
    scale = max(1.0, float(entry_norms(lhs).max()))
    return float(diff.max()) / scale


def entry_norms(x: np.ndarray) -> np.ndarray:
    """Euclidean norm of vectors or spectral norm of matrices along axis 0."""
    if x.ndim == 1:
        return np.abs(x)
    if x.ndim == 2:
        return np.linalg.norm(x, axis=1)
    return np.linalg.norm(x, ord=2, axis=(1, 2))
