"""
Resolvent sequence of the fractional delay equation.

S(-lam..-1) = 0, S(0) = S(1) = S(2) = I and, for n >= 0,

    S(n+3) = 2 S(n+2) - S(n+1) + A (k * S)(n) + gamma (k * S)(n - lam)
             + [k(n+3) + (1 - alpha) k(n+2) + (alpha-1)(alpha-2)/2 k(n+1)] I

with k = k^(alpha-2). The leading coefficient is 1, so stepping is explicit.
The module also builds the solution kernel P = h * S, probes boundedness
and evaluates the contour-integral representation of S(n).
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from fracdelay.core.calculus import (
    causal_matrix_convolve,
    entry_norms,
    fractional_difference_values,
)
from fracdelay.core.kernels import grunwald_weights, h_sequence, kernel_sequence
from fracdelay.core.logging import get_logger
from fracdelay.core.models import OperatorSeq, ResolventSeq, Verdict
from fracdelay.core.validation import (
    CapacityError,
    DEFAULT_MAX_HORIZON,
    QuadratureError,
    ShapeError,
    validate_horizon,
    validate_problem,
    validate_radius,
)

logger = get_logger(__name__)

CAPACITY_THRESHOLD = 1e300
OVERFLOW_WARNING = 1e280
PROBE_TOLERANCE = 1e-3
KERNEL_CHECK_TERMS = 32
KERNEL_CHECK_TOL = 1e-8
SINGULAR_COND = 1e13


def resolvent_sequence(A, alpha: float, gamma: float, lam: int, N: int,
                       max_horizon: int = DEFAULT_MAX_HORIZON,
                       capacity: float = CAPACITY_THRESHOLD,
                       overflow_warning: float = OVERFLOW_WARNING) -> ResolventSeq:
    """
    Build S on -lam..N.

    The partial sums (k * S)(n) are kept so each step costs O(n d^2). The
    delay term is skipped entirely when gamma == 0, which makes runs with
    different lam bitwise identical.

    Args:
        A: d x d matrix (a scalar is a 1x1 matrix)
        alpha: Order in (2, 3)
        gamma: Real delay coefficient
        lam: Delay, positive integer
        N: Last index

    Returns:
        ResolventSeq with start = -lam

    Raises:
        ValidationError: On invalid parameters
        CapacityError: If a norm reaches the capacity threshold
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    N = validate_horizon(N, max_horizon=max_horizon)
    d = A.shape[0]

    k = kernel_sequence(alpha - 2.0, N + 3).values
    c = (alpha - 1.0) * (alpha - 2.0) / 2.0
    boundary = k[3:] + (1.0 - alpha) * k[2:-1] + c * k[1:-2]

    S = np.zeros((N + 1, d, d), dtype=complex)
    S[: min(N + 1, 3)] = np.eye(d)
    conv = np.zeros((N + 1, d, d), dtype=complex)
    eye = np.eye(d)
    warned = False

    for n in range(0, N - 2):
        conv[n] = np.tensordot(k[n::-1], S[: n + 1], axes=(0, 0))
        step = 2.0 * S[n + 2] - S[n + 1] + A @ conv[n] + boundary[n] * eye
        if gamma != 0.0 and n >= lam:
            step = step + gamma * conv[n - lam]
        S[n + 3] = step

        size = np.abs(step).max()
        if not np.isfinite(size) or size >= capacity:
            raise CapacityError(f"resolvent entry at n={n + 3} reached {size:.3e} "
                                f"(capacity {capacity:g}); reduce the horizon")
        if size >= overflow_warning and not warned:
            logger.warning("resolvent overflow risk: n=%d max_entry=%.3e", n + 3, size)
            warned = True

    values = np.concatenate([np.zeros((lam, d, d), dtype=complex), S])
    logger.debug("resolvent built: d=%d alpha=%g gamma=%g lam=%d N=%d", d, alpha, gamma, lam, N)
    return ResolventSeq(values=values, start=-lam, A=A, alpha=alpha, gamma=gamma, lam=lam)


def delayed(S: ResolventSeq) -> OperatorSeq:
    """S(n - lam) on 0..N; the stored zeros supply n < lam."""
    return OperatorSeq(S.values[: S.horizon + 1].copy(), start=0)


def _equation_terms(S: ResolventSeq) -> Tuple[np.ndarray, np.ndarray]:
    """Fractional difference of S and A S + gamma S(. - lam) on 0..N-3."""
    x = S.nonnegative()
    N = x.shape[0] - 1
    lhs = fractional_difference_values(x, S.alpha)
    shifted = S.values[: N - 2]
    rhs = S.A @ x[: N - 2] + S.gamma * shifted
    return lhs, rhs


def resolvent_residual(S: ResolventSeq,
                       window: Optional[Tuple[int, int]] = None) -> float:
    """
    Relative residual of the resolvent equation.

    Max over 0 <= n <= N - 3 (or over the inclusive window) of
    ||D S(n) - A S(n) - gamma S(n - lam)|| in the operator norm, relative to
    max(1, sup of both sides).

    Raises:
        ShapeError: If N < 6 or the window is outside 0..N-3
    """
    if S.horizon < 6:
        raise ShapeError(f"resolvent residual needs N >= 6, got {S.horizon}")
    lhs, rhs = _equation_terms(S)
    lo, hi = window if window is not None else (0, lhs.shape[0] - 1)
    if lo < 0 or hi >= lhs.shape[0] or lo > hi:
        raise ShapeError(f"window {window} outside 0..{lhs.shape[0] - 1}")

    diff = entry_norms(lhs[lo: hi + 1] - rhs[lo: hi + 1])
    scale = max(1.0, float(entry_norms(lhs[lo: hi + 1]).max()),
                float(entry_norms(rhs[lo: hi + 1]).max()))
    return float(diff.max()) / scale


def recursion_residual(S: ResolventSeq) -> float:
    """Relative residual of the stepping rule recomputed from the stored values."""
    x = S.nonnegative()
    N = x.shape[0] - 1
    if N < 3:
        return 0.0
    alpha, gamma, lam = S.alpha, S.gamma, S.lam
    k = kernel_sequence(alpha - 2.0, N).values
    conv = causal_matrix_convolve(k[:, None, None] * np.eye(S.dim), x)
    c = (alpha - 1.0) * (alpha - 2.0) / 2.0
    n = np.arange(N - 2)
    boundary = (k[n + 3] + (1.0 - alpha) * k[n + 2] + c * k[n + 1])[:, None, None] * np.eye(S.dim)
    delayed_conv = np.zeros_like(conv[: N - 2])
    if lam < N - 2:
        delayed_conv[lam:] = conv[: N - 2 - lam]
    rhs = 2.0 * x[2:-1] - x[1:-2] + S.A @ conv[: N - 2] + gamma * delayed_conv + boundary
    diff = entry_norms(x[3:] - rhs)
    scale = max(1.0, float(entry_norms(x[3:]).max()))
    return float(diff.max()) / scale


@dataclass
class ProbeResult:
    """Heuristic boundedness probe of a resolvent sequence."""
    sup_norm: float
    argmax: int
    tail_growth: float
    verdict: Verdict
    heuristic: bool = True

    def to_dict(self) -> dict:
        return {
            "sup_norm": self.sup_norm,
            "argmax": self.argmax,
            "tail_growth": self.tail_growth,
            "verdict": self.verdict.value,
            "heuristic": self.heuristic,
        }


def _quarter_maxima(norms: np.ndarray) -> Tuple[float, float]:
    N = len(norms) - 1
    third = norms[N // 2: (3 * N) // 4]
    last = norms[(3 * N) // 4:]
    return float(third.max()), float(last.max())


def boundedness_probe(S: OperatorSeq, tol: float = PROBE_TOLERANCE) -> ProbeResult:
    """
    Report sup ||S(n)||, its location and the tail growth.

    tail_growth is the max norm over the last quarter divided by the max
    over the third quarter; the verdict is bounded-looking iff it is at
    most 1 + tol. This is a heuristic, never a proof.

    Raises:
        ShapeError: If N < 64
    """
    if S.horizon < 64:
        raise ShapeError(f"boundedness probe needs N >= 64, got {S.horizon}")
    norms = S.norms()
    third, last = _quarter_maxima(norms)
    tail = last / third if third > 0 else (1.0 if last == 0 else np.inf)
    verdict = Verdict.BOUNDED_LOOKING if tail <= 1.0 + tol else Verdict.GROWING
    argmax = int(np.argmax(norms))
    logger.info("boundedness probe: sup_norm=%.6e argmax=%d tail_growth=%.6f verdict=%s",
                norms[argmax], argmax, tail, verdict.value)
    return ProbeResult(float(norms[argmax]), argmax, float(tail), verdict)


def growth_rate(S: OperatorSeq) -> float:
    """
    Empirical per-step geometric growth rate, at least 1.

    The tail growth over a quarter of the horizon, taken to the power 4/N.
    """
    norms = S.norms()
    N = len(norms) - 1
    if N < 8:
        return 1.0
    third, last = _quarter_maxima(norms)
    if third <= 0:
        return 1.0
    return max(1.0, (last / third) ** (1.0 / max(1, N // 4)))


def solution_kernel(A, alpha: float, gamma: float, lam: int, N: int,
                    max_horizon: int = DEFAULT_MAX_HORIZON,
                    capacity: float = CAPACITY_THRESHOLD,
                    overflow_warning: float = OVERFLOW_WARNING,
                    check_terms: int = KERNEL_CHECK_TERMS,
                    check_tol: float = KERNEL_CHECK_TOL) -> OperatorSeq:
    """
    Solution kernel P = h * S on 0..N.

    The literal product cancels catastrophically in double precision, so P
    comes from the equivalent recursion
    P(n) = delta(n) I - sum_{j=1}^{n} c(j) P(n-j) + A P(n-3) + gamma P(n-3-lam)
    with c the coefficients of (1 - w)^alpha. Only a short prefix of S is
    built, to compare the literal product; a mismatch is logged.

    Raises:
        ValidationError: On invalid parameters
        CapacityError: If N exceeds max_horizon or an entry reaches capacity
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    N = validate_horizon(N, max_horizon=max_horizon)
    d = A.shape[0]
    c = grunwald_weights(alpha, N, max_horizon=max_horizon).values

    P = np.zeros((N + 1, d, d), dtype=complex)
    P[0] = np.eye(d)
    warned = False
    for n in range(1, N + 1):
        acc = -np.tensordot(c[1: n + 1], P[n - 1:: -1], axes=(0, 0))
        if n >= 3:
            acc = acc + A @ P[n - 3]
            if gamma != 0.0 and n - 3 - lam >= 0:
                acc = acc + gamma * P[n - 3 - lam]
        P[n] = acc

        size = np.abs(acc).max()
        if not np.isfinite(size) or size >= capacity:
            raise CapacityError(f"solution kernel entry at n={n} reached {size:.3e} "
                                f"(capacity {capacity:g}); reduce the horizon")
        if size >= overflow_warning and not warned:
            logger.warning("solution kernel overflow risk: n=%d max_entry=%.3e", n, size)
            warned = True

    kernel = OperatorSeq(P, start=0)
    terms = min(check_terms, N)
    if terms > 0:
        prefix = resolvent_sequence(A, alpha, gamma, lam, terms)
        mismatch = kernel_product_residual(prefix, terms, kernel)
        if mismatch > check_tol:
            logger.warning("kernel product mismatch: terms=%d rel_err=%.3e", terms + 1, mismatch)
    return kernel


def resolvent_kernel(S: ResolventSeq, check_terms: int = KERNEL_CHECK_TERMS,
                     check_tol: float = KERNEL_CHECK_TOL) -> OperatorSeq:
    """Solution kernel on the horizon of an already built resolvent."""
    return solution_kernel(S.A, S.alpha, S.gamma, S.lam, S.horizon,
                           max_horizon=max(S.horizon, DEFAULT_MAX_HORIZON),
                           check_terms=check_terms, check_tol=check_tol)


def kernel_product_residual(S: ResolventSeq, n_max: int = KERNEL_CHECK_TERMS,
                            kernel: Optional[OperatorSeq] = None) -> float:
    """Max relative deviation of the literal (h * S)(n) from P(n) for n <= n_max."""
    n_max = min(n_max, S.horizon)
    if kernel is None:
        kernel = resolvent_kernel(S, check_terms=0)
    h = h_sequence(S.alpha, n_max).values
    x = S.nonnegative()[: n_max + 1]
    literal = np.zeros_like(x)
    for k in range(n_max + 1):
        literal[k:] += h[k] * x[: n_max + 1 - k]
    P = kernel.nonnegative()[: n_max + 1]
    diff = entry_norms(literal - P)
    return float((diff / np.maximum(1.0, entry_norms(P))).max())


def _contour_nodes(radius: float, nodes: int) -> np.ndarray:
    theta = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    return radius * np.exp(1j * theta)


def contour_symbol(z: np.ndarray, alpha: float, gamma: float, lam: int) -> np.ndarray:
    """z^3 (1 - 1/z)^alpha - gamma z^(-lam), principal branch."""
    return z ** 3 * (1.0 - 1.0 / z) ** alpha - gamma * z ** (-float(lam))


def _contour_resolvents(A: np.ndarray, alpha: float, gamma: float, lam: int,
                        z: np.ndarray) -> np.ndarray:
    """q(z) [E(z) - A]^(-1) at every node; raises QuadratureError at a singular node."""
    d = A.shape[0]
    M = contour_symbol(z, alpha, gamma, lam)[:, None, None] * np.eye(d) - A
    cond = np.linalg.cond(M)
    bad = ~np.isfinite(cond) | (cond > SINGULAR_COND)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureError(f"singular contour integrand at z={z[i]:.6g} "
                              f"({int(bad.sum())} bad nodes)", point=complex(z[i]))
    q = z ** 2 + (1.0 - alpha) * z + (alpha - 1.0) * (alpha - 2.0) / 2.0
    eye = np.broadcast_to(np.eye(d, dtype=complex), M.shape)
    return q[:, None, None] * np.linalg.solve(M, eye)


def _contour_values(A: np.ndarray, alpha: float, gamma: float, lam: int,
                    ns: Iterable[int], radius: float, nodes: int) -> Dict[int, np.ndarray]:
    z = _contour_nodes(radius, nodes)
    R = _contour_resolvents(A, alpha, gamma, lam, z)
    return {n: np.tensordot(z ** (n + 1), R, axes=(0, 0)) / nodes for n in ns}


def _relative_change(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b, 2) / max(1.0, np.linalg.norm(b, 2)))


def contour_resolvent(A, alpha: float, gamma: float, lam: int, n: int,
                      radius: float = 0.95, nodes: int = 4096,
                      convergence_tol: float = 1e-6) -> np.ndarray:
    """
    Trapezoidal approximation of S(n) from the contour integral.

    Evaluates (1/2 pi i) closed integral over |z| = radius of
    z^n q(z) [z^3 (1 - 1/z)^alpha - gamma z^(-lam) - A]^(-1) dz at midpoint
    nodes, with q(z) = z^2 + (1 - alpha) z + (alpha-1)(alpha-2)/2. The result
    is compared with 2M nodes and a warning is logged when the relative
    change exceeds convergence_tol.

    Raises:
        QuadratureError: If the integrand is singular at a node
        ShapeError: If nodes < 256 or n < 0
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    radius = validate_radius(radius)
    if nodes < 256:
        raise ShapeError(f"contour quadrature needs at least 256 nodes, got {nodes}")
    if n < 0:
        raise ShapeError(f"contour index must be non-negative, got {n}")

    value = _contour_values(A, alpha, gamma, lam, [n], radius, nodes)[n]
    fine = _contour_values(A, alpha, gamma, lam, [n], radius, 2 * nodes)[n]
    change = _relative_change(value, fine)
    if change > convergence_tol:
        logger.warning("contour quadrature not converged: n=%d r=%.4f M=%d rel_change=%.3e",
                       n, radius, nodes, change)
    return value


@dataclass
class ContourReport:
    """Outcome of validating the contour representation against the recursion."""
    radius: float
    nodes: int
    disagreement: float
    passed: bool
    convergence_change: float
    growth_rate: float
    fallback_radius: Optional[float] = None
    fallback_disagreement: Optional[float] = None
    fallback_passed: Optional[bool] = None
    values: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    oracle: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def validated_radius(self) -> Optional[float]:
        """The radius whose quadrature matched the recursion, if any."""
        if self.passed:
            return self.radius
        if self.fallback_passed:
            return self.fallback_radius
        return None

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "nodes": self.nodes,
            "disagreement": self.disagreement,
            "passed": self.passed,
            "convergence_change": self.convergence_change,
            "growth_rate": self.growth_rate,
            "fallback_radius": self.fallback_radius,
            "fallback_disagreement": self.fallback_disagreement,
            "fallback_passed": self.fallback_passed,
            "validated_radius": self.validated_radius,
        }


def validate_contour(A, alpha: float, gamma: float, lam: int, ns: Iterable[int] = range(3, 11),
                     radius: float = 0.95, nodes: int = 4096, agreement_tol: float = 1e-8,
                     convergence_tol: float = 1e-6, fallback_radius: float = 0.0,
                     probe_horizon: int = 256) -> ContourReport:
    """
    Compare contour values with the recursion at each n in ns.

    When the configured radius disagrees, a radius outside the empirical
    growth rate (max(1.05, 1.25 * rate) unless fallback_radius > 0) is
    evaluated too and the discrepancy is logged. Deterministic.
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    ns = sorted(set(int(n) for n in ns))
    horizon = max(probe_horizon, ns[-1])
    S = resolvent_sequence(A, alpha, gamma, lam, horizon)
    oracle = {n: S.at(n) for n in ns}
    rate = growth_rate(S)

    def disagreement(values: Dict[int, np.ndarray]) -> float:
        return max(_relative_change(values[n], oracle[n]) for n in ns)

    try:
        values = _contour_values(A, alpha, gamma, lam, ns, radius, nodes)
        fine = _contour_values(A, alpha, gamma, lam, ns, radius, 2 * nodes)
        change = max(_relative_change(values[n], fine[n]) for n in ns)
        err = disagreement(values)
    except QuadratureError as e:
        logger.warning("contour quadrature singular at r=%.4f: %s", radius, e)
        values, change, err = {}, float("inf"), float("inf")

    if change > convergence_tol:
        logger.warning("contour quadrature not converged: r=%.4f M=%d rel_change=%.3e",
                       radius, nodes, change)

    report = ContourReport(radius=radius, nodes=nodes, disagreement=err,
                           passed=err <= agreement_tol, convergence_change=change,
                           growth_rate=rate, values=values, oracle=oracle)
    if report.passed:
        logger.info("contour validated: r=%.4f disagreement=%.3e", radius, err)
        return report

    fallback = fallback_radius if fallback_radius > 0 else max(1.05, 1.25 * rate)
    fb_values = _contour_values(A, alpha, gamma, lam, ns, fallback, nodes)
    fb_err = disagreement(fb_values)
    report.fallback_radius = fallback
    report.fallback_disagreement = fb_err
    report.fallback_passed = fb_err <= agreement_tol
    logger.warning("contour disagreement: r=%.4f err=%.3e fallback_r=%.4f fallback_err=%.3e",
                   radius, err, fallback, fb_err)
    return report
