"""
Truncated maximal-regularity operators and their empirical norms.

E acts by the kernel A P(n) and F by P(n - lam), where P = h * S is the
solution kernel. Both are lower-triangular block-Toeplitz on 0..N:

    (T f)(n) = sum_{j <= n} c(n - j) f(j)

Norm estimates here are evidence about a truncation, never a proof of
maximal regularity.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import svdvals

from fracdelay.analysis.symbol import (
    CircleGrid,
    condition_C_check,
    e_symbol,
    f_symbol,
    unstable_mode_count,
)
from fracdelay.core.calculus import causal_matrix_convolve
from fracdelay.core.logging import get_logger
from fracdelay.core.models import (
    OperatorKind,
    OperatorSeq,
    ProblemParams,
    ProblemSpec,
    Signal,
    Solution,
    Verdict,
)
from fracdelay.core.resolvent import (
    CAPACITY_THRESHOLD,
    OVERFLOW_WARNING,
    boundedness_probe,
    resolvent_sequence,
    solution_kernel,
)
from fracdelay.core.validation import (
    DEFAULT_MAX_HORIZON,
    CapacityError,
    ShapeError,
    SpectralHitError,
    check_increasing,
    validate_exponent,
    validate_horizon,
)

logger = get_logger(__name__)

DENSE_LIMIT = 4096
TREND_TOL = 1.05
POWER_ITERATIONS = 30


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """
    Lower-triangular block-Toeplitz operator on 0..N.

    Attributes:
        kind: E_alpha or F_alpha; None for a kernel supplied directly
        kernel: Coefficients c(0..N), shape (N+1, d, d)
        params: Parameters the kernel was built from, if any
    """
    kind: Optional[OperatorKind]
    kernel: np.ndarray
    params: Optional[ProblemParams] = None

    @classmethod
    def from_kernel(cls, kernel) -> "TruncatedOperator":
        """Wrap explicit coefficients; scalars are promoted to 1x1 blocks."""
        arr = np.asarray(kernel.nonnegative() if isinstance(kernel, OperatorSeq) else kernel,
                         dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None, None]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"kernel must have shape (N+1, d, d), got {arr.shape}")
        return cls(kind=None, kernel=arr)

    @property
    def dim(self) -> int:
        return self.kernel.shape[1]

    @property
    def horizon(self) -> int:
        return self.kernel.shape[0] - 1

    @property
    def size(self) -> int:
        """Rows of the dense matrix, (N+1) d."""
        return self.kernel.shape[0] * self.dim

    def truncate(self, N: int) -> "TruncatedOperator":
        return TruncatedOperator(self.kind, self.kernel[: N + 1], self.params)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value if self.kind else "kernel",
            "dim": self.dim,
            "horizon": self.horizon,
            "kernel_norm_max": float(np.linalg.norm(self.kernel, ord=2, axis=(1, 2)).max()),
        }


def build(kind: OperatorKind, params: ProblemParams, N: int,
          max_horizon: int = DEFAULT_MAX_HORIZON,
          capacity: float = CAPACITY_THRESHOLD,
          overflow_warning: float = OVERFLOW_WARNING) -> TruncatedOperator:
    """
    Materialize E or F on 0..N from the solution kernel.

    E(0) = A because P(0) = I; F vanishes below lam.

    Raises:
        CapacityError: If N exceeds max_horizon or the kernel overflows
    """
    P = solution_kernel(params.A, params.alpha, params.gamma, params.lam, N,
                        max_horizon=max_horizon, capacity=capacity,
                        overflow_warning=overflow_warning).nonnegative()
    N = P.shape[0] - 1
    if kind is OperatorKind.E_ALPHA:
        kernel = params.A @ P
    else:
        kernel = np.zeros_like(P)
        if params.lam <= N:
            kernel[params.lam:] = P[: N + 1 - params.lam]

    peak = float(np.abs(kernel).max())
    if peak > overflow_warning:
        logger.warning("operator kernel overflow risk: kind=%s max_entry=%.3e", kind.value, peak)
    logger.debug("operator built: kind=%s d=%d N=%d", kind.value, params.dim, N)
    return TruncatedOperator(kind=kind, kernel=kernel, params=params)


def _as_values(T: TruncatedOperator, f) -> np.ndarray:
    x = f.values if isinstance(f, Signal) else np.asarray(f, dtype=complex)
    if x.shape[0] != T.horizon + 1 or x.shape[1] != T.dim:
        raise ShapeError(f"argument of shape {x.shape} does not match operator horizon "
                         f"{T.horizon} and dimension {T.dim}")
    return x


def apply(T: TruncatedOperator, f):
    """
    (T f)(n) = sum_{j <= n} c(n - j) f(j).

    Accepts a Signal (returns a Signal) or an array of shape (N+1, d) or
    (N+1, d, e) acting columnwise.

    Raises:
        ShapeError: If the horizon or dimension differs
    """
    x = _as_values(T, f)
    out = causal_matrix_convolve(T.kernel, x)
    return Signal(out) if isinstance(f, Signal) else out


def apply_adjoint(T: TruncatedOperator, y):
    """(T* y)(j) = sum_{n >= j} c(n - j)^H y(n)."""
    x = _as_values(T, y)
    adjoint = np.conj(np.swapaxes(T.kernel, 1, 2))
    out = causal_matrix_convolve(adjoint, x[::-1])[::-1]
    return Signal(out) if isinstance(y, Signal) else out


def dense_matrix(T: TruncatedOperator, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """
    The (N+1) d square lower block-triangular matrix of T.

    Raises:
        CapacityError: If (N+1) d exceeds dense_limit
    """
    if T.size > dense_limit:
        raise CapacityError(f"dense matrix of size {T.size} exceeds the limit {dense_limit}")
    L, d = T.kernel.shape[0], T.dim
    lag = np.arange(L)[:, None] - np.arange(L)[None, :]
    blocks = T.kernel[np.clip(lag, 0, None)] * (lag >= 0)[:, :, None, None]
    return blocks.transpose(0, 2, 1, 3).reshape(L * d, L * d)


def operator_norm_p2(T: TruncatedOperator, dense_limit: int = DENSE_LIMIT) -> float:
    """
    Exact l^2 norm of the truncation: the largest singular value.

    Raises:
        CapacityError: Beyond the dense limit
    """
    return float(svdvals(dense_matrix(T, dense_limit))[0])


def _lp_norms(x: np.ndarray, p: float) -> np.ndarray:
    """l^p(C^d) norm of each column of an (L, d, e) array."""
    return np.sum(np.linalg.norm(x, axis=1) ** p, axis=0) ** (1.0 / p)


def _dual(x: np.ndarray, p: float) -> np.ndarray:
    """Norming functional of each column in l^p, as an l^q vector of unit norm."""
    mags = np.linalg.norm(x, axis=1, keepdims=True)
    norms = _lp_norms(x, p)
    norms = np.where(norms > 0, norms, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mags > 0, mags ** (p - 2.0), 0.0)
    return scale * x / norms ** (p - 1.0)


def operator_norm_lower_bound(T: TruncatedOperator, p: float = 2.0, trials: int = 256,
                              seed: Optional[int] = 0,
                              iterations: int = POWER_ITERATIONS,
                              dense_limit: int = DENSE_LIMIT) -> float:
    """
    Seeded lower bound on the l^p norm of T by a nonlinear power method.

    Each trial starts from a random unit-l^p input and alternates
    x <- dual_q(T* dual_p(T x)). The result is the largest ||T x||_p seen.
    Trial k depends only on the seed and k, so adding trials never lowers
    the bound.

    Raises:
        DomainError: If p is outside (1, inf)
    """
    p = validate_exponent(p)
    q = p / (p - 1.0)
    L, d = T.kernel.shape[0], T.dim
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((trials, L, d, 2))
    x = np.moveaxis(draws[..., 0] + 1j * draws[..., 1], 0, -1)
    x = x / _lp_norms(x, p)

    if T.size <= dense_limit:
        M = dense_matrix(T, dense_limit)
        MH = M.conj().T

        def forward(v):
            return (M @ v.reshape(L * d, -1)).reshape(L, d, -1)

        def backward(v):
            return (MH @ v.reshape(L * d, -1)).reshape(L, d, -1)
    else:
        def forward(v):
            return apply(T, v)

        def backward(v):
            return apply_adjoint(T, v)

    best = np.zeros(trials)
    for _ in range(iterations + 1):
        y = forward(x)
        best = np.maximum(best, _lp_norms(y, p))
        z = backward(_dual(y, p))
        if not np.any(z):
            break
        x = _dual(z, q)
        scale = _lp_norms(x, p)
        x = x / np.where(scale > 0, scale, 1.0)

    estimate = float(best.max())
    logger.debug("lower bound: p=%g trials=%d seed=%s estimate=%.6e", p, trials, seed, estimate)
    return estimate


def estimate_norm(T: TruncatedOperator, p: float = 2.0, trials: int = 256,
                  seed: Optional[int] = 0, dense_limit: int = DENSE_LIMIT,
                  iterations: int = POWER_ITERATIONS) -> Dict[str, object]:
    """Exact singular value for p = 2 when it fits, the seeded lower bound otherwise."""
    if p == 2.0 and T.size <= dense_limit:
        return {"estimate": operator_norm_p2(T, dense_limit), "method": "svd", "seed": None}
    value = operator_norm_lower_bound(T, p, trials, seed, iterations, dense_limit)
    return {"estimate": value, "method": "power-lower-bound", "seed": seed}


def trend_verdict(estimates: Sequence[float], tol: float = TREND_TOL) -> Verdict:
    """
    MR-consistent iff each estimate is at most tol times the previous one.

    A 0/0 step counts as ratio 1; a jump away from zero is growth.
    """
    for prev, cur in zip(estimates, estimates[1:]):
        if not np.isfinite(cur):
            return Verdict.INCONSISTENT
        if prev == 0.0:
            if cur > 0.0:
                return Verdict.INCONSISTENT
            continue
        if cur / prev > tol:
            return Verdict.INCONSISTENT
    return Verdict.MR_CONSISTENT


def _ratios(estimates: Sequence[float]) -> List[float]:
    out = []
    for prev, cur in zip(estimates, estimates[1:]):
        if prev == 0.0:
            out.append(1.0 if cur == 0.0 else float("inf"))
        else:
            out.append(cur / prev)
    return out


@dataclass
class TrendTable:
    """Per-horizon norm estimates of one operator."""
    name: str
    horizons: List[int]
    estimates: List[float]
    methods: List[str]
    ratios: List[float]
    verdict: Verdict
    p: float = 2.0
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.name,
            "p": self.p,
            "seed": self.seed,
            "rows": [{"N": n, "estimate": e, "method": m}
                     for n, e, m in zip(self.horizons, self.estimates, self.methods)],
            "ratios": self.ratios,
            "verdict": self.verdict.value,
        }


def trend_for_operator(name: str, make: Callable[[int], TruncatedOperator],
                       horizons: Sequence[int], p: float = 2.0, trials: int = 256,
                       seed: Optional[int] = 0, tol: float = TREND_TOL,
                       dense_limit: int = DENSE_LIMIT,
                       iterations: int = POWER_ITERATIONS) -> TrendTable:
    """Estimate ||T_N|| for each horizon and apply trend_verdict."""
    horizons = list(check_increasing(horizons))
    estimates, methods = [], []
    for N in horizons:
        try:
            result = estimate_norm(make(N), p, trials, seed, dense_limit, iterations)
        except CapacityError as e:
            logger.warning("norm estimate unavailable: kind=%s N=%d reason=%s", name, N, e)
            result = {"estimate": float("inf"), "method": "overflow"}
        estimates.append(float(result["estimate"]))
        methods.append(str(result["method"]))
    verdict = trend_verdict(estimates, tol)
    table = TrendTable(name, horizons, estimates, methods, _ratios(estimates), verdict, p,
                       seed if any(m == "power-lower-bound" for m in methods) else None)
    logger.info("regularity trend: kind=%s estimates=%s verdict=%s",
                name, ["%.4e" % e for e in estimates], verdict.value)
    return table


@dataclass
class RegularityTrend:
    """Trend tables for E and F and the combined verdict."""
    tables: List[TrendTable] = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        if all(t.verdict is Verdict.MR_CONSISTENT for t in self.tables):
            return Verdict.MR_CONSISTENT
        return Verdict.INCONSISTENT

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "operators": [t.to_dict() for t in self.tables]}


def regularity_trend(params: ProblemParams, horizons: Sequence[int], p: float = 2.0,
                     trials: int = 256, seed: Optional[int] = 0, tol: float = TREND_TOL,
                     dense_limit: int = DENSE_LIMIT,
                     iterations: int = POWER_ITERATIONS,
                     max_horizon: int = DEFAULT_MAX_HORIZON,
                     capacity: float = CAPACITY_THRESHOLD) -> RegularityTrend:
    """
    Norm estimates of E and F over increasing horizons.

    The verdict is MR-consistent iff both operators are.
    """
    tables = []
    for kind in (OperatorKind.E_ALPHA, OperatorKind.F_ALPHA):
        tables.append(trend_for_operator(
            kind.value, lambda N, kind=kind: build(kind, params, N, max_horizon, capacity),
            horizons, p, trials, seed, tol, dense_limit, iterations))
    return RegularityTrend(tables)


def symbol_supremum(kind: OperatorKind, params: ProblemParams, grid: CircleGrid) -> float:
    """sup over the grid of the spectral norm of the E or F multiplier."""
    fn = e_symbol if kind is OperatorKind.E_ALPHA else f_symbol
    values = fn(params.A, params.alpha, params.gamma, params.lam, grid.nodes)
    return float(np.linalg.norm(values, ord=2, axis=(1, 2)).max())


def kernel_symbol_supremum(T: TruncatedOperator, grid: CircleGrid) -> float:
    """sup over the grid of ||sum_n c(n) e^{-int}|| for the stored kernel."""
    n = np.arange(T.kernel.shape[0])
    phases = np.exp(-1j * np.outer(grid.nodes, n))
    values = np.tensordot(phases, T.kernel, axes=(1, 0))
    return float(np.linalg.norm(values, ord=2, axis=(1, 2)).max())


@dataclass
class SymbolAgreement:
    """Truncated l^2 norm against the symbol supremum."""
    kind: str
    horizon: int
    truncated_norm: float
    symbol_sup: float
    relative_gap: float
    agrees: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "N": self.horizon,
            "truncated_norm": self.truncated_norm,
            "symbol_sup": self.symbol_sup,
            "relative_gap": self.relative_gap,
            "agrees": self.agrees,
        }


def compare_with_symbol(T: TruncatedOperator, symbol_sup: float, tol: float = 0.05,
                        dense_limit: int = DENSE_LIMIT) -> SymbolAgreement:
    """Relative gap between the truncated l^2 norm and a symbol supremum."""
    norm = operator_norm_p2(T, dense_limit)
    gap = abs(norm - symbol_sup) / max(symbol_sup, 1e-300)
    name = T.kind.value if T.kind else "kernel"
    return SymbolAgreement(name, T.horizon, norm, symbol_sup, gap, bool(gap <= tol))


def norm_symbol_agreement(params: ProblemParams, N: int, grid: CircleGrid,
                          kind: OperatorKind = OperatorKind.E_ALPHA, tol: float = 0.05,
                          dense_limit: int = DENSE_LIMIT,
                          max_horizon: int = DEFAULT_MAX_HORIZON,
                          capacity: float = CAPACITY_THRESHOLD) -> SymbolAgreement:
    """
    Compare ||E_N|| (or ||F_N||) with the multiplier supremum.

    The two agree in the limit only when the kernel is summable; the gap is
    reported as evidence.

    Raises:
        SpectralHitError: If the multiplier is singular on the grid
        CapacityError: Beyond the dense limit
    """
    T = build(kind, params, N, max_horizon, capacity)
    result = compare_with_symbol(T, symbol_supremum(kind, params, grid), tol, dense_limit)
    logger.info("norm vs symbol: kind=%s N=%d norm=%.6e sup=%.6e gap=%.3e",
                result.kind, N, result.truncated_norm, result.symbol_sup, result.relative_gap)
    return result


def reconstruction_residual(spec: ProblemSpec, solution: Solution,
                            max_horizon: int = DEFAULT_MAX_HORIZON,
                            capacity: float = CAPACITY_THRESHOLD) -> float:
    """
    Max relative deviation of D^alpha u(n) from (E f)(n-3) + gamma (F f)(n-3) + f(n).

    Checked for every n in 0..N; the operator terms vanish for n < 3.
    """
    N = spec.N
    params = spec.params
    f = spec.f.values
    Ef = apply(build(OperatorKind.E_ALPHA, params, N, max_horizon, capacity), f)
    Ff = apply(build(OperatorKind.F_ALPHA, params, N, max_horizon, capacity), f)
    rhs = f.copy()
    if N >= 3:
        rhs[3:] += Ef[: N - 2] + params.gamma * Ff[: N - 2]
    lhs = solution.dalpha_u.values
    scale = max(1.0, float(np.abs(lhs).max()), float(np.abs(rhs).max()))
    return float(np.linalg.norm(lhs - rhs, axis=1).max()) / scale


@dataclass
class ResolventBoundResult:
    """sup ||S(n)|| against 4 / (omega_f - ||A||) with supporting evidence."""
    horizon: int
    sup_norm: float
    bound: float
    holds: bool
    condition_c: bool
    neumann_ok: Optional[bool]
    unstable_modes: Optional[int]
    probe_verdict: Optional[str]

    def to_dict(self) -> dict:
        return {
            "N": self.horizon,
            "sup_norm": self.sup_norm,
            "bound": self.bound,
            "holds": self.holds,
            "condition_c": self.condition_c,
            "neumann_ok": self.neumann_ok,
            "unstable_modes": self.unstable_modes,
            "probe_verdict": self.probe_verdict,
        }


def resolvent_bound_check(params: ProblemParams, N: int, grid: CircleGrid,
                          max_horizon: int = DEFAULT_MAX_HORIZON,
                          capacity: float = CAPACITY_THRESHOLD) -> ResolventBoundResult:
    """
    Evaluate sup_{n <= N} ||S(n)|| < 4 / (omega_f - ||A||).

    The bound is infinite when condition C fails. Overflow of S counts as
    an infinite supremum; a horizon above max_horizon is still rejected.
    """
    N = validate_horizon(N, max_horizon=max_horizon)
    cond = condition_C_check(params.A, params.alpha, params.gamma, params.lam, grid)
    bound = 4.0 / cond.margin_low if cond.margin_low > 0 else float("inf")

    probe = None
    try:
        S = resolvent_sequence(params.A, params.alpha, params.gamma, params.lam, N,
                               max_horizon=max_horizon, capacity=capacity)
        sup = float(S.norms().max())
        if N >= 64:
            probe = boundedness_probe(S).verdict.value
    except CapacityError as e:
        logger.warning("resolvent overflowed during bound check: %s", e)
        sup = float("inf")

    try:
        modes = unstable_mode_count(params.A, params.alpha, params.gamma, params.lam, grid.m)
    except SpectralHitError as e:
        logger.warning("unstable mode count unavailable: %s", e)
        modes = None

    holds = bool(cond.holds and sup < bound)
    logger.info("resolvent bound: N=%d sup=%.6e bound=%.6e holds=%s modes=%s",
                N, sup, bound, holds, modes)
    return ResolventBoundResult(N, sup, bound, holds, cond.holds, cond.neumann_ok, modes, probe)
