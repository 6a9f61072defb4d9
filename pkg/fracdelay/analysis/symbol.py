"""
Unit-circle symbols of the fractional delay equation.

Conventions:
- g(t) = e^{3it} (1 - e^{-it})^alpha with the principal branch; smooth on
  0 < |t| <= pi because Re(1 - e^{-it}) > 0 there
- f(t) = g(t) - gamma e^{-i lam t}, extended to f(0) = -gamma
- R(t) = [f(t) - A]^{-1}, G1 = g R and G2 = e^{-i lam t} R

Every per-node evaluation is vectorized over the grid. Finite differences
are the authoritative derivatives; closed forms are cross-checks.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from fracdelay.core.logging import get_logger
from fracdelay.core.models import (
    HSeq,
    KernelSeq,
    OperatorSeq,
    ProblemParams,
    Verdict,
    write_columns,
)
from fracdelay.core.validation import (
    DomainError,
    ShapeError,
    SpectralHitError,
    TransformConvergenceError,
    validate_alpha,
    validate_problem,
    validate_radius,
)

logger = get_logger(__name__)

SINGULAR_COND = 1e13
MIN_GRID = 16

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class CircleGrid:
    """
    Sorted frequencies in [-pi, pi] avoiding neighbourhoods of 0 and +-pi.

    Attributes:
        m: Uniform node count the grid was built from
        nodes: Sorted frequencies
        exclude_zero: Radius kept free around t = 0
        exclude_pi: Radius kept free around t = +-pi
    """
    m: int
    nodes: np.ndarray
    exclude_zero: float = 1e-4
    exclude_pi: float = 1e-4
    cluster_points: int = 16

    @classmethod
    def build(cls, m: int = 4096, exclude_zero: float = 1e-4, exclude_pi: float = 1e-4,
              cluster_points: int = 16) -> "CircleGrid":
        """
        Uniform midpoints plus geometric clusters toward 0 and +-pi.

        The node set is symmetric under t -> -t.

        Raises:
            ShapeError: If m < 16
            DomainError: If an exclusion radius is negative or too large
        """
        if m < MIN_GRID:
            raise ShapeError(f"circle grid needs at least {MIN_GRID} nodes, got {m}")
        if exclude_zero < 0 or exclude_pi < 0:
            raise DomainError("exclusion radii must be non-negative")
        if exclude_zero + exclude_pi >= np.pi:
            raise DomainError("exclusion radii leave no room on the circle")

        t = -np.pi + (2.0 * np.arange(m) + 1.0) * np.pi / m
        keep = (np.abs(t) >= exclude_zero) & (np.pi - np.abs(t) >= exclude_pi)
        parts = [t[keep]]

        # clusters only fill the gap between an exclusion radius and the uniform spacing
        spacing = 2.0 * np.pi / m
        if cluster_points > 0:
            zero_start = max(exclude_zero, 1e-12)
            if zero_start < spacing:
                near_zero = np.geomspace(zero_start, spacing, cluster_points)
                parts += [near_zero, -near_zero]
            pi_start = max(exclude_pi, 1e-12)
            if pi_start < spacing:
                near_pi = np.pi - np.geomspace(pi_start, spacing, cluster_points)
                parts += [near_pi, -near_pi]

        nodes = np.unique(np.concatenate(parts))
        return cls(m=m, nodes=nodes, exclude_zero=exclude_zero, exclude_pi=exclude_pi,
                   cluster_points=cluster_points)

    def doubled(self) -> "CircleGrid":
        """The same grid built from 2m uniform nodes."""
        return CircleGrid.build(2 * self.m, self.exclude_zero, self.exclude_pi,
                                self.cluster_points)

    @property
    def closest_to_zero(self) -> float:
        return float(np.abs(self.nodes).min())

    @property
    def closest_to_pi(self) -> float:
        return float((np.pi - np.abs(self.nodes)).min())

    def __len__(self) -> int:
        return len(self.nodes)


def _as_array(t: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def g_symbol(alpha: float, t: ArrayLike) -> Union[complex, np.ndarray]:
    """
    g(t) = e^{3it} (1 - e^{-it})^alpha, principal branch.

    Raises:
        DomainError: If t = 0 (branch point)
    """
    alpha = validate_alpha(alpha)
    ts, scalar = _as_array(t)
    if np.any(ts == 0.0):
        raise DomainError("g is evaluated at the branch point t = 0")
    values = np.exp(3j * ts) * (-np.expm1(-1j * ts)) ** alpha
    return complex(values[0]) if scalar else values


def delay_symbol(alpha: float, gamma: float, lam: int, t: ArrayLike) -> Union[complex, np.ndarray]:
    """
    f(t) = g(t) - gamma e^{-i lam t}; f(0) is the limit value -gamma.
    """
    alpha = validate_alpha(alpha)
    ts, scalar = _as_array(t)
    values = np.full(ts.shape, -float(gamma), dtype=complex)
    nz = ts != 0.0
    values[nz] = g_symbol(alpha, ts[nz]) - gamma * np.exp(-1j * lam * ts[nz])
    return complex(values[0]) if scalar else values


def _resolvent_batch(A: np.ndarray, fvals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """[f - A]^{-1} per node and the mask of singular nodes (left as NaN)."""
    d = A.shape[0]
    M = fvals[:, None, None] * np.eye(d) - A
    cond = np.linalg.cond(M)
    hits = ~np.isfinite(cond) | (cond > SINGULAR_COND)
    R = np.full(M.shape, np.nan, dtype=complex)
    ok = ~hits
    if ok.any():
        R[ok] = np.linalg.solve(M[ok], np.broadcast_to(np.eye(d, dtype=complex), M[ok].shape))
    return R, hits


def _symbols(A: np.ndarray, alpha: float, gamma: float, lam: int,
             ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(g, G1, G2, hits) at each node."""
    g = g_symbol(alpha, ts)
    shift = np.exp(-1j * lam * ts)
    R, hits = _resolvent_batch(A, g - gamma * shift)
    return g, g[:, None, None] * R, shift[:, None, None] * R, hits


def resolvent_symbols(A, alpha: float, gamma: float, lam: int,
                      t: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    G1(t) = g R(t) and G2(t) = e^{-i lam t} R(t).

    Raises:
        SpectralHitError: If f(t) is (numerically) an eigenvalue of A
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    _, G1, G2, hits = _symbols(A, alpha, gamma, lam, np.array([float(t)]))
    if hits[0]:
        raise SpectralHitError(f"f(t) - A is singular at t={t:.12g}", point=float(t))
    return G1[0], G2[0]


def _phase(ts: np.ndarray, alpha: float) -> np.ndarray:
    """3i + alpha i / (e^{it} - 1), the logarithmic derivative of g."""
    return 3j + alpha * 1j / np.expm1(1j * ts)


def _closed_derivatives(G1: np.ndarray, G2: np.ndarray, ts: np.ndarray, alpha: float,
                        gamma: float, lam: int, printed: bool) -> Tuple[np.ndarray, np.ndarray]:
    phi = _phase(ts, alpha)[:, None, None]
    G12 = G1 @ G2
    dG1 = phi * (G1 - G1 @ G1) - 1j * lam * gamma * G12
    lead = -1j * gamma * G2 if printed else -1j * lam * G2
    dG2 = lead - phi * G12 - 1j * lam * gamma * (G2 @ G2)
    return dG1, dG2


def symbol_derivatives(A, alpha: float, gamma: float, lam: int, t: float,
                       printed: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form derivatives of G1 and G2 in t.

    G1' = (3i + alpha i / (e^{it} - 1)) (G1 - G1^2) - i lam gamma G1 G2
    G2' = -i lam G2 - (3i + alpha i / (e^{it} - 1)) G1 G2 - i lam gamma G2^2

    Args:
        printed: Use -i gamma G2 as the leading term of G2' instead of
            -i lam G2; kept for comparison, it fails the finite-difference
            check unless gamma == lam

    Raises:
        SpectralHitError: At a singular node
    """
    G1, G2 = resolvent_symbols(A, alpha, gamma, lam, t)
    dG1, dG2 = _closed_derivatives(G1[None], G2[None], np.array([float(t)]), float(alpha),
                                   float(gamma), int(lam), printed)
    return dG1[0], dG2[0]


def finite_difference_derivatives(A, alpha: float, gamma: float, lam: int, t: float,
                                  h: float = 1e-5) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences (G(t+h) - G(t-h)) / 2h of G1 and G2."""
    p1, p2 = resolvent_symbols(A, alpha, gamma, lam, t + h)
    m1, m2 = resolvent_symbols(A, alpha, gamma, lam, t - h)
    return (p1 - m1) / (2.0 * h), (p2 - m2) / (2.0 * h)


def _norms(X: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X, ord=2, axis=(1, 2))


def _safe_step(ts: np.ndarray, fd_step: float) -> np.ndarray:
    """min(fd_step, 0.1 * distance to 0 and +-pi) per node."""
    dist = np.minimum(np.abs(ts), np.pi - np.abs(ts))
    return np.minimum(fd_step, 0.1 * dist)


@dataclass
class SymbolScan:
    """
    Per-node symbol values on a grid with summary statistics.

    Norms at spectral-hit nodes are NaN and excluded from the summary.
    """
    t: np.ndarray
    f: np.ndarray
    g1_norm: np.ndarray
    g2_norm: np.ndarray
    blunck1: np.ndarray
    blunck2: np.ndarray
    spectral_hits: int = 0
    g1_closed_mismatch: float = 0.0
    g2_closed_mismatch: float = 0.0
    g2_printed_mismatch: float = 0.0
    trend: Dict[str, float] = field(default_factory=dict)

    @staticmethod
    def _sup(values: np.ndarray, t: np.ndarray) -> Tuple[float, float]:
        if np.all(np.isnan(values)):
            return float("nan"), float("nan")
        i = int(np.nanargmax(values))
        return float(values[i]), float(t[i])

    def suprema(self) -> Dict[str, float]:
        """Suprema of the four recorded norms."""
        return {name: self._sup(getattr(self, name), self.t)[0]
                for name in ("g1_norm", "g2_norm", "blunck1", "blunck2")}

    def summary(self) -> dict:
        out = {}
        for name in ("g1_norm", "g2_norm", "blunck1", "blunck2"):
            sup, where = self._sup(getattr(self, name), self.t)
            out[f"sup_{name}"] = sup
            out[f"argsup_{name}"] = where
        absf = np.abs(self.f)
        out["min_abs_f"] = float(absf.min())
        out["argmin_abs_f"] = float(self.t[int(np.argmin(absf))])
        out["spectral_hits"] = self.spectral_hits
        out["g1_closed_mismatch"] = self.g1_closed_mismatch
        out["g2_closed_mismatch"] = self.g2_closed_mismatch
        out["g2_printed_mismatch"] = self.g2_printed_mismatch
        out["trend"] = dict(self.trend)
        return out

    def to_dict(self) -> dict:
        return {"nodes": len(self.t), "summary": self.summary()}

    def to_csv(self, path: Path) -> Path:
        """Write t, f, |f|, the G norms and the Blunck quantities per node."""
        return write_columns(
            path,
            ["t", "re_f", "im_f", "abs_f", "g1_norm", "g2_norm", "blunck1", "blunck2"],
            [self.t, self.f.real, self.f.imag, np.abs(self.f), self.g1_norm, self.g2_norm,
             self.blunck1, self.blunck2],
        )


def _scan_nodes(A: np.ndarray, alpha: float, gamma: float, lam: int, ts: np.ndarray,
                fd_step: float) -> SymbolScan:
    _, G1, G2, hits = _symbols(A, alpha, gamma, lam, ts)
    h = _safe_step(ts, fd_step)
    _, P1, P2, hp = _symbols(A, alpha, gamma, lam, ts + h)
    _, M1, M2, hm = _symbols(A, alpha, gamma, lam, ts - h)
    hits = hits | hp | hm

    hh = (2.0 * h)[:, None, None]
    fd1 = (P1 - M1) / hh
    fd2 = (P2 - M2) / hh
    weight = (np.expm1(1j * ts) * (np.exp(1j * ts) + 1.0))[:, None, None]

    g1n, g2n = _norms(G1), _norms(G2)
    b1, b2 = _norms(weight * fd1), _norms(weight * fd2)
    for arr in (g1n, g2n, b1, b2):
        arr[hits] = np.nan

    ok = ~hits
    mism = {"g1": 0.0, "g2": 0.0, "g2_printed": 0.0}
    if ok.any():
        c1, c2 = _closed_derivatives(G1[ok], G2[ok], ts[ok], alpha, gamma, lam, printed=False)
        _, c2p = _closed_derivatives(G1[ok], G2[ok], ts[ok], alpha, gamma, lam, printed=True)
        scale1 = np.maximum(1.0, _norms(fd1[ok]))
        scale2 = np.maximum(1.0, _norms(fd2[ok]))
        mism["g1"] = float((_norms(c1 - fd1[ok]) / scale1).max())
        mism["g2"] = float((_norms(c2 - fd2[ok]) / scale2).max())
        printed_err = _norms(c2p - fd2[ok]) / scale2
        mism["g2_printed"] = float(printed_err.max())
        bad = np.flatnonzero(printed_err > 1e-4)
        if bad.size:
            for i in bad[:10]:
                logger.debug("printed G2' mismatch: t=%.9f rel_err=%.3e",
                             ts[ok][i], printed_err[i])
            logger.warning("printed G2' closed form disagrees with finite differences at "
                           "%d of %d nodes (max rel_err=%.3e)",
                           bad.size, int(ok.sum()), mism["g2_printed"])

    f = delay_symbol(alpha, gamma, lam, ts)
    return SymbolScan(t=ts, f=f, g1_norm=g1n, g2_norm=g2n, blunck1=b1, blunck2=b2,
                      spectral_hits=int(hits.sum()), g1_closed_mismatch=mism["g1"],
                      g2_closed_mismatch=mism["g2"], g2_printed_mismatch=mism["g2_printed"])


def blunck_scan(A, alpha: float, gamma: float, lam: int, grid: CircleGrid,
                fd_step: float = 1e-5, refine: bool = True) -> SymbolScan:
    """
    Scan G1, G2 and (e^{it} - 1)(e^{it} + 1) G_j'(t) over the grid.

    Finite-difference derivatives are authoritative; the closed forms are
    compared per node. Spectral-hit nodes are skipped and counted. With
    refine, the suprema are recomputed on the doubled grid and their
    relative changes stored in trend.
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    scan = _scan_nodes(A, alpha, gamma, lam, grid.nodes, fd_step)
    if scan.spectral_hits:
        logger.warning("spectral hits skipped: count=%d of %d nodes",
                       scan.spectral_hits, len(grid))

    if refine:
        fine = _scan_nodes(A, alpha, gamma, lam, grid.doubled().nodes, fd_step).suprema()
        coarse = scan.suprema()
        scan.trend = {name: abs(fine[name] - coarse[name]) / max(abs(coarse[name]), 1e-300)
                      for name in coarse}

    logger.info("blunck scan: nodes=%d sup_g1=%.6e sup_g2=%.6e hits=%d",
                len(grid), scan.suprema()["g1_norm"], scan.suprema()["g2_norm"],
                scan.spectral_hits)
    return scan


@dataclass
class OmegaResult:
    """Minimum of |f| over the closed circle."""
    omega: float
    argmin: float
    limit_value: bool = False
    refined: bool = False

    def to_dict(self) -> dict:
        return {"omega": self.omega, "argmin": self.argmin,
                "limit_value": self.limit_value, "refined": self.refined}


def omega_f(alpha: float, gamma: float, lam: int, grid: CircleGrid,
            include_limit: bool = True, refine_tol: float = 1e-10) -> OmegaResult:
    """
    min |f(t)| over the grid, the endpoints +-pi and (optionally) t = 0.

    The t = 0 value is the continuity limit |gamma|. Around an interior grid
    minimum a golden-section search refines the estimate.
    """
    alpha = validate_alpha(alpha)
    ts = np.concatenate([grid.nodes, [-np.pi, np.pi]])
    absf = np.abs(delay_symbol(alpha, gamma, lam, ts))
    i = int(np.argmin(absf))
    best = OmegaResult(float(absf[i]), float(ts[i]))

    if i < len(grid.nodes):
        nodes = grid.nodes
        j = i
        if 0 < j < len(nodes) - 1 and nodes[j - 1] * nodes[j + 1] > 0:
            a, b, c = nodes[j - 1], nodes[j], nodes[j + 1]
            fa, fb, fc = absf[j - 1], absf[j], absf[j + 1]
            if fb < fa and fb < fc:
                res = minimize_scalar(
                    lambda x: abs(delay_symbol(alpha, gamma, lam, x)),
                    bracket=(a, b, c), method="golden",
                    options={"xtol": refine_tol},
                )
                if a < res.x < c and res.fun < best.omega:
                    best = OmegaResult(float(res.fun), float(res.x), refined=True)

    if include_limit and abs(gamma) < best.omega:
        best = OmegaResult(abs(float(gamma)), 0.0, limit_value=True)

    logger.debug("omega_f: alpha=%g gamma=%g lam=%d omega=%.12f argmin=%.9f",
                 alpha, gamma, lam, best.omega, best.argmin)
    return best


@dataclass
class ConditionCResult:
    """||A|| < omega_f < 1 with both margins and the sampled resolvent bound."""
    holds: bool
    a_norm: float
    omega: float
    margin_low: float
    margin_high: float
    neumann_ok: Optional[bool] = None
    neumann_max_ratio: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "a_norm": self.a_norm,
            "omega": self.omega,
            "margin_low": self.margin_low,
            "margin_high": self.margin_high,
            "neumann_ok": self.neumann_ok,
            "neumann_max_ratio": self.neumann_max_ratio,
        }


def condition_C_check(A, alpha: float, gamma: float, lam: int, grid: CircleGrid,
                      neumann_nodes: int = 32) -> ConditionCResult:
    """
    Check ||A|| < omega_f < 1 with ||A|| the spectral norm.

    When it holds, ||[f(t) - A]^{-1}|| <= 1 / (omega_f - ||A||) is checked at
    neumann_nodes grid nodes spread evenly over the grid.
    """
    params = ProblemParams.create(A, alpha, gamma, lam)
    a_norm = params.a_norm
    om = omega_f(params.alpha, params.gamma, params.lam, grid).omega
    holds = a_norm < om < 1.0
    result = ConditionCResult(holds=holds, a_norm=a_norm, omega=om,
                              margin_low=om - a_norm, margin_high=1.0 - om)
    if holds:
        idx = np.linspace(0, len(grid) - 1, neumann_nodes).round().astype(int)
        ts = grid.nodes[idx]
        R, hits = _resolvent_batch(params.A, delay_symbol(params.alpha, params.gamma,
                                                          params.lam, ts))
        bound = 1.0 / (om - a_norm)
        ratios = _norms(R[~hits]) / bound
        result.neumann_max_ratio = float(ratios.max()) if ratios.size else float("nan")
        result.neumann_ok = bool(not hits.any() and np.all(ratios <= 1.0 + 1e-9))
    logger.info("condition C: holds=%s a_norm=%.6f omega=%.6f", holds, a_norm, om)
    return result


def unstable_mode_count(A, alpha: float, gamma: float, lam: int, m: int = 4096) -> int:
    """
    Number of zeros of det[(1-w)^alpha - gamma w^{3+lam} - A w^3] in |w| < 1.

    By the argument principle this is 3d minus the winding number of
    det(f(t) - A) around 0 as t runs over [-pi, pi]. Zero is necessary for
    a bounded resolvent sequence.

    Raises:
        SpectralHitError: If det(f(t) - A) vanishes on the sampling grid
    """
    params = ProblemParams.create(A, alpha, gamma, lam)
    if m < MIN_GRID:
        raise ShapeError(f"winding number needs at least {MIN_GRID} samples, got {m}")
    ts = np.linspace(-np.pi, np.pi, 2 * (m // 2) + 1)
    fvals = delay_symbol(params.alpha, params.gamma, params.lam, ts)
    dets = np.linalg.det(fvals[:, None, None] * np.eye(params.dim) - params.A)
    scale = max(1.0, float(np.abs(dets).max()))
    small = np.abs(dets) <= 1e-13 * scale
    if small.any():
        t_hit = float(ts[np.flatnonzero(small)[0]])
        raise SpectralHitError(f"det(f(t) - A) vanishes near t={t_hit:.9g}", point=t_hit)
    winding = int(round(np.sum(np.diff(np.unwrap(np.angle(dets)))) / (2.0 * np.pi)))
    count = 3 * params.dim - winding
    logger.debug("unstable modes: winding=%d count=%d", winding, count)
    return count


@dataclass
class HilbertMRResult:
    """Norm-boundedness evidence for the two multiplier families."""
    verdict: Verdict
    sup_g1: float
    sup_g2: float
    ratios: List[Tuple[float, float]] = field(default_factory=list)
    spectral_hits: int = 0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "sup_g1": self.sup_g1,
            "sup_g2": self.sup_g2,
            "ratios": [list(r) for r in self.ratios],
            "spectral_hits": self.spectral_hits,
        }


def hilbert_mr_check(A, alpha: float, gamma: float, lam: int, grid: CircleGrid,
                     rounds: int = 3, trend_tol: float = 1.05) -> HilbertMRResult:
    """
    sup ||G1|| and sup ||G2|| with a refinement trend near 0 and +-pi.

    Each round probes points ten times closer to 0 and +-pi than the last
    and updates the cumulative suprema; the verdict is bounded iff every
    round grows both suprema by at most trend_tol.
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    _, G1, G2, hits = _symbols(A, alpha, gamma, lam, grid.nodes)
    n_hits = int(hits.sum())
    sup1 = float(np.nanmax(_norms(G1[~hits]))) if (~hits).any() else float("nan")
    sup2 = float(np.nanmax(_norms(G2[~hits]))) if (~hits).any() else float("nan")

    ratios = []
    d0 = grid.closest_to_zero
    dpi = grid.closest_to_pi
    for r in range(1, rounds + 1):
        dz = d0 / 10.0 ** r
        dp = max(dpi / 10.0 ** r, 1e-15)
        probes = np.array([dz, -dz, np.pi - dp, -(np.pi - dp)])
        _, P1, P2, ph = _symbols(A, alpha, gamma, lam, probes)
        n_hits += int(ph.sum())
        new1 = max(sup1, float(_norms(P1[~ph]).max())) if (~ph).any() else sup1
        new2 = max(sup2, float(_norms(P2[~ph]).max())) if (~ph).any() else sup2
        ratios.append((new1 / sup1, new2 / sup2))
        sup1, sup2 = new1, new2

    if n_hits:
        logger.warning("spectral hits in maximal-regularity check: count=%d", n_hits)
    bounded = n_hits == 0 and all(r1 <= trend_tol and r2 <= trend_tol for r1, r2 in ratios)
    verdict = Verdict.BOUNDED if bounded else Verdict.UNBOUNDED
    logger.info("hilbert MR check: sup_g1=%.6e sup_g2=%.6e verdict=%s", sup1, sup2, verdict.value)
    return HilbertMRResult(verdict, sup1, sup2, ratios, n_hits)


# Closed-form z-transforms, all on |z| > 1 with principal branches

TransformTarget = Callable[[np.ndarray], np.ndarray]


def kernel_transform(beta: float) -> TransformTarget:
    """z -> (1 - 1/z)^(-beta), the transform of k^beta."""
    return lambda z: (1.0 - 1.0 / z) ** (-beta)


def h_transform(alpha: float) -> TransformTarget:
    """z -> z^2 / (z^2 + (1 - alpha) z + (alpha-1)(alpha-2)/2), the transform of h."""
    c = (alpha - 1.0) * (alpha - 2.0) / 2.0
    return lambda z: z ** 2 / (z ** 2 + (1.0 - alpha) * z + c)


def _bracket(A: np.ndarray, alpha: float, gamma: float, lam: int, z: np.ndarray) -> np.ndarray:
    d = A.shape[0]
    E = z ** 3 * (1.0 - 1.0 / z) ** alpha - gamma * z ** (-float(lam))
    M = E[:, None, None] * np.eye(d) - A
    return np.linalg.solve(M, np.broadcast_to(np.eye(d, dtype=complex), M.shape))


def resolvent_transform(A, alpha: float, gamma: float, lam: int) -> TransformTarget:
    """z -> z q(z) [z^3 (1 - 1/z)^alpha - gamma z^(-lam) - A]^(-1), the transform of S."""
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    c = (alpha - 1.0) * (alpha - 2.0) / 2.0

    def target(z: np.ndarray) -> np.ndarray:
        q = z ** 2 + (1.0 - alpha) * z + c
        return (z * q)[:, None, None] * _bracket(A, alpha, gamma, lam, z)
    return target


def kernel_product_transform(A, alpha: float, gamma: float, lam: int) -> TransformTarget:
    """
    z -> z^3 [...]^(-1), the transform of the solution kernel h * S.

    On |z| = 1 it equals e^{3it} [f(t) - A]^(-1) at z = e^{it}.
    """
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)

    def target(z: np.ndarray) -> np.ndarray:
        return (z ** 3)[:, None, None] * _bracket(A, alpha, gamma, lam, z)
    return target


@dataclass
class TransformCheck:
    """Truncated z-transform versus its closed form."""
    residual: float
    tail_bound: float
    growth_rate: float
    radius: float
    horizon: int

    def to_dict(self) -> dict:
        return {"residual": self.residual, "tail_bound": self.tail_bound,
                "growth_rate": self.growth_rate, "radius": self.radius,
                "horizon": self.horizon}


def _sequence_array(seq) -> np.ndarray:
    if isinstance(seq, OperatorSeq):
        return seq.nonnegative()
    if isinstance(seq, (KernelSeq, HSeq)):
        return np.asarray(seq.values, dtype=complex)
    return np.asarray(seq, dtype=complex)


def sequence_growth_rate(values: np.ndarray) -> float:
    """Per-step growth of the tail norms (third quarter to last quarter)."""
    if values.ndim == 1:
        norms = np.abs(values)
    else:
        norms = np.linalg.norm(values.reshape(len(values), -1), axis=1)
    N = len(norms) - 1
    if N < 8:
        return 1.0
    third = float(norms[N // 2: (3 * N) // 4].max())
    last = float(norms[(3 * N) // 4:].max())
    if third <= 0 or last <= 0:
        return 0.0
    return (last / third) ** (1.0 / max(1, N // 4))


def transform_residual(seq, target: TransformTarget, radius: float, nodes: int = 128,
                       abs_floor: float = 1e-12) -> TransformCheck:
    """
    Max relative error of the truncated z-transform on |z| = radius.

    Evaluates sum_{n=0}^{N} seq(n) z^{-n} by Horner's rule at nodes points
    and compares with target(z) relative to ||target(z)||.

    Raises:
        TransformConvergenceError: If radius does not exceed the growth rate
        ShapeError: If nodes < 64
    """
    radius = validate_radius(radius)
    if nodes < 64:
        raise ShapeError(f"transform check needs at least 64 nodes, got {nodes}")
    x = _sequence_array(seq)
    rate = sequence_growth_rate(x)
    if radius <= rate:
        raise TransformConvergenceError(
            f"radius {radius:g} does not exceed the growth rate {rate:.6g}; "
            f"the truncated transform diverges")

    z = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    w = 1.0 / z
    shape = (nodes,) + x.shape[1:]
    acc = np.zeros(shape, dtype=complex)
    wb = w.reshape((nodes,) + (1,) * (x.ndim - 1))
    for n in range(len(x) - 1, -1, -1):
        acc = acc * wb + x[n]

    ref = np.asarray(target(z))
    if x.ndim == 1:
        err = np.abs(acc - ref)
        size = np.abs(ref)
    else:
        err = _norms(acc - ref)
        size = _norms(ref)
    residual = float((err / np.maximum(size, abs_floor)).max())

    N = len(x) - 1
    last = float(np.abs(x[-1]).max()) * np.sqrt(x[-1].size)
    ratio = rate / radius
    tail = last * radius ** (-N) * ratio / (1.0 - ratio) if ratio > 0 else 0.0
    tail = tail / max(float(size.min()), abs_floor)
    logger.debug("transform check: r=%g N=%d residual=%.3e tail=%.3e", radius, N, residual, tail)
    return TransformCheck(residual=residual, tail_bound=tail, growth_rate=rate,
                          radius=radius, horizon=N)


def e_symbol(A, alpha: float, gamma: float, lam: int, t: ArrayLike) -> np.ndarray:
    """e^{3it} A [f(t) - A]^{-1}, the multiplier of the E operator."""
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    ts, _ = _as_array(t)
    R, hits = _resolvent_batch(A, delay_symbol(alpha, gamma, lam, ts))
    if hits.any():
        t_hit = float(ts[np.flatnonzero(hits)[0]])
        raise SpectralHitError(f"f(t) - A is singular at t={t_hit:.12g}", point=t_hit)
    return np.exp(3j * ts)[:, None, None] * (A @ R)


def f_symbol(A, alpha: float, gamma: float, lam: int, t: ArrayLike) -> np.ndarray:
    """e^{3it} e^{-i lam t} [f(t) - A]^{-1}, the multiplier of the F operator."""
    A, alpha, gamma, lam = validate_problem(A, alpha, gamma, lam)
    ts, _ = _as_array(t)
    R, hits = _resolvent_batch(A, delay_symbol(alpha, gamma, lam, ts))
    if hits.any():
        t_hit = float(ts[np.flatnonzero(hits)[0]])
        raise SpectralHitError(f"f(t) - A is singular at t={t_hit:.12g}", point=t_hit)
    return np.exp(1j * (3 - lam) * ts)[:, None, None] * R
