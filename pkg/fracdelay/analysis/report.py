"""
Report generation for the CLI batteries.

Each battery runs the operations of one area on a RunConfig and returns a
Report: verdicts, metrics, the echoed configuration, seeds and the paths of
CSV artifacts. Reports serialize to JSON and to a short text summary.
"""

from pathlib import Path
from typing import Dict, List, Optional

from fracdelay.analysis.regularity import (
    norm_symbol_agreement,
    reconstruction_residual,
    regularity_trend,
    resolvent_bound_check,
)
from fracdelay.analysis.symbol import (
    CircleGrid,
    blunck_scan,
    condition_C_check,
    h_transform,
    hilbert_mr_check,
    kernel_product_transform,
    kernel_transform,
    omega_f,
    resolvent_transform,
    sequence_growth_rate,
    transform_residual,
    unstable_mode_count,
)
from fracdelay.core.calculus import conv_diff_identity_residual
from fracdelay.core.config import Config, RunConfig, get_config
from fracdelay.core.kernels import (
    h_recursion_residual,
    h_sequence,
    kernel_identity_residual,
    kernel_semigroup_residual,
    kernel_sequence,
)
from fracdelay.core.logging import get_logger, run_context
from fracdelay.core.models import OperatorKind, OperatorSeq, Report, Verdict
from fracdelay.core.resolvent import (
    boundedness_probe,
    growth_rate,
    recursion_residual,
    resolvent_residual,
    resolvent_sequence,
    solution_kernel,
    validate_contour,
)
from fracdelay.core.solver import (
    homogeneous_check,
    initial_identity_residual,
    method_deviation,
    solve_convolution,
    solve_direct,
)
from fracdelay.core.validation import (
    CapacityError,
    SpectralHitError,
    TransformConvergenceError,
)

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_TOLERANCE = 3
EXIT_SPECTRAL_HIT = 4

METHODS = ("conv", "direct", "both")

SEMIGROUP_PAIRS = ((0.5, 0.5), (0.3, 1.2), (1.5, 0.25), (0.1, 2.7), (2.0, 1.0))


def _check(value: float, tol: float) -> str:
    return (Verdict.PASS if value <= tol else Verdict.FAIL).value


class ReportGenerator:
    """
    Runs the solve, verify, symbol and maximal-regularity batteries.

    Args:
        run: Parsed run configuration
        config: User defaults for settings the run file does not carry
        method: Solver selection for the solve battery ("conv", "direct", "both")
    """

    def __init__(self, run: RunConfig, config: Optional[Config] = None, method: str = "conv"):
        self.run = run
        self.config = config or get_config()
        self.method = method
        self.out_dir = Path(run.directory)
        numerics = self.config.numerics
        self.limits = {"max_horizon": numerics.max_horizon,
                       "capacity": numerics.capacity_threshold}
        self.overflow_warning = numerics.overflow_warning
        self.abs_floor = numerics.abs_floor

    def _report(self, command: str) -> Report:
        return Report(command=command, config=self.run.to_dict())

    def _grid(self) -> CircleGrid:
        return CircleGrid.build(self.run.grid_m, self.run.exclude_zero, self.run.exclude_pi,
                                self.config.grid.cluster_points)

    @staticmethod
    def _finish(report: Report, informational: tuple = ()) -> Report:
        failed = [name for name, v in report.verdicts.items()
                  if v == Verdict.FAIL.value and name not in informational]
        if failed and report.exit_code == EXIT_OK:
            report.exit_code = EXIT_TOLERANCE
        if failed:
            logger.warning("%s: checks above tolerance: %s", report.command, ", ".join(failed))
        return report

    def run_solve(self) -> Report:
        """Solve the configured problem and write solution.csv."""
        spec = self.run.problem()
        report = self._report("solve")
        report.seeds["forcing"] = self.run.forcing.seed if self.run.forcing.kind == "random" \
            else None
        conv_method = self.config.numerics.conv_method

        if self.method == "direct":
            solution = solve_direct(spec, max_horizon=self.limits["max_horizon"])
        else:
            solution = solve_convolution(spec, method=conv_method, **self.limits,
                                         overflow_warning=self.overflow_warning)
        path = solution.to_csv(self.out_dir / "solution.csv")
        report.artifacts.append(str(path))

        report.metrics["solution"] = solution.to_dict()
        report.metrics["initial_identity_residual"] = initial_identity_residual(spec, solution)
        report.verdicts["residual"] = _check(solution.residual_max, self.run.residual_tol)
        report.verdicts["initial_values"] = _check(report.metrics["initial_identity_residual"],
                                                   self.run.identity_tol)
        if self.method == "both":
            deviation = method_deviation(spec, **self.limits)
            report.metrics["method_deviation"] = deviation
            report.verdicts["method_equivalence"] = _check(deviation, self.run.residual_tol)
        return self._finish(report)

    def run_verify(self) -> Report:
        """Kernel laws, calculus identities, resolvent and solver residuals."""
        spec = self.run.problem()
        params = spec.params
        N = spec.N
        tol_id = self.run.identity_tol
        tol_res = self.run.residual_tol
        report = self._report("verify")
        m = report.metrics
        v = report.verdicts

        max_horizon = self.limits["max_horizon"]
        h = h_sequence(params.alpha, N, **self.limits)
        m["kernel_semigroup"] = max(kernel_semigroup_residual(b, g, N) for b, g in SEMIGROUP_PAIRS)
        m["kernel_identity"] = kernel_identity_residual(params.alpha, N)
        m["h_recursion"] = h_recursion_residual(h)
        v["kernel_semigroup"] = _check(m["kernel_semigroup"], tol_id)
        v["kernel_identity"] = _check(m["kernel_identity"], tol_id)
        v["h_recursion"] = _check(m["h_recursion"], tol_id)

        S = resolvent_sequence(params.A, params.alpha, params.gamma, params.lam, N,
                               **self.limits, overflow_warning=self.overflow_warning)
        b = kernel_sequence(0.5, N, max_horizon=max_horizon)
        m["conv_diff_identity"] = conv_diff_identity_residual(
            b, OperatorSeq(S.nonnegative(), start=0), params.alpha)
        m["resolvent_residual"] = resolvent_residual(S)
        m["resolvent_initial"] = resolvent_residual(S, window=(0, 2))
        m["recursion_residual"] = recursion_residual(S)
        v["conv_diff_identity"] = _check(m["conv_diff_identity"], tol_res)
        v["resolvent_residual"] = _check(m["resolvent_residual"], tol_res)
        v["resolvent_initial"] = _check(m["resolvent_initial"], tol_res)
        v["recursion_residual"] = _check(m["recursion_residual"], tol_res)
        if N >= 64:
            m["boundedness_probe"] = boundedness_probe(S).to_dict()

        solution = solve_convolution(spec, **self.limits, overflow_warning=self.overflow_warning)
        m["solution_residual"] = solution.residual_max
        m["initial_identity_residual"] = initial_identity_residual(spec, solution)
        m["method_deviation"] = method_deviation(spec, **self.limits)
        v["solution_residual"] = _check(m["solution_residual"], tol_res)
        v["initial_values"] = _check(m["initial_identity_residual"], tol_id)
        v["method_equivalence"] = _check(m["method_deviation"], tol_res)

        homogeneous = homogeneous_check(params.A, params.alpha, params.gamma, params.lam, N)
        control = homogeneous_check(params.A, params.alpha, params.gamma, params.lam, N, seed=1.0)
        m["homogeneous"] = homogeneous.to_dict()
        m["homogeneous_control"] = control.to_dict()
        v["homogeneous"] = homogeneous.verdict.value
        v["homogeneous_control"] = (Verdict.PASS if control.verdict is Verdict.FAIL
                                    else Verdict.FAIL).value

        floor = self.abs_floor
        m["transform_h"] = transform_residual(h, h_transform(params.alpha), 2.0,
                                              abs_floor=floor).to_dict()
        m["transform_kernel"] = transform_residual(b, kernel_transform(0.5), 1.5,
                                                   abs_floor=floor).to_dict()
        v["transform_h"] = _check(m["transform_h"]["residual"], self.run.contour_tol)
        v["transform_kernel"] = _check(m["transform_kernel"]["residual"], self.run.contour_tol)

        radius = max(1.1, 1.5 * growth_rate(S))
        try:
            m["transform_resolvent"] = transform_residual(
                S, resolvent_transform(params.A, params.alpha, params.gamma, params.lam),
                radius, abs_floor=floor).to_dict()
            v["transform_resolvent"] = _check(m["transform_resolvent"]["residual"], 1e-6)
        except TransformConvergenceError as e:
            logger.warning("resolvent transform skipped: %s", e)
            m["transform_resolvent"] = {"skipped": str(e)}

        P = solution_kernel(params.A, params.alpha, params.gamma, params.lam, N,
                            **self.limits, overflow_warning=self.overflow_warning)
        radius = max(1.5, 1.5 * sequence_growth_rate(P.nonnegative()))
        try:
            m["transform_solution_kernel"] = transform_residual(
                P, kernel_product_transform(params.A, params.alpha, params.gamma, params.lam),
                radius, abs_floor=floor).to_dict()
            v["transform_solution_kernel"] = _check(
                m["transform_solution_kernel"]["residual"], 1e-6)
        except TransformConvergenceError as e:
            logger.warning("solution kernel transform skipped: %s", e)
            m["transform_solution_kernel"] = {"skipped": str(e)}

        contour = validate_contour(
            params.A, params.alpha, params.gamma, params.lam,
            radius=self.run.contour_r, nodes=self.run.contour_nodes,
            agreement_tol=self.run.contour_tol,
            convergence_tol=self.config.contour.convergence_tol,
            fallback_radius=self.config.contour.fallback_radius)
        m["contour"] = contour.to_dict()
        v["contour"] = (Verdict.PASS if contour.validated_radius is not None
                        else Verdict.FAIL).value
        return self._finish(report, informational=("contour", "transform_resolvent"))

    def run_symbol(self) -> Report:
        """Symbol scan, omega_f, condition C and the Hilbert-space MR check."""
        params = self.run.problem().params
        grid = self._grid()
        report = self._report("symbol")
        args = (params.A, params.alpha, params.gamma, params.lam)

        scan = blunck_scan(*args, grid, fd_step=self.config.grid.fd_step)
        path = scan.to_csv(self.out_dir / "symbol_scan.csv")
        report.artifacts.append(str(path))
        report.metrics["scan"] = scan.summary()
        report.metrics["omega_f"] = omega_f(params.alpha, params.gamma, params.lam, grid,
                                            refine_tol=self.config.grid.refine_tol).to_dict()
        cond = condition_C_check(*args, grid, neumann_nodes=self.config.grid.neumann_nodes)
        report.metrics["condition_c"] = cond.to_dict()
        mr = hilbert_mr_check(*args, grid, rounds=self.config.grid.refine_rounds,
                              trend_tol=self.config.grid.trend_tol)
        report.metrics["hilbert_mr"] = mr.to_dict()
        report.verdicts["symbol"] = mr.verdict.value
        report.verdicts["condition_c"] = (Verdict.PASS if cond.holds else Verdict.FAIL).value

        try:
            report.metrics["unstable_modes"] = unstable_mode_count(*args, grid.m)
        except SpectralHitError as e:
            logger.warning("unstable mode count unavailable: %s", e)
            report.metrics["unstable_modes"] = None

        if scan.spectral_hits or mr.spectral_hits:
            report.exit_code = EXIT_SPECTRAL_HIT
        return self._finish(report, informational=("condition_c",))

    def run_mr(self) -> Report:
        """Regularity trend, symbol agreement, reconstruction and the resolvent bound."""
        spec = self.run.problem()
        params = spec.params
        grid = self._grid()
        reg = self.config.regularity
        dense_limit = self.config.numerics.dense_limit
        report = self._report("mr")
        report.seeds["trials"] = self.run.seed

        trend = regularity_trend(params, self.run.horizons, p=self.run.p,
                                 trials=self.run.trials, seed=self.run.seed,
                                 tol=self.config.grid.trend_tol, dense_limit=dense_limit,
                                 iterations=reg.power_iterations, **self.limits)
        report.metrics["trend"] = trend.to_dict()
        report.verdicts["mr"] = trend.verdict.value

        agreements: List[Dict] = []
        N_last = self.run.horizons[-1]
        for kind in (OperatorKind.E_ALPHA, OperatorKind.F_ALPHA):
            try:
                agreements.append(
                    norm_symbol_agreement(params, N_last, grid, kind, dense_limit=dense_limit,
                                          **self.limits).to_dict())
            except (CapacityError, SpectralHitError) as e:
                logger.warning("symbol agreement unavailable: kind=%s reason=%s",
                               kind.value, e)
                agreements.append({"kind": kind.value, "unavailable": str(e)})
                if isinstance(e, SpectralHitError):
                    report.exit_code = EXIT_SPECTRAL_HIT
        report.metrics["symbol_agreement"] = agreements

        solution = solve_convolution(spec, **self.limits, overflow_warning=self.overflow_warning)
        rec = reconstruction_residual(spec, solution, **self.limits)
        report.metrics["reconstruction_residual"] = rec
        report.verdicts["reconstruction"] = _check(rec, self.run.residual_tol)

        bound = resolvent_bound_check(params, spec.N, grid, **self.limits)
        report.metrics["resolvent_bound"] = bound.to_dict()
        report.verdicts["resolvent_bound"] = (Verdict.PASS if bound.holds
                                              else Verdict.FAIL).value
        return self._finish(report, informational=("resolvent_bound",))

    def run_all(self) -> Report:
        """All four batteries merged into one report; the worst exit code wins."""
        combined = self._report("report")
        for name, battery in (("solve", self.run_solve), ("verify", self.run_verify),
                              ("symbol", self.run_symbol), ("mr", self.run_mr)):
            part = battery()
            combined.verdicts.update({f"{name}.{k}": val for k, val in part.verdicts.items()})
            combined.metrics[name] = part.metrics
            combined.artifacts += part.artifacts
            combined.seeds.update({f"{name}.{k}": val for k, val in part.seeds.items()})
            combined.exit_code = max(combined.exit_code, part.exit_code)
        return combined

    def run_command(self, command: str) -> Report:
        batteries = {"solve": self.run_solve, "verify": self.run_verify,
                     "symbol": self.run_symbol, "mr": self.run_mr, "report": self.run_all}
        with run_context(command, seed=self.run.seed):
            return batteries[command]()

    def generate_json(self, report: Report) -> str:
        """JSON form of a report."""
        return report.to_json()

    def generate_text(self, report: Report) -> str:
        """Short human-readable summary: one line per verdict plus the artifacts."""
        lines = [f"fracdelay {report.command}  (exit {report.exit_code})", ""]
        width = max((len(k) for k in report.verdicts), default=0)
        for name, verdict in report.verdicts.items():
            lines.append(f"  {name:<{width}}  {verdict}")
        for path in report.artifacts:
            lines.append(f"  wrote {path}")
        return "\n".join(lines)

    def save_report(self, report: Report, path: Optional[Path] = None) -> Path:
        """Write the JSON report; the default path is <out>/<command>_report.json."""
        path = Path(path) if path else self.out_dir / f"{report.command}_report.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        report.artifacts.append(str(path))
        path.write_text(self.generate_json(report), encoding="utf-8")
        logger.info("report written: %s", path)
        return path

