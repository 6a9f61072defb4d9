"""
Tests for the unit-circle symbols, omega_f, condition C and z-transforms.
"""

import numpy as np
import pytest

from fracdelay.analysis.symbol import (
    CircleGrid,
    blunck_scan,
    condition_C_check,
    delay_symbol,
    e_symbol,
    f_symbol,
    finite_difference_derivatives,
    g_symbol,
    h_transform,
    hilbert_mr_check,
    kernel_product_transform,
    kernel_transform,
    omega_f,
    resolvent_symbols,
    resolvent_transform,
    sequence_growth_rate,
    symbol_derivatives,
    transform_residual,
    unstable_mode_count,
)
from fracdelay.core.kernels import h_sequence, kernel_sequence
from fracdelay.core.models import Verdict
from fracdelay.core.resolvent import resolvent_sequence, solution_kernel
from fracdelay.core.validation import (
    DomainError,
    ShapeError,
    SpectralHitError,
    TransformConvergenceError,
)

# Scalar instance with ||A|| < omega_f < 1
A_C, ALPHA_C, GAMMA_C, LAM_C = [[0.05]], 2.5, -0.5, 1


@pytest.fixture(scope="module")
def grid():
    return CircleGrid.build(512)


class TestCircleGrid:
    """Tests for CircleGrid."""

    def test_symmetric_and_sorted(self, grid):
        """Test the nodes are sorted and symmetric under t -> -t."""
        assert np.all(np.diff(grid.nodes) > 0)
        np.testing.assert_allclose(grid.nodes, -grid.nodes[::-1])

    def test_exclusions(self, grid):
        """Test the excluded neighbourhoods are respected and clustered into."""
        assert grid.closest_to_zero == pytest.approx(1e-4)
        assert grid.closest_to_pi == pytest.approx(1e-4, rel=1e-6)
        assert np.all(np.abs(grid.nodes) <= np.pi)

    def test_doubled(self, grid):
        """Test doubling keeps the exclusions and adds nodes."""
        fine = grid.doubled()
        assert fine.m == 1024
        assert len(fine) > len(grid)

    def test_too_small(self):
        """Test m < 16 raises ShapeError."""
        with pytest.raises(ShapeError):
            CircleGrid.build(8)

    def test_bad_exclusion(self):
        """Test oversize exclusion radii raise DomainError."""
        with pytest.raises(DomainError):
            CircleGrid.build(64, exclude_zero=2.0, exclude_pi=2.0)

    @pytest.mark.parametrize("exclude_zero,exclude_pi", [(0.5, 0.3), (0.2, 1e-4), (1e-4, 0.4)])
    def test_wide_exclusions_above_spacing(self, exclude_zero, exclude_pi):
        """Test exclusion radii wider than 2 pi / m keep every node outside them."""
        grid = CircleGrid.build(64, exclude_zero=exclude_zero, exclude_pi=exclude_pi)
        assert 2.0 * np.pi / 64 < max(exclude_zero, exclude_pi)
        assert np.all(np.abs(grid.nodes) >= exclude_zero * (1.0 - 1e-12))
        assert np.all(np.pi - np.abs(grid.nodes) >= exclude_pi - 1e-14)
        np.testing.assert_allclose(grid.nodes, -grid.nodes[::-1], atol=1e-14)

    def test_wide_exclusions_survive_doubling(self):
        """Test the doubled grid keeps wide exclusions."""
        fine = CircleGrid.build(32, exclude_zero=0.5, exclude_pi=0.3).doubled()
        assert fine.closest_to_zero >= 0.5
        assert fine.closest_to_pi >= 0.3 - 1e-14


class TestSymbols:
    """Tests for g, f and the resolvent symbols."""

    def test_g_value(self):
        """Test g at t = pi/2 for alpha = 2.5."""
        assert g_symbol(2.5, np.pi / 2) == pytest.approx(2.19737 + 0.91018j, abs=1e-5)

    def test_f_value(self):
        """Test f at t = pi/2 for gamma = -0.5, lam = 1."""
        assert delay_symbol(2.5, -0.5, 1, np.pi / 2) == pytest.approx(2.19737 + 0.41018j,
                                                                       abs=1e-5)

    def test_g_modulus(self):
        """Test |g(t)| = |2 sin(t/2)|^alpha."""
        t = np.linspace(-3.0, 3.0, 41)
        t = t[t != 0.0]
        np.testing.assert_allclose(np.abs(g_symbol(2.3, t)), np.abs(2 * np.sin(t / 2)) ** 2.3,
                                   rtol=1e-12)

    def test_principal_branch_on_fine_grid(self):
        """Test g(t) = e^{i(3 - alpha)t} (e^{it} - 1)^alpha with no branch jumps on 10^5 nodes."""
        t = CircleGrid.build(100_000).nodes
        for alpha in (2.05, 2.5, 2.95):
            expected = np.exp(1j * (3.0 - alpha) * t) * np.exp(alpha * np.log(np.expm1(1j * t)))
            np.testing.assert_allclose(g_symbol(alpha, t), expected, rtol=1e-11, atol=1e-12)

    def test_g_branch_point(self):
        """Test g(0) raises DomainError."""
        with pytest.raises(DomainError):
            g_symbol(2.5, 0.0)

    def test_f_limit_at_zero(self):
        """Test f(0) is the continuity limit -gamma."""
        assert delay_symbol(2.5, 0.7, 3, 0.0) == pytest.approx(-0.7)

    def test_resolvent_identity(self):
        """Test A R(t) = f(t) R(t) - I."""
        A = np.array([[0.1, 0.2j], [-0.05, 0.3]])
        for t in (0.3, -1.2, 2.9):
            G1, G2 = resolvent_symbols(A, 2.4, 0.2, 2, t)
            R = G2 * np.exp(2j * t)
            f = delay_symbol(2.4, 0.2, 2, t)
            np.testing.assert_allclose(A @ R, f * R - np.eye(2), atol=1e-12)
            np.testing.assert_allclose(G1, g_symbol(2.4, t) * R, atol=1e-12)

    def test_spectral_hit(self):
        """Test a singular node raises SpectralHitError with the point."""
        t = 1.0
        a = delay_symbol(2.5, 0.0, 1, t)
        with pytest.raises(SpectralHitError) as exc:
            resolvent_symbols([[a]], 2.5, 0.0, 1, t)
        assert exc.value.point == pytest.approx(t)


class TestDerivatives:
    """Tests for the closed-form symbol derivatives."""

    A = np.array([[0.1, 0.05], [0.0, -0.15]])

    @pytest.mark.parametrize("t", [0.4, 1.0, -2.0])
    def test_matches_finite_differences(self, t):
        """Test G1' and G2' against central differences."""
        d1, d2 = symbol_derivatives(self.A, 2.6, -0.3, 2, t)
        f1, f2 = finite_difference_derivatives(self.A, 2.6, -0.3, 2, t)
        np.testing.assert_allclose(d1, f1, atol=1e-7)
        np.testing.assert_allclose(d2, f2, atol=1e-7)

    def test_second_order_convergence(self):
        """Test halving the step divides the error by about four."""
        d1, _ = symbol_derivatives(A_C, ALPHA_C, GAMMA_C, LAM_C, 1.0)
        e1 = abs((finite_difference_derivatives(A_C, ALPHA_C, GAMMA_C, LAM_C, 1.0, 1e-4)[0]
                  - d1)[0, 0])
        e2 = abs((finite_difference_derivatives(A_C, ALPHA_C, GAMMA_C, LAM_C, 1.0, 5e-5)[0]
                  - d1)[0, 0])
        assert 3.5 <= e1 / e2 <= 4.5

    def test_printed_variant_disagrees(self):
        """Test the -i gamma G2 leading term fails when gamma != lam."""
        printed = symbol_derivatives(A_C, ALPHA_C, GAMMA_C, LAM_C, 1.0, printed=True)[1]
        _, fd = finite_difference_derivatives(A_C, ALPHA_C, GAMMA_C, LAM_C, 1.0)
        assert np.abs(printed - fd).max() > 1e-3


class TestBlunckScan:
    """Tests for blunck_scan."""

    def test_condition_instance(self, grid, tmp_path):
        """Test a clean scan of the condition-C instance."""
        scan = blunck_scan(A_C, ALPHA_C, GAMMA_C, LAM_C, grid)
        assert scan.spectral_hits == 0
        assert scan.g1_closed_mismatch <= 1e-4
        assert scan.g2_closed_mismatch <= 1e-4
        assert scan.g2_printed_mismatch > 1e-4
        assert set(scan.trend) == {"g1_norm", "g2_norm", "blunck1", "blunck2"}

        path = scan.to_csv(tmp_path / "symbol_scan.csv")
        header = path.read_text().splitlines()[0]
        assert header == "t,re_f,im_f,abs_f,g1_norm,g2_norm,blunck1,blunck2"

    def test_summary(self, grid):
        """Test the summary records minima and suprema."""
        summary = blunck_scan(A_C, ALPHA_C, GAMMA_C, LAM_C, grid, refine=False).summary()
        assert summary["min_abs_f"] > 0.45
        assert summary["sup_g1_norm"] > 0

    def test_reflection_symmetry_for_real_data(self):
        """Test real A and gamma give the same norms at t and -t."""
        A = np.array([[0.05, 0.02], [0.0, -0.03]])
        grid = CircleGrid.build(256)
        scan = blunck_scan(A, ALPHA_C, GAMMA_C, LAM_C, grid, refine=False)
        assert scan.spectral_hits == 0
        np.testing.assert_allclose(scan.t, -scan.t[::-1], atol=1e-14)
        for name in ("g1_norm", "g2_norm"):
            values = getattr(scan, name)
            np.testing.assert_allclose(values, values[::-1], rtol=1e-10, atol=1e-12)
        for name in ("blunck1", "blunck2"):
            values = getattr(scan, name)
            np.testing.assert_allclose(values, values[::-1], rtol=1e-6, atol=1e-12)
        positive, negative = scan.t > 0, scan.t < 0
        for name in ("g1_norm", "g2_norm", "blunck1", "blunck2"):
            values = getattr(scan, name)
            assert values[positive].max() == pytest.approx(values[negative].max(), rel=1e-6)


class TestOmega:
    """Tests for omega_f."""

    def test_matches_dense_search(self, grid):
        """Test the refined minimum against a dense brute-force search."""
        result = omega_f(ALPHA_C, GAMMA_C, LAM_C, grid)
        t = np.linspace(-np.pi, np.pi, 1_000_001)
        brute = np.abs(delay_symbol(ALPHA_C, GAMMA_C, LAM_C, t)).min()
        assert result.omega == pytest.approx(brute, abs=1e-8)
        assert result.omega == pytest.approx(0.4962, abs=1e-3)
        assert result.limit_value is False

    def test_limit_value_at_zero(self, grid):
        """Test gamma = 0 gives omega_f = 0 as the limit at t = 0."""
        result = omega_f(2.5, 0.0, 1, grid)
        assert result.omega == 0.0
        assert result.limit_value is True
        assert result.argmin == 0.0

    def test_without_limit(self, grid):
        """Test excluding t = 0 gives a positive grid minimum."""
        result = omega_f(2.5, 0.0, 1, grid, include_limit=False)
        assert result.omega > 0.0
        assert result.limit_value is False

    def test_monotone_in_zero_exclusion(self):
        """Test omega_f without the limit grows with the radius excluded around t = 0."""
        alpha = 2.5
        omegas = []
        for exclude_zero in (0.01, 0.2, 0.5):
            grid = CircleGrid.build(64, exclude_zero=exclude_zero)
            result = omega_f(alpha, 0.0, 1, grid, include_limit=False)
            assert result.omega >= (2.0 * np.sin(exclude_zero / 2.0)) ** alpha * (1.0 - 1e-12)
            assert result.omega == pytest.approx(
                (2.0 * np.sin(grid.closest_to_zero / 2.0)) ** alpha, rel=1e-12)
            omegas.append(result.omega)
        assert omegas[0] < omegas[1] < omegas[2]


class TestConditionC:
    """Tests for condition_C_check."""

    def test_holds(self, grid):
        """Test the scalar instance satisfies the condition."""
        result = condition_C_check(A_C, ALPHA_C, GAMMA_C, LAM_C, grid)
        assert result.holds is True
        assert result.neumann_ok is True
        assert result.margin_low == pytest.approx(result.omega - 0.05)

    def test_fails_for_large_a(self, grid):
        """Test ||A|| above omega_f."""
        result = condition_C_check([[0.9]], ALPHA_C, GAMMA_C, LAM_C, grid)
        assert result.holds is False
        assert result.neumann_ok is None


class TestUnstableModes:
    """Tests for unstable_mode_count."""

    def test_condition_instance(self):
        """Test condition C does not rule out unstable modes."""
        assert unstable_mode_count(A_C, ALPHA_C, GAMMA_C, LAM_C) == 2

    def test_singular_at_zero(self):
        """Test A = 0, gamma = 0 vanishes at t = 0."""
        with pytest.raises(SpectralHitError):
            unstable_mode_count([[0.0]], 2.5, 0.0, 1)


class TestHilbertCheck:
    """Tests for hilbert_mr_check."""

    def test_bounded(self, grid):
        """Test the condition-C instance gives bounded multipliers."""
        result = hilbert_mr_check(A_C, ALPHA_C, GAMMA_C, LAM_C, grid)
        assert result.verdict is Verdict.BOUNDED
        assert len(result.ratios) == 3

    def test_unbounded_without_delay(self, grid):
        """Test A = 0, gamma = 0: G1 = 1 while G2 blows up at 0."""
        result = hilbert_mr_check([[0.0]], 2.5, 0.0, 1, grid)
        assert result.verdict is Verdict.UNBOUNDED
        assert result.sup_g1 == pytest.approx(1.0)


class TestTransforms:
    """Tests for the truncated z-transform checks."""

    def test_h_transform(self):
        """Test the transform of h at radius 2."""
        check = transform_residual(h_sequence(2.5, 200), h_transform(2.5), 2.0)
        assert check.residual <= 1e-8

    def test_kernel_transform(self):
        """Test the transform of k^0.5 at radius 1.5."""
        check = transform_residual(kernel_sequence(0.5, 200), kernel_transform(0.5), 1.5)
        assert check.residual <= 1e-8

    def test_residual_shrinks_with_horizon(self):
        """Test the truncation error decreases as N grows."""
        errors = [transform_residual(kernel_sequence(0.5, N), kernel_transform(0.5), 1.5).residual
                  for N in (10, 20, 40)]
        assert errors[0] > errors[1] > errors[2]

    def test_resolvent_transform(self):
        """Test the transform of S outside its growth rate."""
        S = resolvent_sequence(A_C, ALPHA_C, GAMMA_C, LAM_C, 200)
        check = transform_residual(S, resolvent_transform(A_C, ALPHA_C, GAMMA_C, LAM_C), 2.0)
        assert check.residual <= 1e-8

    def test_divergent_radius(self):
        """Test a radius inside the growth rate is refused."""
        with pytest.raises(TransformConvergenceError):
            transform_residual(h_sequence(2.5, 200), h_transform(2.5), 1.0)

    def test_solution_kernel_transform(self):
        """Test the transform of P over its whole horizon outside its growth rate."""
        P = solution_kernel(A_C, ALPHA_C, GAMMA_C, LAM_C, 200)
        target = kernel_product_transform(A_C, ALPHA_C, GAMMA_C, LAM_C)
        check = transform_residual(P, target, 2.0)
        assert check.residual <= 1e-8
        assert check.horizon == 200

    def test_solution_kernel_transform_matrix(self):
        """Test the transform of P for a 2 x 2 problem at a radius above its growth."""
        A = np.array([[0.1, 0.05j], [0.02, -0.15]])
        P = solution_kernel(A, 2.3, 0.2, 2, 300)
        radius = max(1.5, 1.5 * sequence_growth_rate(P.nonnegative()))
        check = transform_residual(P, kernel_product_transform(A, 2.3, 0.2, 2), radius)
        assert check.residual <= 1e-6

    def test_too_few_nodes(self):
        """Test fewer than 64 nodes raise ShapeError."""
        with pytest.raises(ShapeError):
            transform_residual(kernel_sequence(0.5, 20), kernel_transform(0.5), 1.5, nodes=32)


class TestOperatorSymbols:
    """Tests for the E and F multipliers."""

    def test_relation(self):
        """Test e^{-3it} E(t) = f(t) e^{-i(3-lam)t} F(t) - I."""
        A = np.array([[0.1, 0.0], [0.2, -0.1]])
        t = np.array([0.5, 1.5, -2.5])
        E = e_symbol(A, 2.5, 0.3, 2, t)
        F = f_symbol(A, 2.5, 0.3, 2, t)
        f = delay_symbol(2.5, 0.3, 2, t)
        lhs = np.exp(-3j * t)[:, None, None] * E
        rhs = (f * np.exp(-1j * t))[:, None, None] * F - np.eye(2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_spectral_hit(self):
        """Test a singular node raises SpectralHitError."""
        a = delay_symbol(2.5, 0.0, 1, 0.7)
        with pytest.raises(SpectralHitError):
            f_symbol([[a]], 2.5, 0.0, 1, 0.7)
