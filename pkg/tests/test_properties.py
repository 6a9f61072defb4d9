"""
Property-based tests for the convolution algebra and the solvers.
"""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fracdelay.core.calculus import convolve, fractional_difference
from fracdelay.core.kernels import h_recursion_residual, h_sequence, kernel_semigroup_residual
from fracdelay.core.models import ProblemSpec, Signal
from fracdelay.core.resolvent import resolvent_residual, resolvent_sequence
from fracdelay.core.solver import method_deviation

_alpha = st.floats(min_value=2.05, max_value=2.95, allow_nan=False, allow_infinity=False)
_order = st.floats(min_value=0.05, max_value=3.0, allow_nan=False, allow_infinity=False)
_gamma = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
_seed = st.integers(min_value=0, max_value=2**32 - 1)

_settings = settings(max_examples=25, deadline=None,
                     suppress_health_check=[HealthCheck.too_slow])


@st.composite
def matrices(draw, max_dim=3, max_norm=0.8):
    """Complex d x d matrix with spectral norm at most max_norm."""
    d = draw(st.integers(min_value=1, max_value=max_dim))
    rng = np.random.default_rng(draw(_seed))
    M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    scale = draw(st.floats(min_value=0.0, max_value=max_norm))
    return scale * M / np.linalg.norm(M, 2)


class TestConvolutionAlgebra:
    """Algebraic laws of the truncated convolution."""

    @_settings
    @given(seed=_seed, N=st.integers(min_value=0, max_value=40))
    def test_associative(self, seed, N):
        """(a * b) * g = a * (b * g)."""
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(N + 1)
        b = rng.standard_normal(N + 1)
        g = Signal.random(N, 2, seed=seed)
        ab = np.convolve(a, b)[: N + 1]
        lhs = convolve(ab, g).values
        rhs = convolve(a, convolve(b, g)).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(lhs).max()))

    @_settings
    @given(seed=_seed, N=st.integers(min_value=3, max_value=40), alpha=_alpha,
           c=st.floats(min_value=-3.0, max_value=3.0))
    def test_fractional_difference_linear(self, seed, N, alpha, c):
        """D^alpha (u + c v) = D^alpha u + c D^alpha v."""
        u = Signal.random(N, 1, seed=seed)
        v = Signal.random(N, 1, seed=seed + 1)
        lhs = fractional_difference(u + c * v, alpha).values
        rhs = fractional_difference(u, alpha).values + c * fractional_difference(v, alpha).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(lhs).max()))


class TestKernelProperties:
    """Kernel laws over random orders."""

    @_settings
    @given(beta=_order, gamma=_order)
    def test_semigroup(self, beta, gamma):
        """k^beta * k^gamma = k^(beta + gamma)."""
        assert kernel_semigroup_residual(beta, gamma, 60) <= 1e-10

    @_settings
    @given(alpha=_alpha)
    def test_h_recursion(self, alpha):
        """h satisfies its three-term recursion."""
        assert h_recursion_residual(h_sequence(alpha, 120)) <= 1e-12


class TestResolventProperties:
    """The resolvent equation over random problems."""

    @_settings
    @given(A=matrices(), alpha=_alpha, gamma=_gamma, lam=st.integers(min_value=1, max_value=8))
    def test_resolvent_equation(self, A, alpha, gamma, lam):
        """The resolvent sequence satisfies its defining equation."""
        S = resolvent_sequence(A, alpha, gamma, lam, 80)
        assert resolvent_residual(S) <= 1e-9

    @_settings
    @given(A=matrices(max_dim=2), alpha=_alpha, gamma=_gamma,
           lam=st.integers(min_value=1, max_value=5), seed=_seed)
    def test_solvers_agree(self, A, alpha, gamma, lam, seed):
        """Convolution and direct stepping give the same solution."""
        spec = ProblemSpec(A, alpha, gamma, lam, Signal.random(40, A.shape[0], seed=seed))
        assert method_deviation(spec) <= 1e-9
