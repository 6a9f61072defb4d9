"""
fracdelay - fractional difference equations of order 2 < alpha < 3 with delay.

Kernel sequences, the Riemann-Liouville fractional difference, resolvent
sequences, two independent solvers, unit-circle symbol scans and empirical
maximal-regularity diagnostics.
"""

__version__ = "1.0.0"
__author__ = "fracdelay contributors"

from fracdelay.core.models import ProblemSpec, Signal, Solution

__all__ = ["ProblemSpec", "Signal", "Solution", "__version__"]
