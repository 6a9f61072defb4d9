"""Core module - kernels, calculus, resolvent, solvers, data models and configuration."""

from fracdelay.core.config import Config, RunConfig, get_config
from fracdelay.core.logging import configure_logging, get_logger
from fracdelay.core.models import (
    OperatorSeq, ProblemParams, ProblemSpec, ResolventSeq, Signal, Solution, Verdict
)
from fracdelay.core.resolvent import resolvent_sequence
from fracdelay.core.solver import solve, solve_convolution, solve_direct
from fracdelay.core.validation import SpectralHitError, ValidationError

__all__ = [
    "Config", "RunConfig", "get_config", "configure_logging", "get_logger",
    "OperatorSeq", "ProblemParams", "ProblemSpec", "ResolventSeq", "Signal", "Solution",
    "Verdict", "resolvent_sequence", "solve", "solve_convolution", "solve_direct",
    "SpectralHitError", "ValidationError",
]
