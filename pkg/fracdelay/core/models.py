"""
Data models for fracdelay.

Defines the dataclasses passed between the numerical modules:
- KernelSeq / HSeq: scalar kernel sequences with their order attached
- Signal: finite-horizon vector-valued sequence on 0..N
- OperatorSeq / ResolventSeq: matrix sequences indexed from a start <= 0
- ProblemSpec / Solution: one instance of the delay equation and its solution
- Report: machine-readable summary written by the CLI
"""

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from fracdelay.core.validation import (
    ShapeError,
    validate_finite,
    validate_problem,
)


class SolveMethod(Enum):
    """How a Solution was produced."""
    CONVOLUTION = "convolution"
    DIRECT = "direct"


class OperatorKind(Enum):
    """The two maximal-regularity operators."""
    E_ALPHA = "E_alpha"
    F_ALPHA = "F_alpha"


class Verdict(Enum):
    """Outcomes of the heuristic checks."""
    PASS = "pass"
    FAIL = "fail"
    BOUNDED_LOOKING = "bounded-looking"
    GROWING = "growing"
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"
    MR_CONSISTENT = "MR-consistent"
    INCONSISTENT = "inconsistent"


def complex_to_json(z: complex) -> Union[float, str]:
    """Encode a complex number; real values stay plain floats."""
    z = complex(z)
    if z.imag == 0.0:
        return z.real
    return repr(z).strip("()")


def matrix_to_json(M: np.ndarray) -> List[List[Union[float, str]]]:
    """Encode a dense matrix as rows of numbers or complex strings."""
    return [[complex_to_json(x) for x in row] for row in np.asarray(M)]


@dataclass(frozen=True, eq=False)
class KernelSeq:
    """
    Kernel k^order on 0..N.

    Attributes:
        order: Fractional order (positive, or negative for difference weights)
        values: Real array of length N+1
    """
    order: float
    values: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]

    def to_dict(self) -> dict:
        return {"order": self.order, "values": self.values.tolist()}

    def to_csv(self, path: Path) -> Path:
        """Write (index, value) rows."""
        return write_columns(path, ["n", "value"],
                             [np.arange(len(self.values)), self.values])


@dataclass(frozen=True, eq=False)
class HSeq:
    """The scalar sequence h for one order alpha."""
    alpha: float
    values: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "values": self.values.tolist()}

    def to_csv(self, path: Path) -> Path:
        return write_columns(path, ["n", "value"],
                             [np.arange(len(self.values)), self.values])


@dataclass(eq=False)
class Signal:
    """
    Vector-valued sequence f: {0..N} -> C^d.

    Values are stored as a complex array of shape (N+1, d). A 1-D input is
    read as a scalar signal (d = 1).
    """
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ShapeError(f"signal values must have shape (N+1, d), got {arr.shape}")
        validate_finite(arr, "signal")
        self.values = arr

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def zeros(cls, N: int, d: int = 1) -> "Signal":
        return cls(np.zeros((N + 1, d), dtype=complex))

    @classmethod
    def delta(cls, N: int, d: int = 1, component: int = 0, scale: complex = 1.0) -> "Signal":
        """Unit impulse scale * delta_0 * e_component."""
        values = np.zeros((N + 1, d), dtype=complex)
        values[0, component] = scale
        return cls(values)

    @classmethod
    def ones(cls, N: int, d: int = 1, scale: complex = 1.0) -> "Signal":
        return cls(np.full((N + 1, d), scale, dtype=complex))

    @classmethod
    def random(cls, N: int, d: int = 1, seed: Optional[int] = None,
               scale: float = 1.0) -> "Signal":
        """Complex Gaussian signal from a seeded generator."""
        rng = np.random.default_rng(seed)
        values = rng.standard_normal((N + 1, d)) + 1j * rng.standard_normal((N + 1, d))
        return cls(scale * values)

    def norms(self) -> np.ndarray:
        """Euclidean norm of each entry."""
        return np.linalg.norm(self.values, axis=1)

    def sup_norm(self) -> float:
        return float(self.norms().max())

    def truncate(self, N: int) -> "Signal":
        return Signal(self.values[: N + 1].copy())

    def __add__(self, other: "Signal") -> "Signal":
        if self.values.shape != other.values.shape:
            raise ShapeError(f"cannot add signals of shapes {self.values.shape} "
                             f"and {other.values.shape}")
        return Signal(self.values + other.values)

    def __mul__(self, c: complex) -> "Signal":
        return Signal(self.values * c)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"dim": self.dim, "horizon": self.horizon,
                "values": [[complex_to_json(x) for x in row] for row in self.values]}


@dataclass(eq=False)
class OperatorSeq:
    """
    Sequence of d x d complex matrices indexed start..N.

    Attributes:
        values: Array of shape (N - start + 1, d, d)
        start: Index of values[0], never positive
    """
    values: np.ndarray
    start: int = 0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"operator values must have shape (L, d, d), got {arr.shape}")
        if self.start > 0:
            raise ShapeError(f"start index must be <= 0, got {self.start}")
        validate_finite(arr, "operator sequence")
        self.values = arr

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> int:
        return self.start + self.values.shape[0] - 1

    def at(self, n: int) -> np.ndarray:
        """S(n); indices before start read as zero."""
        if n < self.start:
            return np.zeros((self.dim, self.dim), dtype=complex)
        if n > self.horizon:
            raise ShapeError(f"index {n} beyond horizon {self.horizon}")
        return self.values[n - self.start]

    def nonnegative(self) -> np.ndarray:
        """Restriction to 0..N as an (N+1, d, d) array."""
        return self.values[-self.start:]

    def norms(self) -> np.ndarray:
        """Operator 2-norm of each entry on 0..N."""
        return np.linalg.norm(self.nonnegative(), ord=2, axis=(1, 2))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "start": self.start,
            "horizon": self.horizon,
            "norms": self.norms().tolist(),
        }

    def to_csv(self, path: Path, entries: bool = False) -> Path:
        """Write (n, ||S(n)||) rows, optionally followed by every entry."""
        n = np.arange(0, self.horizon + 1)
        headers = ["n", "norm"]
        columns = [n, self.norms()]
        if entries:
            block = self.nonnegative()
            for i in range(self.dim):
                for j in range(self.dim):
                    headers += [f"re_{i}{j}", f"im_{i}{j}"]
                    columns += [block[:, i, j].real, block[:, i, j].imag]
        return write_columns(path, headers, columns)


@dataclass(eq=False)
class ResolventSeq(OperatorSeq):
    """
    Resolvent sequence S on -lam..N with the parameters that built it.

    The first lam entries are the prescribed zeros.
    """
    A: Optional[np.ndarray] = None
    alpha: float = 2.5
    gamma: float = 0.0
    lam: int = 1

    def delayed_at(self, n: int) -> np.ndarray:
        """S(n - lam)."""
        return self.at(n - self.lam)

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update({
            "A": matrix_to_json(self.A) if self.A is not None else None,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "lambda": self.lam,
        })
        return data


@dataclass(eq=False)
class ProblemSpec:
    """
    One instance of the delay equation with zero initial data.

    Attributes:
        A: d x d complex coefficient matrix
        alpha: Order in (2, 3)
        gamma: Real delay coefficient
        lam: Delay (positive integer)
        f: Forcing on 0..N
    """
    A: np.ndarray
    alpha: float
    gamma: float
    lam: int
    f: Signal

    def __post_init__(self):
        self.A, self.alpha, self.gamma, self.lam = validate_problem(
            self.A, self.alpha, self.gamma, self.lam)
        if not isinstance(self.f, Signal):
            self.f = Signal(self.f)
        if self.f.dim != self.A.shape[0]:
            raise ShapeError(f"forcing has dimension {self.f.dim}, A is "
                             f"{self.A.shape[0]}x{self.A.shape[0]}")

    @property
    def N(self) -> int:
        return self.f.horizon

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def params(self) -> "ProblemParams":
        return ProblemParams(self.A, self.alpha, self.gamma, self.lam)

    def with_forcing(self, f: Signal) -> "ProblemSpec":
        return ProblemSpec(self.A, self.alpha, self.gamma, self.lam, f)

    def to_dict(self) -> dict:
        return {
            "A": matrix_to_json(self.A),
            "alpha": self.alpha,
            "gamma": self.gamma,
            "lambda": self.lam,
            "N": self.N,
        }


@dataclass(frozen=True, eq=False)
class ProblemParams:
    """The (A, alpha, gamma, lam) part of a ProblemSpec, without forcing."""
    A: np.ndarray
    alpha: float
    gamma: float
    lam: int

    @classmethod
    def create(cls, A, alpha: float, gamma: float, lam: int) -> "ProblemParams":
        """Validated constructor."""
        return cls(*validate_problem(A, alpha, gamma, lam))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def a_norm(self) -> float:
        """Spectral norm of A."""
        return float(np.linalg.norm(self.A, ord=2))

    def to_dict(self) -> dict:
        return {"A": matrix_to_json(self.A), "alpha": self.alpha,
                "gamma": self.gamma, "lambda": self.lam}


@dataclass(eq=False)
class Solution:
    """
    Solution of one ProblemSpec.

    Attributes:
        u: Solution on 0..N+3 with u(0)=u(1)=u(2)=0
        dalpha_u: Fractional difference of u on 0..N
        residual_max: Max equation residual over 0..N
        method: Which solver produced u
        residuals: Per-n equation residual on 0..N
        overflow_risk: True if an intermediate norm exceeded the warning level
    """
    u: Signal
    dalpha_u: Signal
    residual_max: float
    method: SolveMethod
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    overflow_risk: bool = False

    def __post_init__(self):
        if np.any(self.u.values[:3] != 0):
            raise ShapeError("solution must satisfy u(0)=u(1)=u(2)=0")

    @property
    def horizon(self) -> int:
        return self.dalpha_u.horizon

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "horizon": self.horizon,
            "residual_max": self.residual_max,
            "sup_u": self.u.sup_norm(),
            "overflow_risk": self.overflow_risk,
        }

    def to_csv(self, path: Path) -> Path:
        """
        Write one row per n on 0..N+3.

        Columns are n, Re/Im of each component of u, the norm of the
        fractional difference and the residual (blank beyond N).
        """
        n_rows = self.u.horizon + 1
        headers = ["n"]
        columns: List[Any] = [np.arange(n_rows)]
        for i in range(self.u.dim):
            headers += [f"re_u{i}", f"im_u{i}"]
            columns += [self.u.values[:, i].real, self.u.values[:, i].imag]

        pad = n_rows - (self.horizon + 1)
        dnorm = np.concatenate([self.dalpha_u.norms(), np.full(pad, np.nan)])
        res = np.concatenate([self.residuals, np.full(n_rows - len(self.residuals), np.nan)])
        headers += ["dalpha_norm", "residual"]
        columns += [dnorm, res]
        return write_columns(path, headers, columns)


@dataclass
class Report:
    """
    Machine-readable summary of one CLI run.

    Attributes:
        command: Subcommand that produced the report
        verdicts: Named verdict strings
        metrics: Named numbers (residuals, suprema, norm estimates)
        config: Echo of the run configuration
        artifacts: Paths of CSV files written alongside
        exit_code: Process exit code of the run
    """
    command: str
    verdicts: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)
    seeds: Dict[str, Optional[int]] = field(default_factory=dict)
    exit_code: int = 0
    created_at: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> dict:
        from fracdelay import __version__

        return {
            "command": self.command,
            "created_at": self.created_at.isoformat(),
            "versions": {"fracdelay": __version__, "numpy": np.__version__},
            "verdicts": self.verdicts,
            "metrics": _jsonable(self.metrics),
            "seeds": self.seeds,
            "artifacts": self.artifacts,
            "exit_code": self.exit_code,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _jsonable(obj: Any) -> Any:
    """Convert numpy scalars, arrays and complex numbers for json.dumps."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else repr(float(obj))
    return obj


def write_columns(path: Path, headers: List[str], columns: List[Any]) -> Path:
    """
    Write equally long columns as a UTF-8 CSV file.

    Floats use the shortest round-trip repr; NaN cells are left blank.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for row in zip(*columns):
            writer.writerow([_cell(x) for x in row])
    return path


def _cell(x: Any) -> str:
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return ""
    return repr(x)


__all__ = [
    "SolveMethod", "OperatorKind", "Verdict", "KernelSeq", "HSeq", "Signal",
    "OperatorSeq", "ResolventSeq", "ProblemSpec", "ProblemParams", "Solution", "Report",
    "write_columns", "complex_to_json", "matrix_to_json",
]
