"""
Configuration management for fracdelay.

Two layers:
- Config: user defaults (tolerances, grid sizes, seeds) stored as JSON in the
  platform config directory
- RunConfig: one declarative problem file for the CLI, echoed back in every
  report so that a run can be reproduced from its report
"""

import json
import os
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from fracdelay.core.logging import get_logger
from fracdelay.core.models import ProblemSpec, Signal, matrix_to_json
from fracdelay.core.validation import (
    ConfigError,
    ValidationError,
    check_increasing,
    validate_exponent,
    validate_horizon,
    validate_radius,
)

logger = get_logger(__name__)


def get_config_dir() -> Path:
    """Get the platform-appropriate configuration directory."""
    system = platform.system().lower()

    if system == "windows":
        base = os.environ.get("APPDATA", os.path.expanduser("~"))
        return Path(base) / "fracdelay"
    xdg_config = os.environ.get("XDG_CONFIG_HOME", os.path.expanduser("~/.config"))
    return Path(xdg_config) / "fracdelay"


@dataclass
class NumericsConfig:
    """Limits and tolerances shared by the numerical core."""
    max_horizon: int = 100_000
    capacity_threshold: float = 1e300
    overflow_warning: float = 1e280
    identity_tol: float = 1e-10     # relative, for kernel and convolution identities
    abs_floor: float = 1e-12
    residual_tol: float = 1e-9      # relative, for equation residuals
    dense_limit: int = 4096         # (N+1)*d for dense Toeplitz matrices
    conv_method: str = "direct"     # "direct" or "fft"


@dataclass
class GridConfig:
    """Unit-circle grid and symbol-scan settings."""
    m: int = 4096
    exclude_zero: float = 1e-4
    exclude_pi: float = 1e-4
    cluster_points: int = 16
    fd_step: float = 1e-5
    refine_rounds: int = 3
    trend_tol: float = 1.05
    refine_tol: float = 1e-10
    neumann_nodes: int = 32


@dataclass
class ContourConfig:
    """Contour quadrature settings."""
    radius: float = 0.95
    nodes: int = 4096
    fallback_radius: float = 0.0    # 0 picks max(1.05, 1.25 * growth rate)
    agreement_tol: float = 1e-8
    convergence_tol: float = 1e-6


@dataclass
class RegularityConfig:
    """Operator-norm estimation settings."""
    p: float = 2.0
    trials: int = 256
    seed: int = 0
    power_iterations: int = 30
    horizons: List[int] = field(default_factory=lambda: [64, 128, 256])


@dataclass
class ExportConfig:
    """Export configuration."""
    directory: str = "./fracdelay-out"


SECTIONS = {
    "numerics": NumericsConfig,
    "grid": GridConfig,
    "contour": ContourConfig,
    "regularity": RegularityConfig,
    "export": ExportConfig,
}


@dataclass
class Config:
    """
    Main configuration container.

    Unknown sections in the file are ignored with a warning; unknown keys
    inside a known section make the whole file fall back to defaults.
    """
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    contour: ContourConfig = field(default_factory=ContourConfig)
    regularity: RegularityConfig = field(default_factory=RegularityConfig)
    export: ExportConfig = field(default_factory=ExportConfig)

    _config_path: Optional[Path] = field(default=None, repr=False)

    def __post_init__(self):
        if self._config_path is None:
            self._config_path = get_config_dir() / "config.json"

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "Config":
        """
        Load configuration from file.

        Args:
            path: Custom config file path (uses default if None)

        Returns:
            Config instance with loaded settings
        """
        config = cls()
        config._config_path = Path(path) if path else get_config_dir() / "config.json"

        if config._config_path.exists():
            try:
                with open(config._config_path, "r", encoding="utf-8") as f:
                    data = json.load(f)

                for name, section_cls in SECTIONS.items():
                    if name in data:
                        setattr(config, name, section_cls(**data[name]))
                for name in set(data) - set(SECTIONS):
                    logger.warning("ignoring unknown config section: %s", name)
            except (json.JSONDecodeError, TypeError, KeyError) as e:
                logger.warning("could not load config %s: %s", config._config_path, e)
                config.reset()

        return config

    def save(self, path: Optional[Path] = None) -> None:
        """Save configuration to file."""
        save_path = Path(path) if path else self._config_path
        save_path.parent.mkdir(parents=True, exist_ok=True)

        with open(save_path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)

    def to_dict(self) -> dict:
        """Convert config to dictionary."""
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def set_value(self, dotted_key: str, raw: str) -> None:
        """
        Set one value from a ``section.key=value`` style assignment.

        The raw string is parsed as JSON when possible, else kept as text.

        Raises:
            ConfigError: If the section or key does not exist
        """
        try:
            section_name, key = dotted_key.split(".", 1)
        except ValueError as e:
            raise ConfigError(f"expected section.key, got {dotted_key!r}") from e

        if section_name not in SECTIONS:
            raise ConfigError(f"unknown config section: {section_name}")
        section = getattr(self, section_name)
        if key not in {f.name for f in fields(section)}:
            raise ConfigError(f"unknown key {key!r} in section {section_name}")

        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        setattr(section, key, value)

    def reset(self) -> None:
        """Reset all settings to defaults."""
        for name, section_cls in SECTIONS.items():
            setattr(self, name, section_cls())


_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = Config.load()
    return _config


def reload_config() -> Config:
    """Reload configuration from disk."""
    global _config
    _config = Config.load()
    return _config


# Run configuration (CLI problem files)

FORCING_KINDS = ("delta", "ones", "random", "inline")

_RUN_KEYS = {
    "problem": {"A", "alpha", "gamma", "lambda", "N", "forcing"},
    "grid": {"m", "exclude_zero", "exclude_pi", "contour_r", "contour_nodes"},
    "mr": {"p", "trials", "seed", "horizons"},
    "output": {"directory"},
    "tolerances": {"residual", "identity", "contour"},
}
_FORCING_KEYS = {"kind", "seed", "values", "component", "scale"}


def parse_complex(value: Union[int, float, str, List[float]]) -> complex:
    """
    Parse one matrix or signal entry.

    Accepts numbers, strings such as ``"1-0.5j"`` and ``[re, im]`` pairs.

    Raises:
        ConfigError: If the entry cannot be parsed
    """
    try:
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, bool):
            raise TypeError("booleans are not numbers")
        return complex(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"cannot parse numeric entry {value!r}") from e


@dataclass
class ForcingSpec:
    """How to build the forcing signal f."""
    kind: str = "delta"
    seed: Optional[int] = 0
    values: Optional[List[Any]] = None
    component: int = 0
    scale: float = 1.0

    def build(self, N: int, d: int) -> Signal:
        """
        Materialize the forcing on 0..N.

        Raises:
            ConfigError: If kind is unknown or inline values have the wrong shape
        """
        if self.kind == "delta":
            if not 0 <= self.component < d:
                raise ConfigError(f"forcing component {self.component} out of range for d={d}")
            return Signal.delta(N, d, component=self.component, scale=self.scale)
        if self.kind == "ones":
            return Signal.ones(N, d, scale=self.scale)
        if self.kind == "random":
            return Signal.random(N, d, seed=self.seed, scale=self.scale)
        if self.kind == "inline":
            if self.values is None:
                raise ConfigError("inline forcing needs 'values'")
            rows = []
            for row in self.values:
                entries = row if isinstance(row, list) and d > 1 else [row]
                rows.append([parse_complex(x) for x in entries])
            arr = np.array(rows, dtype=complex)
            if arr.shape != (N + 1, d):
                raise ConfigError(f"inline forcing must have shape ({N + 1}, {d}), "
                                  f"got {arr.shape}")
            return Signal(self.scale * arr)
        raise ConfigError(f"unknown forcing kind {self.kind!r}; expected one of {FORCING_KINDS}")


@dataclass
class RunConfig:
    """
    One declarative run: problem, grid, regularity, output and tolerances.

    Missing values fall back to the user Config. Unknown keys raise
    ConfigError.
    """
    A: Any = field(default_factory=lambda: [[0.05]])
    alpha: float = 2.5
    gamma: float = -0.5
    lam: int = 1
    N: int = 200
    forcing: ForcingSpec = field(default_factory=ForcingSpec)

    grid_m: int = 4096
    exclude_zero: float = 1e-4
    exclude_pi: float = 1e-4
    contour_r: float = 0.95
    contour_nodes: int = 4096

    p: float = 2.0
    trials: int = 256
    seed: int = 0
    horizons: List[int] = field(default_factory=lambda: [64, 128, 256])

    directory: str = "./fracdelay-out"

    residual_tol: float = 1e-9
    identity_tol: float = 1e-10
    contour_tol: float = 1e-8

    @classmethod
    def defaults(cls, config: Optional[Config] = None) -> "RunConfig":
        """Run configuration seeded from the user defaults."""
        config = config or get_config()
        return cls(
            grid_m=config.grid.m,
            exclude_zero=config.grid.exclude_zero,
            exclude_pi=config.grid.exclude_pi,
            contour_r=config.contour.radius,
            contour_nodes=config.contour.nodes,
            p=config.regularity.p,
            trials=config.regularity.trials,
            seed=config.regularity.seed,
            horizons=list(config.regularity.horizons),
            directory=config.export.directory,
            residual_tol=config.numerics.residual_tol,
            identity_tol=config.numerics.identity_tol,
            contour_tol=config.contour.agreement_tol,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any], config: Optional[Config] = None) -> "RunConfig":
        """
        Parse a run configuration dictionary.

        A full report (with its echo under ``"config"``) is accepted too.

        Raises:
            ConfigError: On unknown sections or keys, or malformed values
        """
        if "config" in data and "command" in data:
            data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError("run configuration must be a JSON object")

        unknown = set(data) - set(_RUN_KEYS)
        if unknown:
            raise ConfigError(f"unknown run config sections: {sorted(unknown)}")
        for section, allowed in _RUN_KEYS.items():
            body = data.get(section, {})
            if not isinstance(body, dict):
                raise ConfigError(f"section {section!r} must be an object")
            extra = set(body) - allowed
            if extra:
                raise ConfigError(f"unknown keys in {section!r}: {sorted(extra)}")

        run = cls.defaults(config)
        problem = data.get("problem", {})
        grid = data.get("grid", {})
        mr = data.get("mr", {})
        output = data.get("output", {})
        tolerances = data.get("tolerances", {})

        try:
            if "A" in problem:
                run.A = problem["A"]
            run.alpha = float(problem.get("alpha", run.alpha))
            run.gamma = float(problem.get("gamma", run.gamma))
            run.lam = int(problem.get("lambda", run.lam))
            run.N = int(problem.get("N", run.N))
            if "forcing" in problem:
                forcing = problem["forcing"]
                if not isinstance(forcing, dict):
                    raise ConfigError("forcing must be an object")
                extra = set(forcing) - _FORCING_KEYS
                if extra:
                    raise ConfigError(f"unknown keys in forcing: {sorted(extra)}")
                run.forcing = ForcingSpec(**forcing)

            run.grid_m = int(grid.get("m", run.grid_m))
            run.exclude_zero = float(grid.get("exclude_zero", run.exclude_zero))
            run.exclude_pi = float(grid.get("exclude_pi", run.exclude_pi))
            run.contour_r = float(grid.get("contour_r", run.contour_r))
            run.contour_nodes = int(grid.get("contour_nodes", run.contour_nodes))

            run.p = float(mr.get("p", run.p))
            run.trials = int(mr.get("trials", run.trials))
            run.seed = int(mr.get("seed", run.seed))
            run.horizons = [int(h) for h in mr.get("horizons", run.horizons)]

            run.directory = str(output.get("directory", run.directory))

            run.residual_tol = float(tolerances.get("residual", run.residual_tol))
            run.identity_tol = float(tolerances.get("identity", run.identity_tol))
            run.contour_tol = float(tolerances.get("contour", run.contour_tol))
        except (TypeError, ValueError) as e:
            if isinstance(e, ValidationError):
                raise
            raise ConfigError(f"malformed run configuration: {e}") from e

        run.validate()
        return run

    @classmethod
    def load(cls, path: Path, config: Optional[Config] = None) -> "RunConfig":
        """Load a run configuration (or a previous report) from a JSON file."""
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
        return cls.from_dict(data, config)

    def validate(self) -> None:
        """
        Check grid, regularity and tolerance fields.

        Problem fields are validated when the ProblemSpec is built.
        """
        if self.grid_m < 16:
            raise ConfigError(f"grid m must be >= 16, got {self.grid_m}")
        if self.contour_nodes < 256:
            raise ConfigError(f"contour nodes must be >= 256, got {self.contour_nodes}")
        if self.exclude_zero < 0 or self.exclude_pi < 0:
            raise ConfigError("exclusion radii must be non-negative")
        validate_radius(self.contour_r)
        validate_exponent(self.p)
        validate_horizon(self.N, minimum=3)
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        self.horizons = list(check_increasing(self.horizons))
        for name in ("residual_tol", "identity_tol", "contour_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"tolerance {name} must be positive")

    def matrix(self) -> np.ndarray:
        """Parse A into a complex matrix (scalars become 1x1)."""
        A = self.A
        if not isinstance(A, list):
            return np.array([[parse_complex(A)]])
        if A and not isinstance(A[0], list):
            raise ConfigError("A must be a list of rows")
        return np.array([[parse_complex(x) for x in row] for row in A], dtype=complex)

    def problem(self) -> ProblemSpec:
        """
        Build the ProblemSpec.

        Raises:
            ValidationError: If the problem fields are invalid
        """
        A = self.matrix()
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"A must be square, got shape {A.shape}")
        f = self.forcing.build(self.N, A.shape[0])
        return ProblemSpec(A, self.alpha, self.gamma, self.lam, f)

    def to_dict(self) -> dict:
        """Serialize in the file layout accepted by from_dict."""
        A = self.A if isinstance(self.A, list) else matrix_to_json(self.matrix())
        return {
            "problem": {
                "A": A,
                "alpha": self.alpha,
                "gamma": self.gamma,
                "lambda": self.lam,
                "N": self.N,
                "forcing": asdict(self.forcing),
            },
            "grid": {
                "m": self.grid_m,
                "exclude_zero": self.exclude_zero,
                "exclude_pi": self.exclude_pi,
                "contour_r": self.contour_r,
                "contour_nodes": self.contour_nodes,
            },
            "mr": {"p": self.p, "trials": self.trials, "seed": self.seed,
                   "horizons": list(self.horizons)},
            "output": {"directory": self.directory},
            "tolerances": {
                "residual": self.residual_tol,
                "identity": self.identity_tol,
                "contour": self.contour_tol,
            },
        }
