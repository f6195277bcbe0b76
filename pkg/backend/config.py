"""
Configuration settings for Scherk Lab.
Process-level settings from the environment plus the per-run experiment configuration.
"""

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from backend.exceptions import ScherkLabError


class Config:
    """Application configuration class."""

    # Application Settings
    APP_NAME = "Scherk Lab"
    VERSION = "0.1.0"

    # Output Settings
    OUTPUT_DIR: Path = Path(os.getenv("OUTPUT_DIR", "./output"))
    LOG_DIR: Path = Path(os.getenv("LOG_DIR", "./logs"))

    # Worker parallelism (0 = let the executor decide)
    THREADS: int = int(os.getenv("SCHERK_LAB_THREADS", "0"))

    # Logging Settings
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"

    # API Settings
    API_HOST: str = os.getenv("API_HOST", "0.0.0.0")
    API_PORT: int = int(os.getenv("API_PORT", "8000"))

    @classmethod
    def get_log_path(cls, filename: str) -> Path:
        """Path inside LOG_DIR, creating the directory."""
        cls.LOG_DIR.mkdir(parents=True, exist_ok=True)
        return cls.LOG_DIR / filename

    @classmethod
    def max_workers(cls) -> Optional[int]:
        """Thread cap for worker pools; None lets the executor choose."""
        threads = int(os.getenv("SCHERK_LAB_THREADS", str(cls.THREADS)))
        return threads if threads > 0 else None

    @classmethod
    def validate_config(cls) -> tuple[bool, list[str]]:
        """Validate configuration settings.

        Returns:
            tuple: (is_valid, list_of_errors)
        """
        errors = []

        if cls.THREADS < 0:
            errors.append(f"SCHERK_LAB_THREADS must be >= 0, got: {cls.THREADS}")

        if not 0 < cls.API_PORT < 65536:
            errors.append(f"API_PORT out of range: {cls.API_PORT}")

        valid_log_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if cls.LOG_LEVEL.upper() not in valid_log_levels:
            errors.append(f"Invalid LOG_LEVEL: {cls.LOG_LEVEL}. Must be one of {valid_log_levels}")

        return (len(errors) == 0, errors)


# Create a singleton instance
config = Config()


class ConfigError(ScherkLabError, ValueError):
    """Raised when an experiment configuration is unreadable or invalid."""

    def __init__(self, problems: "list[str] | str"):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("invalid experiment configuration: " + "; ".join(self.problems))


DEFAULT_MESH = {"target_edge_length": 0.1, "grading": 1.0}
DEFAULT_SOLVER = {
    "max_newton_iters": 50,
    "residual_tol": 1e-10,
    "line_search_shrink": 0.5,
    "continuation_steps": 1,
    "armijo": 1e-4,
    "max_line_search": 40,
    "stabilization_tol": 0.25,
    "sandwich_tol": 1e-8,
}
DEFAULT_HALFSPACE = {
    "mode": "touch",
    "c": 0.3,
    "step": 1e-3,
    "max_offset": 2.0,
    "p0": None,
    "r0": 0.5,
}
HALFSPACE_MODES = ("touch", "asymptotic")
# min_ratio applies to levels at or below ratio_level; halving_ratio bounds last/first of the barrier column
DEFAULT_AUDIT = {
    "min_ratio": 0.9,
    "ratio_level": -6.0,
    "ratio_trend": True,
    "halving_ratio": 0.5,
}


def _merged(defaults: dict, given: Optional[dict], section: str, problems: list[str]) -> dict:
    out = dict(defaults)
    if given is None:
        return out
    if not isinstance(given, dict):
        problems.append(f"'{section}' must be an object")
        return out
    for key, value in given.items():
        if key not in defaults:
            problems.append(f"unknown key '{section}.{key}'")
        else:
            out[key] = value
    return out


@dataclass
class ExperimentConfig:
    """Per-run configuration of the experiments CLI, read from a JSON file."""

    polygon_spec: Path
    curvature_scale: Optional[float] = None
    admissibility_grid: list[float] = field(default_factory=lambda: [0.0, -1.0, -2.0, -3.0])
    truncation_levels: list[float] = field(default_factory=lambda: [-2.0, -4.0, -6.0])
    L_sequence: list[float] = field(default_factory=lambda: [4.0, 8.0, 12.0, 16.0])
    n_list: list[float] = field(default_factory=lambda: [2.0, 4.0, 8.0, 12.0])
    t: float = 0.1
    t_max: float = 0.25
    basepoint: Optional[tuple[float, float]] = None
    mesh: dict = field(default_factory=lambda: dict(DEFAULT_MESH))
    solver: dict = field(default_factory=lambda: dict(DEFAULT_SOLVER))
    halfspace: dict = field(default_factory=lambda: dict(DEFAULT_HALFSPACE))
    audit: dict = field(default_factory=lambda: dict(DEFAULT_AUDIT))
    output_dir: Path = Config.OUTPUT_DIR
    pdf_summary: bool = False

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        """
        Build a configuration from a decoded JSON object.

        Args:
            data: Decoded JSON object
            base_dir: Directory against which relative paths resolve

        Raises:
            ConfigError: Listing every problem found
        """
        if not isinstance(data, dict):
            raise ConfigError("top level must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        problems = [f"unknown key '{key}'" for key in data if key not in known]
        if "polygon_spec" not in data:
            problems.append("missing required key 'polygon_spec'")

        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

        def resolve(value) -> Path:
            path = Path(value)
            return path if path.is_absolute() else (base_dir / path)

        kwargs: dict[str, Any] = {}
        for key in ("admissibility_grid", "truncation_levels", "L_sequence", "n_list"):
            if key in data:
                value = data[key]
                if not isinstance(value, list) or not all(isinstance(v, (int, float)) for v in value):
                    problems.append(f"'{key}' must be a list of numbers")
                else:
                    kwargs[key] = [float(v) for v in value]
        for key in ("t", "t_max", "curvature_scale"):
            if key in data and data[key] is not None:
                if not isinstance(data[key], (int, float)):
                    problems.append(f"'{key}' must be a number")
                else:
                    kwargs[key] = float(data[key])
        if data.get("basepoint") is not None:
            bp = data["basepoint"]
            if not (isinstance(bp, list) and len(bp) == 2 and all(isinstance(v, (int, float)) for v in bp)):
                problems.append("'basepoint' must be [x, y]")
            else:
                kwargs["basepoint"] = (float(bp[0]), float(bp[1]))
        kwargs["mesh"] = _merged(DEFAULT_MESH, data.get("mesh"), "mesh", problems)
        kwargs["solver"] = _merged(DEFAULT_SOLVER, data.get("solver"), "solver", problems)
        kwargs["halfspace"] = _merged(DEFAULT_HALFSPACE, data.get("halfspace"), "halfspace", problems)
        kwargs["audit"] = _merged(DEFAULT_AUDIT, data.get("audit"), "audit", problems)
        if "pdf_summary" in data:
            kwargs["pdf_summary"] = bool(data["pdf_summary"])
        kwargs["output_dir"] = resolve(data["output_dir"]) if "output_dir" in data else Config.OUTPUT_DIR

        if problems:
            raise ConfigError(problems)

        cfg = cls(polygon_spec=resolve(data["polygon_spec"]), **kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: "str | Path") -> "ExperimentConfig":
        """
        Load and validate a JSON configuration file.

        Raises:
            ConfigError: If the file is missing, malformed or invalid
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}: {e.msg}") from e
        return cls.from_dict(data, base_dir=path.resolve().parent)

    def validate(self):
        """
        Check value ranges and cross-field invariants.

        Raises:
            ConfigError: Listing every problem found
        """
        problems = []
        if not self.polygon_spec.is_file():
            problems.append(f"polygon spec not readable: {self.polygon_spec}")
        if self.curvature_scale is not None and not (self.curvature_scale > 0 and math.isfinite(self.curvature_scale)):
            problems.append(f"curvature_scale must be positive, got {self.curvature_scale}")
        if not self.admissibility_grid:
            problems.append("admissibility_grid must not be empty")
        if not self.truncation_levels:
            problems.append("truncation_levels must not be empty")
        elif any(b >= a for a, b in zip(self.truncation_levels, self.truncation_levels[1:])):
            problems.append("truncation_levels must be strictly decreasing")
        if not self.L_sequence or any(v <= 0 for v in self.L_sequence):
            problems.append("L_sequence must be a nonempty list of positive cutoffs")
        elif any(b <= a for a, b in zip(self.L_sequence, self.L_sequence[1:])):
            problems.append("L_sequence must be strictly increasing")
        if not self.n_list or self.n_list[0] <= 1.0:
            problems.append("n_list must be nonempty with every radius > 1")
        elif any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            problems.append("n_list must be strictly increasing")
        if not self.t_max > 0:
            problems.append(f"t_max must be positive, got {self.t_max}")
        if not 0 <= self.t <= self.t_max:
            problems.append(f"t must satisfy 0 <= t <= t_max, got t={self.t}, t_max={self.t_max}")
        if self.basepoint is not None and self.basepoint[0] ** 2 + self.basepoint[1] ** 2 >= 1.0:
            problems.append(f"basepoint must lie in the open unit disk, got {list(self.basepoint)}")
        if not self.mesh["target_edge_length"] > 0:
            problems.append("mesh.target_edge_length must be positive")
        if not self.mesh["grading"] >= 1.0:
            problems.append("mesh.grading must be >= 1")
        if not self.solver["residual_tol"] > 0:
            problems.append("solver.residual_tol must be positive")
        if not 0 < self.solver["line_search_shrink"] < 1:
            problems.append("solver.line_search_shrink must lie in (0, 1)")
        if int(self.solver["max_newton_iters"]) < 1 or int(self.solver["continuation_steps"]) < 1:
            problems.append("solver.max_newton_iters and solver.continuation_steps must be >= 1")
        if self.halfspace["mode"] not in HALFSPACE_MODES:
            problems.append(f"halfspace.mode must be one of {list(HALFSPACE_MODES)}")
        if not self.halfspace["step"] > 0:
            problems.append("halfspace.step must be positive")
        if not self.halfspace["r0"] > 0:
            problems.append("halfspace.r0 must be positive")
        if not self.halfspace["c"] >= 0:
            problems.append("halfspace.c must be >= 0")
        p0 = self.halfspace["p0"]
        if p0 is not None and not (
            isinstance(p0, list) and len(p0) == 2 and all(isinstance(v, (int, float)) for v in p0)
            and p0[0] ** 2 + p0[1] ** 2 < 1.0
        ):
            problems.append(f"halfspace.p0 must be null or [x, y] inside the unit disk, got {p0!r}")
        min_ratio = self.audit["min_ratio"]
        if min_ratio is not None and not (isinstance(min_ratio, (int, float)) and min_ratio > 0):
            problems.append(f"audit.min_ratio must be null or positive, got {min_ratio!r}")
        if not isinstance(self.audit["ratio_level"], (int, float)):
            problems.append("audit.ratio_level must be a number")
        if not isinstance(self.audit["ratio_trend"], bool):
            problems.append("audit.ratio_trend must be true or false")
        halving = self.audit["halving_ratio"]
        if not (isinstance(halving, (int, float)) and 0 < halving <= 1):
            problems.append(f"audit.halving_ratio must lie in (0, 1], got {halving!r}")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        """Fully resolved configuration; loading it back reproduces the run."""
        return {
            "polygon_spec": str(self.polygon_spec),
            "curvature_scale": self.curvature_scale,
            "admissibility_grid": list(self.admissibility_grid),
            "truncation_levels": list(self.truncation_levels),
            "L_sequence": list(self.L_sequence),
            "n_list": list(self.n_list),
            "t": self.t,
            "t_max": self.t_max,
            "basepoint": list(self.basepoint) if self.basepoint is not None else None,
            "mesh": dict(self.mesh),
            "solver": dict(self.solver),
            "halfspace": dict(self.halfspace),
            "audit": dict(self.audit),
            "output_dir": str(self.output_dir),
            "pdf_summary": self.pdf_summary,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
