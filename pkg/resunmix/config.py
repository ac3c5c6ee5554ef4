"""
Configuration management for resunmix.

This module provides centralized defaults for dictionary construction, the ADMM
solver, regularization weights and the synthetic scene generator. Values can be
set via environment variables, a dotenv file, or code.
"""

from contextvars import ContextVar
from dataclasses import dataclass, field
import os
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from dotenv import dotenv_values

# Values read from a dotenv file by load_config; they shadow os.environ
_file_values: ContextVar[Dict[str, str]] = ContextVar("unmix_file_values", default={})


def _env(name: str, default: str) -> str:
    file_values = _file_values.get()
    if name in file_values:
        return file_values[name]
    return os.getenv(name, default)


def _env_bool(name: str, default: str) -> bool:
    return _env(name, default).lower() == "true"


@dataclass
class UnmixConfig:
    """Configuration for dictionaries, solver and scene generation."""

    # Interaction dictionary limits
    max_dictionary_bytes: int = field(
        default_factory=lambda: int(_env("UNMIX_MAX_DICTIONARY_BYTES", str(2 * 1024**3)))
    )
    max_interaction_order: int = field(
        default_factory=lambda: int(_env("UNMIX_MAX_INTERACTION_ORDER", "5"))
    )

    # ADMM solver defaults
    solver_mu0: float = field(default_factory=lambda: float(_env("UNMIX_SOLVER_MU0", "0.05")))
    solver_max_iter: int = field(
        default_factory=lambda: int(_env("UNMIX_SOLVER_MAX_ITER", "1000"))
    )
    solver_tol: float = field(default_factory=lambda: float(_env("UNMIX_SOLVER_TOL", "1e-5")))
    solver_adapt_ratio: float = field(
        default_factory=lambda: float(_env("UNMIX_SOLVER_ADAPT_RATIO", "10"))
    )
    solver_adapt_factor: float = field(
        default_factory=lambda: float(_env("UNMIX_SOLVER_ADAPT_FACTOR", "2"))
    )
    solver_adapt: bool = field(default_factory=lambda: _env_bool("UNMIX_SOLVER_ADAPT", "true"))
    solver_adapt_period: int = field(
        default_factory=lambda: int(_env("UNMIX_SOLVER_ADAPT_PERIOD", "10"))
    )
    solver_adapt_max_changes: int = field(
        default_factory=lambda: int(_env("UNMIX_SOLVER_ADAPT_MAX_CHANGES", "10"))
    )
    solver_require_both: bool = field(
        default_factory=lambda: _env_bool("UNMIX_SOLVER_REQUIRE_BOTH", "true")
    )

    # Regularization defaults (centers of the tau search grid)
    nusal_tau1: float = field(default_factory=lambda: float(_env("UNMIX_NUSAL_TAU1", "0.05")))
    nusal_tau2: float = field(default_factory=lambda: float(_env("UNMIX_NUSAL_TAU2", "0.05")))
    rusal_tau1: float = field(default_factory=lambda: float(_env("UNMIX_RUSAL_TAU1", "0.01")))
    rusal_tau2: float = field(default_factory=lambda: float(_env("UNMIX_RUSAL_TAU2", "0.01")))
    rusal_dct_dim: int = field(default_factory=lambda: int(_env("UNMIX_RUSAL_DCT_DIM", "20")))
    tau_grid: Tuple[float, ...] = field(
        default_factory=lambda: tuple(
            float(v) for v in _env("UNMIX_TAU_GRID", "0.01,0.05,0.1").split(",") if v.strip()
        )
    )
    grid_workers: int = field(default_factory=lambda: int(_env("UNMIX_GRID_WORKERS", "1")))

    # Post-solve cleanup
    abundance_cleanup_tol: float = field(
        default_factory=lambda: float(_env("UNMIX_ABUNDANCE_CLEANUP_TOL", "1e-9"))
    )

    # Synthetic scenes
    potts_sweeps: int = field(default_factory=lambda: int(_env("UNMIX_POTTS_SWEEPS", "100")))
    potts_beta: float = field(default_factory=lambda: float(_env("UNMIX_POTTS_BETA", "0.8")))
    endmember_min_angle_deg: float = field(
        default_factory=lambda: float(_env("UNMIX_ENDMEMBER_MIN_ANGLE_DEG", "5"))
    )
    endmember_max_attempts: int = field(
        default_factory=lambda: int(_env("UNMIX_ENDMEMBER_MAX_ATTEMPTS", "100"))
    )
    covariance_jitter: float = field(
        default_factory=lambda: float(_env("UNMIX_COVARIANCE_JITTER", "1e-10"))
    )

    def __post_init__(self):
        """Validate configuration after initialization."""
        self._validate()

    def _validate(self):
        """Validate configuration values."""
        if self.max_dictionary_bytes <= 0:
            raise ValueError("max_dictionary_bytes must be positive")
        if self.max_interaction_order < 2:
            raise ValueError("max_interaction_order must be >= 2")
        if self.solver_mu0 <= 0:
            raise ValueError("solver_mu0 must be positive")
        if self.solver_max_iter <= 0:
            raise ValueError("solver_max_iter must be positive")
        if self.solver_tol <= 0:
            raise ValueError("solver_tol must be positive")
        if self.solver_adapt_ratio <= 0:
            raise ValueError("solver_adapt_ratio must be positive")
        if self.solver_adapt_factor <= 1:
            raise ValueError("solver_adapt_factor must be > 1")
        if self.solver_adapt_period < 1:
            raise ValueError("solver_adapt_period must be >= 1")
        if self.solver_adapt_max_changes < 0:
            raise ValueError("solver_adapt_max_changes must be non-negative")

        for name in ("nusal_tau1", "nusal_tau2", "rusal_tau1", "rusal_tau2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.rusal_dct_dim < 1:
            raise ValueError("rusal_dct_dim must be >= 1")
        if not self.tau_grid:
            raise ValueError("tau_grid cannot be empty")
        if any(t < 0 for t in self.tau_grid):
            raise ValueError("tau_grid values must be non-negative")
        if self.grid_workers < 1:
            raise ValueError("grid_workers must be >= 1")

        if self.abundance_cleanup_tol < 0:
            raise ValueError("abundance_cleanup_tol must be non-negative")
        if self.potts_sweeps < 1:
            raise ValueError("potts_sweeps must be >= 1")
        if self.potts_beta < 0:
            raise ValueError("potts_beta must be non-negative")
        if not (0 < self.endmember_min_angle_deg < 90):
            raise ValueError("endmember_min_angle_deg must be between 0 and 90")
        if self.endmember_max_attempts < 1:
            raise ValueError("endmember_max_attempts must be >= 1")
        if self.covariance_jitter < 0:
            raise ValueError("covariance_jitter must be non-negative")


# Global configuration instance
_config: Optional[UnmixConfig] = None


def get_config() -> UnmixConfig:
    """
    Get the global configuration instance.

    Returns:
        UnmixConfig: The global configuration object
    """
    global _config
    if _config is None:
        _config = UnmixConfig()
    return _config


def set_config(config: UnmixConfig):
    """
    Set the global configuration instance.

    Args:
        config: The new configuration object
    """
    global _config
    _config = config


def reset_config():
    """Reset the global configuration to default values."""
    global _config
    _config = None


def load_config(env_file: Union[str, Path]) -> UnmixConfig:
    """
    Build a configuration from a dotenv file of UNMIX_* settings.

    Values in the file take precedence over the process environment, which is
    left untouched.

    Args:
        env_file: Path to the dotenv file

    Returns:
        UnmixConfig built from the file and the environment

    Raises:
        ValueError: If the file does not exist or holds invalid values
    """
    path = Path(env_file)
    if not path.is_file():
        raise ValueError(f"Config file not found: {path}")
    values = {k: v for k, v in dotenv_values(path).items() if v is not None}
    token = _file_values.set(values)
    try:
        return UnmixConfig()
    finally:
        _file_values.reset(token)
