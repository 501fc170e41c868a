"""Configuration management for repliq."""

from typing import Literal, Optional
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from ``REPLIQ_*`` environment variables or a ``.env`` file.

    Analysis defaults follow the whole-genome GWAS recommendations
    (l00 = 0.8, c2 = 0.5) and can be overridden on every CLI call.
    """

    model_config = SettingsConfigDict(
        env_prefix="REPLIQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Analysis defaults
    l00: float = 0.8
    c2: float = 0.5
    level: float = 0.05
    dependency: Literal["indep", "mstar", "threshold"] = "indep"
    flavor: Literal["fdr", "fwer", "both"] = "both"
    output_format: Literal["csv", "json"] = "csv"

    # Root finding
    solver_tolerance: float = 1e-10
    solver_max_iterations: int = 200
    solver_floor: float = 1e-12
    threshold_grid_step: float = 1e-4

    # Input validation
    discreteness_tolerance: float = 1e-6

    # Simulation
    seed: Optional[int] = None  # overrides --seed when set
    replications: int = 1000
    stability_trials: int = 20

    # Logging Configuration
    log_level: str = "INFO"
    log_format: str = "pretty"  # Options: json, pretty
    log_file: str = ""
    log_max_bytes: int = 10485760  # 10MB
    log_backup_count: int = 5

    @property
    def is_json_logging(self) -> bool:
        """Check if structured JSON logging is enabled."""
        return self.log_format.lower() == "json"

    @property
    def has_log_file(self) -> bool:
        """Check if a rotating log file is configured."""
        return bool(self.log_file)


def load_settings() -> Settings:
    """Read settings afresh from the environment."""
    return Settings()


# Global settings instance
settings = load_settings()
