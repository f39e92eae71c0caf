"""Application settings and configuration."""
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application settings
    APP_NAME: str = Field(default="wellsep")
    DEBUG: bool = Field(default=False)
    LOG_LEVEL: str = Field(default="INFO")

    # Pipeline parameters
    EPS: float = Field(default=0.02, gt=0, lt=1)
    D: float = Field(default=0.25, gt=0, lt=1)
    GAMMA: float = Field(default=0.1, gt=0, lt=1)
    DELTA: Optional[float] = Field(default=None, gt=0, lt=1)
    D_PAIR: float = Field(default=0.5, gt=0, le=1)
    ALPHA: float = Field(default=0.25, gt=0, le=1)
    RHO: float = Field(default=0.3, ge=0, le=1)
    PLANTED_V0_FRACTION: float = Field(default=0.01, ge=0, lt=1)
    ENFORCE_PARAMETER_ORDERING: bool = Field(default=False)

    # Exact-search caps
    EXACT_CHROMATIC_CAP: int = 20
    EXACT_SEPARATOR_CAP: int = 18
    EXACT_REGULARITY_CAP: int = 14
    EXACT_FACTOR_CAP: int = 30
    BRUTE_FORCE_CAP: int = 12

    # Retry caps and trial counts
    DISTRIBUTE_RETRIES: int = 20
    EMBED_RETRIES: int = 5
    REGULARITY_TRIALS: int = 50
    REGULARITY_SAMPLES: int = 200
    SAMPLED_SIGNIFICANCE: float = Field(default=1e-6, gt=0, lt=1)
    MAP_RETRIES: int = 20

    # Share of a cluster that may carry restricted vertices before a warning
    ALPHA_BL: float = Field(default=0.5, gt=0, le=1)

    # File paths
    BASE_DIR: Path = Path(__file__).parent.parent
    OUTPUT_DIR: Path = BASE_DIR / "output"
    LOGS_DIR: Path = BASE_DIR / "logs"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        env_nested_delimiter="__",
        extra="ignore"
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Accept log levels in any case."""
        return v.upper()

    def ensure_dirs(self) -> None:
        """Create output and log directories if they don't exist."""
        self.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
        self.LOGS_DIR.mkdir(parents=True, exist_ok=True)


# Create settings instance
settings = Settings()
