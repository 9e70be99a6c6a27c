"""Configuration settings for the Hecke multiplicity toolkit."""

from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings

BUNDLED_FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    PROJECT_NAME: str = Field(
        default="Hecke Multiplicities",
        description="Project name used in reports and metrics",
    )

    # Fixture corpus
    HECKE_FIXTURES: str = Field(
        default="",
        description="Path of the fixture corpus (defaults to the bundled tables)",
    )

    # Algorithm settings
    E_MODE: str = Field(
        default="lusztig",
        description="Normalization of the bilinear form: lusztig or one",
    )
    SEED: int = Field(
        default=20080101,
        description="Seed for the random coefficients of the genericity retries",
    )
    GENERICITY_RETRIES: int = Field(
        default=5,
        ge=0,
        description="Random retries of the middle-element test before rejecting",
    )
    TIME_BUDGET: float = Field(
        default=0.0,
        ge=0.0,
        description="Time budget of one run in seconds, 0 disables the check",
    )
    MAX_WEYL_ORDER: int = Field(
        default=2000,
        gt=0,
        description="Largest Weyl group that is enumerated element by element",
    )
    DENSE_RADICAL_LIMIT: int = Field(
        default=64,
        ge=0,
        description="Coset count up to which full radical cross-checks run",
    )

    # Logging settings
    LOG_LEVEL: str = Field(
        default="WARNING",
        description="Logging level",
    )
    LOG_FILE: Optional[str] = Field(
        default=None,
        description="Optional file receiving JSON log records",
    )
    AUDIT_LOG_FILE: Optional[str] = Field(
        default=None,
        description="Optional file receiving the run ledger",
    )

    # Monitoring settings
    METRICS_FILE: Optional[str] = Field(
        default=None,
        description="Optional file receiving prometheus text exposition",
    )

    @field_validator("E_MODE")
    @classmethod
    def check_e_mode(cls, value: str) -> str:
        """Accept only the two supported normalizations."""
        if value not in ("lusztig", "one"):
            raise ValueError(f"E_MODE must be 'lusztig' or 'one', got {value!r}")
        return value

    @field_validator("LOG_LEVEL")
    @classmethod
    def check_log_level(cls, value: str) -> str:
        """Normalize the level name."""
        level = value.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown LOG_LEVEL {value!r}")
        return level

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        # Fall back to the bundled corpus when no path is configured
        if not self.HECKE_FIXTURES:
            self.HECKE_FIXTURES = str(BUNDLED_FIXTURES)

    class Config:
        """Configuration settings for the application."""

        case_sensitive = True
        env_file = ".env"
        env_file_encoding = "utf-8"
        validate_assignment = False


settings = Settings()
