"""Configuration for funcreg.

Settings resolve from environment variables, .env files, or explicit
overrides.
"""

from __future__ import annotations

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class FuncregConfig(BaseSettings):
    """Runtime settings for estimators, pipelines and the CLI.

    Env vars prefixed with ``FUNCREG_``. Example .env::

        FUNCREG_THREADS=4
        FUNCREG_RESULTS_DB_PATH=results.duckdb
    """

    model_config = SettingsConfigDict(env_prefix="FUNCREG_", env_file=".env", extra="ignore")

    threads: int = Field(
        default=0, ge=0, description="Worker cap for reps and folds; 0 = all cores"
    )

    lambda_min: float = Field(default=1e-4, gt=0, description="Smallest smoothing parameter")
    lambda_max: float = Field(default=1e3, gt=0, description="Largest smoothing parameter")
    lambda_count: int = Field(default=25, ge=1, description="Points in the smoothing grid")

    nw_factor_min: float = Field(
        default=0.01, gt=0, description="Smallest N-W bandwidth as a multiple of the heuristic"
    )
    nw_factor_max: float = Field(
        default=10.0, gt=0, description="Largest N-W bandwidth as a multiple of the heuristic"
    )
    nw_factor_count: int = Field(default=25, ge=1, description="Points in the N-W bandwidth grid")

    bspline_order: int = Field(default=4, ge=1, description="Order of the linear-model basis")
    bspline_breakpoints: int = Field(
        default=10, ge=2, description="Equispaced breakpoints, endpoints included"
    )

    precip_offset: float = Field(
        default=0.05, gt=0, description="Value substituted for zero precipitation before log"
    )

    results_db_path: str | None = Field(
        default=None, description="DuckDB file recording benchmark replicates"
    )

    deterministic: bool = Field(
        default=False, description="Suppress timestamp comment lines in reports"
    )

    log_level: str = Field(default="WARNING", description="Logging level for the CLI")


_config: FuncregConfig | None = None


def get_config(**overrides: object) -> FuncregConfig:
    """Return the resolved config, creating it on first call."""
    global _config
    if _config is None or overrides:
        _config = FuncregConfig(**overrides)
    return _config


def reset_config() -> None:
    """Reset cached config (useful in tests)."""
    global _config
    _config = None
