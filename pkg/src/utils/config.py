"""
Configuration management for the hydride discovery pipeline.

This module handles run settings, environment variables, flat key-value config
files and configuration validation using Pydantic Settings. Precedence is
explicit overrides (command-line flags) > config file > environment > defaults.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple
from pathlib import Path
import logging

from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src import __version__
from src.errors import MissingInputError, ValidationFailure

logger = logging.getLogger(__name__)

RUN_CONFIG_FILENAME = "run_config.txt"


class Settings(BaseSettings):
    """Run configuration shared by every pipeline stage."""

    model_config = SettingsConfigDict(
        env_prefix="HYDRIDE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Paths
    dataset_path: Optional[Path] = Field(None, description="Material records (CSV or JSON-lines)")
    reference_db_path: Optional[Path] = Field(None, description="Reference database for matching")
    output_root: Path = Field(Path("runs"), description="Root directory for stage outputs")

    # Reproducibility
    seed: int = Field(42, description="Single source of all randomness")

    # Scoring
    score_variant: Literal["original", "modified"] = Field("modified")

    # Dataset
    strict_loading: bool = Field(False, description="Fail on the first invalid row")
    synthetic_records: int = Field(450, ge=3)
    max_sites: int = Field(20, ge=1)
    hull_max: float = Field(0.08, ge=0.0)
    train_ratio: float = Field(0.6, gt=0.0, lt=1.0)
    val_ratio: float = Field(0.2, gt=0.0, lt=1.0)
    test_ratio: float = Field(0.2, gt=0.0, lt=1.0)

    # Causal discovery
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    ci_test: Literal["chi-square", "fisher-z"] = Field("chi-square")
    discretize_bins: int = Field(3, ge=2)
    discretize_strategy: Literal["equal-width", "equal-frequency"] = Field("equal-frequency")
    causal_variables: str = Field(
        "score,w_h2,e_form,density,band_gap,energy_above_hull,site_count",
        description="Comma-separated frame columns entering causal discovery",
    )
    excluded_variables: str = Field("", description="Comma-separated columns to drop")
    target_variable: str = Field("score")
    max_condition_size: int = Field(3, ge=0)

    # Principal component regression
    pcr_subsets: str = Field(
        "e_form,density;e_form,density,w_h2;e_form,density,w_h2,band_gap",
        description="Semicolon-separated feature subsets, features comma-separated",
    )
    pcr_variance_threshold: float = Field(0.95, gt=0.0, le=1.0)

    # Variational autoencoder
    latent_dim: int = Field(8, ge=1)
    hidden_dim: int = Field(64, ge=1)
    property_hidden_dim: int = Field(16, ge=1)
    activation: Literal["tanh", "linear"] = Field("tanh")
    epochs: int = Field(200, ge=1)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(5e-3, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    beta: float = Field(1.0, ge=0.0)
    property_weight: float = Field(1.0, ge=0.0)

    # Generation
    n_generate: int = Field(1000, ge=0)
    latent_steps: int = Field(5000, ge=0)
    latent_step_size: float = Field(1e-3, ge=0.0)
    latent_max_step_norm: float = Field(0.1, gt=0.0)
    trajectory_every: int = Field(500, ge=1)
    knn_k: int = Field(5, ge=1)
    top_k: int = Field(100, ge=0)

    # Screening
    strict_metal_cap: bool = Field(False)
    soft_metal_cap: int = Field(6, ge=2, description="H per metal atom when the strict cap is off")
    min_score: float = Field(0.0, ge=0.0, le=1.0, description="Drop candidates scoring below this")
    restrict_element_count: bool = Field(False)
    metalloids_as_metals: bool = Field(False)

    # Application
    log_level: str = Field("INFO")
    json_logs: bool = Field(False)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v.upper()

    @field_validator("causal_variables", "excluded_variables", mode="before")
    @classmethod
    def join_name_lists(cls, v: Any) -> Any:
        if isinstance(v, (list, tuple)):
            return ",".join(str(item).strip() for item in v)
        return v

    @field_validator("pcr_subsets")
    @classmethod
    def validate_pcr_subsets(cls, v: str) -> str:
        for subset in v.split(";"):
            if not [name for name in subset.split(",") if name.strip()]:
                raise ValueError(f"Empty feature subset in pcr_subsets: {v!r}")
        return v

    @model_validator(mode="after")
    def validate_split_ratios(self) -> "Settings":
        total = self.train_ratio + self.val_ratio + self.test_ratio
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Split ratios must sum to 1, got {total}")
        return self

    @property
    def split_ratios(self) -> Tuple[float, float, float]:
        """Train, validation and test fractions."""
        return (self.train_ratio, self.val_ratio, self.test_ratio)

    @property
    def causal_variable_list(self) -> List[str]:
        """Causal variables with exclusions removed, in configured order."""
        excluded = set(_split_names(self.excluded_variables))
        return [name for name in _split_names(self.causal_variables) if name not in excluded]

    @property
    def pcr_subset_list(self) -> List[List[str]]:
        """Feature subsets of the PCR experiment."""
        return [_split_names(subset) for subset in self.pcr_subsets.split(";")]

    def stage_dir(self, stage: str) -> Path:
        """Output directory of one pipeline stage."""
        return self.output_root / stage

    def to_config_text(self) -> str:
        """Render settings as the flat key-value config format."""
        lines = []
        for key, value in self.model_dump().items():
            if value is None:
                rendered = ""
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"


def _split_names(text: str) -> List[str]:
    return [name.strip() for name in text.split(",") if name.strip()]


def read_config_file(path: Path) -> Dict[str, str]:
    """
    Read a flat ``key = value`` config file.

    Parsing is python-dotenv's: blank lines and ``#`` comments are ignored and
    values may be quoted. Empty values are dropped so the field falls back to
    environment or default.

    Args:
        path: Config file location

    Returns:
        Mapping of setting name to raw string value
    """
    if not path.exists():
        raise MissingInputError(f"Config file not found: {path}")

    values: Dict[str, str] = {}
    for key, value in dotenv_values(path, interpolate=False, encoding="utf-8").items():
        if value is None:
            raise ValidationFailure(f"{path}: expected 'key = value' for {key!r}")
        if key not in Settings.model_fields:
            raise ValidationFailure(f"{path}: unknown setting {key!r}")
        if value.strip():
            values[key] = value.strip()
    return values


def load_settings(config_path: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    Build validated settings from an optional config file and explicit overrides.

    Args:
        config_path: Optional flat key-value config file
        **overrides: Values from command-line flags; ``None`` means "not given"

    Returns:
        Validated Settings instance
    """
    values: Dict[str, Any] = {}
    if config_path is not None:
        values.update(read_config_file(Path(config_path)))
    values.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return Settings(**values)
    except ValidationError as e:
        raise ValidationFailure(f"Invalid configuration: {e}") from e


def get_settings() -> Settings:
    """Get settings from environment and defaults only."""
    return load_settings()


def write_run_config(settings: Settings, directory: Path) -> Path:
    """
    Persist the exact configuration and tool version into an output directory.

    Args:
        settings: Settings that produced the directory contents
        directory: Stage output directory

    Returns:
        Path of the written config file
    """
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / RUN_CONFIG_FILENAME
    path.write_text(f"# hydride-discovery {__version__}\n{settings.to_config_text()}", encoding="utf-8")
    logger.debug(f"Wrote run configuration to {path}")
    return path
