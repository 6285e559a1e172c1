from typing import Annotated

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, NoDecode


class Settings(BaseSettings):
    # Logging
    log_level: str = Field(default="INFO")

    # Structure checks on quadratic forms and symplectic maps
    symmetry_tol: float = Field(default=1e-12, description="Relative symmetry tolerance for Q")
    identity_tol: float = Field(default=1e-12)
    definiteness_tol: float = Field(default=1e-10, description="Threshold for Re Q > 0")
    lagrangian_tol: float = Field(default=1e-10)
    structure_tol: float = Field(default=1e-9, description="Vanishing xx/ξξ blocks")
    spectrum_match_tol: float = Field(default=1e-8)

    # Eigenvalue pairing and clustering
    cluster_tol_rel: float = Field(default=1e-6, description="Relative to the norm of F")
    pairing_tol_rel: float = Field(default=1e-6)
    real_axis_tol_rel: float = Field(default=1e-10)
    spectrum_merge_rel: float = Field(default=1e-10, description="Relative to h")

    # Rotation scan and sector sampling
    rotation_grid: int = Field(default=720, ge=720)
    sector_samples: int = Field(default=2048)

    # Fock blocks and Gram matrices
    nilpotent_threshold: float = Field(default=1e-12)
    spectral_hit_guard: float = Field(default=1e-14)
    gram_jitter_rel: float = Field(default=1e-14)
    gram_condition_cap: float = Field(default=1e12)
    gram_basis_cap: int = Field(default=1500)
    diagonalize_condition_cap: float = Field(default=1e8)

    # Sweeps
    h_min: float = Field(default=0.02, description="Smallest accepted semiclassical parameter")
    truncation_step: int = Field(default=4, description="Degrees added per adaptive extension")
    default_threads: int = Field(default=1, ge=1)
    csv_float_format: str = Field(default=".12e")
    # Default h values when a config omits them (comma-separated in .env)
    default_h_values: Annotated[list[float], NoDecode] = Field(
        default_factory=lambda: [0.2, 0.1, 0.05]
    )

    @field_validator("default_h_values", mode="before")
    @classmethod
    def parse_h_values(cls, v):
        if isinstance(v, str):
            if not v.strip():
                return [0.2, 0.1, 0.05]
            return [float(x.strip()) for x in v.strip("[] ").split(",") if x.strip()]
        return v or []

    @field_validator("log_level", mode="before")
    @classmethod
    def parse_log_level(cls, v):
        if isinstance(v, str):
            return v.strip().upper() or "INFO"
        return v

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "env_prefix": "QUADRES_",
        "extra": "ignore",
    }


settings = Settings()
