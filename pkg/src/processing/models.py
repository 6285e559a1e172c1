"""Run-configuration document for sweeps and the other batch commands."""

import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.config import settings
from src.errors import ConfigurationError
from src.reporting.matrices import decode_matrix


class FormSpec(BaseModel):
    """Quadratic form on R^{2n}: Q as a 2n×2n array of [re, im] pairs (or reals)."""

    n: int = Field(..., ge=1)
    Q: list

    @model_validator(mode="after")
    def check_shape(self):
        try:
            Q = decode_matrix(self.Q, (2 * self.n, 2 * self.n))
        except ConfigurationError as exc:
            raise ValueError(str(exc))
        scale = max(1.0, float(np.linalg.norm(Q)))
        if np.linalg.norm(Q - Q.T) > settings.symmetry_tol * scale:
            raise ValueError("Q is not symmetric")
        return self

    def matrix(self) -> np.ndarray:
        return decode_matrix(self.Q, (2 * self.n, 2 * self.n))


class GridSpec(BaseModel):
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int = Field(default=1, ge=1)
    ny: int = Field(default=1, ge=1)

    def points(self) -> list[complex]:
        """Grid points, imaginary part outer and real part inner."""
        xs = np.linspace(self.re_min, self.re_max, self.nx)
        ys = np.linspace(self.im_min, self.im_max, self.ny)
        return [complex(x, y) for y in ys for x in xs]

    @classmethod
    def single(cls, z: complex) -> "GridSpec":
        return cls(re_min=z.real, re_max=z.real, im_min=z.imag, im_max=z.imag, nx=1, ny=1)


class OutputSpec(BaseModel):
    csv: Optional[Path] = None
    json_path: Optional[Path] = Field(default=None, alias="json")

    model_config = {"populate_by_name": True}


class SweepConfig(BaseModel):
    """
    Structured JSON run configuration.

    Exactly one input mode: `form`, `M` (reduced matrix, optional `C` and
    weight `phi1` as a real 2n×2n matrix G) or `normal_form_report`.
    """

    form: Optional[FormSpec] = None
    M: Optional[list] = None
    C: Optional[list] = None
    phi1: Optional[list] = None
    normal_form_report: Optional[Path] = None
    jordan_mode: Literal["exact", "diagonalized", "raw"] = "raw"
    multiplicities: Optional[list[int]] = None
    cluster_tol: Optional[float] = Field(default=None, gt=0)

    h_values: list[float] = Field(default_factory=lambda: list(settings.default_h_values))
    z_grid: GridSpec = Field(default_factory=lambda: GridSpec.single(1.0 + 0.0j))
    radius: Optional[float] = Field(default=None, gt=0)
    K: float = Field(default=1.0, gt=0)
    L: float = Field(default=1.0, ge=1)
    C_dist: float = Field(default=1.0, gt=0)
    N_max: int = Field(default=40, ge=1)
    stabilization_tol: float = Field(default=1e-6, gt=0, lt=1)
    norm_mode: Literal["flat", "gram"] = "flat"
    threads: int = Field(default_factory=lambda: settings.default_threads, ge=1)
    h_min: float = Field(default_factory=lambda: settings.h_min, gt=0)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("h_values", mode="before")
    @classmethod
    def parse_h_values(cls, v):
        if isinstance(v, str):
            return [float(x.strip()) for x in v.split(",") if x.strip()]
        if isinstance(v, (int, float)):
            return [float(v)]
        return v

    @model_validator(mode="after")
    def check_input_mode(self):
        modes = [self.form is not None, self.M is not None, self.normal_form_report is not None]
        if sum(modes) != 1:
            raise ValueError("Exactly one of form, M, normal_form_report must be given")
        if not self.h_values:
            raise ValueError("h_values must not be empty")
        for h in self.h_values:
            if h <= 0:
                raise ValueError(f"h values must be positive, got {h}")
            if h < self.h_min:
                raise ValueError(f"h = {h} is below h_min = {self.h_min}")
        if self.M is not None:
            M = self.reduced_matrix()
            n = M.shape[0]
            if self.C is not None:
                decode_matrix(self.C, (n, n))
            if self.phi1 is not None and np.asarray(self.phi1, dtype=float).shape != (2 * n, 2 * n):
                raise ValueError(f"phi1 must be a real {2 * n}×{2 * n} matrix")
        return self

    def reduced_matrix(self) -> np.ndarray:
        try:
            arr = np.asarray(self.M, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"Malformed M: {exc}")
        n = arr.shape[0]
        try:
            return decode_matrix(self.M, (n, n))
        except ConfigurationError as exc:
            raise ValueError(str(exc))


def load_config(path: Path, overrides: dict | None = None) -> SweepConfig:
    """
    Read and validate a JSON run configuration.

    Keys in overrides (command-line flags) replace the document's values before
    validation.

    Raises:
        ConfigurationError: If the file is missing or is not valid JSON
        pydantic.ValidationError: If the document does not validate
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    if isinstance(data.get("normal_form_report"), str):
        report = Path(data["normal_form_report"])
        if not report.is_absolute():
            data["normal_form_report"] = str(path.parent / report)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return SweepConfig.model_validate(data)
