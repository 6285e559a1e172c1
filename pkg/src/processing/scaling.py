import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import structlog

from src.errors import NumericalError

logger = structlog.get_logger()

ScalingModel = Literal["inv_h", "inv_h_log"]
SCALING_MODELS = ("inv_h", "inv_h_log")


class InsufficientDataError(NumericalError):
    """Raised when fewer than three usable h-values are available for a fit."""

    pass


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit log(resnorm) ≈ A·t(h) + b with t = 1/h or (1/h)·log(1/h)."""

    model: str
    A: float
    intercept: float
    residual: float
    points_used: int

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "A": self.A,
            "intercept": self.intercept,
            "residual": self.residual,
            "points_used": self.points_used,
        }


def _abscissa(h: np.ndarray, model: str) -> np.ndarray:
    if model == "inv_h":
        return 1.0 / h
    return np.log(1.0 / h) / h


def scaling_fit(rows, model: ScalingModel = "inv_h") -> ScalingFit:
    """
    Fit the growth of the resolvent norm in 1/h for a fixed z.

    Rows are anything with h, resnorm_flat and converged attributes (sweep rows,
    or the worked-example rows). Unconverged and non-finite rows are dropped.

    Args:
        rows: Rows for a single z
        model: "inv_h" for log(resnorm) ~ A/h, "inv_h_log" for A(1/h)log(1/h)

    Returns:
        ScalingFit with slope A, intercept and RMS residual

    Raises:
        InsufficientDataError: With fewer than three distinct usable h-values
    """
    if model not in SCALING_MODELS:
        raise ValueError(f"Unknown scaling model {model!r}; expected one of {SCALING_MODELS}")

    usable = [
        r
        for r in rows
        if r.converged and math.isfinite(r.resnorm_flat) and r.resnorm_flat > 0
    ]
    if len({r.h for r in usable}) < 3:
        raise InsufficientDataError(
            f"Scaling fit needs at least 3 converged h-values, got {len(usable)} usable rows"
        )

    h = np.array([r.h for r in usable], dtype=float)
    y = np.log(np.array([r.resnorm_flat for r in usable], dtype=float))
    t = _abscissa(h, model)
    design = np.column_stack([t, np.ones_like(t)])
    (A, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ np.array([A, intercept]) - y) ** 2)))

    logger.info("Scaling fit", model=model, A=float(A), residual=residual, points=len(usable))
    return ScalingFit(
        model=model,
        A=float(A),
        intercept=float(intercept),
        residual=residual,
        points_used=len(usable),
    )


def distance_scaled_fit(rows) -> ScalingFit:
    """
    Fit log(resnorm_gram · dist_spec) ≈ A/h + b.

    For diagonalizable M the weighted-norm resolvent times the distance to the
    spectrum grows at most like e^{A/h}, so a bounded residual with finite A is
    the expected outcome. Rows need resnorm_gram (gram norm mode); the usable
    set follows scaling_fit.

    Raises:
        InsufficientDataError: With fewer than three distinct usable h-values
    """
    usable = [
        r
        for r in rows
        if r.converged
        and r.resnorm_gram is not None
        and math.isfinite(r.resnorm_gram)
        and r.resnorm_gram > 0
        and r.dist_spec > 0
    ]
    if len({r.h for r in usable}) < 3:
        raise InsufficientDataError(
            f"Distance-scaled fit needs at least 3 converged gram rows, got {len(usable)}"
        )

    h = np.array([r.h for r in usable], dtype=float)
    y = np.log(np.array([r.resnorm_gram * r.dist_spec for r in usable], dtype=float))
    design = np.column_stack([1.0 / h, np.ones_like(h)])
    (A, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ np.array([A, intercept]) - y) ** 2)))

    logger.info("Distance-scaled fit", A=float(A), residual=residual, points=len(usable))
    return ScalingFit(
        model="gram_dist_inv_h",
        A=float(A),
        intercept=float(intercept),
        residual=residual,
        points_used=len(usable),
    )
