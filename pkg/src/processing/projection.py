from dataclasses import dataclass

import numpy as np
import structlog
from scipy import linalg

from src.errors import NumericalError
from src.fock.blocks import (
    SpectralPointHitError,
    TruncatedOperator,
    block_inverse,
    gram_operator_norm,
)
from src.fock.gram import GramMatrix

logger = structlog.get_logger()

# eigenvalues closer than this fraction of the radius to the circle are not separated
SEPARATION_MARGIN = 1e-3


class ContourHitsSpectrumError(NumericalError):
    """Raised when a quadrature node lands on an eigenvalue of the truncated operator."""

    pass


class NotSeparatedError(NumericalError):
    """Raised when the circle encloses no eigenvalue or passes too close to one."""

    pass


@dataclass(frozen=True)
class ProjectionResult:
    norm: float
    idempotency: float
    rank: int
    quad_points: int
    quadrature_change: float


def _contour_block(block, z0: complex, radius: float, quad_points: int) -> np.ndarray:
    """Trapezoid rule for (1/2πi)∮(z − A)⁻¹dz over |z − z0| = radius."""
    thetas = 2 * np.pi * np.arange(quad_points) / quad_points
    total = np.zeros((block.size, block.size), dtype=complex)
    for theta in thetas:
        offset = radius * np.exp(1j * theta)
        try:
            total += offset * block_inverse(block, z0 + offset)
        except SpectralPointHitError as exc:
            raise ContourHitsSpectrumError(
                f"Quadrature node {z0 + offset} hits the spectrum of block m={block.m}: {exc}"
            )
    return total / quad_points


def _projection_blocks(op: TruncatedOperator, z0: complex, radius: float, quad_points: int):
    blocks = []
    for block in op.blocks:
        if np.all(np.abs(block.eigenvalues() - z0) > radius):
            # no enclosed eigenvalue: the integrand is holomorphic inside
            blocks.append(np.zeros((block.size, block.size), dtype=complex))
        else:
            blocks.append(_contour_block(block, z0, radius, quad_points))
    return blocks


def _norm(blocks: list[np.ndarray], op: TruncatedOperator, gram: GramMatrix | None) -> float:
    if gram is None:
        return max(float(linalg.svdvals(P)[0]) if P.size else 0.0 for P in blocks)
    if gram.circular:
        return max(
            gram_operator_norm(P, gram.block(b.m).L) for P, b in zip(blocks, op.blocks)
        )
    return gram_operator_norm(linalg.block_diag(*blocks), gram.leading_factor(op.N))


def spectral_projection(
    op: TruncatedOperator,
    z0: complex,
    radius: float,
    quad_points: int = 64,
    gram: GramMatrix | None = None,
) -> ProjectionResult:
    """
    Riesz projection of the truncated operator for the eigenvalues inside a circle.

    The contour integral is evaluated block by block with the trapezoid rule and
    repeated with twice the nodes; quadrature_change is the difference of the two
    norms.

    Args:
        op: Truncated operator (degrees < N)
        z0: Circle center
        radius: Circle radius
        quad_points: Trapezoid nodes
        gram: Gram matrix for the weighted norm (flat norm when omitted)

    Returns:
        ProjectionResult with the operator norm and ‖Π² − Π‖

    Raises:
        NotSeparatedError: If no eigenvalue lies inside or one lies near the circle
        ContourHitsSpectrumError: If a node hits an eigenvalue
    """
    if radius <= 0 or quad_points < 2:
        raise ValueError(f"Need radius > 0 and quad_points ≥ 2, got {radius}, {quad_points}")
    distances = np.abs(op.eigenvalues() - z0)
    near = np.abs(distances - radius) <= SEPARATION_MARGIN * radius
    if np.any(near):
        raise NotSeparatedError(
            f"Eigenvalue at distance {distances[near][0]:.6g} from {z0} is within "
            f"{SEPARATION_MARGIN:g}·r of the circle of radius {radius:g}"
        )
    inside = int(np.sum(distances < radius))
    if inside == 0:
        raise NotSeparatedError(f"No eigenvalue inside the circle |z − {z0}| = {radius:g}")

    blocks = _projection_blocks(op, z0, radius, quad_points)
    refined = _projection_blocks(op, z0, radius, 2 * quad_points)
    norm = _norm(blocks, op, gram)
    refined_norm = _norm(refined, op, gram)
    idempotency = max(
        float(linalg.svdvals(P @ P - P)[0]) if P.size else 0.0 for P in blocks
    )
    rank = int(round(sum(np.trace(P).real for P in blocks)))

    logger.info(
        "Spectral projection",
        z0=str(z0),
        radius=radius,
        enclosed=inside,
        norm=norm,
        idempotency=idempotency,
    )
    return ProjectionResult(
        norm=norm,
        idempotency=idempotency,
        rank=rank,
        quad_points=quad_points,
        quadrature_change=abs(refined_norm - norm),
    )
