from dataclasses import dataclass, field

import numpy as np
import structlog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from src.config import settings
from src.errors import NumericalError
from src.spectral.eigenvalues import SpectralData

logger = structlog.get_logger()

# Relative slack on the inclusive radius test |value| ≤ R
RADIUS_SLACK = 1e-12


class UnboundedEnumerationError(NumericalError):
    """Raised when some Re(λ_j/i) ≤ 0, so the lattice sum has no finite cut-off."""

    pass


class EmptySpectrumError(NumericalError):
    """Raised when a distance is requested against an empty spectrum list."""

    pass


class OutOfRadiusError(NumericalError):
    """Raised when the nearest enumerated point may not be the true nearest eigenvalue."""

    pass


@dataclass(frozen=True)
class SpectrumPoint:
    value: complex
    multiplicity: int


@dataclass(frozen=True, eq=False)
class SpectrumList:
    """Eigenvalues h Σ (λ_j/i)(2ν_j+1) of modulus ≤ R, merged with multiplicities."""

    points: list[SpectrumPoint] = field(default_factory=list)
    h: float = 1.0
    R: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=complex)

    @property
    def total_multiplicity(self) -> int:
        return sum(p.multiplicity for p in self.points)

    def within(self, R: float) -> "SpectrumList":
        """Restrict to |value| ≤ R."""
        limit = R * (1 + RADIUS_SLACK)
        kept = [p for p in self.points if abs(p.value) <= limit]
        return SpectrumList(points=kept, h=self.h, R=R)

    def rotated(self, factor: complex) -> "SpectrumList":
        """Multiply every value by a unit factor; the disc |z| ≤ R is unchanged."""
        if abs(abs(factor) - 1) > 1e-12:
            raise ValueError(f"Rotation factor must have modulus 1, got {abs(factor)}")
        points = [
            SpectrumPoint(value=p.value * factor, multiplicity=p.multiplicity)
            for p in self.points
        ]
        # rounding keeps rotation noise in a vanishing coordinate from reordering
        scale = max(self.R, self.h)
        points.sort(key=lambda p: (round(p.value.real / scale, 9), round(p.value.imag / scale, 9)))
        return SpectrumList(points=points, h=self.h, R=self.R)


def _lattice_values(mu: np.ndarray, h: float, R: float) -> list[complex]:
    """Depth-first enumeration of ν ∈ Z≥0^n with |h Σ μ_j(2ν_j+1)| ≤ R."""
    n = len(mu)
    bound = (R / h) * (1 + RADIUS_SLACK)
    limit = R * (1 + RADIUS_SLACK)
    re = mu.real
    # Smallest real contribution of coordinates j.. (all ν = 0)
    tail = np.concatenate([np.cumsum(re[::-1])[::-1], [0.0]])
    found: list[complex] = []

    def descend(j: int, partial: complex, partial_re: float):
        if j == n:
            value = h * partial
            if abs(value) <= limit:
                found.append(complex(value))
            return
        nu = 0
        while True:
            weight = 2 * nu + 1
            step_re = partial_re + re[j] * weight
            if step_re + tail[j + 1] > bound:
                break
            descend(j + 1, partial + mu[j] * weight, step_re)
            nu += 1

    descend(0, 0j, 0.0)
    return found


def _merge(values: list[complex], tol: float) -> list[SpectrumPoint]:
    if not values:
        return []
    arr = np.array(values, dtype=complex)
    coords = np.column_stack([arr.real, arr.imag])
    pairs = cKDTree(coords).query_pairs(r=tol, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(arr), len(arr))
    )
    count, labels = connected_components(graph, directed=False)
    points = []
    for label in range(count):
        members = arr[labels == label]
        points.append(SpectrumPoint(value=complex(members.mean()), multiplicity=len(members)))
    points.sort(key=lambda p: (p.value.real, p.value.imag))
    return points


def spectrum(data: SpectralData, h: float, R: float) -> SpectrumList:
    """
    Enumerate the eigenvalues of the quantized operator inside the disc |z| ≤ R.

    Args:
        data: Upper-half-plane eigenvalues λ_j of the Hamilton map
        h: Semiclassical parameter
        R: Enumeration radius (inclusive)

    Returns:
        SpectrumList with coincident values merged within 1e-10·h

    Raises:
        UnboundedEnumerationError: If some Re(λ_j/i) ≤ 0
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    mu = np.asarray(data.lambdas, dtype=complex) / 1j
    if np.any(mu.real <= 0):
        raise UnboundedEnumerationError(
            f"Enumeration needs Re(λ_j/i) > 0, got {mu.real.min():.3e}"
        )
    values = _lattice_values(mu, h, R)
    points = _merge(values, settings.spectrum_merge_rel * h)
    logger.debug("Enumerated spectrum", h=h, R=R, points=len(points), total=len(values))
    return SpectrumList(points=points, h=h, R=R)


def dist_to_spectrum(z: complex, spec: SpectrumList) -> float:
    """
    Distance from z to the nearest enumerated eigenvalue.

    Raises:
        EmptySpectrumError: If the list has no points
        OutOfRadiusError: If the nearest point is farther than R − |z|, in which case
            an eigenvalue outside the enumeration disc could be closer
    """
    if not spec.points:
        raise EmptySpectrumError(f"No eigenvalues within radius {spec.R}")
    d = float(np.min(np.abs(spec.values - z)))
    margin = spec.R - abs(z)
    if d > margin * (1 + RADIUS_SLACK) + RADIUS_SLACK * spec.R:
        raise OutOfRadiusError(
            f"Nearest eigenvalue at distance {d:.6g} exceeds the margin R − |z| = {margin:.6g}"
        )
    return d
