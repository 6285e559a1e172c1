from dataclasses import dataclass, field

import numpy as np
import structlog
from scipy import linalg
from scipy.cluster.hierarchy import fcluster, linkage

from src.config import settings
from src.errors import NumericalError
from src.symplectic.forms import HamiltonMap

logger = structlog.get_logger()


class RealEigenvalueError(NumericalError):
    """Raised when the Hamilton map has an eigenvalue on the real axis."""

    pass


class PairingFailureError(NumericalError):
    """Raised when eigenvalues cannot be matched into ±λ pairs within tolerance."""

    pass


class ClusterMismatchError(NumericalError):
    """Raised when declared multiplicities do not match the computed clusters."""

    pass


@dataclass(frozen=True, eq=False)
class SpectralData:
    """
    Upper-half-plane eigenvalues of a Hamilton map.

    lambdas holds n values with Im λ > 0, repeated by algebraic multiplicity and
    snapped to their cluster centers; clusters groups indices into lambdas.
    """

    lambdas: np.ndarray
    clusters: list[list[int]] = field(default_factory=list)
    pairing_residual: float = 0.0

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def centers(self) -> list[complex]:
        return [complex(self.lambdas[c[0]]) for c in self.clusters]

    @property
    def multiplicities(self) -> list[int]:
        return [len(c) for c in self.clusters]

    @classmethod
    def from_reduced_matrix(cls, M: np.ndarray) -> "SpectralData":
        """
        Spectral data of the reduced form Mx·ξ, whose Hamilton map is
        diag(M, −Mᵀ)/2. Triangular M gives the eigenvalues exactly.
        """
        M = np.asarray(M, dtype=complex)
        if not np.any(np.tril(M, -1)) or not np.any(np.triu(M, 1)):
            eigs = np.diag(M).copy()
        else:
            eigs = linalg.eigvals(M)
        lambdas = eigs / 2
        if np.any(lambdas.imag <= 0):
            raise RealEigenvalueError(
                f"Reduced matrix has eigenvalues outside the upper half-plane: {eigs}"
            )
        return cls.from_lambdas(lambdas, _default_cluster_tol(M))

    @classmethod
    def from_lambdas(cls, lambdas: np.ndarray, cluster_tol: float) -> "SpectralData":
        """Sort, cluster and snap upper-half-plane eigenvalues to their cluster centers."""
        lambdas = np.array(lambdas, dtype=complex)
        lambdas = lambdas[np.lexsort((lambdas.real, lambdas.imag))]
        clusters = _cluster(lambdas, cluster_tol)
        for cluster in clusters:
            lambdas[cluster] = lambdas[cluster].mean()
        return cls(lambdas=lambdas, clusters=clusters)


def _default_cluster_tol(F: np.ndarray) -> float:
    return settings.cluster_tol_rel * max(float(np.linalg.norm(F, 2)), 1.0)


def _cluster(values: np.ndarray, tol: float, multiplicities: list[int] | None = None):
    """Group values into clusters by single linkage; returns index lists sorted by center."""
    if len(values) == 1:
        return [[0]]
    points = np.column_stack([values.real, values.imag])
    tree = linkage(points, method="single")
    if multiplicities:
        labels = fcluster(tree, t=len(multiplicities), criterion="maxclust")
    else:
        labels = fcluster(tree, t=tol, criterion="distance")
    groups: dict[int, list[int]] = {}
    for idx, label in enumerate(labels):
        groups.setdefault(int(label), []).append(idx)
    clusters = sorted(groups.values(), key=lambda g: (values[g].imag.mean(), values[g].real.mean()))
    if multiplicities and sorted(len(c) for c in clusters) != sorted(multiplicities):
        raise ClusterMismatchError(
            f"Declared multiplicities {sorted(multiplicities)} do not match clusters "
            f"{sorted(len(c) for c in clusters)}"
        )
    return clusters


def _greedy_pairs(eigs: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Match eigenvalues into pairs by repeatedly taking the global minimum of |λ_a + λ_b|."""
    k = len(eigs)
    cost = np.abs(eigs[:, None] + eigs[None, :])
    np.fill_diagonal(cost, np.inf)
    unused = set(range(k))
    pairs = []
    residual = 0.0
    while unused:
        idx = sorted(unused)
        sub = cost[np.ix_(idx, idx)]
        a, b = np.unravel_index(np.argmin(sub), sub.shape)
        a, b = idx[a], idx[b]
        residual = max(residual, float(cost[a, b]))
        pairs.append((a, b))
        unused -= {a, b}
    return pairs, residual


def eigen_pairs(
    F: HamiltonMap | np.ndarray,
    cluster_tol: float | None = None,
    multiplicities: list[int] | None = None,
) -> SpectralData:
    """
    Pair the eigenvalues of F as ±λ and keep the upper-half-plane representatives.

    Args:
        F: Hamilton map (or its matrix) of an elliptic normalized form
        cluster_tol: Absolute distance below which eigenvalues form one cluster
            (default cluster_tol_rel·‖F‖)
        multiplicities: Declared cluster multiplicities; bypasses distance clustering

    Returns:
        SpectralData with n representatives, clusters and pairing residual

    Raises:
        RealEigenvalueError: If some |Im λ| is within tolerance of zero
        PairingFailureError: If the best ±pairing leaves a residual above tolerance
    """
    F = F.F if isinstance(F, HamiltonMap) else np.asarray(F, dtype=complex)
    scale = max(float(np.linalg.norm(F, 2)), np.finfo(float).tiny)
    eigs = linalg.eigvals(F)

    real_tol = settings.real_axis_tol_rel * scale
    on_axis = np.abs(eigs.imag) <= real_tol
    if np.any(on_axis):
        raise RealEigenvalueError(
            f"Hamilton map has eigenvalue(s) on the real axis: {eigs[on_axis]} "
            f"(tolerance {real_tol:.3e})"
        )

    pairs, residual = _greedy_pairs(eigs)
    if residual > settings.pairing_tol_rel * scale:
        raise PairingFailureError(
            f"Eigenvalues do not pair as ±λ: residual {residual:.3e} exceeds "
            f"{settings.pairing_tol_rel * scale:.3e}"
        )

    reps = []
    for a, b in pairs:
        up, down = (eigs[a], eigs[b]) if eigs[a].imag > eigs[b].imag else (eigs[b], eigs[a])
        if up.imag <= 0 or down.imag >= 0:
            raise PairingFailureError(
                f"Pair ({eigs[a]}, {eigs[b]}) does not straddle the real axis"
            )
        reps.append((up - down) / 2)
    lambdas = np.array(reps, dtype=complex)
    lambdas = lambdas[np.lexsort((lambdas.real, lambdas.imag))]

    tol = _default_cluster_tol(F) if cluster_tol is None else cluster_tol
    clusters = _cluster(lambdas, tol, multiplicities)
    for cluster in clusters:
        lambdas[cluster] = lambdas[cluster].mean()

    logger.debug(
        "Paired Hamilton eigenvalues",
        n=len(lambdas),
        clusters=len(clusters),
        pairing_residual=residual,
    )
    return SpectralData(lambdas=lambdas, clusters=clusters, pairing_residual=residual)
