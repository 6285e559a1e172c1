from dataclasses import dataclass

import numpy as np
import structlog
from scipy import linalg

from src.config import settings
from src.errors import NumericalError
from src.fock.basis import MultiIndexBasis, enumerate_basis

logger = structlog.get_logger()


class SpectralPointHitError(NumericalError):
    """Raised when z is (numerically) an eigenvalue of the truncated operator."""

    pass


class NotNilpotentError(NumericalError):
    """Raised when no power of a matrix up to its size falls below the threshold."""

    pass


@dataclass(frozen=True, eq=False)
class FockBlock:
    """
    Matrix of q̃^w on E_m in the normalized basis φ_α.

    A[β, α] is the coefficient of φ_β in q̃^w φ_α. When M is triangular the block
    is triangular as well and splits as D + N, D diagonal and N strictly
    triangular (nilpotent).
    """

    m: int
    h: float
    A: np.ndarray
    basis: MultiIndexBasis
    D: np.ndarray | None = None
    N: np.ndarray | None = None
    lower: bool | None = None

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.A - np.diag(np.diag(self.A)))

    def eigenvalues(self) -> np.ndarray:
        if self.lower is not None:
            return np.diag(self.A).copy()
        return linalg.eigvals(self.A)


def _triangular_side(M: np.ndarray) -> bool | None:
    """Triangularity of the Fock block produced by M: True lower, False upper, None neither."""
    if not np.any(np.tril(M, -1)):
        return True
    if not np.any(np.triu(M, 1)):
        return False
    return None


def weyl_block(M: np.ndarray, h: float, m: int) -> FockBlock:
    """
    Assemble q̃^w = Σ M_ij x_j hD_i + (h/2i) tr M on E_m.

    x_j hD_i sends φ_α to (h/i)√(α_i(α_j+1)) φ_{α−e_i+e_j} for i ≠ j and to
    (h/i)α_i φ_α for i = j.

    Args:
        M: Reduced n×n matrix
        h: Semiclassical parameter
        m: Degree

    Returns:
        FockBlock, with the D/N split when M is triangular
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    basis = enumerate_basis(n, m)
    size = len(basis)
    A = np.zeros((size, size), dtype=complex)
    factor = h / 1j

    for col, alpha in enumerate(basis.indices):
        for i in range(n):
            if alpha[i] == 0:
                continue
            for j in range(n):
                coeff = M[i, j]
                if coeff == 0:
                    continue
                if i == j:
                    A[col, col] += coeff * factor * alpha[i]
                    continue
                beta = list(alpha)
                beta[i] -= 1
                beta[j] += 1
                row = basis.position[tuple(beta)]
                A[row, col] += coeff * factor * np.sqrt(alpha[i] * (alpha[j] + 1))

    A[np.diag_indices(size)] += (h / 2j) * np.trace(M)

    lower = _triangular_side(M)
    if lower is None:
        return FockBlock(m=m, h=h, A=A, basis=basis)
    D = np.diag(np.diag(A))
    return FockBlock(m=m, h=h, A=A, basis=basis, D=D, N=A - D, lower=lower)


def nilpotent_order(N_part: np.ndarray, threshold: float | None = None) -> int:
    """
    Smallest p with ‖(N/‖N‖)^p‖ ≤ threshold.

    Powers of the normalized matrix are renormalized implicitly by the unit
    scaling, which keeps h-scaled entries away from underflow.

    Raises:
        NotNilpotentError: If no p up to the matrix size qualifies
    """
    threshold = settings.nilpotent_threshold if threshold is None else threshold
    N_part = np.asarray(N_part, dtype=complex)
    scale = float(np.linalg.norm(N_part, 2)) if N_part.size else 0.0
    if scale == 0.0:
        return 1
    B = N_part / scale
    P = B
    for p in range(1, N_part.shape[0] + 1):
        if np.linalg.norm(P, 2) <= threshold:
            return p
        P = P @ B
    raise NotNilpotentError(
        f"No power up to {N_part.shape[0]} vanishes (last norm {np.linalg.norm(P, 2):.3e})"
    )


def _guard(distance: float, z: complex, scale: float) -> None:
    if distance <= settings.spectral_hit_guard * max(1.0, abs(z), scale):
        raise SpectralPointHitError(
            f"z = {z} is an eigenvalue of the block (distance {distance:.3e})"
        )


def block_inverse(block: FockBlock, z: complex) -> np.ndarray:
    """(z − A)⁻¹, by triangular substitution when the block is triangular."""
    shift = z * np.eye(block.size) - block.A
    diag = np.diag(shift)
    scale = float(np.max(np.abs(block.A))) if block.size else 0.0
    if block.lower is not None:
        _guard(float(np.min(np.abs(diag))), z, scale)
        return linalg.solve_triangular(shift, np.eye(block.size), lower=block.lower)
    sv = linalg.svdvals(shift)
    _guard(float(sv[-1]), z, scale)
    return linalg.inv(shift)


def resolvent_block(block: FockBlock, z: complex, gram=None) -> float:
    """
    Operator norm of (z − A)⁻¹ on E_m.

    Without gram the norm is the flat one, where φ_α is orthonormal. With a
    GramMatrix for this degree (G = L Lᴴ) the norm is ‖Lᴴ (z − A)⁻¹ L⁻ᴴ‖.

    Raises:
        SpectralPointHitError: If z is within the guard distance of an eigenvalue
    """
    if gram is None and block.is_diagonal:
        distance = float(np.min(np.abs(z - np.diag(block.A))))
        _guard(distance, z, float(np.max(np.abs(block.A))))
        return 1.0 / distance
    R = block_inverse(block, z)
    if gram is None:
        return float(linalg.svdvals(R)[0])
    return gram_operator_norm(R, gram.L)


def gram_operator_norm(R: np.ndarray, L: np.ndarray) -> float:
    """‖Lᴴ R L⁻ᴴ‖ for a lower Cholesky factor L."""
    left = L.conj().T @ R
    # X L^H = left  <=>  L X^H = left^H
    X = linalg.solve_triangular(L, left.conj().T, lower=True).conj().T
    return float(linalg.svdvals(X)[0])


def neumann_resolvent_block(
    D: np.ndarray, N_part: np.ndarray, z: complex, terms: int | None = None
) -> np.ndarray:
    """
    (z − D − N)⁻¹ as the finite series Σ_j ((z − D)⁻¹N)^j (z − D)⁻¹.

    The series stops when a power of (z − D)⁻¹N is exactly zero, which for a
    Jordan-type block happens after at most m(n−1)+1 terms. Passing terms sums
    exactly that many.

    Raises:
        SpectralPointHitError: If z hits a diagonal entry of D
    """
    d = np.diag(np.asarray(D, dtype=complex))
    N_part = np.asarray(N_part, dtype=complex)
    gaps = z - d
    _guard(float(np.min(np.abs(gaps))), z, float(np.max(np.abs(d))) if d.size else 0.0)
    inv_gaps = 1.0 / gaps
    X = inv_gaps[:, None] * N_part
    size = len(d)
    total = np.eye(size, dtype=complex)
    power = np.eye(size, dtype=complex)
    limit = size if terms is None else terms - 1
    for _ in range(limit):
        power = power @ X
        if terms is None and not np.any(power):
            break
        total = total + power
    return total * inv_gaps[None, :]


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """q̃^w restricted to the polynomials of degree < N, as its diagonal blocks."""

    M: np.ndarray
    h: float
    blocks: tuple[FockBlock, ...]

    @classmethod
    def build(cls, M: np.ndarray, h: float, N: int) -> "TruncatedOperator":
        M = np.asarray(M, dtype=complex)
        return cls(M=M, h=h, blocks=tuple(weyl_block(M, h, m) for m in range(N)))

    def extended(self, N: int) -> "TruncatedOperator":
        if N <= self.N:
            return TruncatedOperator(M=self.M, h=self.h, blocks=self.blocks[:N])
        more = tuple(weyl_block(self.M, self.h, m) for m in range(self.N, N))
        return TruncatedOperator(M=self.M, h=self.h, blocks=self.blocks + more)

    @property
    def N(self) -> int:
        return len(self.blocks)

    @property
    def dimension(self) -> int:
        return sum(b.size for b in self.blocks)

    def eigenvalues(self) -> np.ndarray:
        if not self.blocks:
            return np.array([], dtype=complex)
        return np.concatenate([b.eigenvalues() for b in self.blocks])

    def resolvent_norm(self, z: complex, gram=None) -> float:
        """
        Norm of (z − A)⁻¹ on degrees < N.

        Flat norm and circular weights decouple degrees, so the norm is the
        largest block norm. Other weights use the full cross-degree Gram factor,
        which must start at degree 0 and cover at least N degrees.
        """
        if gram is None:
            return max(resolvent_block(b, z) for b in self.blocks)
        if gram.circular:
            return max(resolvent_block(b, z, gram.block(b.m)) for b in self.blocks)
        R = linalg.block_diag(*[block_inverse(b, z) for b in self.blocks])
        return gram_operator_norm(R, gram.leading_factor(self.N))
