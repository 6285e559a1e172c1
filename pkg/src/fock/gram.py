"""
Gram matrices of the normalized monomials φ_α in weighted spaces H_Φ.

With x = h^{1/2}y the inner product (φ_α, φ_β)_{H_Φ} no longer depends on h:

    (φ_α, φ_β) = det(G)^{-1/2} E[y^α ȳ^β] / √(α!β!),

where w = (Re y, Im y) is Gaussian with covariance G⁻¹/2. The moments are
computed by Stein's identity on Y = (y, ȳ), whose (bilinear) covariance is
T(G⁻¹/2)Tᵀ with T = [[I, iI], [I, −iI]].
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import structlog
from scipy import linalg

from src.config import settings
from src.errors import NumericalError
from src.fock.basis import degree_range_basis, dimension
from src.fock.blocks import gram_operator_norm
from src.normal_form.weights import NotConvexError, WeightForm

logger = structlog.get_logger()


class BasisTooLargeError(NumericalError):
    """Raised when a Gram matrix would exceed the configured basis size."""

    pass


class IllConditionedGramError(NumericalError):
    """Raised when a Gram matrix is too ill-conditioned to factor reliably."""

    pass


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """
    Hermitian Gram matrix over the degrees in `degrees` (ascending, concatenated).

    G[b, a] = (φ_a, φ_b), so ‖Σ c_α φ_α‖² = cᴴ G c; L is the lower Cholesky factor.
    """

    n: int
    degrees: tuple[int, ...]
    indices: list[tuple[int, ...]]
    G: np.ndarray
    L: np.ndarray
    condition: float
    jitter: float = 0.0
    circular: bool = False
    _offsets: dict[int, tuple[int, int]] = field(default_factory=dict, repr=False)

    def span(self, m: int) -> tuple[int, int]:
        return self._offsets[m]

    def block(self, m: int) -> "GramMatrix":
        """Gram matrix of degree m alone, with its own Cholesky factor."""
        start, stop = self.span(m)
        G = self.G[start:stop, start:stop]
        L, jitter = _cholesky(G)
        return GramMatrix(
            n=self.n,
            degrees=(m,),
            indices=self.indices[start:stop],
            G=G,
            L=L,
            condition=float(np.linalg.cond(G)),
            jitter=jitter,
            circular=self.circular,
            _offsets={m: (0, stop - start)},
        )

    def leading_factor(self, N: int) -> np.ndarray:
        """Cholesky factor for degrees < N (a leading submatrix of L)."""
        if self.degrees[: N] != tuple(range(N)):
            raise ValueError(f"Gram degrees {self.degrees} do not cover 0..{N - 1}")
        stop = self.span(N - 1)[1]
        return self.L[:stop, :stop]


@dataclass(frozen=True)
class TauNorm:
    """Norm of the Taylor truncation τ_N, with a stability check on the cutoff."""

    norm: float
    norm_extended: float
    converged: bool
    cutoff_degree: int


def _moment_covariance(weight: WeightForm) -> np.ndarray:
    n = weight.n
    eye = np.eye(n)
    T = np.block([[eye, 1j * eye], [eye, -1j * eye]])
    sigma = np.linalg.inv(weight.G) / 2
    return T @ sigma @ T.T


def _normalized_moments(C: np.ndarray):
    """ĝ(γ) = E[Y^γ]/√γ! through ĝ(γ) = γ_k^{-1/2} Σ_l C_kl √γ'_l ĝ(γ' − e_l)."""
    dim = C.shape[0]

    @lru_cache(maxsize=None)
    def g(gamma: tuple[int, ...]) -> complex:
        total_degree = sum(gamma)
        if total_degree == 0:
            return 1.0 + 0.0j
        if total_degree % 2:
            return 0.0j
        k = next(i for i, v in enumerate(gamma) if v > 0)
        reduced = list(gamma)
        reduced[k] -= 1
        acc = 0.0j
        for l in range(dim):
            if reduced[l] == 0 or C[k, l] == 0:
                continue
            lower = list(reduced)
            lower[l] -= 1
            acc += C[k, l] * math.sqrt(reduced[l]) * g(tuple(lower))
        return acc / math.sqrt(gamma[k])

    return g


def _cholesky(G: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return linalg.cholesky(G, lower=True), 0.0
    except linalg.LinAlgError:
        jitter = settings.gram_jitter_rel * float(np.max(np.abs(np.diag(G))))
        try:
            L = linalg.cholesky(G + jitter * np.eye(G.shape[0]), lower=True)
        except linalg.LinAlgError as exc:
            raise IllConditionedGramError(f"Gram matrix is not positive definite: {exc}")
        logger.warning("Gram Cholesky needed jitter", jitter=jitter, size=G.shape[0])
        return L, jitter


def gram_matrix(weight: WeightForm, h: float, degrees) -> GramMatrix:
    """
    Gram matrix of the φ_α in H_Φ for the given degrees.

    Args:
        weight: Strictly convex weight Φ
        h: Semiclassical parameter (the normalized entries do not depend on it)
        degrees: Iterable of degrees, concatenated in ascending order

    Returns:
        GramMatrix with Cholesky factor and condition estimate

    Raises:
        NotConvexError: If Φ is not strictly convex
        BasisTooLargeError: If the basis exceeds gram_basis_cap
        IllConditionedGramError: If the condition number exceeds gram_condition_cap
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if not weight.is_strictly_convex():
        raise NotConvexError("Gram matrices need a strictly convex weight")
    n = weight.n
    degrees = tuple(sorted(set(int(m) for m in degrees)))
    size = sum(dimension(n, m) for m in degrees)
    if size > settings.gram_basis_cap:
        raise BasisTooLargeError(
            f"Basis of size {size} exceeds the cap {settings.gram_basis_cap}; lower the degree"
        )

    indices = degree_range_basis(n, degrees)
    offsets = {}
    start = 0
    for m in degrees:
        offsets[m] = (start, start + dimension(n, m))
        start += dimension(n, m)

    circular = weight.is_circular()
    g = _normalized_moments(_moment_covariance(weight))
    prefactor = 1.0 / math.sqrt(float(np.linalg.det(weight.G)))
    G = np.zeros((size, size), dtype=complex)
    for a, alpha in enumerate(indices):
        for b in range(a, size):
            beta = indices[b]
            if circular and sum(alpha) != sum(beta):
                continue
            value = prefactor * g(alpha + beta)
            G[b, a] = value
            G[a, b] = np.conj(value)
    G = (G + G.conj().T) / 2

    eigs = np.linalg.eigvalsh(G)
    condition = float(eigs[-1] / eigs[0]) if eigs[0] > 0 else math.inf
    if condition > settings.gram_condition_cap:
        raise IllConditionedGramError(
            f"Gram matrix condition {condition:.3e} exceeds {settings.gram_condition_cap:.1e}; "
            "lower the cutoff degree"
        )
    L, jitter = _cholesky(G)
    logger.debug("Built Gram matrix", n=n, size=size, condition=condition, circular=circular)
    return GramMatrix(
        n=n,
        degrees=degrees,
        indices=indices,
        G=G,
        L=L,
        condition=condition,
        jitter=jitter,
        circular=circular,
        _offsets=offsets,
    )


def radial_monomial_inner_product(C1: float, h: float, alpha) -> float:
    """(x^α, x^α) in H_Φ for Φ = |x|²/C₁, i.e. (C₁h/2)^{n+|α|} π^n α!."""
    n = len(alpha)
    order = n + sum(alpha)
    log_value = (
        order * math.log(C1 * h / 2)
        + n * math.log(math.pi)
        + sum(math.lgamma(a + 1) for a in alpha)
    )
    return math.exp(log_value)


def raw_gram_entries(gram: GramMatrix, h: float) -> np.ndarray:
    """Convert normalized entries to raw monomial inner products (x^α, x^β)."""
    n = gram.n
    log_c = np.array(
        [
            -0.5 * (n * math.log(math.pi) + sum(math.lgamma(a + 1) for a in alpha))
            - 0.5 * (n + sum(alpha)) * math.log(h)
            for alpha in gram.indices
        ]
    )
    return gram.G * np.exp(-(log_c[:, None] + log_c[None, :]))


def min_vanishing_order(K: float, C1: float, h: float) -> int:
    """Least integer N ≥ (2C₁(K+1)²e² + 1)/h."""
    if K < 0 or C1 < 1 or h <= 0:
        raise ValueError(f"min_vanishing_order needs K ≥ 0, C1 ≥ 1, h > 0 (got {K}, {C1}, {h})")
    return math.ceil((2 * C1 * (K + 1) ** 2 * math.e**2 + 1) / h)


def _tau_norm(gram: GramMatrix, N: int) -> float:
    keep = np.array([sum(alpha) < N for alpha in gram.indices], dtype=float)
    return gram_operator_norm(np.diag(keep).astype(complex), gram.L)


def projection_norm_tau(N: int, weight: WeightForm, h: float, cutoff_degree: int) -> TauNorm:
    """
    Norm of the Taylor truncation onto degrees < N in the H_Φ geometry, on
    polynomials of degree ≤ cutoff_degree; repeated with cutoff_degree + 4.
    """
    if cutoff_degree <= N:
        raise ValueError(f"cutoff_degree ({cutoff_degree}) must exceed N ({N})")
    extended = gram_matrix(weight, h, range(cutoff_degree + 5))
    stop = extended.span(cutoff_degree)[1]
    G = extended.G[:stop, :stop]
    truncated = GramMatrix(
        n=extended.n,
        degrees=tuple(range(cutoff_degree + 1)),
        indices=extended.indices[:stop],
        G=G,
        L=extended.L[:stop, :stop],
        condition=float(np.linalg.cond(G)),
        circular=extended.circular,
        _offsets={m: extended.span(m) for m in range(cutoff_degree + 1)},
    )
    norm = _tau_norm(truncated, N)
    norm_extended = _tau_norm(extended, N)
    converged = abs(norm_extended - norm) <= 1e-6 * max(1.0, norm)
    return TauNorm(
        norm=norm, norm_extended=norm_extended, converged=converged, cutoff_degree=cutoff_degree
    )


def norm_equivalence_ratios(weight: WeightForm, N: int) -> np.ndarray:
    """
    ‖φ_α‖_{H_Φ₁} / ‖φ_α‖_{H_Φ} for |α| < N.

    Φ = |x|²/2 makes every φ_α a unit vector, so the ratios are the Gram diagonal.
    """
    gram = gram_matrix(weight, 1.0, range(N))
    return np.sqrt(np.real(np.diag(gram.G)))
