"""Canonical transformations of the reduction: real shear/scaling, κ_T and κ_C."""

from dataclasses import dataclass

import numpy as np
import structlog
from scipy import linalg

from src.config import settings
from src.errors import ConfigurationError, NumericalError
from src.normal_form.weights import WeightForm
from src.symplectic.forms import QuadraticForm, symplectic_inverse, symplectic_residual

logger = structlog.get_logger()


class NotNegativeDefiniteError(NumericalError):
    """Raised when Im A₋ is not negative definite."""

    pass


class NotPositiveDefiniteError(NumericalError):
    """Raised when Im A₊ is not positive definite after the real reduction."""

    pass


class SingularCayleyError(NumericalError):
    """Raised when 1 − iA₊ is numerically singular."""

    pass


class NotNormalFormError(NumericalError):
    """Raised when a transported form does not have the block structure of Mx·ξ."""

    pass


class DefectiveNotSuppliedError(NumericalError):
    """Raised when diagonalization is requested for a (nearly) defective matrix."""

    pass


@dataclass(frozen=True, eq=False)
class FBIMap:
    """Cayley matrix B and the complex linear canonical map κ_T."""

    B: np.ndarray
    K_T: np.ndarray
    residual_minus: float
    residual_plus: float


@dataclass(frozen=True, eq=False)
class TransportedForm:
    """Reduced matrix M of q̃ = Mx·ξ and the size of the off-structure blocks."""

    M: np.ndarray
    Q_tilde: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class JordanResult:
    C: np.ndarray
    M_out: np.ndarray
    phi1: WeightForm
    mode: str
    condition: float


def _symmetric_sqrt(S: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(S)
    return (V * np.sqrt(w)) @ V.T


def real_reduction(A_minus: np.ndarray) -> np.ndarray:
    """
    Real symplectic map taking the graph η = A₋y to the graph η = −iy.

    Composes the shear (y, η) ↦ (y, η − (Re A₋)y) with the scaling
    (y, η) ↦ (Sy, S⁻¹η), S = (−Im A₋)^{1/2}.

    Raises:
        NotNegativeDefiniteError: If Im A₋ is not negative definite
    """
    A = np.asarray(A_minus, dtype=complex)
    n = A.shape[0]
    N = -(A.imag + A.imag.T) / 2
    w = np.linalg.eigvalsh(N)
    if w[0] <= settings.definiteness_tol:
        raise NotNegativeDefiniteError(
            f"Im A₋ must be negative definite; largest eigenvalue is {-w[0]:.3e}"
        )
    R = (A.real + A.real.T) / 2
    eye = np.eye(n)
    zero = np.zeros((n, n))
    shear = np.block([[eye, zero], [-R, eye]])
    S = _symmetric_sqrt(N)
    scale = np.block([[S, zero], [zero, np.linalg.inv(S)]])
    return scale @ shear


def fbi_map(A_plus: np.ndarray) -> FBIMap:
    """
    Cayley matrix B = (1 − iA₊)⁻¹A₊ and κ_T(y, η) = (y − iη, η + iBη − By).

    Args:
        A_plus: Graph matrix of Λ⁺ after the real reduction

    Returns:
        FBIMap with residuals of the two defining properties: κ_T maps {η = −iy}
        onto {x = 0} and {η = A₊y} onto {ξ = 0}

    Raises:
        NotPositiveDefiniteError: If Im A₊ is not positive definite
        SingularCayleyError: If 1 − iA₊ is numerically singular
        NotNormalFormError: If either defining property fails
    """
    A = np.asarray(A_plus, dtype=complex)
    n = A.shape[0]
    eye = np.eye(n)
    if np.linalg.eigvalsh((A.imag + A.imag.T) / 2)[0] <= settings.definiteness_tol:
        raise NotPositiveDefiniteError("Im A₊ must be positive definite")

    cayley = eye - 1j * A
    cond = np.linalg.cond(cayley)
    if not np.isfinite(cond) or cond > 1 / (np.finfo(float).eps * 1e4):
        raise SingularCayleyError(f"1 − iA₊ is numerically singular (condition {cond:.3e})")
    B = linalg.solve(cayley, A)
    B = (B + B.T) / 2

    K_T = np.block([[eye, -1j * eye], [-B, eye + 1j * B]])
    minus_image = K_T @ np.vstack([eye, -1j * eye])
    plus_image = K_T @ np.vstack([eye, A])
    residual_minus = float(np.max(np.abs(minus_image[:n])))
    residual_plus = float(np.max(np.abs(plus_image[n:])))
    tol = settings.structure_tol * max(1.0, float(np.linalg.norm(K_T, 2)) ** 2)
    if residual_minus > tol or residual_plus > tol:
        raise NotNormalFormError(
            f"κ_T does not straighten Λ±: residuals {residual_minus:.3e}, {residual_plus:.3e}"
        )
    return FBIMap(B=B, K_T=K_T, residual_minus=residual_minus, residual_plus=residual_plus)


def transported_form(Q: np.ndarray, K: np.ndarray, tol: float | None = None) -> TransportedForm:
    """
    Transport q through a symplectic K and read off M from q̃ = Mx·ξ.

    Q̃ = K⁻ᵀQK⁻¹ must equal (1/2)[[0, Mᵀ], [M, 0]], with (Mx)·ξ = Σ M_ij x_j ξ_i.

    Raises:
        NotNormalFormError: If the xx or ξξ block exceeds tolerance
    """
    tol = settings.structure_tol if tol is None else tol
    Q = Q.Q if isinstance(Q, QuadraticForm) else np.asarray(Q, dtype=complex)
    n = Q.shape[0] // 2
    K_inv = symplectic_inverse(K)
    Q_tilde = K_inv.T @ Q @ K_inv
    Q_tilde = (Q_tilde + Q_tilde.T) / 2
    scale = max(1.0, float(np.linalg.norm(Q_tilde, 2)))
    residual = max(
        float(np.max(np.abs(Q_tilde[:n, :n]))), float(np.max(np.abs(Q_tilde[n:, n:])))
    )
    if residual > tol * scale:
        raise NotNormalFormError(
            f"Transported form has xx/ξξ blocks of size {residual:.3e} "
            f"(tolerance {tol * scale:.3e})"
        )
    M = 2 * Q_tilde[n:, :n]
    return TransportedForm(M=M, Q_tilde=Q_tilde, residual=residual)


def kappa_c(C: np.ndarray) -> np.ndarray:
    """Symplectic matrix of (x, ξ) ↦ (C⁻¹x, Cᵀξ)."""
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    zero = np.zeros((n, n))
    return np.block([[np.linalg.inv(C), zero], [zero, C.T]])


def jordanize(
    M: np.ndarray, mode: str, phi0: WeightForm, C: np.ndarray | None = None
) -> JordanResult:
    """
    Change variables x ↦ C⁻¹x in the reduced form and the weight.

    Args:
        M: Reduced matrix
        mode: "exact" (C supplied), "diagonalized" (C from eigenvectors) or "raw" (C = I)
        phi0: Weight Φ₀ on the reduced side
        C: Invertible matrix, required in exact mode

    Returns:
        JordanResult with M_out = C⁻¹MC and Φ₁(x) = Φ₀(Cx)

    Raises:
        DefectiveNotSuppliedError: If the eigenvector matrix is too ill-conditioned
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if mode == "raw":
        C = np.eye(n, dtype=complex)
        M_out = M.copy()
    elif mode == "exact":
        if C is None:
            raise ConfigurationError("jordanize in exact mode needs the matrix C")
        C = np.asarray(C, dtype=complex)
        M_out = linalg.solve(C, M @ C)
        # snap roundoff so a triangular target stays exactly triangular
        M_out[np.abs(M_out) <= settings.structure_tol * max(1.0, np.abs(M_out).max())] = 0
    elif mode == "diagonalized":
        w, V = linalg.eig(M)
        order = np.lexsort((w.real, w.imag))
        w, V = w[order], V[:, order]
        cond = float(np.linalg.cond(V))
        if not np.isfinite(cond) or cond > settings.diagonalize_condition_cap:
            raise DefectiveNotSuppliedError(
                f"Eigenvector matrix has condition {cond:.3e}; supply C in exact mode"
            )
        C = V
        M_out = np.diag(w)
    else:
        raise ConfigurationError(f"Unknown jordan mode {mode!r}")

    condition = float(np.linalg.cond(C))
    phi1 = phi0.composed(C)
    logger.debug("Jordanized reduced matrix", mode=mode, condition=condition)
    return JordanResult(C=C, M_out=M_out, phi1=phi1, mode=mode, condition=condition)


def reduced_form_matrix(M: np.ndarray) -> np.ndarray:
    """Coefficient matrix (1/2)[[0, Mᵀ], [M, 0]] of q̃(x, ξ) = Mx·ξ."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    zero = np.zeros((n, n))
    return np.block([[zero, M.T], [M, zero]]) / 2


def lift_reduced_form(M: np.ndarray, C: np.ndarray, B: np.ndarray) -> QuadraticForm:
    """
    Pull Mx·ξ back to real phase space through κ_C ∘ κ_T.

    K_T is built from B with A₊ = (1 + iB)⁻¹B; the reduction of the returned form
    with jordanize(mode="exact", C=C) gives back M.
    """
    M = np.asarray(M, dtype=complex)
    C = np.asarray(C, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = M.shape[0]
    eye = np.eye(n)
    K_T = np.block([[eye, -1j * eye], [-B, eye + 1j * B]])
    K = kappa_c(C) @ K_T
    if symplectic_residual(K) > settings.lagrangian_tol * max(1.0, np.linalg.norm(K, 2) ** 2):
        raise NotNormalFormError("κ_C ∘ κ_T is not symplectic; check that B is symmetric")
    Q = K.T @ reduced_form_matrix(M) @ K
    return QuadraticForm(n=n, Q=(Q + Q.T) / 2)
