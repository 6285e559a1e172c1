from dataclasses import dataclass

import numpy as np
import structlog
from scipy.optimize import minimize_scalar

from src.config import settings
from src.errors import ConfigurationError, DimensionMismatchError, NumericalError

logger = structlog.get_logger()


class NotSymmetricError(ConfigurationError):
    """Raised when a coefficient matrix is not symmetric within tolerance."""

    pass


class NoRotationFoundError(NumericalError):
    """Raised when no unit factor makes the real part of a form positive definite."""

    pass


def symplectic_matrix(n: int) -> np.ndarray:
    """Return J with σ(X, Y) = Xᵀ J Y = ξ·y − x·η for X = (x, ξ), Y = (y, η)."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def sigma(X: np.ndarray, Y: np.ndarray) -> complex:
    """Bilinear (not sesquilinear) symplectic pairing of two phase-space vectors."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[0] // 2
    return X.T @ symplectic_matrix(n) @ Y


def symplectic_inverse(K: np.ndarray) -> np.ndarray:
    """Inverse of a symplectic matrix, J⁻¹ Kᵀ J, without a linear solve."""
    n = K.shape[0] // 2
    J = symplectic_matrix(n)
    return -J @ K.T @ J


def symplectic_residual(K: np.ndarray) -> float:
    """Return ‖Kᵀ J K − J‖ (Frobenius)."""
    n = K.shape[0] // 2
    J = symplectic_matrix(n)
    return float(np.linalg.norm(K.T @ J @ K - J))


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Complex quadratic form q(X) = Xᵀ Q X on R^{2n}, X = (x₁..x_n, ξ₁..ξ_n)."""

    n: int
    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=complex)
        if Q.shape != (2 * self.n, 2 * self.n):
            raise DimensionMismatchError(
                f"Q has shape {Q.shape}, expected {(2 * self.n, 2 * self.n)} for n={self.n}"
            )
        scale = max(1.0, float(np.linalg.norm(Q)))
        asym = float(np.linalg.norm(Q - Q.T))
        if asym > settings.symmetry_tol * scale:
            raise NotSymmetricError(f"Q is not symmetric: ‖Q − Qᵀ‖ = {asym:.3e}")
        Q = (Q + Q.T) / 2
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_matrix(cls, Q) -> "QuadraticForm":
        Q = np.asarray(Q, dtype=complex)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] % 2:
            raise DimensionMismatchError(f"Q must be square of even size, got {Q.shape}")
        return cls(n=Q.shape[0] // 2, Q=Q)

    def polarize(self, X: np.ndarray, Y: np.ndarray) -> complex:
        return complex(np.asarray(X) @ self.Q @ np.asarray(Y))

    def scaled(self, factor: complex) -> "QuadraticForm":
        return QuadraticForm(n=self.n, Q=factor * self.Q)


@dataclass(frozen=True)
class EllipticCheck:
    """Outcome of the Re Q > 0 test."""

    is_normalized: bool
    min_eig_re: float


@dataclass(frozen=True, eq=False)
class Rotation:
    """Unit factor λ with Re(λQ) positive definite, and the rotated form."""

    lam: complex
    rotated: QuadraticForm


@dataclass(frozen=True, eq=False)
class HamiltonMap:
    """Linear map F with σ(X, FY) = q(X, Y)."""

    F: np.ndarray

    @property
    def n(self) -> int:
        return self.F.shape[0] // 2

    def representation_residual(self, form: QuadraticForm) -> float:
        """Largest |σ(e_i, F e_j) − q(e_i, e_j)| over the standard basis."""
        J = symplectic_matrix(self.n)
        return float(np.max(np.abs(J @ self.F - form.Q)))

    def skew_residual(self) -> float:
        """Largest |σ(F e_i, e_j) + σ(e_i, F e_j)| over the standard basis."""
        J = symplectic_matrix(self.n)
        return float(np.max(np.abs(self.F.T @ J + J @ self.F)))


def evaluate(form: QuadraticForm, X) -> complex:
    """
    Evaluate q(X) = Xᵀ Q X.

    Args:
        form: The quadratic form
        X: Complex vector of length 2n

    Returns:
        The complex value q(X)

    Raises:
        DimensionMismatchError: If X does not have length 2n
    """
    X = np.asarray(X, dtype=complex)
    if X.shape != (2 * form.n,):
        raise DimensionMismatchError(f"X has shape {X.shape}, expected ({2 * form.n},)")
    return complex(X @ form.Q @ X)


def check_elliptic(form: QuadraticForm, tol: float | None = None) -> EllipticCheck:
    """Report whether Re Q is positive definite. Never raises."""
    tol = settings.definiteness_tol if tol is None else tol
    min_eig = float(np.linalg.eigvalsh(form.Q.real)[0])
    return EllipticCheck(is_normalized=min_eig > tol, min_eig_re=min_eig)


def _min_eig_rotated(Q: np.ndarray, theta: float) -> float:
    return float(np.linalg.eigvalsh((np.exp(1j * theta) * Q).real)[0])


def normalize_rotation(form: QuadraticForm, grid: int | None = None) -> Rotation:
    """
    Find λ = e^{iθ} such that Re(λq) is positive definite.

    The angle maximizing the smallest eigenvalue of Re(e^{iθ}Q) is located on a
    uniform grid and then refined with a bounded scalar search around the best
    grid point.

    Args:
        form: An elliptic quadratic form
        grid: Number of grid angles (at least 720)

    Returns:
        Rotation with λ = 1 when the input is already normalized

    Raises:
        NoRotationFoundError: If no angle yields a positive definite real part
    """
    if check_elliptic(form).is_normalized:
        return Rotation(lam=1.0 + 0.0j, rotated=form)

    grid = max(grid or settings.rotation_grid, 720)
    thetas = np.linspace(-np.pi, np.pi, grid, endpoint=False)
    values = np.array([_min_eig_rotated(form.Q, t) for t in thetas])
    best = int(np.argmax(values))
    step = 2 * np.pi / grid

    result = minimize_scalar(
        lambda t: -_min_eig_rotated(form.Q, t),
        bounds=(thetas[best] - step, thetas[best] + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    theta = float(result.x) if -result.fun >= values[best] else float(thetas[best])
    best_value = _min_eig_rotated(form.Q, theta)

    if best_value <= settings.definiteness_tol:
        raise NoRotationFoundError(
            f"No rotation makes Re(λQ) positive definite (best smallest eigenvalue "
            f"{best_value:.3e}); the form is not elliptic or has full range"
        )

    lam = complex(np.exp(1j * theta))
    logger.info("Normalized quadratic form", theta=theta, min_eig_re=best_value)
    return Rotation(lam=lam, rotated=form.scaled(lam))


def hamilton_map(form: QuadraticForm) -> HamiltonMap:
    """Return the Hamilton map F = J⁻¹ Q."""
    J = symplectic_matrix(form.n)
    return HamiltonMap(F=-J @ form.Q)


def hamilton_vector_field(form: QuadraticForm, Y, step: float = 1.0) -> np.ndarray:
    """
    Evaluate H_q(Y) = (∂q/∂ξ, −∂q/∂x) from central differences of q.

    Central differences are exact for quadratic polynomials, so this gives an
    assembly of H_q that does not go through Q directly.
    """
    Y = np.asarray(Y, dtype=complex)
    dim = 2 * form.n
    grad = np.empty(dim, dtype=complex)
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = step
        grad[k] = (evaluate(form, Y + e) - evaluate(form, Y - e)) / (2 * step)
    n = form.n
    return np.concatenate([grad[n:], -grad[:n]])
