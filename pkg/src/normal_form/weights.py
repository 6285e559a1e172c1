from dataclasses import dataclass

import numpy as np
import structlog

from src.config import settings
from src.errors import NumericalError

logger = structlog.get_logger()


class NotConvexError(NumericalError):
    """Raised when a quadratic weight is not strictly convex."""

    pass


class EllipticityViolatedError(NumericalError):
    """Raised when Re q̃(x, (2/i)∂Φ₁/∂x) is not positive on the unit sphere."""

    pass


@dataclass(frozen=True, eq=False)
class WeightForm:
    """
    Real quadratic weight Φ(x) = (1/2) wᵀ G w on C^n, w = (Re x, Im x).

    G is a real symmetric 2n×2n matrix.
    """

    G: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        object.__setattr__(self, "G", (G + G.T) / 2)

    @property
    def n(self) -> int:
        return self.G.shape[0] // 2

    @classmethod
    def radial(cls, n: int, c: float) -> "WeightForm":
        """Φ(x) = c|x|²."""
        return cls(G=2 * c * np.eye(2 * n))

    def __call__(self, x) -> float:
        w = np.concatenate([np.real(x), np.imag(x)])
        return float(w @ self.G @ w) / 2

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.G)

    def is_strictly_convex(self, tol: float | None = None) -> bool:
        tol = settings.definiteness_tol if tol is None else tol
        return bool(self.eigenvalues()[0] > tol)

    def is_circular(self, tol: float = 1e-12) -> bool:
        """True when Φ(e^{iθ}x) = Φ(x), i.e. G commutes with multiplication by i."""
        n = self.n
        eye = np.eye(n)
        zero = np.zeros((n, n))
        Jc = np.block([[zero, -eye], [eye, zero]])
        return float(np.max(np.abs(self.G @ Jc - Jc @ self.G))) <= tol * max(
            1.0, float(np.max(np.abs(self.G)))
        )

    def radial_constant(self, tol: float = 1e-12) -> float | None:
        """Return c when Φ(x) = c|x|², else None."""
        c = float(np.mean(np.diag(self.G))) / 2
        if np.max(np.abs(self.G - 2 * c * np.eye(2 * self.n))) <= tol * max(1.0, abs(c)):
            return c
        return None

    def gradient_xi(self) -> np.ndarray:
        """
        n×2n complex matrix Ξ with (2/i)∂Φ/∂x = Ξ w.

        With ∂/∂x = (1/2)(∂_{Re x} − i∂_{Im x}) and Gw = (g_u, g_v), the value is
        −g_v − i g_u.
        """
        n = self.n
        return -(self.G[n:, :] + 1j * self.G[:n, :])

    def composed(self, C: np.ndarray) -> "WeightForm":
        """Weight x ↦ Φ(Cx) for a complex n×n matrix C."""
        C = np.asarray(C, dtype=complex)
        R = np.block([[C.real, -C.imag], [C.imag, C.real]])
        return WeightForm(G=R.T @ self.G @ R)


@dataclass(frozen=True)
class EllipticityConstants:
    C0: float
    C1: float
    mu_min: float


def phi0(B: np.ndarray) -> WeightForm:
    """
    Weight Φ₀(x) = (1/2)((Im x)² + Im(Bx·x)) attached to the Cayley matrix B.

    Raises:
        NotConvexError: If the assembled G has an eigenvalue ≤ tolerance
    """
    B = np.asarray(B, dtype=complex)
    n = B.shape[0]
    Br, Bi = B.real, B.imag
    G = np.block([[Bi, Br], [Br, np.eye(n) - Bi]])
    weight = WeightForm(G=G)
    smallest = float(weight.eigenvalues()[0])
    if smallest <= settings.definiteness_tol:
        raise NotConvexError(
            f"Φ₀ is not strictly convex: smallest eigenvalue of G is {smallest:.3e}"
        )
    return weight


def ellipticity_constants(M: np.ndarray, phi1: WeightForm) -> EllipticityConstants:
    """
    Constants C₀, C₁ ≥ 1 of the reduced form and its weight.

    C₁ is the least constant with |x|²/C₁ ≤ Φ₁(x) ≤ C₁|x|². C₀ is the least
    constant with Re q̃(x, (2/i)∂Φ₁/∂x) ≥ |x|²/C₀; the left side is the real
    quadratic form wᵀEw with E = sym Re(ΞᵀMP), x = Pw, P = [I, iI].

    Raises:
        NotConvexError: If Φ₁ is not strictly convex
        EllipticityViolatedError: If the smallest eigenvalue of E is ≤ 0
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    g = phi1.eigenvalues()
    if g[0] <= settings.definiteness_tol:
        raise NotConvexError(f"Φ₁ is not strictly convex: smallest eigenvalue {g[0]:.3e}")
    C1 = max(1.0, float(g[-1]) / 2, 2 / float(g[0]))

    P = np.hstack([np.eye(n), 1j * np.eye(n)])
    E = (phi1.gradient_xi().T @ M @ P).real
    E = (E + E.T) / 2
    mu_min = float(np.linalg.eigvalsh(E)[0])
    if mu_min <= 0:
        raise EllipticityViolatedError(
            f"Re q̃(x, (2/i)∂Φ₁/∂x) is not positive: smallest value {mu_min:.3e} on |x| = 1"
        )
    C0 = max(1.0, 1 / mu_min)
    return EllipticityConstants(C0=C0, C1=C1, mu_min=mu_min)


def weight_graph_residual(K_T: np.ndarray, weight: WeightForm) -> float:
    """
    Largest deviation of κ_T(R^{2n}) from Λ_Φ = {(x, (2/i)∂Φ/∂x(x))} on the standard basis.
    """
    n = weight.n
    images = np.asarray(K_T) @ np.eye(2 * n)
    x = images[:n]
    xi = images[n:]
    w = np.vstack([x.real, x.imag])
    return float(np.max(np.abs(xi - weight.gradient_xi() @ w)))
