from dataclasses import dataclass

import numpy as np
import structlog
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from src.config import settings
from src.errors import NumericalError
from src.symplectic.forms import QuadraticForm, check_elliptic

logger = structlog.get_logger()


class NotNormalizedError(NumericalError):
    """Raised when an operation needs Re q > 0 and the form does not satisfy it."""

    pass


@dataclass(frozen=True)
class Sector:
    """Closed angular sector Σ(q) = q(R^{2n}), given by its boundary angles."""

    theta_min: float
    theta_max: float

    def contains(self, value: complex, tol: float = 1e-8) -> bool:
        if value == 0:
            return True
        angle = float(np.angle(value))
        return self.theta_min - tol <= angle <= self.theta_max + tol


def _sphere_samples(dim: int, samples: int, seed: int) -> np.ndarray:
    """Quasi-uniform points on the real unit sphere S^{dim−1}."""
    if dim == 2:
        angles = np.linspace(0.0, np.pi, samples, endpoint=False)
        return np.column_stack([np.cos(angles), np.sin(angles)])
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(samples, 2))))
    u = sampler.random_base2(m=m)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    points = norm.ppf(u)
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def _refine_ratio(A: np.ndarray, B: np.ndarray, start: np.ndarray, sign: float) -> float:
    """Locally extremize r(X) = XᵀBX / XᵀAX from a starting point."""

    def objective(X):
        a = X @ A @ X
        r = (X @ B @ X) / a
        grad = 2 * (B @ X - r * (A @ X)) / a
        return sign * r, sign * grad

    result = minimize(objective, start, jac=True, method="BFGS", options={"gtol": 1e-13})
    X = result.x
    return float((X @ B @ X) / (X @ A @ X))


def sector(form: QuadraticForm, samples: int | None = None, seed: int = 0) -> Sector:
    """
    Compute the angular sector of a normalized form.

    Since Re q > 0, arg q(X) = arctan(XᵀBX / XᵀAX) with A = Re Q, B = Im Q, so the
    extreme angles come from the extreme values of that ratio. Those are bracketed
    by sampling the unit sphere and polished by a gradient search from the best
    samples.

    Args:
        form: A form with Re Q positive definite
        samples: Minimum number of sphere samples
        seed: Seed for the scrambled Sobol sequence

    Returns:
        Sector whose bounds bracket every sampled argument

    Raises:
        NotNormalizedError: If Re Q is not positive definite
    """
    check = check_elliptic(form)
    if not check.is_normalized:
        raise NotNormalizedError(
            f"sector needs Re q > 0; smallest eigenvalue of Re Q is {check.min_eig_re:.3e}"
        )

    samples = samples or settings.sector_samples
    A = form.Q.real
    B = form.Q.imag
    points = _sphere_samples(2 * form.n, samples, seed)
    ratios = np.einsum("ki,ij,kj->k", points, B, points) / np.einsum(
        "ki,ij,kj->k", points, A, points
    )

    lo = min(float(ratios.min()), _refine_ratio(A, B, points[np.argmin(ratios)], 1.0))
    hi = max(float(ratios.max()), _refine_ratio(A, B, points[np.argmax(ratios)], -1.0))
    return Sector(theta_min=float(np.arctan(lo)), theta_max=float(np.arctan(hi)))
