from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import norm, qmc


@dataclass(frozen=True, eq=False)
class HolomorphicPolynomial:
    """u(x) = Σ_k c_k x^{α_k} on C^n; exponents is a K×n integer array."""

    exponents: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "exponents", np.atleast_2d(np.asarray(self.exponents, dtype=int)))
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=complex))

    @property
    def n(self) -> int:
        return self.exponents.shape[1]

    @property
    def vanishing_order(self) -> int:
        nonzero = self.exponents[self.coefficients != 0]
        return int(nonzero.sum(axis=1).min()) if len(nonzero) else 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at points x of shape (P, n) (or a single point of shape (n,))."""
        x = np.asarray(x, dtype=complex)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        powers = np.prod(x[:, None, :] ** self.exponents[None, :, :], axis=2)
        values = powers @ self.coefficients
        return values[0] if single else values


@dataclass(frozen=True)
class SupNorm:
    """Sampled lower bound for sup |u| over a ball, with a resolution-doubling check."""

    value: float
    coarse_value: float
    stable: bool


def _to_complex(w: np.ndarray, n: int) -> np.ndarray:
    return w[..., :n] + 1j * w[..., n:]


def _sphere_max(poly: HolomorphicPolynomial, R: float, resolution: int, seed: int) -> float:
    n = poly.n
    if n == 1:
        thetas = np.linspace(0, 2 * np.pi, resolution, endpoint=False)
        values = np.abs(poly(R * np.exp(1j * thetas)[:, None]))
        best = int(np.argmax(values))
        step = 2 * np.pi / resolution
        result = minimize_scalar(
            lambda t: -abs(poly(np.array([R * np.exp(1j * t)]))),
            bounds=(thetas[best] - step, thetas[best] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return max(float(values[best]), float(-result.fun))

    sampler = qmc.Sobol(d=2 * n, scramble=True, seed=seed)
    exponent = int(np.ceil(np.log2(resolution * (2 * n - 1))))
    u = np.clip(sampler.random_base2(m=exponent), 1e-12, 1 - 1e-12)
    w = norm.ppf(u)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    values = np.abs(poly(R * _to_complex(w, n)))
    best_value = float(values.max())

    def objective(v):
        v = v / np.linalg.norm(v)
        return -abs(poly(R * _to_complex(v, n)))

    for start in w[np.argsort(values)[-4:]]:
        result = minimize(objective, start, method="L-BFGS-B")
        best_value = max(best_value, float(-result.fun))
    return best_value


def sup_norm_ball(
    poly: HolomorphicPolynomial, R: float, resolution: int = 256, seed: int = 0
) -> SupNorm:
    """
    Approximate sup of |u| over the closed complex ball |x| ≤ R.

    By the maximum principle the sup is attained on the sphere |x| = R, which is
    sampled (a uniform circle for n = 1, a scrambled Sobol set otherwise) and
    polished by local maximization. The computation is repeated at twice the
    resolution; stable reports agreement to 1e-6 relative.
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    coarse = _sphere_max(poly, R, resolution, seed)
    fine = _sphere_max(poly, R, 2 * resolution, seed + 1)
    value = max(coarse, fine)
    stable = abs(fine - coarse) <= 1e-6 * max(value, np.finfo(float).tiny)
    return SupNorm(value=value, coarse_value=coarse, stable=stable)


def taylor_vanishing_bound(N: int, C0: float, C1: float) -> float:
    """Sup-norm ratio bound N·C₁/(C₁ − C₀)·(C₀/C₁)^N for functions vanishing to order N."""
    if not 0 < C0 < C1:
        raise ValueError(f"Need 0 < C0 < C1, got C0={C0}, C1={C1}")
    return N * C1 / (C1 - C0) * (C0 / C1) ** N
