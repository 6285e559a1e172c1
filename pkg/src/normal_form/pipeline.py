from dataclasses import dataclass, field

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment

from src.config import settings
from src.errors import ConfigurationError, NumericalError
from src.normal_form.canonical import (
    fbi_map,
    jordanize,
    kappa_c,
    real_reduction,
    transported_form,
)
from src.normal_form.lagrangian import graph_matrix, positivity, stable_manifolds
from src.normal_form.weights import (
    WeightForm,
    ellipticity_constants,
    phi0,
    weight_graph_residual,
)
from src.reporting.matrices import decode_matrix, encode_complex, encode_matrix
from src.spectral.eigenvalues import SpectralData, eigen_pairs
from src.symplectic.forms import (
    QuadraticForm,
    hamilton_map,
    normalize_rotation,
    symplectic_residual,
)

logger = structlog.get_logger()

JORDAN_MODES = ("exact", "diagonalized", "raw")


class NotSymplecticError(NumericalError):
    """Raised when a composed canonical map fails KᵀJK = J."""

    pass


class SpectrumMismatchError(NumericalError):
    """Raised when Spec(M) differs from Spec(2F) ∩ {Im λ > 0}."""

    pass


@dataclass(frozen=True, eq=False)
class NormalFormResult:
    """Output of the reduction of a quadratic form to Mx·ξ on the Bargmann side."""

    K_total: np.ndarray
    M: np.ndarray
    phi1: WeightForm
    C0: float
    C1: float
    jordan_mode: str
    C: np.ndarray | None = None
    B: np.ndarray | None = None
    rotation: complex = 1.0 + 0.0j
    lambdas: np.ndarray | None = None
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def spectral_data(self) -> SpectralData:
        """
        Spectral data of M, built from the recorded Hamilton eigenvalues when present.

        Those were clustered on the Hamilton map, so a defective M whose computed
        eigenvalues split still yields one point per cluster.
        """
        if self.lambdas is None:
            return SpectralData.from_reduced_matrix(self.M)
        tol = settings.cluster_tol_rel * max(float(np.linalg.norm(self.M, 2)), 1.0)
        return SpectralData.from_lambdas(self.lambdas, tol)

    def to_report(self) -> dict:
        """JSON-ready report; matrices as nested [re, im] arrays."""
        return {
            "n": self.n,
            "jordan_mode": self.jordan_mode,
            "rotation": encode_complex(self.rotation),
            "M": encode_matrix(self.M),
            "K_total": encode_matrix(self.K_total),
            "C": None if self.C is None else encode_matrix(self.C),
            "B": None if self.B is None else encode_matrix(self.B),
            "phi1_G": self.phi1.G.tolist(),
            "lambdas": None if self.lambdas is None else encode_matrix(self.lambdas),
            "C0": self.C0,
            "C1": self.C1,
            "residuals": dict(self.residuals),
        }

    @classmethod
    def from_report(cls, report: dict) -> "NormalFormResult":
        try:
            n = int(report["n"])
            M = decode_matrix(report["M"], (n, n))
            G = np.asarray(report["phi1_G"], dtype=float)
            K = decode_matrix(report["K_total"], (2 * n, 2 * n))
            mode = report["jordan_mode"]
            C0 = float(report["C0"])
            C1 = float(report["C1"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"Malformed normal-form report: {exc}")
        if mode not in JORDAN_MODES:
            raise ConfigurationError(f"Unknown jordan_mode {mode!r} in report")
        C = report.get("C")
        B = report.get("B")
        lambdas = report.get("lambdas")
        rotation = report.get("rotation", [1.0, 0.0])
        return cls(
            K_total=K,
            M=M,
            phi1=WeightForm(G=G),
            C0=C0,
            C1=C1,
            jordan_mode=mode,
            C=None if C is None else decode_matrix(C, (n, n)),
            B=None if B is None else decode_matrix(B, (n, n)),
            rotation=complex(rotation[0], rotation[1]),
            lambdas=None if lambdas is None else decode_matrix(lambdas, (n,)),
            residuals=dict(report.get("residuals", {})),
        )


def match_spectra(M: np.ndarray, data: SpectralData) -> float:
    """
    Compare Spec(M) with {2λ_j} as multisets.

    Eigenvalues are matched by an optimal assignment; the reported residual is
    the largest deviation of a cluster's mean eigenvalue from its center, which
    stays accurate for defective clusters whose individual eigenvalues split.
    """
    eigs = np.linalg.eigvals(np.asarray(M, dtype=complex))
    targets = 2 * np.asarray(data.lambdas)
    cost = np.abs(eigs[:, None] - targets[None, :])
    rows, cols = linear_sum_assignment(cost)
    assigned = np.empty_like(targets)
    assigned[cols] = eigs[rows]
    residual = 0.0
    for cluster in data.clusters:
        residual = max(residual, float(abs(assigned[cluster].mean() - targets[cluster].mean())))
    return residual


def reduce_to_normal_form(
    form: QuadraticForm,
    mode: str = "raw",
    C: np.ndarray | None = None,
    cluster_tol: float | None = None,
    multiplicities: list[int] | None = None,
) -> NormalFormResult:
    """
    Reduce an elliptic quadratic form to q̃ = Mx·ξ with weight Φ₁.

    Stages: rotation to Re q > 0, Hamilton map and eigenvalue pairing, stable
    planes Λ±, real reduction of Λ⁻ to η = −iy, the map κ_T straightening Λ±,
    transport of q, and the change of variables κ_C chosen by the jordan mode.

    Args:
        form: Elliptic quadratic form (normalized or not)
        mode: "exact", "diagonalized" or "raw"
        C: Matrix for exact mode
        cluster_tol: Absolute eigenvalue clustering tolerance
        multiplicities: Declared cluster multiplicities (exact input)

    Returns:
        NormalFormResult with every structural residual recorded

    Raises:
        NumericalError: Any failing stage raises its own subclass
    """
    if mode not in JORDAN_MODES:
        raise ConfigurationError(f"Unknown jordan mode {mode!r}; expected one of {JORDAN_MODES}")
    logger.info("Reducing quadratic form", n=form.n, mode=mode)

    rotation = normalize_rotation(form)
    q = rotation.rotated
    F = hamilton_map(q)
    data = eigen_pairs(F, cluster_tol=cluster_tol, multiplicities=multiplicities)

    plus, minus = stable_manifolds(F, data)
    residuals = {
        "pairing": data.pairing_residual,
        "hamilton_representation": F.representation_residual(q),
        "positivity_plus": positivity(plus),
        "positivity_minus": positivity(minus),
    }
    for frame in (plus, minus):
        for key, value in frame.residuals(q.Q).items():
            residuals[f"{key}_{frame.label}"] = value

    K_R = real_reduction(graph_matrix(minus))
    A_plus = graph_matrix(plus.transformed(K_R))
    fbi = fbi_map(A_plus)
    K = fbi.K_T @ K_R
    transported = transported_form(q.Q, K)
    weight0 = phi0(fbi.B)
    residuals["weight_graph"] = weight_graph_residual(fbi.K_T, weight0)

    jordan = jordanize(transported.M, mode, weight0, C)
    K_total = kappa_c(jordan.C) @ K
    residuals["structure"] = transported.residual
    residuals["symplectic"] = symplectic_residual(K_total)
    scale = max(1.0, float(np.linalg.norm(K_total, 2)) ** 2)
    if residuals["symplectic"] > settings.lagrangian_tol * scale:
        raise NotSymplecticError(
            f"Composed map is not symplectic: ‖KᵀJK − J‖ = {residuals['symplectic']:.3e}"
        )

    residuals["spectrum"] = match_spectra(jordan.M_out, data)
    match_tol = max(
        settings.spectrum_match_tol * max(1.0, float(np.linalg.norm(jordan.M_out, 2))),
        10 * data.pairing_residual,
    )
    if residuals["spectrum"] > match_tol:
        raise SpectrumMismatchError(
            f"Spec(M) differs from Spec(2F) ∩ {{Im λ > 0}} by {residuals['spectrum']:.3e}"
        )

    constants = ellipticity_constants(jordan.M_out, jordan.phi1)
    logger.info(
        "Normal form reduced",
        n=form.n,
        mode=mode,
        C0=constants.C0,
        C1=constants.C1,
        structure=transported.residual,
    )
    return NormalFormResult(
        K_total=K_total,
        M=jordan.M_out,
        phi1=jordan.phi1,
        C0=constants.C0,
        C1=constants.C1,
        jordan_mode=mode,
        C=jordan.C,
        B=fbi.B,
        rotation=rotation.lam,
        lambdas=data.lambdas,
        residuals=residuals,
    )
