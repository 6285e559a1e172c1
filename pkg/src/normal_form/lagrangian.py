from dataclasses import dataclass

import numpy as np
import structlog
from scipy import linalg

from src.config import settings
from src.errors import NumericalError
from src.spectral.eigenvalues import SpectralData
from src.symplectic.forms import HamiltonMap, symplectic_matrix

logger = structlog.get_logger()


class SchurReorderFailureError(NumericalError):
    """Raised when an ordered Schur form cannot isolate an eigenvalue cluster."""

    pass


class NotLagrangianError(NumericalError):
    """Raised when a frame is degenerate, not isotropic, or q does not vanish on it."""

    pass


class VerticalPlaneError(NumericalError):
    """Raised when a Lagrangian plane is not a graph over the y-coordinates."""

    pass


@dataclass(frozen=True, eq=False)
class LagrangianFrame:
    """Orthonormal 2n×n basis of a Lagrangian plane; label is "plus" or "minus"."""

    basis: np.ndarray
    label: str

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def transformed(self, K: np.ndarray) -> "LagrangianFrame":
        """Image of the plane under a linear map, re-orthonormalized."""
        basis, _ = linalg.qr(K @ self.basis, mode="economic")
        return LagrangianFrame(basis=basis, label=self.label)

    def residuals(self, Q: np.ndarray | None = None) -> dict[str, float]:
        """Independence, isotropy and (when Q is given) vanishing of q on the plane."""
        J = symplectic_matrix(self.n)
        sv = linalg.svdvals(self.basis / np.linalg.norm(self.basis, axis=0))
        out = {
            "min_singular_value": float(sv[-1]),
            "isotropy": float(np.max(np.abs(self.basis.T @ J @ self.basis))),
        }
        if Q is not None:
            out["form_vanishing"] = float(np.max(np.abs(self.basis.T @ Q @ self.basis)))
        return out

    def validate(self, Q: np.ndarray | None = None, tol: float | None = None) -> dict[str, float]:
        tol = settings.lagrangian_tol if tol is None else tol
        res = self.residuals(Q)
        scale = 1.0 if Q is None else max(1.0, float(np.linalg.norm(Q, 2)))
        if res["min_singular_value"] <= tol:
            raise NotLagrangianError(
                f"Frame {self.label} is degenerate: smallest singular value "
                f"{res['min_singular_value']:.3e}"
            )
        if res["isotropy"] > tol:
            raise NotLagrangianError(
                f"Frame {self.label} is not isotropic: max |σ(u, v)| = {res['isotropy']:.3e}"
            )
        if res.get("form_vanishing", 0.0) > tol * scale:
            raise NotLagrangianError(
                f"q does not vanish on frame {self.label}: max |q(u, v)| = "
                f"{res['form_vanishing']:.3e}"
            )
        return res


def _selection_radius(center: complex, others: list[complex]) -> float:
    return min(abs(center - o) for o in others) / 2


def generalized_eigenspaces(
    F: HamiltonMap | np.ndarray, data: SpectralData
) -> dict[complex, np.ndarray]:
    """
    Orthonormal bases of the generalized eigenspaces of F.

    For every cluster center c of the data (and for −c), an ordered complex Schur
    form moves the eigenvalues within half the distance to the nearest other
    center to the leading block; the leading Schur vectors span Ker((F − c)^{2n}).

    Args:
        F: Hamilton map
        data: Paired eigenvalues from eigen_pairs

    Returns:
        Mapping from each center (both signs) to a 2n×k basis, k its multiplicity

    Raises:
        SchurReorderFailureError: If the leading block size differs from the multiplicity
    """
    F = F.F if isinstance(F, HamiltonMap) else np.asarray(F, dtype=complex)
    centers: list[tuple[complex, int]] = []
    for center, k in zip(data.centers, data.multiplicities):
        centers.append((center, k))
        centers.append((-center, k))

    spaces: dict[complex, np.ndarray] = {}
    for center, k in centers:
        radius = _selection_radius(center, [c for c, _ in centers if c != center])
        try:
            _, Z, sdim = linalg.schur(
                F, output="complex", sort=lambda ev: abs(ev - center) < radius
            )
        except (linalg.LinAlgError, ValueError) as exc:
            raise SchurReorderFailureError(f"Schur reordering failed near {center}: {exc}")
        if sdim != k:
            raise SchurReorderFailureError(
                f"Cluster at {center:.6g} has multiplicity {k} but the Schur selection "
                f"found {sdim} eigenvalues within radius {radius:.3e}"
            )
        spaces[center] = Z[:, :k]
    return spaces


def stable_manifolds(
    F: HamiltonMap | np.ndarray, data: SpectralData, validate: bool = True
) -> tuple[LagrangianFrame, LagrangianFrame]:
    """
    Assemble Λ⁺ and Λ⁻ from the generalized eigenspaces, split by the sign of Im λ.

    Returns:
        (plus, minus) frames with orthonormal bases
    """
    F = F.F if isinstance(F, HamiltonMap) else np.asarray(F, dtype=complex)
    spaces = generalized_eigenspaces(F, data)
    plus = np.hstack([b for c, b in spaces.items() if c.imag > 0])
    minus = np.hstack([b for c, b in spaces.items() if c.imag < 0])
    frames = []
    for basis, label in ((plus, "plus"), (minus, "minus")):
        q, _ = linalg.qr(basis, mode="economic")
        frames.append(LagrangianFrame(basis=q, label=label))
    if validate:
        Q = symplectic_matrix(data.n) @ F
        for frame in frames:
            frame.validate(Q)
    return frames[0], frames[1]


def positivity(frame: LagrangianFrame) -> float:
    """
    Sign certificate of (1/i)σ(X, X̄) on the frame's unit sphere.

    On an orthonormal basis the form is the Hermitian matrix i·BᴴJB. Returns its
    smallest eigenvalue for a plus frame and its largest for a minus frame, i.e.
    the extreme value nearest zero.
    """
    basis, _ = linalg.qr(frame.basis, mode="economic")
    J = symplectic_matrix(frame.n)
    H = 1j * basis.conj().T @ J @ basis
    eigs = np.linalg.eigvalsh((H + H.conj().T) / 2)
    return float(eigs[0] if frame.label == "plus" else eigs[-1])


def graph_matrix(frame: LagrangianFrame, tol: float | None = None) -> np.ndarray:
    """
    Return A with frame = {(y, Ay)}.

    Raises:
        VerticalPlaneError: If the y-block of the basis is singular
        NotLagrangianError: If A is not symmetric within tolerance
    """
    tol = settings.lagrangian_tol if tol is None else tol
    n = frame.n
    Y = frame.basis[:n]
    H = frame.basis[n:]
    sv = linalg.svdvals(Y)
    if sv[-1] <= tol * max(1.0, float(np.linalg.norm(frame.basis, 2))):
        raise VerticalPlaneError(
            f"Frame {frame.label} is not a graph over y: smallest singular value of the "
            f"y-block is {sv[-1]:.3e}"
        )
    A = linalg.solve(Y.T, H.T).T
    asym = float(np.linalg.norm(A - A.T))
    if asym > tol * max(1.0, float(np.linalg.norm(A))) * 10:
        raise NotLagrangianError(f"Graph matrix of {frame.label} is not symmetric: {asym:.3e}")
    return (A + A.T) / 2
