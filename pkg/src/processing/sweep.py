import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import structlog

from src.config import settings
from src.errors import NumericalError
from src.fock.blocks import SpectralPointHitError, TruncatedOperator
from src.fock.gram import GramMatrix, gram_matrix, min_vanishing_order
from src.normal_form.canonical import jordanize
from src.normal_form.pipeline import NormalFormResult, reduce_to_normal_form
from src.normal_form.weights import WeightForm, ellipticity_constants
from src.processing.models import SweepConfig
from src.reporting.csv_output import read_normal_form_report
from src.reporting.matrices import decode_matrix
from src.spectral.eigenvalues import SpectralData
from src.spectral.spectrum import SpectrumList, dist_to_spectrum, spectrum
from src.symplectic.forms import QuadraticForm

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class ReducedInput:
    """
    Everything a sweep needs from the normal form: M, Φ₁ and the constants.

    The reduction runs on λq with |λ| = 1, so Spec(q^w) = λ̄·Spec((λq)^w) and
    ‖(q^w − z)⁻¹‖ = ‖((λq)^w − λz)⁻¹‖. data and M describe λq.
    """

    M: np.ndarray
    phi1: WeightForm
    C0: float
    C1: float
    jordan_mode: str
    data: SpectralData
    rotation: complex = 1.0 + 0.0j

    def to_reduced(self, z: complex) -> complex:
        """Spectral parameter of the reduced operator matching z for q^w."""
        return complex(self.rotation * z)

    def spectrum(self, h: float, R: float) -> SpectrumList:
        """Eigenvalues of q^w itself inside |z| ≤ R."""
        return spectrum(self.data, h, R).rotated(self.rotation.conjugate())


@dataclass
class SweepRow:
    h: float
    z: complex
    N_used: int
    nu_total: int
    resnorm_flat: float
    dist_spec: float
    converged: bool
    out_of_regime: bool
    resnorm_gram: float | None = None
    regime: str = "none"
    error: str | None = None

    @property
    def log_resnorm_flat(self) -> float:
        if self.resnorm_flat > 0 and math.isfinite(self.resnorm_flat):
            return math.log(self.resnorm_flat)
        return math.inf if self.resnorm_flat == math.inf else math.nan


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class _HContext:
    """Per-h inputs shared read-only by the workers."""

    h: float
    N_init: int
    N0: int
    operator: TruncatedOperator
    spec: SpectrumList | None
    spec_error: str | None
    gram: GramMatrix | None
    gram_error: str | None


def resolve_input(config: SweepConfig) -> ReducedInput:
    """Turn any of the three input modes into the reduced matrix and weight."""
    C = None
    if config.C is not None and config.form is not None:
        n = config.form.n
        C = decode_matrix(config.C, (n, n))

    if config.form is not None:
        form = QuadraticForm(n=config.form.n, Q=config.form.matrix())
        result = reduce_to_normal_form(
            form,
            mode=config.jordan_mode,
            C=C,
            cluster_tol=config.cluster_tol,
            multiplicities=config.multiplicities,
        )
        return _from_result(result)

    if config.normal_form_report is not None:
        return _from_result(read_normal_form_report(config.normal_form_report))

    M = config.reduced_matrix()
    n = M.shape[0]
    G = np.asarray(config.phi1, dtype=float) if config.phi1 is not None else np.eye(2 * n)
    weight = WeightForm(G=G)
    mode = "exact"
    if config.C is not None:
        jordan = jordanize(M, "exact", weight, decode_matrix(config.C, (n, n)))
        M, weight = jordan.M_out, jordan.phi1
    constants = ellipticity_constants(M, weight)
    return ReducedInput(
        M=M,
        phi1=weight,
        C0=constants.C0,
        C1=constants.C1,
        jordan_mode=mode,
        data=SpectralData.from_reduced_matrix(M),
    )


def _from_result(result: NormalFormResult) -> ReducedInput:
    return ReducedInput(
        M=result.M,
        phi1=result.phi1,
        C0=result.C0,
        C1=result.C1,
        jordan_mode=result.jordan_mode,
        data=result.spectral_data(),
        rotation=complex(result.rotation),
    )


def enumeration_radius(data: SpectralData, h: float, z_points: list[complex]) -> float:
    """Radius large enough that the nearest eigenvalue to every grid point is enumerated."""
    z_max = max(abs(z) for z in z_points)
    lowest = h * float(np.sum(np.abs(data.lambdas)))
    return (2 * z_max + lowest) * (1 + 1e-9) + h


def _prepare(reduced: ReducedInput, h: float, config: SweepConfig, z_points) -> _HContext:
    N0 = min_vanishing_order(config.K, reduced.C1, h)
    N_init = min(N0, config.N_max)
    operator = TruncatedOperator.build(reduced.M, h, config.N_max)

    spec, spec_error = None, None
    try:
        R = config.radius or enumeration_radius(reduced.data, h, z_points)
        spec = spectrum(reduced.data, h, R)
    except NumericalError as exc:
        spec_error = str(exc)

    gram, gram_error = None, None
    if config.norm_mode == "gram":
        try:
            gram = gram_matrix(reduced.phi1, h, range(config.N_max))
        except NumericalError as exc:
            gram_error = str(exc)
            logger.warning("Gram matrix unavailable", h=h, error=gram_error)

    return _HContext(
        h=h,
        N_init=N_init,
        N0=N0,
        operator=operator,
        spec=spec,
        spec_error=spec_error,
        gram=gram,
        gram_error=gram_error,
    )


def _relative_change(new: float, old: float) -> float:
    return abs(new - old) / max(abs(new), np.finfo(float).tiny)


def _regime(dist: float, h: float, config: SweepConfig) -> str:
    if not math.isfinite(dist):
        return "none"
    if dist >= 1 / config.C_dist:
        return "est1"
    if dist >= h**config.L / config.C_dist:
        return "est2"
    return "none"


def evaluate_cell(
    ctx: _HContext, z: complex, reduced: ReducedInput, config: SweepConfig
) -> SweepRow:
    """
    Adaptive truncated resolvent norm at one (h, z).

    Starts at N_init and adds truncation_step degrees while the norm changes by
    more than stabilization_tol relative and N < N_max. Errors are recorded in
    the row.
    """
    h = ctx.h
    w = reduced.to_reduced(z)
    step = max(1, settings.truncation_step)
    tol = config.stabilization_tol
    out_of_regime = abs(z) > config.K**2 / (8 * reduced.C0)
    errors = []

    dist = math.nan
    if ctx.spec is not None:
        try:
            dist = dist_to_spectrum(w, ctx.spec)
        except NumericalError as exc:
            errors.append(str(exc))
    else:
        errors.append(ctx.spec_error or "spectrum unavailable")

    def norm_at(N: int) -> float:
        return ctx.operator.extended(N).resolvent_norm(w)

    N = ctx.N_init
    try:
        current = norm_at(N)
        previous = norm_at(N - step) if N > step else None
        converged = False
        while True:
            if previous is not None and _relative_change(current, previous) <= tol:
                converged = True
                break
            if N >= config.N_max:
                break
            N = min(N + step, config.N_max)
            previous, current = current, norm_at(N)
        if not converged:
            logger.debug("Truncation did not stabilize", h=h, z=str(z), N=N)
    except SpectralPointHitError as exc:
        return SweepRow(
            h=h,
            z=z,
            N_used=N,
            nu_total=ctx.operator.extended(N).dimension,
            resnorm_flat=math.inf,
            dist_spec=0.0,
            converged=False,
            out_of_regime=out_of_regime,
            resnorm_gram=math.inf if config.norm_mode == "gram" else None,
            regime="none",
            error=str(exc),
        )

    truncated = ctx.operator.extended(N)
    resnorm_gram = None
    if config.norm_mode == "gram":
        if ctx.gram is None:
            resnorm_gram = math.nan
            errors.append(ctx.gram_error or "gram unavailable")
        else:
            try:
                resnorm_gram = truncated.resolvent_norm(w, ctx.gram)
            except NumericalError as exc:
                resnorm_gram = math.nan
                errors.append(str(exc))

    return SweepRow(
        h=h,
        z=z,
        N_used=N,
        nu_total=truncated.dimension,
        resnorm_flat=current,
        dist_spec=dist,
        converged=converged,
        out_of_regime=out_of_regime,
        resnorm_gram=resnorm_gram,
        regime=_regime(dist, h, config),
        error="; ".join(errors) or None,
    )


def sweep(config: SweepConfig, reduced: ReducedInput | None = None) -> SweepResult:
    """
    Evaluate truncated resolvent norms over every (h, z) of the configuration.

    Per-h inputs (blocks, spectrum, Gram factor) are built in the calling thread;
    grid cells then run on a thread pool and rows come back in grid order: by h,
    then imaginary part, then real part.

    Args:
        config: Validated run configuration
        reduced: Pre-computed reduction (resolved from config when omitted)

    Returns:
        SweepResult with one row per cell and run metadata
    """
    reduced = reduced or resolve_input(config)
    z_points = config.z_grid.points()
    h_values = sorted(config.h_values, reverse=True)
    logger.info(
        "Starting sweep",
        h_values=h_values,
        cells=len(z_points),
        threads=config.threads,
        norm_mode=config.norm_mode,
    )

    result = SweepResult(
        metadata={
            "K": config.K,
            "L": config.L,
            "C_dist": config.C_dist,
            "C0": reduced.C0,
            "C1": reduced.C1,
            "N_max": config.N_max,
            "norm_mode": config.norm_mode,
            "jordan_mode": reduced.jordan_mode,
            "rotation": [reduced.rotation.real, reduced.rotation.imag],
            "z_regime_limit": config.K**2 / (8 * reduced.C0),
            "N0": {},
        }
    )

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        for h in h_values:
            ctx = _prepare(reduced, h, config, z_points)
            result.metadata["N0"][repr(h)] = ctx.N0
            cell = partial(evaluate_cell, ctx, reduced=reduced, config=config)
            rows = pool.map(cell, z_points)
            result.rows.extend(rows)

    failed = sum(1 for r in result.rows if r.error)
    logger.info("Sweep finished", rows=len(result.rows), rows_with_errors=failed)
    return result
