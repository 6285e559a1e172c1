"""
The two-dimensional Jordan example: q̃(x, ξ) = 2λ(x₁ξ₁ + x₂ξ₂) + x₂ξ₁ with λ = i/2.

On E_m with h = 1/m and z = 1 every diagonal entry of z − q̃^w equals −h, so the
resolvent applied to φ_{(m,0)} has the closed-form squared norm
h⁻² Σ_j j! m!/(m−j)!, which grows at least like (m!)².
"""

import math
from dataclasses import dataclass

import numpy as np
import structlog
from scipy import linalg

from src.errors import ConfigurationError
from src.fock.blocks import resolvent_block, weyl_block
from src.normal_form.canonical import lift_reduced_form
from src.symplectic.forms import QuadraticForm

logger = structlog.get_logger()

EXAMPLE_M = np.array([[1j, 1.0], [0.0, 1j]])
EXAMPLE_Z = 1.0 + 0.0j
# (m!)² m² overflows a double past this degree
MAX_EXAMPLE_DEGREE = 90
EXAMPLE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ExampleReport:
    m: int
    h: float
    squared_norm: float
    closed_form: int
    relative_error: float
    block_norm: float
    exceeds_factorial: bool

    @property
    def passed(self) -> bool:
        return self.relative_error < EXAMPLE_TOLERANCE and self.exceeds_factorial

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "h": self.h,
            "z": [EXAMPLE_Z.real, EXAMPLE_Z.imag],
            "squared_norm": self.squared_norm,
            "closed_form": self.closed_form,
            "relative_error": self.relative_error,
            "block_norm": self.block_norm,
            "exceeds_factorial": self.exceeds_factorial,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ExampleRow:
    """Block-restricted resolvent norm at h = 1/m; shaped like a sweep row for fitting."""

    m: int
    h: float
    resnorm_flat: float
    dist_spec: float
    converged: bool = True


def example_form() -> QuadraticForm:
    """The example as an elliptic form on R⁴, lifted with C = √2·I and B = (i/2)·I."""
    eye = np.eye(2)
    return lift_reduced_form(EXAMPLE_M, C=np.sqrt(2) * eye, B=0.5j * eye)


def closed_form_squared_norm(m: int) -> int:
    """m² Σ_{j=0}^m j! m!/(m−j)!, exact in integers."""
    total = sum(
        math.factorial(j) * math.factorial(m) // math.factorial(m - j) for j in range(m + 1)
    )
    return m * m * total


def _check_degree(m: int) -> None:
    if not 1 <= m <= MAX_EXAMPLE_DEGREE:
        raise ConfigurationError(f"Example degree must lie in [1, {MAX_EXAMPLE_DEGREE}], got {m}")


def example_case(m: int) -> ExampleReport:
    """
    Solve (z − q̃^w)u = φ_{(m,0)} on E_m and compare with the closed form.

    Args:
        m: Degree; h = 1/m and z = 1

    Returns:
        ExampleReport with the relative error and the m! lower-bound check
    """
    _check_degree(m)
    h = 1.0 / m
    block = weyl_block(EXAMPLE_M, h, m)
    shift = EXAMPLE_Z * np.eye(block.size) - block.A
    rhs = np.zeros(block.size, dtype=complex)
    rhs[block.basis.position[(m, 0)]] = 1.0
    u = linalg.solve_triangular(shift, rhs, lower=block.lower)

    squared_norm = float(np.vdot(u, u).real)
    closed = closed_form_squared_norm(m)
    relative_error = abs(squared_norm - closed) / closed
    exceeds = 0.5 * math.log(squared_norm) >= math.lgamma(m + 1)
    report = ExampleReport(
        m=m,
        h=h,
        squared_norm=squared_norm,
        closed_form=closed,
        relative_error=relative_error,
        block_norm=resolvent_block(block, EXAMPLE_Z),
        exceeds_factorial=exceeds,
    )
    logger.info(
        "Worked example",
        m=m,
        squared_norm=squared_norm,
        relative_error=relative_error,
        passed=report.passed,
    )
    return report


def example_scaling_rows(ms) -> list[ExampleRow]:
    """E_m-restricted resolvent norms at z = 1, h = 1/m, where the block gap is exactly h."""
    rows = []
    for m in ms:
        _check_degree(m)
        h = 1.0 / m
        block = weyl_block(EXAMPLE_M, h, m)
        norm = resolvent_block(block, EXAMPLE_Z)
        rows.append(ExampleRow(m=m, h=h, resnorm_flat=norm, dist_spec=h))
    return rows
