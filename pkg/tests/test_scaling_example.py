import math
from dataclasses import dataclass

import pytest

from src.errors import ConfigurationError
from src.processing.example import (
    MAX_EXAMPLE_DEGREE,
    closed_form_squared_norm,
    example_case,
    example_scaling_rows,
)
from src.processing.scaling import InsufficientDataError, distance_scaled_fit, scaling_fit


@dataclass
class Row:
    h: float
    resnorm_flat: float
    converged: bool = True


def synthetic_rows(A: float, b: float, model: str):
    rows = []
    for h in (0.2, 0.1, 0.05, 0.04):
        t = 1 / h if model == "inv_h" else math.log(1 / h) / h
        rows.append(Row(h=h, resnorm_flat=math.exp(A * t + b)))
    return rows


class TestScalingFit:
    @pytest.mark.parametrize("model", ["inv_h", "inv_h_log"])
    def test_exact_recovery(self, model):
        fit = scaling_fit(synthetic_rows(0.3, 1.5, model), model)
        assert fit.A == pytest.approx(0.3)
        assert fit.intercept == pytest.approx(1.5)
        assert fit.residual < 1e-10
        assert fit.points_used == 4

    def test_drops_unusable_rows(self):
        rows = synthetic_rows(0.3, 1.5, "inv_h")
        rows.append(Row(h=0.03, resnorm_flat=math.inf))
        rows.append(Row(h=0.02, resnorm_flat=1e9, converged=False))
        fit = scaling_fit(rows, "inv_h")
        assert fit.points_used == 4
        assert fit.A == pytest.approx(0.3)

    def test_needs_three_h_values(self):
        rows = synthetic_rows(0.3, 1.5, "inv_h")[:2]
        with pytest.raises(InsufficientDataError):
            scaling_fit(rows, "inv_h")

    def test_repeated_h_counts_once(self):
        rows = [Row(h=0.1, resnorm_flat=2.0)] * 3 + [Row(h=0.2, resnorm_flat=1.0)]
        with pytest.raises(InsufficientDataError):
            scaling_fit(rows)

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            scaling_fit(synthetic_rows(0.3, 1.5, "inv_h"), "quadratic")


@dataclass
class GramRow:
    h: float
    resnorm_gram: float | None
    dist_spec: float
    converged: bool = True


class TestDistanceScaledFit:
    def test_exact_recovery(self):
        rows = [
            GramRow(h=h, resnorm_gram=math.exp(0.2 / h + 0.5) / 0.3, dist_spec=0.3)
            for h in (0.2, 0.1, 0.05)
        ]
        fit = distance_scaled_fit(rows)
        assert fit.model == "gram_dist_inv_h"
        assert fit.A == pytest.approx(0.2)
        assert fit.intercept == pytest.approx(0.5)
        assert fit.residual < 1e-10

    def test_needs_gram_rows(self):
        rows = [GramRow(h=h, resnorm_gram=None, dist_spec=0.3) for h in (0.2, 0.1, 0.05)]
        with pytest.raises(InsufficientDataError):
            distance_scaled_fit(rows)

    def test_drops_spectral_hits(self):
        rows = [GramRow(h=h, resnorm_gram=2.0, dist_spec=0.5) for h in (0.2, 0.1, 0.05)]
        rows.append(GramRow(h=0.04, resnorm_gram=math.inf, dist_spec=0.0, converged=False))
        fit = distance_scaled_fit(rows)
        assert fit.points_used == 3
        assert fit.A == pytest.approx(0.0, abs=1e-12)


class TestWorkedExample:
    @pytest.mark.parametrize("m, expected", [(1, 2), (2, 28), (4, 11984)])
    def test_closed_form(self, m, expected):
        assert closed_form_squared_norm(m) == expected

    @pytest.mark.parametrize("m", range(1, 31))
    def test_matches_closed_form(self, m):
        report = example_case(m)
        assert report.relative_error < 1e-8
        assert report.exceeds_factorial
        assert report.passed
        assert report.h == pytest.approx(1 / m)

    def test_degree_four(self):
        report = example_case(4)
        assert report.squared_norm == pytest.approx(11984, rel=1e-12)
        # the block norm dominates the norm of one column
        assert report.block_norm >= math.sqrt(report.squared_norm) * (1 - 1e-12)
        assert report.to_dict()["passed"] is True

    @pytest.mark.parametrize("m", [0, MAX_EXAMPLE_DEGREE + 1])
    def test_degree_range(self, m):
        with pytest.raises(ConfigurationError):
            example_case(m)

    def test_growth_prefers_log_model(self):
        rows = example_scaling_rows(range(10, 31))
        assert all(r.dist_spec == pytest.approx(r.h) for r in rows)
        plain = scaling_fit(rows, "inv_h")
        with_log = scaling_fit(rows, "inv_h_log")
        assert with_log.residual < plain.residual
        assert with_log.A > 0
