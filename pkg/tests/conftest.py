import json
import logging

import numpy as np
import pytest
import structlog

from src.symplectic.forms import QuadraticForm

JORDAN_M = np.array([[1j, 1.0], [0.0, 1j]])


@pytest.fixture(autouse=True)
def quiet_logging():
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(logging.WARNING),
    )
    yield
    structlog.reset_defaults()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def oscillator():
    """q = (x² + ξ²)/2, Hamilton eigenvalues ±i/2."""
    return QuadraticForm(n=1, Q=np.diag([0.5, 0.5]))


@pytest.fixture
def jordan_M():
    return JORDAN_M.copy()


def make_elliptic_form(n: int, seed: int, theta: float = 0.7) -> QuadraticForm:
    """e^{iθ}(S₁ + iS₂) with S₁ positive definite and S₂ small, so q is elliptic."""
    gen = np.random.default_rng(seed)
    A = gen.standard_normal((2 * n, 2 * n))
    S1 = A.T @ A + 2 * n * np.eye(2 * n)
    S2 = gen.standard_normal((2 * n, 2 * n))
    S2 = 0.3 * (S2 + S2.T)
    return QuadraticForm(n=n, Q=np.exp(1j * theta) * (S1 + 1j * S2))


@pytest.fixture
def elliptic_form():
    return make_elliptic_form


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration document and return its path."""

    def write(data: dict, name: str = "run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


@pytest.fixture
def oscillator_config():
    """M-mode configuration of the reduced oscillator M = (i), default weight |x|²/2."""
    return {
        "M": [[[0.0, 1.0]]],
        "h_values": [0.1],
        "z_grid": {"re_min": 0.2, "re_max": 0.2, "im_min": 0.0, "im_max": 0.0},
    }


@pytest.fixture
def jordan_config():
    return {
        "M": [[[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]],
        "h_values": [0.25],
        "z_grid": {"re_min": 1.0, "re_max": 1.0, "im_min": 0.25, "im_max": 0.25},
    }
