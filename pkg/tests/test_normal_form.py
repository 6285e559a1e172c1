import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import linear_sum_assignment

from src.errors import ConfigurationError
from src.normal_form.canonical import (
    DefectiveNotSuppliedError,
    NotNegativeDefiniteError,
    NotNormalFormError,
    NotPositiveDefiniteError,
    fbi_map,
    jordanize,
    kappa_c,
    lift_reduced_form,
    real_reduction,
    reduced_form_matrix,
    transported_form,
)
from src.normal_form.lagrangian import (
    LagrangianFrame,
    graph_matrix,
    positivity,
    stable_manifolds,
)
from src.normal_form.pipeline import NormalFormResult, reduce_to_normal_form
from src.normal_form.weights import (
    EllipticityViolatedError,
    NotConvexError,
    WeightForm,
    ellipticity_constants,
    phi0,
)
from src.processing.example import EXAMPLE_M, example_form
from src.spectral.eigenvalues import eigen_pairs
from src.spectral.spectrum import spectrum
from src.symplectic.forms import (
    NoRotationFoundError,
    QuadraticForm,
    check_elliptic,
    hamilton_map,
    normalize_rotation,
    symplectic_inverse,
    symplectic_residual,
)


class TestLagrangianPlanes:
    def test_oscillator_planes(self, oscillator):
        F = hamilton_map(oscillator)
        plus, minus = stable_manifolds(F, eigen_pairs(F))
        assert_allclose(graph_matrix(plus), [[1j]], atol=1e-12)
        assert_allclose(graph_matrix(minus), [[-1j]], atol=1e-12)
        assert positivity(plus) == pytest.approx(1.0)
        assert positivity(minus) == pytest.approx(-1.0)

    def test_two_frequencies(self):
        form = QuadraticForm(n=2, Q=np.diag([1.0, 2.0, 1.0, 2.0]))
        F = hamilton_map(form)
        plus, minus = stable_manifolds(F, eigen_pairs(F))
        assert_allclose(graph_matrix(plus), 1j * np.eye(2), atol=1e-12)
        assert_allclose(graph_matrix(minus), -1j * np.eye(2), atol=1e-12)
        assert plus.residuals(form.Q)["isotropy"] < 1e-12

    def test_random_form_signs(self, elliptic_form):
        q = normalize_rotation(elliptic_form(2, 3)).rotated
        F = hamilton_map(q)
        plus, minus = stable_manifolds(F, eigen_pairs(F))
        assert positivity(plus) > 0
        assert positivity(minus) < 0
        A_minus = graph_matrix(minus)
        assert np.all(np.linalg.eigvalsh(A_minus.imag) < 0)

    def test_graph_independent_of_basis(self, elliptic_form, rng):
        q = normalize_rotation(elliptic_form(3, 4)).rotated
        F = hamilton_map(q)
        plus, minus = stable_manifolds(F, eigen_pairs(F))
        for frame in (plus, minus):
            for _ in range(5):
                T = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
                rebased = LagrangianFrame(basis=frame.basis @ T, label=frame.label)
                assert_allclose(graph_matrix(rebased), graph_matrix(frame), rtol=1e-8, atol=1e-10)


class TestCanonicalMaps:
    @pytest.mark.parametrize(
        "A_minus, expected",
        [
            ([[-1j]], np.eye(2)),
            ([[1 - 1j]], [[1, 0], [-1, 1]]),
            ([[-2j]], np.diag([np.sqrt(2), 1 / np.sqrt(2)])),
        ],
    )
    def test_real_reduction(self, A_minus, expected):
        K = real_reduction(np.array(A_minus))
        assert_allclose(K, expected, atol=1e-14)
        assert symplectic_residual(K) < 1e-12

    def test_real_reduction_requires_negative_imaginary_part(self):
        with pytest.raises(NotNegativeDefiniteError):
            real_reduction(np.array([[1j]]))

    def test_fbi_oscillator(self):
        fbi = fbi_map(np.array([[1j]]))
        assert_allclose(fbi.B, [[0.5j]], atol=1e-15)
        assert_allclose(fbi.K_T, [[1, -1j], [-0.5j, 0.5]], atol=1e-15)
        assert symplectic_residual(fbi.K_T) < 1e-14

    def test_fbi_cayley(self):
        assert_allclose(fbi_map(np.array([[2j]])).B, [[2j / 3]], atol=1e-15)

    def test_fbi_requires_positive_imaginary_part(self):
        with pytest.raises(NotPositiveDefiniteError):
            fbi_map(np.array([[-1j]]))

    def test_transported_form_structure(self):
        with pytest.raises(NotNormalFormError):
            transported_form(np.eye(2), np.eye(2))

    def test_kappa_c_symplectic(self, rng):
        C = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert symplectic_residual(kappa_c(C)) < 1e-10


class TestJordanize:
    def test_raw(self, jordan_M):
        result = jordanize(jordan_M, "raw", WeightForm(G=np.eye(4)))
        assert_allclose(result.M_out, jordan_M)
        assert_allclose(result.C, np.eye(2))

    def test_exact_needs_C(self, jordan_M):
        with pytest.raises(ConfigurationError):
            jordanize(jordan_M, "exact", WeightForm(G=np.eye(4)))

    def test_exact_scaling(self, jordan_M):
        C = np.diag([1.0, 2.0])
        result = jordanize(jordan_M, "exact", WeightForm(G=np.eye(4)), C)
        assert_allclose(result.M_out, [[1j, 2.0], [0, 1j]])
        assert result.phi1(np.array([0, 1])) == pytest.approx(2.0)

    def test_defective_needs_C(self, jordan_M):
        with pytest.raises(DefectiveNotSuppliedError):
            jordanize(jordan_M, "diagonalized", WeightForm(G=np.eye(4)))

    def test_diagonalized(self):
        M = np.array([[1j, 1.0], [0, 2j]])
        result = jordanize(M, "diagonalized", WeightForm(G=np.eye(4)))
        assert_allclose(np.diag(result.M_out), [1j, 2j], atol=1e-12)
        assert_allclose(np.linalg.solve(result.C, M @ result.C), result.M_out, atol=1e-12)

    def test_unknown_mode(self, jordan_M):
        with pytest.raises(ConfigurationError):
            jordanize(jordan_M, "schur", WeightForm(G=np.eye(4)))


class TestWeights:
    def test_phi0_not_convex(self):
        with pytest.raises(NotConvexError):
            phi0(np.zeros((1, 1)))

    def test_phi0_oscillator(self):
        weight = phi0(np.array([[0.5j]]))
        assert weight.radial_constant() == pytest.approx(0.25)
        assert weight.is_circular()

    def test_constants_oscillator(self):
        constants = ellipticity_constants(np.array([[1j]]), WeightForm.radial(1, 0.25))
        assert constants.C0 == pytest.approx(2.0)
        assert constants.C1 == pytest.approx(4.0)

    def test_constants_default_weight(self, jordan_M):
        constants = ellipticity_constants(np.array([[1j]]), WeightForm(G=np.eye(2)))
        assert constants.C0 == pytest.approx(1.0)
        assert constants.C1 == pytest.approx(2.0)
        assert ellipticity_constants(jordan_M, WeightForm(G=np.eye(4))).C0 == pytest.approx(2.0)

    def test_ellipticity_violated(self):
        with pytest.raises(EllipticityViolatedError):
            ellipticity_constants(np.array([[-1j]]), WeightForm(G=np.eye(2)))

    def test_composed(self, rng):
        C = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        weight = WeightForm.radial(2, 0.5)
        assert weight.composed(C)(x) == pytest.approx(weight(C @ x))


class TestReduceToNormalForm:
    def test_oscillator(self, oscillator):
        result = reduce_to_normal_form(oscillator)
        assert_allclose(result.M, [[1j]], atol=1e-12)
        assert result.phi1.radial_constant(tol=1e-10) == pytest.approx(0.25)
        assert result.C0 == pytest.approx(2.0)
        assert result.C1 == pytest.approx(4.0)
        assert result.residuals["symplectic"] < 1e-12

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_forms(self, elliptic_form, seed):
        form = elliptic_form(2, seed)
        result = reduce_to_normal_form(form)
        K_inv = symplectic_inverse(result.K_total)
        q = result.rotation * form.Q
        transported = K_inv.T @ q @ K_inv
        scale = np.linalg.norm(form.Q)
        assert_allclose(transported, reduced_form_matrix(result.M), atol=1e-8 * scale)
        assert_allclose(
            np.sort_complex(np.linalg.eigvals(result.M)),
            np.sort_complex(2 * result.lambdas),
            atol=1e-8 * scale,
        )
        assert result.residuals["weight_graph"] < 1e-8
        assert result.C0 >= 1 and result.C1 >= 1

    def test_example_raw_spectrum(self):
        result = reduce_to_normal_form(example_form(), mode="raw")
        spec = spectrum(result.spectral_data(), 0.25, 1.0)
        assert_allclose(spec.values, [0.25, 0.5, 0.75, 1.0], atol=1e-12)
        assert [p.multiplicity for p in spec.points] == [1, 2, 3, 4]

    @pytest.mark.parametrize("seed", range(100))
    def test_spectrum_and_structure_of_random_forms(self, elliptic_form, seed):
        form = elliptic_form(1 + seed % 3, seed)
        result = reduce_to_normal_form(form)
        eigs = np.linalg.eigvals(hamilton_map(normalize_rotation(form).rotated).F)
        upper = 2 * eigs[eigs.imag > 0]
        spec_M = np.linalg.eigvals(result.M)
        rows, cols = linear_sum_assignment(np.abs(spec_M[:, None] - upper[None, :]))
        assert len(rows) == form.n
        assert np.max(np.abs(spec_M[rows] - upper[cols])) <= 1e-8 * max(1.0, np.abs(upper).max())
        scale = max(1.0, float(np.linalg.norm(reduced_form_matrix(result.M), 2)))
        assert result.residuals["structure"] <= 1e-9 * scale

    def test_weight_bounds_on_random_points(self, elliptic_form, rng):
        result = reduce_to_normal_form(elliptic_form(2, 5))
        Xi = result.phi1.gradient_xi()
        for _ in range(1000):
            x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            w = np.concatenate([x.real, x.imag])
            size = float(np.vdot(x, x).real)
            value = result.phi1(x)
            assert size / result.C1 <= value * (1 + 1e-12)
            assert value <= result.C1 * size * (1 + 1e-12)
            assert np.real((result.M @ x) @ (Xi @ w)) >= size / result.C0 * (1 - 1e-10)

    def test_rotated_input(self, oscillator):
        result = reduce_to_normal_form(oscillator.scaled(1j))
        assert not check_elliptic(oscillator.scaled(1j)).is_normalized
        assert abs(result.rotation) == pytest.approx(1.0)
        assert_allclose(result.M, [[1j]], atol=1e-8)

    def test_example_round_trip(self):
        form = example_form()
        assert check_elliptic(form).is_normalized
        result = reduce_to_normal_form(
            form, mode="exact", C=np.sqrt(2) * np.eye(2), multiplicities=[2]
        )
        assert_allclose(result.M, EXAMPLE_M, atol=1e-8)
        assert_allclose(result.phi1.G, np.eye(4), atol=1e-8)

    def test_lift_is_reduced_back(self):
        M = np.array([[1j, 0.3], [0.0, 2j]])
        form = lift_reduced_form(M, C=np.eye(2), B=0.5j * np.eye(2))
        result = reduce_to_normal_form(form)
        assert_allclose(np.sort_complex(np.linalg.eigvals(result.M)), [1j, 2j], atol=1e-8)

    def test_not_elliptic(self):
        with pytest.raises(NoRotationFoundError):
            reduce_to_normal_form(QuadraticForm(n=1, Q=np.diag([0.5, -0.5])))

    def test_unknown_mode(self, oscillator):
        with pytest.raises(ConfigurationError):
            reduce_to_normal_form(oscillator, mode="schur")

    def test_report_round_trip(self, oscillator):
        result = reduce_to_normal_form(oscillator)
        restored = NormalFormResult.from_report(result.to_report())
        assert_allclose(restored.M, result.M)
        assert_allclose(restored.K_total, result.K_total)
        assert_allclose(restored.phi1.G, result.phi1.G)
        assert restored.C1 == result.C1
        assert restored.jordan_mode == "raw"

    def test_malformed_report(self):
        with pytest.raises(ConfigurationError):
            NormalFormResult.from_report({"n": 1})
