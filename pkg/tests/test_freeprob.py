"""Linearization pencils, operator Cauchy transforms, subordination,
and polynomial spectra of free variables."""
import numpy as np
import pytest

from specstream.freeprob import (LinearPencil, free_add_cauchy, ks_distance,
                                 monte_carlo_spectrum, operator_cauchy_law,
                                 operator_cauchy_semicircle,
                                 pencil_anticommutator,
                                 pencil_anticommutator_plus_square,
                                 polynomial_spectrum, subordination_solve)
from specstream.laws import LawSpec
from specstream.transforms import stieltjes_mp, stieltjes_semicircle

SEMI = LawSpec("semicircle")
MP_HALF = LawSpec("marchenko-pastur", c=0.5)


def rand_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2.0


def semicircle_operator_G(w):
    return operator_cauchy_semicircle(w, np.array([[1.0]]))


def zero_operator_G(w):
    return -np.linalg.inv(w)


class TestLinearPencil:
    def test_shapes_and_counts(self):
        pencil = pencil_anticommutator()
        assert pencil.dim == 3
        assert pencil.var_count == 2

    def test_coeffs_must_be_hermitian(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            LinearPencil((np.zeros((2, 2)), bad), label="bad")

    def test_evaluate_dimensions(self):
        pencil = pencil_anticommutator()
        mats = [np.eye(4), np.eye(4)]
        assert pencil.evaluate(mats).shape == (12, 12)

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError):
            pencil_anticommutator().evaluate([np.eye(2)])


class TestAnticommutatorPencil:
    def test_identity_substitution(self):
        got = pencil_anticommutator().reconstruct([np.eye(4), np.eye(4)])
        assert np.abs(got - 2.0 * np.eye(4)).max() < 1e-12

    def test_diagonal_substitution(self):
        x1 = np.diag([1.0, -1.0])
        got = pencil_anticommutator().reconstruct([x1, np.eye(2)])
        assert np.abs(got - 2.0 * x1).max() < 1e-12

    def test_random_hermitian_pairs(self):
        rng = np.random.default_rng(0)
        pencil = pencil_anticommutator()
        for _ in range(50):
            x1 = rand_hermitian(20, rng)
            x2 = rand_hermitian(20, rng)
            want = x1 @ x2 + x2 @ x1
            got = pencil.reconstruct([x1, x2])
            assert np.abs(got - want).max() < 1e-9


class TestAnticommutatorPlusSquarePencil:
    def test_x2_zero_gives_square(self):
        rng = np.random.default_rng(1)
        x1 = rand_hermitian(8, rng)
        got = pencil_anticommutator_plus_square().reconstruct(
            [x1, np.zeros((8, 8))])
        assert np.abs(got - x1 @ x1).max() < 1e-10

    def test_x1_zero_gives_zero(self):
        rng = np.random.default_rng(2)
        x2 = rand_hermitian(8, rng)
        got = pencil_anticommutator_plus_square().reconstruct(
            [np.zeros((8, 8)), x2])
        assert np.abs(got).max() < 1e-12

    def test_random_hermitian_pairs(self):
        rng = np.random.default_rng(3)
        pencil = pencil_anticommutator_plus_square()
        for _ in range(50):
            x1 = rand_hermitian(20, rng)
            x2 = rand_hermitian(20, rng)
            want = x1 @ x2 + x2 @ x1 + x1 @ x1
            got = pencil.reconstruct([x1, x2])
            assert np.abs(got - want).max() < 1e-9


class TestOperatorCauchy:
    def test_zero_coefficient(self):
        # transform of the zero operator under G(b) = E[(t coeff - b)^{-1}]
        b = np.array([[1j, 0.2], [0.2, 2j]], dtype=complex)
        got = operator_cauchy_law(b, np.zeros((2, 2)), SEMI)
        assert np.abs(got - (-np.linalg.inv(b))).max() < 1e-9

    def test_scalar_reduction_semicircle(self):
        z = 0.8 + 1.3j
        got = operator_cauchy_semicircle(np.array([[z]]), np.array([[1.0]]))
        assert abs(got[0, 0] - stieltjes_semicircle(z)) < 1e-6

    def test_scalar_reduction_mp(self):
        z = 1.2 + 0.7j
        got = operator_cauchy_law(np.array([[z]]), np.array([[1.0]]), MP_HALF)
        assert abs(got[0, 0] - stieltjes_mp(z, 0.5)) < 1e-6

    def test_conjugation_symmetry(self):
        rng = np.random.default_rng(4)
        coeff = rand_hermitian(3, rng).real
        h = rand_hermitian(3, rng)
        b = h + 1.5j * np.eye(3)
        lhs = operator_cauchy_law(b, coeff, SEMI).conj().T
        rhs = operator_cauchy_law(b.conj().T, coeff, SEMI)
        assert np.abs(lhs - rhs).max() < 1e-9

    def test_indefinite_argument_rejected(self):
        b = np.diag([1j, -1j])
        with pytest.raises(ValueError, match="definite imaginary part"):
            operator_cauchy_law(b, np.eye(2), SEMI)


class TestSubordination:
    def test_zero_summand_is_identity(self):
        b = np.array([[0.3 + 1.1j]])
        state = subordination_solve(semicircle_operator_G, zero_operator_G, b)
        assert state.converged
        assert np.abs(state.omega1 - b).max() < 1e-8
        assert np.abs(state.g - semicircle_operator_G(b)).max() < 1e-8

    def test_two_semicircles_closed_form(self):
        b = np.array([[2j]])
        state = subordination_solve(semicircle_operator_G,
                                    semicircle_operator_G, b)
        assert state.converged
        want = stieltjes_semicircle(2j, np.sqrt(2.0))
        assert abs(state.g[0, 0] - want) < 1e-6

    def test_imaginary_ordering(self):
        b = np.array([[0.4 + 0.9j]])
        state = subordination_solve(semicircle_operator_G,
                                    semicircle_operator_G, b)
        assert state.imaginary_ordering_gap() >= -1e-10

    def test_residual_decreases_over_iteration_budget(self):
        # with a tolerance below reach, longer budgets end at smaller residuals
        b = np.array([[0.4 + 0.9j]])
        resids = [subordination_solve(semicircle_operator_G,
                                      semicircle_operator_G, b,
                                      tol=1e-16, max_iter=mi).residual
                  for mi in (6, 12, 24, 48)]
        assert all(b <= a * (1.0 + 1e-9) for a, b in zip(resids, resids[1:]))

    def test_non_converged_state_returned(self):
        b = np.array([[0.4 + 0.9j]])
        state = subordination_solve(semicircle_operator_G,
                                    semicircle_operator_G, b,
                                    tol=1e-16, max_iter=4)
        assert not state.converged
        assert np.isfinite(state.residual)
        assert state.iterations == 4

    def test_lower_half_plane_rejected(self):
        b = np.array([[-1j]])
        with pytest.raises(ValueError):
            subordination_solve(semicircle_operator_G, semicircle_operator_G, b)


class TestFreeAddCauchy:
    def test_matches_scaled_semicircle(self):
        G = free_add_cauchy(SEMI, SEMI)
        for z in (2j, 1.0 + 1.0j, -0.5 + 0.3j):
            assert abs(G(z) - stieltjes_semicircle(z, np.sqrt(2.0))) < 1e-6

    def test_schwarz_reflection(self):
        G = free_add_cauchy(SEMI, MP_HALF)
        z = 0.7 + 0.9j
        assert abs(G(np.conj(z)) - np.conj(G(z))) < 1e-12

    def test_real_argument_rejected(self):
        G = free_add_cauchy(SEMI, SEMI)
        with pytest.raises(ValueError):
            G(1.5)


class TestMonteCarloSpectrum:
    def test_determinism(self):
        pencil = pencil_anticommutator()
        a = monte_carlo_spectrum(pencil, (SEMI, SEMI), n=40, draws=2, seed=9)
        b = monte_carlo_spectrum(pencil, (SEMI, SEMI), n=40, draws=2, seed=9)
        assert np.array_equal(a.values, b.values)
        c = monte_carlo_spectrum(pencil, (SEMI, SEMI), n=40, draws=2, seed=10)
        assert not np.array_equal(a.values, c.values)

    def test_pool_size_and_order(self):
        mc = monte_carlo_spectrum(pencil_anticommutator(), (SEMI, SEMI),
                                  n=30, draws=3, seed=0)
        assert mc.values.size == 90
        assert np.all(np.diff(mc.values) >= 0)
        lo, hi = mc.support
        assert lo == mc.values[0] and hi == mc.values[-1]

    def test_law_count_validated(self):
        with pytest.raises(ValueError):
            monte_carlo_spectrum(pencil_anticommutator(), (SEMI,), n=20)


class TestPolynomialSpectrum:
    def test_identity_polynomial_recovers_semicircle(self):
        # 1x1 pencil with zero constant block encodes p(x1) = x1
        pencil = LinearPencil((np.zeros((1, 1)), np.eye(1)), label="x1")
        # eta = 1e-3 leaves about 7e-3 of smoothing bias right at the
        # spectral edges; 1e-4 brings the whole grid under the bound
        ps = polynomial_spectrum(pencil, (SEMI,),
                                 grid=np.linspace(-2.5, 2.5, 201), eta=1e-4)
        from specstream.laws import semicircle_density
        want = semicircle_density(ps.grid, 1.0)
        assert np.abs(ps.density - want).max() < 5e-3

    def test_anticommutator_semicircles(self):
        mc = monte_carlo_spectrum(pencil_anticommutator(), (SEMI, SEMI),
                                  n=150, draws=2, seed=3)
        ps = polynomial_spectrum(pencil_anticommutator(), (SEMI, SEMI),
                                 grid_points=60)
        assert ks_distance(ps, mc.values) < 0.05
        # density of x1 x2 + x2 x1 for free semicirculars is symmetric
        assert abs(np.trapezoid(ps.grid * ps.density, ps.grid)) < 0.05
        assert np.all(ps.density >= 0.0)
        assert abs(np.trapezoid(ps.density, ps.grid) - 1.0) <= 0.02

    def test_cdf_shape(self):
        pencil = LinearPencil((np.zeros((1, 1)), np.eye(1)), label="x1")
        ps = polynomial_spectrum(pencil, (SEMI,),
                                 grid=np.linspace(-2.5, 2.5, 101))
        cdf = ps.cdf()
        assert np.all(np.diff(cdf) >= -1e-12)
        assert abs(cdf[-1] - 1.0) < 1e-12

    def test_law_count_validated(self):
        with pytest.raises(ValueError):
            polynomial_spectrum(pencil_anticommutator(), (SEMI,),
                                grid=np.linspace(-1, 1, 11))
