"""Cauchy/Stieltjes transforms, functional inversion, R/S calculus.

Branch convention under test: G(z) = integral dF(x)/(x - z), so
sign(Im G) = sign(Im z) and G ~ -1/z in the tail.
"""
import numpy as np
import pytest

from specstream.ensembles import EnsembleSpec, sample_gue
from specstream.laws import LawSpec
from specstream.linalg import SpectrumSample, eig_hermitian
from specstream.transforms import (AdditivityReport, CauchyEvaluator,
                                   cauchy_from_law, cauchy_from_spectrum,
                                   cauchy_from_table, cauchy_inverse,
                                   density_from_stieltjes, r_transform_numeric,
                                   s_transform_numeric, stieltjes_from_spectrum,
                                   stieltjes_mp, stieltjes_semicircle,
                                   verify_r_additivity)

SEMI = LawSpec("semicircle")
MP_HALF = LawSpec("marchenko-pastur", c=0.5)


def atom_spectrum(x):
    return SpectrumSample([float(x)], (1, 1), "eigen-hermitian")


class TestStieltjesFromSpectrum:
    def test_single_atom_at_zero(self):
        assert abs(stieltjes_from_spectrum(atom_spectrum(0.0), -1j) - (-1j)) < 1e-15

    def test_two_atoms(self):
        s = SpectrumSample([-1.0, 1.0], (2, 2), "eigen-hermitian")
        want = 0.5 * (1.0 / (-1.0 + 1j) + 1.0 / (1.0 + 1j))
        got = stieltjes_from_spectrum(s, -1j)
        assert abs(got - want) < 1e-15
        assert abs(got - (-0.5j)) < 1e-15

    def test_eigenvalue_collision_rejected(self):
        s = SpectrumSample([-1.0, 1.0], (2, 2), "eigen-hermitian")
        with pytest.raises(ValueError, match="collides"):
            stieltjes_from_spectrum(s, 1.0)

    def test_gue_matches_closed_form(self):
        y = sample_gue(EnsembleSpec("gue", 1000, seed=2)).entries
        s = eig_hermitian(y / np.sqrt(1000))
        z = 2.0 - 0.5j
        assert abs(stieltjes_from_spectrum(s, z)
                   - stieltjes_semicircle(z)) < 0.02

    def test_vectorized_points(self):
        s = SpectrumSample([0.0], (1, 1), "eigen-hermitian")
        zs = np.array([1j, 2j, -1j])
        assert np.abs(stieltjes_from_spectrum(s, zs) - (-1.0 / zs)).max() < 1e-15


class TestClosedForms:
    def test_semicircle_quadratic_identity(self):
        # G solves sigma^2 G^2 + z G + 1 = 0 in both half-planes
        rng = np.random.default_rng(0)
        for sigma in (1.0, 1.7):
            zs = rng.standard_normal(12) + 1j * np.where(
                rng.standard_normal(12) > 0, 1.0, -1.0) * (0.2 + rng.random(12))
            g = stieltjes_semicircle(zs, sigma)
            resid = sigma**2 * g**2 + zs * g + 1.0
            assert np.abs(resid).max() < 1e-12

    def test_semicircle_tail(self):
        z = 100j
        g = stieltjes_semicircle(z)
        assert abs(g + 1.0 / z) < 1e-3
        assert g.real == 0.0

    def test_semicircle_branch_sign(self):
        for z in (0.5 + 1j, 0.5 - 1j, -1.2 + 0.01j, -1.2 - 0.01j):
            g = stieltjes_semicircle(z)
            assert np.sign(g.imag) == np.sign(z.imag)

    def test_mp_quadratic_identity(self):
        rng = np.random.default_rng(1)
        for c in (0.5, 1.0, 2.0):
            zs = (rng.standard_normal(10) + 2.0
                  + 1j * np.where(rng.standard_normal(10) > 0, 1, -1)
                  * (0.3 + rng.random(10)))
            g = stieltjes_mp(zs, c)
            resid = c * zs * g**2 + (zs + c - 1.0) * g + 1.0
            assert np.abs(resid).max() < 1e-10

    def test_mp_c1_branch_at_minus_i(self):
        g = stieltjes_mp(-1j, 1.0)
        assert np.isfinite(g.real) and np.isfinite(g.imag)
        assert g.imag < 0.0

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            stieltjes_semicircle(1j, sigma=0.0)
        with pytest.raises(ValueError):
            stieltjes_mp(1j, c=0.0)


class TestCauchyEvaluator:
    def test_unknown_source_rejected(self):
        with pytest.raises(ValueError):
            CauchyEvaluator("guess", lambda z: -1.0 / z, 0.0)

    def test_branch_assertion_trips_on_bad_function(self):
        bad = CauchyEvaluator("law", lambda z: 1j, 0.0)
        with pytest.raises(ArithmeticError, match="branch violation"):
            bad.eval(-1j)

    def test_analytic_vs_numeric_derivative(self):
        s = SpectrumSample([-0.5, 0.25, 1.0], (3, 3), "eigen-hermitian")
        ev = cauchy_from_spectrum(s)
        z = 0.3 + 0.8j
        numeric = (ev.fn(z + 1e-6) - ev.fn(z - 1e-6)) / 2e-6
        assert abs(ev.d1(z) - numeric) < 1e-7

    def test_law_evaluator_mean(self):
        assert cauchy_from_law(SEMI).mean == 0.0
        assert cauchy_from_law(LawSpec("marchenko-pastur", c=0.5, sigma=1.0)).mean == 1.0

    def test_table_evaluator_matches_law(self):
        xs = np.linspace(-2.0, 2.0, 4001)
        dens = np.sqrt(np.clip(4.0 - xs**2, 0.0, None)) / (2.0 * np.pi)
        ev = cauchy_from_table(xs, dens)
        z = 0.4 + 1.1j
        assert abs(ev(z) - stieltjes_semicircle(z)) < 1e-4

    def test_table_validation(self):
        with pytest.raises(ValueError):
            cauchy_from_table(np.array([0.0, 1.0]), np.array([0.0, 0.0]))


class TestDensityRecovery:
    def test_atom_poisson_peak(self):
        ev = cauchy_from_spectrum(atom_spectrum(0.0))
        eps = 1e-3
        got = density_from_stieltjes(ev, 0.0, epsilon=eps)
        assert abs(got - 1.0 / (np.pi * eps)) < 1e-6 / eps

    def test_semicircle_center_with_ladder(self):
        rho = density_from_stieltjes(cauchy_from_law(SEMI), 0.0)
        assert abs(rho - 1.0 / np.pi) < 1e-4

    def test_mp_outside_support_vanishes(self):
        a = (1.0 - np.sqrt(0.5)) ** 2
        rho = density_from_stieltjes(cauchy_from_law(MP_HALF), a - 0.5,
                                     epsilon=1e-4)
        assert rho <= 1e-3

    def test_flipped_branch_raises(self):
        flipped = lambda z: -stieltjes_semicircle(z)
        with pytest.raises(ArithmeticError, match="negative density"):
            density_from_stieltjes(flipped, 0.0)

    def test_spectrum_round_trip_mass(self):
        # smoothed density of a finite spectrum integrates to about 1;
        # tolerance 5 * eps * N covers the Poisson-kernel tail loss
        y = sample_gue(EnsembleSpec("gue", 30, seed=4)).entries
        s = eig_hermitian(y / np.sqrt(30.0))
        ev = cauchy_from_spectrum(s)
        eps = 1e-3
        xs = np.linspace(-4.0, 4.0, 2001)
        rho = np.array([density_from_stieltjes(ev, float(x), epsilon=eps)
                        for x in xs])
        mass = np.trapezoid(rho, xs)
        assert abs(mass - 1.0) < 5.0 * eps * 30


class TestFunctionalInversion:
    def test_round_trip_law(self):
        ev = cauchy_from_law(SEMI)
        z = 1.0 + 2.0j
        w = ev(z)
        assert abs(cauchy_inverse(ev, w) - z) < 1e-8

    def test_round_trip_spectrum(self):
        s = SpectrumSample([-1.2, 0.3, 0.9, 2.0], (4, 4), "eigen-hermitian")
        ev = cauchy_from_spectrum(s)
        z = 0.5 + 1.5j
        assert abs(cauchy_inverse(ev, ev(z)) - z) < 1e-8

    def test_zero_target_rejected(self):
        with pytest.raises(ValueError):
            cauchy_inverse(cauchy_from_law(SEMI), 0.0)


class TestRTransform:
    def test_semicircle_identity(self):
        ev = cauchy_from_law(SEMI)
        assert abs(r_transform_numeric(ev, 0.1j) - 0.1j) < 1e-6

    def test_point_mass_constant(self):
        m = 1.7
        ev = cauchy_from_spectrum(atom_spectrum(m))
        for w in (0.1j, 0.05 + 0.02j):
            assert abs(r_transform_numeric(ev, w) - m) < 1e-8

    def test_mp_closed_form(self):
        # R(w) = 1 / (1 - c w)
        ev = cauchy_from_law(MP_HALF)
        w = 0.1 + 0.05j
        assert abs(r_transform_numeric(ev, w) - 1.0 / (1.0 - 0.5 * w)) < 1e-7

    def test_scaling_property(self):
        # R_{alpha X}(w) = alpha R_X(alpha w), checked for alpha = 2
        alpha = 2.0
        scaled = cauchy_from_law(LawSpec("semicircle", sigma=alpha))
        base = cauchy_from_law(SEMI)
        w = 0.07j
        lhs = r_transform_numeric(scaled, w)
        rhs = alpha * r_transform_numeric(base, alpha * w)
        assert abs(lhs - rhs) < 1e-7

    def test_w_zero_rejected(self):
        with pytest.raises(ValueError):
            r_transform_numeric(cauchy_from_law(SEMI), 0.0)


class TestSTransform:
    def test_point_mass(self):
        ev = cauchy_from_spectrum(atom_spectrum(2.0))
        assert abs(s_transform_numeric(ev, 0.3) - 0.5) < 1e-8

    def test_mp_closed_form(self):
        # S(z) = 1 / (1 + c z) at z = 0.2, c = 0.5
        ev = cauchy_from_law(MP_HALF)
        assert abs(s_transform_numeric(ev, 0.2) - 1.0 / 1.1) < 1e-7

    def test_defining_relation(self):
        ev = cauchy_from_law(MP_HALF)
        for z in (0.1, 0.25):
            s = s_transform_numeric(ev, z)
            assert abs(s * r_transform_numeric(ev, z * s) - 1.0) < 1e-7

    def test_zero_mean_law_rejected(self):
        with pytest.raises(ValueError):
            s_transform_numeric(cauchy_from_law(SEMI), 0.1)


class TestRAdditivity:
    POINTS = (0.1j, 0.05 + 0.1j, -0.04 + 0.08j, 0.12j, 0.02 + 0.15j)

    def test_semicircle_pair(self):
        report = verify_r_additivity(SEMI, SEMI, self.POINTS)
        assert isinstance(report, AdditivityReport)
        assert report.max_error < 1e-3
        # the convolved R should be 2w
        for w, lhs in zip(report.points, report.lhs):
            assert abs(lhs - 2.0 * w) < 1e-6

    def test_semicircle_mp_pair(self):
        report = verify_r_additivity(SEMI, MP_HALF, self.POINTS[:2])
        assert report.max_error < 1e-3

    def test_shift_by_point_mass(self):
        # adding a deterministic m translates the law: R picks up + m
        m = 0.8
        base = cauchy_from_law(SEMI)
        shifted = CauchyEvaluator(
            "law", lambda z: stieltjes_semicircle(z - m), m)
        w = 0.09j
        got = r_transform_numeric(shifted, w)
        assert abs(got - (r_transform_numeric(base, w) + m)) < 1e-7
