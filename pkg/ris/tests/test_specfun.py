import math

import numpy as np
from django.test import SimpleTestCase
from scipy import special, stats

from ris import specfun
from ris.errors import DomainError


class GoldenValueTests(SimpleTestCase):
    def assertRelClose(self, actual, expected, rtol=1e-6):
        self.assertLessEqual(abs(actual - expected), rtol * abs(expected), f"{actual!r} != {expected!r}")

    def test_exp_integral_at_one(self):
        self.assertRelClose(specfun.exp_integral_gamma0(1.0), 0.2193839)

    def test_digamma_at_one(self):
        self.assertRelClose(specfun.digamma(1.0), -0.5772157)

    def test_upper_gamma_half_one(self):
        self.assertRelClose(specfun.upper_gamma_regularized(0.5, 1.0), 0.1572992)

    def test_marcum_q_one_one(self):
        # Q1(a, a) = (1 + e^{-a²} I0(a²)) / 2
        self.assertRelClose(specfun.marcum_q1(1.0, 1.0), 0.5 * (1.0 + math.exp(-1.0) * special.i0(1.0)))
        self.assertRelClose(specfun.marcum_q1(1.0, 1.0), 0.7328798)

    def test_rician_mean_factor_k10(self):
        self.assertRelClose(specfun.rician_mean_factor(10.0), 0.97773, rtol=1e-5)

    def test_sinc_pi_over_8(self):
        self.assertRelClose(specfun.sinc(math.pi / 8), 0.9744954)


class LnGammaTests(SimpleTestCase):
    def test_matches_scipy(self):
        for x in (1e-3, 0.1, 0.5, 1.0, 2.5, 7.0, 33.3, 840.0, 1e5):
            with self.subTest(x=x):
                self.assertAlmostEqual(specfun.ln_gamma(x), special.gammaln(x), delta=1e-10 * max(1.0, abs(special.gammaln(x))))

    def test_integers_are_log_factorials(self):
        self.assertAlmostEqual(specfun.ln_gamma(6.0), math.log(120.0), places=12)

    def test_rejects_nonpositive(self):
        for x in (0.0, -1.5, math.inf):
            with self.assertRaises(DomainError):
                specfun.ln_gamma(x)


class IncompleteGammaTests(SimpleTestCase):
    GRID = [(a, x) for a in (0.2, 0.5, 1.0, 3.4, 13.0, 120.0, 840.0) for x in (1e-4, 0.3, 1.0, 5.0, 14.0, 150.0, 900.0)]

    def test_upper_matches_scipy(self):
        for a, x in self.GRID:
            expected = special.gammaincc(a, x)
            with self.subTest(a=a, x=x):
                self.assertAlmostEqual(specfun.upper_gamma_regularized(a, x), expected, delta=1e-12 + 1e-9 * expected)

    def test_lower_matches_scipy_in_deep_tail(self):
        for a, x in [(13.0, 0.01), (3.4, 1e-4), (840.0, 500.0), (0.22, 1e-30)]:
            expected = special.gammainc(a, x)
            with self.subTest(a=a, x=x):
                self.assertGreater(expected, 0.0)
                self.assertLessEqual(abs(specfun.lower_gamma_regularized(a, x) - expected), 1e-8 * expected)

    def test_pair_sums_to_one(self):
        for a, x in self.GRID:
            p, q = specfun.regularized_gamma_pair(a, x)
            self.assertAlmostEqual(p + q, 1.0, places=14)

    def test_boundaries(self):
        self.assertEqual(specfun.regularized_gamma_pair(2.0, 0.0), (0.0, 1.0))
        self.assertEqual(specfun.regularized_gamma_pair(2.0, math.inf), (1.0, 0.0))

    def test_domain(self):
        with self.assertRaises(DomainError):
            specfun.upper_gamma_regularized(0.0, 1.0)
        with self.assertRaises(DomainError):
            specfun.upper_gamma_regularized(1.0, -1.0)


class DigammaTests(SimpleTestCase):
    def test_matches_scipy(self):
        for x in (1e-3, 0.027, 0.5, 1.0, 3.0, 9.99, 10.0, 64.0, 1e4):
            with self.subTest(x=x):
                self.assertAlmostEqual(specfun.digamma(x), special.digamma(x), delta=1e-10 * max(1.0, abs(special.digamma(x))))

    def test_recurrence(self):
        self.assertAlmostEqual(specfun.digamma(4.2), specfun.digamma(3.2) + 1.0 / 3.2, places=12)


class ExponentialIntegralTests(SimpleTestCase):
    def test_matches_scipy(self):
        for x in (1e-8, 0.01, 0.5, 1.0, 1.0001, 4.0, 50.0, 700.0):
            with self.subTest(x=x):
                expected = special.exp1(x)
                self.assertLessEqual(abs(specfun.exp_integral_gamma0(x) - expected), 1e-10 * expected)

    def test_underflow_is_zero(self):
        self.assertEqual(specfun.exp_integral_gamma0(800.0), 0.0)

    def test_scaled_form(self):
        for x in (0.1, 1.0, 2.0, 30.0):
            self.assertAlmostEqual(
                specfun.exp_integral_gamma0_scaled(x), math.exp(x) * special.exp1(x), delta=1e-10
            )
        # e^x E1(x) ~ 1/x for large x
        self.assertAlmostEqual(specfun.exp_integral_gamma0_scaled(1e6) * 1e6, 1.0, places=5)

    def test_diverges_at_zero(self):
        with self.assertRaises(DomainError):
            specfun.exp_integral_gamma0(0.0)


class RicianMeanFactorTests(SimpleTestCase):
    def test_rayleigh_limit(self):
        self.assertAlmostEqual(specfun.rician_mean_factor(0.0), math.sqrt(math.pi) / 2, places=14)

    def test_matches_rice_distribution_mean(self):
        for kappa in (0.5, 6.0, 10.0, 100.0):
            nu = math.sqrt(kappa / (kappa + 1))
            sigma = math.sqrt(0.5 / (kappa + 1))
            expected = stats.rice.mean(nu / sigma, scale=sigma)
            with self.subTest(kappa=kappa):
                self.assertAlmostEqual(specfun.rician_mean_factor(kappa), expected, delta=1e-7)

    def test_tends_to_one(self):
        self.assertGreater(specfun.rician_mean_factor(1e4), 0.9999)
        self.assertLessEqual(specfun.rician_mean_factor(1e4), 1.0)

    def test_negative_k(self):
        with self.assertRaises(DomainError):
            specfun.rician_mean_factor(-0.1)


class SincTests(SimpleTestCase):
    def test_zero(self):
        self.assertEqual(specfun.sinc(0.0), 1.0)

    def test_even(self):
        self.assertEqual(specfun.sinc(-0.7), specfun.sinc(0.7))


class MarcumQTests(SimpleTestCase):
    def test_matches_noncentral_chi2(self):
        for a, b in [(0.1, 0.2), (1.0, 2.0), (2.0, 1.0), (5.0, 5.5), (10.0, 8.0), (30.0, 31.0), (3.0, 12.0)]:
            expected = stats.ncx2.sf(b * b, 2, a * a)
            with self.subTest(a=a, b=b):
                self.assertAlmostEqual(specfun.marcum_q1(a, b), expected, delta=1e-10 + 1e-8 * expected)

    def test_edges(self):
        self.assertEqual(specfun.marcum_q1(3.0, 0.0), 1.0)
        self.assertAlmostEqual(specfun.marcum_q1(0.0, 2.0), math.exp(-2.0), places=15)

    def test_far_tails_saturate(self):
        self.assertEqual(specfun.marcum_q1(100.0, 1.0), 1.0)
        self.assertEqual(specfun.marcum_q1(1.0, 100.0), 0.0)

    def test_negative_arguments(self):
        with self.assertRaises(DomainError):
            specfun.marcum_q1(-1.0, 1.0)

    def test_monotone_on_grid(self):
        points = [0.25 * i for i in range(50)]
        for a in points[::7]:
            values = [specfun.marcum_q1(a, b) for b in points]
            self.assertTrue(all(y <= x + 1e-14 for x, y in zip(values, values[1:])), f"not decreasing in b at a={a}")
        for b in points[::7]:
            values = [specfun.marcum_q1(a, b) for a in points]
            self.assertTrue(all(y >= x - 1e-14 for x, y in zip(values, values[1:])), f"not increasing in a at b={b}")


class ReferenceValueTests(SimpleTestCase):
    def test_ln_gamma_small_integers_and_half(self):
        self.assertAlmostEqual(specfun.ln_gamma(1.0), 0.0, places=14)
        self.assertAlmostEqual(specfun.ln_gamma(2.0), 0.0, places=14)
        self.assertAlmostEqual(specfun.ln_gamma(0.5), math.log(math.sqrt(math.pi)), places=13)

    def test_shape_one_is_exponential_tail(self):
        for x in (0.0, 0.3, 2.0, 17.0):
            self.assertAlmostEqual(specfun.upper_gamma_regularized(1.0, x), math.exp(-x), delta=1e-13)

    def test_upper_gamma_is_nonincreasing(self):
        values = [specfun.upper_gamma_regularized(3.4, 0.1 * i) for i in range(200)]
        self.assertTrue(all(b <= a for a, b in zip(values, values[1:])))

    def test_digamma_at_two_and_ten(self):
        self.assertAlmostEqual(specfun.digamma(2.0), specfun.digamma(1.0) + 1.0, places=13)
        self.assertAlmostEqual(specfun.digamma(10.0), 2.2517526, places=7)

    def test_digamma_recurrence_on_range(self):
        for x in np.linspace(0.1, 100.0, 57):
            self.assertAlmostEqual(specfun.digamma(x + 1.0) - specfun.digamma(x) - 1.0 / x, 0.0, delta=1e-12)

    def test_exp_integral_at_ten(self):
        self.assertAlmostEqual(specfun.exp_integral_gamma0(10.0) / 4.15697e-6, 1.0, delta=1e-5)

    def test_exp_integral_derivative(self):
        for x in (0.2, 0.9, 1.1, 3.0, 12.0):
            h = 1e-5 * x
            slope = (specfun.exp_integral_gamma0(x + h) - specfun.exp_integral_gamma0(x - h)) / (2 * h)
            with self.subTest(x=x):
                self.assertAlmostEqual(slope / (-math.exp(-x) / x), 1.0, delta=1e-6)

    def test_sinc_at_pi(self):
        self.assertAlmostEqual(specfun.sinc(math.pi), 0.0, places=15)

    def test_rician_mean_factor_against_sampling(self):
        rng = np.random.default_rng(101)
        for kappa in (0.0, 1.0, 6.0, 10.0):
            los = math.sqrt(kappa / (kappa + 1)) * np.exp(1j * rng.uniform(0.0, 2 * math.pi, 1_000_000))
            scatter = (rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)) * math.sqrt(
                0.5 / (kappa + 1)
            )
            amplitude = np.abs(los + scatter)
            spread = float(np.std(amplitude)) / 1000.0
            with self.subTest(kappa=kappa):
                self.assertLess(abs(float(np.mean(amplitude)) - specfun.rician_mean_factor(kappa)), 3.5 * spread)
