from weakbeam.exceptions import DegenerateDistributionError, OrthogonalStatesError
from weakbeam.exceptions import WeakRegimeWarning
from weakbeam.pointer import *
from weakbeam.types import PolarizationState, PulseShape, VSystemParams
from weakbeam.types import postselect_angle, preselected_state

from my_unittest import TestCase

from scipy.integrate import quad

import math
import numpy as np
import warnings


def random_params(rng: np.random.Generator) -> VSystemParams:
    gamma = 10**rng.uniform(6, 9)
    return VSystemParams(
        gamma,
        gamma*10**rng.uniform(-4, 0.5),
        rng.uniform(1e-3, math.pi/2),
    )


def unnormalized(t: float, params: VSystemParams) -> float:
    return math.exp(-params.gamma*t)*math.sin(params.delta*t + params.epsilon)**2


def quad_moment(params: VSystemParams, power: int) -> float:
    # Integrate in units of the lifetime for conditioning
    g = params.gamma
    value, _ = quad(
        lambda u: (u/g)**power*unnormalized(u/g, params), 0, np.inf,
        limit=500, epsabs=0, epsrel=1e-12
    )
    return value/g


class TestWeakValue(TestCase):

    def test_postselected_angle(self) -> None:
        for epsilon in [0.05, 0.2, 1.0, math.pi/2]:
            with self.subTest(epsilon=epsilon):
                value = weak_value(preselected_state(), postselect_angle(epsilon))
                self.assertAlmostEqual(value.re, 0)
                self.assertAlmostEqual(value.im, 1/math.tan(epsilon))

    def test_of_params(self) -> None:
        value = weak_value_of_params(VSystemParams(1, 0.01, 0.1))
        self.assertAlmostEqual(value.im, 1/math.tan(0.1))

    def test_eigenstate(self) -> None:
        value = weak_value(PolarizationState(1, 0), preselected_state())
        self.assertAlmostEqual(value.re, 1)
        self.assertAlmostEqual(value.im, 0)

    def test_orthogonal_states(self) -> None:
        with self.assertRaises(OrthogonalStatesError):
            weak_value(preselected_state(), postselect_angle(0))


class TestNormalization(TestCase):

    def test_against_quadrature(self) -> None:
        rng = np.random.default_rng(1)
        for _ in range(200):
            params = random_params(rng)
            with self.subTest(params=params):
                self.assertRelativelyEqual(closed_form_norm(params), 1/quad_moment(params, 0), 1e-8)

    def test_natural_decay(self) -> None:
        self.assertAlmostEqual(closed_form_norm(VSystemParams(2.0, 0, math.pi/2)), 2.0)

    def test_degenerate(self) -> None:
        with self.assertRaises(DegenerateDistributionError):
            closed_form_norm(VSystemParams(1, 0, 0))

    def test_pdf_integrates_to_one(self) -> None:
        params = VSystemParams(1, 0.05, 0.2)
        value, _ = quad(lambda t: pointer_pdf(t, params), 0, np.inf, limit=200)
        self.assertAlmostEqual(value, 1, places=8)

    def test_pdf_zero_before_emission(self) -> None:
        params = VSystemParams(1, 0.05, 0.2)
        self.assertEqual(pointer_pdf(-1.0, params), 0)
        self.assertIsInstance(pointer_pdf(1.0, params), float)
        self.assertEqual(pointer_pdf(np.array([-1.0, 0.5]), params).shape, (2,))

    def test_pdf_natural_decay(self) -> None:
        params = VSystemParams(3.0, 0, math.pi/2)
        t = np.linspace(0, 2, 11)
        self.assertArraysRelativelyEqual(pointer_pdf(t, params), natural_decay(t, 3.0), 1e-12)


class TestMoments(TestCase):

    def test_mean_against_quadrature(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(200):
            params = random_params(rng)
            with self.subTest(params=params):
                self.assertRelativelyEqual(
                    mean_arrival_time(params), quad_moment(params, 1)/quad_moment(params, 0), 1e-8
                )

    def test_variance_against_quadrature(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(50):
            params = random_params(rng)
            norm = quad_moment(params, 0)
            mean = quad_moment(params, 1)/norm
            with self.subTest(params=params):
                self.assertRelativelyEqual(
                    arrival_variance(params), quad_moment(params, 2)/norm - mean**2, 1e-6
                )

    def test_natural_decay(self) -> None:
        params = VSystemParams(2.0, 0, math.pi/2)
        self.assertAlmostEqual(mean_arrival_time(params), 0.5)
        self.assertAlmostEqual(arrival_variance(params), 0.25)

    def test_zero_splitting_is_natural_decay_for_any_angle(self) -> None:
        for epsilon in [0.01, 0.3, 1.2]:
            self.assertAlmostEqual(mean_arrival_time(VSystemParams(1.0, 0, epsilon)), 1.0)

    def test_mean_increases_as_angle_decreases(self) -> None:
        gamma = 1/26e-9
        epsilons = [math.pi/2, 0.8, 0.5, 0.3, 0.2, 0.15]
        means = [
            mean_arrival_time(VSystemParams(gamma, 2*math.pi*600e3, epsilon))
            for epsilon in epsilons
        ]
        self.assertTrue(all(a < b for a, b in zip(means, means[1:])))

    def test_degenerate(self) -> None:
        with self.assertRaises(DegenerateDistributionError):
            mean_arrival_time(VSystemParams(1, 0, 0))


class TestFirstOrder(TestCase):

    def test_decay_rate(self) -> None:
        result = approx_decay_rate(VSystemParams(1.0, 0.01, 0.1))
        self.assertAlmostEqual(result.gamma_eff, 0.8)
        self.assertTrue(result.valid)

    def test_decay_rate_validity(self) -> None:
        self.assertFalse(approx_decay_rate(VSystemParams(1.0, 0.05, 0.1)).valid)
        with self.assertRaises(ValueError):
            approx_decay_rate(VSystemParams(1.0, 0.01, 0))

    def test_mean_shift_against_exact_mean(self) -> None:
        gamma, delta = 1.0, 0.01
        for epsilon in np.linspace(10*delta, 0.3, 20):
            params = VSystemParams(gamma, delta, float(epsilon))
            shift = mean_shift(params)
            with self.subTest(epsilon=epsilon):
                self.assertAlmostEqual(shift, 2*delta/(math.tan(epsilon)*gamma**2))
                self.assertLessEqual(abs(mean_arrival_time(params) - 1/gamma - shift), 0.1*shift)

    def test_mean_shift_from_weak_value(self) -> None:
        params = VSystemParams(1.0, 0.005, 0.2)
        natural_variance = arrival_variance(VSystemParams(1.0, 0, math.pi/2))
        expected = 2*params.delta*natural_variance*weak_value_of_params(params).im
        self.assertAlmostEqual(mean_shift(params), expected)

    def test_mean_shift_warns_outside_weak_regime(self) -> None:
        with self.assertWarns(WeakRegimeWarning):
            mean_shift(VSystemParams(1.0, 0.1, 0.1))

    def test_mean_shift_silent_in_weak_regime(self) -> None:
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            mean_shift(VSystemParams(1.0, 0.001, 0.1))

    def test_mean_shift_requires_positive_angle(self) -> None:
        with self.assertRaises(ValueError):
            mean_shift(VSystemParams(1.0, 0.01, 0))


class TestSurvival(TestCase):

    def setUp(self) -> None:
        self.params = VSystemParams(1.0, 0.3, 0.4)

    def test_limits(self) -> None:
        self.assertEqual(survival(0.0, self.params), 1)
        self.assertEqual(survival(-1.0, self.params), 1)
        self.assertLess(survival(60.0, self.params), 1e-20)

    def test_against_quadrature(self) -> None:
        for t in [0.1, 1.0, 5.0]:
            expected, _ = quad(lambda u: pointer_pdf(u, self.params), t, np.inf)
            self.assertAlmostEqual(survival(t, self.params), expected, places=10)


class TestConvolution(TestCase):

    def setUp(self) -> None:
        self.params = VSystemParams(1.0, 0.1, 0.3, PulseShape.square(0.5))

    def test_delta_pulse_is_identity(self) -> None:
        params = VSystemParams(1.0, 0.1, 0.3)
        t = np.linspace(0, 5, 21)
        self.assertArraysRelativelyEqual(convolved_pdf(t, params), pointer_pdf(t, params), 1e-14)

    def test_integrates_to_one(self) -> None:
        value, _ = quad(lambda t: convolved_pdf(t, self.params), 0, np.inf, points=[0.5], limit=200)
        self.assertAlmostEqual(value, 1, places=8)

    def test_against_numerical_convolution(self) -> None:
        T = self.params.pulse.duration
        for t in [0.2, 0.5, 1.7]:
            expected, _ = quad(
                lambda s: pointer_pdf(t - s, VSystemParams(1.0, 0.1, 0.3))/T, 0, min(t, T)
            )
            self.assertAlmostEqual(convolved_pdf(t, self.params), expected, places=10)

    def test_cdf(self) -> None:
        self.assertEqual(convolved_cdf(0.0, self.params), 0)
        self.assertAlmostEqual(convolved_cdf(80.0, self.params), 1, places=12)
        expected, _ = quad(lambda t: convolved_pdf(t, self.params), 0, 2, points=[0.5])
        self.assertAlmostEqual(convolved_cdf(2.0, self.params), expected, places=10)

    def test_bin_probabilities(self) -> None:
        edges = np.linspace(0, 3, 31)
        probabilities = bin_probabilities(edges, self.params)
        self.assertEqual(len(probabilities), 30)
        expected, _ = quad(lambda t: convolved_pdf(t, self.params), edges[7], edges[8])
        self.assertAlmostEqual(probabilities[7], expected, places=12)
        self.assertAlmostEqual(np.sum(probabilities), convolved_cdf(3.0, self.params), places=12)

    def test_bin_probabilities_sum_to_one(self) -> None:
        edges = np.linspace(0, 60, 6001)
        self.assertAlmostEqual(np.sum(bin_probabilities(edges, self.params)), 1, places=10)

    def test_bin_probabilities_invalid_edges(self) -> None:
        with self.assertRaises(ValueError):
            bin_probabilities(np.array([0.0, 1.0, 1.0]), self.params)
        with self.assertRaises(ValueError):
            bin_probabilities(np.array([0.0]), self.params)


class TestAcceptance(TestCase):

    def test_natural_decay_fully_accepted(self) -> None:
        self.assertAlmostEqual(acceptance_probability(VSystemParams(1.0, 0, math.pi/2)), 1)

    def test_small_angle(self) -> None:
        self.assertRelativelyEqual(acceptance_probability(VSystemParams(1.0, 0, 0.01)), 0.01**2, 1e-4)

    def test_degenerate_is_zero(self) -> None:
        self.assertEqual(acceptance_probability(VSystemParams(1.0, 0, 0)), 0)


class TestComplementaryPort(TestCase):

    def test_ports_sum_to_natural_decay(self) -> None:
        params = VSystemParams(1.0, 0.2, 0.3)
        acceptance = acceptance_probability(params)
        t = np.linspace(0, 10, 51)
        total = acceptance*pointer_pdf(t, params) + (1 - acceptance)*complementary_pdf(t, params)
        self.assertArraysRelativelyEqual(total, natural_decay(t, 1.0), 1e-12)

    def test_no_photons_at_complementary_port(self) -> None:
        with self.assertRaises(DegenerateDistributionError):
            complementary_pdf(1.0, VSystemParams(1.0, 0, math.pi/2))


class TestDoubling(TestCase):

    def test_doubles_mean(self) -> None:
        gamma, delta = 1.0, 0.1
        epsilon = doubling_epsilon(gamma, delta)
        self.assertGreater(epsilon, 0)
        self.assertLess(epsilon, math.pi/2)
        self.assertAlmostEqual(mean_arrival_time(VSystemParams(gamma, delta, epsilon)), 2/gamma, places=10)

    def test_zero_splitting(self) -> None:
        with self.assertRaises(ValueError):
            doubling_epsilon(1.0, 0)


class TestQuantumBeats(TestCase):

    def test_zeros(self) -> None:
        params = VSystemParams(1.0, 20.0, 0.3)
        zeros = quantum_beat_zeros(params, 2.0)
        self.assertEqual(len(zeros), int((20*2 + 0.3)//math.pi))
        self.assertAlmostEqual(zeros[0], (math.pi - 0.3)/20)
        self.assertTrue(np.all(np.diff(zeros) > 0))
        self.assertListsAlmostEqual(pointer_pdf(zeros, params), [0]*len(zeros), places=12)

    def test_requires_splitting(self) -> None:
        with self.assertRaises(ValueError):
            quantum_beat_zeros(VSystemParams(1.0, 0, 0.3), 1.0)
