from weakbeam.exceptions import CoarseGridWarning
from weakbeam.spectrum import *
from weakbeam.types import VSystemParams

from my_unittest import TestCase

import math
import numpy as np
import warnings


class TestLorentzian(TestCase):

    def test_half_width(self) -> None:
        gamma = 3.0
        intensity = np.abs(lorentzian_amplitude(np.array([0, gamma/2, -gamma/2]), gamma))**2
        self.assertListsAlmostEqual(intensity, [1, 0.5, 0.5])


class TestDetuningGrid(TestCase):

    def test_default(self) -> None:
        grid = detuning_grid(2.0)
        self.assertEqual(len(grid), 2001)
        self.assertAlmostEqual(grid[0], -40)
        self.assertAlmostEqual(grid[-1], 40)
        self.assertAlmostEqual(grid[1] - grid[0], 0.04)
        self.assertEqual(grid[1000], 0)


class TestSpectralAmplitude(TestCase):

    def test_natural_line(self) -> None:
        # Both components at zero detuning add up for the crossed analyser
        grid = detuning_grid(1.0)
        spectrum = spectral_amplitude(VSystemParams(1.0, 0, math.pi/2), grid)
        self.assertArraysRelativelyEqual(
            spectrum.intensity, 4*np.abs(lorentzian_amplitude(grid, 1.0))**2, 1e-12
        )

    def test_lines_at_splitting(self) -> None:
        grid = detuning_grid(1.0, half_width=40)
        spectrum = spectral_amplitude(VSystemParams(1.0, 10.0, math.pi/2), grid)
        peaks = grid[np.argsort(spectrum.intensity)[-2:]]
        self.assertListsAlmostEqual(sorted(peaks), [-10, 10], delta=0.05)

    def test_compliant_grid_does_not_warn(self) -> None:
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            spectral_amplitude(VSystemParams(1.0, 0.1, 0.2), detuning_grid(1.0))

    def test_coarse_grid_warns(self) -> None:
        with self.assertWarns(CoarseGridWarning):
            spectral_amplitude(VSystemParams(1.0, 0.1, 0.2), detuning_grid(1.0, half_width=10))
        with self.assertWarns(CoarseGridWarning):
            spectral_amplitude(VSystemParams(1.0, 0.1, 0.2), detuning_grid(1.0, points_per_gamma=20))

    def test_validation(self) -> None:
        with self.assertRaises(ValueError):
            SpectralAmplitude(np.array([0.0, 1.0]), np.array([1.0]))
        with self.assertRaises(ValueError):
            SpectralAmplitude(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        with self.assertRaises(ValueError):
            SpectralAmplitude(np.array([0.0, 1.0]), np.array([1.0, np.nan]))


class TestTimeAmplitude(TestCase):

    def test_single_lorentzian(self) -> None:
        gamma = 1.0
        grid = detuning_grid(gamma, half_width=2000)
        spectrum = SpectralAmplitude(grid, lorentzian_amplitude(grid, gamma))
        t, amplitude = time_amplitude(spectrum, 10/gamma)
        self.assertLessEqual(t[-1], 10/gamma)
        mask = t > 0.5/gamma
        self.assertArraysRelativelyEqual(
            amplitude[mask], gamma/2*np.exp(-gamma*t[mask]/2), 0, abs_tol=1e-5*gamma/2
        )

    def test_non_uniform_grid(self) -> None:
        grid = np.concatenate([np.linspace(-10, 0, 11), np.linspace(0.5, 10, 11)])
        spectrum = SpectralAmplitude(grid, lorentzian_amplitude(grid, 1.0))
        with self.assertRaises(ValueError):
            time_amplitude(spectrum, 1.0)

    def test_grid_not_enclosing_zero(self) -> None:
        grid = np.linspace(1, 100, 1000)
        spectrum = SpectralAmplitude(grid, lorentzian_amplitude(grid, 1.0))
        with self.assertRaises(ValueError):
            time_amplitude(spectrum, 1.0)

    def test_times_not_resolved(self) -> None:
        grid = detuning_grid(1.0)
        spectrum = SpectralAmplitude(grid, lorentzian_amplitude(grid, 1.0))
        with self.assertRaises(ValueError):
            time_amplitude(spectrum, 1000.0)


class TestFourierDuality(TestCase):

    def test_random_parameters(self) -> None:
        rng = np.random.default_rng(8)
        for _ in range(20):
            params = VSystemParams(1.0, rng.uniform(0.01, 2), rng.uniform(0.1, math.pi/2))
            with self.subTest(params=params):
                self.assertLess(fourier_duality_error(params), 1e-6)

    def test_scale_invariance(self) -> None:
        params = VSystemParams(1/26e-9, 2*math.pi*600e3, 0.2)
        self.assertLess(fourier_duality_error(params), 1e-6)

    def test_coarse_grid_is_inaccurate(self) -> None:
        params = VSystemParams(1.0, 0.3, 0.5)
        with self.assertWarns(CoarseGridWarning):
            error = fourier_duality_error(params, detuning_grid(1.0, half_width=5, points_per_gamma=10))
        self.assertGreater(error, 1e-6)
