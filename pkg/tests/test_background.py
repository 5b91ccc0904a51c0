from weakbeam.background import *
from weakbeam.exceptions import FitError, ReferenceStabilityError
from weakbeam.histogram import TimeHistogram
from weakbeam.pointer import bin_probabilities
from weakbeam.types import PulseShape, VSystemParams

from my_unittest import TestCase

import math
import numpy as np


bin_width = 1e-10
edges = np.arange(5201)*bin_width
params = VSystemParams(1/26e-9, 2*math.pi*600e3, 0.2, PulseShape.square(4.2e-9))
exp_profile = bin_probabilities(edges, VSystemParams(params.gamma, 0, math.pi/2, params.pulse))
coherent_profile = bin_probabilities(edges, VSystemParams(params.gamma, params.delta, 0, params.pulse))


def reference(background: float, coherent: float, n_shots: int=1000000) -> TimeHistogram:
    return TimeHistogram(bin_width, background*exp_profile + coherent*coherent_profile, n_shots)


class TestFitReference(TestCase):

    def test_mixture(self) -> None:
        fit = fit_reference(reference(1e4, 5e4), params)
        self.assertRelativelyEqual(fit.A, 1e4, 1e-4)
        self.assertRelativelyEqual(fit.B, 5e4, 1e-4)
        self.assertAlmostEqual(fit.background_fraction, 1/6, places=5)
        self.assertRelativelyEqual(fit.background_per_shot, 1e-2, 1e-4)
        self.assertGreater(fit.A_se, 0)
        self.assertGreater(fit.B_se, 0)
        self.assertArraysRelativelyEqual(
            fit.exp_component + fit.coherent_component, reference(1e4, 5e4).counts, 0, abs_tol=1e-2
        )

    def test_pure_exponential(self) -> None:
        fit = fit_reference(reference(1e5, 0), params)
        self.assertRelativelyEqual(fit.A, 1e5, 1e-4)
        self.assertLess(fit.B, 1e-3*fit.A)
        self.assertGreaterEqual(fit.B, 0)

    def test_ignores_epsilon(self) -> None:
        first = fit_reference(reference(1e4, 5e4), params)
        second = fit_reference(reference(1e4, 5e4), VSystemParams(params.gamma, params.delta, 1.0, params.pulse))
        self.assertAlmostEqual(first.A, second.A)

    def test_window(self) -> None:
        fit = fit_reference(reference(1e4, 5e4), params, (10e-9, 400e-9))
        self.assertRelativelyEqual(fit.A, 1e4, 1e-4)
        self.assertEqual(len(fit.exp_profile), 5200)

    def test_not_separable(self) -> None:
        with self.assertRaises(FitError):
            fit_reference(reference(1e4, 0), VSystemParams(params.gamma, 0, 0.2))

    def test_empty_window(self) -> None:
        with self.assertRaises(FitError):
            fit_reference(reference(1e4, 5e4), params, (600e-9, 700e-9))


class TestSubtractBackground(TestCase):

    def setUp(self) -> None:
        self.signal = 3e5*bin_probabilities(edges, params)
        self.before = fit_reference(reference(1e4, 5e4), params)
        self.after = fit_reference(reference(1e4, 5e4), params)

    def test_removes_background(self) -> None:
        data = TimeHistogram(bin_width, self.signal + 2e4*exp_profile, 2000000)
        subtracted = subtract_background(data, self.before, self.after)
        self.assertArraysRelativelyEqual(subtracted.counts, self.signal, 0, abs_tol=1e-3)
        self.assertEqual(subtracted.n_shots, 2000000)
        self.assertTrue(np.all(subtracted.variances >= data.variances))

    def test_zero_background(self) -> None:
        before = fit_reference(reference(0, 5e4), params)
        after = fit_reference(reference(0, 5e4), params)
        data = TimeHistogram(bin_width, self.signal, 1000000)
        subtracted = subtract_background(data, before, after)
        self.assertArraysRelativelyEqual(subtracted.counts, data.counts, 0, abs_tol=1e-3)

    def test_clipped_at_zero(self) -> None:
        data = TimeHistogram(bin_width, np.zeros(5200), 1000000)
        self.assertEqual(subtract_background(data, self.before, self.after).total(), 0)

    def test_unstable_references(self) -> None:
        before = fit_reference(reference(1e6, 5e6), params)
        after = fit_reference(reference(1.1e6, 5e6), params)
        data = TimeHistogram(bin_width, self.signal, 1000000)
        with self.assertRaises(ReferenceStabilityError):
            subtract_background(data, before, after)
        subtract_background(data, before, after, tolerance=0.2)

    def test_sparse_references_within_errors(self) -> None:
        # A few dozen background counts: 30% apart but within their errors
        before = fit_reference(reference(30, 200), params)
        after = fit_reference(reference(40, 200), params)
        self.assertGreater(abs(before.A - after.A), 0.05*(before.A + after.A)/2)
        data = TimeHistogram(bin_width, self.signal, 1000000)
        subtracted = subtract_background(data, before, after)
        self.assertLess(subtracted.total(), data.total())

    def test_binning_mismatch(self) -> None:
        data = TimeHistogram(bin_width, self.signal[:2600], 1000000)
        with self.assertRaises(ValueError):
            subtract_background(data, self.before, self.after)
