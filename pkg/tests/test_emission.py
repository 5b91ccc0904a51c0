from weakbeam.emission import *
from weakbeam.events import EventStream, Tag
from weakbeam.exceptions import DegenerateDistributionError, UnorderedEventsError
from weakbeam.histogram import histogram
from weakbeam.pointer import bin_probabilities, mean_arrival_time, arrival_variance, survival
from weakbeam.types import PulseShape, VSystemParams

from my_unittest import TestCase

from dataclasses import replace
from scipy.stats import kstest
from typing import Any, Dict, List, Optional

import math
import numpy as np


gamma = 1/26e-9
delta = 2*math.pi*600e3
ideal_detector = DetectorConfig(52e-9, 0.02, 1e-10, enabled=False)
real_detector = DetectorConfig(52e-9, 0.02, 1e-10)


def make_config(**kwargs: Any) -> SimConfig:
    values: Dict[str, Any] = dict(
        physics=VSystemParams(gamma, delta, 0.2, PulseShape.square(4.2e-9)),
        n_shots=200000,
        rep_period=1e-6,
        detect_prob=0.5,
        background_fraction=0.12,
        rng_seed=7,
        detector=ideal_detector,
        block_shots=50000,
    )
    values.update(kwargs)
    return SimConfig(**values)


class RecordingGenerator:
    """Generator recording the sizes of the proposal batches"""

    def __init__(self, seed: int, max_calls: Optional[int]=None) -> None:
        self.rng = np.random.default_rng(seed)
        self.sizes: List[int] = []
        self.max_calls = max_calls

    def exponential(self, scale: float, size: int) -> np.ndarray:
        if self.max_calls is not None and len(self.sizes) >= self.max_calls:
            raise StopIteration
        self.sizes.append(size)
        return self.rng.exponential(scale, size)

    def random(self, size: int) -> np.ndarray:
        return self.rng.random(size)

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        return self.rng.uniform(low, high, size)


class TestSampling(TestCase):

    def test_mean(self) -> None:
        params = VSystemParams(1.0, 0.05, 0.3)
        samples = sample_arrivals(params, np.random.default_rng(1), 200000)
        self.assertEqual(len(samples), 200000)
        self.assertWithinSE(
            np.mean(samples),
            mean_arrival_time(params),
            math.sqrt(arrival_variance(params)/len(samples)),
            4
        )

    def test_distribution(self) -> None:
        params = VSystemParams(1.0, 0.5, 0.2)
        samples = sample_arrivals(params, np.random.default_rng(2), 20000)
        result = kstest(samples, lambda t: 1 - survival(t, params))
        self.assertGreater(result.pvalue, 1e-3)

    def test_square_pulse_adds_offset(self) -> None:
        params = VSystemParams(1.0, 0.05, 0.3, PulseShape.square(0.4))
        samples = sample_arrivals(params, np.random.default_rng(3), 200000)
        se = math.sqrt((arrival_variance(params) + 0.4**2/12)/len(samples))
        self.assertWithinSE(np.mean(samples), mean_arrival_time(params) + 0.2, se, 4)
        self.assertGreaterEqual(np.min(samples), 0)

    def test_single(self) -> None:
        self.assertIsInstance(sample_arrival(VSystemParams(1.0, 0.05, 0.3), np.random.default_rng(4)), float)

    def test_degenerate(self) -> None:
        with self.assertRaises(DegenerateDistributionError):
            sample_arrivals(VSystemParams(1.0, 0, 0), np.random.default_rng(5), 10)

    def test_batches_capped(self) -> None:
        rng = RecordingGenerator(9)
        samples = sample_arrivals(VSystemParams(1.0, 0, 0.01), rng, 20, max_batch=4096)  # type: ignore
        self.assertEqual(len(samples), 20)
        self.assertGreater(len(rng.sizes), 1)
        self.assertLessEqual(max(rng.sizes), 4096)

    def test_tiny_acceptance(self) -> None:
        # Acceptance of 1e-10 would otherwise ask for 1e10 proposals at once
        rng = RecordingGenerator(10, max_calls=1)
        with self.assertRaises(StopIteration):
            sample_arrivals(VSystemParams(1.0, 0, 1e-5), rng, 1)  # type: ignore
        self.assertListEqual(rng.sizes, [1 << 20])
        with self.assertRaises(ValueError):
            sample_arrivals(VSystemParams(1.0, 0, 0.3), np.random.default_rng(11), 1, max_batch=0)

    def test_background(self) -> None:
        samples = sample_backgrounds(2.0, PulseShape.delta(), np.random.default_rng(6), 100000)
        self.assertWithinSE(np.mean(samples), 0.5, 0.5/math.sqrt(len(samples)), 4)
        self.assertIsInstance(sample_background(2.0, PulseShape.delta(), np.random.default_rng(7)), float)
        with self.assertRaises(ValueError):
            sample_backgrounds(0, PulseShape.delta(), np.random.default_rng(8), 1)


class TestBranchingBackground(TestCase):

    def test_rubidium(self) -> None:
        self.assertAlmostEqual(branching_background_fraction(), 1/13)

    def test_invalid(self) -> None:
        with self.assertRaises(ValueError):
            branching_background_fraction(0)


class TestDetectorConfig(TestCase):

    def test_dead_ticks(self) -> None:
        self.assertEqual(real_detector.dead_ticks, 520)

    def test_validation(self) -> None:
        with self.assertRaises(ValueError):
            DetectorConfig(-1e-9, 0.02, 1e-10)
        with self.assertRaises(ValueError):
            DetectorConfig(52e-9, 0.2, 1e-10)
        with self.assertRaises(ValueError):
            DetectorConfig(52e-9, 0.02, 0)


class TestSimConfig(TestCase):

    def test_validation(self) -> None:
        with self.assertRaises(ValueError):
            make_config(n_shots=0)
        with self.assertRaises(ValueError):
            make_config(rep_period=400e-9)
        with self.assertRaises(ValueError):
            make_config(rep_period=1e-6 + 0.5e-10)
        with self.assertRaises(ValueError):
            make_config(detect_prob=0)
        with self.assertRaises(ValueError):
            make_config(background_fraction=0.5)
        with self.assertRaises(ValueError):
            make_config(rng_seed=-1)
        with self.assertRaises(ValueError):
            make_config(n_jobs=0)

    def test_rep_period_ticks(self) -> None:
        self.assertEqual(make_config().rep_period_ticks, 10000)

    def test_background_probability_is_angle_independent(self) -> None:
        config = make_config()
        other = replace(config, physics=replace(config.physics, epsilon=1.0))
        self.assertAlmostEqual(config.background_probability(), other.background_probability())
        self.assertGreater(other.signal_probability(), config.signal_probability())


class TestApplyDetector(TestCase):

    def make_stream(self, t_abs_ticks: List[int]) -> EventStream:
        return EventStream.from_abs_ticks(
            1e-10, 10000, 10, np.array(t_abs_ticks), np.zeros(len(t_abs_ticks), dtype=np.uint8)
        )

    def test_dead_time(self) -> None:
        detector = DetectorConfig(52e-9, 0, 1e-10)
        events = apply_detector(self.make_stream([0, 300, 1000, 1519]), detector, np.random.default_rng(0))
        self.assertListEqual(list(events.t_abs_ticks), [0, 1000])

    def test_disabled(self) -> None:
        stream = self.make_stream([0, 300, 1000])
        self.assertEqual(apply_detector(stream, ideal_detector, np.random.default_rng(0)), stream)

    def test_unordered(self) -> None:
        with self.assertRaises(UnorderedEventsError):
            apply_detector(self.make_stream([300, 0]), real_detector, np.random.default_rng(0))

    def test_afterpulses_follow_dead_time(self) -> None:
        detector = DetectorConfig(52e-9, 0.1, 1e-10)
        rng = np.random.default_rng(1)
        t_abs = np.sort(rng.choice(10*10000, 3000, replace=False))
        events = apply_detector(self.make_stream(list(t_abs)), detector, rng)
        gaps = np.diff(events.t_abs_ticks)
        afterpulses = np.flatnonzero(events.tags == Tag.AFTERPULSE.value)
        self.assertGreater(len(afterpulses), 0)
        self.assertNotIn(0, afterpulses)
        self.assertTrue(np.all(gaps[afterpulses - 1] == detector.dead_ticks))
        self.assertTrue(np.all(gaps >= detector.dead_ticks))
        self.assertLess(events.t_abs_ticks[-1], 10*10000)


class TestRunSimulation(TestCase):

    def test_deterministic(self) -> None:
        config = make_config(n_shots=50000, detector=real_detector)
        self.assertEqual(run_simulation(config), run_simulation(config))
        self.assertNotEqual(run_simulation(config), run_simulation(replace(config, rng_seed=8)))

    def test_independent_of_workers(self) -> None:
        config = make_config(n_shots=20000, block_shots=5000, detector=real_detector)
        self.assertEqual(run_simulation(config), run_simulation(replace(config, n_jobs=2)))

    def test_ideal_detector(self) -> None:
        events = run_simulation(make_config())
        self.assertTrue(events.is_ordered())
        self.assertEqual(events.count_tag(Tag.AFTERPULSE), 0)
        self.assertEqual(len(events), events.count_tag(Tag.SIGNAL) + events.count_tag(Tag.BACKGROUND))
        self.assertLess(np.max(events.t_rel_ticks), 10000)
        # At most one photon per shot reaches the detector
        self.assertEqual(len(np.unique(events.shot_index)), len(events))

    def test_signal_rate(self) -> None:
        config = make_config()
        events = run_simulation(config)
        p = config.signal_probability()
        expected = config.n_shots*p
        self.assertWithinSE(events.count_tag(Tag.SIGNAL), expected, math.sqrt(expected*(1 - p)), 4)

    def test_real_detector(self) -> None:
        events = run_simulation(make_config(detector=real_detector))
        self.assertTrue(events.is_ordered())
        self.assertTrue(np.all(np.diff(events.t_abs_ticks) >= real_detector.dead_ticks))
        self.assertGreater(events.count_tag(Tag.AFTERPULSE), 0)

    def test_background_fraction_at_reference(self) -> None:
        config = make_config(
            physics=VSystemParams(gamma, delta, 0, PulseShape.square(4.2e-9)),
            detect_prob=1,
        )
        events = run_simulation(config)
        n_background = events.count_tag(Tag.BACKGROUND)
        n = n_background + events.count_tag(Tag.SIGNAL)
        self.assertWithinSE(n_background/n, 0.12, math.sqrt(0.12*0.88/n), 3)

    def test_degenerate(self) -> None:
        config = make_config(physics=VSystemParams(gamma, 0, 0))
        with self.assertRaises(DegenerateDistributionError):
            run_simulation(config)

    def test_probabilities_exceeding_one(self) -> None:
        config = make_config(
            physics=VSystemParams(gamma, gamma, math.pi/4),
            detect_prob=1,
            background_fraction=0.49,
        )
        with self.assertRaises(ValueError):
            run_simulation(config)


class TestQuantumBeats(TestCase):

    # Large splitting: the postselected ports beat with period π/Δ ≈ 4.1 ns
    beating = VSystemParams(gamma, 20*gamma, 0, PulseShape.delta())

    def simulate(self, epsilon: float, seed: int) -> EventStream:
        return run_simulation(make_config(
            physics=replace(self.beating, epsilon=epsilon),
            n_shots=800000,
            background_fraction=0,
            rng_seed=seed,
        ))

    def test_zeros(self) -> None:
        events = self.simulate(0, 12)
        period = math.pi/self.beating.delta
        t = (events.t_rel_ticks + 0.5)*events.bin_width
        counts, _ = np.histogram(np.mod(t, period)/period, bins=40, range=(0, 1))
        # The zeros at kπ/Δ fall on the boundary of the first and last phase bins
        self.assertIn(int(np.argmin(counts)), (0, 39))
        self.assertLess(counts[0], 0.05*counts[20])
        self.assertLess(counts[39], 0.05*counts[20])

    def test_ports_sum_to_natural_decay(self) -> None:
        hist = histogram(self.simulate(0, 13), 1e-10, 1e-6) + histogram(self.simulate(math.pi/2, 14), 1e-10, 1e-6)
        mask = hist.window_mask((0, 130e-9))
        natural = bin_probabilities(hist.edges, VSystemParams(gamma, 0, math.pi/2))[mask]
        counts = hist.counts[mask]
        expected = natural*np.sum(counts)/np.sum(natural)
        chi2 = np.sum((counts - expected)**2/expected)/(len(counts) - 1)
        self.assertGreater(chi2, 0.8)
        self.assertLess(chi2, 1.2)
